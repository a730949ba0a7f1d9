#include "lmcf/geometry_core.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

namespace lmcf {

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

Vec operator+(const Vec& a, const Vec& b) {
  Vec r(a);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += b[i];
  return r;
}

Vec operator-(const Vec& a, const Vec& b) {
  Vec r(a);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
  return r;
}

Vec operator*(double s, const Vec& a) {
  Vec r(a);
  for (double& x : r) x *= s;
  return r;
}

Vec& axpy(Vec& y, double s, const Vec& x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += s * x[i];
  return y;
}

bool all_finite(const Vec& a) {
  for (double x : a)
    if (!std::isfinite(x)) return false;
  return true;
}

bool all_finite(const CVec& a) {
  for (const Cplx& x : a)
    if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) return false;
  return true;
}

CVec to_complex(const Vec& re) {
  CVec z(re.size() / 2);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = Cplx(re[2 * i], re[2 * i + 1]);
  return z;
}

Vec to_real(const CVec& z) {
  Vec r(2 * z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    r[2 * i] = z[i].real();
    r[2 * i + 1] = z[i].imag();
  }
  return r;
}

// splitmix64 step; fixed-width arithmetic keeps the stream portable.
std::uint64_t DetRng::next_u64() {
  state_ += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double DetRng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double DetRng::uniform(double a, double b) { return a + (b - a) * uniform(); }

double DetRng::normal() {
  if (have_cached_) {
    have_cached_ = false;
    return cached_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  cached_ = r * std::sin(a);
  have_cached_ = true;
  return r * std::cos(a);
}

int DetRng::uniform_int(int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo + 1);
  return lo + static_cast<int>(next_u64() % span);
}

Vec DetRng::normal_vec(std::size_t n) {
  Vec v(n);
  for (double& x : v) x = normal();
  return v;
}

Vec DetRng::sphere_point(std::size_t n) {
  Vec v = normal_vec(n);
  double r = norm(v);
  while (r < 1e-12) {
    v = normal_vec(n);
    r = norm(v);
  }
  for (double& x : v) x /= r;
  return v;
}

ComplexVector::ComplexVector(CVec e) : entries(std::move(e)) {
  if (!all_finite(entries))
    throw NumericalDomainError("ComplexVector: non-finite entry");
}

QuaternionicPoint::QuaternionicPoint(CVec z_in, CVec w_in)
    : z(std::move(z_in)), w(std::move(w_in)) {
  if (z.size() != w.size())
    throw DimensionError("QuaternionicPoint: z/w length mismatch");
  if (!all_finite(z) || !all_finite(w))
    throw NumericalDomainError("QuaternionicPoint: non-finite entry");
}

double fd_default_step(const Vec& p) { return 1e-4 * (1.0 + norm(p)); }

namespace {

template <typename F, typename V>
V central4(const F& f, const Vec& p, const Vec& v, double h) {
  if (!(h > 0.0)) throw NumericalDomainError("finite difference: step must be positive");
  Vec p1(p), p2(p), m1(p), m2(p);
  axpy(p1, h, v);
  axpy(p2, 2.0 * h, v);
  axpy(m1, -h, v);
  axpy(m2, -2.0 * h, v);
  V f_p2 = f(p2), f_p1 = f(p1), f_m1 = f(m1), f_m2 = f(m2);
  if constexpr (std::is_same_v<V, double>) {
    const double d = (-f_p2 + 8.0 * f_p1 - 8.0 * f_m1 + f_m2) / (12.0 * h);
    if (!std::isfinite(d))
      throw NumericalDomainError("finite difference: non-finite evaluation");
    return d;
  } else {
    V d(f_p1.size());
    for (std::size_t i = 0; i < d.size(); ++i)
      d[i] = (-f_p2[i] + 8.0 * f_p1[i] - 8.0 * f_m1[i] + f_m2[i]) / (12.0 * h);
    if (!all_finite(d))
      throw NumericalDomainError("finite difference: non-finite evaluation");
    return d;
  }
}

}  // namespace

double fd_directional_derivative(const std::function<double(const Vec&)>& f,
                                 const Vec& p, const Vec& v, double h) {
  return central4<decltype(f), double>(f, p, v, h);
}

Vec fd_directional_derivative(const std::function<Vec(const Vec&)>& f,
                              const Vec& p, const Vec& v, double h) {
  return central4<decltype(f), Vec>(f, p, v, h);
}

double fd_directional_derivative(const std::function<double(double)>& f,
                                 double p, double v, double h) {
  auto g = [&f](const Vec& x) { return f(x[0]); };
  return fd_directional_derivative(std::function<double(const Vec&)>(g), Vec{p},
                                   Vec{v}, h);
}

double fd_derivative_richardson(const std::function<double(const Vec&)>& f,
                                const Vec& p, const Vec& v, double h) {
  const double dh = fd_directional_derivative(f, p, v, h);
  const double dh2 = fd_directional_derivative(f, p, v, 0.5 * h);
  return (16.0 * dh2 - dh) / 15.0;
}

Vec fd_derivative_richardson(const std::function<Vec(const Vec&)>& f,
                             const Vec& p, const Vec& v, double h) {
  const Vec dh = fd_directional_derivative(f, p, v, h);
  const Vec dh2 = fd_directional_derivative(f, p, v, 0.5 * h);
  Vec r(dh.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = (16.0 * dh2[i] - dh[i]) / 15.0;
  return r;
}

Vec fd_second_derivative(const std::function<Vec(const Vec&)>& f,
                         const Vec& p, const Vec& v, double h) {
  if (!(h > 0.0)) throw NumericalDomainError("finite difference: step must be positive");
  Vec p1(p), p2(p), m1(p), m2(p);
  axpy(p1, h, v);
  axpy(p2, 2.0 * h, v);
  axpy(m1, -h, v);
  axpy(m2, -2.0 * h, v);
  const Vec f0 = f(p), fp1 = f(p1), fp2 = f(p2), fm1 = f(m1), fm2 = f(m2);
  Vec d(f0.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    d[i] = (-fp2[i] + 16.0 * fp1[i] - 30.0 * f0[i] + 16.0 * fm1[i] - fm2[i]) /
           (12.0 * h * h);
  if (!all_finite(d))
    throw NumericalDomainError("finite difference: non-finite evaluation");
  return d;
}

Vec fd_mixed_second_derivative(const std::function<Vec(const Vec&)>& f,
                               const Vec& p, const Vec& u, const Vec& v, double h) {
  auto dir = [&](double su, double sv) {
    Vec q(p);
    axpy(q, su * h, u);
    axpy(q, sv * h, v);
    return f(q);
  };
  const Vec fpp = dir(1, 1), fpm = dir(1, -1), fmp = dir(-1, 1), fmm = dir(-1, -1);
  Vec d(fpp.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    d[i] = (fpp[i] - fpm[i] - fmp[i] + fmm[i]) / (4.0 * h * h);
  if (!all_finite(d))
    throw NumericalDomainError("finite difference: non-finite evaluation");
  return d;
}

std::vector<Vec> gram_orthonormalize(
    const std::vector<Vec>& vectors,
    const std::function<double(const Vec&, const Vec&)>& inner, double rank_tol) {
  const std::size_t k = vectors.size();
  if (k == 0) return {};

  Eigen::MatrixXd gram(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double g = inner(vectors[i], vectors[j]);
      gram(i, j) = g;
      gram(j, i) = g;
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  const double lmax = es.eigenvalues().maxCoeff();
  const double lmin = es.eigenvalues().minCoeff();
  if (!(lmax > 0.0) || lmin < rank_tol * lmax)
    throw DegenerateFrameError("gram_orthonormalize: input frame is rank-deficient");

  std::vector<Vec> out;
  out.reserve(k);
  for (const Vec& v0 : vectors) {
    Vec v(v0);
    for (int pass = 0; pass < 2; ++pass)  // re-orthogonalize once for stability
      for (const Vec& e : out) axpy(v, -inner(v, e), e);
    const double n2 = inner(v, v);
    if (!(n2 > 0.0))
      throw DegenerateFrameError("gram_orthonormalize: vanishing norm after projection");
    const double s = 1.0 / std::sqrt(n2);
    for (double& x : v) x *= s;
    out.push_back(std::move(v));
  }
  return out;
}

double check_calabi_yau_normalization(const AmbientModel& model, const Vec& p,
                                      const std::vector<Vec>& frame) {
  const Cplx omega = model.hol_volume_at(p, frame);
  return std::abs(std::abs(omega) - 1.0);
}

}  // namespace lmcf
