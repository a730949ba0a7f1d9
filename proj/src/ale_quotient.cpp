#include "lmcf/ale_quotient.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

namespace lmcf::ale {

namespace {

constexpr double kLevelTol = 1e-10;
constexpr double kOnStratumTol = 1e-9;
constexpr double kAmbiguousTol = 1e-6;

double sq(double x) { return x * x; }

}  // namespace

AleParams::AleParams(int n_in, std::vector<double> alpha_in, double h0_in)
    : n(n_in), alpha(std::move(alpha_in)), h0(h0_in) {
  if (n < 1) throw DimensionError("AleParams: n must be >= 1");
  if (static_cast<int>(alpha.size()) != n)
    throw DimensionError("AleParams: alpha must have n entries");
  for (double a : alpha)
    if (!(a > 0.0)) throw OutsideDomainError("AleParams: alpha entries must be positive");
  h.resize(n + 1);
  h[0] = h0;
  for (int i = 1; i <= n; ++i) h[i] = h[i - 1] + alpha[i - 1];
}

AleParams AleParams::uniform(int n_in, double spacing, double h0_in) {
  return AleParams(n_in, std::vector<double>(n_in, spacing), h0_in);
}

HyperkahlerMoment mu_k(int n, const QuaternionicPoint& p) {
  if (static_cast<int>(p.size()) != n + 1)
    throw DimensionError("mu_k: representative must have n+1 entries");
  HyperkahlerMoment m;
  m.real_part.resize(n);
  m.cplx_part.resize(n);
  for (int i = 1; i <= n; ++i) {
    m.real_part[i - 1] = 0.5 * (std::norm(p.z[i]) - std::norm(p.w[i]) -
                                std::norm(p.z[i - 1]) + std::norm(p.w[i - 1]));
    m.cplx_part[i - 1] =
        Cplx(0.0, -1.0) * (p.z[i] * p.w[i] - p.z[i - 1] * p.w[i - 1]);
  }
  return m;
}

RegularValueReport is_regular_value(const AleParams& params,
                                    const HyperkahlerMoment& target) {
  const int n = params.n;
  if (static_cast<int>(target.real_part.size()) != n ||
      static_cast<int>(target.cplx_part.size()) != n)
    throw DimensionError("is_regular_value: target has wrong size");
  double scale = 1.0;
  for (int k = 0; k < n; ++k)
    scale = std::max({scale, std::abs(target.real_part[k]),
                      std::abs(target.cplx_part[k])});
  const double tol = 1e-14 * scale;

  RegularValueReport report;
  report.regular = true;
  for (int i = 0; i < n + 1; ++i) {
    for (int j = i + 1; j < n + 1; ++j) {
      double s1 = 0.0;
      Cplx s2(0.0, 0.0);
      for (int k = i + 1; k <= j; ++k) {
        s1 += target.real_part[k - 1];
        s2 += target.cplx_part[k - 1];
      }
      if (std::abs(s1) < tol && std::abs(s2.real()) < tol &&
          std::abs(s2.imag()) < tol) {
        report.regular = false;
        report.violated_walls.push_back({i, j});
      }
    }
  }
  return report;
}

double MomentPolygon::x_min(double y) const {
  double s = 0.0;
  for (int i = 0; i <= n; ++i)
    if (y + h[i] > 0.0) s += y + h[i];
  return s;
}

bool MomentPolygon::contains(double x, double y, double tol) const {
  return x >= x_min(y) - tol;
}

double MomentPolygon::distance_to_vertex(int k, double x, double y) const {
  return std::hypot(x - vertices[k][0], y - vertices[k][1]);
}

double MomentPolygon::distance_to_edge(int k, double x, double y) const {
  const PolygonEdge& e = edges[k];
  // Anchor and direction (unit) of the edge line, oriented toward larger y.
  double ax, ay, dx, dy;
  if (e.k == n + 1) {
    ax = e.upper[0];
    ay = e.upper[1];
    dx = 0.0;
    dy = 1.0;
  } else {
    ax = e.lower[0];
    ay = e.lower[1];
    const double len = std::hypot(static_cast<double>(n + 1 - e.k), 1.0);
    dx = (n + 1 - e.k) / len;
    dy = 1.0 / len;
  }
  double t = (x - ax) * dx + (y - ay) * dy;
  double t_lo = 0.0, t_hi = std::numeric_limits<double>::infinity();
  if (e.k == n + 1) {
    t_lo = -std::numeric_limits<double>::infinity();
    t_hi = 0.0;
  } else if (!e.unbounded_up) {
    t_hi = (e.upper[0] - ax) * dx + (e.upper[1] - ay) * dy;
  }
  t = std::clamp(t, t_lo, t_hi);
  return std::hypot(x - (ax + t * dx), y - (ay + t * dy));
}

MomentPolygon polygon(const AleParams& params) {
  MomentPolygon poly;
  poly.n = params.n;
  poly.h = params.h;
  const int n = params.n;
  poly.vertices.resize(n + 1);
  for (int k = 0; k <= n; ++k) {
    double xk = 0.0;
    for (int i = k + 1; i <= n; ++i) xk += params.h[i] - params.h[k];
    poly.vertices[k] = {xk, -params.h[k]};
  }
  poly.edges.resize(n + 2);
  for (int k = 0; k <= n + 1; ++k) {
    PolygonEdge e;
    e.k = k;
    e.slope_num = 1;
    e.slope_den = n + 1 - k;  // dy/dx; vertical for k = n+1
    e.unbounded_up = (k == 0);
    e.unbounded_down = (k == n + 1);
    e.upper = (k == 0) ? poly.vertices[0] : poly.vertices[k - 1];
    e.lower = (k == n + 1) ? poly.vertices[n] : poly.vertices[k];
    if (k >= 1 && k <= n) {
      e.upper = poly.vertices[k - 1];
      e.lower = poly.vertices[k];
    }
    poly.edges[k] = e;
  }
  return poly;
}

namespace {

// Radial profile of the level solve at height y: strictly increasing in d.
double level_profile(const std::vector<double>& h, double y, double d) {
  double s = 0.0;
  for (double hi : h) {
    const double Y = y + hi;
    s += 0.5 * (std::sqrt(Y * Y + d * d) + Y);
  }
  return s;
}

// |z_i|^2 and |w_i|^2 at height y with product magnitude d, in a form that
// avoids cancellation for large |y + h_i|.
void level_moduli(double Y, double d, double& zz, double& ww) {
  const double r = std::sqrt(Y * Y + d * d);
  if (Y >= 0.0) {
    zz = r + Y;
    ww = (zz > 0.0) ? (d * d) / zz : 0.0;
  } else {
    ww = r - Y;
    zz = (ww > 0.0) ? (d * d) / ww : 0.0;
  }
}

}  // namespace

QuotientPoint make_point(const AleParams& params, CVec z, CVec w) {
  QuaternionicPoint rep(std::move(z), std::move(w));
  if (static_cast<int>(rep.size()) != params.n + 1)
    throw DimensionError("make_point: representative must have n+1 entries");

  const int m = params.n + 1;
  double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
  Cplx dmean(0, 0);
  for (int i = 0; i < m; ++i) {
    const double yi = 0.5 * (std::norm(rep.z[i]) - std::norm(rep.w[i])) - params.h[i];
    ymin = std::min(ymin, yi);
    ymax = std::max(ymax, yi);
    dmean += rep.z[i] * rep.w[i];
  }
  dmean /= static_cast<double>(m);
  if (ymax - ymin > 2.0 * kLevelTol)
    throw CorruptPointError("make_point: moment residual exceeds tolerance");
  for (int i = 0; i < m; ++i)
    if (std::abs(rep.z[i] * rep.w[i] - dmean) > kLevelTol)
      throw CorruptPointError("make_point: product residual exceeds tolerance");

  double scale = 0.0;
  for (int i = 0; i < m; ++i)
    scale = std::max({scale, std::abs(rep.z[i]), std::abs(rep.w[i])});
  bool real = true;
  for (int i = 0; i < m; ++i)
    if (std::abs(rep.z[i].imag()) > 1e-12 * std::max(1.0, scale) ||
        std::abs(rep.w[i].imag()) > 1e-12 * std::max(1.0, scale))
      real = false;
  return QuotientPoint{std::move(rep), real ? Gauge::real_slice : Gauge::generic};
}

std::array<double, 2> mu_g(const AleParams& params, const QuotientPoint& p) {
  const int m = params.n + 1;
  if (static_cast<int>(p.rep.size()) != m)
    throw DimensionError("mu_g: representative must have n+1 entries");
  double x = 0.0;
  double ysum = 0.0, ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
  for (int i = 0; i < m; ++i) {
    x += 0.5 * std::norm(p.rep.z[i]);
    const double yi =
        0.5 * (std::norm(p.rep.z[i]) - std::norm(p.rep.w[i])) - params.h[i];
    ysum += yi;
    ymin = std::min(ymin, yi);
    ymax = std::max(ymax, yi);
  }
  if (ymax - ymin > 2.0 * kLevelTol)
    throw CorruptPointError("mu_g: inconsistent per-index moment readings");
  return {x, ysum / m};
}

std::array<int, 2> sheet_signs(Sheet s) {
  switch (s) {
    case Sheet::PP: return {+1, +1};
    case Sheet::MP: return {-1, +1};
    case Sheet::PM: return {+1, -1};
    case Sheet::MM: return {-1, -1};
  }
  return {+1, +1};
}

Sheet sheet_times(Sheet s, const std::array<int, 2>& g) {
  const std::array<int, 2> a = sheet_signs(s);
  const int g0 = a[0] * g[0], g1 = a[1] * g[1];
  if (g0 > 0) return g1 > 0 ? Sheet::PP : Sheet::PM;
  return g1 > 0 ? Sheet::MP : Sheet::MM;
}

QuotientPoint solve_level(const AleParams& params, double x, double y, Sheet sheet) {
  const MomentPolygon poly = polygon(params);
  if (!poly.contains(x, y, 1e-12 * std::max(1.0, std::abs(x))))
    throw OutsidePolygonError("solve_level: (x, y) lies outside the moment polygon");

  // Bracket then Newton on the strictly increasing radial profile.
  const double x0 = poly.x_min(y);
  const double tol = 1e-13 * std::max(1.0, std::abs(x));
  double d = 0.0;
  if (x > x0 + tol) {
    double lo = 0.0, hi = std::max(1.0, 2.0 * std::sqrt(x));
    int guard = 0;
    while (level_profile(params.h, y, hi) < x) {
      hi *= 2.0;
      if (++guard > 200)
        throw NumericalDomainError("solve_level: failed to bracket the radial solve");
    }
    d = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
      const double f = level_profile(params.h, y, d) - x;
      if (std::abs(f) < tol) break;
      if (f > 0.0)
        hi = d;
      else
        lo = d;
      double deriv = 0.0;
      for (double hi_k : params.h)
        deriv += 0.5 * d / std::sqrt(sq(y + hi_k) + d * d);
      double next = (deriv > 0.0) ? d - f / deriv : 0.5 * (lo + hi);
      if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
      d = next;
      if (hi - lo < 1e-16 * std::max(1.0, hi)) break;
    }
    if (std::abs(level_profile(params.h, y, d) - x) > 1e4 * tol)
      throw NumericalDomainError("solve_level: radial solve did not converge");
  }

  const int m = params.n + 1;
  CVec z(m), w(m);
  const std::array<int, 2> g = sheet_signs(sheet);
  for (int i = 0; i < m; ++i) {
    double zz, ww;
    level_moduli(y + params.h[i], d, zz, ww);
    double zi = std::sqrt(std::max(0.0, zz));
    double wi = std::sqrt(std::max(0.0, ww));
    // Residual torus element applied to the all-positive base representative.
    if (i == 0) {
      zi *= g[0] * g[1];
      wi *= g[1];
    } else {
      zi *= g[0];
    }
    z[i] = Cplx(zi, 0.0);
    w[i] = Cplx(wi, 0.0);
  }
  QuotientPoint p = make_point(params, std::move(z), std::move(w));
  return p;
}

QuotientPoint vertex_point(const AleParams& params, int k) {
  if (k < 0 || k > params.n) throw DimensionError("vertex_point: index out of range");
  const MomentPolygon poly = polygon(params);
  return solve_level(params, poly.vertices[k][0], poly.vertices[k][1], Sheet::PP);
}

IsotropyStratum isotropy(const AleParams& params, const QuotientPoint& p) {
  const MomentPolygon poly = polygon(params);
  const std::array<double, 2> xy = mu_g(params, p);
  const int n = params.n;

  double best = std::numeric_limits<double>::infinity();
  int best_vertex = -1, best_edge = -1;
  for (int k = 0; k <= n; ++k) {
    const double dk = poly.distance_to_vertex(k, xy[0], xy[1]);
    if (dk < best) {
      best = dk;
      best_vertex = k;
      best_edge = -1;
    }
  }
  for (int k = 0; k <= n + 1; ++k) {
    const double dk = poly.distance_to_edge(k, xy[0], xy[1]);
    if (dk < best - 1e-15) {
      best = dk;
      best_edge = k;
      best_vertex = -1;
    }
  }

  if (best > kAmbiguousTol) {
    return IsotropyStratum{StratumKind::interior, -1, 0, 0, false};
  }
  if (best > kOnStratumTol) {
    std::ostringstream msg;
    msg << "isotropy: point is " << best
        << " away from the nearest boundary stratum, inside the ambiguity band";
    throw BoundaryAmbiguityError(msg.str(), best);
  }

  // Cross-check the zero pattern of the representative. Entry magnitudes
  // scale like the square root of the polygon distance, so the pattern
  // threshold is much looser than the stratum tolerance.
  const double pat = 1e-3;
  if (best_vertex >= 0) {
    const int k0 = best_vertex;
    for (int i = 0; i < params.n + 1; ++i) {
      const bool z_zero = (i <= k0), w_zero = (i >= k0);
      if (z_zero != (std::abs(p.rep.z[i]) < pat) ||
          w_zero != (std::abs(p.rep.w[i]) < pat))
        throw CorruptPointError(
            "isotropy: representative pattern inconsistent with a vertex stratum");
    }
    return IsotropyStratum{StratumKind::vertex, k0, 0, 0, true};
  }
  const int k0 = best_edge;
  for (int i = 0; i < params.n + 1; ++i) {
    const bool z_zero = (i < k0), w_zero = (i >= k0);
    if (z_zero != (std::abs(p.rep.z[i]) < pat) ||
        w_zero != (std::abs(p.rep.w[i]) < pat))
      throw CorruptPointError(
          "isotropy: representative pattern inconsistent with an edge stratum");
  }
  return IsotropyStratum{StratumKind::edge, k0, 1, -(n + 1 - k0), false};
}

std::array<Cplx, 2> local_chart(const AleParams& params, int k0,
                                const QuotientPoint& p) {
  const int n = params.n;
  if (k0 < 0 || k0 > n) throw DimensionError("local_chart: index out of range");
  double scale = 0.0;
  for (int i = 0; i <= n; ++i)
    scale = std::max({scale, std::abs(p.rep.z[i]), std::abs(p.rep.w[i])});
  const double tol = 1e-13 * std::max(1.0, scale);
  for (int i = 0; i < k0; ++i)
    if (std::abs(p.rep.w[i]) <= tol)
      throw OutsideChartError("local_chart: w entry vanishes below the chart vertex");
  for (int j = k0 + 1; j <= n; ++j)
    if (std::abs(p.rep.z[j]) <= tol)
      throw OutsideChartError("local_chart: z entry vanishes above the chart vertex");

  Cplx u1 = p.rep.z[k0], u2 = p.rep.w[k0];
  for (int i = 0; i < k0; ++i) {
    const double c = std::sqrt(2.0 * (params.h[k0] - params.h[i]));
    u1 *= c / p.rep.w[i];
    u2 *= p.rep.w[i] / c;
  }
  for (int j = k0 + 1; j <= n; ++j) {
    const double c = std::sqrt(2.0 * (params.h[j] - params.h[k0]));
    u1 *= p.rep.z[j] / c;
    u2 *= c / p.rep.z[j];
  }
  return {u1, u2};
}

QuotientPoint chart_inverse(const AleParams& params, int k0, Cplx u1, Cplx u2) {
  const int n = params.n;
  if (k0 < 0 || k0 > n) throw DimensionError("chart_inverse: index out of range");
  const int m = n + 1;

  // Reference representative with the correct holomorphic data; generically
  // off the moment level until the positive gauge is solved below.
  CVec zh(m), wh(m);
  const Cplx prod = u1 * u2;
  for (int i = 0; i < k0; ++i) {
    const double c = std::sqrt(2.0 * (params.h[k0] - params.h[i]));
    zh[i] = prod / c;
    wh[i] = Cplx(c, 0.0);
  }
  zh[k0] = u1;
  wh[k0] = u2;
  for (int j = k0 + 1; j <= n; ++j) {
    const double c = std::sqrt(2.0 * (params.h[j] - params.h[k0]));
    zh[j] = Cplx(c, 0.0);
    wh[j] = prod / c;
  }

  std::vector<double> A(m), B(m);
  for (int i = 0; i < m; ++i) {
    A[i] = std::norm(zh[i]);
    B[i] = std::norm(wh[i]);
  }

  // Per-index gauge exponent solving the height equation at level y; the
  // positive root of the induced quadratic in e^{2s}.
  auto exponent = [&](int i, double y) -> double {
    const double Y = y + params.h[i];
    double q;
    if (A[i] > 0.0 && B[i] > 0.0) {
      const double r = std::sqrt(Y * Y + A[i] * B[i]);
      q = (Y >= 0.0) ? (Y + r) / A[i] : B[i] / (r - Y);
    } else if (A[i] > 0.0) {
      q = 2.0 * Y / A[i];  // requires Y > 0
    } else {
      q = B[i] / (-2.0 * Y);  // requires Y < 0
    }
    return 0.5 * std::log(q);
  };

  std::vector<double> s(m, 0.0);
  const bool pinned = (A[k0] == 0.0 && B[k0] == 0.0);
  double y;
  if (pinned) {
    y = -params.h[k0];
    double sum = 0.0;
    for (int i = 0; i < m; ++i)
      if (i != k0) {
        s[i] = exponent(i, y);
        sum += s[i];
      }
    s[k0] = -sum;
  } else {
    double y_lo = -std::numeric_limits<double>::infinity();
    double y_hi = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      if (A[i] == 0.0) y_hi = std::min(y_hi, -params.h[i]);
      if (B[i] == 0.0) y_lo = std::max(y_lo, -params.h[i]);
    }
    auto trace = [&](double yy) {
      double sum = 0.0;
      for (int i = 0; i < m; ++i) sum += exponent(i, yy);
      return sum;
    };
    // Expand a bracket inside (y_lo, y_hi); trace is strictly increasing.
    double a, b;
    const double span = params.h[n] - params.h[0] + 1.0;
    if (std::isfinite(y_lo) && std::isfinite(y_hi)) {
      a = y_lo;
      b = y_hi;
    } else if (std::isfinite(y_lo)) {
      a = y_lo;
      b = y_lo + span;
      while (trace(b) < 0.0) b += span + std::abs(b);
    } else if (std::isfinite(y_hi)) {
      b = y_hi;
      a = y_hi - span;
      while (trace(a) > 0.0) a -= span + std::abs(a);
    } else {
      a = -span;
      b = span;
      while (trace(a) > 0.0) a -= span + std::abs(a);
      while (trace(b) < 0.0) b += span + std::abs(b);
    }
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (a + b);
      if (!(mid > a && mid < b)) break;
      (trace(mid) >= 0.0 ? b : a) = mid;
    }
    y = 0.5 * (a + b);
    for (int i = 0; i < m; ++i) s[i] = exponent(i, y);
  }

  CVec z(m), w(m);
  for (int i = 0; i < m; ++i) {
    const double e = std::exp(s[i]);
    z[i] = zh[i] * e;
    w[i] = wh[i] / e;
  }
  return make_point(params, std::move(z), std::move(w));
}

Vec chart_lift(const AleParams& params, int k0, const QuotientPoint& at,
               const Vec& chart_tangent) {
  const int n = params.n;
  const int m = n + 1;
  const int dim = 4 * m;
  if (static_cast<int>(chart_tangent.size()) != 4)
    throw DimensionError("chart_lift: chart tangent must have 4 real components");

  // Complex-linear differentials of the two chart coordinates with respect
  // to the entries of the representative, via logarithmic derivatives of the
  // defining products (regular even when the center entries vanish).
  CVec du1_z(m, Cplx(0, 0)), du1_w(m, Cplx(0, 0));
  CVec du2_z(m, Cplx(0, 0)), du2_w(m, Cplx(0, 0));
  Cplx q1(1.0, 0.0), q2(1.0, 0.0);
  for (int i = 0; i < k0; ++i) {
    const double c = std::sqrt(2.0 * (params.h[k0] - params.h[i]));
    q1 *= c / at.rep.w[i];
    q2 *= at.rep.w[i] / c;
  }
  for (int j = k0 + 1; j <= n; ++j) {
    const double c = std::sqrt(2.0 * (params.h[j] - params.h[k0]));
    q1 *= at.rep.z[j] / c;
    q2 *= c / at.rep.z[j];
  }
  du1_z[k0] = q1;
  du2_w[k0] = q2;
  for (int i = 0; i < k0; ++i) {
    du1_w[i] = -at.rep.z[k0] * q1 / at.rep.w[i];
    du2_w[i] = at.rep.w[k0] * q2 / at.rep.w[i];
  }
  for (int j = k0 + 1; j <= n; ++j) {
    du1_z[j] = at.rep.z[k0] * q1 / at.rep.z[j];
    du2_z[j] = -at.rep.w[k0] * q2 / at.rep.z[j];
  }

  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
  int row = 0;

  for (const Vec& r : constraint_jacobian(at.rep)) {
    for (int c = 0; c < dim; ++c) M(row, c) = r[c];
    ++row;
  }
  for (const Vec& r : vertical_frame(at.rep)) {
    for (int c = 0; c < dim; ++c) M(row, c) = r[c];
    ++row;
  }

  // A complex-linear row  sum_j c_j dz_j + d_j dw_j = v  expands into the
  // real and imaginary parts acting on the interleaved coordinates.
  auto add_cplx_rows = [&](const CVec& cz, const CVec& cw, Cplx v) {
    for (int j = 0; j < m; ++j) {
      M(row, 2 * j) += cz[j].real();
      M(row, 2 * j + 1) += -cz[j].imag();
      M(row, 2 * m + 2 * j) += cw[j].real();
      M(row, 2 * m + 2 * j + 1) += -cw[j].imag();
      M(row + 1, 2 * j) += cz[j].imag();
      M(row + 1, 2 * j + 1) += cz[j].real();
      M(row + 1, 2 * m + 2 * j) += cw[j].imag();
      M(row + 1, 2 * m + 2 * j + 1) += cw[j].real();
    }
    rhs(row) = v.real();
    rhs(row + 1) = v.imag();
    row += 2;
  };
  add_cplx_rows(du1_z, du1_w, Cplx(chart_tangent[0], chart_tangent[1]));
  add_cplx_rows(du2_z, du2_w, Cplx(chart_tangent[2], chart_tangent[3]));

  Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  if (!lu.isInvertible())
    throw DegenerateFrameError("chart_lift: lift system is singular");
  const Eigen::VectorXd sol = lu.solve(rhs);
  Vec lift(dim);
  for (int c = 0; c < dim; ++c) lift[c] = sol(c);
  return lift;
}

Vec point_coords(const QuaternionicPoint& p) {
  Vec v(4 * p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    v[2 * i] = p.z[i].real();
    v[2 * i + 1] = p.z[i].imag();
    v[2 * p.size() + 2 * i] = p.w[i].real();
    v[2 * p.size() + 2 * i + 1] = p.w[i].imag();
  }
  return v;
}

QuaternionicPoint coords_point(const Vec& v) {
  const std::size_t m = v.size() / 4;
  CVec z(m), w(m);
  for (std::size_t i = 0; i < m; ++i) {
    z[i] = Cplx(v[2 * i], v[2 * i + 1]);
    w[i] = Cplx(v[2 * m + 2 * i], v[2 * m + 2 * i + 1]);
  }
  return QuaternionicPoint(std::move(z), std::move(w));
}

std::vector<Vec> vertical_frame(const QuaternionicPoint& p) {
  const int m = static_cast<int>(p.size());
  std::vector<Vec> frame;
  frame.reserve(m - 1);
  auto coordinate_generator = [&](int j) {
    CVec dz(m, Cplx(0, 0)), dw(m, Cplx(0, 0));
    dz[j] = Cplx(0, 1) * p.z[j];
    dw[j] = Cplx(0, -1) * p.w[j];
    return point_coords(QuaternionicPoint(std::move(dz), std::move(dw)));
  };
  for (int k = 1; k < m; ++k) {
    Vec g = coordinate_generator(k);
    axpy(g, -1.0, coordinate_generator(k - 1));
    frame.push_back(std::move(g));
  }
  return frame;
}

namespace {

Vec horizontal_project_impl(const QuaternionicPoint& at, const Vec& v,
                            bool* degenerate) {
  const std::vector<Vec> vert = vertical_frame(at);
  const int k = static_cast<int>(vert.size());
  Eigen::MatrixXd gram(k, k);
  Eigen::VectorXd rhs(k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j <= i; ++j) {
      gram(i, j) = gram(j, i) = dot(vert[i], vert[j]);
    }
    rhs(i) = dot(vert[i], v);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  const double lmax = es.eigenvalues().maxCoeff();
  const double lmin = es.eigenvalues().minCoeff();
  if (degenerate) *degenerate = !(lmax > 0.0) || lmin < 1e-12 * lmax;
  if (!(lmax > 0.0) || lmin < 1e-12 * lmax) {
    if (!degenerate)
      throw DegenerateFrameError("horizontal_project: gauge orbit is rank-deficient");
    return v;
  }
  const Eigen::VectorXd c = es.eigenvectors() *
                            (es.eigenvectors().transpose() * rhs).cwiseQuotient(
                                es.eigenvalues());
  Vec out(v);
  for (int i = 0; i < k; ++i) axpy(out, -c(i), vert[i]);
  return out;
}

}  // namespace

Vec horizontal_project(const QuaternionicPoint& at, const Vec& v) {
  return horizontal_project_impl(at, v, nullptr);
}

double horizontal_inner(const QuaternionicPoint& at, const Vec& v1, const Vec& v2) {
  return dot(horizontal_project(at, v1), horizontal_project(at, v2));
}

double quotient_metric_at(const AleParams& params, const QuotientPoint& p,
                          const Vec& v1_lift, const Vec& v2_lift) {
  const std::vector<Vec> jac = constraint_jacobian(p.rep);
  double scale = std::max(1.0, norm(point_coords(p.rep)));
  for (const Vec& row : jac) {
    if (std::abs(dot(row, v1_lift)) > 1e-8 * scale * std::max(1.0, norm(v1_lift)) ||
        std::abs(dot(row, v2_lift)) > 1e-8 * scale * std::max(1.0, norm(v2_lift)))
      throw CorruptPointError("quotient_metric_at: lift is not tangent to the level set");
  }
  (void)params;
  bool degenerate = false;
  const Vec h1 = horizontal_project_impl(p.rep, v1_lift, &degenerate);
  if (degenerate)
    throw CorruptPointError("quotient_metric_at: gauge orbit is rank-deficient");
  const Vec h2 = horizontal_project_impl(p.rep, v2_lift, &degenerate);
  if (degenerate)
    throw CorruptPointError("quotient_metric_at: gauge orbit is rank-deficient");
  return dot(h1, h2);
}

Vec flat_I1(const Vec& v) {
  Vec r(v.size());
  for (std::size_t k = 0; k + 1 < v.size(); k += 2) {
    r[k] = -v[k + 1];
    r[k + 1] = v[k];
  }
  return r;
}

Vec flat_I2(const Vec& v) {
  const QuaternionicPoint p = coords_point(v);
  const std::size_t m = p.size();
  CVec z(m), w(m);
  for (std::size_t i = 0; i < m; ++i) {
    z[i] = -std::conj(p.w[i]);
    w[i] = std::conj(p.z[i]);
  }
  return point_coords(QuaternionicPoint(std::move(z), std::move(w)));
}

double flat_omega1(const Vec& u, const Vec& v) { return dot(flat_I1(u), v); }

Cplx flat_omega_cplx(const Vec& u, const Vec& v) {
  const QuaternionicPoint a = coords_point(u), b = coords_point(v);
  Cplx s(0, 0);
  for (std::size_t i = 0; i < a.size(); ++i)
    s += a.z[i] * b.w[i] - b.z[i] * a.w[i];
  return s;
}

Vec constraint_values(const AleParams& params, const QuaternionicPoint& p) {
  const int n = params.n;
  Vec c(3 * n);
  for (int i = 1; i <= n; ++i) {
    c[i - 1] = 0.5 * (std::norm(p.z[i]) - std::norm(p.w[i]) -
                      std::norm(p.z[i - 1]) + std::norm(p.w[i - 1])) -
               params.alpha[i - 1];
    const Cplx d = p.z[i] * p.w[i] - p.z[i - 1] * p.w[i - 1];
    c[n + 2 * (i - 1)] = d.real();
    c[n + 2 * (i - 1) + 1] = d.imag();
  }
  return c;
}

std::vector<Vec> constraint_jacobian(const QuaternionicPoint& p) {
  const int m = static_cast<int>(p.size());
  const int n = m - 1;
  const int dim = 4 * m;
  std::vector<Vec> rows(3 * n, Vec(dim, 0.0));
  auto zx = [&](int i) { return 2 * i; };
  auto zy = [&](int i) { return 2 * i + 1; };
  auto wx = [&](int i) { return 2 * m + 2 * i; };
  auto wy = [&](int i) { return 2 * m + 2 * i + 1; };
  for (int i = 1; i <= n; ++i) {
    Vec& mr = rows[i - 1];
    for (int idx : {i, i - 1}) {
      const double s = (idx == i) ? 1.0 : -1.0;
      mr[zx(idx)] += s * p.z[idx].real();
      mr[zy(idx)] += s * p.z[idx].imag();
      mr[wx(idx)] -= s * p.w[idx].real();
      mr[wy(idx)] -= s * p.w[idx].imag();
    }
    Vec& re = rows[n + 2 * (i - 1)];
    Vec& im = rows[n + 2 * (i - 1) + 1];
    for (int idx : {i, i - 1}) {
      const double s = (idx == i) ? 1.0 : -1.0;
      re[zx(idx)] += s * p.w[idx].real();
      re[zy(idx)] -= s * p.w[idx].imag();
      re[wx(idx)] += s * p.z[idx].real();
      re[wy(idx)] -= s * p.z[idx].imag();
      im[zx(idx)] += s * p.w[idx].imag();
      im[zy(idx)] += s * p.w[idx].real();
      im[wx(idx)] += s * p.z[idx].imag();
      im[wy(idx)] += s * p.z[idx].real();
    }
  }
  return rows;
}

Vec real_slice_constraints(const AleParams& params, const Vec& state) {
  const int m = static_cast<int>(state.size()) / 2;
  const int n = m - 1;
  Vec c(2 * n);
  for (int i = 1; i <= n; ++i) {
    c[i - 1] = 0.5 * (sq(state[i]) - sq(state[m + i]) - sq(state[i - 1]) +
                      sq(state[m + i - 1])) -
               params.alpha[i - 1];
    c[n + i - 1] =
        state[i] * state[m + i] - state[i - 1] * state[m + i - 1];
  }
  return c;
}

std::vector<Vec> real_slice_jacobian(const Vec& state) {
  const int m = static_cast<int>(state.size()) / 2;
  const int n = m - 1;
  std::vector<Vec> rows(2 * n, Vec(2 * m, 0.0));
  for (int i = 1; i <= n; ++i) {
    Vec& mr = rows[i - 1];
    Vec& pr = rows[n + i - 1];
    for (int idx : {i, i - 1}) {
      const double s = (idx == i) ? 1.0 : -1.0;
      mr[idx] += s * state[idx];
      mr[m + idx] -= s * state[m + idx];
      pr[idx] += s * state[m + idx];
      pr[m + idx] += s * state[idx];
    }
  }
  return rows;
}

QuotientPoint involution_sigma(const QuotientPoint& p) {
  CVec z(p.rep.z), w(p.rep.w);
  for (Cplx& v : z) v = std::conj(v);
  for (Cplx& v : w) v = std::conj(v);
  return QuotientPoint{QuaternionicPoint(std::move(z), std::move(w)), p.gauge};
}

QuotientPoint g_action(const QuotientPoint& p, double theta0, double theta1) {
  const Cplx g0 = std::polar(1.0, theta0), g1 = std::polar(1.0, theta1);
  CVec z(p.rep.z), w(p.rep.w);
  z[0] *= g0 * g1;
  w[0] /= g1;
  for (std::size_t i = 1; i < z.size(); ++i) z[i] *= g0;
  return QuotientPoint{QuaternionicPoint(std::move(z), std::move(w)),
                       Gauge::generic};
}

QuotientPoint canonical_gauge(const QuotientPoint& p) {
  const std::size_t m = p.rep.size();
  double scale = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    scale = std::max({scale, std::abs(p.rep.z[i]), std::abs(p.rep.w[i])});
  const double tol = 1e-8 * std::max(1.0, scale);

  std::vector<double> phi(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (std::abs(p.rep.z[i]) > tol)
      phi[i] = std::arg(p.rep.z[i]);
    else if (std::abs(p.rep.w[i]) > tol)
      phi[i] = -std::arg(p.rep.w[i]);
  }
  const double mean =
      std::accumulate(phi.begin(), phi.end(), 0.0) / static_cast<double>(m);
  CVec z(m), w(m);
  for (std::size_t i = 0; i < m; ++i) {
    const Cplx rot = std::polar(1.0, -(phi[i] - mean));
    z[i] = p.rep.z[i] * rot;
    w[i] = p.rep.w[i] / rot;
  }
  return QuotientPoint{QuaternionicPoint(std::move(z), std::move(w)), p.gauge};
}

double gauge_distance(const QuotientPoint& a, const QuotientPoint& b) {
  const QuotientPoint ca = canonical_gauge(a), cb = canonical_gauge(b);
  const std::size_t m = ca.rep.size();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < m; ++j) {
    const Cplx rot = std::polar(1.0, 2.0 * std::numbers::pi *
                                         static_cast<double>(j) /
                                         static_cast<double>(m));
    double d2 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      d2 += std::norm(ca.rep.z[i] * rot - cb.rep.z[i]);
      d2 += std::norm(ca.rep.w[i] / rot - cb.rep.w[i]);
    }
    best = std::min(best, std::sqrt(d2));
  }
  return best;
}

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
  int count() {
    int c = 0;
    for (int i = 0; i < static_cast<int>(parent.size()); ++i)
      if (find(i) == i) ++c;
    return c;
  }
};

}  // namespace

SurfaceTopology fixed_surface_topology(const AleParams& params) {
  const int n = params.n;
  FixedSurfaceAtlas atlas;
  atlas.sheets = {"++", "-+", "+-", "--"};
  const std::array<Sheet, 4> sheets = {Sheet::PP, Sheet::MP, Sheet::PM, Sheet::MM};

  // The nontrivial real element of the stabilizer of edge k determines who
  // glues to whom across that edge.
  auto edge_element = [&](int k) -> std::array<int, 2> {
    const int par = ((n + 1 - k) % 2 + 2) % 2;  // parity of the p1 exponent
    return {-1, par == 0 ? +1 : -1};
  };

  atlas.gluing.resize(n + 2);
  for (int k = 0; k <= n + 1; ++k) {
    const std::array<int, 2> eps = edge_element(k);
    std::array<std::array<int, 2>, 2> pairs{};
    int idx = 0;
    std::array<bool, 4> used{};
    for (int s = 0; s < 4; ++s) {
      if (used[s]) continue;
      const int t = static_cast<int>(sheet_times(sheets[s], eps));
      used[s] = used[t] = true;
      pairs[idx++] = {s, t};
    }
    atlas.gluing[k] = pairs;
  }

  // Cell structure of the glued surface: four compactified polygon cells.
  // Vertex labels per sheet: the n+1 polygon corners plus the two ideal
  // corners where the unbounded edges meet the arc at infinity.
  const int corners = n + 1;
  const int per_sheet = corners + 2;  // + ideal 'top' (edge 0) and 'bottom' (edge n+1)
  UnionFind uf(4 * per_sheet);
  auto vid = [&](int sheet, int corner) { return sheet * per_sheet + corner; };
  const int top = corners, bottom = corners + 1;

  for (int k = 0; k <= n + 1; ++k) {
    for (const auto& pr : atlas.gluing[k]) {
      const int s = pr[0], t = pr[1];
      // Edge k runs between corner k-1 and corner k (ideal ends for k = 0
      // and k = n+1); gluing identifies matching endpoints.
      if (k == 0) {
        uf.unite(vid(s, top), vid(t, top));
        uf.unite(vid(s, 0), vid(t, 0));
      } else if (k == n + 1) {
        uf.unite(vid(s, n), vid(t, n));
        uf.unite(vid(s, bottom), vid(t, bottom));
      } else {
        uf.unite(vid(s, k - 1), vid(t, k - 1));
        uf.unite(vid(s, k), vid(t, k));
      }
    }
  }

  const int V = uf.count();
  const int E = 2 * (n + 2) + 4;  // glued polygon edges + the four ideal arcs
  const int F = 4;
  const int euler = V - E + F;

  // Boundary circles: the ideal arcs connect top(s) to bottom(s); count the
  // cycles they form under the endpoint identifications.
  UnionFind bf(4 * per_sheet);
  for (int s = 0; s < 4; ++s) bf.unite(vid(s, top), vid(s, bottom));
  for (const auto& pr : atlas.gluing[0]) bf.unite(vid(pr[0], top), vid(pr[1], top));
  for (const auto& pr : atlas.gluing[n + 1])
    bf.unite(vid(pr[0], bottom), vid(pr[1], bottom));
  std::vector<int> roots;
  for (int s = 0; s < 4; ++s) {
    roots.push_back(bf.find(vid(s, top)));
    roots.push_back(bf.find(vid(s, bottom)));
  }
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
  const int holes = static_cast<int>(roots.size());

  const int genus = (2 - holes - euler) / 2;
  return SurfaceTopology{genus, holes, euler, atlas};
}

std::string polygon_to_json(const MomentPolygon& poly) {
  nlohmann::json j;
  j["n"] = poly.n;
  j["h"] = poly.h;
  nlohmann::json verts = nlohmann::json::array();
  for (const auto& v : poly.vertices) verts.push_back({v[0], v[1]});
  j["vertices"] = verts;
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : poly.edges)
    edges.push_back({{"k", e.k}, {"slope", {e.slope_num, e.slope_den}}});
  j["edges"] = edges;
  return j.dump();
}

std::string atlas_to_json(const SurfaceTopology& topo) {
  nlohmann::json j;
  j["sheets"] = topo.atlas.sheets;
  nlohmann::json gluing = nlohmann::json::array();
  for (std::size_t k = 0; k < topo.atlas.gluing.size(); ++k) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& pr : topo.atlas.gluing[k])
      pairs.push_back({topo.atlas.sheets[pr[0]], topo.atlas.sheets[pr[1]]});
    gluing.push_back({{"k", k}, {"pairs", pairs}});
  }
  j["gluing"] = gluing;
  j["genus"] = topo.genus;
  j["holes"] = topo.holes;
  j["euler_characteristic"] = topo.euler_characteristic;
  return j.dump();
}

}  // namespace lmcf::ale
