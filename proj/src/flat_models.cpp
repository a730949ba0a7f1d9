#include "lmcf/flat_models.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lmcf::flat {

namespace {

// det of the complex d x d matrix whose columns are the tangent vectors in
// complex coordinates; this is the standard holomorphic volume form of C^d.
Cplx flat_volume(const std::vector<Vec>& frame) {
  const std::size_t d = frame.size();
  Eigen::MatrixXcd m(d, d);
  for (std::size_t j = 0; j < d; ++j) {
    const CVec col = to_complex(frame[j]);
    if (col.size() != d)
      throw DimensionError("hol_volume: frame vector has wrong length");
    for (std::size_t i = 0; i < d; ++i) m(i, j) = col[i];
  }
  return m.determinant();
}

Vec mul_i(const Vec& v) {
  Vec r(v.size());
  for (std::size_t k = 0; k + 1 < v.size(); k += 2) {
    r[k] = -v[k + 1];
    r[k + 1] = v[k];
  }
  return r;
}

AmbientModel flat_ambient(int complex_dim,
                          std::function<Vec(const Vec&, double)> generator,
                          std::function<Vec(const Vec&)> moment, double a_h) {
  AmbientModel m;
  m.complex_dim = complex_dim;
  m.point_dim = 2 * complex_dim;
  m.dim_h = 1;
  m.metric_at = [](const Vec&, const Vec& u, const Vec& v) { return dot(u, v); };
  m.cplx_I1_at = [](const Vec&, const Vec& v) { return mul_i(v); };
  m.omega1_at = [](const Vec&, const Vec& u, const Vec& v) {
    return dot(mul_i(u), v);
  };
  m.hol_volume_at = [](const Vec&, const std::vector<Vec>& frame) {
    return flat_volume(frame);
  };
  m.action_generator_at = std::move(generator);
  m.moment_at = std::move(moment);
  m.a_h = {a_h};
  return m;
}

}  // namespace

ShrinkerModel::ShrinkerModel(std::vector<int> w) : weights(std::move(w)) {
  if (weights.empty()) throw DimensionError("ShrinkerModel: needs at least one weight");
  for (int l : weights)
    if (l == 0) throw OutsideDomainError("ShrinkerModel: weights must be nonzero integers");
}

int ShrinkerModel::weight_sum() const {
  return std::accumulate(weights.begin(), weights.end(), 0);
}

TranslatorModel::TranslatorModel(std::vector<double> w) : weights(std::move(w)) {
  if (!all_finite(weights))
    throw NumericalDomainError("TranslatorModel: non-finite weight");
}

double TranslatorModel::weight_sum() const {
  return std::accumulate(weights.begin(), weights.end(), 0.0);
}

LevelValue::LevelValue(double value) : c(value) {
  if (!std::isfinite(c)) throw NumericalDomainError("LevelValue: non-finite");
}

LevelValue shrinker_moment(const ShrinkerModel& model, const ComplexVector& z) {
  if (static_cast<int>(z.size()) != model.dim())
    throw DimensionError("shrinker_moment: dimension mismatch");
  double s = 0.0;
  for (int i = 0; i < model.dim(); ++i)
    s += model.weights[i] * std::norm(z.entries[i]);
  return LevelValue(0.5 * s);
}

LevelValue shrinker_a_h(const ShrinkerModel& model) {
  return LevelValue(static_cast<double>(model.weight_sum()));
}

LevelValue translator_moment(const TranslatorModel& model, const ComplexVector& z) {
  if (static_cast<int>(z.size()) != model.ambient_dim())
    throw DimensionError("translator_moment: dimension mismatch");
  double s = 0.0;
  for (int i = 0; i < model.dim(); ++i)
    s += model.weights[i] * std::norm(z.entries[i]);
  return LevelValue(0.5 * s + z.entries[model.dim()].real());
}

LevelValue translator_a_h(const TranslatorModel& model) {
  return LevelValue(model.weight_sum());
}

Vec shrinker_flow_field(const ShrinkerModel& model, const Vec& x) {
  if (static_cast<int>(x.size()) != model.dim())
    throw DimensionError("shrinker_flow_field: dimension mismatch");
  double q = 0.0;
  for (int i = 0; i < model.dim(); ++i)
    q += model.weights[i] * model.weights[i] * x[i] * x[i];
  if (q <= 0.0)
    throw OutsideDomainError("shrinker_flow_field: origin is outside the Lagrangian");
  const double s = -static_cast<double>(model.weight_sum()) / q;
  Vec chi(x.size());
  for (int i = 0; i < model.dim(); ++i) chi[i] = s * model.weights[i] * x[i];
  return chi;
}

Vec translator_flow_field(const TranslatorModel& model, const Vec& x) {
  if (static_cast<int>(x.size()) != model.ambient_dim())
    throw DimensionError("translator_flow_field: dimension mismatch");
  double q = 1.0;
  for (int i = 0; i < model.dim(); ++i)
    q += model.weights[i] * model.weights[i] * x[i] * x[i];
  const double s = -model.weight_sum() / q;
  Vec chi(x.size());
  for (int i = 0; i < model.dim(); ++i) chi[i] = s * model.weights[i] * x[i];
  chi[model.dim()] = s;
  return chi;
}

double shrinker_alpha_c(const ShrinkerModel& model, const LevelValue& c) {
  if (c.c == 0.0)
    throw OutsideDomainError("shrinker_alpha_c: cone level c = 0 is singular");
  return -static_cast<double>(model.weight_sum()) / (2.0 * c.c);
}

Vec translator_direction(const TranslatorModel& model) {
  Vec u(model.ambient_dim(), 0.0);
  u[model.dim()] = -model.weight_sum();
  return u;
}

std::vector<Vec> level_set_sample(const ShrinkerModel& model, const LevelValue& c,
                                  int count, std::uint64_t seed) {
  const int d = model.dim();
  std::vector<int> pos, neg;
  for (int i = 0; i < d; ++i)
    (model.weights[i] > 0 ? pos : neg).push_back(i);

  const bool definite = pos.empty() || neg.empty();
  if (definite) {
    const double sign = pos.empty() ? -1.0 : 1.0;
    if (sign * c.c <= 0.0)
      throw EmptyLevelError("level_set_sample: empty shrinker level set");
  }

  DetRng rng(seed);
  std::vector<Vec> out;
  out.reserve(count);
  while (static_cast<int>(out.size()) < count) {
    Vec x(d, 0.0);
    if (definite) {
      // Ellipsoid (1/2) sum |l_i| x_i^2 = |c|: scale a sphere direction.
      const Vec u = rng.sphere_point(d);
      double q = 0.0;
      for (int i = 0; i < d; ++i) q += std::abs(model.weights[i]) * u[i] * u[i];
      const double r = std::sqrt(2.0 * std::abs(c.c) / q);
      for (int i = 0; i < d; ++i) x[i] = r * u[i];
    } else {
      // Mixed signature: split the quadric as a difference of two definite
      // pieces and sample each at a random squared radius.
      const double s = std::abs(rng.normal()) * (std::sqrt(std::abs(2.0 * c.c)) + 1.0);
      double apos = s * s, aneg = s * s;
      (c.c >= 0.0 ? apos : aneg) += 2.0 * std::abs(c.c);
      if (apos <= 0.0 && aneg <= 0.0) continue;
      if (!pos.empty() && apos > 0.0) {
        const Vec u = rng.sphere_point(pos.size());
        double q = 0.0;
        for (std::size_t k = 0; k < pos.size(); ++k)
          q += model.weights[pos[k]] * u[k] * u[k];
        const double r = std::sqrt(apos / q);
        for (std::size_t k = 0; k < pos.size(); ++k) x[pos[k]] = r * u[k];
      }
      if (!neg.empty() && aneg > 0.0) {
        const Vec u = rng.sphere_point(neg.size());
        double q = 0.0;
        for (std::size_t k = 0; k < neg.size(); ++k)
          q += -model.weights[neg[k]] * u[k] * u[k];
        const double r = std::sqrt(aneg / q);
        for (std::size_t k = 0; k < neg.size(); ++k) x[neg[k]] = r * u[k];
      }
    }
    if (norm(x) < 1e-12) continue;  // the origin is excluded from the Lagrangian
    out.push_back(std::move(x));
  }
  return out;
}

std::vector<Vec> level_set_sample(const TranslatorModel& model, const LevelValue& c,
                                  int count, std::uint64_t seed) {
  const int d = model.dim();
  DetRng rng(seed);
  std::vector<Vec> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    Vec x(model.ambient_dim(), 0.0);
    double q = 0.0;
    for (int i = 0; i < d; ++i) {
      x[i] = 1.5 * rng.normal();
      q += model.weights[i] * x[i] * x[i];
    }
    x[d] = c.c - 0.5 * q;  // graph coordinate of the level set
    out.push_back(std::move(x));
  }
  return out;
}

Vec shrinker_generator(const ShrinkerModel& model, const Vec& point) {
  const CVec z = to_complex(point);
  if (static_cast<int>(z.size()) != model.dim())
    throw DimensionError("shrinker_generator: dimension mismatch");
  CVec g(z.size());
  for (int i = 0; i < model.dim(); ++i)
    g[i] = Cplx(0.0, static_cast<double>(model.weights[i])) * z[i];
  return to_real(g);
}

Vec translator_generator(const TranslatorModel& model, const Vec& point) {
  const CVec z = to_complex(point);
  if (static_cast<int>(z.size()) != model.ambient_dim())
    throw DimensionError("translator_generator: dimension mismatch");
  CVec g(z.size());
  for (int i = 0; i < model.dim(); ++i)
    g[i] = Cplx(0.0, model.weights[i]) * z[i];
  g[model.dim()] = Cplx(0.0, 1.0);
  return to_real(g);
}

AmbientModel shrinker_ambient(const ShrinkerModel& model) {
  ShrinkerModel m(model);
  auto gen = [m](const Vec& p, double s) { return s * shrinker_generator(m, p); };
  auto mom = [m](const Vec& p) {
    return Vec{shrinker_moment(m, ComplexVector(to_complex(p))).c};
  };
  return flat_ambient(model.dim(), gen, mom,
                      static_cast<double>(model.weight_sum()));
}

AmbientModel translator_ambient(const TranslatorModel& model) {
  TranslatorModel m(model);
  auto gen = [m](const Vec& p, double s) { return s * translator_generator(m, p); };
  auto mom = [m](const Vec& p) {
    return Vec{translator_moment(m, ComplexVector(to_complex(p))).c};
  };
  return flat_ambient(model.ambient_dim(), gen, mom, model.weight_sum());
}

}  // namespace lmcf::flat
