#include "lmcf/curvature_oracle.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace lmcf::oracle {

namespace {

double patch_step(const ImmersedPatch& patch, const Vec& u, double override_h) {
  if (override_h > 0.0) return override_h;
  if (patch.fd_step > 0.0) return patch.fd_step;
  return 1e-2 * (1.0 + 0.1 * norm(u));
}

Vec unit_dir(std::size_t dim, std::size_t a) {
  Vec e(dim, 0.0);
  e[a] = 1.0;
  return e;
}

// Hessian entry d^2 F / du_a du_b with 4th-order stencils.
Vec hessian_entry(const std::function<Vec(const Vec&)>& f, const Vec& u,
                  std::size_t a, std::size_t b, double h) {
  const Vec ea = unit_dir(u.size(), a), eb = unit_dir(u.size(), b);
  if (a == b) return fd_second_derivative(f, u, ea, h);
  // Differentiate the directional derivative for 4th-order cross terms.
  auto da = [&](const Vec& q) { return fd_directional_derivative(f, q, ea, h); };
  return fd_directional_derivative(std::function<Vec(const Vec&)>(da), u, eb, h);
}

struct PatchJet {
  std::vector<Vec> tangents;            // T_a
  std::vector<std::vector<Vec>> hess;   // S_ab
  Vec point;
};

PatchJet patch_jet(const ImmersedPatch& patch, const Vec& u, double h) {
  const std::size_t m = u.size();
  PatchJet jet;
  jet.point = patch.parametrization(u);
  jet.tangents.resize(m);
  for (std::size_t a = 0; a < m; ++a)
    jet.tangents[a] =
        fd_directional_derivative(patch.parametrization, u, unit_dir(m, a), h);
  jet.hess.assign(m, std::vector<Vec>(m));
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b <= a; ++b) {
      jet.hess[a][b] = hessian_entry(patch.parametrization, u, a, b, h);
      jet.hess[b][a] = jet.hess[a][b];
    }
  return jet;
}

void check_immersion(const std::vector<Vec>& tangents) {
  const std::size_t m = tangents.size(), nd = tangents[0].size();
  Eigen::MatrixXd J(nd, m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t i = 0; i < nd; ++i) J(i, a) = tangents[a][i];
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
  if (svd.singularValues().minCoeff() < 1e-8)
    throw DegenerateFrameError("patch is not an immersion at this parameter point");
}

// g-orthogonal projection of v off the span of the tangents.
Vec normal_part(const AmbientModel& ambient, const Vec& p,
                const std::vector<Vec>& tangents, const Vec& v) {
  const int m = static_cast<int>(tangents.size());
  Eigen::MatrixXd G(m, m);
  Eigen::VectorXd rhs(m);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b <= a; ++b)
      G(a, b) = G(b, a) = ambient.metric_at(p, tangents[a], tangents[b]);
    rhs(a) = ambient.metric_at(p, tangents[a], v);
  }
  const Eigen::VectorXd c = G.ldlt().solve(rhs);
  Vec out(v);
  for (int a = 0; a < m; ++a) axpy(out, -c(a), tangents[a]);
  return out;
}

Eigen::MatrixXd induced_metric(const AmbientModel& ambient, const Vec& p,
                               const std::vector<Vec>& tangents) {
  const int m = static_cast<int>(tangents.size());
  Eigen::MatrixXd G(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b <= a; ++b)
      G(a, b) = G(b, a) = ambient.metric_at(p, tangents[a], tangents[b]);
  return G;
}

// Christoffel symbols of the sampled ambient metric at p: Gamma[k](m,n).
std::vector<Eigen::MatrixXd> christoffels(const AmbientModel& ambient, const Vec& p,
                                          double hg) {
  const int n = ambient.point_dim;
  auto metric_matrix = [&](const Vec& q) {
    Eigen::MatrixXd g(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j)
        g(i, j) = g(j, i) = ambient.metric_at(q, unit_dir(n, i), unit_dir(n, j));
    return g;
  };
  std::vector<Eigen::MatrixXd> dg(n);
  for (int m = 0; m < n; ++m) {
    Vec p1(p), p2(p), m1(p), m2(p);
    p1[m] += hg;
    p2[m] += 2 * hg;
    m1[m] -= hg;
    m2[m] -= 2 * hg;
    dg[m] =
        (-metric_matrix(p2) + 8.0 * metric_matrix(p1) - 8.0 * metric_matrix(m1) +
         metric_matrix(m2)) /
        (12.0 * hg);
  }
  const Eigen::MatrixXd ginv = metric_matrix(p).inverse();
  std::vector<Eigen::MatrixXd> gamma(n, Eigen::MatrixXd::Zero(n, n));
  for (int k = 0; k < n; ++k)
    for (int m = 0; m < n; ++m)
      for (int q = 0; q < n; ++q) {
        double s = 0.0;
        for (int l = 0; l < n; ++l)
          s += ginv(k, l) * (dg[m](q, l) + dg[q](m, l) - dg[l](m, q));
        gamma[k](m, q) = 0.5 * s;
      }
  return gamma;
}

Vec covariant_hessian_entry(const Vec& s_ab, const Vec& ta, const Vec& tb,
                            const std::vector<Eigen::MatrixXd>& gamma) {
  Vec out(s_ab);
  const int n = static_cast<int>(out.size());
  for (int k = 0; k < n; ++k) {
    double corr = 0.0;
    for (int m = 0; m < n; ++m)
      for (int q = 0; q < n; ++q) corr += gamma[k](m, q) * ta[m] * tb[q];
    out[k] += corr;
  }
  return out;
}

Vec trace_mean_curvature(const AmbientModel& ambient, const PatchJet& jet,
                         const std::vector<Eigen::MatrixXd>* gamma) {
  check_immersion(jet.tangents);
  const int m = static_cast<int>(jet.tangents.size());
  const Eigen::MatrixXd G = induced_metric(ambient, jet.point, jet.tangents);
  const Eigen::MatrixXd Ginv = G.inverse();
  Vec v(jet.point.size(), 0.0);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      Vec entry = jet.hess[a][b];
      if (gamma)
        entry = covariant_hessian_entry(entry, jet.tangents[a], jet.tangents[b],
                                        *gamma);
      axpy(v, Ginv(a, b), entry);
    }
  return normal_part(ambient, jet.point, jet.tangents, v);
}

double fundamental_form_norm(const AmbientModel& ambient, const PatchJet& jet,
                             const std::vector<Eigen::MatrixXd>* gamma) {
  check_immersion(jet.tangents);
  const int m = static_cast<int>(jet.tangents.size());
  const Eigen::MatrixXd G = induced_metric(ambient, jet.point, jet.tangents);
  const Eigen::MatrixXd Ginv = G.inverse();
  std::vector<std::vector<Vec>> II(m, std::vector<Vec>(m));
  for (int a = 0; a < m; ++a)
    for (int b = 0; b <= a; ++b) {
      Vec entry = jet.hess[a][b];
      if (gamma)
        entry = covariant_hessian_entry(entry, jet.tangents[a], jet.tangents[b],
                                        *gamma);
      II[a][b] = II[b][a] = normal_part(ambient, jet.point, jet.tangents, entry);
    }
  double norm2 = 0.0;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int c = 0; c < m; ++c)
        for (int d = 0; d < m; ++d)
          norm2 += Ginv(a, c) * Ginv(b, d) *
                   ambient.metric_at(jet.point, II[a][b], II[c][d]);
  return std::sqrt(std::max(0.0, norm2));
}

Vec richardson_combine(const Vec& coarse, const Vec& fine) {
  Vec out(fine.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = (16.0 * fine[i] - coarse[i]) / 15.0;
  return out;
}

}  // namespace

std::vector<Vec> tangent_frame(const ImmersedPatch& patch, const Vec& u, double h) {
  const double step = patch_step(patch, u, h);
  std::vector<Vec> tangents(u.size());
  for (std::size_t a = 0; a < u.size(); ++a)
    tangents[a] = fd_directional_derivative(patch.parametrization, u,
                                            unit_dir(u.size(), a), step);
  check_immersion(tangents);
  return tangents;
}

Vec mean_curvature_flat(const ImmersedPatch& patch, const Vec& u,
                        const MeanCurvatureOptions& opts) {
  const double h = patch_step(patch, u, opts.h);
  const Vec coarse = trace_mean_curvature(patch.ambient, patch_jet(patch, u, h), nullptr);
  if (!opts.richardson) return coarse;
  const Vec fine =
      trace_mean_curvature(patch.ambient, patch_jet(patch, u, 0.5 * h), nullptr);
  return richardson_combine(coarse, fine);
}

Vec mean_curvature_chart(const ImmersedPatch& patch, const Vec& u,
                         const MeanCurvatureOptions& opts) {
  const double h = patch_step(patch, u, opts.h);
  const PatchJet jet = patch_jet(patch, u, h);
  const std::vector<Eigen::MatrixXd> gamma =
      christoffels(patch.ambient, jet.point, 5e-3);
  return trace_mean_curvature(patch.ambient, jet, &gamma);
}

double second_fundamental_norm_flat(const ImmersedPatch& patch, const Vec& u,
                                    const MeanCurvatureOptions& opts) {
  const double h = patch_step(patch, u, opts.h);
  return fundamental_form_norm(patch.ambient, patch_jet(patch, u, h), nullptr);
}

double second_fundamental_norm_chart(const ImmersedPatch& patch, const Vec& u,
                                     const MeanCurvatureOptions& opts) {
  const double h = patch_step(patch, u, opts.h);
  const PatchJet jet = patch_jet(patch, u, h);
  const std::vector<Eigen::MatrixXd> gamma =
      christoffels(patch.ambient, jet.point, 5e-3);
  return fundamental_form_norm(patch.ambient, jet, &gamma);
}

double lagrangian_angle(const ImmersedPatch& patch, const Vec& u) {
  const Vec p = patch.parametrization(u);
  const std::vector<Vec> tangents = tangent_frame(patch, u);
  auto inner = [&](const Vec& a, const Vec& b) {
    return patch.ambient.metric_at(p, a, b);
  };
  const std::vector<Vec> frame = gram_orthonormalize(tangents, inner);
  const Cplx omega = patch.ambient.hol_volume_at(p, frame);
  return std::arg(omega);
}

double angle_distance(double a, double b) {
  double d = std::fmod(a - b, 2.0 * std::numbers::pi);
  if (d > std::numbers::pi) d -= 2.0 * std::numbers::pi;
  if (d <= -std::numbers::pi) d += 2.0 * std::numbers::pi;
  return std::abs(d);
}

double volume_normalization_residual(const ImmersedPatch& patch, const Vec& u) {
  const Vec p = patch.parametrization(u);
  const std::vector<Vec> tangents = tangent_frame(patch, u);
  auto inner = [&](const Vec& a, const Vec& b) {
    return patch.ambient.metric_at(p, a, b);
  };
  const std::vector<Vec> frame = gram_orthonormalize(tangents, inner);
  return check_calabi_yau_normalization(patch.ambient, p, frame);
}

SolitonResidual soliton_residual(const ImmersedPatch& patch, const SolitonKind& kind,
                                 int grid_per_dim, const MeanCurvatureOptions& opts) {
  const std::size_t m = patch.domain.size();
  SolitonResidual res{0.0, 0.0, 0.0, {}};

  std::vector<int> idx(m, 0);
  const int total = static_cast<int>(std::pow(grid_per_dim, m));
  for (int cell = 0; cell < total; ++cell) {
    int rest = cell;
    Vec u(m);
    for (std::size_t a = 0; a < m; ++a) {
      idx[a] = rest % grid_per_dim;
      rest /= grid_per_dim;
      const double frac = (idx[a] + 0.5) / grid_per_dim;
      u[a] = patch.domain[a][0] + frac * (patch.domain[a][1] - patch.domain[a][0]);
    }
    const Vec p = patch.parametrization(u);
    const std::vector<Vec> tangents = tangent_frame(patch, u);
    const Vec H = mean_curvature_flat(patch, u, opts);

    Vec target;
    if (kind.type == SolitonKind::Type::shrinker)
      target = kind.alpha_c * p;
    else
      target = kind.direction;
    const Vec cmp = normal_part(patch.ambient, p, tangents, target);

    const Vec diff = H - cmp;
    const double abs_err = norm(diff);
    const double rel = abs_err / std::max(norm(H), 1e-12);
    res.max_relative = std::max(res.max_relative, rel);
    res.max_absolute = std::max(res.max_absolute, abs_err);
    res.max_mean_curvature = std::max(res.max_mean_curvature, norm(H));
    res.reports.push_back(CurvatureReport{p, H, cmp, rel});
  }
  return res;
}

ImmersedPatch shrinker_surface_patch(const flat::ShrinkerModel& model, double c) {
  if (model.dim() != 2)
    throw DimensionError("shrinker_surface_patch: built for two-weight models");
  const double l1 = model.weights[0], l2 = model.weights[1];
  const bool same_sign = (l1 > 0) == (l2 > 0);

  ImmersedPatch patch;
  patch.ambient = flat::shrinker_ambient(model);
  if (same_sign) {
    const double sign = (l1 > 0) ? 1.0 : -1.0;
    if (sign * c <= 0.0)
      throw EmptyLevelError("shrinker_surface_patch: empty level set");
    const double r1 = std::sqrt(2.0 * c / l1), r2 = std::sqrt(2.0 * c / l2);
    patch.parametrization = [r1, r2, l1, l2](const Vec& u) {
      const double s = u[0], t = u[1];
      CVec z(2);
      z[0] = r1 * std::cos(s) * std::polar(1.0, l1 * t);
      z[1] = r2 * std::sin(s) * std::polar(1.0, l2 * t);
      return to_real(z);
    };
    // One quadrant of the level curve, away from the coordinate axes where
    // the trigonometric parametrization is still an immersion of the orbit.
    patch.domain = {{0.25, 1.3}, {0.0, 2.0}};
  } else {
    // Mixed pair: hyperbolic level curve; positive-weight branch.
    const double lp = (l1 > 0) ? l1 : l2;
    const double ln = (l1 > 0) ? -l2 : -l1;
    const bool first_positive = (l1 > 0);
    if (c == 0.0)
      throw OutsideDomainError("shrinker_surface_patch: cone level not supported");
    const double rp = std::sqrt(2.0 * std::abs(c) / lp);
    const double rn = std::sqrt(2.0 * std::abs(c) / ln);
    const bool normal_branch = (c > 0.0);
    patch.parametrization = [=](const Vec& u) {
      const double s = u[0], t = u[1];
      double xp, xn;
      if (normal_branch) {
        xp = rp * std::cosh(s);
        xn = rn * std::sinh(s);
      } else {
        xp = rp * std::sinh(s);
        xn = rn * std::cosh(s);
      }
      CVec z(2);
      const double x1 = first_positive ? xp : xn;
      const double x2 = first_positive ? xn : xp;
      z[0] = x1 * std::polar(1.0, l1 * t);
      z[1] = x2 * std::polar(1.0, l2 * t);
      return to_real(z);
    };
    patch.domain = {{0.2, 1.2}, {0.0, 2.0}};
  }
  patch.fd_step = 1e-2;
  return patch;
}

ImmersedPatch translator_graph_patch(const flat::TranslatorModel& model, double c) {
  const flat::TranslatorModel m = model;
  ImmersedPatch patch;
  patch.ambient = flat::translator_ambient(model);
  patch.parametrization = [m, c](const Vec& u) {
    // u = (x_1..x_d, fiber)
    const int d = m.dim();
    CVec z(m.ambient_dim());
    double q = 0.0;
    const double t = u[d];
    for (int i = 0; i < d; ++i) {
      q += m.weights[i] * u[i] * u[i];
      z[i] = u[i] * std::polar(1.0, m.weights[i] * t);
    }
    z[d] = Cplx(c - 0.5 * q, t);
    return to_real(z);
  };
  patch.domain.assign(model.dim(), {-1.0, 1.0});
  patch.domain.push_back({0.0, 2.0});
  patch.fd_step = 1e-2;
  return patch;
}

ImmersedPatch cylinder_patch(double radius) {
  ImmersedPatch patch;
  flat::TranslatorModel dummy({0.0, 0.0});  // flat C^3 ambient structure
  patch.ambient = flat::translator_ambient(dummy);
  patch.parametrization = [radius](const Vec& u) {
    CVec z(3);
    z[0] = radius * std::cos(u[0]);
    z[1] = radius * std::sin(u[0]);
    z[2] = u[1];
    return to_real(z);
  };
  patch.domain = {{0.0, 2.0 * std::numbers::pi}, {-1.0, 1.0}};
  patch.fd_step = 1e-2;
  return patch;
}

ImmersedPatch sphere_patch(double radius) {
  ImmersedPatch patch;
  flat::TranslatorModel dummy({0.0, 0.0});
  patch.ambient = flat::translator_ambient(dummy);
  patch.parametrization = [radius](const Vec& u) {
    CVec z(3);
    z[0] = radius * std::sin(u[0]) * std::cos(u[1]);
    z[1] = radius * std::sin(u[0]) * std::sin(u[1]);
    z[2] = radius * std::cos(u[0]);
    return to_real(z);
  };
  patch.domain = {{0.6, 2.5}, {0.0, 2.0 * std::numbers::pi}};
  patch.fd_step = 1e-2;
  return patch;
}

ImmersedPatch affine_plane_patch(const Vec& origin, const std::vector<Vec>& span,
                                 int complex_dim) {
  ImmersedPatch patch;
  flat::TranslatorModel dummy(std::vector<double>(complex_dim - 1, 0.0));
  patch.ambient = flat::translator_ambient(dummy);
  const Vec o = origin;
  const std::vector<Vec> sp = span;
  patch.parametrization = [o, sp](const Vec& u) {
    Vec p(o);
    for (std::size_t a = 0; a < sp.size(); ++a) axpy(p, u[a], sp[a]);
    return p;
  };
  patch.domain.assign(span.size(), {-1.0, 1.0});
  patch.fd_step = 1e-2;
  return patch;
}

}  // namespace lmcf::oracle
