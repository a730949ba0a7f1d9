#include "lmcf/flow_engine.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <numbers>
#include <numeric>
#include <sstream>
#include <thread>

namespace lmcf::flow {

SubtorusAction::SubtorusAction(int a_in, int b_in) : a(a_in), b(b_in) {
  if (std::gcd(std::abs(a), std::abs(b)) != 1)
    throw OutsideDomainError("SubtorusAction: a and b must be coprime");
}

void SubtorusAction::validate_for(int n) const {
  for (int l = 0; l <= n + 1; ++l)
    if (b == -l * a)
      throw OutsideDomainError(
          "SubtorusAction: b = -l a fixes an entire edge stratum (l = " +
          std::to_string(l) + ")");
}

std::array<int, 2> chart_rotation_weights(int n, const SubtorusAction& action,
                                          int k0) {
  return {action.a * (n + 1 - k0) + action.b, -action.a * (n - k0) - action.b};
}

void IntegratorConfig::validate() const {
  if (!(step > 0.0) || !(projection_tol > 0.0) || max_newton <= 0)
    throw ConfigError("IntegratorConfig: step, tolerance and iterations must be positive");
  if (!(stop_margin > 0.0) || !(stop_margin < 1.0))
    throw ConfigError("IntegratorConfig: stop_margin must lie in (0, 1)");
}

int FlowTrajectory::sample_index_at(double t, double tol) const {
  for (std::size_t i = 0; i < times.size(); ++i)
    if (std::abs(times[i] - t) <= tol) return static_cast<int>(i);
  return -1;
}

double FlowTrajectory::max_drift_residual() const {
  double m = 0.0;
  for (double r : drift_residuals) m = std::max(m, r);
  return m;
}

Vec flow_field_at(const AmbientModel& model, const Vec& p) {
  const Vec gen = model.action_generator_at(p, 1.0);
  const double g2 = model.metric_at(p, gen, gen);
  if (!(g2 > 1e-24))
    throw FixedPointHitError("flow_field_at: action generator vanishes at this point");
  const double alpha = model.a_h[0] / g2;
  return model.cplx_I1_at(p, alpha * gen);
}

Vec ale_generator_lift(const ale::AleParams& params, const SubtorusAction& action,
                       const ale::QuotientPoint& p) {
  const int m = params.n + 1;
  CVec dz(m, Cplx(0, 0)), dw(m, Cplx(0, 0));
  dz[0] = Cplx(0, 1) * static_cast<double>(action.a + action.b) * p.rep.z[0];
  for (int i = 1; i < m; ++i)
    dz[i] = Cplx(0, 1) * static_cast<double>(action.a) * p.rep.z[i];
  dw[0] = Cplx(0, -1) * static_cast<double>(action.b) * p.rep.w[0];
  return ale::point_coords(QuaternionicPoint(std::move(dz), std::move(dw)));
}

namespace {

// Generator and gauge directions on the real slice, expressed through the
// real pattern vectors v with lift = i v.
Vec real_generator_pattern(const SubtorusAction& action, const Vec& state) {
  const int m = static_cast<int>(state.size()) / 2;
  Vec L(2 * m, 0.0);
  L[0] = (action.a + action.b) * state[0];
  for (int i = 1; i < m; ++i) L[i] = action.a * state[i];
  L[m] = -action.b * state[m];
  return L;
}

std::vector<Vec> real_gauge_patterns(const Vec& state) {
  const int m = static_cast<int>(state.size()) / 2;
  std::vector<Vec> out;
  out.reserve(m - 1);
  for (int k = 1; k < m; ++k) {
    Vec v(2 * m, 0.0);
    v[k] = state[k];
    v[m + k] = -state[m + k];
    v[k - 1] = -state[k - 1];
    v[m + k - 1] = state[m + k - 1];
    out.push_back(std::move(v));
  }
  return out;
}

Vec project_off(const Vec& v, const std::vector<Vec>& span) {
  const int k = static_cast<int>(span.size());
  Eigen::MatrixXd gram(k, k);
  Eigen::VectorXd rhs(k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j <= i; ++j) gram(i, j) = gram(j, i) = dot(span[i], span[j]);
    rhs(i) = dot(span[i], v);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  const double lmax = es.eigenvalues().maxCoeff();
  Vec out(v);
  if (!(lmax > 0.0)) return out;
  Eigen::VectorXd scaled = es.eigenvectors().transpose() * rhs;
  for (int i = 0; i < k; ++i) {
    const double lam = es.eigenvalues()(i);
    scaled(i) = (lam > 1e-13 * lmax) ? scaled(i) / lam : 0.0;
  }
  const Eigen::VectorXd c = es.eigenvectors() * scaled;
  for (int i = 0; i < k; ++i) axpy(out, -c(i), span[i]);
  return out;
}

}  // namespace

Vec ale_flow_field_real(const ale::AleParams& params, const SubtorusAction& action,
                        const Vec& state) {
  (void)params;
  const Vec L = real_generator_pattern(action, state);
  const Vec Lh = project_off(L, real_gauge_patterns(state));
  const double n2 = dot(Lh, Lh);
  if (!(n2 > 1e-24))
    throw FixedPointHitError("ale_flow_field_real: subtorus generator vanishes");
  return (-static_cast<double>(action.a) / n2) * Lh;
}

double ale_moment_real(const ale::AleParams& params, const SubtorusAction& action,
                       const Vec& state) {
  const int m = static_cast<int>(state.size()) / 2;
  double x = 0.0, y = 0.0;
  for (int i = 0; i < m; ++i) {
    x += 0.5 * state[i] * state[i];
    y += 0.5 * (state[i] * state[i] - state[m + i] * state[m + i]) - params.h[i];
  }
  y /= m;
  return action.a * x + action.b * y;
}

Vec real_state_of(const ale::QuotientPoint& p) {
  const int m = static_cast<int>(p.rep.size());
  Vec s(2 * m);
  for (int i = 0; i < m; ++i) {
    s[i] = p.rep.z[i].real();
    s[m + i] = p.rep.w[i].real();
  }
  return s;
}

ale::QuotientPoint point_of_real_state(const ale::AleParams& params, const Vec& state) {
  const int m = static_cast<int>(state.size()) / 2;
  CVec z(m), w(m);
  for (int i = 0; i < m; ++i) {
    z[i] = Cplx(state[i], 0.0);
    w[i] = Cplx(state[m + i], 0.0);
  }
  return ale::make_point(params, std::move(z), std::move(w));
}

AmbientModel ale_rep_ambient(const ale::AleParams& params,
                             const SubtorusAction& action) {
  action.validate_for(params.n);
  const ale::AleParams prm = params;
  const SubtorusAction act = action;
  AmbientModel m;
  m.complex_dim = 2;
  m.point_dim = 4 * (params.n + 1);
  m.dim_h = 1;
  m.metric_at = [prm](const Vec& p, const Vec& u, const Vec& v) {
    return ale::horizontal_inner(ale::coords_point(p), u, v);
  };
  m.cplx_I1_at = [](const Vec& p, const Vec& v) {
    return ale::flat_I1(ale::horizontal_project(ale::coords_point(p), v));
  };
  m.omega1_at = [](const Vec& p, const Vec& u, const Vec& v) {
    const QuaternionicPoint at = ale::coords_point(p);
    return ale::flat_omega1(ale::horizontal_project(at, u),
                            ale::horizontal_project(at, v));
  };
  m.hol_volume_at = [](const Vec& p, const std::vector<Vec>& frame) {
    if (frame.size() != 2)
      throw DimensionError("hol_volume: quotient backend expects a 2-frame");
    const QuaternionicPoint at = ale::coords_point(p);
    return ale::flat_omega_cplx(ale::horizontal_project(at, frame[0]),
                                ale::horizontal_project(at, frame[1]));
  };
  m.action_generator_at = [prm, act](const Vec& p, double s) {
    const QuaternionicPoint at = ale::coords_point(p);
    ale::QuotientPoint q{at, ale::Gauge::generic};
    return s * ale_generator_lift(prm, act, q);
  };
  m.moment_at = [prm, act](const Vec& p) {
    const QuaternionicPoint at = ale::coords_point(p);
    const int mm = static_cast<int>(at.size());
    double x = 0.0, y = 0.0;
    for (int i = 0; i < mm; ++i) {
      x += 0.5 * std::norm(at.z[i]);
      y += 0.5 * (std::norm(at.z[i]) - std::norm(at.w[i])) - prm.h[i];
    }
    y /= mm;
    return Vec{act.a * x + act.b * y};
  };
  m.a_h = {static_cast<double>(action.a)};
  return m;
}

AmbientModel ale_chart_ambient(const ale::AleParams& params,
                               const SubtorusAction& action, int k0) {
  action.validate_for(params.n);
  const ale::AleParams prm = params;
  const SubtorusAction act = action;
  const std::array<int, 2> lam = chart_rotation_weights(params.n, action, k0);

  auto inverse = [prm, k0](const Vec& u) {
    return ale::chart_inverse(prm, k0, Cplx(u[0], u[1]), Cplx(u[2], u[3]));
  };
  auto lift = [prm, k0, inverse](const Vec& u, const Vec& t) {
    const ale::QuotientPoint p = inverse(u);
    return ale::chart_lift(prm, k0, p, t);
  };

  AmbientModel m;
  m.complex_dim = 2;
  m.point_dim = 4;
  m.dim_h = 1;
  m.metric_at = [lift](const Vec& u, const Vec& t1, const Vec& t2) {
    return dot(lift(u, t1), lift(u, t2));
  };
  m.cplx_I1_at = [](const Vec&, const Vec& v) {
    return Vec{-v[1], v[0], -v[3], v[2]};
  };
  m.omega1_at = [lift](const Vec& u, const Vec& t1, const Vec& t2) {
    return ale::flat_omega1(lift(u, t1), lift(u, t2));
  };
  m.hol_volume_at = [lift](const Vec& u, const std::vector<Vec>& frame) {
    if (frame.size() != 2)
      throw DimensionError("hol_volume: chart backend expects a 2-frame");
    return ale::flat_omega_cplx(lift(u, frame[0]), lift(u, frame[1]));
  };
  m.action_generator_at = [lam](const Vec& u, double s) {
    return Vec{-s * lam[0] * u[1], s * lam[0] * u[0],
               -s * lam[1] * u[3], s * lam[1] * u[2]};
  };
  m.moment_at = [prm, act, inverse](const Vec& u) {
    const auto xy = ale::mu_g(prm, inverse(u));
    return Vec{act.a * xy[0] + act.b * xy[1]};
  };
  m.a_h = {static_cast<double>(action.a)};
  return m;
}

LevelSection level_line_section(const ale::AleParams& params,
                                const SubtorusAction& action, double cbar,
                                double ray_cap) {
  const ale::MomentPolygon poly = ale::polygon(params);
  const int n = params.n;
  const double a = action.a, b = action.b;
  LevelSection sec;
  sec.a_ = a;
  sec.b_ = b;
  sec.cbar_ = cbar;

  if (action.a == 0) {
    // Horizontal level line y = cbar / b: a rightward ray from the boundary.
    const double y = cbar / b;
    sec.is_segment = false;
    sec.y_range = {y, y};
    int k0 = n + 1;
    for (int k = 0; k <= n; ++k)
      if (y >= -params.h[k]) {
        k0 = k;
        break;
      }
    sec.crossed_edges.push_back(k0);
    return sec;
  }

  // Edge crossings of the line a x + b y = cbar.
  std::vector<std::pair<double, int>> crossings;  // (y, edge index)
  for (int k = 0; k <= n + 1; ++k) {
    double yk;
    if (k == n + 1) {
      if (b == 0.0) continue;  // vertical line never crosses the vertical edge
      yk = cbar / b;           // edge x = 0
      if (yk <= -params.h[n] + 1e-14) crossings.push_back({yk, k});
      continue;
    }
    double hsum = 0.0;
    for (int i = k; i <= n; ++i) hsum += params.h[i];
    const double denom = a * (n + 1 - k) + b;
    if (denom == 0.0) continue;
    yk = (cbar - a * hsum) / denom;
    const double y_low = -params.h[k];
    const double y_high = (k == 0) ? std::numeric_limits<double>::infinity()
                                   : -params.h[k - 1];
    if (yk >= y_low - 1e-14 && yk <= y_high + 1e-14) crossings.push_back({yk, k});
  }
  std::sort(crossings.begin(), crossings.end());
  crossings.erase(std::unique(crossings.begin(), crossings.end(),
                              [](const auto& p, const auto& q) {
                                return std::abs(p.first - q.first) < 1e-12;
                              }),
                  crossings.end());

  if (crossings.empty())
    throw EmptyLevelError("level_line_section: the level line misses the polygon");
  for (const auto& c : crossings) sec.crossed_edges.push_back(c.second);
  std::sort(sec.crossed_edges.begin(), sec.crossed_edges.end());

  if (crossings.size() >= 2) {
    sec.is_segment = true;
    sec.y_range = {crossings.front().first, crossings.back().first};
    return sec;
  }

  // Single crossing: a ray. Walk into the polygon from the crossing height.
  sec.is_segment = false;
  const double yc = crossings.front().first;
  const double step = (params.h[n] - params.h[0] + 1.0) * 0.1;
  double y_in;
  if (poly.contains(sec.x_at(yc + step), yc + step))
    y_in = yc + ray_cap;
  else
    y_in = yc - ray_cap;
  sec.y_range = {yc, y_in};
  return sec;
}

AleSeeds ale_level_seeds(const ale::AleParams& params, const SubtorusAction& action,
                         double c0, int per_sheet, std::uint64_t seed,
                         double edge_margin) {
  action.validate_for(params.n);
  const LevelSection sec = level_line_section(params, action, c0);
  DetRng rng(seed);

  AleSeeds out;
  const std::array<ale::Sheet, 4> sheets = {ale::Sheet::PP, ale::Sheet::MP,
                                            ale::Sheet::PM, ale::Sheet::MM};
  for (const ale::Sheet sh : sheets) {
    const int base = static_cast<int>(out.states.size());
    for (int j = 0; j < per_sheet; ++j) {
      double y;
      if (action.a == 0) {
        // Ray parametrized by x directly.
        y = sec.y_range[0];
      } else {
        const double u = (j + 0.5) / per_sheet;
        const double jitter = 0.1 * (rng.uniform() - 0.5) / per_sheet;
        double lo = sec.y_range[0], hi = sec.y_range[1];
        const double dir = (hi >= lo) ? 1.0 : -1.0;
        lo += dir * edge_margin;
        y = lo + (hi - lo) * std::clamp(u + jitter, 0.0, 1.0);
      }
      double x;
      if (action.a == 0) {
        const ale::MomentPolygon poly = ale::polygon(params);
        x = poly.x_min(y) + edge_margin + (j + 0.5) * 0.5;
      } else {
        x = sec.x_at(y);
      }
      const ale::QuotientPoint p = ale::solve_level(params, x, y, sh);
      out.states.push_back(real_state_of(p));
      out.sheets.push_back(sh);
      if (j > 0) out.neighbor_pairs.push_back({base + j - 1, base + j});
    }
  }
  return out;
}

int worker_count() {
  if (const char* env = std::getenv("LMCF_THREADS")) {
    const int k = std::atoi(env);
    if (k > 0) return k;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

namespace {

void newton_project(const ale::AleParams& params, Vec& state, int max_iter) {
  for (int it = 0; it < max_iter; ++it) {
    const Vec c = ale::real_slice_constraints(params, state);
    double cmax = 0.0;
    for (double v : c) cmax = std::max(cmax, std::abs(v));
    if (cmax < 1e-12) return;
    const std::vector<Vec> jac = ale::real_slice_jacobian(state);
    const int rows = static_cast<int>(jac.size());
    const int cols = static_cast<int>(state.size());
    Eigen::MatrixXd J(rows, cols);
    Eigen::VectorXd F(rows);
    for (int i = 0; i < rows; ++i) {
      F(i) = c[i];
      for (int j = 0; j < cols; ++j) J(i, j) = jac[i][j];
    }
    const Eigen::VectorXd delta =
        J.completeOrthogonalDecomposition().solve(F);
    for (int j = 0; j < cols; ++j) state[j] -= delta(j);
  }
  const Vec c = ale::real_slice_constraints(params, state);
  double cmax = 0.0;
  for (double v : c) cmax = std::max(cmax, std::abs(v));
  if (cmax >= 1e-12) {
    std::ostringstream msg;
    msg << "newton_project: constraint residual " << cmax
        << " after the iteration budget";
    throw ProjectionFailureError(msg.str());
  }
}

std::vector<double> build_time_grid(double halt, const IntegratorConfig& cfg,
                                    std::optional<double> singular_time,
                                    std::vector<double> record_times) {
  std::vector<double> grid{0.0};
  std::sort(record_times.begin(), record_times.end());
  std::size_t next_rec = 0;
  double t = 0.0;
  while (t < halt - 1e-15) {
    double h = std::min(cfg.step, halt - t);
    if (singular_time)
      h = std::min(h, std::max(0.1 * (*singular_time - t), 1e-9));
    while (next_rec < record_times.size() && record_times[next_rec] <= t + 1e-15)
      ++next_rec;
    if (next_rec < record_times.size() &&
        record_times[next_rec] < t + h - 1e-15 && record_times[next_rec] <= halt)
      h = record_times[next_rec] - t;
    t += h;
    grid.push_back(t);
  }
  return grid;
}

void run_workers(int jobs, const std::function<void(int)>& body) {
  const int workers = std::min(worker_count(), jobs);
  if (workers <= 1) {
    for (int j = 0; j < jobs; ++j) body(j);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr first_error;
  std::mutex err_mutex;
  std::atomic<int> cursor{0};
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int j = cursor.fetch_add(1); j < jobs; j = cursor.fetch_add(1)) {
        try {
          body(j);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

FlowTrajectory integrate_flow(const FlowProblem& problem, double c0, double horizon,
                              const IntegratorConfig& cfg,
                              const std::vector<Vec>& seeds,
                              const std::vector<double>& record_times) {
  cfg.validate();
  if (seeds.empty()) throw EmptyLevelError("integrate_flow: no seeds supplied");

  FlowTrajectory traj;
  traj.c0 = c0;
  traj.a_h = problem.a_h;
  traj.singular_time = problem.singular_time;

  double halt = horizon;
  if (problem.singular_time)
    halt = std::min(halt, *problem.singular_time * (1.0 - cfg.stop_margin));
  traj.halt_time = halt;

  traj.times = build_time_grid(halt, cfg, problem.singular_time, record_times);
  const std::size_t steps = traj.times.size();
  const std::size_t ns = seeds.size();

  traj.samples.assign(steps, std::vector<Vec>(ns));
  traj.residuals.assign(steps, std::vector<double>(ns, 0.0));

  run_workers(static_cast<int>(ns), [&](int s) {
    Vec state = seeds[s];
    if (problem.project && cfg.enable_projection) problem.project(state);
    for (std::size_t k = 0; k < steps; ++k) {
      if (k > 0) {
        const double h = traj.times[k] - traj.times[k - 1];
        const Vec k1 = problem.field(state);
        Vec s2 = state;
        axpy(s2, 0.5 * h, k1);
        const Vec k2 = problem.field(s2);
        Vec s3 = state;
        axpy(s3, 0.5 * h, k2);
        const Vec k3 = problem.field(s3);
        Vec s4 = state;
        axpy(s4, h, k3);
        const Vec k4 = problem.field(s4);
        for (std::size_t j = 0; j < state.size(); ++j)
          state[j] += (h / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        if (problem.project && cfg.enable_projection) problem.project(state);
      }
      traj.samples[k][s] = state;
      const double c_t = c0 - traj.times[k] * problem.a_h;
      traj.residuals[k][s] = std::abs(problem.moment(state) - c_t);
    }
  });

  traj.drift_residuals.resize(steps);
  traj.reseed_flagged.assign(steps, 0);
  std::vector<double> initial_gap;
  for (const auto& pr : problem.neighbor_pairs)
    initial_gap.push_back(norm(traj.samples[0][pr[0]] - traj.samples[0][pr[1]]));
  for (std::size_t k = 0; k < steps; ++k) {
    double mx = 0.0;
    for (double r : traj.residuals[k]) mx = std::max(mx, r);
    traj.drift_residuals[k] = mx;
    for (std::size_t q = 0; q < problem.neighbor_pairs.size(); ++q) {
      const auto& pr = problem.neighbor_pairs[q];
      if (norm(traj.samples[k][pr[0]] - traj.samples[k][pr[1]]) >
          10.0 * std::max(initial_gap[q], 1e-12))
        traj.reseed_flagged[k] = 1;
    }
  }
  return traj;
}

FlowTrajectory integrate_flow(const flat::ShrinkerModel& model, double c0,
                              double horizon, const IntegratorConfig& cfg,
                              const std::vector<Vec>& seeds,
                              const std::vector<double>& record_times) {
  const flat::ShrinkerModel m = model;
  FlowProblem p;
  p.state_dim = model.dim();
  p.field = [m](const Vec& x) { return flat::shrinker_flow_field(m, x); };
  p.moment = [m](const Vec& x) {
    double s = 0.0;
    for (int i = 0; i < m.dim(); ++i) s += m.weights[i] * x[i] * x[i];
    return 0.5 * s;
  };
  p.a_h = static_cast<double>(model.weight_sum());
  if (p.a_h != 0.0) {
    const double t_star = c0 / p.a_h;
    if (t_star > 0.0) p.singular_time = t_star;
  }
  for (int i = 0; i + 1 < static_cast<int>(seeds.size()); ++i)
    p.neighbor_pairs.push_back({i, i + 1});
  return integrate_flow(p, c0, horizon, cfg, seeds, record_times);
}

FlowTrajectory integrate_flow(const flat::TranslatorModel& model, double c0,
                              double horizon, const IntegratorConfig& cfg,
                              const std::vector<Vec>& seeds,
                              const std::vector<double>& record_times) {
  const flat::TranslatorModel m = model;
  FlowProblem p;
  p.state_dim = model.ambient_dim();
  p.field = [m](const Vec& x) { return flat::translator_flow_field(m, x); };
  p.moment = [m](const Vec& x) {
    double s = 0.0;
    for (int i = 0; i < m.dim(); ++i) s += m.weights[i] * x[i] * x[i];
    return 0.5 * s + x[m.dim()];
  };
  p.a_h = model.weight_sum();
  for (int i = 0; i + 1 < static_cast<int>(seeds.size()); ++i)
    p.neighbor_pairs.push_back({i, i + 1});
  return integrate_flow(p, c0, horizon, cfg, seeds, record_times);
}

std::optional<double> first_singular_time(const ale::AleParams& params,
                                          const SubtorusAction& action, double c0) {
  if (action.a == 0) return std::nullopt;
  const ale::MomentPolygon poly = ale::polygon(params);
  std::optional<double> first;
  for (int k = 0; k <= params.n; ++k) {
    const double tk = (c0 - (action.a * poly.vertices[k][0] +
                             action.b * poly.vertices[k][1])) /
                      action.a;
    if (tk > 0.0 && (!first || tk < *first)) first = tk;
  }
  return first;
}

FlowTrajectory integrate_flow(const ale::AleParams& params, const SubtorusAction& action,
                              double c0, double horizon, const IntegratorConfig& cfg,
                              const AleSeeds& seeds,
                              const std::vector<double>& record_times) {
  action.validate_for(params.n);
  const ale::AleParams prm = params;
  const SubtorusAction act = action;
  FlowProblem p;
  p.state_dim = 2 * (params.n + 1);
  if (action.a == 0) {
    // Static flow: the field vanishes identically.
    p.field = [](const Vec& x) { return Vec(x.size(), 0.0); };
  } else {
    p.field = [prm, act](const Vec& x) { return ale_flow_field_real(prm, act, x); };
  }
  const int max_newton = cfg.max_newton;
  p.project = [prm, max_newton](Vec& x) { newton_project(prm, x, max_newton); };
  p.moment = [prm, act](const Vec& x) { return ale_moment_real(prm, act, x); };
  p.a_h = static_cast<double>(action.a);
  p.singular_time = first_singular_time(params, action, c0);
  p.neighbor_pairs = seeds.neighbor_pairs;
  return integrate_flow(p, c0, horizon, cfg, seeds.states, record_times);
}

namespace {

ImmersionCloud fiber_cloud(const FlowTrajectory& traj, double t, int fiber_samples,
                           const std::function<Vec(const Vec&, double)>& apply,
                           bool periodic) {
  ImmersionCloud cloud;
  const int idx = traj.sample_index_at(t, 1e-9);
  if (idx < 0)
    throw OutsideDomainError("product_immersion: time not recorded in the trajectory");
  for (std::size_t s = 0; s < traj.samples[idx].size(); ++s) {
    for (int j = 0; j < fiber_samples; ++j) {
      const double param =
          periodic ? 2.0 * std::numbers::pi * j / fiber_samples
                   : -std::numbers::pi + 2.0 * std::numbers::pi * j /
                                             std::max(1, fiber_samples - 1);
      cloud.points.push_back(apply(traj.samples[idx][s], param));
      cloud.seed_index.push_back(static_cast<int>(s));
      cloud.fiber_param.push_back(param);
    }
  }
  return cloud;
}

}  // namespace

ImmersionCloud product_immersion(const flat::ShrinkerModel& model,
                                 const FlowTrajectory& traj, double t,
                                 int fiber_samples) {
  const flat::ShrinkerModel m = model;
  auto apply = [m](const Vec& x, double s) {
    CVec z(m.dim());
    for (int i = 0; i < m.dim(); ++i)
      z[i] = x[i] * std::polar(1.0, m.weights[i] * s);
    return to_real(z);
  };
  return fiber_cloud(traj, t, fiber_samples, apply, true);
}

ImmersionCloud product_immersion(const flat::TranslatorModel& model,
                                 const FlowTrajectory& traj, double t,
                                 int fiber_samples) {
  const flat::TranslatorModel m = model;
  auto apply = [m](const Vec& x, double s) {
    CVec z(m.ambient_dim());
    for (int i = 0; i < m.dim(); ++i)
      z[i] = x[i] * std::polar(1.0, m.weights[i] * s);
    z[m.dim()] = Cplx(x[m.dim()], s);
    return to_real(z);
  };
  return fiber_cloud(traj, t, fiber_samples, apply, false);
}

ImmersionCloud product_immersion(const ale::AleParams& params,
                                 const SubtorusAction& action,
                                 const FlowTrajectory& traj, double t,
                                 int fiber_samples) {
  const ale::AleParams prm = params;
  const SubtorusAction act = action;
  auto apply = [prm, act](const Vec& state, double s) {
    const ale::QuotientPoint p = point_of_real_state(prm, state);
    const ale::QuotientPoint moved = ale::g_action(p, act.a * s, act.b * s);
    return ale::point_coords(moved.rep);
  };
  return fiber_cloud(traj, t, fiber_samples, apply, true);
}

}  // namespace lmcf::flow
