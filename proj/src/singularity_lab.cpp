#include "lmcf/singularity_lab.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace lmcf::sing {

namespace {

// Nontrivial real torus element contained in the rank-one subtorus; with a, b
// coprime exactly one of the three candidates qualifies.
std::array<int, 2> subtorus_real_element(const flow::SubtorusAction& action) {
  const bool a_even = (action.a % 2 == 0);
  const bool b_even = (action.b % 2 == 0);
  if (a_even && !b_even) return {1, -1};
  if (!a_even && b_even) return {-1, 1};
  return {-1, -1};
}

// Sheet pairing across edge k: the nontrivial real element of its stabilizer.
std::array<int, 2> edge_pairing(int n, int k) {
  const int par = ((n + 1 - k) % 2 + 2) % 2;
  return {-1, par == 0 ? +1 : -1};
}

std::vector<std::vector<ale::Sheet>> sheet_orbits(
    const std::vector<std::array<int, 2>>& generators) {
  const std::array<ale::Sheet, 4> sheets = {ale::Sheet::PP, ale::Sheet::MP,
                                            ale::Sheet::PM, ale::Sheet::MM};
  std::array<int, 4> comp{-1, -1, -1, -1};
  int next = 0;
  for (int s = 0; s < 4; ++s) {
    if (comp[s] >= 0) continue;
    // Breadth-first orbit under the generating pairings.
    std::vector<int> stack{s};
    comp[s] = next;
    while (!stack.empty()) {
      const int cur = stack.back();
      stack.pop_back();
      for (const auto& g : generators) {
        const int img = static_cast<int>(ale::sheet_times(sheets[cur], g));
        if (comp[img] < 0) {
          comp[img] = next;
          stack.push_back(img);
        }
      }
    }
    ++next;
  }
  std::vector<std::vector<ale::Sheet>> out(next);
  for (int s = 0; s < 4; ++s) out[comp[s]].push_back(sheets[s]);
  return out;
}

}  // namespace

SingularSchedule singular_times(const ale::AleParams& params,
                                const flow::SubtorusAction& action, double c0) {
  action.validate_for(params.n);
  const int n = params.n;
  SingularSchedule sched;
  if (action.a == 0) {
    sched.tag = CaseTag::static_flow;
    return sched;
  }

  const ale::MomentPolygon poly = ale::polygon(params);
  sched.times.resize(n + 1);
  double scale = std::max(1.0, std::abs(c0));
  for (int k = 0; k <= n; ++k) {
    const double fk =
        action.a * poly.vertices[k][0] + action.b * poly.vertices[k][1];
    sched.times[k] = (c0 - fk) / action.a;
    scale = std::max(scale, std::abs(fk / action.a));
  }
  for (int k = 0; k <= n; ++k)
    if (std::abs(sched.times[k]) < 1e-12 * scale)
      throw OnFixedLevelError(
          "singular_times: the initial level passes through a vertex image");

  // Case classification by the slope ratio, exact in integer arithmetic.
  const int a = action.a, b = action.b;
  if (b * a > 0) {
    sched.tag = CaseTag::slope_positive;
  } else if (std::abs(b) < (n + 1) * std::abs(a)) {
    sched.tag = CaseTag::slope_intermediate;
  } else {
    sched.tag = CaseTag::slope_steep;
  }

  for (int k = 0; k <= n; ++k)
    if (sched.times[k] > 0.0 && sched.times[k] < sched.first_hit_time) {
      sched.first_hit_time = sched.times[k];
      sched.first_hit_vertex = k;
    }

  if (sched.tag == CaseTag::slope_intermediate) {
    // Unique integer in the open unit window (n + b/a, n + 1 + b/a).
    const int an = a > 0 ? a : -a;
    const int bn = a > 0 ? b : -b;
    for (int m = 0; m <= n; ++m)
      if (an * n + bn < an * m && an * m < an * (n + 1) + bn) sched.m0 = m;
    if (sched.times[sched.m0] < 0.0) {
      sched.empty_level = true;
      return sched;
    }
    // Entry and exit edges from the sign pattern of the crossing times.
    for (int i = 0; i <= sched.m0; ++i) {
      const double prev = (i == 0) ? -std::numeric_limits<double>::infinity()
                                   : sched.times[i - 1];
      if (prev < 0.0 && sched.times[i] > 0.0) sched.i0 = i;
    }
    for (int j = sched.m0 + 1; j <= n + 1; ++j) {
      const double prev = sched.times[j - 1];
      const double cur = (j == n + 1) ? -std::numeric_limits<double>::infinity()
                                      : sched.times[j];
      if (prev > 0.0 && cur < 0.0) sched.j0 = j;
    }
  }

  // Geometric crossings of the initial level line, for the census and the
  // seeding; consistent with the index bookkeeping above.
  try {
    const flow::LevelSection sec = flow::level_line_section(params, action, c0);
    if (!sec.crossed_edges.empty()) {
      sched.crossing_edge_entry = sec.crossed_edges.front();
      if (sec.crossed_edges.size() > 1)
        sched.crossing_edge_exit = sec.crossed_edges.back();
    }
  } catch (const EmptyLevelError&) {
    sched.empty_level = true;
  }
  return sched;
}

BlowupWeights blowup_weights(int n, const flow::SubtorusAction& action, int k0) {
  if (k0 < 0 || k0 > n) throw DimensionError("blowup_weights: vertex index out of range");
  const std::array<int, 2> lam = flow::chart_rotation_weights(n, action, k0);
  return BlowupWeights{lam[0], lam[1], k0};
}

std::array<double, 2> chart_level_point(const ale::AleParams& params,
                                        const flow::SubtorusAction& action, int k0,
                                        double cbar, const std::array<double, 2>& dir,
                                        double radial_cap) {
  auto moment_of = [&](double rho) {
    const ale::QuotientPoint p = ale::chart_inverse(
        params, k0, Cplx(rho * dir[0], 0.0), Cplx(rho * dir[1], 0.0));
    const auto xy = ale::mu_g(params, p);
    return action.a * xy[0] + action.b * xy[1];
  };
  const double target = cbar;
  double lo = 0.0, hi = 0.0;
  double m_lo = moment_of(0.0) - target;
  if (std::abs(m_lo) < 1e-15) return {0.0, 0.0};
  // Walk outward until the moment residual changes sign.
  bool bracketed = false;
  for (double r = 0.125; r <= radial_cap; r *= 1.5) {
    const double m_r = moment_of(r) - target;
    if ((m_lo < 0.0) != (m_r < 0.0)) {
      hi = r;
      bracketed = true;
      break;
    }
    lo = r;
    m_lo = m_r;
  }
  if (!bracketed)
    throw EmptyWindowError("chart_level_point: no level point along this direction");
  for (int it = 0; it < 120; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double m_mid = moment_of(mid) - target;
    if ((m_lo < 0.0) != (m_mid < 0.0))
      hi = mid;
    else {
      lo = mid;
      m_lo = m_mid;
    }
    if (hi - lo < 1e-14 * std::max(1.0, hi)) break;
  }
  const double rho = 0.5 * (lo + hi);
  return {rho * dir[0], rho * dir[1]};
}

namespace {

// Dense polyline of the limit quadric (real slice) within |v| <= window.
std::vector<std::array<double, 2>> quadric_polyline(int lambda1, int lambda2,
                                                    double a, double window,
                                                    int samples) {
  std::vector<std::array<double, 2>> pts;
  pts.reserve(samples);
  if (lambda1 > 0 && lambda2 > 0) {
    const double r1 = std::sqrt(2.0 * a / lambda1), r2 = std::sqrt(2.0 * a / lambda2);
    for (int i = 0; i < samples; ++i) {
      const double s = 2.0 * std::numbers::pi * i / samples;
      pts.push_back({r1 * std::cos(s), r2 * std::sin(s)});
    }
    return pts;
  }
  // Hyperbola: open along the positive-weight coordinate.
  const bool first_positive = lambda1 > 0;
  const double lp = first_positive ? lambda1 : lambda2;
  const double ln = first_positive ? -lambda2 : -lambda1;
  const double rp = std::sqrt(2.0 * a / lp), rn = std::sqrt(2.0 * a / ln);
  const double smax = std::asinh(window / std::min(rp, rn)) + 0.5;
  for (int branch = -1; branch <= 1; branch += 2)
    for (int i = 0; i < samples / 2; ++i) {
      const double s = -smax + 2.0 * smax * i / (samples / 2 - 1);
      const double vp = branch * rp * std::cosh(s);
      const double vn = rn * std::sinh(s);
      const std::array<double, 2> v =
          first_positive ? std::array<double, 2>{vp, vn}
                         : std::array<double, 2>{vn, vp};
      if (std::hypot(v[0], v[1]) <= window) pts.push_back(v);
    }
  return pts;
}

double set_distance(const std::vector<std::array<double, 2>>& a,
                    const std::vector<std::array<double, 2>>& b) {
  auto one_sided = [](const std::vector<std::array<double, 2>>& from,
                      const std::vector<std::array<double, 2>>& to) {
    double worst = 0.0;
    for (const auto& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : to)
        best = std::min(best, std::hypot(p[0] - q[0], p[1] - q[1]));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(one_sided(a, b), one_sided(b, a));
}

}  // namespace

RescaledSlice rescaled_slice(const ale::AleParams& params,
                             const flow::SubtorusAction& action,
                             const flow::FlowTrajectory& traj, double t, int k0,
                             int sample_count, double window) {
  const SingularSchedule sched = singular_times(params, action, traj.c0);
  if (k0 < 0 || k0 > params.n)
    throw DimensionError("rescaled_slice: vertex index out of range");
  const double t_sing = sched.times[k0];
  if (!(t < t_sing))
    throw OutsideDomainError("rescaled_slice: requested time is past the singular time");
  const double tau = t_sing - t;
  const double scale = std::sqrt(tau);

  RescaledSlice slice;
  slice.t = t;
  slice.tau = tau;
  const BlowupWeights bw = blowup_weights(params.n, action, k0);
  slice.weights = {bw.lambda1, bw.lambda2};

  // Flow samples inside the chart window.
  const int idx = traj.sample_index_at(t, 1e-9);
  if (idx >= 0) {
    for (const Vec& state : traj.samples[idx]) {
      try {
        const ale::QuotientPoint p = flow::point_of_real_state(params, state);
        const auto u = ale::local_chart(params, k0, p);
        const std::array<double, 2> v = {u[0].real() / scale, u[1].real() / scale};
        if (std::hypot(v[0], v[1]) <= window) {
          slice.points.push_back(v);
          ++slice.trajectory_points;
        }
      } catch (const OutsideChartError&) {
      }
    }
  }

  // Reseed through direct level solves along corrected quadric directions,
  // spread over the whole window so the symmetric distance is meaningful.
  const double cbar_t = traj.c0 - t * action.a;
  const std::vector<std::array<double, 2>> ideal =
      quadric_polyline(bw.lambda1, bw.lambda2, action.a, window,
                       std::max(16, sample_count));
  for (const auto& v : ideal) {
    const std::array<double, 2> dir = {v[0] * scale, v[1] * scale};
    if (std::hypot(dir[0], dir[1]) < 1e-14) continue;
    try {
      const auto u = chart_level_point(params, action, k0, cbar_t, dir, 3.0);
      const std::array<double, 2> vv = {u[0] / scale, u[1] / scale};
      if (std::hypot(vv[0], vv[1]) <= window) slice.points.push_back(vv);
    } catch (const EmptyWindowError&) {
    }
  }
  if (slice.points.empty())
    throw EmptyWindowError("rescaled_slice: no level points inside the chart window");

  slice.quadric_distance = set_distance(
      slice.points,
      quadric_polyline(bw.lambda1, bw.lambda2, action.a, window, 2048));
  return slice;
}

TypeIStatistic type_one_statistic(const ale::AleParams& params,
                                  const flow::SubtorusAction& action,
                                  const flow::FlowTrajectory& traj, int k0,
                                  double radius_factor,
                                  const std::vector<double>& times) {
  const SingularSchedule sched = singular_times(params, action, traj.c0);
  const double t_sing = sched.times[k0];
  const BlowupWeights bw = blowup_weights(params.n, action, k0);

  TypeIStatistic stat;
  stat.k0 = k0;
  stat.radius_factor = radius_factor;

  AmbientModel chart = flow::ale_chart_ambient(params, action, k0);

  for (const double t : times) {
    if (!(t < t_sing))
      throw OutsideDomainError("type_one_statistic: time past the singular time");
    const double tau = t_sing - t;
    const double radius = std::sqrt(tau) * radius_factor;
    const double cbar_t = traj.c0 - t * action.a;

    // The immersed level inside the ball, parametrized by corrected quadric
    // directions (sigma) and the fiber rotation.
    const std::vector<std::array<double, 2>> frame_dirs =
        quadric_polyline(bw.lambda1, bw.lambda2, action.a, radius_factor, 64);
    bool window_hit = false;
    double sup_a = 0.0;

    auto level_u = [&](double s1, double s2) {
      const std::array<double, 2> dir = {s1 * std::sqrt(tau), s2 * std::sqrt(tau)};
      return chart_level_point(params, action, k0, cbar_t, dir, 3.0);
    };

    for (const auto& v : frame_dirs) {
      std::array<double, 2> u;
      try {
        u = level_u(v[0], v[1]);
      } catch (const EmptyWindowError&) {
        continue;
      }
      if (std::hypot(u[0], u[1]) > radius) continue;
      window_hit = true;

      // Patch through this point: radial direction angle + fiber rotation.
      const double psi = std::atan2(v[1], v[0]);
      const ale::AleParams prm = params;
      const flow::SubtorusAction act = action;
      const std::array<int, 2> lam =
          flow::chart_rotation_weights(params.n, action, k0);
      auto patch_map = [prm, act, k0, cbar_t, lam](const Vec& q) {
        const double ang = q[0], fib = q[1];
        const std::array<double, 2> d = {std::cos(ang), std::sin(ang)};
        const auto u0 = chart_level_point(prm, act, k0, cbar_t, d, 4.0);
        const Cplx u1 = Cplx(u0[0], 0.0) * std::polar(1.0, lam[0] * fib);
        const Cplx u2 = Cplx(u0[1], 0.0) * std::polar(1.0, lam[1] * fib);
        return Vec{u1.real(), u1.imag(), u2.real(), u2.imag()};
      };
      oracle::ImmersedPatch patch;
      patch.parametrization = patch_map;
      patch.ambient = chart;
      patch.domain = {{psi - 0.1, psi + 0.1}, {-0.1, 0.1}};
      patch.fd_step = 5e-3;
      try {
        sup_a = std::max(
            sup_a, oracle::second_fundamental_norm_chart(patch, Vec{psi, 0.0}));
      } catch (const Error&) {
        // Degenerate stencil (window boundary); skip this direction.
      }
    }
    if (!window_hit)
      throw EmptyWindowError("type_one_statistic: immersed level misses the ball");
    stat.series.push_back(TypeIEntry{t, tau, sup_a, sup_a * std::sqrt(tau)});
  }
  return stat;
}

TypeIStatistic flat_type_one_statistic(const flat::ShrinkerModel& model, double c0,
                                       double radius_factor,
                                       const std::vector<double>& times) {
  const double rate = static_cast<double>(model.weight_sum());
  if (rate == 0.0)
    throw OutsideDomainError("flat_type_one_statistic: zero drift rate never extinguishes");
  const double t_sing = c0 / rate;

  TypeIStatistic stat;
  stat.k0 = -1;
  stat.radius_factor = radius_factor;
  for (const double t : times) {
    if (!(t < t_sing))
      throw OutsideDomainError("flat_type_one_statistic: time past the extinction time");
    const double tau = t_sing - t;
    const double c_t = c0 - t * rate;
    const double radius = std::sqrt(tau) * radius_factor;
    oracle::ImmersedPatch patch = oracle::shrinker_surface_patch(model, c_t);
    patch.fd_step = 1e-3;

    double sup_a = 0.0;
    bool window_hit = false;
    for (int i = 0; i < 48; ++i) {
      const double smax = 3.0;
      const double s = -smax + 2.0 * smax * i / 47.0;
      const Vec u{s, 0.5};
      const Vec p = patch.parametrization(u);
      if (norm(p) > radius) continue;
      window_hit = true;
      sup_a = std::max(sup_a, oracle::second_fundamental_norm_flat(patch, u));
    }
    if (!window_hit)
      throw EmptyWindowError("flat_type_one_statistic: level misses the ball");
    stat.series.push_back(TypeIEntry{t, tau, sup_a, sup_a * std::sqrt(tau)});
  }
  return stat;
}

ComponentCensus component_census(const ale::AleParams& params,
                                 const flow::SubtorusAction& action, double c0) {
  action.validate_for(params.n);
  ComponentCensus census;
  census.deck_element = subtorus_real_element(action);

  const flow::LevelSection sec = flow::level_line_section(params, action, c0);
  census.crossed_edges = sec.crossed_edges;
  census.is_segment = sec.is_segment;

  if (action.a == 0) {
    census.tag = CaseTag::static_flow;
  } else {
    const SingularSchedule sched = singular_times(params, action, c0);
    census.tag = sched.tag;
  }

  std::vector<std::array<int, 2>> pairings;
  for (int k : census.crossed_edges) pairings.push_back(edge_pairing(params.n, k));
  census.components = sheet_orbits(pairings);
  census.topology = census.is_segment ? ComponentCensus::Topology::circle
                                      : ComponentCensus::Topology::line;
  return census;
}

}  // namespace lmcf::sing
