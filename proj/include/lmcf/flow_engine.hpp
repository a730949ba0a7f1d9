// Constrained integration of the symmetry-reduced mean curvature flow: the
// flow field built from the action and the volume-phase weight, RK4 with
// per-step constraint projection, conservation bookkeeping, and the product
// immersion of level sets with their group fibers.
#ifndef LMCF_FLOW_ENGINE_HPP
#define LMCF_FLOW_ENGINE_HPP

#include "lmcf/ale_quotient.hpp"
#include "lmcf/flat_models.hpp"
#include "lmcf/geometry_core.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace lmcf::flow {

// Rank-one subtorus of the residual torus, generated by a p0 + b p1.
struct SubtorusAction {
  int a;
  int b;
  SubtorusAction(int a_in, int b_in);
  // The admissibility bound depends on the resolution size: b must avoid
  // -l a for l = 0..n+1, otherwise the subtorus fixes whole edge strata.
  void validate_for(int n) const;
};

// Rotation rates of the vertex chart coordinates under the subtorus; these
// are also the weights of the flat blow-up model at that vertex.
std::array<int, 2> chart_rotation_weights(int n, const SubtorusAction& action, int k0);

struct IntegratorConfig {
  double step = 1e-3;
  double projection_tol = 1e-9;  // drift budget: trajectories must conserve
                                 // the moment schedule to 10x this value
  int max_newton = 25;
  double stop_margin = 1e-6;     // halt at (1 - stop_margin) x singular time
  bool enable_projection = true;

  void validate() const;
};

struct FlowTrajectory {
  double c0 = 0.0;
  double a_h = 0.0;
  std::vector<double> times;
  std::vector<std::vector<Vec>> samples;       // [time][seed]
  std::vector<std::vector<double>> residuals;  // [time][seed] drift residuals
  std::vector<double> drift_residuals;         // per-time max over seeds
  std::vector<char> reseed_flagged;            // neighbor separation > 10x initial
  std::optional<double> singular_time;
  double halt_time = 0.0;

  int sample_index_at(double t, double tol = 1e-9) const;  // -1 if absent
  double max_drift_residual() const;
};

// Generic flow problem: everything the integrator needs, backend-agnostic.
struct FlowProblem {
  int state_dim = 0;
  std::function<Vec(const Vec&)> field;
  std::function<void(Vec&)> project;  // may be empty (flat backends)
  std::function<double(const Vec&)> moment;
  double a_h = 0.0;
  std::optional<double> singular_time;
  std::vector<std::array<int, 2>> neighbor_pairs;  // for reseed flagging
};

// --- flow field construction -------------------------------------------------

// The field I(alpha xi^#) with alpha = <a_H, xi_0> / g(xi^#, xi^#), evaluated
// through the model's callbacks (quotient backends project internally).
// Vanishing generators throw FixedPointHitError.
Vec flow_field_at(const AmbientModel& model, const Vec& p);

// Derivative of the subtorus action on representatives at the identity
// (tangent to the level set, generally not horizontal).
Vec ale_generator_lift(const ale::AleParams& params, const SubtorusAction& action,
                       const ale::QuotientPoint& p);

// Real-slice state layout [z_0..z_n, w_0..w_n]; the flow field of the
// subtorus action computed by projecting the generator off the gauge orbit.
Vec ale_flow_field_real(const ale::AleParams& params, const SubtorusAction& action,
                        const Vec& state);
double ale_moment_real(const ale::AleParams& params, const SubtorusAction& action,
                       const Vec& state);

Vec real_state_of(const ale::QuotientPoint& p);
ale::QuotientPoint point_of_real_state(const ale::AleParams& params, const Vec& state);

// Ambient evaluator bundles for the quotient backend: one on representatives
// (evaluators act on lifts through horizontal projection) and one on a
// vertex chart (metric sampled through lifts).
AmbientModel ale_rep_ambient(const ale::AleParams& params, const SubtorusAction& action);
AmbientModel ale_chart_ambient(const ale::AleParams& params,
                               const SubtorusAction& action, int k0);

// --- seeding -----------------------------------------------------------------

// The section of the moment polygon cut by the level line a x + b y = cbar.
struct LevelSection {
  bool is_segment = false;     // otherwise a ray
  std::array<double, 2> y_range{};  // finite ends (segment) or [y_edge, cap]
  std::vector<int> crossed_edges;
  double x_at(double y) const { return a_ == 0.0 ? y : (cbar_ - b_ * y) / a_; }
  double a_ = 1.0, b_ = 0.0, cbar_ = 0.0;  // line coefficients (internal)
};

LevelSection level_line_section(const ale::AleParams& params,
                                const SubtorusAction& action, double cbar,
                                double ray_cap = 6.0);

struct AleSeeds {
  std::vector<Vec> states;             // real-slice states
  std::vector<ale::Sheet> sheets;      // sheet tag per seed
  std::vector<std::array<int, 2>> neighbor_pairs;
};

// Deterministic seeds on all four real-slice sheets of the initial level set.
AleSeeds ale_level_seeds(const ale::AleParams& params, const SubtorusAction& action,
                         double c0, int per_sheet, std::uint64_t seed,
                         double edge_margin = 1e-3);

// --- integration ----------------------------------------------------------------

// RK4 with per-step projection; the time grid is state-independent, clamps
// onto requested record times, refines toward a known singular time and
// halts at (1 - stop_margin) x singular time or at the horizon. Projection
// failures throw ProjectionFailureError; trajectories entering a vanishing
// generator throw FixedPointHitError.
FlowTrajectory integrate_flow(const FlowProblem& problem, double c0, double horizon,
                              const IntegratorConfig& cfg,
                              const std::vector<Vec>& seeds,
                              const std::vector<double>& record_times = {});

FlowTrajectory integrate_flow(const flat::ShrinkerModel& model, double c0,
                              double horizon, const IntegratorConfig& cfg,
                              const std::vector<Vec>& seeds,
                              const std::vector<double>& record_times = {});

FlowTrajectory integrate_flow(const flat::TranslatorModel& model, double c0,
                              double horizon, const IntegratorConfig& cfg,
                              const std::vector<Vec>& seeds,
                              const std::vector<double>& record_times = {});

FlowTrajectory integrate_flow(const ale::AleParams& params, const SubtorusAction& action,
                              double c0, double horizon, const IntegratorConfig& cfg,
                              const AleSeeds& seeds,
                              const std::vector<double>& record_times = {});

// First positive vertex-crossing time of the drifting level, if any.
std::optional<double> first_singular_time(const ale::AleParams& params,
                                          const SubtorusAction& action, double c0);

// --- product immersion -----------------------------------------------------------

struct ImmersionCloud {
  std::vector<Vec> points;  // ambient coordinates (flat) or representatives (quotient)
  std::vector<int> seed_index;
  std::vector<double> fiber_param;
};

ImmersionCloud product_immersion(const flat::ShrinkerModel& model,
                                 const FlowTrajectory& traj, double t,
                                 int fiber_samples);
ImmersionCloud product_immersion(const flat::TranslatorModel& model,
                                 const FlowTrajectory& traj, double t,
                                 int fiber_samples);
ImmersionCloud product_immersion(const ale::AleParams& params,
                                 const SubtorusAction& action,
                                 const FlowTrajectory& traj, double t,
                                 int fiber_samples);

// Worker count: LMCF_THREADS override, hardware concurrency otherwise.
int worker_count();

}  // namespace lmcf::flow

#endif
