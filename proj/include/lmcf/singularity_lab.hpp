// Singularity analysis of the quotient flows: closed-form singular time
// schedules, case classification of the drifting level line, blow-up
// rescaling against the flat two-weight model, curvature blow-up statistics
// and the component census of the initial level set.
#ifndef LMCF_SINGULARITY_LAB_HPP
#define LMCF_SINGULARITY_LAB_HPP

#include "lmcf/ale_quotient.hpp"
#include "lmcf/curvature_oracle.hpp"
#include "lmcf/flat_models.hpp"
#include "lmcf/flow_engine.hpp"
#include "lmcf/geometry_core.hpp"

#include <array>
#include <limits>
#include <vector>

namespace lmcf::sing {

enum class CaseTag {
  slope_positive,      // a > 0, b/a > 0: increasing vertex times, ray section
  slope_intermediate,  // a > 0, -(n+1) < b/a < 0 nonintegral: unimodal times
  slope_steep,         // a > 0, b/a < -(n+1): decreasing vertex times
  static_flow          // a = 0
};

struct SingularSchedule {
  CaseTag tag = CaseTag::static_flow;
  std::vector<double> times;  // vertex crossing times t_0..t_n
  int first_hit_vertex = -1;  // argmin of the positive crossing times
  double first_hit_time = std::numeric_limits<double>::infinity();
  int m0 = -1;  // peak index (intermediate case), from exact integer arithmetic
  int i0 = -1, j0 = -1;          // entry/exit edge indices (intermediate case)
  int crossing_edge_entry = -1;  // edge crossed by the initial level line
  int crossing_edge_exit = -1;   // second crossing for segment sections
  bool empty_level = false;      // intermediate case with negative peak time
};

struct BlowupWeights {
  int lambda1;
  int lambda2;
  int k0;
  flat::ShrinkerModel blowup_model() const { return flat::ShrinkerModel({lambda1, lambda2}); }
};

struct RescaledSlice {
  double t = 0.0;
  double tau = 0.0;  // singular time minus t
  std::vector<std::array<double, 2>> points;  // rescaled real chart coordinates
  double quadric_distance = 0.0;  // symmetric max-min distance to the limit quadric
  std::array<int, 2> weights{};
  int trajectory_points = 0;  // how many came from flow samples vs reseeding
};

struct TypeIEntry {
  double t;
  double tau;
  double sup_second_fundamental;
  double product;  // sup |A| * sqrt(tau)
};

struct TypeIStatistic {
  int k0 = -1;
  double radius_factor = 0.0;
  std::vector<TypeIEntry> series;
};

struct ComponentCensus {
  CaseTag tag = CaseTag::static_flow;
  bool is_segment = false;
  std::vector<int> crossed_edges;
  std::vector<std::vector<ale::Sheet>> components;
  enum class Topology { line, circle } topology = Topology::line;
  std::array<int, 2> deck_element{1, 1};  // real torus element identified by the fiber
};

// --- schedule -----------------------------------------------------------------

// Vertex crossing times of the drifting level; throws OnFixedLevelError when
// the initial level passes through a vertex image.
SingularSchedule singular_times(const ale::AleParams& params,
                                const flow::SubtorusAction& action, double c0);

// Chart rotation weights at the singular vertex; the flat blow-up model.
BlowupWeights blowup_weights(int n, const flow::SubtorusAction& action, int k0);

// --- rescaling ------------------------------------------------------------------

// Level-curve point in the vertex chart along a given real direction, solved
// radially on the reduced moment. Throws EmptyWindowError when the direction
// carries no level point within the radial cap.
std::array<double, 2> chart_level_point(const ale::AleParams& params,
                                        const flow::SubtorusAction& action, int k0,
                                        double cbar, const std::array<double, 2>& dir,
                                        double radial_cap = 4.0);

// Flow samples near the singular vertex mapped through the chart and divided
// by sqrt(tau); topped up with direct level solves when the trajectory is
// sparse inside the window. Distance is measured against the limit quadric
// restricted to the real slice, on the window |v| <= window.
RescaledSlice rescaled_slice(const ale::AleParams& params,
                             const flow::SubtorusAction& action,
                             const flow::FlowTrajectory& traj, double t, int k0,
                             int sample_count, double window = 5.0);

// --- curvature statistics ---------------------------------------------------------

// sup |A| over the chart ball of radius sqrt(tau) * R meeting the immersed
// level, for each requested time; products sup|A| sqrt(tau).
TypeIStatistic type_one_statistic(const ale::AleParams& params,
                                  const flow::SubtorusAction& action,
                                  const flow::FlowTrajectory& traj, int k0,
                                  double radius_factor,
                                  const std::vector<double>& times);

// Flat calibration: the same statistic for the two-weight model around the
// level extinction, with the origin as center.
TypeIStatistic flat_type_one_statistic(const flat::ShrinkerModel& model, double c0,
                                       double radius_factor,
                                       const std::vector<double>& times);

// --- census ---------------------------------------------------------------------

ComponentCensus component_census(const ale::AleParams& params,
                                 const flow::SubtorusAction& action, double c0);

}  // namespace lmcf::sing

#endif
