// The A_n multi-center gravitational instanton realized as a computable
// hyperKahler quotient of flat quaternionic space: moment-map levels, the
// quotient metric through horizontal lifts, the residual torus action with
// its moment polygon, isotropy strata, holomorphic vertex charts, the real
// involution and the topology of its fixed surface.
#ifndef LMCF_ALE_QUOTIENT_HPP
#define LMCF_ALE_QUOTIENT_HPP

#include "lmcf/geometry_core.hpp"

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace lmcf::ale {

// Resolution parameters: n >= 1 and positive level coefficients alpha_i.
// The cumulative offsets h_0 < h_1 < ... < h_n (h_i = h_{i-1} + alpha_i)
// drive every closed-form formula below; h_0 is a free gauge, default 0.
struct AleParams {
  int n;
  std::vector<double> alpha;
  double h0;
  std::vector<double> h;  // size n+1, strictly increasing

  AleParams(int n_in, std::vector<double> alpha_in, double h0_in = 0.0);
  static AleParams uniform(int n_in, double spacing = 1.0, double h0_in = 0.0);
};

enum class Gauge { generic, real_slice };

// A point of the quotient, carried by an explicit representative on the
// moment level together with a gauge certificate.
struct QuotientPoint {
  QuaternionicPoint rep;
  Gauge gauge;
};

// Value of the quaternionic moment map in the reduced dual basis: n real
// components plus n complex components.
struct HyperkahlerMoment {
  Vec real_part;   // size n
  CVec cplx_part;  // size n
};

struct RegularValueReport {
  bool regular;
  std::vector<std::pair<int, int>> violated_walls;  // (i, j) index pairs
};

// One boundary edge of the moment polygon. Edges are indexed 0..n+1; edge k
// lies on x = (n+1-k) y + sum_{i>=k} h_i. Edges 0 and n+1 are unbounded.
struct PolygonEdge {
  int k;
  int slope_num;  // dy/dx as a reduced rational; vertical edge is [1, 0]
  int slope_den;
  std::array<double, 2> upper;  // endpoint with larger y (finite ones only)
  std::array<double, 2> lower;
  bool unbounded_up;
  bool unbounded_down;
};

struct MomentPolygon {
  int n;
  std::vector<double> h;
  std::vector<std::array<double, 2>> vertices;  // v_0..v_n
  std::vector<PolygonEdge> edges;               // l_0..l_{n+1}

  // Smallest admissible x at height y (the boundary profile).
  double x_min(double y) const;
  bool contains(double x, double y, double tol = 1e-12) const;
  double distance_to_edge(int k, double x, double y) const;
  double distance_to_vertex(int k, double x, double y) const;
};

// The four components of the real slice and how they glue across the
// polygon edges; holes/genus follow from the glued cell complex.
struct FixedSurfaceAtlas {
  std::array<std::string, 4> sheets;  // "++", "-+", "+-", "--"
  // gluing[k] lists the two sheet pairs identified along edge k.
  std::vector<std::array<std::array<int, 2>, 2>> gluing;
};

struct SurfaceTopology {
  int genus;
  int holes;
  int euler_characteristic;
  FixedSurfaceAtlas atlas;
};

// Which of the four real-slice sheets a representative is constructed on;
// the label doubles as the residual real torus element applied to the base
// (all-positive) representative.
enum class Sheet { PP = 0, MP = 1, PM = 2, MM = 3 };
std::array<int, 2> sheet_signs(Sheet s);  // (g0, g1) in {+1,-1}^2
Sheet sheet_times(Sheet s, const std::array<int, 2>& g);

enum class StratumKind { interior, edge, vertex };

struct IsotropyStratum {
  StratumKind kind;
  int k;               // edge or vertex index; -1 for interior
  int subtorus_p0;     // generator coefficients of the stabilizer subtorus
  int subtorus_p1;     // (0,0) for trivial; full torus at vertices
  bool full_torus;
};

// --- moment maps and levels --------------------------------------------------

HyperkahlerMoment mu_k(int n, const QuaternionicPoint& p);

// Regularity of a target level: a level is critical exactly when all three
// components pair to zero against some coordinate-difference direction.
RegularValueReport is_regular_value(const AleParams& params,
                                    const HyperkahlerMoment& target);

MomentPolygon polygon(const AleParams& params);

// Reduced torus moment (x, y); throws CorruptPointError when the per-index
// spread of the y-readings exceeds 1e-10.
std::array<double, 2> mu_g(const AleParams& params, const QuotientPoint& p);

// Invert the moment pair inside the polygon on the chosen real-slice sheet.
// (x, y) outside the polygon throws OutsidePolygonError; a non-converging
// radial solve throws NumericalDomainError.
QuotientPoint solve_level(const AleParams& params, double x, double y,
                          Sheet sheet = Sheet::PP);

// Validates the level-set residuals of a representative (tolerance 1e-10)
// and tags the gauge; throws CorruptPointError on violation.
QuotientPoint make_point(const AleParams& params, CVec z, CVec w);

// --- isotropy and charts -----------------------------------------------------

// Stratum classification by polygon position, cross-checked against the
// zero pattern of the representative. Distances inside (1e-9, 1e-6) of a
// boundary stratum throw BoundaryAmbiguityError carrying the distance.
IsotropyStratum isotropy(const AleParams& params, const QuotientPoint& p);

// The vertex fixed point below edge k (image of polygon vertex v_k).
QuotientPoint vertex_point(const AleParams& params, int k);

// Holomorphic coordinates around vertex_point(k0); points outside the chart
// domain throw OutsideChartError.
std::array<Cplx, 2> local_chart(const AleParams& params, int k0,
                                const QuotientPoint& p);

// Chart inverse: reconstructs a representative from (u1, u2) and normalizes
// it back onto the moment level by a positive gauge transformation.
QuotientPoint chart_inverse(const AleParams& params, int k0, Cplx u1, Cplx u2);

// Horizontal lift of a chart tangent vector (chart layout: [Re u1, Im u1,
// Re u2, Im u2]) at a representative inside the chart domain; the lift is
// tangent to the level set and orthogonal to the gauge orbit.
Vec chart_lift(const AleParams& params, int k0, const QuotientPoint& at,
               const Vec& chart_tangent);

// --- quotient metric ----------------------------------------------------------

// Real coordinate layout of representatives and tangents: the z block then
// the w block, each complex-interleaved (total length 4(n+1)).
Vec point_coords(const QuaternionicPoint& p);
QuaternionicPoint coords_point(const Vec& v);

// Gauge-orbit generators at a representative (vertical directions).
std::vector<Vec> vertical_frame(const QuaternionicPoint& p);

// Project off the gauge orbit; independent of the level parameters.
Vec horizontal_project(const QuaternionicPoint& at, const Vec& v);

// Flat inner product of horizontal parts; the induced quotient metric on
// lifts. No level validation (usable on any free orbit, including the
// zero-level orbifold chart away from the origin).
double horizontal_inner(const QuaternionicPoint& at, const Vec& v1, const Vec& v2);

// Same with the level-set tangency of both lifts validated (residual 1e-8);
// violations and degenerate gauge orbits throw CorruptPointError.
double quotient_metric_at(const AleParams& params, const QuotientPoint& p,
                          const Vec& v1_lift, const Vec& v2_lift);

// Flat ambient structures on lifts.
Vec flat_I1(const Vec& v);
Vec flat_I2(const Vec& v);
double flat_omega1(const Vec& u, const Vec& v);
Cplx flat_omega_cplx(const Vec& u, const Vec& v);  // holomorphic symplectic form

// Level-set constraint values / Jacobian at a representative (3n rows; row
// order: the n real moment differences, then Re and Im of each product
// difference). Columns follow point_coords.
Vec constraint_values(const AleParams& params, const QuaternionicPoint& p);
std::vector<Vec> constraint_jacobian(const QuaternionicPoint& p);

// Real-slice versions for flow projection: state layout [z_0..z_n, w_0..w_n]
// (2(n+1) reals), 2n constraints.
Vec real_slice_constraints(const AleParams& params, const Vec& state);
std::vector<Vec> real_slice_jacobian(const Vec& state);

// --- involution and topology ---------------------------------------------------

// Entrywise conjugation of the representative.
QuotientPoint involution_sigma(const QuotientPoint& p);

// Apply a residual torus element (phases theta0, theta1).
QuotientPoint g_action(const QuotientPoint& p, double theta0, double theta1);

// Canonical gauge: phases averaged out of the representative; two
// representatives of the same point agree after this up to a residual
// (n+1)-st root of unity, which gauge_distance minimizes over.
QuotientPoint canonical_gauge(const QuotientPoint& p);
double gauge_distance(const QuotientPoint& a, const QuotientPoint& b);

SurfaceTopology fixed_surface_topology(const AleParams& params);

// --- serialization --------------------------------------------------------------

std::string polygon_to_json(const MomentPolygon& poly);
std::string atlas_to_json(const SurfaceTopology& topo);

}  // namespace lmcf::ale

#endif
