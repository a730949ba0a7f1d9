// Independent finite-difference verification of the geometric claims: mean
// curvature of immersed patches (flat ambient and sampled chart metric),
// Lagrangian angles, and the soliton identities. Everything here avoids the
// flow construction internals so the checks stay a second route.
#ifndef LMCF_CURVATURE_ORACLE_HPP
#define LMCF_CURVATURE_ORACLE_HPP

#include "lmcf/flat_models.hpp"
#include "lmcf/geometry_core.hpp"

#include <array>
#include <functional>
#include <vector>

namespace lmcf::oracle {

struct ImmersedPatch {
  std::function<Vec(const Vec&)> parametrization;   // u -> ambient point
  std::vector<std::array<double, 2>> domain;        // parameter box
  AmbientModel ambient;
  double fd_step = 0.0;  // 0: automatic scale
};

struct CurvatureReport {
  Vec point;
  Vec mean_curvature;
  Vec comparison;
  double relative_error;
};

struct SolitonKind {
  enum class Type { shrinker, translator } type;
  double alpha_c = 0.0;  // shrinker coefficient
  Vec direction;         // translator direction
  static SolitonKind shrinker(double alpha) {
    return SolitonKind{Type::shrinker, alpha, {}};
  }
  static SolitonKind translator(Vec u) {
    return SolitonKind{Type::translator, 0.0, std::move(u)};
  }
};

struct SolitonResidual {
  double max_relative;
  double max_absolute;            // max |H - comparison|
  double max_mean_curvature;      // max |H| over the grid
  std::vector<CurvatureReport> reports;
};

struct MeanCurvatureOptions {
  double h = 0.0;          // 0: automatic
  bool richardson = false; // combine h and h/2 stencils
};

// Numerical tangent frame (columns of the parametrization Jacobian). Throws
// DegenerateFrameError when the smallest singular value drops below 1e-8.
std::vector<Vec> tangent_frame(const ImmersedPatch& patch, const Vec& u,
                               double h = 0.0);

// Mean curvature vector of a patch in a flat ambient: the trace of the
// projected parameter Hessian with respect to the induced metric.
Vec mean_curvature_flat(const ImmersedPatch& patch, const Vec& u,
                        const MeanCurvatureOptions& opts = {});

// Same over a sampled ambient metric (vertex-chart backend): the ambient
// connection enters through centrally differenced Christoffel symbols.
// Documented accuracy tier: 1e-2 relative.
Vec mean_curvature_chart(const ImmersedPatch& patch, const Vec& u,
                         const MeanCurvatureOptions& opts = {});

// Norm of the full second fundamental form (flat / sampled ambient).
double second_fundamental_norm_flat(const ImmersedPatch& patch, const Vec& u,
                                    const MeanCurvatureOptions& opts = {});
double second_fundamental_norm_chart(const ImmersedPatch& patch, const Vec& u,
                                     const MeanCurvatureOptions& opts = {});

// Phase of the holomorphic volume form on the oriented orthonormal tangent
// frame, reported in (-pi, pi].
double lagrangian_angle(const ImmersedPatch& patch, const Vec& u);

// Wrap-aware distance between two angles.
double angle_distance(double a, double b);

// | |Omega(frame)| - 1 | on the patch's oriented orthonormal frame.
double volume_normalization_residual(const ImmersedPatch& patch, const Vec& u);

// Max soliton identity residual over a uniform parameter grid.
SolitonResidual soliton_residual(const ImmersedPatch& patch, const SolitonKind& kind,
                                 int grid_per_dim,
                                 const MeanCurvatureOptions& opts = {});

// --- canonical flat patches -----------------------------------------------------

// Orbit of the level curve of a two-weight circle model under the action:
// parameters (s, fiber angle). Level curves use trigonometric coordinates
// for definite weight pairs and hyperbolic ones for mixed pairs.
ImmersedPatch shrinker_surface_patch(const flat::ShrinkerModel& model, double c);

// Orbit of the level graph of a line-action model: parameters
// (x_1..x_d, fiber).
ImmersedPatch translator_graph_patch(const flat::TranslatorModel& model, double c);

// Classical fixtures for oracle calibration.
ImmersedPatch cylinder_patch(double radius);               // in C^3, real 3-space image
ImmersedPatch sphere_patch(double radius);                 // in C^3
ImmersedPatch affine_plane_patch(const Vec& origin, const std::vector<Vec>& span,
                                 int complex_dim);

}  // namespace lmcf::oracle

#endif
