// Flat-space model families: the weighted circle action on C^d whose
// invariant level sets evolve as self-shrinkers/expanders, and the line
// action on C^{d+1} producing translating solitons. Each family packages an
// AmbientModel plus the closed-form flow field on its special Lagrangian.
#ifndef LMCF_FLAT_MODELS_HPP
#define LMCF_FLAT_MODELS_HPP

#include "lmcf/geometry_core.hpp"

#include <cstdint>
#include <vector>

namespace lmcf::flat {

// Circle action z -> (z_1 e^{i l_1 t}, ..., z_d e^{i l_d t}) with nonzero
// integer weights; the invariant Lagrangian is R^d minus the origin.
struct ShrinkerModel {
  std::vector<int> weights;
  explicit ShrinkerModel(std::vector<int> w);
  int dim() const { return static_cast<int>(weights.size()); }
  int weight_sum() const;
};

// Line action z -> (z_1 e^{i l_1 t}, ..., z_d e^{i l_d t}, z_{d+1} + i t)
// with real weights (zero allowed); the invariant Lagrangian is R^{d+1}.
struct TranslatorModel {
  std::vector<double> weights;
  explicit TranslatorModel(std::vector<double> w);
  int dim() const { return static_cast<int>(weights.size()); }       // d
  int ambient_dim() const { return dim() + 1; }                      // d+1
  double weight_sum() const;
};

// Moment level, stored as the scalar coefficient in the dual basis in which
// the pairing with the generator is the identity.
struct LevelValue {
  double c = 0.0;
  LevelValue() = default;
  explicit LevelValue(double value);
};

// --- moment data ------------------------------------------------------------

// (1/2) sum_i l_i |z_i|^2
LevelValue shrinker_moment(const ShrinkerModel& model, const ComplexVector& z);
// sum_i l_i
LevelValue shrinker_a_h(const ShrinkerModel& model);

// (1/2) sum_i l_i |z_i|^2 + Re z_{d+1}
LevelValue translator_moment(const TranslatorModel& model, const ComplexVector& z);
LevelValue translator_a_h(const TranslatorModel& model);

// --- closed-form flow fields on the invariant Lagrangian ---------------------

// (-sum l_i / sum l_i^2 x_i^2) * (l_1 x_1, ..., l_d x_d); x = 0 is outside
// the Lagrangian and throws OutsideDomainError.
Vec shrinker_flow_field(const ShrinkerModel& model, const Vec& x);

// (-sum l_i / (1 + sum l_i^2 x_i^2)) * (l_1 x_1, ..., l_d x_d, 1)
Vec translator_flow_field(const TranslatorModel& model, const Vec& x);

// Soliton coefficient -sum l_i / (2 c): negative for self-shrinkers,
// positive for self-expanders, zero for minimal level sets. The singular
// cone level c = 0 throws OutsideDomainError.
double shrinker_alpha_c(const ShrinkerModel& model, const LevelValue& c);

// Translation direction (0, ..., 0, -sum l_i) of the soliton identity.
Vec translator_direction(const TranslatorModel& model);

// --- level-set sampling -------------------------------------------------------

// Deterministically seeded samples of the moment level set inside the
// invariant Lagrangian; moment residual below 1e-12 per point. Empty levels
// throw EmptyLevelError.
std::vector<Vec> level_set_sample(const ShrinkerModel& model, const LevelValue& c,
                                  int count, std::uint64_t seed);
std::vector<Vec> level_set_sample(const TranslatorModel& model, const LevelValue& c,
                                  int count, std::uint64_t seed);

// --- ambient evaluator bundles ------------------------------------------------

// Standard flat Calabi-Yau structure on C^m with the model's action.
AmbientModel shrinker_ambient(const ShrinkerModel& model);
AmbientModel translator_ambient(const TranslatorModel& model);

// Generator of the circle/line action at an ambient point (real layout).
Vec shrinker_generator(const ShrinkerModel& model, const Vec& point);
Vec translator_generator(const TranslatorModel& model, const Vec& point);

}  // namespace lmcf::flat

#endif
