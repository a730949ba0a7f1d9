// Shared numerical substrate: small vector types, finite-difference
// differentials, frame orthonormalization and the evaluator-based ambient
// geometry contract every backend (flat or quotient) satisfies.
#ifndef LMCF_GEOMETRY_CORE_HPP
#define LMCF_GEOMETRY_CORE_HPP

#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lmcf {

using Vec = std::vector<double>;
using Cplx = std::complex<double>;
using CVec = std::vector<Cplx>;

// ---------------------------------------------------------------------------
// Error taxonomy. Every throwing operation documents which of these it uses.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericalDomainError : Error { using Error::Error; };
struct DegenerateFrameError : Error { using Error::Error; };
struct DimensionError       : Error { using Error::Error; };
struct OutsideDomainError   : Error { using Error::Error; };
struct EmptyLevelError      : Error { using Error::Error; };
struct OutsidePolygonError  : Error { using Error::Error; };
struct CorruptPointError    : Error { using Error::Error; };
struct BoundaryAmbiguityError : Error {
  double distance;
  BoundaryAmbiguityError(const std::string& msg, double d) : Error(msg), distance(d) {}
};
struct OutsideChartError    : Error { using Error::Error; };
struct FixedPointHitError   : Error { using Error::Error; };
struct ProjectionFailureError : Error { using Error::Error; };
struct OnFixedLevelError    : Error { using Error::Error; };
struct EmptyWindowError     : Error { using Error::Error; };
struct ConfigError          : Error { using Error::Error; };

// ---------------------------------------------------------------------------
// Small vector helpers (dense, tiny sizes; Eigen is used where factorizations
// are needed, these cover the hot ad-hoc arithmetic).
// ---------------------------------------------------------------------------

double dot(const Vec& a, const Vec& b);
double norm(const Vec& a);
Vec operator+(const Vec& a, const Vec& b);
Vec operator-(const Vec& a, const Vec& b);
Vec operator*(double s, const Vec& a);
Vec& axpy(Vec& y, double s, const Vec& x);  // y += s*x

bool all_finite(const Vec& a);
bool all_finite(const CVec& a);

// Real <-> complex layout: a point of C^d is stored as 2d reals
// [Re z1, Im z1, Re z2, Im z2, ...].
CVec to_complex(const Vec& re);
Vec to_real(const CVec& z);

// ---------------------------------------------------------------------------
// Deterministic random streams. std::normal_distribution is not pinned across
// standard libraries, so sampling goes through explicit transforms of the
// mt19937_64 stream.
// ---------------------------------------------------------------------------

class DetRng {
 public:
  explicit DetRng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}
  double uniform();                 // [0, 1)
  double uniform(double a, double b);
  double normal();                  // Box-Muller on the uniform stream
  int uniform_int(int lo, int hi);  // inclusive
  Vec normal_vec(std::size_t n);
  Vec sphere_point(std::size_t n);  // uniform on S^{n-1}

 private:
  std::uint64_t next_u64();
  std::uint64_t state_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

// A finite complex vector; throws NumericalDomainError on NaN/Inf entries.
struct ComplexVector {
  CVec entries;
  explicit ComplexVector(CVec e);
  std::size_t size() const { return entries.size(); }
};

// A point of the quaternionic vector space C^m x C^m, stored as the (z, w)
// pair of equal-length complex vectors.
struct QuaternionicPoint {
  CVec z;
  CVec w;
  QuaternionicPoint(CVec z_in, CVec w_in);
  std::size_t size() const { return z.size(); }
};

// Evaluator-based ambient geometry: a Calabi-Yau stage with a 1-parameter
// abelian symmetry and its moment map. All evaluators are pure; the quotient
// backend implements them through horizontal lifts, so nothing here may
// assume a globally precomputed metric.
struct AmbientModel {
  int complex_dim = 0;  // number of holomorphic volume slots
  int point_dim = 0;    // real length of point/tangent vectors
  int dim_h = 1;        // dimension of the acting group (shipped backends: 1)

  std::function<double(const Vec& p, const Vec& u, const Vec& v)> metric_at;
  std::function<Vec(const Vec& p, const Vec& v)> cplx_I1_at;
  std::function<double(const Vec& p, const Vec& u, const Vec& v)> omega1_at;
  // Holomorphic volume form evaluated on complex_dim tangent vectors.
  std::function<Cplx(const Vec& p, const std::vector<Vec>& frame)> hol_volume_at;
  // Generator of the action for the Lie-algebra element s * xi_0.
  std::function<Vec(const Vec& p, double s)> action_generator_at;
  // Moment map in the dual basis (size dim_h).
  std::function<Vec(const Vec& p)> moment_at;
  // Phase weight of the holomorphic volume form under the action, i.e. the
  // a_H of the drift law c_t = c_0 - t a_H (size dim_h).
  Vec a_h;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// Default step scaling for finite differences: h = 1e-4 * (1 + |p|).
double fd_default_step(const Vec& p);

// 4th-order central difference of a scalar map along direction v.
// Throws NumericalDomainError if f returns a non-finite value on the stencil.
double fd_directional_derivative(const std::function<double(const Vec&)>& f,
                                 const Vec& p, const Vec& v, double h);

// Same for vector-valued maps (componentwise stencil).
Vec fd_directional_derivative(const std::function<Vec(const Vec&)>& f,
                              const Vec& p, const Vec& v, double h);

// Scalar convenience overload on the real line.
double fd_directional_derivative(const std::function<double(double)>& f,
                                 double p, double v, double h);

// Richardson-extrapolated variant (combines the h and h/2 stencils).
double fd_derivative_richardson(const std::function<double(const Vec&)>& f,
                                const Vec& p, const Vec& v, double h);
Vec fd_derivative_richardson(const std::function<Vec(const Vec&)>& f,
                             const Vec& p, const Vec& v, double h);

// 2nd directional derivative (4th-order stencil), used by curvature oracles.
Vec fd_second_derivative(const std::function<Vec(const Vec&)>& f,
                         const Vec& p, const Vec& v, double h);
// Mixed second derivative d^2/(ds dt) f(p + s u + t v) at s = t = 0.
Vec fd_mixed_second_derivative(const std::function<Vec(const Vec&)>& f,
                               const Vec& p, const Vec& u, const Vec& v, double h);

// Gram-Schmidt with respect to an arbitrary inner product. Rank deficiency
// (smallest Gram eigenvalue below rank_tol relative to the largest) throws
// DegenerateFrameError.
std::vector<Vec> gram_orthonormalize(
    const std::vector<Vec>& vectors,
    const std::function<double(const Vec&, const Vec&)>& inner,
    double rank_tol = 1e-10);

// | |Omega(frame)| - 1 | for an orthonormal frame; diagnostic, never throws.
double check_calabi_yau_normalization(const AmbientModel& model, const Vec& p,
                                      const std::vector<Vec>& frame);

}  // namespace lmcf

#endif
