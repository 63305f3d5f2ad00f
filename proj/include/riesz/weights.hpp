#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "riesz/geometry.hpp"

namespace riesz {

class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Density sigma (probability density w.r.t. H_d on the manifold)
// ---------------------------------------------------------------------------

/// Value, gradient and Hessian of a scalar field at one ambient point. Only
/// the leading p entries / p*p block are meaningful.
struct FieldJet {
  double value = 0.0;
  std::vector<double> grad;  // size p
  std::vector<double> hess;  // size p*p, row-major
};

/// Probability density on a manifold. Normalization is applied at
/// construction, so ∫_A sigma dH_d = 1 always holds.
class Density {
 public:
  /// An unset density; only valid where no density is consulted (Unit mode).
  Density() = default;
  /// sigma = 1 / H_d(A).
  static Density uniform(const Manifold& m);
  /// sigma ∝ a + b z^2 on a Sphere2 (z = last coordinate). Requires a > 0 and
  /// a + b R^2 > 0 so the density stays bounded away from zero.
  static Density zpoly(const Manifold& m, double a, double b);

  bool is_set() const { return p_ != 0; }
  bool is_uniform() const { return b_ == 0.0; }
  double a() const { return a_; }
  double b() const { return b_; }

  double operator()(std::span<const double> x) const;
  FieldJet jet(std::span<const double> x) const;

  double sigma_min() const { return min_; }
  double sigma_max() const { return max_; }

  /// Probability mass of the sphere slab z ∈ [z0, z1] (closed form).
  /// For non-sphere manifolds only the uniform density supports this.
  double slab_mass(double z0, double z1) const;

 private:
  std::size_t p_ = 0;
  double a_ = 0.0;  // normalized coefficients: sigma = a_ + b_ z^2
  double b_ = 0.0;
  double sphere_radius_ = 0.0;
  double min_ = 0.0, max_ = 0.0;
};

// ---------------------------------------------------------------------------
// Cutoff Phi
// ---------------------------------------------------------------------------

struct HardCutoff {};
/// Phi(t) = (1 - t^2)^k on [0, 1).
struct PolyCutoff {
  int order = 3;
};
using CutoffSpec = std::variant<HardCutoff, PolyCutoff>;

struct CutoffValue {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// Phi and its first two derivatives at t > 0. The hard cutoff is treated as
/// piecewise constant, so its derivatives are zero everywhere.
CutoffValue eval_cutoff(const CutoffSpec& c, double t);
bool cutoff_is_smooth(const CutoffSpec& c);
std::string describe(const CutoffSpec& c);

// ---------------------------------------------------------------------------
// Radius schedule r_N
// ---------------------------------------------------------------------------

/// r_N = c N^{-1/d}. Does not satisfy r_N N^{1/d} -> inf; diagnostic only.
struct ConstRadius {
  double scale = 1.0;
};
/// r_N = c (ln N) N^{-1/d}.
struct LogRadius {
  double scale = 1.0;
};
/// Symmetric r_N(x, y). `value` returns r and writes ∂r/∂x into `grad_x`
/// (may be empty when the caller only needs the value). `sup` bounds every
/// value and sizes the neighbor grid; `floor` is the lower envelope.
struct PairRadius {
  std::function<double(std::span<const double> x, std::span<const double> y,
                       std::size_t n, std::span<double> grad_x)>
      value;
  std::function<double(std::size_t n)> sup;
  std::function<double(std::size_t n)> floor;
};
using RadiusSchedule = std::variant<ConstRadius, LogRadius, PairRadius>;

/// Scheduled radius for a pair-independent schedule (or the supremum of a
/// PairRadius). Throws ParameterError for n < 2.
double eval_radius(const RadiusSchedule& r, std::size_t d, std::size_t n);
/// Pair-dependent evaluation; falls back to eval_radius when the schedule
/// does not depend on the points. `grad_x` receives ∂r/∂x when non-empty.
double eval_radius(const RadiusSchedule& r, std::size_t d, std::size_t n,
                   std::span<const double> x, std::span<const double> y,
                   std::span<double> grad_x = {});
bool radius_is_pairwise(const RadiusSchedule& r);
/// True when r_N N^{1/d} -> inf along the schedule (Const is diagnostic only).
bool radius_is_admissible(const RadiusSchedule& r);

// ---------------------------------------------------------------------------
// Full kernel specification
// ---------------------------------------------------------------------------

enum class WeightMode { Unit, FromDensity };

struct RieszParams {
  double s = 0.0;
  std::size_t d = 0;
  CutoffSpec cutoff = PolyCutoff{3};
  RadiusSchedule radius = LogRadius{1.0};
  Density density;
  WeightMode weight_mode = WeightMode::Unit;

  /// Checks s > d and the density bounds.
  void validate() const;
};

/// w(x, y): 1 in Unit mode, (sigma(x) sigma(y))^{-s/(2d)} otherwise.
double eval_weight(const RieszParams& params, std::span<const double> x,
                   std::span<const double> y);

/// Per-site factor g with w(x, y) = g(x) g(y). Unit mode gives g ≡ 1.
FieldJet site_factor(const RieszParams& params, std::span<const double> x);

}  // namespace riesz
