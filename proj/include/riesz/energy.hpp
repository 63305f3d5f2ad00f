#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "riesz/geometry.hpp"
#include "riesz/neighbors.hpp"
#include "riesz/weights.hpp"

namespace riesz {

/// Two interacting points (nearly) coincide; the kernel is singular there.
class DegenerateConfiguration : public std::runtime_error {
 public:
  DegenerateConfiguration() : std::runtime_error("degenerate configuration") {}
};

struct EnergyBreakdown {
  double total = 0.0;
  /// Unordered pairs with 0 < u <= r_N whose kernel term was evaluated.
  std::uint64_t pair_terms_evaluated = 0;
  /// Distance evaluations spent finding them (grid build plus filtering).
  std::uint64_t candidate_distance_evals = 0;
};

/// Lower triangle (row >= col) of the symmetric (N p) x (N p) Hessian.
struct SparseHessian {
  struct Entry {
    std::size_t row;
    std::size_t col;
    double value;
  };
  std::size_t dim = 0;
  std::vector<Entry> entries;

  std::vector<double> multiply(std::span<const double> v) const;
  std::vector<double> to_dense() const;  // row-major, for small problems
};

/// Parallelism knobs shared by the evaluators. With `deterministic` set the
/// traversal is single-threaded and results are bit-reproducible.
struct ExecPolicy {
  bool deterministic = true;
  std::size_t threads = 0;  // 0: RIESZ_THREADS or hardware concurrency
};

/// Threads an evaluation may use under `policy`.
std::size_t resolve_threads(const ExecPolicy& policy);

/// Sum over ordered pairs i != j of w(x_i, x_j) |x_i - x_j|^{-s}, no cutoff,
/// by a direct double loop. Serves as the oracle for the truncated paths.
double energy_full(const Configuration& config, const Manifold& manifold,
                   const RieszParams& params, const ExecPolicy& policy = {});

/// Truncated energy
///   sum_{i != j} Phi(u / r_N(x_i, x_j)) w(x_i, x_j) u^{-s},  u = |x_i - x_j|,
/// over grid-enumerated pairs within sup r_N. `n_schedule` is the N that
/// enters the radius schedule (normally config.size()).
EnergyBreakdown energy_truncated(const Configuration& config, const Manifold& manifold,
                                 const RieszParams& params, std::size_t n_schedule,
                                 const ExecPolicy& policy = {});

/// The same truncated energy by an O(N^2) loop over all pairs.
EnergyBreakdown energy_truncated_bruteforce(const Configuration& config,
                                            const Manifold& manifold,
                                            const RieszParams& params, std::size_t n_schedule,
                                            const ExecPolicy& policy = {});

/// Ambient gradient of the truncated energy, length N p, point-major.
std::vector<double> gradient_truncated(const Configuration& config, const Manifold& manifold,
                                       const RieszParams& params, std::size_t n_schedule,
                                       const ExecPolicy& policy = {});

/// Ambient Hessian of the truncated energy. Requires a Poly(k >= 3) cutoff
/// and a pair-independent radius.
SparseHessian hessian_truncated(const Configuration& config, const Manifold& manifold,
                                const RieszParams& params, std::size_t n_schedule);

/// Result of one evaluation through an EnergyEvaluator.
struct Evaluation {
  EnergyBreakdown energy;
  std::vector<double> gradient;  // empty unless requested
  /// max_i sum_j |pair force on i|: the scale against which cancellation in
  /// the gradient is judged.
  double force_scale = 0.0;
  bool rebuilt = false;
};

/// Reusable evaluator that caches a Verlet-style candidate list.
///
/// The list is built at radius 2 r (skin r) and rebuilt once any point has
/// moved at least r / 2 since the last build, so no pair within r can be
/// missed. `paranoid` rebuilds on every call.
class EnergyEvaluator {
 public:
  EnergyEvaluator(const Manifold& manifold, const RieszParams& params, std::size_t n_schedule,
                  ExecPolicy policy = {}, bool paranoid = false);

  Evaluation evaluate(const Configuration& config, bool with_gradient);

  double radius() const { return radius_; }
  std::size_t rebuild_count() const { return rebuilds_; }

 private:
  const Manifold& manifold_;
  const RieszParams& params_;
  std::size_t n_;
  ExecPolicy policy_;
  bool paranoid_;
  double radius_;
  std::vector<double> box_;
  PairList list_;
  bool have_list_ = false;
  std::size_t rebuilds_ = 0;
};

}  // namespace riesz
