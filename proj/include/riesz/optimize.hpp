#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "riesz/energy.hpp"
#include "riesz/geometry.hpp"
#include "riesz/weights.hpp"

namespace riesz {

/// How the first trial step of each line search is chosen. Both rules cap
/// the move of the fastest point at step_fraction * r_N; BarzilaiBorwein
/// additionally shrinks the trial to the BB estimate when that is smaller.
enum class StepRule { Capped, BarzilaiBorwein };

struct OptimizerParams {
  std::size_t max_iters = 500;
  double armijo_c = 1e-4;
  double backtrack_factor = 0.5;
  /// First trial step moves the fastest point by step_fraction * r_N.
  double step_fraction = 0.1;
  StepRule step_rule = StepRule::BarzilaiBorwein;
  double rel_energy_tol = 1e-10;
  /// Stop once the largest projected gradient is below grad_tol times the
  /// largest per-point sum of absolute pair forces (cancellation level).
  double grad_tol = 1e-10;
  std::size_t max_backtracks = 40;
  bool deterministic = true;
  /// Rebuild the neighbor list on every evaluation.
  bool paranoid = false;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TraceRecord {
  std::size_t iter = 0;
  double energy = 0.0;
  double grad_norm = 0.0;  // max_i |projected gradient at x_i|
  double step = 0.0;
  std::size_t backtracks = 0;
};

enum class StopReason { MaxIterations, Converged, EnergyStalled, LineSearchFailed };
std::string to_string(StopReason r);

struct Trace {
  std::vector<TraceRecord> records;
  StopReason stop = StopReason::MaxIterations;
  bool line_search_failed = false;
  std::size_t grid_rebuilds = 0;
  std::size_t energy_evaluations = 0;
};

struct DescentResult {
  Configuration config;
  Trace trace;
};

/// Projected gradient descent with Armijo backtracking on the truncated
/// energy. Each iteration moves x_i <- project(x_i + alpha d_i) where d_i is
/// the tangent projection of -grad_i; alpha starts at
/// step_fraction * r_N / max_i |d_i| and is multiplied by backtrack_factor
/// until the Armijo condition holds. Accepted energies never increase.
///
/// `on_record` (optional) is called after every trace record.
DescentResult descend(Configuration config, const Manifold& manifold, const RieszParams& params,
                      const OptimizerParams& opt,
                      const std::function<void(const TraceRecord&)>& on_record = {});

}  // namespace riesz
