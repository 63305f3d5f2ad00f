#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "riesz/energy.hpp"
#include "riesz/geometry.hpp"
#include "riesz/weights.hpp"

namespace riesz {

class MetricsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// delta(X) = min_{i != j} dist(x_i, x_j). Grid search with a doubling
/// radius; agrees with the brute-force minimum. Throws for N < 2.
double separation(const Configuration& config, const Manifold& manifold);

/// Monte Carlo lower bound for the covering radius rho(X, A): the largest
/// distance from `samples` uniform points of A to their nearest point of X.
/// Samples for a fixed seed are nested in `samples`, so the estimate is
/// non-decreasing in it.
double covering_radius_estimate(const Configuration& config, const Manifold& manifold,
                                std::size_t samples, std::uint64_t seed);

/// Truncated energy divided by N^{1 + s/d}.
double energy_ratio(const Configuration& config, const Manifold& manifold,
                    const RieszParams& params, std::size_t n_schedule);

/// Riemann zeta for s > 1 by direct summation plus an Euler-Maclaurin tail.
double riemann_zeta(double s);

/// Epstein zeta of the hexagonal lattice with minimal distance 1:
/// sum over nonzero v of |v|^{-s}, for s > 2.
double epstein_zeta_hex(double s);

struct TheoreticalLimit {
  std::optional<double> value;
  /// C_{s,d} alone, when known or conjectured.
  std::optional<double> constant;
  bool conjectured = false;
  std::string note;
};

/// C_{s,d} / [H_d^{s,w}(A)]^{s/d}, the limit of E / N^{1+s/d}. H^{s,w} is
/// H_d(A) for unit weights and 1 for density-derived weights. C_{s,1} =
/// 2 zeta(s) is exact; C_{s,2} is the hexagonal-lattice conjecture; d >= 3
/// has no value.
TheoreticalLimit theoretical_limit(double s, std::size_t d, const Manifold& manifold,
                                   WeightMode mode);

/// How the manifold is cut into bins for distribution checks.
///   Sphere2: `count` equal-width z-slabs, or explicit increasing `edges`
///            spanning [-R, R].
///   Circle:  `count` equal arcs in angle, or explicit angle `edges` on [0, 2 pi].
///   Shell:   4 equal-volume radial shells x 8 octants (count ignored).
///   Cube / Torus: `count` cells per axis.
struct BinSpec {
  std::size_t count = 10;
  std::vector<double> edges;
};

struct BinDeviation {
  std::string bin;
  double expected = 0.0;  // mass under the limit measure h_d^{s,w}
  double observed = 0.0;  // fraction of points
  double deviation = 0.0; // observed - expected
  double relative = 0.0;  // deviation / expected
};

/// Compares the empirical distribution of `config` with the limit measure
/// (sigma dH_d for density weights, normalized H_d for unit weights).
std::vector<BinDeviation> distribution_test(const Configuration& config,
                                            const Manifold& manifold, const RieszParams& params,
                                            const BinSpec& bins);

struct ZAudit {
  double delta = 0.0;
  std::uint64_t z = 0;        // ordered pairs within delta
  double bound = 0.0;         // delta^s E_s(omega), unit weights, no cutoff
  double slack = 0.0;         // bound - z
  double normalized = 0.0;    // z / (N C^d), C = delta N^{1/d}
  bool holds = true;
};

/// Checks Z(omega, delta) <= delta^s E_s(omega) and reports the normalized
/// pair count. `full_energy` may be supplied to skip the O(N^2) sum.
ZAudit audit_Z_bounds(const Configuration& config, const Manifold& manifold, double s,
                      double delta, std::optional<double> full_energy = std::nullopt);

struct MetricsOptions {
  std::size_t covering_samples = 0;  // 0: 50 N
  std::uint64_t seed = 1;
  BinSpec bins;
  std::vector<double> z_deltas;      // empty: {sup r_N}
  bool full_energy = true;           // O(N^2); skip for very large N
};

struct MetricsReport {
  std::size_t n = 0;
  std::size_t d = 0;
  double s = 0.0;
  std::string manifold;
  double radius = 0.0;
  bool radius_admissible = true;
  double separation = 0.0;
  double covering_estimate = 0.0;
  std::size_t covering_samples = 0;
  double mesh_ratio = 0.0;
  double scaled_separation = 0.0;
  double scaled_covering = 0.0;
  EnergyBreakdown energy;
  double energy_ratio = 0.0;
  std::optional<double> energy_full;
  std::optional<double> energy_full_ratio;
  TheoreticalLimit limit;
  std::vector<ZAudit> z_stats;
  std::vector<BinDeviation> distribution;
};

MetricsReport compute_metrics(const Configuration& config, const Manifold& manifold,
                              const RieszParams& params, const MetricsOptions& options);

/// Stable-key JSON serialization of a report (schema in README).
std::string to_json(const MetricsReport& report, int indent = 2);

}  // namespace riesz
