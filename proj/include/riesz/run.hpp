#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "riesz/geometry.hpp"
#include "riesz/metrics.hpp"
#include "riesz/optimize.hpp"
#include "riesz/weights.hpp"

namespace riesz {

/// Invalid or incomplete run configuration. `key()` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& msg)
      : std::runtime_error("config key '" + key + "': " + msg), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Malformed points file or points off the declared manifold.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct IoOptions {
  std::filesystem::path out_dir = ".";
  std::string points = "points.csv";
  std::string trace = "trace.csv";
  std::string report = "report.json";
  std::string bench = "bench.csv";
};

struct BenchOptions {
  bool brute = true;
};

struct RunConfig {
  Manifold manifold = Manifold::sphere(1.0);
  RieszParams riesz;
  OptimizerParams optimizer;
  MetricsOptions metrics;
  IoOptions io;
  BenchOptions bench;
  std::size_t n = 0;
  std::vector<std::size_t> n_list;
  std::uint64_t seed = 1;
  bool deterministic = true;
};

/// Parses an INI-style file: `key = value` lines, `#`/`;` comments and
/// optional [run] [manifold] [riesz] [optimizer] [metrics] [io] [bench]
/// sections. Keys outside any section are placed by name; `radius` exists in
/// both [manifold] and [riesz] and must be sectioned. Unknown keys, missing
/// required keys (`manifold`, `s`) and invalid values raise ConfigError.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);

/// Applies command-line overrides and re-derives dependent settings.
void apply_overrides(RunConfig& cfg, std::optional<std::uint64_t> seed, bool deterministic,
                     const std::optional<std::filesystem::path>& out_dir);

void write_points(const std::filesystem::path& path, const Configuration& config);
/// Reads a points CSV with header x,y[,z] sized for `manifold`. Throws
/// InputError naming the line. Membership is not checked here.
Configuration read_points(const std::filesystem::path& path, const Manifold& manifold);
void write_trace(const std::filesystem::path& path, const Trace& trace);

struct GenerateOutput {
  Configuration config;
  Trace trace;
  MetricsReport report;
};

/// Samples N uniform points, runs the descent, writes points, trace and report.
GenerateOutput cmd_generate(const RunConfig& cfg);

/// Reads a points file, checks membership (1e-9) and writes the report.
MetricsReport cmd_metrics(const RunConfig& cfg, const std::filesystem::path& points);

struct BenchRow {
  std::size_t n = 0;
  double radius = 0.0;
  std::uint64_t pairs_truncated = 0;   // unordered pairs with u <= r_N
  std::uint64_t z = 0;                 // ordered pairs, Z(omega, r_N)
  std::uint64_t candidates = 0;        // distance evaluations in the grid sweep
  double pairs_per_nlog2n = 0.0;
  std::uint64_t brute_pairs = 0;       // N(N-1)/2 when brute force ran
  double time_truncated = 0.0;         // seconds
  double time_brute = 0.0;
  double speedup = 0.0;
  double energy_truncated = 0.0;
  double energy_brute = 0.0;
};

/// Times truncated vs brute-force energy on uniform samples for each N in
/// n_list and writes the table as CSV.
std::vector<BenchRow> cmd_bench(const RunConfig& cfg);

}  // namespace riesz
