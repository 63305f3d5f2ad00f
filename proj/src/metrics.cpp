#include "riesz/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include <json.hpp>

#include "riesz/neighbors.hpp"

namespace riesz {

namespace {

double spacing_estimate(const Manifold& m, std::size_t n) {
  return std::pow(m.hausdorff_measure() / double(std::max<std::size_t>(n, 1)),
                  1.0 / double(m.intrinsic_dim()));
}

double brute_separation(const Configuration& config, const Manifold& m) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < config.size(); ++i)
    for (std::size_t j = i + 1; j < config.size(); ++j)
      best = std::min(best, m.pair_distance(config.point(i), config.point(j)));
  return best;
}

std::string range_label(const char* var, double lo, double hi) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s[%.6g,%.6g)", var, lo, hi);
  return buf;
}

std::vector<double> checked_edges(const BinSpec& bins, double lo, double hi) {
  if (bins.edges.empty()) {
    if (bins.count == 0) throw MetricsError("invalid partition: zero bins");
    std::vector<double> e(bins.count + 1);
    for (std::size_t k = 0; k <= bins.count; ++k)
      e[k] = lo + (hi - lo) * double(k) / double(bins.count);
    e.back() = hi;
    return e;
  }
  const auto& e = bins.edges;
  const double tol = 1e-12 * std::max(std::abs(lo), std::abs(hi));
  if (e.size() < 2) throw MetricsError("invalid partition: need at least two edges");
  for (std::size_t k = 1; k < e.size(); ++k)
    if (!(e[k] > e[k - 1])) throw MetricsError("invalid partition: bins overlap");
  if (std::abs(e.front() - lo) > tol || std::abs(e.back() - hi) > tol)
    throw MetricsError("invalid partition: bins do not cover the set");
  return e;
}

std::size_t locate(const std::vector<double>& edges, double v) {
  const auto it = std::upper_bound(edges.begin(), edges.end(), v);
  const std::ptrdiff_t k = (it - edges.begin()) - 1;
  return std::size_t(std::clamp<std::ptrdiff_t>(k, 0, std::ptrdiff_t(edges.size()) - 2));
}

}  // namespace

double separation(const Configuration& config, const Manifold& manifold) {
  const std::size_t n = config.size();
  if (n < 2) throw MetricsError("separation is undefined for fewer than two points");
  const auto box = manifold.periodic_box();
  double min_side = std::numeric_limits<double>::infinity();
  if (box)
    for (double L : *box) min_side = std::min(min_side, L);
  double delta = 0.5 * spacing_estimate(manifold, n);
  while (true) {
    if (delta > manifold.diameter() || (box && delta > 0.5 * min_side))
      return brute_separation(config, manifold);
    const PairList list = build_pair_list(config, delta, box);
    if (!list.pairs.empty()) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& [i, j] : list.pairs)
        best = std::min(best, manifold.pair_distance(config.point(i), config.point(j)));
      return best;
    }
    delta *= 2.0;
  }
}

double covering_radius_estimate(const Configuration& config, const Manifold& manifold,
                                std::size_t samples, std::uint64_t seed) {
  if (config.empty()) throw MetricsError("covering radius needs at least one point");
  if (samples == 0) throw MetricsError("covering radius needs at least one sample");
  const double h = spacing_estimate(manifold, config.size());
  const CellGrid grid = CellGrid::build(config, h, manifold.periodic_box());
  const Configuration ys = manifold.sample_uniform(seed, samples);
  const double far = 2.0 * manifold.diameter() + h;
  double worst = 0.0;
  for (std::size_t k = 0; k < ys.size(); ++k) {
    const auto y = ys.point(k);
    std::int64_t reach = 1;
    while (true) {
      double best = std::numeric_limits<double>::infinity();
      grid.for_each_point_near(y, reach, [&](std::size_t i) {
        best = std::min(best, manifold.pair_distance(y, config.point(i)));
      });
      // Every point within reach * h of y lies in the scanned window.
      if (best <= double(reach) * h || double(reach) * h > far) {
        worst = std::max(worst, best);
        break;
      }
      reach *= 2;
    }
  }
  return worst;
}

double energy_ratio(const Configuration& config, const Manifold& manifold,
                    const RieszParams& params, std::size_t n_schedule) {
  const double n = double(config.size());
  const double e = energy_truncated(config, manifold, params, n_schedule).total;
  return e / std::pow(n, 1.0 + params.s / double(params.d));
}

double riemann_zeta(double s) {
  if (!(s > 1.0)) throw MetricsError("zeta series is divergent for s <= 1");
  constexpr int K = 64;
  double sum = 0.0;
  for (int n = K - 1; n >= 1; --n) sum += std::pow(double(n), -s);
  // Euler-Maclaurin tail of sum_{n >= K} n^{-s}.
  const double k = K;
  const double ks = std::pow(k, -s);
  double tail = k * ks / (s - 1.0) + 0.5 * ks;
  tail += s * ks / k / 12.0;
  tail -= s * (s + 1.0) * (s + 2.0) * ks / (k * k * k) / 720.0;
  tail += s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * ks / std::pow(k, 5) / 30240.0;
  return sum + tail;
}

double epstein_zeta_hex(double s) {
  if (!(s > 2.0)) throw MetricsError("divergent lattice sum for s <= 2");
  // Lattice vectors a e1 + b e2 with |v|^2 = a^2 + ab + b^2 (integer norm).
  constexpr std::int64_t R = 1500;
  constexpr std::int64_t R2 = R * R;
  std::vector<std::uint32_t> reps(std::size_t(R2) + 1, 0);
  for (std::int64_t b = -2 * R; b <= 2 * R; ++b) {
    // a^2 + ab + b^2 <= R^2  <=>  |a + b/2| <= sqrt(R^2 - 3 b^2 / 4)
    const double disc = double(R2) - 0.75 * double(b * b);
    if (disc < 0.0) continue;
    const double half = std::sqrt(disc);
    const auto lo = std::int64_t(std::ceil(-0.5 * double(b) - half)) - 1;
    const auto hi = std::int64_t(std::floor(-0.5 * double(b) + half)) + 1;
    for (std::int64_t a = lo; a <= hi; ++a) {
      const std::int64_t norm = a * a + a * b + b * b;
      if (norm == 0 || norm > R2) continue;
      ++reps[std::size_t(norm)];
    }
  }
  double partial = 0.0;
  double count = 0.0;
  for (std::int64_t m = R2; m >= 1; --m) {
    if (reps[std::size_t(m)] == 0) continue;
    partial += double(reps[std::size_t(m)]) * std::pow(double(m), -0.5 * s);
    count += double(reps[std::size_t(m)]);
  }
  // Tail: integral against the area density 2 pi r / covolume, corrected by
  // the lattice-point discrepancy D(R) = N(R) - pi R^2 / covolume at the
  // boundary (integration by parts; D averages to -1 without the origin).
  const double covolume = std::sqrt(3.0) / 2.0;
  const double r = double(R);
  const double area_count = std::numbers::pi * r * r / covolume;
  const double rs = std::pow(r, -s);
  const double tail = 2.0 * std::numbers::pi / (covolume * (s - 2.0)) * r * r * rs -
                      rs * (count - area_count) - rs;
  return partial + tail;
}

TheoreticalLimit theoretical_limit(double s, std::size_t d, const Manifold& manifold,
                                   WeightMode mode) {
  if (!(s > double(d))) throw MetricsError("hypersingular regime required: s must exceed d");
  TheoreticalLimit out;
  const double hsw = mode == WeightMode::Unit ? manifold.hausdorff_measure() : 1.0;
  if (d == 1) {
    out.constant = 2.0 * riemann_zeta(s);
    out.note = "C_{s,1} = 2 zeta(s)";
  } else if (d == 2) {
    out.constant = std::pow(std::sqrt(3.0) / 2.0, s / 2.0) * epstein_zeta_hex(s);
    out.conjectured = true;
    out.note = "conjectured: hexagonal lattice |L|^{s/2} zeta_L(s)";
  } else {
    out.note = "constant unknown";
    return out;
  }
  out.value = *out.constant / std::pow(hsw, s / double(d));
  return out;
}

std::vector<BinDeviation> distribution_test(const Configuration& config,
                                            const Manifold& manifold, const RieszParams& params,
                                            const BinSpec& bins) {
  const std::size_t n = config.size();
  if (n == 0) throw MetricsError("distribution test needs at least one point");
  const bool weighted = params.weight_mode == WeightMode::FromDensity && params.density.is_set() &&
                        !params.density.is_uniform();
  std::vector<BinDeviation> out;
  std::vector<std::size_t> counts;

  if (const auto* sph = std::get_if<Sphere2>(&manifold.variant())) {
    const double R = sph->radius;
    const auto edges = checked_edges(bins, -R, R);
    const std::size_t K = edges.size() - 1;
    counts.assign(K, 0);
    for (std::size_t i = 0; i < n; ++i) ++counts[locate(edges, config.point(i)[2])];
    for (std::size_t k = 0; k < K; ++k) {
      BinDeviation b;
      b.bin = range_label("z", edges[k], edges[k + 1]);
      b.expected = weighted ? params.density.slab_mass(edges[k], edges[k + 1])
                            : (edges[k + 1] - edges[k]) / (2.0 * R);
      out.push_back(b);
    }
  } else if (std::holds_alternative<Circle>(manifold.variant())) {
    const double two_pi = 2.0 * std::numbers::pi;
    const auto edges = checked_edges(bins, 0.0, two_pi);
    const std::size_t K = edges.size() - 1;
    counts.assign(K, 0);
    for (std::size_t i = 0; i < n; ++i) {
      double t = std::atan2(config.point(i)[1], config.point(i)[0]);
      if (t < 0.0) t += two_pi;
      ++counts[locate(edges, t)];
    }
    for (std::size_t k = 0; k < K; ++k) {
      BinDeviation b;
      b.bin = range_label("theta", edges[k], edges[k + 1]);
      b.expected = (edges[k + 1] - edges[k]) / two_pi;
      out.push_back(b);
    }
  } else if (const auto* sh = std::get_if<SphericalShell>(&manifold.variant())) {
    const double a = std::pow(sh->inner, 3), c = std::pow(sh->outer, 3);
    std::vector<double> radial(5);
    for (int k = 0; k <= 4; ++k) radial[k] = std::cbrt(a + (c - a) * k / 4.0);
    counts.assign(32, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = config.point(i);
      const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
      const std::size_t shell = locate(radial, r);
      const std::size_t oct = (x[0] >= 0) + 2 * (x[1] >= 0) + 4 * (x[2] >= 0);
      ++counts[shell * 8 + oct];
    }
    for (std::size_t k = 0; k < 32; ++k) {
      BinDeviation b;
      char buf[64];
      std::snprintf(buf, sizeof buf, "shell%zu/octant%zu", k / 8, k % 8);
      b.bin = buf;
      b.expected = 1.0 / 32.0;
      out.push_back(b);
    }
  } else {
    const std::size_t p = manifold.ambient_dim();
    std::vector<double> sides(p, 1.0);
    if (auto box = manifold.periodic_box()) sides = *box;
    const std::size_t K = bins.count;
    if (K == 0) throw MetricsError("invalid partition: zero bins");
    std::size_t total = 1;
    for (std::size_t k = 0; k < p; ++k) total *= K;
    counts.assign(total, 0);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t idx = 0;
      for (std::size_t k = p; k-- > 0;) {
        const double f = config.point(i)[k] / sides[k];
        const auto c = std::size_t(std::clamp<double>(std::floor(f * double(K)), 0.0, double(K - 1)));
        idx = idx * K + c;
      }
      ++counts[idx];
    }
    for (std::size_t b = 0; b < total; ++b) {
      BinDeviation dev;
      dev.bin = "cell" + std::to_string(b);
      dev.expected = 1.0 / double(total);
      out.push_back(dev);
    }
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k].observed = double(counts[k]) / double(n);
    out[k].deviation = out[k].observed - out[k].expected;
    out[k].relative = out[k].deviation / out[k].expected;
  }
  return out;
}

ZAudit audit_Z_bounds(const Configuration& config, const Manifold& manifold, double s,
                      double delta, std::optional<double> full_energy) {
  if (!(delta > 0.0)) throw MetricsError("delta must be positive");
  if (!(s > 0.0)) throw MetricsError("s must be positive");
  ZAudit a;
  a.delta = delta;
  a.z = count_Z(config, delta, manifold.periodic_box());
  if (!full_energy) {
    RieszParams unit;
    unit.s = s;
    unit.d = manifold.intrinsic_dim();
    full_energy = energy_full(config, manifold, unit);
  }
  a.bound = std::pow(delta, s) * *full_energy;
  a.slack = a.bound - double(a.z);
  a.holds = double(a.z) <= a.bound;
  const double n = double(config.size());
  const double d = double(manifold.intrinsic_dim());
  const double C = delta * std::pow(n, 1.0 / d);
  a.normalized = double(a.z) / (n * std::pow(C, d));
  return a;
}

MetricsReport compute_metrics(const Configuration& config, const Manifold& manifold,
                              const RieszParams& params, const MetricsOptions& options) {
  MetricsReport r;
  r.n = config.size();
  r.d = params.d;
  r.s = params.s;
  r.manifold = manifold.name();
  r.radius = eval_radius(params.radius, params.d, r.n);
  r.radius_admissible = radius_is_admissible(params.radius);
  const double scale = std::pow(double(r.n), 1.0 / double(params.d));
  r.separation = separation(config, manifold);
  r.covering_samples = options.covering_samples ? options.covering_samples : 50 * r.n;
  r.covering_estimate = covering_radius_estimate(config, manifold, r.covering_samples, options.seed);
  r.mesh_ratio = r.covering_estimate / r.separation;
  r.scaled_separation = r.separation * scale;
  r.scaled_covering = r.covering_estimate * scale;
  r.energy = energy_truncated(config, manifold, params, r.n);
  r.energy_ratio = r.energy.total / std::pow(double(r.n), 1.0 + params.s / double(params.d));
  std::optional<double> unit_full;
  if (options.full_energy) {
    r.energy_full = energy_full(config, manifold, params);
    r.energy_full_ratio = *r.energy_full / std::pow(double(r.n), 1.0 + params.s / double(params.d));
    if (params.weight_mode == WeightMode::Unit) unit_full = r.energy_full;
  }
  r.limit = theoretical_limit(params.s, params.d, manifold, params.weight_mode);
  std::vector<double> deltas = options.z_deltas;
  if (deltas.empty()) deltas.push_back(r.radius);
  if (options.full_energy)
    for (double delta : deltas) r.z_stats.push_back(audit_Z_bounds(config, manifold, params.s, delta, unit_full));
  r.distribution = distribution_test(config, manifold, params, options.bins);
  return r;
}

std::string to_json(const MetricsReport& r, int indent) {
  using nlohmann::json;
  json j;
  j["n"] = r.n;
  j["d"] = r.d;
  j["s"] = r.s;
  j["manifold"] = r.manifold;
  j["radius"] = r.radius;
  j["radius_admissible"] = r.radius_admissible;
  j["separation"] = r.separation;
  j["covering_estimate"] = r.covering_estimate;
  j["covering_is_lower_bound"] = true;
  j["covering_samples"] = r.covering_samples;
  j["mesh_ratio"] = r.mesh_ratio;
  j["scaled_separation"] = r.scaled_separation;
  j["scaled_covering"] = r.scaled_covering;
  j["energy_truncated"] = r.energy.total;
  j["pair_terms_evaluated"] = r.energy.pair_terms_evaluated;
  j["candidate_distance_evals"] = r.energy.candidate_distance_evals;
  j["energy_ratio"] = r.energy_ratio;
  j["energy_full"] = r.energy_full ? json(*r.energy_full) : json(nullptr);
  j["energy_full_ratio"] = r.energy_full_ratio ? json(*r.energy_full_ratio) : json(nullptr);
  j["theoretical_limit"] = {
      {"value", r.limit.value ? json(*r.limit.value) : json(nullptr)},
      {"constant", r.limit.constant ? json(*r.limit.constant) : json(nullptr)},
      {"conjectured", r.limit.conjectured},
      {"note", r.limit.note},
  };
  j["z_stats"] = json::array();
  for (const auto& z : r.z_stats)
    j["z_stats"].push_back({{"delta", z.delta},
                            {"z", z.z},
                            {"bound", z.bound},
                            {"slack", z.slack},
                            {"normalized", z.normalized},
                            {"holds", z.holds}});
  j["distribution"] = json::array();
  for (const auto& b : r.distribution)
    j["distribution"].push_back({{"bin", b.bin},
                                 {"expected", b.expected},
                                 {"observed", b.observed},
                                 {"deviation", b.deviation},
                                 {"relative", b.relative}});
  return j.dump(indent);
}

}  // namespace riesz
