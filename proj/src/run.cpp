#include "riesz/run.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "riesz/energy.hpp"
#include "riesz/neighbors.hpp"

namespace riesz {

namespace {

namespace fs = std::filesystem;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"run", {"n", "n_list", "seed", "deterministic"}},
      {"manifold", {"manifold", "radius", "r0", "r1", "dim", "sides"}},
      {"riesz",
       {"s", "cutoff", "cutoff_order", "radius", "radius_scale", "density", "density_a",
        "density_b", "weight"}},
      {"optimizer",
       {"iters", "armijo_c", "backtrack", "step_fraction", "step_rule", "tol", "grad_tol",
        "max_backtracks", "paranoid", "seed", "deterministic"}},
      {"metrics", {"samples", "bins", "deltas", "full_energy"}},
      {"io", {"out", "points", "trace", "report", "bench"}},
      {"bench", {"brute"}},
  };
  return keys;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

struct Entry {
  std::string value;
  int line = 0;
};

// section -> key -> value
using Table = std::map<std::string, std::map<std::string, Entry>>;

Table tokenize(std::istream& in) {
  Table t;
  std::string section;
  std::string raw;
  int line = 0;
  const auto& known = known_keys();
  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(raw.substr(0, raw.find_first_of("#;")));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(s, "malformed section header on line " + std::to_string(line));
      section = lower(trim(std::string_view(s).substr(1, s.size() - 2)));
      if (!known.count(section)) throw ConfigError(section, "unknown section");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError(s, "expected 'key = value' on line " + std::to_string(line));
    const std::string key = lower(trim(std::string_view(s).substr(0, eq)));
    const std::string value = trim(std::string_view(s).substr(eq + 1));
    std::string sec = section;
    if (sec.empty()) {
      std::vector<std::string> owners;
      for (const auto& [name, keys] : known)
        if (keys.count(key)) owners.push_back(name);
      if (owners.empty()) throw ConfigError(key, "unknown key");
      // seed and deterministic are shared between [run] and [optimizer].
      if (owners.size() > 1 && !(key == "seed" || key == "deterministic"))
        throw ConfigError(key, "ambiguous key; place it under [" + owners[0] + "] or [" +
                                   owners[1] + "]");
      sec = owners[0];
    } else if (!known.at(sec).count(key)) {
      throw ConfigError(key, "unknown key in [" + sec + "]");
    }
    if (sec == "optimizer" && (key == "seed" || key == "deterministic")) sec = "run";
    if (t[sec].count(key)) throw ConfigError(key, "duplicate key on line " + std::to_string(line));
    t[sec][key] = {value, line};
  }
  return t;
}

class Reader {
 public:
  explicit Reader(const Table& t) : t_(t) {}

  const Entry* find(const std::string& sec, const std::string& key) const {
    const auto s = t_.find(sec);
    if (s == t_.end()) return nullptr;
    const auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  }

  bool has(const std::string& sec, const std::string& key) const { return find(sec, key); }

  std::string str(const std::string& sec, const std::string& key, std::string fallback) const {
    const Entry* e = find(sec, key);
    return e ? e->value : fallback;
  }

  double real(const std::string& sec, const std::string& key, double fallback) const {
    const Entry* e = find(sec, key);
    return e ? parse_real(key, e->value) : fallback;
  }

  std::uint64_t uint(const std::string& sec, const std::string& key, std::uint64_t fallback) const {
    const Entry* e = find(sec, key);
    return e ? parse_uint(key, e->value) : fallback;
  }

  bool boolean(const std::string& sec, const std::string& key, bool fallback) const {
    const Entry* e = find(sec, key);
    if (!e) return fallback;
    const std::string v = lower(e->value);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(key, "expected a boolean, got '" + e->value + "'");
  }

  template <class T, class F>
  std::vector<T> list(const std::string& sec, const std::string& key, F parse) const {
    std::vector<T> out;
    const Entry* e = find(sec, key);
    if (!e) return out;
    std::string item;
    std::stringstream ss(e->value);
    while (std::getline(ss, item, ',')) out.push_back(parse(key, trim(item)));
    return out;
  }

  static double parse_real(const std::string& key, const std::string& v) {
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(x))
      throw ConfigError(key, "expected a real number, got '" + v + "'");
    return x;
  }

  static std::uint64_t parse_uint(const std::string& key, const std::string& v) {
    std::uint64_t x = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec == std::errc() && ptr == v.data() + v.size()) return x;
    // Allow integral scientific notation such as 1e5.
    double d = 0.0;
    try {
      d = parse_real(key, v);
    } catch (const ConfigError&) {
      throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
    }
    if (d < 0.0 || d != std::floor(d) || d > 1e18)
      throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
    return std::uint64_t(d);
  }

 private:
  const Table& t_;
};

Manifold build_manifold(const Reader& r) {
  if (!r.has("manifold", "manifold")) throw ConfigError("manifold", "missing required key");
  const std::string kind = lower(r.str("manifold", "manifold", ""));
  try {
    if (kind == "circle") return Manifold::circle(r.real("manifold", "radius", 1.0));
    if (kind == "sphere") return Manifold::sphere(r.real("manifold", "radius", 1.0));
    if (kind == "shell")
      return Manifold::shell(r.real("manifold", "r0", 0.55), r.real("manifold", "r1", 1.0));
    if (kind == "cube") return Manifold::cube(r.uint("manifold", "dim", 2));
    if (kind == "torus") {
      auto sides = r.list<double>("manifold", "sides", Reader::parse_real);
      if (sides.empty()) sides = {1.0, 1.0};
      return Manifold::torus(std::move(sides));
    }
  } catch (const GeometryError& e) {
    throw ConfigError("manifold", e.what());
  }
  throw ConfigError("manifold", "expected circle|sphere|shell|cube|torus, got '" + kind + "'");
}

RieszParams build_riesz(const Reader& r, const Manifold& m) {
  RieszParams p;
  if (!r.has("riesz", "s")) throw ConfigError("s", "missing required key");
  p.s = r.real("riesz", "s", 0.0);
  p.d = m.intrinsic_dim();

  const std::string cutoff = lower(r.str("riesz", "cutoff", "poly"));
  if (cutoff == "hard") {
    if (r.has("riesz", "cutoff_order")) throw ConfigError("cutoff_order", "only valid with cutoff = poly");
    p.cutoff = HardCutoff{};
  } else if (cutoff == "poly") {
    const auto k = r.uint("riesz", "cutoff_order", 3);
    if (k < 1 || k > 64) throw ConfigError("cutoff_order", "must be an integer >= 1");
    p.cutoff = PolyCutoff{int(k)};
  } else {
    throw ConfigError("cutoff", "expected hard|poly, got '" + cutoff + "'");
  }

  const std::string radius = lower(r.str("riesz", "radius", "log"));
  const double scale = r.real("riesz", "radius_scale", 1.0);
  if (!(scale > 0.0)) throw ConfigError("radius_scale", "must be positive");
  if (radius == "log") p.radius = LogRadius{scale};
  else if (radius == "const") p.radius = ConstRadius{scale};
  else throw ConfigError("radius", "expected const|log, got '" + radius + "'");

  const std::string density = lower(r.str("riesz", "density", "uniform"));
  try {
    if (density == "uniform") {
      if (r.has("riesz", "density_a") || r.has("riesz", "density_b"))
        throw ConfigError("density_a", "only valid with density = zpoly");
      p.density = Density::uniform(m);
    } else if (density == "zpoly") {
      p.density = Density::zpoly(m, r.real("riesz", "density_a", 1.0), r.real("riesz", "density_b", 0.0));
    } else {
      throw ConfigError("density", "expected uniform|zpoly, got '" + density + "'");
    }
  } catch (const ParameterError& e) {
    throw ConfigError("density", e.what());
  } catch (const GeometryError& e) {
    throw ConfigError("density", e.what());
  }

  const std::string weight = lower(r.str("riesz", "weight", "unit"));
  if (weight == "unit") p.weight_mode = WeightMode::Unit;
  else if (weight == "density") p.weight_mode = WeightMode::FromDensity;
  else throw ConfigError("weight", "expected unit|density, got '" + weight + "'");

  try {
    p.validate();
  } catch (const ParameterError& e) {
    throw ConfigError("s", e.what());
  }
  return p;
}

OptimizerParams build_optimizer(const Reader& r) {
  OptimizerParams o;
  o.max_iters = r.uint("optimizer", "iters", o.max_iters);
  o.armijo_c = r.real("optimizer", "armijo_c", o.armijo_c);
  o.backtrack_factor = r.real("optimizer", "backtrack", o.backtrack_factor);
  o.step_fraction = r.real("optimizer", "step_fraction", o.step_fraction);
  o.rel_energy_tol = r.real("optimizer", "tol", o.rel_energy_tol);
  o.grad_tol = r.real("optimizer", "grad_tol", o.grad_tol);
  o.max_backtracks = r.uint("optimizer", "max_backtracks", o.max_backtracks);
  o.paranoid = r.boolean("optimizer", "paranoid", o.paranoid);
  const std::string rule = lower(r.str("optimizer", "step_rule", "bb"));
  if (rule == "bb") o.step_rule = StepRule::BarzilaiBorwein;
  else if (rule == "capped") o.step_rule = StepRule::Capped;
  else throw ConfigError("step_rule", "expected bb|capped, got '" + rule + "'");
  auto require = [](bool ok, const char* key) {
    if (!ok) throw ConfigError(key, "value out of range");
  };
  require(o.max_iters >= 1, "iters");
  require(o.armijo_c > 0.0 && o.armijo_c < 1.0, "armijo_c");
  require(o.backtrack_factor > 0.0 && o.backtrack_factor < 1.0, "backtrack");
  require(o.step_fraction > 0.0, "step_fraction");
  require(o.rel_energy_tol >= 0.0, "tol");
  require(o.grad_tol >= 0.0, "grad_tol");
  return o;
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  const Table table = tokenize(in);
  const Reader r(table);
  RunConfig cfg;
  cfg.manifold = build_manifold(r);
  cfg.riesz = build_riesz(r, cfg.manifold);
  cfg.optimizer = build_optimizer(r);

  cfg.n = r.uint("run", "n", 0);
  if (r.has("run", "n") && cfg.n < 2) throw ConfigError("n", "need at least two points");
  cfg.n_list = r.list<std::size_t>("run", "n_list", Reader::parse_uint);
  for (auto n : cfg.n_list)
    if (n < 2) throw ConfigError("n_list", "every N must be at least 2");
  cfg.seed = r.uint("run", "seed", 1);
  cfg.deterministic = r.boolean("run", "deterministic", true);

  cfg.metrics.covering_samples = r.uint("metrics", "samples", 0);
  cfg.metrics.bins.count = r.uint("metrics", "bins", 10);
  if (cfg.metrics.bins.count == 0) throw ConfigError("bins", "must be positive");
  cfg.metrics.z_deltas = r.list<double>("metrics", "deltas", Reader::parse_real);
  for (double d : cfg.metrics.z_deltas)
    if (!(d > 0.0)) throw ConfigError("deltas", "every delta must be positive");
  cfg.metrics.full_energy = r.boolean("metrics", "full_energy", true);

  cfg.io.out_dir = r.str("io", "out", ".");
  cfg.io.points = r.str("io", "points", cfg.io.points);
  cfg.io.trace = r.str("io", "trace", cfg.io.trace);
  cfg.io.report = r.str("io", "report", cfg.io.report);
  cfg.io.bench = r.str("io", "bench", cfg.io.bench);
  cfg.bench.brute = r.boolean("bench", "brute", true);

  apply_overrides(cfg, std::nullopt, false, std::nullopt);
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  return parse_config(in);
}

void apply_overrides(RunConfig& cfg, std::optional<std::uint64_t> seed, bool deterministic,
                     const std::optional<fs::path>& out_dir) {
  if (seed) cfg.seed = *seed;
  if (deterministic) cfg.deterministic = true;
  if (out_dir) cfg.io.out_dir = *out_dir;
  cfg.optimizer.seed = cfg.seed;
  cfg.optimizer.deterministic = cfg.deterministic;
  cfg.metrics.seed = cfg.seed;
}

void write_points(const fs::path& path, const Configuration& config) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot write " + path.string());
  static const char* names[] = {"x", "y", "z"};
  const std::size_t p = config.ambient_dim();
  for (std::size_t k = 0; k < p; ++k) {
    if (k) std::fputc(',', f);
    if (k < 3) std::fputs(names[k], f);
    else std::fprintf(f, "x%zu", k);
  }
  std::fputc('\n', f);
  for (std::size_t i = 0; i < config.size(); ++i) {
    const auto x = config.point(i);
    for (std::size_t k = 0; k < p; ++k) std::fprintf(f, k ? ",%.17g" : "%.17g", x[k]);
    std::fputc('\n', f);
  }
  if (std::fclose(f) != 0) throw std::runtime_error("cannot write " + path.string());
}

Configuration read_points(const fs::path& path, const Manifold& manifold) {
  const std::size_t p = manifold.ambient_dim();
  std::ifstream in(path);
  if (!in) throw InputError("cannot open points file " + path.string());
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& what) {
    throw InputError(path.string() + ":" + std::to_string(lineno) + ": " + what);
  };
  ++lineno;
  if (!std::getline(in, line)) fail("missing header");
  {
    static const char* names[] = {"x", "y", "z"};
    std::string expected;
    for (std::size_t k = 0; k < p; ++k)
      expected += (k ? "," : "") + (k < 3 ? std::string(names[k]) : "x" + std::to_string(k));
    if (trim(line) != expected) fail("expected header '" + expected + "'");
  }
  std::vector<double> coords;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string row = trim(line);
    if (row.empty()) continue;
    std::size_t fields = 0;
    std::size_t pos = 0;
    while (pos <= row.size()) {
      const auto comma = std::min(row.find(',', pos), row.size());
      const std::string field = trim(std::string_view(row).substr(pos, comma - pos));
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (field.empty() || ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v))
        fail("invalid number '" + field + "'");
      coords.push_back(v);
      ++fields;
      pos = comma + 1;
    }
    if (fields != p) fail("expected " + std::to_string(p) + " values, got " + std::to_string(fields));
  }
  return Configuration(p, manifold.intrinsic_dim(), std::move(coords));
}

void write_trace(const fs::path& path, const Trace& trace) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot write " + path.string());
  std::fputs("iter,energy,grad_norm,step,backtracks\n", f);
  for (const auto& r : trace.records)
    std::fprintf(f, "%zu,%.17g,%.17g,%.17g,%zu\n", r.iter, r.energy, r.grad_norm, r.step,
                 r.backtracks);
  if (std::fclose(f) != 0) throw std::runtime_error("cannot write " + path.string());
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text << '\n';
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

GenerateOutput cmd_generate(const RunConfig& cfg) {
  if (cfg.n < 2) throw ConfigError("n", "missing required key for generate");
  fs::create_directories(cfg.io.out_dir);
  const Configuration start = cfg.manifold.sample_uniform(cfg.seed, cfg.n);
  DescentResult res = descend(start, cfg.manifold, cfg.riesz, cfg.optimizer);
  GenerateOutput out{std::move(res.config), std::move(res.trace), {}};
  write_points(cfg.io.out_dir / cfg.io.points, out.config);
  write_trace(cfg.io.out_dir / cfg.io.trace, out.trace);
  out.report = compute_metrics(out.config, cfg.manifold, cfg.riesz, cfg.metrics);
  write_text(cfg.io.out_dir / cfg.io.report, to_json(out.report));
  return out;
}

MetricsReport cmd_metrics(const RunConfig& cfg, const fs::path& points) {
  const Configuration config = read_points(points, cfg.manifold);
  if (config.size() < 2) throw InputError("points file needs at least two points");
  std::size_t worst = 0;
  double worst_err = -1.0;
  for (std::size_t i = 0; i < config.size(); ++i) {
    const double e = cfg.manifold.membership_error(config.point(i));
    if (e > worst_err) worst_err = e, worst = i;
  }
  if (worst_err > 1e-9) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "points are off the %s: worst violator is point %zu (line %zu) at distance %.3e",
                  cfg.manifold.name().c_str(), worst, worst + 2, worst_err);
    throw InputError(buf);
  }
  MetricsReport report = compute_metrics(config, cfg.manifold, cfg.riesz, cfg.metrics);
  fs::create_directories(cfg.io.out_dir);
  write_text(cfg.io.out_dir / cfg.io.report, to_json(report));
  return report;
}

std::vector<BenchRow> cmd_bench(const RunConfig& cfg) {
  std::vector<std::size_t> ns = cfg.n_list;
  if (ns.empty() && cfg.n >= 2) ns.push_back(cfg.n);
  if (ns.empty()) throw ConfigError("n_list", "missing required key for bench");
  fs::create_directories(cfg.io.out_dir);
  const ExecPolicy policy{cfg.deterministic, 0};
  using clock = std::chrono::steady_clock;
  std::vector<BenchRow> rows;
  for (std::size_t n : ns) {
    BenchRow row;
    row.n = n;
    const Configuration x = cfg.manifold.sample_uniform(cfg.seed, n);
    row.radius = eval_radius(cfg.riesz.radius, cfg.riesz.d, n);
    auto t0 = clock::now();
    const EnergyBreakdown tr = energy_truncated(x, cfg.manifold, cfg.riesz, n, policy);
    row.time_truncated = std::chrono::duration<double>(clock::now() - t0).count();
    row.energy_truncated = tr.total;
    row.candidates = tr.candidate_distance_evals;
    row.z = count_Z(x, row.radius, cfg.manifold.periodic_box());
    row.pairs_truncated = row.z / 2;
    const double ln = std::log(double(n));
    row.pairs_per_nlog2n = double(row.pairs_truncated) / (double(n) * ln * ln);
    if (cfg.bench.brute) {
      t0 = clock::now();
      const EnergyBreakdown br = energy_truncated_bruteforce(x, cfg.manifold, cfg.riesz, n, policy);
      row.time_brute = std::chrono::duration<double>(clock::now() - t0).count();
      row.energy_brute = br.total;
      row.brute_pairs = br.candidate_distance_evals;
      row.speedup = row.time_brute / std::max(row.time_truncated, 1e-9);
    }
    rows.push_back(row);
  }
  std::FILE* f = std::fopen((cfg.io.out_dir / cfg.io.bench).c_str(), "w");
  if (!f) throw std::runtime_error("cannot write bench table");
  std::fputs("n,radius,pairs_truncated,z,candidates,pairs_per_nlog2n,brute_pairs,time_truncated,"
             "time_brute,speedup,energy_truncated,energy_brute\n", f);
  for (const auto& r : rows)
    std::fprintf(f, "%zu,%.17g,%llu,%llu,%llu,%.17g,%llu,%.6f,%.6f,%.3f,%.17g,%.17g\n", r.n,
                 r.radius, (unsigned long long)r.pairs_truncated, (unsigned long long)r.z,
                 (unsigned long long)r.candidates, r.pairs_per_nlog2n,
                 (unsigned long long)r.brute_pairs, r.time_truncated, r.time_brute, r.speedup,
                 r.energy_truncated, r.energy_brute);
  std::fclose(f);
  return rows;
}

}  // namespace riesz
