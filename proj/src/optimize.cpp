#include "riesz/optimize.hpp"

#include <algorithm>
#include <cmath>

namespace riesz {

void OptimizerParams::validate() const {
  if (max_iters < 1) throw ParameterError("iters must be at least 1");
  if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw ParameterError("armijo_c must lie in (0, 1)");
  if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0))
    throw ParameterError("backtrack must lie in (0, 1)");
  if (!(step_fraction > 0.0)) throw ParameterError("step_fraction must be positive");
  if (!(rel_energy_tol >= 0.0)) throw ParameterError("tol must be non-negative");
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::MaxIterations: return "max_iterations";
    case StopReason::Converged: return "converged";
    case StopReason::EnergyStalled: return "energy_stalled";
    case StopReason::LineSearchFailed: return "line_search_failed";
  }
  return "unknown";
}

namespace {

struct Direction {
  std::vector<double> d;
  double max_norm = 0.0;
  double sq_norm = 0.0;
};

Direction descent_direction(const Configuration& x, const Manifold& m,
                            const std::vector<double>& grad) {
  const std::size_t p = x.ambient_dim();
  Direction dir;
  dir.d.resize(grad.size());
  std::vector<double> neg(p);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t k = 0; k < p; ++k) neg[k] = -grad[i * p + k];
    std::span<double> di(dir.d.data() + i * p, p);
    m.tangent_project(x.point(i), neg, di);
    double n2 = 0.0;
    for (double v : di) n2 += v * v;
    dir.sq_norm += n2;
    dir.max_norm = std::max(dir.max_norm, std::sqrt(n2));
  }
  return dir;
}

// Long Barzilai-Borwein step <s, s> / <s, y> with s = x_k - x_{k-1} and
// y = grad_k - grad_{k-1} = -(d_k - d_{k-1}). Returns `fallback` when the
// curvature estimate is not positive.
double bb_step(const Configuration& x, const Configuration& prev_x, const std::vector<double>& d,
               const std::vector<double>& prev_d, const Manifold& m, double fallback) {
  const std::size_t p = x.ambient_dim();
  std::vector<double> sk(p);
  double ss = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    m.displacement(x.point(i), prev_x.point(i), sk);
    for (std::size_t k = 0; k < p; ++k) {
      const double yk = prev_d[i * p + k] - d[i * p + k];
      ss += sk[k] * sk[k];
      sy += sk[k] * yk;
    }
  }
  return sy > 0.0 ? ss / sy : fallback;
}

}  // namespace

DescentResult descend(Configuration config, const Manifold& manifold, const RieszParams& params,
                      const OptimizerParams& opt,
                      const std::function<void(const TraceRecord&)>& on_record) {
  opt.validate();
  params.validate();
  const std::size_t n = config.size();
  if (n < 2) throw ParameterError("need at least two points");
  if (config.ambient_dim() != manifold.ambient_dim())
    throw GeometryError("configuration dimension does not match the manifold");
  for (std::size_t i = 0; i < n; ++i) {
    if (!manifold.contains(config.point(i), 1e-9))
      throw GeometryError("starting point " + std::to_string(i) + " is not on the manifold");
    manifold.project(config.point(i), config.point(i));
  }

  ExecPolicy policy{opt.deterministic, 0};
  EnergyEvaluator evaluator(manifold, params, n, policy, opt.paranoid);
  const double r_n = evaluator.radius();

  DescentResult result;
  Trace& trace = result.trace;
  auto emit = [&](const TraceRecord& rec) {
    trace.records.push_back(rec);
    if (on_record) on_record(rec);
  };

  Evaluation cur = evaluator.evaluate(config, true);
  ++trace.energy_evaluations;
  Direction dir = descent_direction(config, manifold, cur.gradient);
  emit({0, cur.energy.total, dir.max_norm, 0.0, 0});

  Configuration trial = config;
  Configuration prev_x;
  std::vector<double> prev_d;
  bool have_prev = false;
  for (std::size_t it = 1; it <= opt.max_iters; ++it) {
    if (dir.max_norm == 0.0 || dir.max_norm <= opt.grad_tol * cur.force_scale) {
      trace.stop = StopReason::Converged;
      break;
    }
    double alpha = opt.step_fraction * r_n / dir.max_norm;
    if (opt.step_rule == StepRule::BarzilaiBorwein && have_prev)
      alpha = std::min(alpha, bb_step(config, prev_x, dir.d, prev_d, manifold, alpha));
    prev_x = config;
    prev_d = dir.d;
    have_prev = true;
    bool accepted = false;
    std::size_t backtracks = 0;
    Evaluation next;
    for (; backtracks <= opt.max_backtracks; ++backtracks) {
      auto tc = trial.coords();
      const auto xc = config.coords();
      for (std::size_t k = 0; k < tc.size(); ++k) tc[k] = xc[k] + alpha * dir.d[k];
      for (std::size_t i = 0; i < n; ++i) manifold.project(trial.point(i), trial.point(i));
      bool degenerate = false;
      try {
        next = evaluator.evaluate(trial, true);
        ++trace.energy_evaluations;
      } catch (const DegenerateConfiguration&) {
        degenerate = true;
      }
      if (!degenerate &&
          next.energy.total <= cur.energy.total - opt.armijo_c * alpha * dir.sq_norm) {
        accepted = true;
        break;
      }
      alpha *= opt.backtrack_factor;
    }
    if (!accepted) {
      trace.line_search_failed = true;
      trace.stop = StopReason::LineSearchFailed;
      break;
    }
    const double prev = cur.energy.total;
    std::swap(config, trial);
    cur = std::move(next);
    dir = descent_direction(config, manifold, cur.gradient);
    emit({it, cur.energy.total, dir.max_norm, alpha, backtracks});
    const double rel = (prev - cur.energy.total) / std::max(std::abs(prev), 1e-300);
    if (rel < opt.rel_energy_tol) {
      trace.stop = StopReason::EnergyStalled;
      break;
    }
  }
  trace.grid_rebuilds = evaluator.rebuild_count();
  result.config = std::move(config);
  return result;
}

}  // namespace riesz
