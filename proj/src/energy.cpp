#include "riesz/energy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <thread>

namespace riesz {

namespace {

/// Neumaier's variant of Kahan summation.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) comp += (sum - t) + v;
    else comp += (v - t) + sum;
    sum = t;
  }
  void add(const CompensatedSum& o) {
    add(o.sum);
    add(o.comp);
  }
  double value() const { return sum + comp; }
};

struct Accumulator {
  CompensatedSum energy;
  std::vector<double> grad;
  std::vector<double> force_abs;
  std::uint64_t terms = 0;
  std::uint64_t candidates = 0;
};

// Everything about the kernel that is fixed for one evaluation.
class PairKernel {
 public:
  PairKernel(const Configuration& config, const Manifold& manifold, const RieszParams& params,
             std::size_t n_schedule, bool need_site_grad)
      : config_(config),
        params_(params),
        n_(n_schedule),
        p_(config.ambient_dim()),
        box_(manifold.periodic_box().value_or(std::vector<double>{})),
        guard_(1e-14 * manifold.diameter()),
        pairwise_radius_(radius_is_pairwise(params.radius)),
        hard_(std::holds_alternative<HardCutoff>(params.cutoff)),
        weighted_(params.weight_mode == WeightMode::FromDensity) {
    params.validate();
    radius_ = eval_radius(params.radius, params.d, n_);
    if (weighted_) {
      const std::size_t n = config.size();
      g_.resize(n);
      if (need_site_grad) dg_.resize(n * p_);
      for (std::size_t i = 0; i < n; ++i) {
        const FieldJet jet = site_factor(params, config.point(i));
        g_[i] = jet.value;
        if (need_site_grad) std::copy(jet.grad.begin(), jet.grad.end(), dg_.begin() + i * p_);
      }
    }
  }

  double radius() const { return radius_; }
  std::span<const double> box() const { return box_; }

  /// Adds the (i, j) term, r = x_i - x_j, u2 = |r|^2. Returns false when the
  /// pair is outside the cutoff.
  bool term(std::size_t i, std::size_t j, const double* r, double u2, Accumulator& acc,
            bool with_grad) const {
    if (u2 > radius_ * radius_) return false;
    const double u = std::sqrt(u2);
    if (u < guard_) throw DegenerateConfiguration();
    double rho = radius_;
    double grad_rho_i[detail::kInlineDim] = {};
    double grad_rho_j[detail::kInlineDim] = {};
    if (pairwise_radius_) {
      const std::span<double> gi = with_grad ? std::span<double>(grad_rho_i, p_) : std::span<double>{};
      const std::span<double> gj = with_grad ? std::span<double>(grad_rho_j, p_) : std::span<double>{};
      rho = eval_radius(params_.radius, params_.d, n_, config_.point(i), config_.point(j), gi);
      if (with_grad)
        eval_radius(params_.radius, params_.d, n_, config_.point(j), config_.point(i), gj);
    }
    const double t = u / rho;
    if (hard_ ? t > 1.0 : t >= 1.0) return false;
    const CutoffValue phi = eval_cutoff(params_.cutoff, t);
    const double us = std::pow(u, -params_.s);
    const double w = weighted_ ? g_[i] * g_[j] : 1.0;
    const double h = phi.value * us;
    acc.energy.add(2.0 * w * h);
    ++acc.terms;
    if (!with_grad) return true;

    const double dhdu = phi.d1 / rho * us - params_.s * h / u;
    const double radial = 2.0 * w * dhdu / u;
    double* gi = acc.grad.data() + i * p_;
    double* gj = acc.grad.data() + j * p_;
    double fi = std::abs(radial) * u, fj = fi;
    for (std::size_t k = 0; k < p_; ++k) {
      gi[k] += radial * r[k];
      gj[k] -= radial * r[k];
    }
    if (weighted_) {
      const double* dgi = dg_.data() + i * p_;
      const double* dgj = dg_.data() + j * p_;
      double ni = 0.0, nj = 0.0;
      for (std::size_t k = 0; k < p_; ++k) {
        const double ti = 2.0 * h * g_[j] * dgi[k];
        const double tj = 2.0 * h * g_[i] * dgj[k];
        gi[k] += ti;
        gj[k] += tj;
        ni += ti * ti;
        nj += tj * tj;
      }
      fi += std::sqrt(ni);
      fj += std::sqrt(nj);
    }
    if (pairwise_radius_) {
      const double dhdrho = -phi.d1 * u / (rho * rho) * us;
      const double c = 2.0 * w * dhdrho;
      for (std::size_t k = 0; k < p_; ++k) {
        gi[k] += c * grad_rho_i[k];
        gj[k] += c * grad_rho_j[k];
      }
    }
    acc.force_abs[i] += fi;
    acc.force_abs[j] += fj;
    return true;
  }

 private:
  const Configuration& config_;
  const RieszParams& params_;
  std::size_t n_;
  std::size_t p_;
  std::vector<double> box_;
  double guard_;
  bool pairwise_radius_;
  bool hard_;
  bool weighted_;
  double radius_ = 0.0;
  std::vector<double> g_;
  std::vector<double> dg_;
};

// Runs body(tid, acc) on `threads` workers with private accumulators, then
// reduces them in thread order.
template <class Body>
Accumulator run_partitioned(std::size_t threads, std::size_t grad_size, bool with_grad,
                            std::size_t n_points, Body&& body) {
  auto make_acc = [&] {
    Accumulator a;
    if (with_grad) {
      a.grad.assign(grad_size, 0.0);
      a.force_abs.assign(n_points, 0.0);
    }
    return a;
  };
  if (threads <= 1) {
    Accumulator acc = make_acc();
    body(0, acc);
    return acc;
  }
  std::vector<Accumulator> accs;
  for (std::size_t t = 0; t < threads; ++t) accs.push_back(make_acc());
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        body(t, accs[t]);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  Accumulator out = std::move(accs[0]);
  for (std::size_t t = 1; t < threads; ++t) {
    out.energy.add(accs[t].energy);
    out.terms += accs[t].terms;
    out.candidates += accs[t].candidates;
    for (std::size_t k = 0; k < out.grad.size(); ++k) out.grad[k] += accs[t].grad[k];
    for (std::size_t k = 0; k < out.force_abs.size(); ++k) out.force_abs[k] += accs[t].force_abs[k];
  }
  return out;
}

// Below this many candidate pairs threads cost more than they save.
constexpr std::size_t kParallelThreshold = 20000;

Accumulator evaluate_list(const Configuration& config, const PairList& list,
                          const PairKernel& kernel, bool with_grad, std::size_t threads) {
  const std::size_t p = config.ambient_dim();
  const std::size_t m = list.pairs.size();
  if (m < kParallelThreshold) threads = 1;
  return run_partitioned(threads, config.size() * p, with_grad, config.size(),
                         [&](std::size_t tid, Accumulator& acc) {
                           const std::size_t lo = m * tid / threads;
                           const std::size_t hi = m * (tid + 1) / threads;
                           std::vector<double> r(p);
                           for (std::size_t k = lo; k < hi; ++k) {
                             const auto [i, j] = list.pairs[k];
                             ++acc.candidates;
                             const double u2 = detail::displacement_into(
                                 config.point(i), config.point(j), kernel.box(), r.data());
                             kernel.term(i, j, r.data(), u2, acc, with_grad);
                           }
                         });
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void check_config(const Configuration& config, const Manifold& manifold) {
  if (config.ambient_dim() != manifold.ambient_dim())
    throw GeometryError("configuration dimension does not match the manifold");
}

}  // namespace

std::size_t resolve_threads(const ExecPolicy& policy) {
  if (policy.deterministic) return 1;
  if (policy.threads > 0) return policy.threads;
  if (const char* env = std::getenv("RIESZ_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return std::size_t(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<double> SparseHessian::multiply(std::span<const double> v) const {
  std::vector<double> out(dim, 0.0);
  for (const auto& e : entries) {
    out[e.row] += e.value * v[e.col];
    if (e.row != e.col) out[e.col] += e.value * v[e.row];
  }
  return out;
}

std::vector<double> SparseHessian::to_dense() const {
  std::vector<double> out(dim * dim, 0.0);
  for (const auto& e : entries) {
    out[e.row * dim + e.col] += e.value;
    if (e.row != e.col) out[e.col * dim + e.row] += e.value;
  }
  return out;
}

double energy_full(const Configuration& config, const Manifold& manifold,
                   const RieszParams& params, const ExecPolicy& policy) {
  check_config(config, manifold);
  const std::size_t n = config.size();
  const double guard = 1e-14 * manifold.diameter();
  const bool weighted = params.weight_mode == WeightMode::FromDensity;
  std::size_t threads = resolve_threads(policy);
  if (n * n / 2 < kParallelThreshold) threads = 1;
  auto acc = run_partitioned(threads, 0, false, n, [&](std::size_t tid, Accumulator& a) {
    for (std::size_t i = tid; i < n; i += threads) {
      const auto xi = config.point(i);
      CompensatedSum row;
      for (std::size_t j = i + 1; j < n; ++j) {
        const double u = manifold.pair_distance(xi, config.point(j));
        if (u < guard) throw DegenerateConfiguration();
        const double w = weighted ? eval_weight(params, xi, config.point(j)) : 1.0;
        row.add(2.0 * w * std::pow(u, -params.s));
      }
      a.energy.add(row);
    }
  });
  return acc.energy.value();
}

EnergyBreakdown energy_truncated(const Configuration& config, const Manifold& manifold,
                                 const RieszParams& params, std::size_t n_schedule,
                                 const ExecPolicy& policy) {
  check_config(config, manifold);
  const PairKernel kernel(config, manifold, params, n_schedule, false);
  if (config.size() < 2) return {};
  const PairList list = build_pair_list(config, kernel.radius(), manifold.periodic_box());
  const auto acc = evaluate_list(config, list, kernel, false, resolve_threads(policy));
  return {acc.energy.value(), acc.terms, list.build_stats.candidates};
}

EnergyBreakdown energy_truncated_bruteforce(const Configuration& config,
                                            const Manifold& manifold,
                                            const RieszParams& params, std::size_t n_schedule,
                                            const ExecPolicy& policy) {
  check_config(config, manifold);
  const PairKernel kernel(config, manifold, params, n_schedule, false);
  const std::size_t n = config.size();
  const std::size_t p = config.ambient_dim();
  std::size_t threads = resolve_threads(policy);
  if (n * n / 2 < kParallelThreshold) threads = 1;
  auto acc = run_partitioned(threads, 0, false, n, [&](std::size_t tid, Accumulator& a) {
    std::vector<double> r(p);
    for (std::size_t i = tid; i < n; i += threads) {
      const auto xi = config.point(i);
      for (std::size_t j = i + 1; j < n; ++j) {
        ++a.candidates;
        const double u2 = detail::displacement_into(xi, config.point(j), kernel.box(), r.data());
        kernel.term(i, j, r.data(), u2, a, false);
      }
    }
  });
  return {acc.energy.value(), acc.terms, acc.candidates};
}

std::vector<double> gradient_truncated(const Configuration& config, const Manifold& manifold,
                                       const RieszParams& params, std::size_t n_schedule,
                                       const ExecPolicy& policy) {
  check_config(config, manifold);
  const PairKernel kernel(config, manifold, params, n_schedule, true);
  if (config.size() < 2) return std::vector<double>(config.coords().size(), 0.0);
  const PairList list = build_pair_list(config, kernel.radius(), manifold.periodic_box());
  auto acc = evaluate_list(config, list, kernel, true, resolve_threads(policy));
  return std::move(acc.grad);
}

SparseHessian hessian_truncated(const Configuration& config, const Manifold& manifold,
                                const RieszParams& params, std::size_t n_schedule) {
  check_config(config, manifold);
  params.validate();
  if (!cutoff_is_smooth(params.cutoff))
    throw ParameterError("Hessian requires a differentiable cutoff");
  if (radius_is_pairwise(params.radius))
    throw ParameterError("Hessian requires a pair-independent radius");

  const std::size_t n = config.size();
  const std::size_t p = config.ambient_dim();
  SparseHessian H;
  H.dim = n * p;
  if (n < 2) return H;

  const double rho = eval_radius(params.radius, params.d, n_schedule);
  const double guard = 1e-14 * manifold.diameter();
  const double s = params.s;
  const auto box_opt = manifold.periodic_box();
  const std::vector<double> box = box_opt.value_or(std::vector<double>{});

  std::vector<FieldJet> site(n);
  for (std::size_t i = 0; i < n; ++i) site[i] = site_factor(params, config.point(i));

  std::vector<double> diag(n * p * p, 0.0);
  const PairList list = build_pair_list(config, rho, box_opt);
  std::vector<double> r(p), rhat(p), Hh(p * p), dh(p), block(p * p);

  for (const auto& [i, j] : list.pairs) {
    const double u2 = detail::displacement_into(config.point(i), config.point(j), box, r.data());
    if (u2 > rho * rho) continue;
    const double u = std::sqrt(u2);
    if (u < guard) throw DegenerateConfiguration();
    const double t = u / rho;
    if (t >= 1.0) continue;
    const CutoffValue phi = eval_cutoff(params.cutoff, t);
    const double us = std::pow(u, -s);
    const double h = phi.value * us;
    const double h1 = phi.d1 / rho * us - s * h / u;
    const double h2 = phi.d2 / (rho * rho) * us - 2.0 * s * phi.d1 / rho * us / u +
                      s * (s + 1.0) * h / u2;
    for (std::size_t a = 0; a < p; ++a) {
      rhat[a] = r[a] / u;
      dh[a] = h1 * rhat[a];  // ∇_{x_i} h
    }
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = 0; b < p; ++b)
        Hh[a * p + b] = h2 * rhat[a] * rhat[b] + (h1 / u) * ((a == b ? 1.0 : 0.0) - rhat[a] * rhat[b]);

    const FieldJet& gi = site[i];
    const FieldJet& gj = site[j];
    const double w = gi.value * gj.value;
    double* Di = diag.data() + i * p * p;
    double* Dj = diag.data() + j * p * p;
    for (std::size_t a = 0; a < p; ++a) {
      for (std::size_t b = 0; b < p; ++b) {
        const std::size_t ab = a * p + b;
        // ∂²F/∂x_i²  with F = h(u) g(x_i) g(x_j)
        Di[ab] += 2.0 * (w * Hh[ab] + gj.value * (dh[a] * gi.grad[b] + gi.grad[a] * dh[b]) +
                         h * gj.value * gi.hess[ab]);
        // ∂²F/∂x_j², using ∇_{x_j} h = -∇_{x_i} h
        Dj[ab] += 2.0 * (w * Hh[ab] - gi.value * (dh[a] * gj.grad[b] + gj.grad[a] * dh[b]) +
                         h * gi.value * gj.hess[ab]);
        // ∂²F/∂x_i,a ∂x_j,b
        block[ab] = 2.0 * (-w * Hh[ab] + gi.value * dh[a] * gj.grad[b] -
                           gj.value * gi.grad[a] * dh[b] + h * gi.grad[a] * gj.grad[b]);
      }
    }
    // Store the off-diagonal block in the lower triangle.
    const std::size_t hi = std::max<std::size_t>(i, j), lo = std::min<std::size_t>(i, j);
    const bool i_is_hi = (hi == i);
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = 0; b < p; ++b) {
        const double v = i_is_hi ? block[a * p + b] : block[b * p + a];
        H.entries.push_back({hi * p + a, lo * p + b, v});
      }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = 0; b <= a; ++b)
        H.entries.push_back({i * p + a, i * p + b, diag[i * p * p + a * p + b]});
  return H;
}

EnergyEvaluator::EnergyEvaluator(const Manifold& manifold, const RieszParams& params,
                                 std::size_t n_schedule, ExecPolicy policy, bool paranoid)
    : manifold_(manifold),
      params_(params),
      n_(n_schedule),
      policy_(policy),
      paranoid_(paranoid),
      radius_(eval_radius(params.radius, params.d, n_schedule)),
      box_(manifold.periodic_box().value_or(std::vector<double>{})) {
  params.validate();
}

Evaluation EnergyEvaluator::evaluate(const Configuration& config, bool with_gradient) {
  check_config(config, manifold_);
  const PairKernel kernel(config, manifold_, params_, n_, with_gradient);
  Evaluation out;
  if (config.size() < 2) {
    if (with_gradient) out.gradient.assign(config.coords().size(), 0.0);
    return out;
  }
  const bool stale = !have_list_ || paranoid_ || list_.reference.size() != config.size() ||
                     max_displacement(list_, config, box_) >= 0.5 * radius_;
  std::uint64_t build_candidates = 0;
  if (stale) {
    list_ = build_pair_list(config, 2.0 * radius_, manifold_.periodic_box());
    have_list_ = true;
    ++rebuilds_;
    out.rebuilt = true;
    build_candidates = list_.build_stats.candidates;
  }
  auto acc = evaluate_list(config, list_, kernel, with_gradient, resolve_threads(policy_));
  out.energy = {acc.energy.value(), acc.terms, acc.candidates + build_candidates};
  if (with_gradient) {
    out.force_scale = max_abs(acc.force_abs);
    out.gradient = std::move(acc.grad);
  }
  return out;
}

}  // namespace riesz
