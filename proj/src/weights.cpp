#include "riesz/weights.hpp"

#include <cmath>
#include <numbers>

namespace riesz {

Density Density::uniform(const Manifold& m) {
  Density out;
  out.p_ = m.ambient_dim();
  out.a_ = 1.0 / m.hausdorff_measure();
  out.b_ = 0.0;
  if (const auto* s = std::get_if<Sphere2>(&m.variant())) out.sphere_radius_ = s->radius;
  out.min_ = out.max_ = out.a_;
  return out;
}

Density Density::zpoly(const Manifold& m, double a, double b) {
  const auto* sphere = std::get_if<Sphere2>(&m.variant());
  if (!sphere) throw ParameterError("zpoly density is only defined on the sphere");
  const double R = sphere->radius;
  if (!(a > 0.0) || !(a + b * R * R > 0.0))
    throw ParameterError("zpoly density must be positive on the sphere");
  // ∫_{S_R} (a + b z^2) dA = 4 pi R^2 (a + b R^2 / 3)
  const double mass = 4.0 * std::numbers::pi * R * R * (a + b * R * R / 3.0);
  Density out;
  out.p_ = 3;
  out.a_ = a / mass;
  out.b_ = b / mass;
  out.sphere_radius_ = R;
  const double at_pole = out.a_ + out.b_ * R * R;
  out.min_ = std::min(out.a_, at_pole);
  out.max_ = std::max(out.a_, at_pole);
  return out;
}

double Density::operator()(std::span<const double> x) const {
  if (b_ == 0.0) return a_;
  const double z = x[p_ - 1];
  return a_ + b_ * z * z;
}

FieldJet Density::jet(std::span<const double> x) const {
  FieldJet j;
  j.value = (*this)(x);
  j.grad.assign(p_, 0.0);
  j.hess.assign(p_ * p_, 0.0);
  if (b_ != 0.0) {
    j.grad[p_ - 1] = 2.0 * b_ * x[p_ - 1];
    j.hess[p_ * p_ - 1] = 2.0 * b_;
  }
  return j;
}

double Density::slab_mass(double z0, double z1) const {
  if (sphere_radius_ == 0.0) throw ParameterError("slab mass is only defined on the sphere");
  // Archimedes: dA = 2 pi R dz on the sphere of radius R.
  return 2.0 * std::numbers::pi * sphere_radius_ *
         (a_ * (z1 - z0) + b_ * (z1 * z1 * z1 - z0 * z0 * z0) / 3.0);
}

CutoffValue eval_cutoff(const CutoffSpec& c, double t) {
  if (!(t > 0.0)) throw ParameterError("cutoff argument must be positive");
  if (std::holds_alternative<HardCutoff>(c)) {
    return t <= 1.0 ? CutoffValue{1.0, 0.0, 0.0} : CutoffValue{};
  }
  const int k = std::get<PolyCutoff>(c).order;
  if (t >= 1.0) return {};
  const double q = 1.0 - t * t;
  const double qk1 = std::pow(q, k - 1);
  CutoffValue v;
  v.value = qk1 * q;
  v.d1 = -2.0 * k * t * qk1;
  v.d2 = -2.0 * k * qk1;
  if (k >= 2) v.d2 += 4.0 * k * (k - 1) * t * t * std::pow(q, k - 2);
  return v;
}

bool cutoff_is_smooth(const CutoffSpec& c) {
  const auto* poly = std::get_if<PolyCutoff>(&c);
  return poly && poly->order >= 3;
}

std::string describe(const CutoffSpec& c) {
  if (std::holds_alternative<HardCutoff>(c)) return "hard";
  return "poly(" + std::to_string(std::get<PolyCutoff>(c).order) + ")";
}

double eval_radius(const RadiusSchedule& r, std::size_t d, std::size_t n) {
  if (n < 2) throw ParameterError("need at least two points");
  const double nd = std::pow(double(n), -1.0 / double(d));
  if (const auto* c = std::get_if<ConstRadius>(&r)) return c->scale * nd;
  if (const auto* l = std::get_if<LogRadius>(&r)) return l->scale * std::log(double(n)) * nd;
  return std::get<PairRadius>(r).sup(n);
}

double eval_radius(const RadiusSchedule& r, std::size_t d, std::size_t n,
                   std::span<const double> x, std::span<const double> y,
                   std::span<double> grad_x) {
  if (const auto* pr = std::get_if<PairRadius>(&r)) {
    if (n < 2) throw ParameterError("need at least two points");
    return pr->value(x, y, n, grad_x);
  }
  for (double& g : grad_x) g = 0.0;
  return eval_radius(r, d, n);
}

bool radius_is_pairwise(const RadiusSchedule& r) { return std::holds_alternative<PairRadius>(r); }

bool radius_is_admissible(const RadiusSchedule& r) {
  return !std::holds_alternative<ConstRadius>(r);
}

void RieszParams::validate() const {
  if (d == 0) throw ParameterError("intrinsic dimension must be positive");
  if (!(s > double(d))) throw ParameterError("hypersingular regime required: s must exceed d");
  if (const auto* poly = std::get_if<PolyCutoff>(&cutoff); poly && poly->order < 1)
    throw ParameterError("cutoff order must be at least 1");
  if (const auto* c = std::get_if<ConstRadius>(&radius); c && !(c->scale > 0.0))
    throw ParameterError("radius scale must be positive");
  if (const auto* l = std::get_if<LogRadius>(&radius); l && !(l->scale > 0.0))
    throw ParameterError("radius scale must be positive");
  if (weight_mode == WeightMode::FromDensity) {
    if (!density.is_set()) throw ParameterError("density weights need a density");
    if (!(density.sigma_min() > 0.0)) throw ParameterError("density must be bounded below");
  }
}

double eval_weight(const RieszParams& params, std::span<const double> x,
                   std::span<const double> y) {
  if (params.weight_mode == WeightMode::Unit) return 1.0;
  const double q = params.s / (2.0 * double(params.d));
  return std::pow(params.density(x) * params.density(y), -q);
}

FieldJet site_factor(const RieszParams& params, std::span<const double> x) {
  const std::size_t p = x.size();
  FieldJet g;
  g.grad.assign(p, 0.0);
  g.hess.assign(p * p, 0.0);
  if (params.weight_mode == WeightMode::Unit) {
    g.value = 1.0;
    return g;
  }
  const double q = params.s / (2.0 * double(params.d));
  const FieldJet sig = params.density.jet(x);
  const double sv = sig.value;
  g.value = std::pow(sv, -q);
  const double c1 = -q * g.value / sv;                  // -q sigma^{-q-1}
  const double c2 = q * (q + 1.0) * g.value / (sv * sv);  // q(q+1) sigma^{-q-2}
  for (std::size_t a = 0; a < p; ++a) {
    g.grad[a] = c1 * sig.grad[a];
    for (std::size_t b = 0; b < p; ++b)
      g.hess[a * p + b] = c2 * sig.grad[a] * sig.grad[b] + c1 * sig.hess[a * p + b];
  }
  return g;
}

}  // namespace riesz
