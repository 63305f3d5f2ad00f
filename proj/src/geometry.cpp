#include "riesz/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace riesz {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double norm(std::span<const double> x) {
  double acc = 0.0;
  for (double c : x) acc += c * c;
  return std::sqrt(acc);
}

double wrap(double x, double side) {
  double r = std::fmod(x, side);
  if (r < 0.0) r += side;
  if (r >= side) r = 0.0;
  return r;
}

// Points on a boundary after a clamp sit there up to a few ulps.
constexpr double kBoundaryTol = 1e-10;

}  // namespace

Configuration::Configuration(std::size_t ambient_dim, std::size_t intrinsic_dim)
    : p_(ambient_dim), d_(intrinsic_dim) {
  if (p_ == 0 || d_ == 0 || d_ > p_)
    throw GeometryError("configuration requires 1 <= d <= p");
}

Configuration::Configuration(std::size_t ambient_dim, std::size_t intrinsic_dim,
                             std::vector<double> coords)
    : Configuration(ambient_dim, intrinsic_dim) {
  if (coords.size() % p_ != 0)
    throw GeometryError("coordinate count is not a multiple of the ambient dimension");
  coords_ = std::move(coords);
}

void Configuration::push_back(std::span<const double> x) {
  if (x.size() != p_) throw GeometryError("point has wrong dimension");
  coords_.insert(coords_.end(), x.begin(), x.end());
}

bool Configuration::all_finite() const {
  return std::all_of(coords_.begin(), coords_.end(),
                     [](double c) { return std::isfinite(c); });
}

Manifold::Manifold(Variant v) : v_(std::move(v)) {
  std::visit(overloaded{
                 [](const Circle& c) {
                   if (!(c.radius > 0.0)) throw GeometryError("circle radius must be positive");
                 },
                 [](const Sphere2& c) {
                   if (!(c.radius > 0.0)) throw GeometryError("sphere radius must be positive");
                 },
                 [](const SphericalShell& c) {
                   if (!(c.inner > 0.0 && c.inner < c.outer))
                     throw GeometryError("shell requires 0 < r0 < r1");
                 },
                 [](const UnitCube& c) {
                   if (c.dim == 0) throw GeometryError("cube dimension must be positive");
                 },
                 [](const FlatTorus& c) {
                   if (c.sides.empty()) throw GeometryError("torus needs at least one side");
                   for (double L : c.sides)
                     if (!(L > 0.0)) throw GeometryError("torus sides must be positive");
                 },
             },
             v_);
}

std::string Manifold::name() const {
  return std::visit(overloaded{
                        [](const Circle&) { return std::string("circle"); },
                        [](const Sphere2&) { return std::string("sphere"); },
                        [](const SphericalShell&) { return std::string("shell"); },
                        [](const UnitCube&) { return std::string("cube"); },
                        [](const FlatTorus&) { return std::string("torus"); },
                    },
                    v_);
}

std::size_t Manifold::ambient_dim() const {
  return std::visit(overloaded{
                        [](const Circle&) -> std::size_t { return 2; },
                        [](const Sphere2&) -> std::size_t { return 3; },
                        [](const SphericalShell&) -> std::size_t { return 3; },
                        [](const UnitCube& c) -> std::size_t { return c.dim; },
                        [](const FlatTorus& c) -> std::size_t { return c.sides.size(); },
                    },
                    v_);
}

std::size_t Manifold::intrinsic_dim() const {
  return std::visit(overloaded{
                        [](const Circle&) -> std::size_t { return 1; },
                        [](const Sphere2&) -> std::size_t { return 2; },
                        [](const SphericalShell&) -> std::size_t { return 3; },
                        [](const UnitCube& c) -> std::size_t { return c.dim; },
                        [](const FlatTorus& c) -> std::size_t { return c.sides.size(); },
                    },
                    v_);
}

double Manifold::hausdorff_measure() const {
  using std::numbers::pi;
  return std::visit(
      overloaded{
          [](const Circle& c) { return 2.0 * pi * c.radius; },
          [](const Sphere2& c) { return 4.0 * pi * c.radius * c.radius; },
          [](const SphericalShell& c) {
            return 4.0 / 3.0 * pi * (std::pow(c.outer, 3) - std::pow(c.inner, 3));
          },
          [](const UnitCube&) { return 1.0; },
          [](const FlatTorus& c) {
            double v = 1.0;
            for (double L : c.sides) v *= L;
            return v;
          },
      },
      v_);
}

double Manifold::diameter() const {
  return std::visit(overloaded{
                        [](const Circle& c) { return 2.0 * c.radius; },
                        [](const Sphere2& c) { return 2.0 * c.radius; },
                        [](const SphericalShell& c) { return 2.0 * c.outer; },
                        [](const UnitCube& c) { return std::sqrt(double(c.dim)); },
                        [](const FlatTorus& c) {
                          double acc = 0.0;
                          for (double L : c.sides) acc += 0.25 * L * L;
                          return std::sqrt(acc);
                        },
                    },
                    v_);
}

std::optional<std::vector<double>> Manifold::periodic_box() const {
  if (const auto* t = std::get_if<FlatTorus>(&v_)) return t->sides;
  return std::nullopt;
}

void Manifold::project(std::span<const double> x, std::span<double> out) const {
  const std::size_t p = ambient_dim();
  if (x.size() != p || out.size() != p) throw GeometryError("point has wrong dimension");
  auto radial = [&](double target) {
    const double r = norm(x);
    if (r == 0.0) throw GeometryError("undefined projection of the origin");
    for (std::size_t k = 0; k < p; ++k) out[k] = x[k] * (target / r);
  };
  std::visit(overloaded{
                 [&](const Circle& c) { radial(c.radius); },
                 [&](const Sphere2& c) { radial(c.radius); },
                 [&](const SphericalShell& c) {
                   const double r = norm(x);
                   if (r == 0.0) {
                     std::fill(out.begin(), out.end(), 0.0);
                     out[0] = c.inner;
                   } else if (r < c.inner) {
                     radial(c.inner);
                   } else if (r > c.outer) {
                     radial(c.outer);
                   } else {
                     std::copy(x.begin(), x.end(), out.begin());
                   }
                 },
                 [&](const UnitCube&) {
                   for (std::size_t k = 0; k < p; ++k) out[k] = std::clamp(x[k], 0.0, 1.0);
                 },
                 [&](const FlatTorus& t) {
                   for (std::size_t k = 0; k < p; ++k) out[k] = wrap(x[k], t.sides[k]);
                 },
             },
             v_);
}

std::vector<double> Manifold::project(std::span<const double> x) const {
  std::vector<double> out(x.size());
  project(x, out);
  return out;
}

void Manifold::tangent_project(std::span<const double> x, std::span<const double> v,
                               std::span<double> out) const {
  const std::size_t p = ambient_dim();
  std::copy(v.begin(), v.end(), out.begin());
  auto remove_radial = [&](double sign_filter) {
    // sign_filter: 0 removes the radial part unconditionally, +1 only when
    // v points outward, -1 only when v points inward.
    const double r = norm(x);
    if (r == 0.0) return;
    double vn = 0.0;
    for (std::size_t k = 0; k < p; ++k) vn += v[k] * x[k] / r;
    if (sign_filter > 0.0 && vn <= 0.0) return;
    if (sign_filter < 0.0 && vn >= 0.0) return;
    for (std::size_t k = 0; k < p; ++k) out[k] -= vn * x[k] / r;
  };
  std::visit(overloaded{
                 [&](const Circle&) { remove_radial(0.0); },
                 [&](const Sphere2&) { remove_radial(0.0); },
                 [&](const SphericalShell& c) {
                   const double r = norm(x);
                   if (r >= c.outer * (1.0 - kBoundaryTol)) remove_radial(+1.0);
                   else if (r <= c.inner * (1.0 + kBoundaryTol)) remove_radial(-1.0);
                 },
                 [&](const UnitCube&) {
                   for (std::size_t k = 0; k < p; ++k) {
                     if (x[k] <= kBoundaryTol && v[k] < 0.0) out[k] = 0.0;
                     if (x[k] >= 1.0 - kBoundaryTol && v[k] > 0.0) out[k] = 0.0;
                   }
                 },
                 [&](const FlatTorus&) {},
             },
             v_);
}

std::vector<double> Manifold::tangent_project(std::span<const double> x,
                                              std::span<const double> v) const {
  std::vector<double> out(v.size());
  tangent_project(x, v, out);
  return out;
}

double Manifold::membership_error(std::span<const double> x) const {
  if (x.size() != ambient_dim()) return INFINITY;
  for (double c : x)
    if (!std::isfinite(c)) return INFINITY;
  return std::visit(overloaded{
                        [&](const Circle& c) { return std::abs(norm(x) - c.radius); },
                        [&](const Sphere2& c) { return std::abs(norm(x) - c.radius); },
                        [&](const SphericalShell& c) {
                          const double r = norm(x);
                          return std::max({0.0, c.inner - r, r - c.outer});
                        },
                        [&](const UnitCube&) {
                          double e = 0.0;
                          for (double c : x) e = std::max({e, -c, c - 1.0});
                          return e;
                        },
                        [&](const FlatTorus& t) {
                          double e = 0.0;
                          for (std::size_t k = 0; k < x.size(); ++k)
                            e = std::max({e, -x[k], x[k] - t.sides[k]});
                          return e;
                        },
                    },
                    v_);
}

void Manifold::displacement(std::span<const double> x, std::span<const double> y,
                            std::span<double> out) const {
  const std::size_t p = x.size();
  for (std::size_t k = 0; k < p; ++k) out[k] = x[k] - y[k];
  if (const auto* t = std::get_if<FlatTorus>(&v_)) {
    for (std::size_t k = 0; k < p; ++k) {
      const double L = t->sides[k];
      out[k] -= L * std::nearbyint(out[k] / L);
    }
  }
}

double Manifold::pair_distance(std::span<const double> x, std::span<const double> y) const {
  double acc = 0.0;
  const auto* t = std::get_if<FlatTorus>(&v_);
  for (std::size_t k = 0; k < x.size(); ++k) {
    double dk = x[k] - y[k];
    if (t) dk -= t->sides[k] * std::nearbyint(dk / t->sides[k]);
    acc += dk * dk;
  }
  return std::sqrt(acc);
}

Configuration Manifold::sample_uniform(std::uint64_t seed, std::size_t count) const {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t p = ambient_dim();
  Configuration out(p, intrinsic_dim());
  std::vector<double> x(p);

  auto gaussian_direction = [&] {
    double r = 0.0;
    do {
      for (auto& c : x) c = gauss(rng);
      r = norm(x);
    } while (r < 1e-300);
    for (auto& c : x) c /= r;
  };

  for (std::size_t i = 0; i < count; ++i) {
    std::visit(overloaded{
                   [&](const Circle& c) {
                     const double t = 2.0 * std::numbers::pi * unif(rng);
                     x[0] = c.radius * std::cos(t);
                     x[1] = c.radius * std::sin(t);
                   },
                   [&](const Sphere2& c) {
                     gaussian_direction();
                     for (auto& v : x) v *= c.radius;
                   },
                   [&](const SphericalShell& c) {
                     gaussian_direction();
                     const double a = std::pow(c.inner, 3), b = std::pow(c.outer, 3);
                     double r = std::cbrt(a + unif(rng) * (b - a));
                     r = std::clamp(r, c.inner, c.outer);
                     for (auto& v : x) v *= r;
                   },
                   [&](const UnitCube&) {
                     for (auto& v : x) v = unif(rng);
                   },
                   [&](const FlatTorus& t) {
                     for (std::size_t k = 0; k < p; ++k) x[k] = wrap(unif(rng) * t.sides[k], t.sides[k]);
                   },
               },
               v_);
    out.push_back(x);
  }
  return out;
}

}  // namespace riesz
