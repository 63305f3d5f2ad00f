#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "riesz/energy.hpp"
#include "support.hpp"

using namespace riesz;
using riesz::testing::circle_points;
using riesz::testing::rel_err;

namespace {

RieszParams unit_params(double s, std::size_t d, CutoffSpec cutoff = PolyCutoff{3},
                        RadiusSchedule radius = LogRadius{1.0}) {
  RieszParams p;
  p.s = s;
  p.d = d;
  p.cutoff = cutoff;
  p.radius = radius;
  return p;
}

// Sum over ordered pairs of Phi(u / r) w u^{-s} with u <= r, by a double loop.
double restricted_sum(const Configuration& c, const Manifold& m, const RieszParams& p, double r) {
  double acc = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t j = 0; j < c.size(); ++j) {
      if (i == j) continue;
      const double u = m.pair_distance(c.point(i), c.point(j));
      if (u > r) continue;
      acc += eval_cutoff(p.cutoff, u / r).value * eval_weight(p, c.point(i), c.point(j)) *
             std::pow(u, -p.s);
    }
  return acc;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Central differences of the truncated energy in every coordinate.
std::vector<double> fd_gradient(Configuration c, const Manifold& m, const RieszParams& p, double h) {
  std::vector<double> g(c.coords().size());
  const std::size_t n = c.size();
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double x0 = c.coords()[k];
    c.coords()[k] = x0 + h;
    const double ep = energy_truncated_bruteforce(c, m, p, n).total;
    c.coords()[k] = x0 - h;
    const double em = energy_truncated_bruteforce(c, m, p, n).total;
    c.coords()[k] = x0;
    g[k] = (ep - em) / (2 * h);
  }
  return g;
}

}  // namespace

TEST_SUITE("energy") {

TEST_CASE("full energy examples") {
  const auto circle = Manifold::circle();
  const auto p2 = unit_params(2.0, 1);
  // Two points at distance 1: chord of angle pi / 3.
  Configuration two(2, 1);
  const double a[2] = {1.0, 0.0}, b[2] = {0.5, std::sqrt(3.0) / 2.0};
  two.push_back(a);
  two.push_back(b);
  CHECK(energy_full(two, circle, unit_params(3.5, 1)) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(energy_full(circle_points(4), circle, p2) == doctest::Approx(5.0).epsilon(1e-14));
  for (std::size_t n : {10, 100, 1000}) {
    double oracle = 0.0;
    for (std::size_t k = 1; k < n; ++k)
      oracle += std::pow(2.0 * std::sin(std::numbers::pi * double(k) / double(n)), -2.0);
    oracle *= double(n);
    const double closed = double(n) * (double(n * n) - 1.0) / 12.0;
    CHECK(rel_err(oracle, closed) < 1e-12);
    CHECK(rel_err(energy_full(circle_points(n), circle, p2), closed) < 1e-9);
  }
}

TEST_CASE("truncated energy examples") {
  const auto circle = Manifold::circle();
  // N = 2, d = 1: ConstRadius{2} gives r = 1.
  auto p = unit_params(2.0, 1, PolyCutoff{3}, ConstRadius{2.0});
  Configuration far(2, 1);
  const double a[2] = {1.0, 0.0}, b[2] = {-1.0, 0.0};
  far.push_back(a);
  far.push_back(b);
  CHECK(energy_truncated(far, circle, p, 2).total == 0.0);
  p.cutoff = HardCutoff{};
  CHECK(energy_truncated(far, circle, p, 2).total == 0.0);

  p.cutoff = PolyCutoff{3};
  const double t = 2.0 * std::asin(0.25);  // chord 0.5
  Configuration near(2, 1);
  const double c[2] = {std::cos(t), std::sin(t)};
  near.push_back(a);
  near.push_back(c);
  CHECK(energy_truncated(near, circle, p, 2).total == doctest::Approx(3.375).epsilon(1e-13));
}

TEST_CASE("truncated energy equals the restricted brute-force sum") {
  const auto sphere = Manifold::sphere();
  const auto xs = sphere.sample_uniform(4, 50);
  // N = 50, d = 2: r = c / sqrt(50) = 0.4.
  auto p = unit_params(3.5, 2, HardCutoff{}, ConstRadius{0.4 * std::sqrt(50.0)});
  CHECK(rel_err(energy_truncated(xs, sphere, p, 50).total, restricted_sum(xs, sphere, p, 0.4)) < 1e-12);

  std::mt19937_64 rng(23);
  for (const auto& m : riesz::testing::all_manifolds()) {
    const std::size_t d = m.intrinsic_dim();
    for (int trial = 0; trial < 10; ++trial) {
      const std::size_t n = 2 + rng() % 200;
      const auto c = m.sample_uniform(rng(), n);
      const double r = 0.05 + 0.3 * double(rng() % 1000) / 1000.0;
      const auto q = unit_params(d + 1.5, d, trial % 2 ? CutoffSpec{HardCutoff{}} : CutoffSpec{PolyCutoff{3}},
                                 ConstRadius{r * std::pow(double(n), 1.0 / double(d))});
      const double oracle = restricted_sum(c, m, q, r);
      const double got = energy_truncated(c, m, q, n).total;
      if (oracle == 0.0) CHECK(got == 0.0);
      else CHECK(rel_err(got, oracle) < 1e-12);
      CHECK(rel_err(energy_truncated_bruteforce(c, m, q, n).total, got) < 1e-12);
    }
  }
}

TEST_CASE("truncation never exceeds the full energy") {
  const auto m = Manifold::sphere();
  const auto xs = m.sample_uniform(2, 300);
  for (double scale : {0.5, 1.0, 3.0}) {
    const auto p = unit_params(3.5, 2, PolyCutoff{3}, LogRadius{scale});
    CHECK(energy_truncated(xs, m, p, xs.size()).total <= energy_full(xs, m, p));
  }
}

TEST_CASE("scale covariance and translation invariance") {
  const auto xs = Manifold::sphere(1.0).sample_uniform(6, 80);
  const double lambda = 1.7;
  Configuration scaled = xs;
  for (auto& c : scaled.coords()) c *= lambda;
  const auto p = unit_params(3.5, 2);
  const double e1 = energy_full(xs, Manifold::sphere(1.0), p);
  const double e2 = energy_full(scaled, Manifold::sphere(lambda), p);
  CHECK(rel_err(e2, std::pow(lambda, -3.5) * e1) < 1e-12);

  const auto cube = Manifold::cube(3);
  const auto ys = cube.sample_uniform(6, 80);
  Configuration shifted = ys;
  for (std::size_t i = 0; i < shifted.size(); ++i)
    for (std::size_t k = 0; k < 3; ++k) shifted.point(i)[k] += 0.25 * double(k + 1);
  const auto q = unit_params(4.0, 3);
  CHECK(rel_err(energy_full(shifted, cube, q), energy_full(ys, cube, q)) < 1e-12);
  CHECK(rel_err(energy_truncated(shifted, cube, q, 80).total, energy_truncated(ys, cube, q, 80).total) < 1e-12);
}

TEST_CASE("coincident points are degenerate") {
  auto xs = Manifold::sphere().sample_uniform(1, 30);
  xs.push_back(xs.point(4));
  const auto p = unit_params(3.5, 2);
  CHECK_THROWS_WITH_AS(energy_full(xs, Manifold::sphere(), p), "degenerate configuration",
                       DegenerateConfiguration);
  CHECK_THROWS_AS(energy_truncated(xs, Manifold::sphere(), p, xs.size()), DegenerateConfiguration);
  CHECK_THROWS_AS(gradient_truncated(xs, Manifold::sphere(), p, xs.size()), DegenerateConfiguration);
}

TEST_CASE("gradient example") {
  // Two points at distance 1, s = 2, Hard cutoff with r = 10: d/dx of 2 u^{-2}.
  const auto m = Manifold::circle(0.5);
  Configuration c(2, 1);
  const double a[2] = {-0.5, 0.0}, b[2] = {0.5, 0.0};
  c.push_back(a);
  c.push_back(b);
  const auto p = unit_params(2.0, 1, HardCutoff{}, ConstRadius{20.0});
  const auto g = gradient_truncated(c, m, p, 2);
  CHECK(g[0] == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(g[2] == doctest::Approx(-4.0).epsilon(1e-14));
  CHECK(g[1] == 0.0);
}

TEST_CASE("equally spaced circle points are critical") {
  const auto m = Manifold::circle();
  const auto c = circle_points(64, 1.0, 0.3);
  for (double scale : {2.0, 4.0}) {
    const auto p = unit_params(2.0, 1, PolyCutoff{3}, LogRadius{scale});
    const auto g = gradient_truncated(c, m, p, 64);
    double gmax = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      const auto x = c.point(i);
      const double tang = -x[1] * g[2 * i] + x[0] * g[2 * i + 1];
      gmax = std::max(gmax, std::abs(tang));
    }
    REQUIRE(max_abs(g) > 0.0);
    CHECK(gmax < 1e-9 * max_abs(g));
  }
}

TEST_CASE("gradient matches central differences") {
  const auto m = Manifold::sphere();
  for (WeightMode mode : {WeightMode::Unit, WeightMode::FromDensity}) {
    auto p = unit_params(3.5, 2, PolyCutoff{3}, LogRadius{2.0});
    p.weight_mode = mode;
    p.density = Density::zpoly(m, 1.0, 1.0);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto xs = m.sample_uniform(seed, 50);
      const auto g = gradient_truncated(xs, m, p, 50);
      const auto fd = fd_gradient(xs, m, p, 1e-6);
      double err = 0.0;
      for (std::size_t k = 0; k < g.size(); ++k) err = std::max(err, std::abs(g[k] - fd[k]));
      CHECK(err / max_abs(fd) < 1e-5);
    }
  }
  // Flat torus with wrap-around pairs.
  const auto t = Manifold::torus({1.0, 1.0});
  const auto ts = t.sample_uniform(3, 60);
  const auto q = unit_params(4.0, 2, PolyCutoff{4}, LogRadius{1.5});
  const auto g = gradient_truncated(ts, t, q, 60);
  const auto fd = fd_gradient(ts, t, q, 1e-7);
  double err = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) err = std::max(err, std::abs(g[k] - fd[k]));
  CHECK(err / max_abs(fd) < 1e-5);
}

TEST_CASE("gradient is continuous across the cutoff radius") {
  const auto m = Manifold::circle();
  const auto p = unit_params(2.0, 1, PolyCutoff{3}, ConstRadius{1.0});  // r = 0.5 at N = 2
  auto pair_at = [&](double chord) {
    Configuration c(2, 1);
    const double t = 2.0 * std::asin(chord / 2.0);
    const double a[2] = {1.0, 0.0}, b[2] = {std::cos(t), std::sin(t)};
    c.push_back(a);
    c.push_back(b);
    return gradient_truncated(c, m, p, 2);
  };
  const auto inside = pair_at(0.5 - 1e-9), outside = pair_at(0.5 + 1e-9);
  for (std::size_t k = 0; k < inside.size(); ++k) CHECK(std::abs(inside[k] - outside[k]) < 1e-8);
}

TEST_CASE("Hessian checks") {
  const auto m = Manifold::sphere();
  auto hard = unit_params(3.5, 2, HardCutoff{});
  const auto xs = m.sample_uniform(3, 20);
  CHECK_THROWS_WITH_AS(hessian_truncated(xs, m, hard, 20), "Hessian requires a differentiable cutoff",
                       ParameterError);

  // Far apart under the cutoff: all zero.
  Configuration far(3, 2);
  const double a[3] = {0, 0, 1}, b[3] = {0, 0, -1};
  far.push_back(a);
  far.push_back(b);
  const auto p = unit_params(3.5, 2);
  const auto H0 = hessian_truncated(far, m, p, 2);
  for (const auto& e : H0.entries) CHECK(e.value == 0.0);

  // Two points on a line: (1,1) entry equals d^2/du^2 of 2 u^{-s} Phi(u / r).
  const auto circle = Manifold::circle(10.0);
  const double s = 3.0, r = 1.0, u = 0.6;
  const auto q = unit_params(s, 1, PolyCutoff{3}, ConstRadius{2.0 * r});
  Configuration line(2, 1);
  const double x0[2] = {0.0, -10.0}, x1[2] = {u, -10.0};
  // The circle is only used for its dimension here; the kernel sees raw coordinates.
  line.push_back(x0);
  line.push_back(x1);
  const auto H = hessian_truncated(line, circle, q, 2).to_dense();
  const double t = u / r;
  const double phi = std::pow(1 - t * t, 3), dphi = -6 * t * std::pow(1 - t * t, 2) / r;
  const double ddphi = (-6 * std::pow(1 - t * t, 2) + 24 * t * t * (1 - t * t)) / (r * r);
  const double f = std::pow(u, -s), df = -s * std::pow(u, -s - 1), ddf = s * (s + 1) * std::pow(u, -s - 2);
  const double oracle = 2.0 * (ddf * phi + 2 * df * dphi + f * ddphi);
  CHECK(rel_err(H[0], oracle) < 1e-12);
  CHECK(rel_err(H[2 * 4 + 0], -oracle) < 1e-12);  // coupling block x1 / x0
}

TEST_CASE("Hessian-vector products match gradient differences") {
  const auto m = Manifold::sphere();
  std::mt19937_64 rng(41);
  std::normal_distribution<double> g;
  for (WeightMode mode : {WeightMode::Unit, WeightMode::FromDensity}) {
    auto p = unit_params(3.5, 2, PolyCutoff{3}, LogRadius{2.0});
    p.weight_mode = mode;
    p.density = Density::zpoly(m, 1.0, 2.0);
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      const auto xs = m.sample_uniform(seed, 20);
      const auto H = hessian_truncated(xs, m, p, 20);
      std::vector<double> v(xs.coords().size());
      for (auto& c : v) c = g(rng);
      const auto hv = H.multiply(v);
      const double h = 1e-6;
      Configuration plus = xs, minus = xs;
      for (std::size_t k = 0; k < v.size(); ++k) {
        plus.coords()[k] += h * v[k];
        minus.coords()[k] -= h * v[k];
      }
      const auto gp = gradient_truncated(plus, m, p, 20), gm = gradient_truncated(minus, m, p, 20);
      double err = 0.0;
      for (std::size_t k = 0; k < v.size(); ++k) err = std::max(err, std::abs((gp[k] - gm[k]) / (2 * h) - hv[k]));
      CHECK(err / max_abs(hv) < 1e-4);
      const auto dense = H.to_dense();
      const std::size_t n = H.dim;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) CHECK(dense[i * n + j] == dense[j * n + i]);
    }
  }
}

TEST_CASE("threaded and deterministic evaluations agree") {
  const auto m = Manifold::sphere();
  const auto xs = m.sample_uniform(12, 6000);
  const auto p = unit_params(3.5, 2);
  const ExecPolicy det{true, 0}, par{false, 4};
  const auto a = energy_truncated(xs, m, p, xs.size(), det);
  const auto b = energy_truncated(xs, m, p, xs.size(), par);
  CHECK(rel_err(b.total, a.total) < 1e-12);
  CHECK(a.pair_terms_evaluated == b.pair_terms_evaluated);
  const auto ga = gradient_truncated(xs, m, p, xs.size(), det);
  const auto gb = gradient_truncated(xs, m, p, xs.size(), par);
  for (std::size_t k = 0; k < ga.size(); ++k) CHECK(std::abs(ga[k] - gb[k]) <= 1e-10 * max_abs(ga));
  // Repeated deterministic runs are bit-identical.
  CHECK(energy_truncated(xs, m, p, xs.size(), det).total == a.total);
}

TEST_CASE("evaluator matches direct evaluation as points move") {
  const auto m = Manifold::sphere();
  auto xs = m.sample_uniform(2, 800);
  const auto p = unit_params(3.5, 2);
  EnergyEvaluator cached(m, p, xs.size()), paranoid(m, p, xs.size(), {}, true);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 0.03 * cached.radius());
  for (int step = 0; step < 12; ++step) {
    const auto a = cached.evaluate(xs, true);
    const auto b = paranoid.evaluate(xs, true);
    const auto direct = energy_truncated(xs, m, p, xs.size());
    CHECK(rel_err(a.energy.total, b.energy.total) < 1e-12);
    CHECK(rel_err(a.energy.total, direct.total) < 1e-12);
    for (std::size_t k = 0; k < a.gradient.size(); ++k)
      CHECK(std::abs(a.gradient[k] - b.gradient[k]) <= 1e-12 * max_abs(b.gradient));
    for (std::size_t i = 0; i < xs.size(); ++i) {
      for (std::size_t k = 0; k < 3; ++k) xs.point(i)[k] += g(rng);
      m.project(xs.point(i), xs.point(i));
    }
  }
  CHECK(cached.rebuild_count() < paranoid.rebuild_count());
  CHECK(paranoid.rebuild_count() == 12);
}

}  // TEST_SUITE
