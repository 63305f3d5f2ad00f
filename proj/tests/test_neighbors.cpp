#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "riesz/neighbors.hpp"
#include "support.hpp"

using namespace riesz;
using riesz::testing::brute_pairs;

namespace {

using PairSet = std::set<std::pair<std::size_t, std::size_t>>;

PairSet grid_pairs(const Configuration& c, const Manifold& m, double delta, NeighborStats* stats = nullptr) {
  const auto grid = CellGrid::build(c, delta, m.periodic_box());
  PairSet out;
  std::size_t visits = 0;
  const auto st = for_each_pair_within(grid, c, delta, [&](std::size_t i, std::size_t j, auto, double) {
    out.insert({std::min(i, j), std::max(i, j)});
    ++visits;
  });
  CHECK(visits == out.size());  // each unordered pair exactly once
  if (stats) *stats = st;
  return out;
}

Configuration line_points(std::initializer_list<double> xs) {
  Configuration c(1, 1);
  for (double x : xs) c.push_back(std::span<const double>(&x, 1));
  return c;
}

}  // namespace

TEST_SUITE("neighbors") {

TEST_CASE("grid examples") {
  Configuration one(2, 2);
  const double o[2] = {0.0, 0.0};
  one.push_back(o);
  const auto g1 = CellGrid::build(one, 1.0);
  CHECK(g1.occupied_cells() == 1);
  CHECK(g1.cell_coords(0)[0] == 0);
  CHECK(g1.cell_coords(0)[1] == 0);

  Configuration two(2, 2);
  const double a[2] = {0.1, 0.0}, b[2] = {0.9, 0.0};
  two.push_back(a);
  two.push_back(b);
  CHECK(CellGrid::build(two, 0.5).occupied_cells() == 2);
  CHECK_THROWS_WITH_AS(CellGrid::build(two, 0.0), "invalid cell size", NeighborError);
  CHECK_THROWS_AS(CellGrid::build(two, -1.0), NeighborError);
}

TEST_CASE("every point is recoverable from its cell") {
  const auto xs = Manifold::sphere().sample_uniform(1, 10000);
  const auto grid = CellGrid::build(xs, 0.05);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto key = grid.cell_key(xs.point(i));
    const auto cell = grid.find_cell(key);
    REQUIRE(cell.has_value());
    CHECK(*cell == grid.cell_of_point(i));
    bool found = false;
    for (auto j : grid.cell_points(*cell)) found |= j == i;
    CHECK(found);
  }
  // Stencil size is bounded by 3^p.
  for (std::size_t c = 0; c < grid.occupied_cells(); ++c) CHECK(grid.neighbor_cells(c).size() <= 27);
}

TEST_CASE("collinear enumeration") {
  const auto c = line_points({0.0, 1.0, 2.0});
  // Bucketing does not care that the line leaves the unit interval.
  const auto grid = CellGrid::build(c, 1.0);
  PairSet seen;
  for_each_pair_within(grid, c, 1.0, [&](std::size_t i, std::size_t j, auto, double u) {
    seen.insert({std::min(i, j), std::max(i, j)});
    CHECK(u == doctest::Approx(1.0));
  });
  CHECK(seen == PairSet{{0, 1}, {1, 2}});
  CHECK(count_Z(c, 1.0, std::nullopt) == 4);
  CHECK(count_Z(c, 0.5, std::nullopt) == 0);
}

TEST_CASE("well separated configurations produce no visits") {
  const auto c = riesz::testing::circle_points(20);
  const double gap = 2.0 * std::sin(std::numbers::pi / 20.0);
  CHECK(grid_pairs(c, Manifold::circle(), 0.9 * gap).empty());
  CHECK(count_Z(c, 0.9 * gap, std::nullopt) == 0);
  CHECK(grid_pairs(c, Manifold::circle(), 1.01 * gap).size() == 20);
}

TEST_CASE("pair enumeration equals the brute-force pair set") {
  const auto m = Manifold::sphere();
  const auto xs = m.sample_uniform(3, 200);
  CHECK(grid_pairs(xs, m, 0.3) == brute_pairs(xs, m, 0.3));

  std::mt19937_64 rng(17);
  for (const auto& man : riesz::testing::all_manifolds()) {
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t n = 2 + rng() % 299;
      const auto c = man.sample_uniform(rng(), n);
      const double delta = 0.02 + 0.4 * double(rng() % 1000) / 1000.0;
      NeighborStats st;
      const auto got = grid_pairs(c, man, delta, &st);
      CHECK(got == brute_pairs(c, man, delta));
      CHECK(st.pairs == got.size());
      CHECK(count_Z(c, delta, man.periodic_box()) == 2 * got.size());
    }
  }
}

TEST_CASE("candidate count is bounded by the stencil occupancy") {
  const auto m = Manifold::sphere();
  const auto xs = m.sample_uniform(5, 3000);
  const double delta = 0.08;
  const auto grid = CellGrid::build(xs, delta);
  std::uint64_t bound = 0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (auto c : grid.neighbor_cells(grid.cell_of_point(i))) bound += grid.cell_points(c).size();
  const auto st = for_each_pair_within(grid, xs, delta, [](auto, auto, auto, double) {});
  CHECK(st.candidates <= bound);
}

TEST_CASE("periodic grids wrap across the box") {
  const auto m = Manifold::torus({1.0, 1.0});
  Configuration c(2, 2);
  const double a[2] = {0.02, 0.5}, b[2] = {0.97, 0.5}, d[2] = {0.5, 0.5};
  c.push_back(a);
  c.push_back(b);
  c.push_back(d);
  const auto pairs = grid_pairs(c, m, 0.1);
  CHECK(pairs == PairSet{{0, 1}});
  // Boxes that do not divide evenly still find everything.
  const auto t = Manifold::torus({1.0, 0.37});
  const auto xs = t.sample_uniform(2, 400);
  CHECK(grid_pairs(xs, t, 0.11) == brute_pairs(xs, t, 0.11));
  CHECK(CellGrid::build(xs, 0.11, t.periodic_box()).min_cell_side() >= 0.11);
}

TEST_CASE("a query radius beyond the cell side is rejected") {
  const auto xs = Manifold::sphere().sample_uniform(1, 50);
  const auto grid = CellGrid::build(xs, 0.1);
  CHECK_THROWS_AS(for_each_pair_within(grid, xs, 0.2, [](auto, auto, auto, double) {}), NeighborError);
}

TEST_CASE("a grid used with a different configuration is stale") {
  auto xs = Manifold::sphere().sample_uniform(1, 50);
  const auto grid = CellGrid::build(xs, 0.3);
  xs.point(3)[0] += 1e-9;
  CHECK_THROWS_WITH_AS(for_each_pair_within(grid, xs, 0.3, [](auto, auto, auto, double) {}),
                       doctest::Contains("stale grid"), NeighborError);
}

TEST_CASE("pair lists include every pair within the list radius") {
  const auto m = Manifold::sphere();
  auto xs = m.sample_uniform(9, 500);
  xs.push_back(xs.point(0));  // coincident pair is kept for the energy guard
  const auto list = build_pair_list(xs, 0.2, std::nullopt);
  PairSet got;
  for (const auto& [i, j] : list.pairs) got.insert({std::min(i, j), std::max(i, j)});
  auto want = brute_pairs(xs, m, 0.2);
  want.insert({0, xs.size() - 1});
  CHECK(got == want);
  CHECK(max_displacement(list, xs, {}) == 0.0);
}

}  // TEST_SUITE
