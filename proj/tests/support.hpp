#pragma once

#include <cmath>
#include <numbers>
#include <set>
#include <utility>
#include <vector>

#include "riesz/geometry.hpp"

namespace riesz::testing {

inline Configuration circle_points(std::size_t n, double radius = 1.0, double phase = 0.0) {
  Configuration c(2, 1);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = phase + 2.0 * std::numbers::pi * double(k) / double(n);
    const double x[2] = {radius * std::cos(t), radius * std::sin(t)};
    c.push_back(x);
  }
  return c;
}

// O(N^2) oracle: unordered pairs with 0 < dist <= delta.
inline std::set<std::pair<std::size_t, std::size_t>> brute_pairs(const Configuration& c,
                                                                 const Manifold& m, double delta) {
  std::set<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t j = i + 1; j < c.size(); ++j) {
      const double u = m.pair_distance(c.point(i), c.point(j));
      if (u > 0.0 && u <= delta) out.insert({i, j});
    }
  return out;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline std::vector<Manifold> all_manifolds() {
  return {Manifold::circle(1.0),      Manifold::sphere(1.0), Manifold::shell(0.55, 1.0),
          Manifold::cube(2),          Manifold::cube(3),     Manifold::torus({1.0, 1.0}),
          Manifold::torus({1.0, 0.7, 1.3})};
}

}  // namespace riesz::testing
