#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace riesz {

/// Raised for inputs a geometric operation is not defined on.
class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// N points in R^p stored contiguously (row i occupies [i*p, i*p + p)).
///
/// The intrinsic dimension d is carried along because every scaling law
/// downstream (N^{1/d}, N^{1+s/d}) depends on it, not on p.
class Configuration {
 public:
  Configuration() = default;
  Configuration(std::size_t ambient_dim, std::size_t intrinsic_dim);
  Configuration(std::size_t ambient_dim, std::size_t intrinsic_dim,
                std::vector<double> coords);

  std::size_t size() const { return p_ == 0 ? 0 : coords_.size() / p_; }
  bool empty() const { return coords_.empty(); }
  std::size_t ambient_dim() const { return p_; }
  std::size_t intrinsic_dim() const { return d_; }

  std::span<const double> point(std::size_t i) const {
    return {coords_.data() + i * p_, p_};
  }
  std::span<double> point(std::size_t i) { return {coords_.data() + i * p_, p_}; }

  void push_back(std::span<const double> x);

  std::span<const double> coords() const { return coords_; }
  std::span<double> coords() { return coords_; }

  /// True when every coordinate is finite.
  bool all_finite() const;

  friend bool operator==(const Configuration&, const Configuration&) = default;

 private:
  std::size_t p_ = 0;
  std::size_t d_ = 0;
  std::vector<double> coords_;
};

struct Circle {
  double radius = 1.0;
};
struct Sphere2 {
  double radius = 1.0;
};
struct SphericalShell {
  double inner = 0.55;
  double outer = 1.0;
};
struct UnitCube {
  std::size_t dim = 2;
};
struct FlatTorus {
  std::vector<double> sides;  // one side length per dimension
};

/// One member of the closed menu of compact sets the library discretizes.
class Manifold {
 public:
  using Variant = std::variant<Circle, Sphere2, SphericalShell, UnitCube, FlatTorus>;

  explicit Manifold(Variant v);

  static Manifold circle(double radius = 1.0) { return Manifold(Circle{radius}); }
  static Manifold sphere(double radius = 1.0) { return Manifold(Sphere2{radius}); }
  static Manifold shell(double inner, double outer) {
    return Manifold(SphericalShell{inner, outer});
  }
  static Manifold cube(std::size_t dim) { return Manifold(UnitCube{dim}); }
  static Manifold torus(std::vector<double> sides) {
    return Manifold(FlatTorus{std::move(sides)});
  }

  const Variant& variant() const { return v_; }
  std::string name() const;

  std::size_t ambient_dim() const;
  std::size_t intrinsic_dim() const;
  /// H_d(A), in units of length^d.
  double hausdorff_measure() const;
  /// Largest pairwise distance on the set; used to scale degeneracy guards.
  double diameter() const;

  /// Box sides when the set is periodic (FlatTorus), empty otherwise.
  std::optional<std::vector<double>> periodic_box() const;

  /// Retraction onto the set. Throws GeometryError at the origin for
  /// Circle/Sphere2.
  void project(std::span<const double> x, std::span<double> out) const;
  std::vector<double> project(std::span<const double> x) const;

  /// Removes the part of a motion direction `v` that would leave the set at x.
  /// Curved sets keep the tangential part; full-dimensional sets pass v
  /// through except at a Shell/Cube boundary, where an outward normal
  /// component is dropped.
  void tangent_project(std::span<const double> x, std::span<const double> v,
                       std::span<double> out) const;
  std::vector<double> tangent_project(std::span<const double> x,
                                      std::span<const double> v) const;

  /// Distance of x from the set (0 when on it). For the torus this checks the
  /// fundamental box [0, L_k).
  double membership_error(std::span<const double> x) const;
  bool contains(std::span<const double> x, double tol = 1e-12) const {
    return membership_error(x) <= tol;
  }

  /// x - y, using the minimum image on the torus.
  void displacement(std::span<const double> x, std::span<const double> y,
                    std::span<double> out) const;
  double pair_distance(std::span<const double> x, std::span<const double> y) const;

  /// `count` i.i.d. points uniform with respect to H_d; deterministic in seed.
  Configuration sample_uniform(std::uint64_t seed, std::size_t count) const;

 private:
  Variant v_;
};

}  // namespace riesz
