#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "riesz/geometry.hpp"

namespace riesz {

class NeighborError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Work counters for one enumeration; `candidates` is the number of distance
/// evaluations, `pairs` the number of unordered pairs reported.
struct NeighborStats {
  std::uint64_t candidates = 0;
  std::uint64_t pairs = 0;

  NeighborStats& operator+=(const NeighborStats& o) {
    candidates += o.candidates;
    pairs += o.pairs;
    return *this;
  }
};

/// Sparse bucketing of a configuration into axis-aligned cells.
///
/// Only occupied cells are stored: cells are kept in lexicographic order of
/// their integer coordinates, points are sorted by cell, and each cell holds
/// the list of its occupied neighbors (the 3^p stencil, itself included).
/// Memory is O(N + occupied cells).
///
/// With a periodic box the number of cells along axis k is floor(L_k / h), so
/// the actual side L_k / n_k is never smaller than the requested h.
class CellGrid {
 public:
  static CellGrid build(const Configuration& config, double cell_size,
                        std::optional<std::vector<double>> periodic_box = std::nullopt);

  double cell_size() const { return h_; }
  /// Smallest actual cell side; every query radius must not exceed it.
  double min_cell_side() const;
  std::size_t dim() const { return p_; }
  std::size_t point_count() const { return n_; }
  std::size_t occupied_cells() const { return cell_start_.size() - 1; }
  bool periodic() const { return !box_.empty(); }
  std::span<const double> box() const { return box_; }

  std::span<const std::int64_t> cell_coords(std::size_t c) const {
    return {coords_.data() + c * p_, p_};
  }
  std::span<const std::uint32_t> cell_points(std::size_t c) const {
    return {order_.data() + cell_start_[c], cell_start_[c + 1] - cell_start_[c]};
  }
  std::span<const std::uint32_t> neighbor_cells(std::size_t c) const {
    return {nbr_.data() + nbr_start_[c], nbr_start_[c + 1] - nbr_start_[c]};
  }
  std::size_t cell_of_point(std::size_t i) const { return point_cell_[i]; }
  std::optional<std::size_t> find_cell(std::span<const std::int64_t> key) const;

  /// Integer cell coordinates of an arbitrary point (wrapped when periodic).
  std::vector<std::int64_t> cell_key(std::span<const double> x) const;

  /// Throws NeighborError("stale grid") unless `config` is the exact
  /// configuration the grid was built from.
  void check_matches(const Configuration& config) const;

  /// Calls fn(point_index) for every point in a cell within `reach` cells
  /// (Chebyshev) of the cell containing y. Cells are visited at most once.
  template <class Fn>
  void for_each_point_near(std::span<const double> y, std::int64_t reach, Fn&& fn) const;

 private:
  std::size_t p_ = 0;
  std::size_t n_ = 0;
  double h_ = 0.0;
  std::vector<double> box_;          // empty when not periodic
  std::vector<double> side_;         // actual side per axis
  std::vector<std::int64_t> ncell_;  // cells per axis (periodic only)
  std::vector<std::int64_t> coords_; // occupied cells, lexicographic
  std::vector<std::size_t> cell_start_;
  std::vector<std::uint32_t> order_;
  std::vector<std::uint32_t> point_cell_;
  std::vector<std::size_t> nbr_start_;
  std::vector<std::uint32_t> nbr_;
  std::uint64_t fingerprint_ = 0;

  void gather_cells_near(std::span<const std::int64_t> key, std::int64_t reach,
                         std::vector<std::uint32_t>& out) const;
};

/// FNV-1a over the coordinate bytes; identifies a configuration snapshot.
std::uint64_t configuration_fingerprint(const Configuration& config);

/// Visits every unordered pair {i, j}, i != j, with 0 < dist <= delta exactly
/// once, calling visitor(i, j, x_i - x_j, dist). The displacement uses the
/// minimum image on a periodic grid. Candidates come only from the 3^p
/// stencil. The order is deterministic for a fixed grid.
///
/// The range overload restricts the outer loop to cells [cell_begin,
/// cell_end) so callers can partition work.
template <class Visitor>
NeighborStats for_each_pair_within(const CellGrid& grid, const Configuration& config,
                                   double delta, Visitor&& visitor);
template <class Visitor>
NeighborStats for_each_pair_within(const CellGrid& grid, const Configuration& config,
                                   double delta, std::size_t cell_begin,
                                   std::size_t cell_end, Visitor&& visitor);

/// Z(omega, delta): number of ORDERED pairs (x, y), x != y, with
/// 0 < |x - y| <= delta. Twice the unordered count.
std::uint64_t count_Z(const Configuration& config, double delta,
                      std::optional<std::vector<double>> periodic_box = std::nullopt);

/// Candidate pair list built with radius `list_radius` (query radius plus a
/// skin). Valid for queries of radius r as long as no point has moved more
/// than (list_radius - r) / 2 from `reference`.
struct PairList {
  double list_radius = 0.0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  Configuration reference;
  NeighborStats build_stats;
};

PairList build_pair_list(const Configuration& config, double list_radius,
                         std::optional<std::vector<double>> periodic_box = std::nullopt);

/// Largest displacement of any point of `config` relative to the list's
/// reference snapshot (minimum image when periodic).
double max_displacement(const PairList& list, const Configuration& config,
                        std::span<const double> periodic_box = {});

// ---------------------------------------------------------------------------

namespace detail {

inline double displacement_into(std::span<const double> xi, std::span<const double> xj,
                                std::span<const double> box, double* out) {
  double acc = 0.0;
  const std::size_t p = xi.size();
  for (std::size_t k = 0; k < p; ++k) {
    double dk = xi[k] - xj[k];
    if (!box.empty()) dk -= box[k] * std::nearbyint(dk / box[k]);
    out[k] = dk;
    acc += dk * dk;
  }
  return acc;
}

// Scratch size for displacement vectors; configurations with larger ambient
// dimension use a heap buffer.
inline constexpr std::size_t kInlineDim = 8;

}  // namespace detail

template <class Fn>
void CellGrid::for_each_point_near(std::span<const double> y, std::int64_t reach,
                                   Fn&& fn) const {
  const auto key = cell_key(y);
  std::vector<std::uint32_t> cells;
  gather_cells_near(key, reach, cells);
  for (std::uint32_t c : cells)
    for (std::uint32_t i : cell_points(c)) fn(std::size_t(i));
}

template <class Visitor>
NeighborStats for_each_pair_within(const CellGrid& grid, const Configuration& config,
                                   double delta, std::size_t cell_begin,
                                   std::size_t cell_end, Visitor&& visitor) {
  if (!(delta > 0.0)) throw NeighborError("invalid cell size");
  if (delta > grid.min_cell_side() * (1.0 + 1e-12))
    throw NeighborError("query radius exceeds the grid cell size");
  const std::size_t p = config.ambient_dim();
  const double delta2 = delta * delta;
  const auto box = grid.box();
  std::vector<double> heap;
  double inline_buf[detail::kInlineDim];
  double* disp = inline_buf;
  if (p > detail::kInlineDim) {
    heap.resize(p);
    disp = heap.data();
  }
  const std::span<const double> dspan(disp, p);
  NeighborStats stats;
  for (std::size_t c = cell_begin; c < cell_end; ++c) {
    const auto own = grid.cell_points(c);
    for (std::uint32_t c2 : grid.neighbor_cells(c)) {
      if (c2 < c) continue;
      const auto other = grid.cell_points(c2);
      for (std::size_t a = 0; a < own.size(); ++a) {
        const std::uint32_t i = own[a];
        const auto xi = config.point(i);
        const std::size_t b0 = (c2 == c) ? a + 1 : 0;
        for (std::size_t b = b0; b < other.size(); ++b) {
          const std::uint32_t j = other[b];
          ++stats.candidates;
          const double u2 = detail::displacement_into(xi, config.point(j), box, disp);
          if (u2 > delta2 || u2 == 0.0) continue;
          ++stats.pairs;
          visitor(std::size_t(i), std::size_t(j), dspan, std::sqrt(u2));
        }
      }
    }
  }
  return stats;
}

template <class Visitor>
NeighborStats for_each_pair_within(const CellGrid& grid, const Configuration& config,
                                   double delta, Visitor&& visitor) {
  grid.check_matches(config);
  return for_each_pair_within(grid, config, delta, 0, grid.occupied_cells(),
                              std::forward<Visitor>(visitor));
}

}  // namespace riesz
