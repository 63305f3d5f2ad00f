#include "riesz/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

namespace riesz {

namespace {

bool lex_less(std::span<const std::int64_t> a, std::span<const std::int64_t> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

// Odometer over [lo_k, hi_k] for every axis.
template <class Fn>
void for_each_offset(std::span<const std::int64_t> lo, std::span<const std::int64_t> hi,
                     Fn&& fn) {
  const std::size_t p = lo.size();
  std::vector<std::int64_t> cur(lo.begin(), lo.end());
  while (true) {
    fn(std::span<const std::int64_t>(cur));
    std::size_t k = 0;
    while (k < p) {
      if (++cur[k] <= hi[k]) break;
      cur[k] = lo[k];
      ++k;
    }
    if (k == p) return;
  }
}

}  // namespace

std::uint64_t configuration_fingerprint(const Configuration& config) {
  std::uint64_t h = 1469598103934665603ull;
  const auto c = config.coords();
  for (double v : c) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffu;
      h *= 1099511628211ull;
    }
  }
  return h ^ (config.size() * 0x9e3779b97f4a7c15ull);
}

CellGrid CellGrid::build(const Configuration& config, double cell_size,
                         std::optional<std::vector<double>> periodic_box) {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) throw NeighborError("invalid cell size");
  CellGrid g;
  g.p_ = config.ambient_dim();
  g.n_ = config.size();
  g.h_ = cell_size;
  g.side_.assign(g.p_, cell_size);
  if (periodic_box) {
    if (periodic_box->size() != g.p_) throw NeighborError("periodic box has wrong dimension");
    g.box_ = *periodic_box;
    g.ncell_.resize(g.p_);
    for (std::size_t k = 0; k < g.p_; ++k) {
      const double n = std::max(1.0, std::floor(g.box_[k] / cell_size));
      g.ncell_[k] = std::int64_t(n);
      g.side_[k] = g.box_[k] / n;
    }
  }

  // Cell key of every point, then sort points by key.
  std::vector<std::int64_t> keys(g.n_ * g.p_);
  for (std::size_t i = 0; i < g.n_; ++i) {
    const auto k = g.cell_key(config.point(i));
    std::copy(k.begin(), k.end(), keys.begin() + i * g.p_);
  }
  auto key_of = [&](std::size_t i) {
    return std::span<const std::int64_t>(keys.data() + i * g.p_, g.p_);
  };
  g.order_.resize(g.n_);
  std::iota(g.order_.begin(), g.order_.end(), 0u);
  std::stable_sort(g.order_.begin(), g.order_.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return lex_less(key_of(a), key_of(b)); });

  g.point_cell_.resize(g.n_);
  g.cell_start_.clear();
  for (std::size_t r = 0; r < g.n_; ++r) {
    const std::uint32_t i = g.order_[r];
    if (r == 0 || !std::equal(key_of(i).begin(), key_of(i).end(), key_of(g.order_[r - 1]).begin())) {
      g.cell_start_.push_back(r);
      g.coords_.insert(g.coords_.end(), key_of(i).begin(), key_of(i).end());
    }
    g.point_cell_[i] = std::uint32_t(g.cell_start_.size() - 1);
  }
  g.cell_start_.push_back(g.n_);

  // Occupied neighbor cells, 3^p stencil.
  const std::size_t ncells = g.occupied_cells();
  g.nbr_start_.assign(1, 0);
  std::vector<std::uint32_t> buf;
  for (std::size_t c = 0; c < ncells; ++c) {
    g.gather_cells_near(g.cell_coords(c), 1, buf);
    g.nbr_.insert(g.nbr_.end(), buf.begin(), buf.end());
    g.nbr_start_.push_back(g.nbr_.size());
  }
  g.fingerprint_ = configuration_fingerprint(config);
  return g;
}

double CellGrid::min_cell_side() const {
  return side_.empty() ? h_ : *std::min_element(side_.begin(), side_.end());
}

std::vector<std::int64_t> CellGrid::cell_key(std::span<const double> x) const {
  std::vector<std::int64_t> key(p_);
  for (std::size_t k = 0; k < p_; ++k) {
    if (box_.empty()) {
      key[k] = std::int64_t(std::floor(x[k] / h_));
    } else {
      double w = std::fmod(x[k], box_[k]);
      if (w < 0.0) w += box_[k];
      std::int64_t c = std::int64_t(std::floor(w / side_[k]));
      key[k] = std::clamp<std::int64_t>(c, 0, ncell_[k] - 1);
    }
  }
  return key;
}

std::optional<std::size_t> CellGrid::find_cell(std::span<const std::int64_t> key) const {
  std::size_t lo = 0, hi = occupied_cells();
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (lex_less(cell_coords(mid), key)) lo = mid + 1;
    else hi = mid;
  }
  if (lo < occupied_cells() && std::equal(key.begin(), key.end(), cell_coords(lo).begin()))
    return lo;
  return std::nullopt;
}

void CellGrid::gather_cells_near(std::span<const std::int64_t> key, std::int64_t reach,
                                 std::vector<std::uint32_t>& out) const {
  out.clear();
  std::vector<std::int64_t> lo(p_), hi(p_);
  for (std::size_t k = 0; k < p_; ++k) {
    lo[k] = key[k] - reach;
    hi[k] = key[k] + reach;
    // A periodic axis with fewer cells than the window is scanned once.
    if (!box_.empty() && hi[k] - lo[k] + 1 >= ncell_[k]) {
      lo[k] = 0;
      hi[k] = ncell_[k] - 1;
    }
  }
  std::vector<std::int64_t> probe(p_);
  for_each_offset(lo, hi, [&](std::span<const std::int64_t> cur) {
    for (std::size_t k = 0; k < p_; ++k) {
      probe[k] = cur[k];
      if (!box_.empty()) {
        probe[k] %= ncell_[k];
        if (probe[k] < 0) probe[k] += ncell_[k];
      }
    }
    if (auto c = find_cell(probe)) out.push_back(std::uint32_t(*c));
  });
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
}

void CellGrid::check_matches(const Configuration& config) const {
  if (config.size() != n_ || config.ambient_dim() != p_ ||
      configuration_fingerprint(config) != fingerprint_)
    throw NeighborError("stale grid");
}

std::uint64_t count_Z(const Configuration& config, double delta,
                      std::optional<std::vector<double>> periodic_box) {
  if (!(delta > 0.0)) throw NeighborError("invalid cell size");
  if (config.size() < 2) return 0;
  const auto grid = CellGrid::build(config, delta, std::move(periodic_box));
  const auto stats = for_each_pair_within(grid, config, delta,
                                          [](std::size_t, std::size_t, auto, double) {});
  return 2 * stats.pairs;
}

PairList build_pair_list(const Configuration& config, double list_radius,
                         std::optional<std::vector<double>> periodic_box) {
  PairList list;
  list.list_radius = list_radius;
  list.reference = config;
  if (config.size() < 2) return list;
  const auto grid = CellGrid::build(config, list_radius, periodic_box);
  const std::size_t p = config.ambient_dim();
  const auto box = grid.box();
  const double r2 = list_radius * list_radius;
  std::vector<double> disp(p);
  // Coincident points are kept so that energy evaluation can reject them.
  for (std::size_t c = 0; c < grid.occupied_cells(); ++c) {
    const auto own = grid.cell_points(c);
    for (std::uint32_t c2 : grid.neighbor_cells(c)) {
      if (c2 < c) continue;
      const auto other = grid.cell_points(c2);
      for (std::size_t a = 0; a < own.size(); ++a) {
        const auto xi = config.point(own[a]);
        for (std::size_t b = (c2 == c) ? a + 1 : 0; b < other.size(); ++b) {
          ++list.build_stats.candidates;
          const double u2 =
              detail::displacement_into(xi, config.point(other[b]), box, disp.data());
          if (u2 > r2) continue;
          ++list.build_stats.pairs;
          const auto i = own[a], j = other[b];
          list.pairs.emplace_back(std::min(i, j), std::max(i, j));
        }
      }
    }
  }
  return list;
}

double max_displacement(const PairList& list, const Configuration& config,
                        std::span<const double> periodic_box) {
  if (config.size() != list.reference.size())
    throw NeighborError("stale grid");
  const std::size_t p = config.ambient_dim();
  std::vector<double> disp(p);
  double worst = 0.0;
  for (std::size_t i = 0; i < config.size(); ++i) {
    const double u2 = detail::displacement_into(config.point(i), list.reference.point(i),
                                                periodic_box, disp.data());
    worst = std::max(worst, u2);
  }
  return std::sqrt(worst);
}

}  // namespace riesz
