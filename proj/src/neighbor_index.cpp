#include "neighbor_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace meyerlab::detail {

NeighborIndex::NeighborIndex(std::span<const double> coords, std::size_t dim)
    : coords_(coords), dim_(dim), count_(dim == 0 ? 0 : coords.size() / dim) {
  origin_.assign(dim_, 0.0);
  cell_lo_.assign(dim_, 0);
  cell_hi_.assign(dim_, 0);
  if (count_ == 0) return;

  std::vector<double> lo(dim_, std::numeric_limits<double>::infinity());
  std::vector<double> hi(dim_, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < count_; ++i) {
    for (std::size_t j = 0; j < dim_; ++j) {
      lo[j] = std::min(lo[j], coords_[i * dim_ + j]);
      hi[j] = std::max(hi[j], coords_[i * dim_ + j]);
    }
  }
  double vol = 1.0;
  double max_side = 0.0;
  for (std::size_t j = 0; j < dim_; ++j) {
    const double side = hi[j] - lo[j];
    max_side = std::max(max_side, side);
    vol *= std::max(side, 1e-9);
  }
  // about two points per cell
  h_ = std::pow(2.0 * vol / static_cast<double>(count_), 1.0 / static_cast<double>(dim_));
  if (!(h_ > 0.0) || !std::isfinite(h_)) h_ = 1.0;
  h_ = std::max(h_, 1e-9 * (1.0 + max_side));
  origin_ = lo;

  std::vector<std::int64_t> cell(dim_);
  for (std::size_t i = 0; i < count_; ++i) {
    cell_of(coords_.subspan(i * dim_, dim_), cell);
    if (i == 0) {
      cell_lo_ = cell;
      cell_hi_ = cell;
    }
    for (std::size_t j = 0; j < dim_; ++j) {
      cell_lo_[j] = std::min(cell_lo_[j], cell[j]);
      cell_hi_[j] = std::max(cell_hi_[j], cell[j]);
    }
    cells_[key(cell)].push_back(i);
  }
}

void NeighborIndex::cell_of(std::span<const double> x, std::span<std::int64_t> cell) const {
  for (std::size_t j = 0; j < dim_; ++j) {
    cell[j] = static_cast<std::int64_t>(std::floor((x[j] - origin_[j]) / h_));
  }
}

std::uint64_t NeighborIndex::key(std::span<const std::int64_t> cell) const {
  std::uint64_t h = 0x9e3779b97f4a7c15ull;
  for (std::int64_t c : cell) {
    h ^= static_cast<std::uint64_t>(c) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  }
  return h;
}

NeighborIndex::Hit NeighborIndex::nearest(std::span<const double> x, std::size_t exclude) const {
  Hit best{npos, std::numeric_limits<double>::infinity()};
  if (count_ == 0) return best;

  std::vector<std::int64_t> center(dim_);
  cell_of(x, center);
  // rings beyond this bound cannot contain stored points
  std::int64_t max_ring = 0;
  for (std::size_t j = 0; j < dim_; ++j) {
    max_ring = std::max({max_ring, std::abs(center[j] - cell_lo_[j]),
                         std::abs(center[j] - cell_hi_[j])});
  }

  std::vector<std::int64_t> offset(dim_), cell(dim_);
  double best_sq = std::numeric_limits<double>::infinity();
  auto visit_cell = [&]() {
    auto it = cells_.find(key(cell));
    if (it == cells_.end()) return;
    for (std::size_t idx : it->second) {
      if (idx == exclude) continue;
      double s = 0.0;
      for (std::size_t j = 0; j < dim_; ++j) {
        const double dx = coords_[idx * dim_ + j] - x[j];
        s += dx * dx;
      }
      if (s < best_sq || (s == best_sq && idx < best.index)) {
        best_sq = s;
        best.index = idx;
      }
    }
  };

  for (std::int64_t ring = 0; ring <= max_ring; ++ring) {
    // every cell whose Chebyshev offset from the centre is exactly `ring`
    std::fill(offset.begin(), offset.end(), -ring);
    while (true) {
      std::int64_t cheb = 0;
      for (std::int64_t o : offset) cheb = std::max(cheb, std::abs(o));
      if (cheb == ring) {
        for (std::size_t j = 0; j < dim_; ++j) cell[j] = center[j] + offset[j];
        visit_cell();
      }
      std::size_t j = 0;
      for (; j < dim_; ++j) {
        if (offset[j] < ring) {
          ++offset[j];
          break;
        }
        offset[j] = -ring;
      }
      if (j == dim_) break;
    }
    // points in rings > ring are at least ring * h away
    if (best.index != npos && std::sqrt(best_sq) <= static_cast<double>(ring) * h_) break;
  }
  if (best.index != npos) best.distance = std::sqrt(best_sq);
  return best;
}

}  // namespace meyerlab::detail
