#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

namespace meyerlab::detail {

/// Uniform-grid bucket index for nearest-neighbour queries over a flat
/// coordinate array.
class NeighborIndex {
 public:
  NeighborIndex(std::span<const double> coords, std::size_t dim);

  struct Hit {
    std::size_t index;
    double distance;
  };

  /// Nearest stored point, optionally excluding one index. Returns
  /// distance = +inf when the index holds no eligible point.
  Hit nearest(std::span<const double> x, std::size_t exclude = npos) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::uint64_t key(std::span<const std::int64_t> cell) const;
  void cell_of(std::span<const double> x, std::span<std::int64_t> cell) const;

  std::span<const double> coords_;
  std::size_t dim_;
  std::size_t count_;
  double h_ = 1.0;
  std::vector<double> origin_;
  std::vector<std::int64_t> cell_lo_, cell_hi_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

}  // namespace meyerlab::detail
