#pragma once

// Finite patches of locally finite subsets of R^d and the set arithmetic
// used to diagnose Delone and Meyer properties on them.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "meyerlab/euclid.hpp"

namespace meyerlab {

inline constexpr double kInfinite = std::numeric_limits<double>::infinity();
/// Points closer than this are the same point.
inline constexpr double kDuplicateTol = 1e-12;
/// Tolerance for float matching between patches without a common lattice.
inline constexpr double kMatchTol = 1e-9;
inline constexpr double kDistanceResolution = 1e-4;

/// Identifies patches whose points are p(gamma) - shift for gamma in one
/// lattice. Patches with equal tags are compared through their integer
/// coefficients instead of float coordinates.
struct LatticeTag {
  std::uint64_t basis_id = 0;
  Vec shift;

  bool operator==(const LatticeTag&) const = default;
};

class Patch {
 public:
  /// Sorts lexicographically and removes duplicates. Every point must lie
  /// in `extent`.
  static Patch from_points(std::size_t dim, std::vector<Vec> points, Box extent);
  /// As above, carrying the integer coefficient vector of each point.
  static Patch from_lattice(std::size_t dim, std::vector<Vec> points, std::vector<IVec> coeffs,
                            Box extent, LatticeTag tag);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  bool empty() const { return coords_.empty(); }
  const Box& extent() const { return extent_; }

  std::span<const double> point(std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }
  Vec point_vec(std::size_t i) const;
  std::vector<Vec> points() const;

  bool has_coeffs() const { return tag_.has_value(); }
  const std::optional<LatticeTag>& tag() const { return tag_; }
  std::size_t coeff_dim() const { return coeff_dim_; }
  std::span<const std::int64_t> coeffs(std::size_t i) const {
    return {coeffs_.data() + i * coeff_dim_, coeff_dim_};
  }

  /// Points inside `box`; the new extent is box intersected with the old one.
  Patch restricted(const Box& box) const;
  /// Every point moved by +shift.
  Patch translated(std::span<const double> shift) const;
  /// Number of points inside `box`.
  std::size_t count_in(const Box& box) const;

 private:
  Patch(std::size_t dim, Box extent) : dim_(dim), extent_(std::move(extent)) {}
  void finalize(std::vector<Vec> points, std::vector<IVec> coeffs);

  std::size_t dim_ = 0;
  Box extent_;
  Vec coords_;
  std::optional<LatticeTag> tag_;
  std::size_t coeff_dim_ = 0;
  std::vector<std::int64_t> coeffs_;
};

/// Minimum pairwise Euclidean distance; kInfinite for fewer than two points.
double min_gap(const Patch& p);

/// Largest distance from a grid point of `region` (spacing grid_step) to the
/// nearest patch point.
double covering_radius(const Patch& p, const Box& region, double grid_step);

/// (P - P) within [-radius, radius)^d. Requires radius <= half the smallest
/// side of the extent.
Patch difference_set(const Patch& p, double radius);

/// (a + b) within [-radius, radius)^d; both extents must cover that box.
Patch sumset(const Patch& a, const Patch& b, double radius);

/// k-fold sums of elements of lambda, truncated to [-radius, radius)^d.
/// Summands and partial sums are kept inside [-k radius, k radius)^d, which
/// must lie in the extent of lambda.
Patch iterated_sumset(const Patch& lambda, int k, double radius);

struct WitnessReport {
  bool success = false;
  std::vector<Vec> F;
  std::vector<Vec> uncovered;
};

/// Greedy search for a finite F with (L + L) within the radius covered by
/// L + F. L must be symmetric with 0 in L; its extent must cover twice the radius.
WitnessReport approx_subgroup_witness(const Patch& lambda, double radius,
                                      double gap_tol = kMatchTol);

/// Local matching distance on [-R, R)^d: the least eps in (0, 1] such that
/// points of either patch in the box of half-side min(R, 1/eps) are within
/// eps of the other patch. Binary search at kDistanceResolution; 1 if no
/// eps works.
double patch_distance(const Patch& p, const Patch& q, double R);

/// Least norm of a nonzero element of (a + b) in [-radius, radius)^d.
double accumulation_margin(const Patch& a, const Patch& b, double radius);

/// Points common to every patch in [-radius, radius)^d.
Patch return_time_set(std::span<const Patch> patches, double radius,
                      double match_tol = kMatchTol);

/// "# extent lo... hi..." followed by one comma-separated point per row.
void write_patch_csv(std::ostream& out, const Patch& p);
Patch read_patch_csv(std::istream& in);

}  // namespace meyerlab
