#pragma once

// Lattice and box geometry in R^n: half-open boxes, full-rank lattice bases
// and exact enumeration of lattice points inside a box.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "meyerlab/error.hpp"

namespace meyerlab {

using Vec = std::vector<double>;
using IVec = std::vector<std::int64_t>;

double norm(std::span<const double> v);
double sup_norm(std::span<const double> v);

/// Half-open axis-aligned box [lo, hi). A box with lo_i >= hi_i for some i
/// is empty; its volume is 0.
class Box {
 public:
  Box() = default;
  Box(Vec lo, Vec hi);

  /// [-r, r)^dim
  static Box centered(std::size_t dim, double radius);
  static Box cube(std::size_t dim, double lo, double hi);

  std::size_t dim() const { return lo_.size(); }
  const Vec& lo() const { return lo_; }
  const Vec& hi() const { return hi_; }
  double side(std::size_t i) const { return hi_[i] - lo_[i]; }
  double min_side() const;

  bool empty() const;
  double volume() const;
  bool contains(std::span<const double> x) const;
  /// True if every point of `other` lies in this box (empty boxes are
  /// contained in everything).
  bool contains(const Box& other) const;

  Box translated(std::span<const double> shift) const;
  /// Grows every side by `pad` on both ends.
  Box expanded(double pad) const;
  /// -B as a set is (-hi, -lo]; this returns the half-open box [-hi, -lo).
  Box negated() const;

  bool operator==(const Box&) const = default;

 private:
  Vec lo_, hi_;
};

Box box_intersect(const Box& a, const Box& b);
double box_volume(const Box& a);
/// Shrinks each side by eps at both ends; over-erosion yields an empty box.
Box box_erode(const Box& a, double eps);
/// Cartesian product a x b.
Box box_product(const Box& a, const Box& b);
/// Minkowski difference a - b = {x - y}; closure taken as a half-open box.
Box box_difference(const Box& a, const Box& b);

/// Axis-aligned window in internal space. Always has positive volume.
struct Window {
  Box box;

  explicit Window(Box b);
  std::size_t dim() const { return box.dim(); }
  double volume() const { return box.volume(); }
  bool contains(std::span<const double> w) const { return box.contains(w); }
  /// Distance from w to the complement of the window, measured per axis.
  double margin(std::span<const double> w) const;
};

/// Generator matrix of a full-rank lattice; columns are the generators.
class LatticeBasis {
 public:
  /// Rows of the matrix, as stored in scheme files.
  static LatticeBasis from_rows(const std::vector<Vec>& rows);
  explicit LatticeBasis(Eigen::MatrixXd matrix);

  std::size_t dim() const { return static_cast<std::size_t>(matrix_.rows()); }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  const Eigen::MatrixXd& inverse() const { return inverse_; }
  double covolume() const { return covolume_; }

  Vec point(std::span<const std::int64_t> coeffs) const;
  /// Real coefficients B^{-1} y.
  Vec coefficients(std::span<const double> y) const;
  /// Stable identifier of the matrix entries, used to recognise patches
  /// that come from the same lattice.
  std::uint64_t fingerprint() const { return fingerprint_; }

 private:
  Eigen::MatrixXd matrix_;
  Eigen::MatrixXd inverse_;
  double covolume_ = 0.0;
  std::uint64_t fingerprint_ = 0;
};

double covolume(const LatticeBasis& basis);

struct LatticePoint {
  IVec coeffs;
  Vec point;
};

inline constexpr double kDefaultEnumerationBudget = 5e7;

/// Enumerates {B c : c in Z^n} inside a box. Coefficient ranges come from a
/// Fourier-Motzkin projection of {c : lo <= B c <= hi} computed once per
/// basis; every emitted point is B c for an integer c and passes the
/// half-open membership test of the query box.
class LatticeEnumerator {
 public:
  explicit LatticeEnumerator(const LatticeBasis& basis,
                             double budget = kDefaultEnumerationBudget);

  const LatticeBasis& basis() const { return basis_; }

  /// Rough count of coefficient vectors the query will visit.
  double projected_count(const Box& region) const;

  using Visitor =
      std::function<void(std::span<const std::int64_t>, std::span<const double>)>;
  void for_each(const Box& region, const Visitor& visit) const;

  std::vector<LatticePoint> enumerate(const Box& region) const;

 private:
  struct Constraint {
    Vec a;       // coefficients on c_0..c_{level-1}
    Vec lambda;  // combination of the 2n box bounds (hi..., -lo...)
  };

  LatticeBasis basis_;
  double budget_;
  // levels_[k] constrains c_0..c_k (k = 0..n-1).
  std::vector<std::vector<Constraint>> levels_;
};

std::vector<LatticePoint> enumerate_lattice(
    const LatticeBasis& basis, const Box& region,
    double budget = kDefaultEnumerationBudget);

}  // namespace meyerlab
