#pragma once

// Cut-and-project schemes over R^d x R^m with their model sets and the torus
// parametrisation of the hull.
//
// Conventions used throughout the library:
//   p(gamma)    first d coordinates of a lattice vector (physical part)
//   gamma*      last m coordinates (internal part)
//   Q_w         {p(gamma) : gamma* + w in W}, a set containing 0 for w in W
//   g.Q         Q - g, so p(gamma).Q_w = Q_{w + gamma*}
//   (u, w)      hull point with patch Q_w - u; the torus coordinate is
//               (-u, w) modulo the lattice

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "meyerlab/euclid.hpp"
#include "meyerlab/pointset.hpp"
#include "meyerlab/random.hpp"

namespace meyerlab {

class Scheme {
 public:
  Scheme(LatticeBasis basis, std::size_t d, std::size_t m, Window window);

  std::size_t d() const { return d_; }
  std::size_t m() const { return m_; }
  const LatticeBasis& basis() const { return enumerator_->basis(); }
  const Window& window() const { return window_; }
  const LatticeEnumerator& enumerator() const { return *enumerator_; }
  double covolume() const { return basis().covolume(); }

  Vec physical(std::span<const double> y) const { return Vec(y.begin(), y.begin() + static_cast<long>(d_)); }
  Vec internal(std::span<const double> y) const { return Vec(y.begin() + static_cast<long>(d_), y.end()); }

  /// Same scheme with another window.
  Scheme with_window(Window window) const;

 private:
  std::size_t d_, m_;
  Window window_;
  std::shared_ptr<const LatticeEnumerator> enumerator_;
};

/// Point of the canonical transversal, parametrised by w in the interior of W.
class TransversalPoint {
 public:
  static TransversalPoint make(const Scheme& scheme, Vec w);

  const Vec& w() const { return w_; }
  /// Distance from w to the window boundary (per axis).
  double margin() const { return margin_; }

 private:
  TransversalPoint(Vec w, double margin) : w_(std::move(w)), margin_(margin) {}
  Vec w_;
  double margin_;
};

struct HullPoint {
  Vec u;  // physical translate: the patch is Q_w - u
  Vec w;  // internal parameter
};

/// Reduces (u, w) into the fundamental parallelepiped of the basis.
HullPoint canonical(const Scheme& scheme, const HullPoint& x);

Patch model_set(const Scheme& scheme, const TransversalPoint& z, const Box& region);
/// Model set for an arbitrary internal parameter (no margin requirement).
Patch model_set_at(const Scheme& scheme, std::span<const double> w, const Box& region);
Patch hull_patch(const Scheme& scheme, const HullPoint& x, const Box& region);

/// The transversal point reached from z by the return time p(gamma).
TransversalPoint act(const Scheme& scheme, const TransversalPoint& z,
                     std::span<const std::int64_t> gamma);

double predicted_density(const Scheme& scheme);
double predicted_intersection_density(const Scheme& scheme, std::span<const TransversalPoint> zs);
/// The window of the intersection: W - w_1 meet ... meet W - w_r.
Box intersection_window(const Scheme& scheme, std::span<const TransversalPoint> zs);

TransversalPoint sample_transversal(const Scheme& scheme, Rng& rng, double eta);
TransversalPoint sample_transversal(const Scheme& scheme, std::uint64_t seed, double eta);
HullPoint sample_hull(const Scheme& scheme, Rng& rng);
HullPoint sample_hull(const Scheme& scheme, std::uint64_t seed);

/// Smallest |gamma*| over nonzero gamma with |p(gamma)| < R, for growing R.
/// A dense internal projection shows strictly decreasing positive minima.
struct InternalDensityCheck {
  std::vector<double> radii;
  std::vector<double> min_internal_norm;
  bool dense = false;
};
InternalDensityCheck internal_density_check(const Scheme& scheme,
                                            std::vector<double> radii = {10.0, 100.0, 1000.0});

}  // namespace meyerlab
