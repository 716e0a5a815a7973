#include "meyerlab/cutproject.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace meyerlab {

Scheme::Scheme(LatticeBasis basis, std::size_t d, std::size_t m, Window window)
    : d_(d), m_(m), window_(std::move(window)) {
  if (d == 0 || m == 0) throw Error(ErrorCode::InvalidArgument, "d and m must be positive");
  if (basis.dim() != d + m) {
    throw Error(ErrorCode::DimensionMismatch, "basis dimension must be d + m");
  }
  if (window_.dim() != m) throw Error(ErrorCode::DimensionMismatch, "window dimension must be m");
  enumerator_ = std::make_shared<const LatticeEnumerator>(basis);
}

Scheme Scheme::with_window(Window window) const {
  Scheme s = *this;
  if (window.dim() != m_) throw Error(ErrorCode::DimensionMismatch, "window dimension must be m");
  s.window_ = std::move(window);
  return s;
}

TransversalPoint TransversalPoint::make(const Scheme& scheme, Vec w) {
  if (w.size() != scheme.m()) throw Error(ErrorCode::DimensionMismatch, "transversal parameter");
  const double margin = scheme.window().margin(w);
  if (!(margin > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "transversal parameter must lie in the window interior");
  }
  return TransversalPoint(std::move(w), margin);
}

HullPoint canonical(const Scheme& scheme, const HullPoint& x) {
  if (x.u.size() != scheme.d() || x.w.size() != scheme.m()) {
    throw Error(ErrorCode::DimensionMismatch, "hull point");
  }
  Vec y(scheme.d() + scheme.m());
  for (std::size_t i = 0; i < scheme.d(); ++i) y[i] = -x.u[i];
  for (std::size_t i = 0; i < scheme.m(); ++i) y[scheme.d() + i] = x.w[i];
  Vec c = scheme.basis().coefficients(y);
  for (double& ci : c) ci -= std::floor(ci);
  Vec reduced(y.size(), 0.0);
  for (std::size_t j = 0; j < c.size(); ++j) {
    for (std::size_t i = 0; i < y.size(); ++i) {
      reduced[i] += scheme.basis().matrix()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * c[j];
    }
  }
  HullPoint out{Vec(scheme.d()), Vec(scheme.m())};
  for (std::size_t i = 0; i < scheme.d(); ++i) out.u[i] = -reduced[i];
  for (std::size_t i = 0; i < scheme.m(); ++i) out.w[i] = reduced[scheme.d() + i];
  return out;
}

Patch hull_patch(const Scheme& scheme, const HullPoint& x, const Box& region) {
  const std::size_t d = scheme.d();
  if (region.dim() != d) throw Error(ErrorCode::DimensionMismatch, "physical region");
  if (x.u.size() != d || x.w.size() != scheme.m()) throw Error(ErrorCode::DimensionMismatch, "hull point");
  Vec minus_w(x.w);
  for (double& v : minus_w) v = -v;
  // slightly padded search; membership is decided on the final coordinates
  const Box search = box_product(region.translated(x.u).expanded(1e-9 * (1.0 + sup_norm(x.u))),
                                 scheme.window().box.translated(minus_w));
  std::vector<Vec> points;
  std::vector<IVec> coeffs;
  Vec q(d);
  scheme.enumerator().for_each(search, [&](std::span<const std::int64_t> c, std::span<const double> y) {
    for (std::size_t i = 0; i < scheme.m(); ++i) {
      if (!(scheme.window().box.lo()[i] <= y[d + i] + x.w[i] && y[d + i] + x.w[i] < scheme.window().box.hi()[i])) {
        return;
      }
    }
    for (std::size_t i = 0; i < d; ++i) q[i] = y[i] - x.u[i];
    if (!region.contains(q)) return;
    points.push_back(q);
    coeffs.emplace_back(c.begin(), c.end());
  });
  return Patch::from_lattice(d, std::move(points), std::move(coeffs), region,
                             LatticeTag{scheme.basis().fingerprint(), x.u});
}

Patch model_set_at(const Scheme& scheme, std::span<const double> w, const Box& region) {
  return hull_patch(scheme, HullPoint{Vec(scheme.d(), 0.0), Vec(w.begin(), w.end())}, region);
}

Patch model_set(const Scheme& scheme, const TransversalPoint& z, const Box& region) {
  return model_set_at(scheme, z.w(), region);
}

TransversalPoint act(const Scheme& scheme, const TransversalPoint& z,
                     std::span<const std::int64_t> gamma) {
  const Vec y = scheme.basis().point(gamma);
  Vec w = z.w();
  for (std::size_t i = 0; i < scheme.m(); ++i) w[i] += y[scheme.d() + i];
  if (!scheme.window().contains(w)) {
    throw Error(ErrorCode::NotAReturnTime, "gamma* + w leaves the window");
  }
  return TransversalPoint::make(scheme, std::move(w));
}

double predicted_density(const Scheme& scheme) {
  return scheme.window().volume() / scheme.covolume();
}

Box intersection_window(const Scheme& scheme, std::span<const TransversalPoint> zs) {
  if (zs.empty()) throw Error(ErrorCode::InvalidArgument, "need at least one transversal point");
  Box acc = scheme.window().box;
  bool first = true;
  for (const TransversalPoint& z : zs) {
    Vec minus_w(z.w());
    for (double& v : minus_w) v = -v;
    const Box shifted = scheme.window().box.translated(minus_w);
    acc = first ? shifted : box_intersect(acc, shifted);
    first = false;
  }
  return acc;
}

double predicted_intersection_density(const Scheme& scheme, std::span<const TransversalPoint> zs) {
  return intersection_window(scheme, zs).volume() / scheme.covolume();
}

TransversalPoint sample_transversal(const Scheme& scheme, Rng& rng, double eta) {
  if (!(eta > 0.0)) throw Error(ErrorCode::InvalidArgument, "margin must be positive");
  const Box eroded = box_erode(scheme.window().box, eta);
  if (eroded.empty()) {
    throw Error(ErrorCode::WindowTooSmall, "margin " + std::to_string(eta) + " empties the window");
  }
  Vec w(scheme.m());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = uniform(rng, eroded.lo()[i], eroded.hi()[i]);
  return TransversalPoint::make(scheme, std::move(w));
}

TransversalPoint sample_transversal(const Scheme& scheme, std::uint64_t seed, double eta) {
  Rng rng = make_rng(seed);
  return sample_transversal(scheme, rng, eta);
}

HullPoint sample_hull(const Scheme& scheme, Rng& rng) {
  const std::size_t n = scheme.d() + scheme.m();
  Vec c(n);
  for (double& ci : c) ci = uniform01(rng);
  Vec y(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      y[i] += scheme.basis().matrix()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * c[j];
    }
  }
  HullPoint x{Vec(scheme.d()), Vec(scheme.m())};
  for (std::size_t i = 0; i < scheme.d(); ++i) x.u[i] = -y[i];
  for (std::size_t i = 0; i < scheme.m(); ++i) x.w[i] = y[scheme.d() + i];
  return x;
}

HullPoint sample_hull(const Scheme& scheme, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return sample_hull(scheme, rng);
}

InternalDensityCheck internal_density_check(const Scheme& scheme, std::vector<double> radii) {
  std::sort(radii.begin(), radii.end());
  InternalDensityCheck out;
  out.radii = radii;
  const double reach = 0.5 * scheme.window().box.min_side();
  for (double R : radii) {
    const Box search = box_product(Box::centered(scheme.d(), R), Box::centered(scheme.m(), reach));
    double best = kInfinite;
    scheme.enumerator().for_each(search, [&](std::span<const std::int64_t> c, std::span<const double> y) {
      if (std::all_of(c.begin(), c.end(), [](std::int64_t v) { return v == 0; })) return;
      best = std::min(best, norm(y.subspan(scheme.d())));
    });
    out.min_internal_norm.push_back(best);
  }
  out.dense = !out.min_internal_norm.empty();
  for (std::size_t i = 0; i < out.min_internal_norm.size(); ++i) {
    const double v = out.min_internal_norm[i];
    if (!(v > 0.0) || !std::isfinite(v)) out.dense = false;
    if (i > 0 && !(v < out.min_internal_norm[i - 1])) out.dense = false;
  }
  return out;
}

}  // namespace meyerlab
