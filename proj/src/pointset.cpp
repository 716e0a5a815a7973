#include "meyerlab/pointset.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

#include "neighbor_index.hpp"

namespace meyerlab {

namespace {

using detail::NeighborIndex;

bool lex_less(std::span<const double> a, std::span<const double> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

bool near_equal(std::span<const double> a, std::span<const double> b, double tol) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) > tol) return false;
  }
  return true;
}

void require_dim(const Patch& p, std::size_t dim, const char* what) {
  if (p.dim() != dim) {
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + ": patch dimension");
  }
}

bool same_lattice(const Patch& a, const Patch& b) {
  return a.has_coeffs() && b.has_coeffs() && a.tag()->basis_id == b.tag()->basis_id &&
         a.coeff_dim() == b.coeff_dim();
}

bool zero_shift(const Patch& p) {
  return p.has_coeffs() &&
         std::all_of(p.tag()->shift.begin(), p.tag()->shift.end(), [](double s) { return s == 0.0; });
}

/// Collects candidate points (and coefficients) before building a Patch.
struct Builder {
  std::size_t dim;
  bool tagged;
  std::vector<Vec> points;
  std::vector<IVec> coeffs;

  Patch build(Box extent, std::optional<LatticeTag> tag) {
    if (tagged) {
      return Patch::from_lattice(dim, std::move(points), std::move(coeffs), std::move(extent),
                                 std::move(*tag));
    }
    return Patch::from_points(dim, std::move(points), std::move(extent));
  }
};

/// a + b restricted to `box`, no validity checks.
Patch sum_within(const Patch& a, const Patch& b, const Box& box) {
  const std::size_t d = a.dim();
  const bool tagged = same_lattice(a, b);
  Builder out{d, tagged, {}, {}};
  Vec s(d);
  // b is sorted by its first coordinate
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto x = a.point(i);
    const double lo0 = box.lo()[0] - x[0];
    const double hi0 = box.hi()[0] - x[0];
    std::size_t first = 0, last = b.size();
    {
      std::size_t l = 0, r = b.size();
      while (l < r) {
        const std::size_t mid = (l + r) / 2;
        if (b.point(mid)[0] < lo0 - 1e-9) l = mid + 1; else r = mid;
      }
      first = l;
    }
    for (std::size_t j = first; j < last; ++j) {
      const auto y = b.point(j);
      if (y[0] > hi0 + 1e-9) break;
      for (std::size_t k = 0; k < d; ++k) s[k] = x[k] + y[k];
      if (!box.contains(s)) continue;
      out.points.push_back(s);
      if (tagged) {
        IVec c(a.coeff_dim());
        for (std::size_t k = 0; k < c.size(); ++k) c[k] = a.coeffs(i)[k] + b.coeffs(j)[k];
        out.coeffs.push_back(std::move(c));
      }
    }
  }
  std::optional<LatticeTag> tag;
  if (tagged) {
    Vec shift(d);
    for (std::size_t k = 0; k < d; ++k) shift[k] = a.tag()->shift[k] + b.tag()->shift[k];
    tag = LatticeTag{a.tag()->basis_id, std::move(shift)};
  }
  return out.build(box, std::move(tag));
}

Box validity_box(std::size_t dim, double radius) { return Box::centered(dim, radius); }

struct CoeffLess {
  bool operator()(std::span<const std::int64_t> a, std::span<const std::int64_t> b) const {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// Patch

Patch Patch::from_points(std::size_t dim, std::vector<Vec> points, Box extent) {
  if (extent.dim() != dim) throw Error(ErrorCode::DimensionMismatch, "patch extent dimension");
  Patch p(dim, std::move(extent));
  p.finalize(std::move(points), {});
  return p;
}

Patch Patch::from_lattice(std::size_t dim, std::vector<Vec> points, std::vector<IVec> coeffs,
                          Box extent, LatticeTag tag) {
  if (extent.dim() != dim) throw Error(ErrorCode::DimensionMismatch, "patch extent dimension");
  if (coeffs.size() != points.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one coefficient vector per point");
  }
  if (tag.shift.size() != dim) throw Error(ErrorCode::DimensionMismatch, "lattice tag shift");
  Patch p(dim, std::move(extent));
  p.tag_ = std::move(tag);
  p.coeff_dim_ = coeffs.empty() ? 0 : coeffs.front().size();
  p.finalize(std::move(points), std::move(coeffs));
  return p;
}

void Patch::finalize(std::vector<Vec> points, std::vector<IVec> coeffs) {
  const bool tagged = tag_.has_value();
  for (const Vec& x : points) {
    if (x.size() != dim_) throw Error(ErrorCode::DimensionMismatch, "patch point dimension");
    if (!extent_.contains(x)) throw Error(ErrorCode::InvalidArgument, "patch point outside extent");
  }
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);

  if (tagged) {
    for (const IVec& c : coeffs) {
      if (c.size() != coeff_dim_) throw Error(ErrorCode::DimensionMismatch, "coefficient length");
    }
    // the same lattice vector found twice is one point
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return coeffs[a] != coeffs[b] ? coeffs[a] < coeffs[b] : a < b;
    });
    order.erase(std::unique(order.begin(), order.end(),
                            [&](std::size_t a, std::size_t b) { return coeffs[a] == coeffs[b]; }),
                order.end());
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (points[a] != points[b]) return points[a] < points[b];
    return tagged && coeffs[a] < coeffs[b];
  });

  coords_.clear();
  coeffs_.clear();
  coords_.reserve(order.size() * dim_);
  std::size_t kept = 0;
  for (std::size_t idx : order) {
    if (kept > 0 && near_equal(point(kept - 1), points[idx], kDuplicateTol)) continue;
    coords_.insert(coords_.end(), points[idx].begin(), points[idx].end());
    if (tagged) coeffs_.insert(coeffs_.end(), coeffs[idx].begin(), coeffs[idx].end());
    ++kept;
  }
}

Vec Patch::point_vec(std::size_t i) const {
  auto p = point(i);
  return Vec(p.begin(), p.end());
}

std::vector<Vec> Patch::points() const {
  std::vector<Vec> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back(point_vec(i));
  return out;
}

Patch Patch::restricted(const Box& box) const {
  if (box.dim() != dim_) throw Error(ErrorCode::DimensionMismatch, "restriction box");
  Patch out(dim_, box_intersect(box, extent_));
  out.tag_ = tag_;
  out.coeff_dim_ = coeff_dim_;
  for (std::size_t i = 0; i < size(); ++i) {
    if (!out.extent_.contains(point(i))) continue;
    auto p = point(i);
    out.coords_.insert(out.coords_.end(), p.begin(), p.end());
    if (tag_) {
      auto c = coeffs(i);
      out.coeffs_.insert(out.coeffs_.end(), c.begin(), c.end());
    }
  }
  return out;
}

Patch Patch::translated(std::span<const double> shift) const {
  if (shift.size() != dim_) throw Error(ErrorCode::DimensionMismatch, "translation");
  Patch out(dim_, extent_.translated(shift));
  out.tag_ = tag_;
  out.coeff_dim_ = coeff_dim_;
  out.coeffs_ = coeffs_;
  out.coords_ = coords_;
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::size_t k = 0; k < dim_; ++k) out.coords_[i * dim_ + k] += shift[k];
  }
  if (out.tag_) {
    for (std::size_t k = 0; k < dim_; ++k) out.tag_->shift[k] -= shift[k];
  }
  return out;
}

std::size_t Patch::count_in(const Box& box) const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < size(); ++i) n += box.contains(point(i)) ? 1 : 0;
  return n;
}

// ---------------------------------------------------------------------------
// Diagnostics

double min_gap(const Patch& p) {
  if (p.size() <= 1) return kInfinite;
  const std::span<const double> coords(&p.point(0)[0], p.size() * p.dim());
  NeighborIndex index(coords, p.dim());
  double best = kInfinite;
  for (std::size_t i = 0; i < p.size(); ++i) {
    best = std::min(best, index.nearest(p.point(i), i).distance);
  }
  return best;
}

double covering_radius(const Patch& p, const Box& region, double grid_step) {
  if (!(grid_step > 0.0)) throw Error(ErrorCode::InvalidArgument, "grid_step must be positive");
  require_dim(p, region.dim(), "covering_radius");
  if (p.empty()) throw Error(ErrorCode::EmptyPatch, "covering radius of an empty patch");
  if (!p.extent().contains(region)) {
    throw Error(ErrorCode::ExtentTooSmall, "covering region must lie in the patch extent");
  }
  const std::size_t d = p.dim();
  const std::span<const double> coords(&p.point(0)[0], p.size() * d);
  NeighborIndex index(coords, d);

  std::vector<std::int64_t> steps(d), idx(d, 0);
  for (std::size_t k = 0; k < d; ++k) {
    steps[k] = static_cast<std::int64_t>(std::ceil(region.side(k) / grid_step));
    if (steps[k] <= 0) return 0.0;
  }
  double worst = 0.0;
  Vec x(d);
  while (true) {
    for (std::size_t k = 0; k < d; ++k) {
      x[k] = region.lo()[k] + static_cast<double>(idx[k]) * grid_step;
    }
    worst = std::max(worst, index.nearest(x).distance);
    std::size_t k = 0;
    for (; k < d; ++k) {
      if (++idx[k] < steps[k]) break;
      idx[k] = 0;
    }
    if (k == d) break;
  }
  return worst;
}

Patch difference_set(const Patch& p, double radius) {
  if (!(radius > 0.0) || radius > 0.5 * p.extent().min_side() * (1.0 + 1e-12)) {
    throw Error(ErrorCode::RadiusExceedsValidity,
                "difference radius " + std::to_string(radius) + " exceeds half the extent side");
  }
  const std::size_t d = p.dim();
  const Box box = validity_box(d, radius);
  const bool tagged = p.has_coeffs();
  Builder out{d, tagged, {}, {}};
  Vec v(d);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto x = p.point(i);
    for (std::size_t j = 0; j < p.size(); ++j) {
      const auto y = p.point(j);
      if (x[0] - y[0] >= radius) continue;
      if (y[0] - x[0] > radius) break;
      for (std::size_t k = 0; k < d; ++k) v[k] = x[k] - y[k];
      if (!box.contains(v)) continue;
      out.points.push_back(v);
      if (tagged) {
        IVec c(p.coeff_dim());
        for (std::size_t k = 0; k < c.size(); ++k) c[k] = p.coeffs(i)[k] - p.coeffs(j)[k];
        out.coeffs.push_back(std::move(c));
      }
    }
  }
  std::optional<LatticeTag> tag;
  if (tagged) tag = LatticeTag{p.tag()->basis_id, Vec(d, 0.0)};
  return out.build(box, std::move(tag));
}

Patch sumset(const Patch& a, const Patch& b, double radius) {
  require_dim(b, a.dim(), "sumset");
  const Box box = validity_box(a.dim(), radius);
  if (!a.extent().contains(box) || !b.extent().contains(box)) {
    throw Error(ErrorCode::RadiusExceedsValidity, "sumset radius outside the summands' extents");
  }
  return sum_within(a, b, box);
}

Patch iterated_sumset(const Patch& lambda, int k, double radius) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "sumset order must be positive");
  const std::size_t d = lambda.dim();
  const Box big = validity_box(d, radius * k);
  if (!lambda.extent().contains(big)) {
    throw Error(ErrorCode::RadiusExceedsValidity,
                "k * radius = " + std::to_string(radius * k) + " exceeds the extent");
  }
  const Patch base = lambda.restricted(big);
  Patch acc = base;
  for (int i = 1; i < k; ++i) acc = sum_within(acc, base, big);
  return acc.restricted(validity_box(d, radius));
}

double accumulation_margin(const Patch& a, const Patch& b, double radius) {
  const Patch s = sumset(a, b, radius);
  double best = kInfinite;
  for (std::size_t i = 0; i < s.size(); ++i) {
    bool nonzero;
    if (s.has_coeffs()) {
      auto c = s.coeffs(i);
      nonzero = std::any_of(c.begin(), c.end(), [](std::int64_t x) { return x != 0; });
    } else {
      nonzero = norm(s.point(i)) > kDuplicateTol;
    }
    if (nonzero) best = std::min(best, norm(s.point(i)));
  }
  return best;
}

WitnessReport approx_subgroup_witness(const Patch& lambda, double radius, double gap_tol) {
  const std::size_t d = lambda.dim();
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "radius must be positive");
  if (!lambda.extent().contains(validity_box(d, 2.0 * radius))) {
    throw Error(ErrorCode::RadiusExceedsValidity, "witness search needs the extent to cover 2 * radius");
  }
  if (lambda.empty()) throw Error(ErrorCode::EmptyPatch, "approximate subgroup witness");

  const std::span<const double> coords(&lambda.point(0)[0], lambda.size() * d);
  NeighborIndex index(coords, d);
  const Vec origin(d, 0.0);
  if (index.nearest(origin).distance > gap_tol) {
    throw Error(ErrorCode::InvalidArgument, "witness search needs 0 in the set");
  }
  Vec neg(d);
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    for (std::size_t k = 0; k < d; ++k) neg[k] = -lambda.point(i)[k];
    if (!lambda.extent().contains(neg)) continue;
    if (index.nearest(neg).distance > gap_tol) {
      throw Error(ErrorCode::InvalidArgument, "witness search needs a symmetric set");
    }
  }

  const bool exact = zero_shift(lambda);
  std::set<std::span<const std::int64_t>, CoeffLess> members;
  if (exact) {
    for (std::size_t i = 0; i < lambda.size(); ++i) members.insert(lambda.coeffs(i));
  }

  const Patch sums = sumset(lambda, lambda, radius);
  const std::size_t n = sums.size();
  auto covers = [&](std::size_t f, std::size_t s) {
    Vec diff(d);
    for (std::size_t k = 0; k < d; ++k) diff[k] = sums.point(s)[k] - sums.point(f)[k];
    if (!lambda.extent().contains(diff)) return false;
    if (exact && sums.has_coeffs()) {
      IVec c(sums.coeff_dim());
      for (std::size_t k = 0; k < c.size(); ++k) c[k] = sums.coeffs(s)[k] - sums.coeffs(f)[k];
      return members.count(std::span<const std::int64_t>(c)) > 0;
    }
    return index.nearest(diff).distance <= gap_tol;
  };

  // candidates are the sums themselves; cover[f] lists the sums f handles
  std::vector<std::vector<std::size_t>> cover(n);
  for (std::size_t f = 0; f < n; ++f) {
    for (std::size_t s = 0; s < n; ++s) {
      if (covers(f, s)) cover[f].push_back(s);
    }
  }

  std::vector<char> covered(n, 0);
  std::size_t remaining = n;
  WitnessReport report;
  while (remaining > 0) {
    std::size_t best = n, best_gain = 0;
    for (std::size_t f = 0; f < n; ++f) {
      std::size_t gain = 0;
      for (std::size_t s : cover[f]) gain += covered[s] ? 0 : 1;
      if (gain == 0) continue;
      bool better = gain > best_gain;
      if (!better && gain == best_gain) {
        const double nf = norm(sums.point(f)), nb = norm(sums.point(best));
        better = nf < nb || (nf == nb && lex_less(sums.point(f), sums.point(best)));
      }
      if (better) {
        best = f;
        best_gain = gain;
      }
    }
    if (best == n) break;
    report.F.push_back(sums.point_vec(best));
    for (std::size_t s : cover[best]) {
      if (!covered[s]) {
        covered[s] = 1;
        --remaining;
      }
    }
  }
  for (std::size_t s = 0; s < n; ++s) {
    if (!covered[s]) report.uncovered.push_back(sums.point_vec(s));
  }
  report.success = report.uncovered.empty();
  std::sort(report.F.begin(), report.F.end());
  return report;
}

double patch_distance(const Patch& p, const Patch& q, double R) {
  require_dim(q, p.dim(), "patch_distance");
  const std::size_t d = p.dim();
  if (!(R > 0.0)) throw Error(ErrorCode::InvalidArgument, "R must be positive");
  const Box ball = validity_box(d, R);
  if (!p.extent().contains(ball) || !q.extent().contains(ball)) {
    throw Error(ErrorCode::ExtentTooSmall, "[-R, R)^d must lie in both extents");
  }

  // For each point in the box: its largest positive coordinate, its most
  // negative coordinate (as a magnitude) and its distance to the other patch.
  struct Witness {
    double upper, lower, dist;
  };
  std::vector<Witness> witnesses;
  auto collect = [&](const Patch& from, const Patch& to) {
    std::optional<NeighborIndex> index;
    if (!to.empty()) index.emplace(std::span<const double>(&to.point(0)[0], to.size() * d), d);
    for (std::size_t i = 0; i < from.size(); ++i) {
      const auto x = from.point(i);
      if (!ball.contains(x)) continue;
      Witness w{-kInfinite, -kInfinite, index ? index->nearest(x).distance : kInfinite};
      for (double c : x) {
        w.upper = std::max(w.upper, c);
        w.lower = std::max(w.lower, -c);
      }
      witnesses.push_back(w);
    }
  };
  collect(p, q);
  collect(q, p);

  auto holds = [&](double eps) {
    const double r = std::min(R, 1.0 / eps);
    for (const Witness& w : witnesses) {
      if (w.dist <= eps) continue;
      if (w.upper < r && w.lower <= r) return false;  // inside [-r, r)^d
    }
    return true;
  };

  bool exact = true;
  for (const Witness& w : witnesses) exact = exact && w.dist <= kDuplicateTol;
  if (exact) return 0.0;
  if (!holds(1.0)) return 1.0;
  double lo = 0.0, hi = 1.0;
  while (hi - lo > kDistanceResolution) {
    const double mid = 0.5 * (lo + hi);
    if (holds(mid)) hi = mid; else lo = mid;
  }
  return hi;
}

Patch return_time_set(std::span<const Patch> patches, double radius, double match_tol) {
  if (patches.empty()) throw Error(ErrorCode::InvalidArgument, "return_time_set needs a patch");
  const std::size_t d = patches[0].dim();
  const Box box = validity_box(d, radius);
  for (const Patch& p : patches) {
    require_dim(p, d, "return_time_set");
    if (!p.extent().contains(box)) {
      throw Error(ErrorCode::RadiusExceedsValidity, "return_time_set radius outside an extent");
    }
  }
  const Patch first = patches[0].restricted(box);
  if (patches.size() == 1) return first;

  bool exact = first.has_coeffs();
  for (const Patch& p : patches) exact = exact && p.has_coeffs() && p.tag() == first.tag();
  if (exact) {
    std::vector<std::set<std::span<const std::int64_t>, CoeffLess>> sets(patches.size());
    for (std::size_t k = 1; k < patches.size(); ++k) {
      for (std::size_t i = 0; i < patches[k].size(); ++i) sets[k].insert(patches[k].coeffs(i));
    }
    Builder out{d, true, {}, {}};
    for (std::size_t i = 0; i < first.size(); ++i) {
      bool everywhere = true;
      for (std::size_t k = 1; k < patches.size() && everywhere; ++k) {
        everywhere = sets[k].count(first.coeffs(i)) > 0;
      }
      if (!everywhere) continue;
      out.points.push_back(first.point_vec(i));
      auto c = first.coeffs(i);
      out.coeffs.emplace_back(c.begin(), c.end());
    }
    return out.build(box, first.tag());
  }

  std::vector<NeighborIndex> indices;
  indices.reserve(patches.size());
  for (const Patch& p : patches) {
    indices.emplace_back(p.empty() ? std::span<const double>()
                                   : std::span<const double>(&p.point(0)[0], p.size() * d),
                         d);
  }
  Builder out{d, false, {}, {}};
  for (std::size_t i = 0; i < first.size(); ++i) {
    Vec centroid = first.point_vec(i);
    bool everywhere = true;
    for (std::size_t k = 1; k < patches.size() && everywhere; ++k) {
      const auto hit = indices[k].nearest(first.point(i));
      everywhere = hit.distance <= match_tol;
      if (everywhere) {
        for (std::size_t j = 0; j < d; ++j) centroid[j] += patches[k].point(hit.index)[j];
      }
    }
    if (!everywhere) continue;
    for (double& c : centroid) c /= static_cast<double>(patches.size());
    if (box.contains(centroid)) out.points.push_back(std::move(centroid));
  }
  return out.build(box, std::nullopt);
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string fmt12(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

}  // namespace

void write_patch_csv(std::ostream& out, const Patch& p) {
  out << "# extent";
  for (double x : p.extent().lo()) out << ' ' << fmt12(x);
  for (double x : p.extent().hi()) out << ' ' << fmt12(x);
  out << '\n';
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto x = p.point(i);
    for (std::size_t k = 0; k < x.size(); ++k) out << (k ? "," : "") << fmt12(x[k]);
    out << '\n';
  }
}

Patch read_patch_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# extent", 0) != 0) {
    throw Error(ErrorCode::IoError, "patch CSV must start with '# extent'");
  }
  std::istringstream header(line.substr(8));
  Vec bounds;
  for (double x; header >> x;) bounds.push_back(x);
  if (bounds.empty() || bounds.size() % 2 != 0) {
    throw Error(ErrorCode::IoError, "patch CSV extent needs lo and hi for every axis");
  }
  const std::size_t d = bounds.size() / 2;
  Box extent(Vec(bounds.begin(), bounds.begin() + static_cast<long>(d)),
             Vec(bounds.begin() + static_cast<long>(d), bounds.end()));
  std::vector<Vec> points;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Vec x;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) {
      try {
        x.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(ErrorCode::IoError, "bad patch CSV cell '" + cell + "'");
      }
    }
    if (x.size() != d) throw Error(ErrorCode::IoError, "patch CSV row has the wrong arity");
    points.push_back(std::move(x));
  }
  return Patch::from_points(d, std::move(points), std::move(extent));
}

}  // namespace meyerlab
