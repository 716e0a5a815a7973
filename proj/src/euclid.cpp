#include "meyerlab/euclid.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <limits>
#include <string>

namespace meyerlab {

namespace {

void require_same_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + ": " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

}  // namespace

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double sup_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

// ---------------------------------------------------------------------------
// Box

Box::Box(Vec lo, Vec hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
  require_same_dim(lo_.size(), hi_.size(), "Box bounds");
  for (std::size_t i = 0; i < lo_.size(); ++i) {
    if (!std::isfinite(lo_[i]) || !std::isfinite(hi_[i])) {
      throw Error(ErrorCode::InvalidArgument, "Box bounds must be finite");
    }
  }
}

Box Box::centered(std::size_t dim, double radius) {
  return Box(Vec(dim, -radius), Vec(dim, radius));
}

Box Box::cube(std::size_t dim, double lo, double hi) { return Box(Vec(dim, lo), Vec(dim, hi)); }

double Box::min_side() const {
  double s = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < dim(); ++i) s = std::min(s, side(i));
  return s;
}

bool Box::empty() const {
  for (std::size_t i = 0; i < dim(); ++i) {
    if (!(lo_[i] < hi_[i])) return true;
  }
  return false;
}

double Box::volume() const {
  if (empty()) return 0.0;
  double v = 1.0;
  for (std::size_t i = 0; i < dim(); ++i) v *= side(i);
  return v;
}

bool Box::contains(std::span<const double> x) const {
  require_same_dim(x.size(), dim(), "Box::contains");
  for (std::size_t i = 0; i < dim(); ++i) {
    if (!(lo_[i] <= x[i] && x[i] < hi_[i])) return false;
  }
  return true;
}

bool Box::contains(const Box& other) const {
  require_same_dim(other.dim(), dim(), "Box::contains");
  if (other.empty()) return true;
  for (std::size_t i = 0; i < dim(); ++i) {
    if (other.lo_[i] < lo_[i] || other.hi_[i] > hi_[i]) return false;
  }
  return true;
}

Box Box::translated(std::span<const double> shift) const {
  require_same_dim(shift.size(), dim(), "Box::translated");
  Vec lo = lo_, hi = hi_;
  for (std::size_t i = 0; i < dim(); ++i) {
    lo[i] += shift[i];
    hi[i] += shift[i];
  }
  return Box(std::move(lo), std::move(hi));
}

Box Box::expanded(double pad) const {
  Vec lo = lo_, hi = hi_;
  for (std::size_t i = 0; i < dim(); ++i) {
    lo[i] -= pad;
    hi[i] += pad;
  }
  return Box(std::move(lo), std::move(hi));
}

Box Box::negated() const {
  Vec lo(dim()), hi(dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    lo[i] = -hi_[i];
    hi[i] = -lo_[i];
  }
  return Box(std::move(lo), std::move(hi));
}

Box box_intersect(const Box& a, const Box& b) {
  require_same_dim(a.dim(), b.dim(), "box_intersect");
  Vec lo(a.dim()), hi(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i) {
    lo[i] = std::max(a.lo()[i], b.lo()[i]);
    hi[i] = std::min(a.hi()[i], b.hi()[i]);
    // keep empty results canonical so volume() reports 0
    if (hi[i] < lo[i]) hi[i] = lo[i];
  }
  return Box(std::move(lo), std::move(hi));
}

double box_volume(const Box& a) { return a.volume(); }

Box box_erode(const Box& a, double eps) {
  if (!(eps >= 0.0)) throw Error(ErrorCode::InvalidArgument, "erosion radius must be >= 0");
  Vec lo = a.lo(), hi = a.hi();
  for (std::size_t i = 0; i < a.dim(); ++i) {
    lo[i] += eps;
    hi[i] -= eps;
    if (hi[i] < lo[i]) {
      const double mid = 0.5 * (a.lo()[i] + a.hi()[i]);
      lo[i] = hi[i] = mid;
    }
  }
  return Box(std::move(lo), std::move(hi));
}

Box box_product(const Box& a, const Box& b) {
  Vec lo = a.lo(), hi = a.hi();
  lo.insert(lo.end(), b.lo().begin(), b.lo().end());
  hi.insert(hi.end(), b.hi().begin(), b.hi().end());
  return Box(std::move(lo), std::move(hi));
}

Box box_difference(const Box& a, const Box& b) {
  require_same_dim(a.dim(), b.dim(), "box_difference");
  Vec lo(a.dim()), hi(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i) {
    lo[i] = a.lo()[i] - b.hi()[i];
    hi[i] = a.hi()[i] - b.lo()[i];
  }
  return Box(std::move(lo), std::move(hi));
}

Window::Window(Box b) : box(std::move(b)) {
  if (box.dim() == 0 || !(box.volume() > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "window must have positive volume");
  }
}

double Window::margin(std::span<const double> w) const {
  require_same_dim(w.size(), dim(), "Window::margin");
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < dim(); ++i) {
    m = std::min({m, w[i] - box.lo()[i], box.hi()[i] - w[i]});
  }
  return m;
}

// ---------------------------------------------------------------------------
// LatticeBasis

LatticeBasis LatticeBasis::from_rows(const std::vector<Vec>& rows) {
  const auto n = rows.size();
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "empty basis");
  Eigen::MatrixXd m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    require_same_dim(rows[i].size(), n, "basis row");
    for (std::size_t j = 0; j < n; ++j) m(i, j) = rows[i][j];
  }
  return LatticeBasis(std::move(m));
}

LatticeBasis::LatticeBasis(Eigen::MatrixXd matrix) : matrix_(std::move(matrix)) {
  if (matrix_.rows() != matrix_.cols() || matrix_.rows() == 0) {
    throw Error(ErrorCode::DimensionMismatch, "basis matrix must be square and non-empty");
  }
  if (!matrix_.allFinite()) throw Error(ErrorCode::InvalidArgument, "basis has non-finite entries");
  const double scale = matrix_.cwiseAbs().maxCoeff();
  const double det = matrix_.fullPivLu().determinant();
  const double threshold = 1e-9 * std::pow(scale, static_cast<double>(matrix_.rows()));
  if (!(scale > 0.0) || !(std::abs(det) > threshold)) {
    throw Error(ErrorCode::SingularBasis,
                "|det| = " + std::to_string(std::abs(det)) + " below " + std::to_string(threshold));
  }
  covolume_ = std::abs(det);
  inverse_ = matrix_.inverse();

  // FNV-1a over the raw entries
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  const auto n = static_cast<std::uint64_t>(matrix_.rows());
  mix(&n, sizeof n);
  for (Eigen::Index i = 0; i < matrix_.size(); ++i) {
    const double x = matrix_.data()[i];
    mix(&x, sizeof x);
  }
  fingerprint_ = h;
}

Vec LatticeBasis::point(std::span<const std::int64_t> coeffs) const {
  require_same_dim(coeffs.size(), dim(), "lattice coefficients");
  Vec y(dim(), 0.0);
  for (std::size_t j = 0; j < dim(); ++j) {
    const double c = static_cast<double>(coeffs[j]);
    if (c == 0.0) continue;
    for (std::size_t i = 0; i < dim(); ++i) y[i] += matrix_(i, j) * c;
  }
  return y;
}

Vec LatticeBasis::coefficients(std::span<const double> y) const {
  require_same_dim(y.size(), dim(), "lattice coordinates");
  Vec c(dim(), 0.0);
  for (std::size_t i = 0; i < dim(); ++i) {
    for (std::size_t j = 0; j < dim(); ++j) c[i] += inverse_(i, j) * y[j];
  }
  return c;
}

double covolume(const LatticeBasis& basis) { return basis.covolume(); }

// ---------------------------------------------------------------------------
// LatticeEnumerator

LatticeEnumerator::LatticeEnumerator(const LatticeBasis& basis, double budget)
    : basis_(basis), budget_(budget) {
  const std::size_t n = basis_.dim();
  if (2 * n > 64) throw Error(ErrorCode::InvalidArgument, "lattice dimension too large");

  struct Row {
    Vec a;
    Vec lambda;
    std::uint64_t support;
  };
  std::vector<Row> rows;
  for (std::size_t i = 0; i < n; ++i) {
    Row up{Vec(n), Vec(2 * n, 0.0), std::uint64_t{1} << i};
    Row down{Vec(n), Vec(2 * n, 0.0), std::uint64_t{1} << (n + i)};
    for (std::size_t j = 0; j < n; ++j) {
      up.a[j] = basis_.matrix()(i, j);
      down.a[j] = -basis_.matrix()(i, j);
    }
    up.lambda[i] = 1.0;
    down.lambda[n + i] = 1.0;
    rows.push_back(std::move(up));
    rows.push_back(std::move(down));
  }

  levels_.assign(n, {});
  const double zero_tol = 1e-13;
  for (std::size_t eliminated = 0;; ++eliminated) {
    const std::size_t k = n - 1 - eliminated;  // rows constrain c_0..c_k
    for (const Row& r : rows) {
      levels_[k].push_back({Vec(r.a.begin(), r.a.begin() + static_cast<long>(k + 1)), r.lambda});
    }
    if (k == 0) break;

    // Eliminate c_k. Chernikov's rule: after e eliminations a combination of
    // more than e + 1 original inequalities is redundant.
    std::vector<Row> next, pos, neg;
    for (Row& r : rows) {
      const double scale = sup_norm(r.a);
      if (std::abs(r.a[k]) <= zero_tol * std::max(scale, 1.0)) {
        r.a[k] = 0.0;
        next.push_back(r);
      } else if (r.a[k] > 0.0) {
        pos.push_back(r);
      } else {
        neg.push_back(r);
      }
    }
    for (const Row& p : pos) {
      for (const Row& q : neg) {
        const std::uint64_t support = p.support | q.support;
        if (static_cast<std::size_t>(std::popcount(support)) > eliminated + 2) continue;
        Row r{Vec(n, 0.0), Vec(2 * n, 0.0), support};
        const double wp = -q.a[k], wq = p.a[k];
        for (std::size_t j = 0; j < n; ++j) r.a[j] = wp * p.a[j] + wq * q.a[j];
        for (std::size_t j = 0; j < 2 * n; ++j) r.lambda[j] = wp * p.lambda[j] + wq * q.lambda[j];
        r.a[k] = 0.0;
        double s = sup_norm(r.a);
        if (s <= zero_tol) continue;  // encodes lo <= hi only
        for (double& x : r.a) x /= s;
        for (double& x : r.lambda) x /= s;
        next.push_back(std::move(r));
      }
    }
    rows = std::move(next);
  }
}

double LatticeEnumerator::projected_count(const Box& region) const {
  if (region.dim() != basis_.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "enumeration region dimension");
  }
  if (region.empty()) return 0.0;
  // volume term plus the number of outermost coefficient values
  double c0_lo = std::numeric_limits<double>::infinity();
  double c0_hi = -c0_lo;
  const std::size_t n = basis_.dim();
  for (std::uint64_t corner = 0; corner < (std::uint64_t{1} << n); ++corner) {
    Vec y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = (corner >> i) & 1 ? region.hi()[i] : region.lo()[i];
    }
    const Vec c = basis_.coefficients(y);
    c0_lo = std::min(c0_lo, c[0]);
    c0_hi = std::max(c0_hi, c[0]);
  }
  return region.volume() / basis_.covolume() + (c0_hi - c0_lo) + 1.0;
}

void LatticeEnumerator::for_each(const Box& region, const Visitor& visit) const {
  const std::size_t n = basis_.dim();
  if (region.dim() != n) throw Error(ErrorCode::DimensionMismatch, "enumeration region dimension");
  if (region.empty()) return;
  const double projected = projected_count(region);
  if (projected > budget_) {
    throw Error(ErrorCode::RegionTooLarge, "projected coefficient count " +
                                               std::to_string(projected) + " exceeds budget " +
                                               std::to_string(budget_));
  }

  // Relaxed closed bounds; the exact half-open test happens at the leaves.
  Vec bounds(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double slack = 1e-9 * (1.0 + std::abs(region.lo()[i]) + std::abs(region.hi()[i]));
    bounds[i] = region.hi()[i] + slack;
    bounds[n + i] = -(region.lo()[i] - slack);
  }
  std::vector<Vec> rhs(n);
  for (std::size_t k = 0; k < n; ++k) {
    rhs[k].resize(levels_[k].size());
    for (std::size_t r = 0; r < levels_[k].size(); ++r) {
      double s = 0.0;
      const Vec& lambda = levels_[k][r].lambda;
      for (std::size_t j = 0; j < 2 * n; ++j) s += lambda[j] * bounds[j];
      rhs[k][r] = s;
    }
  }

  IVec coeffs(n, 0);
  // partials[k] = B * (c_0..c_{k-1}, 0, ..., 0)
  std::vector<Vec> partials(n + 1, Vec(n, 0.0));
  const Eigen::MatrixXd& m = basis_.matrix();

  std::function<void(std::size_t)> descend = [&](std::size_t k) {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    const auto& cons = levels_[k];
    for (std::size_t r = 0; r < cons.size(); ++r) {
      const Vec& a = cons[r].a;
      double s = rhs[k][r];
      for (std::size_t j = 0; j < k; ++j) s -= a[j] * static_cast<double>(coeffs[j]);
      const double ak = a[k];
      if (ak > 0.0) {
        hi = std::min(hi, s / ak);
      } else if (ak < 0.0) {
        lo = std::max(lo, s / ak);
      } else if (s < -1e-9) {
        return;
      }
    }
    if (!(lo <= hi)) return;
    const double eps = 1e-9 * (1.0 + std::abs(lo) + std::abs(hi));
    const auto first = static_cast<std::int64_t>(std::ceil(lo - eps));
    const auto last = static_cast<std::int64_t>(std::floor(hi + eps));
    const Vec& base = partials[k];
    Vec& out = partials[k + 1];
    for (std::int64_t c = first; c <= last; ++c) {
      coeffs[k] = c;
      const double cd = static_cast<double>(c);
      for (std::size_t i = 0; i < n; ++i) out[i] = base[i] + m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) * cd;
      if (k + 1 < n) {
        descend(k + 1);
      } else if (region.contains(out)) {
        visit(std::span<const std::int64_t>(coeffs), std::span<const double>(out));
      }
    }
    coeffs[k] = 0;
  };
  descend(0);
}

std::vector<LatticePoint> LatticeEnumerator::enumerate(const Box& region) const {
  std::vector<LatticePoint> out;
  for_each(region, [&out](std::span<const std::int64_t> c, std::span<const double> p) {
    out.push_back({IVec(c.begin(), c.end()), Vec(p.begin(), p.end())});
  });
  return out;
}

std::vector<LatticePoint> enumerate_lattice(const LatticeBasis& basis, const Box& region,
                                            double budget) {
  return LatticeEnumerator(basis, budget).enumerate(region);
}

}  // namespace meyerlab
