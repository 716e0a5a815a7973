#include "meyerlab/transverse.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "meyerlab/parallel.hpp"

namespace meyerlab {

namespace {

constexpr std::size_t kChunk = 1024;

Box box_hull(const Box& a, const Box& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  Vec lo(a.dim()), hi(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i) {
    lo[i] = std::min(a.lo()[i], b.lo()[i]);
    hi[i] = std::max(a.hi()[i], b.hi()[i]);
  }
  return Box(lo, hi);
}

Vec negate(std::span<const double> v) {
  Vec out(v.begin(), v.end());
  for (double& x : out) x = -x;
  return out;
}

struct Moments {
  double s1 = 0.0, s2 = 0.0;
};

// Sample mean and its standard error from running sums.
std::pair<double, double> mean_and_error(const Moments& m, std::size_t n) {
  if (n == 0) return {0.0, 0.0};
  const double nn = static_cast<double>(n);
  const double mean = m.s1 / nn;
  if (n < 2) return {mean, 0.0};
  const double var = std::max(0.0, (m.s2 - nn * mean * mean) / (nn - 1.0));
  return {mean, std::sqrt(var / nn)};
}

double z_score(double diff, double err) {
  if (err > 0.0) return diff / err;
  return diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff);
}

// Runs sample(rng, out) for n draws split into fixed chunks, each with its own
// substream; per-chunk sums are reduced in chunk order.
template <std::size_t K, class Sample>
std::array<Moments, K> sample_moments(std::size_t n, std::uint64_t seed, Sample&& sample) {
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<std::array<Moments, K>> partial(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    Rng rng = make_rng(seed, c);
    const std::size_t count = std::min(kChunk, n - c * kChunk);
    std::array<double, K> v{};
    for (std::size_t i = 0; i < count; ++i) {
      sample(rng, v);
      for (std::size_t k = 0; k < K; ++k) {
        partial[c][k].s1 += v[k];
        partial[c][k].s2 += v[k] * v[k];
      }
    }
  });
  std::array<Moments, K> total{};
  for (const auto& p : partial) {
    for (std::size_t k = 0; k < K; ++k) {
      total[k].s1 += p[k].s1;
      total[k].s2 += p[k].s2;
    }
  }
  return total;
}

// Midpoint-rule integral of f over support_g x (support_w meet W).
double integrate(const Scheme& scheme, const TestFn& f) {
  const Box wbox = box_intersect(f.support_w, scheme.window().box);
  if (f.support_g.empty() || wbox.empty()) return 0.0;
  const Box full = box_product(f.support_g, wbox);
  const std::size_t n = full.dim();
  const auto per_axis = static_cast<std::size_t>(std::max(2.0, std::floor(std::pow(1 << 20, 1.0 / static_cast<double>(n)))));
  std::vector<std::size_t> idx(n, 0);
  Vec g(scheme.d()), w(scheme.m());
  double sum = 0.0;
  while (true) {
    for (std::size_t i = 0; i < n; ++i) {
      const double x = full.lo()[i] + (static_cast<double>(idx[i]) + 0.5) * full.side(i) / static_cast<double>(per_axis);
      (i < scheme.d() ? g[i] : w[i - scheme.d()]) = x;
    }
    sum += f.eval(g, w);
    std::size_t k = 0;
    while (k < n && ++idx[k] == per_axis) idx[k++] = 0;
    if (k == n) break;
  }
  return sum * full.volume() / std::pow(static_cast<double>(per_axis), static_cast<double>(n));
}

}  // namespace

TestFn TestFn::indicator(Box A, Box B) {
  TestFn f;
  f.support_g = A;
  f.support_w = B;
  f.bound = 1.0;
  f.eval = [A, B](std::span<const double> g, std::span<const double> w) {
    return A.contains(g) && B.contains(w) ? 1.0 : 0.0;
  };
  f.product = std::make_pair(std::move(A), std::move(B));
  return f;
}

TestFn operator+(const TestFn& a, const TestFn& b) {
  TestFn f;
  f.support_g = box_hull(a.support_g, b.support_g);
  f.support_w = box_hull(a.support_w, b.support_w);
  f.bound = a.bound + b.bound;
  f.eval = [ea = a.eval, eb = b.eval](std::span<const double> g, std::span<const double> w) {
    return ea(g, w) + eb(g, w);
  };
  return f;
}

TestFn scaled(const TestFn& f, double c) {
  TestFn out = f;
  out.bound = std::abs(c) * f.bound;
  out.eval = [e = f.eval, c](std::span<const double> g, std::span<const double> w) { return c * e(g, w); };
  out.product.reset();
  return out;
}

TestFn shifted(const TestFn& f, std::span<const double> g) {
  if (g.size() != f.support_g.dim()) throw Error(ErrorCode::DimensionMismatch, "shift");
  TestFn out = f;
  const Vec shift(g.begin(), g.end());
  out.support_g = f.support_g.translated(negate(g));
  out.eval = [e = f.eval, shift](std::span<const double> h, std::span<const double> w) {
    Vec moved(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) moved[i] = shift[i] + h[i];
    return e(moved, w);
  };
  if (out.product) out.product->first = out.support_g;
  return out;
}

HullPoint translate(const HullPoint& x, std::span<const double> g) {
  HullPoint y = x;
  for (std::size_t i = 0; i < g.size(); ++i) y.u[i] += g[i];
  return y;
}

double periodize(const Scheme& scheme, const TestFn& f, const HullPoint& x) {
  const std::size_t d = scheme.d(), m = scheme.m();
  if (x.u.size() != d || x.w.size() != m || f.support_g.dim() != d || f.support_w.dim() != m) {
    throw Error(ErrorCode::DimensionMismatch, "periodize");
  }
  const Box wbox = box_intersect(f.support_w, scheme.window().box);
  if (f.support_g.empty() || wbox.empty()) return 0.0;
  const double pad = 1e-9 * (1.0 + sup_norm(x.u) + sup_norm(x.w));
  const Box search = box_product(f.support_g.negated().translated(x.u).expanded(pad),
                                 wbox.translated(negate(x.w)).expanded(pad));
  const Window& W = scheme.window();
  Vec g(d), w(m);
  double sum = 0.0;
  scheme.enumerator().for_each(search, [&](std::span<const std::int64_t>, std::span<const double> y) {
    for (std::size_t i = 0; i < m; ++i) w[i] = x.w[i] + y[d + i];
    if (!W.contains(w)) return;
    for (std::size_t i = 0; i < d; ++i) g[i] = x.u[i] - y[i];
    sum += f.eval(g, w);
  });
  return sum;
}

std::size_t return_count(const Scheme& scheme, const HullPoint& x, const Box& K) {
  const std::size_t d = scheme.d(), m = scheme.m();
  if (K.dim() != d) throw Error(ErrorCode::DimensionMismatch, "return_count");
  if (K.empty()) return 0;
  const double pad = 1e-9 * (1.0 + sup_norm(x.u) + sup_norm(x.w));
  const Box search = box_product(K.negated().translated(x.u).expanded(pad),
                                 scheme.window().box.translated(negate(x.w)).expanded(pad));
  Vec g(d), w(m);
  std::size_t count = 0;
  scheme.enumerator().for_each(search, [&](std::span<const std::int64_t>, std::span<const double> y) {
    for (std::size_t i = 0; i < m; ++i) w[i] = x.w[i] + y[d + i];
    for (std::size_t i = 0; i < d; ++i) g[i] = x.u[i] - y[i];
    if (scheme.window().contains(w) && K.contains(g)) ++count;
  });
  return count;
}

void check_injective(const Scheme& scheme, const Box& V, const Box& B) {
  if (V.dim() != scheme.d() || B.dim() != scheme.m()) throw Error(ErrorCode::DimensionMismatch, "injectivity check");
  const Box b = box_intersect(B, scheme.window().box);
  if (V.empty() || b.empty()) return;
  const Box region = box_product(box_difference(V, V), box_difference(b, b));
  scheme.enumerator().for_each(region, [&](std::span<const std::int64_t> c, std::span<const double>) {
    if (std::any_of(c.begin(), c.end(), [](std::int64_t v) { return v != 0; })) {
      std::string msg = "lattice vector with coefficients (";
      for (std::size_t i = 0; i < c.size(); ++i) msg += (i ? "," : "") + std::to_string(c[i]);
      throw Error(ErrorCode::InjectivityViolated, msg + ") joins two points of V x B");
    }
  });
}

IdentityReport verify_transverse_identity(const Scheme& scheme, const TestFn& f,
                                          std::size_t n_samples, std::uint64_t seed) {
  if (n_samples == 0) throw Error(ErrorCode::InvalidArgument, "n_samples must be positive");
  const auto sums = sample_moments<1>(n_samples, seed, [&](Rng& rng, std::array<double, 1>& v) {
    v[0] = periodize(scheme, f, sample_hull(scheme, rng));
  });
  IdentityReport rep;
  std::tie(rep.lhs, rep.std_error) = mean_and_error(sums[0], n_samples);
  if (f.product) {
    rep.rhs = f.product->first.volume() * box_intersect(f.product->second, scheme.window().box).volume() /
              scheme.covolume();
  } else {
    rep.rhs = integrate(scheme, f) / scheme.covolume();
    rep.rhs_exact = false;
  }
  rep.z = z_score(rep.lhs - rep.rhs, rep.std_error);
  rep.n = n_samples;
  rep.seed = seed;
  return rep;
}

MeasureEstimate estimate_transverse_measure(const Scheme& scheme, const Box& B, const Box& V,
                                            std::size_t n_samples, std::uint64_t seed) {
  if (n_samples == 0) throw Error(ErrorCode::InvalidArgument, "n_samples must be positive");
  if (V.empty()) throw Error(ErrorCode::InvalidArgument, "V must have positive volume");
  check_injective(scheme, V, B);
  const TestFn f = TestFn::indicator(V, B);
  const auto sums = sample_moments<1>(n_samples, seed, [&](Rng& rng, std::array<double, 1>& v) {
    v[0] = periodize(scheme, f, sample_hull(scheme, rng));
  });
  const auto [mean, err] = mean_and_error(sums[0], n_samples);
  return {mean / V.volume(), err / V.volume(), n_samples};
}

SectionReport change_of_section_check(const Scheme& scheme, std::span<const double> g,
                                      const Box& B, std::size_t n_samples, std::uint64_t seed,
                                      std::optional<Box> V) {
  if (n_samples == 0) throw Error(ErrorCode::InvalidArgument, "n_samples must be positive");
  if (g.size() != scheme.d()) throw Error(ErrorCode::DimensionMismatch, "translate");
  if (!V) {
    double half = 0.5;
    for (int i = 0; i < 60; ++i, half /= 2) {
      try {
        check_injective(scheme, Box::centered(scheme.d(), half), B);
        V = Box::centered(scheme.d(), half);
        break;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::InjectivityViolated) throw;
      }
    }
    if (!V) throw Error(ErrorCode::InjectivityViolated, "no injective neighbourhood found");
  } else {
    check_injective(scheme, *V, B);
  }
  const TestFn on_section = TestFn::indicator(*V, B);
  const TestFn on_translate = TestFn::indicator(V->translated(g), B);
  const auto sums = sample_moments<3>(n_samples, seed, [&](Rng& rng, std::array<double, 3>& v) {
    const HullPoint x = sample_hull(scheme, rng);
    v[0] = periodize(scheme, on_section, x);
    v[1] = periodize(scheme, on_translate, x);
    v[2] = v[0] - v[1];
  });
  const double vol = V->volume();
  SectionReport rep;
  auto [m0, e0] = mean_and_error(sums[0], n_samples);
  auto [m1, e1] = mean_and_error(sums[1], n_samples);
  auto [m2, e2] = mean_and_error(sums[2], n_samples);
  rep.on_section = {m0 / vol, e0 / vol, n_samples};
  rep.on_translate = {m1 / vol, e1 / vol, n_samples};
  rep.difference = m2 / vol;
  rep.difference_stderr = e2 / vol;
  rep.z = z_score(m2, e2);
  rep.exact = box_intersect(B, scheme.window().box).volume() / scheme.covolume();
  return rep;
}

namespace {

// Internal parts gamma* of lattice vectors with p(gamma) in a fixed region,
// with box counting.
class InternalCloud {
 public:
  InternalCloud(const Scheme& scheme, const Box& physical, const Box& internal) : m_(scheme.m()) {
    scheme.enumerator().for_each(box_product(physical, internal),
                                 [&](std::span<const std::int64_t>, std::span<const double> y) {
                                   if (!physical.contains(y.first(scheme.d()))) return;
                                   pts_.insert(pts_.end(), y.begin() + static_cast<long>(scheme.d()), y.end());
                                 });
    if (m_ == 1) std::sort(pts_.begin(), pts_.end());
  }

  std::size_t count(const Box& b) const {
    if (b.empty()) return 0;
    if (m_ == 1) {
      return static_cast<std::size_t>(std::lower_bound(pts_.begin(), pts_.end(), b.hi()[0]) -
                                      std::lower_bound(pts_.begin(), pts_.end(), b.lo()[0]));
    }
    std::size_t c = 0;
    for (std::size_t i = 0; i < pts_.size(); i += m_) {
      if (b.contains(std::span<const double>(pts_).subspan(i, m_))) ++c;
    }
    return c;
  }

 private:
  std::size_t m_;
  Vec pts_;
};

std::size_t power_of_two_below(double x) {
  std::size_t p = 1;
  while (static_cast<double>(2 * p) <= x) p *= 2;
  return p;
}

// Calls visit(point) for the grid lo + (i + offset) * step, i in [0, counts).
template <class Visit>
void grid(const Vec& lo, const Vec& step, const std::vector<std::size_t>& counts, double offset, Visit&& visit) {
  const std::size_t n = lo.size();
  std::vector<std::size_t> idx(n, 0);
  Vec p(n);
  if (std::any_of(counts.begin(), counts.end(), [](std::size_t c) { return c == 0; })) return;
  while (true) {
    for (std::size_t i = 0; i < n; ++i) p[i] = lo[i] + (static_cast<double>(idx[i]) + offset) * step[i];
    visit(p);
    std::size_t k = 0;
    while (k < n && ++idx[k] == counts[k]) idx[k++] = 0;
    if (k == n) return;
  }
}

}  // namespace

StagesReport stages_check(const Scheme& scheme, std::span<const TransversalPoint> zs,
                          std::span<const Box> A, double t, std::size_t n_nodes) {
  const std::size_t r = A.size(), d = scheme.d(), m = scheme.m();
  const Box& W = scheme.window().box;
  if (r == 0) throw Error(ErrorCode::InvalidArgument, "stages_check needs at least one factor");
  if (!zs.empty() && zs.size() != r) throw Error(ErrorCode::DimensionMismatch, "zs and A differ in length");
  if (!(t > 0.0) || n_nodes == 0) throw Error(ErrorCode::InvalidArgument, "t and n_nodes must be positive");
  for (const Box& a : A) {
    if (a.dim() != m) throw Error(ErrorCode::DimensionMismatch, "parameter box");
    if (!W.contains(a)) throw Error(ErrorCode::InvalidArgument, "parameter boxes must lie in the window");
  }

  const Box Gt = Box::centered(d, t);
  const double vol_g = Gt.volume();
  Box reach = box_difference(A[0], W);
  for (const Box& a : A) reach = box_hull(reach, box_difference(a, W));
  const InternalCloud cloud(scheme, Gt, reach.expanded(1e-9));

  StagesReport rep;
  rep.exact = 1.0;
  for (const Box& a : A) rep.exact *= a.volume() / scheme.covolume();

  // direct: product of one-factor densities, each averaged over parameters in W
  {
    const std::size_t per_axis = power_of_two_below(std::pow(static_cast<double>(n_nodes), 1.0 / static_cast<double>(m)));
    Vec step(m);
    for (std::size_t i = 0; i < m; ++i) step[i] = W.side(i) / static_cast<double>(per_axis);
    const std::vector<std::size_t> counts(m, per_axis);
    rep.direct = 1.0;
    for (const Box& a : A) {
      double total = 0.0;
      std::size_t nodes = 0;
      grid(W.lo(), step, counts, 0.5, [&](const Vec& w) {
        total += static_cast<double>(cloud.count(a.translated(negate(w))));
        ++nodes;
      });
      rep.direct *= total / static_cast<double>(nodes) / vol_g;
      rep.nodes_direct += nodes;
    }
  }

  // staged: average over w_1 of the diagonal-orbit density of the
  // intersection, integrated over the relative parameters delta_k = w_k - w_1
  {
    const std::size_t per_axis = power_of_two_below(
        std::pow(static_cast<double>(n_nodes), 1.0 / static_cast<double>(m * r)));
    Vec step(m);
    for (std::size_t i = 0; i < m; ++i) step[i] = W.side(i) / static_cast<double>(per_axis);
    // relative parameters for k >= 2 stacked into one grid
    Vec dlo, dstep;
    std::vector<std::size_t> dcounts;
    for (std::size_t k = 1; k < r; ++k) {
      const Box delta = box_difference(A[k], A[0]);
      for (std::size_t i = 0; i < m; ++i) {
        dlo.push_back(delta.lo()[i]);
        dstep.push_back(step[i]);
        dcounts.push_back(static_cast<std::size_t>(std::ceil(delta.side(i) / step[i] - 1e-9)));
      }
    }
    double cell = 1.0;
    for (double s : dstep) cell *= s;
    double total = 0.0;
    std::size_t w_nodes = 0;
    grid(W.lo(), step, std::vector<std::size_t>(m, per_axis), 0.5, [&](const Vec& w1) {
      const Box base = A[0].translated(negate(w1));
      double inner = 0.0;
      auto add = [&](const Vec& delta) {
        Box I = base;
        for (std::size_t k = 1; k < r && !I.empty(); ++k) {
          Vec shift(m);
          for (std::size_t i = 0; i < m; ++i) shift[i] = -(w1[i] + delta[(k - 1) * m + i]);
          I = box_intersect(I, A[k].translated(shift));
        }
        inner += static_cast<double>(cloud.count(I));
        ++rep.nodes_staged;
      };
      if (r == 1) {
        add(Vec{});
      } else {
        grid(dlo, dstep, dcounts, 0.0, add);
      }
      total += inner * (r == 1 ? 1.0 : cell);
      ++w_nodes;
    });
    rep.staged = total / static_cast<double>(w_nodes) / vol_g / std::pow(scheme.covolume(), static_cast<double>(r - 1));
  }

  if (!zs.empty()) {
    Box I = W.translated(negate(zs[0].w()));
    for (std::size_t k = 0; k < r; ++k) I = box_intersect(I, A[k].translated(negate(zs[k].w())));
    rep.orbit_density = static_cast<double>(cloud.count(I)) / vol_g;
    rep.orbit_predicted = I.volume() / scheme.covolume();
  }
  rep.relative_deviation =
      rep.direct != 0.0 ? std::abs(rep.staged - rep.direct) / std::abs(rep.direct) : std::abs(rep.staged);
  return rep;
}

}  // namespace meyerlab
