#include "meyerlab/ergodic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "meyerlab/parallel.hpp"

namespace meyerlab {

void ConvenientSequence::validate() const {
  if (dim == 0) throw Error(ErrorCode::InvalidArgument, "dimension must be positive");
  if (t_grid.empty()) throw Error(ErrorCode::InvalidArgument, "t_grid is empty");
  if (!(t_grid.front() > 1.0)) throw Error(ErrorCode::InvalidArgument, "t_grid must start above 1");
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > t_grid[i - 1])) throw Error(ErrorCode::InvalidArgument, "t_grid must be strictly increasing");
  }
}

ConvenientSequence ConvenientSequence::linear(std::size_t dim, double t_min, double t_max, std::size_t count) {
  ConvenientSequence s;
  s.dim = dim;
  if (count == 1) {
    s.t_grid = {t_max};
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      s.t_grid.push_back(t_min + (t_max - t_min) * static_cast<double>(i) / static_cast<double>(count - 1));
    }
    s.t_grid.back() = t_max;
  }
  s.validate();
  return s;
}

ConvenientReport verify_convenient(const ConvenientSequence& seq, int n_max) {
  if (seq.t_grid.empty() || n_max < 1) throw Error(ErrorCode::InvalidArgument, "empty grid or n_max < 1");
  const double d = static_cast<double>(seq.dim);
  const double t_min = *std::min_element(seq.t_grid.begin(), seq.t_grid.end());
  ConvenientReport rep;
  for (int n = 1; n <= n_max; ++n) {
    ConvenientRow row;
    row.n = n;
    row.delta = 1.0 / n;
    const double x = row.delta / t_min;
    row.epsilon_bound = d * x * std::pow(1.0 + x, d - 1.0);
    for (double t : seq.t_grid) {
      if (!(t > row.delta)) {
        row.degenerate = true;
        row.containment = false;
        continue;
      }
      const Box eroded = box_erode(seq.set(t), row.delta);
      const Box inner = seq.set(t - row.delta);
      if (!eroded.contains(inner)) row.containment = false;
      row.epsilon = std::max({row.epsilon, std::abs(std::pow((t + row.delta) / t, d) - 1.0),
                              std::abs(std::pow((t - row.delta) / t, d) - 1.0)});
    }
    if (!row.containment || row.epsilon > row.epsilon_bound * (1.0 + 1e-12)) rep.pass = false;
    rep.rows.push_back(row);
  }
  return rep;
}

namespace {

double tail_minimum(const std::vector<DensityRow>& rows) {
  const std::size_t q = (rows.size() + 3) / 4;
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = rows.size() - q; i < rows.size(); ++i) m = std::min(m, rows[i].ratio);
  return m;
}

// Smallest t with p in [-t, t)^d.
double box_key(std::span<const double> p) {
  double lo = -std::numeric_limits<double>::infinity(), hi = lo;
  for (double v : p) {
    lo = std::max(lo, -v);
    hi = std::max(hi, v);
  }
  return std::max(lo, std::nextafter(hi, std::numeric_limits<double>::infinity()));
}

}  // namespace

DensityTrace lower_density(const Patch& patch, const ConvenientSequence& seq) {
  seq.validate();
  if (patch.dim() != seq.dim) throw Error(ErrorCode::DimensionMismatch, "patch and averaging sets");
  if (!patch.extent().contains(seq.set(seq.t_max()))) {
    throw Error(ErrorCode::ExtentTooSmall, "patch does not cover the largest averaging box");
  }
  std::vector<double> keys(patch.size());
  for (std::size_t i = 0; i < patch.size(); ++i) keys[i] = box_key(patch.point(i));
  std::sort(keys.begin(), keys.end());
  DensityTrace trace;
  for (double t : seq.t_grid) {
    DensityRow row;
    row.t = t;
    row.count = static_cast<double>(std::upper_bound(keys.begin(), keys.end(), t) - keys.begin());
    row.volume = seq.set(t).volume();
    row.ratio = row.count / row.volume;
    trace.rows.push_back(row);
  }
  trace.estimate = tail_minimum(trace.rows);
  return trace;
}

DensityTrace lower_density(const PatchSource& source, const ConvenientSequence& seq) {
  seq.validate();
  return lower_density(source(seq.set(seq.t_max())), seq);
}

AverageTrace transversal_average(const Scheme& scheme, const TransversalPoint& z,
                                 const std::function<double(std::span<const double>)>& f,
                                 const ConvenientSequence& seq) {
  seq.validate();
  const std::size_t d = scheme.d(), m = scheme.m();
  if (seq.dim != d) throw Error(ErrorCode::DimensionMismatch, "averaging sets");
  const Box& W = scheme.window().box;
  Vec minus_w(z.w());
  for (double& v : minus_w) v = -v;
  std::vector<std::pair<double, double>> terms;  // (key, f value)
  Vec w(m);
  scheme.enumerator().for_each(box_product(seq.set(seq.t_max()), W.translated(minus_w).expanded(1e-9)),
                               [&](std::span<const std::int64_t>, std::span<const double> y) {
                                 for (std::size_t i = 0; i < m; ++i) w[i] = z.w()[i] + y[d + i];
                                 if (!W.contains(w)) return;
                                 terms.emplace_back(box_key(y.first(d)), f(w));
                               });
  std::sort(terms.begin(), terms.end());
  AverageTrace trace;
  std::size_t i = 0;
  double sum = 0.0;
  for (double t : seq.t_grid) {
    while (i < terms.size() && terms[i].first <= t) sum += terms[i++].second;
    DensityRow row;
    row.t = t;
    row.count = sum;
    row.volume = seq.set(t).volume();
    row.ratio = sum / row.volume;
    trace.rows.push_back(row);
  }
  trace.estimate = trace.rows.back().ratio;

  // midpoint rule over W
  const auto per_axis = static_cast<std::size_t>(std::max(2.0, std::floor(std::pow(65536.0, 1.0 / static_cast<double>(m)))));
  std::vector<std::size_t> idx(m, 0);
  double integral = 0.0;
  while (true) {
    for (std::size_t k = 0; k < m; ++k) {
      w[k] = W.lo()[k] + (static_cast<double>(idx[k]) + 0.5) * W.side(k) / static_cast<double>(per_axis);
    }
    integral += f(w);
    std::size_t k = 0;
    while (k < m && ++idx[k] == per_axis) idx[k++] = 0;
    if (k == m) break;
  }
  trace.predicted = integral * W.volume() / std::pow(static_cast<double>(per_axis), static_cast<double>(m)) /
                    scheme.covolume();
  return trace;
}

std::vector<RecurrenceHit> recurrence_search(const Scheme& scheme, std::span<const TransversalPoint> zs,
                                             double eps, double min_norm, double t_max,
                                             const RecurrenceOptions& options) {
  const std::size_t d = scheme.d(), m = scheme.m();
  if (zs.empty()) throw Error(ErrorCode::InvalidArgument, "recurrence_search needs at least one point");
  if (!(eps > 0.0) || !(min_norm >= 0.0) || !(min_norm < t_max)) {
    throw Error(ErrorCode::InvalidArgument, "need eps > 0 and 0 <= min_norm < t_max");
  }
  for (const auto& z : zs) {
    if (z.w().size() != m) throw Error(ErrorCode::DimensionMismatch, "transversal point");
    if (!(z.margin() > eps)) throw Error(ErrorCode::InvalidArgument, "every point needs margin > eps");
  }
  const Box& W = scheme.window().box;
  Box internal = Box::centered(m, eps);
  for (const auto& z : zs) {
    Vec shift(z.w());
    for (double& v : shift) v = -v;
    internal = box_intersect(internal, W.translated(shift));
  }
  const Box inner = Box::centered(d, min_norm);
  std::vector<RecurrenceHit> hits;
  Vec w(m);
  scheme.enumerator().for_each(
      box_product(Box::centered(d, t_max), internal.expanded(1e-12)),
      [&](std::span<const std::int64_t> c, std::span<const double> y) {
        const auto p = y.first(d);
        const auto q = y.subspan(d);
        if (inner.contains(p) || !Box::centered(d, t_max).contains(p)) return;
        const double qn = norm(q);
        if (!(qn < eps)) return;
        for (const auto& z : zs) {
          for (std::size_t i = 0; i < m; ++i) w[i] = z.w()[i] + q[i];
          if (!W.contains(w)) return;
        }
        hits.push_back({Vec(p.begin(), p.end()), IVec(c.begin(), c.end()), qn, {}});
      });
  if (hits.empty()) {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "no common return time: internal box volume %.6g, expected count %.6g; raise t_max or eps",
                  internal.volume(), Box::centered(d, t_max).volume() * internal.volume() / scheme.covolume());
    throw Error(ErrorCode::NoHits, buf);
  }
  std::vector<double> norms(hits.size());
  for (std::size_t i = 0; i < hits.size(); ++i) norms[i] = norm(hits[i].g);
  std::vector<std::size_t> order(hits.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (norms[a] != norms[b]) return norms[a] < norms[b];
    return hits[a].coeffs < hits[b].coeffs;
  });
  std::vector<RecurrenceHit> sorted;
  const std::size_t keep = options.max_hits == 0 ? hits.size() : std::min(options.max_hits, hits.size());
  for (std::size_t i = 0; i < keep; ++i) sorted.push_back(std::move(hits[order[i]]));

  // exact membership and the patch-distance diagnostic
  const double R = options.diagnostic_radius;
  const Box around = Box::centered(d, R + 1.0);
  std::vector<Patch> bases;
  for (const auto& z : zs) bases.push_back(model_set(scheme, z, around));
  for (auto& hit : sorted) {
    Vec back(hit.g);
    for (double& v : back) v = -v;
    for (std::size_t k = 0; k < zs.size(); ++k) {
      const Patch near = model_set(scheme, zs[k], around.translated(hit.g));
      bool member = false;
      for (std::size_t i = 0; i < near.size() && !member; ++i) {
        member = std::equal(near.coeffs(i).begin(), near.coeffs(i).end(), hit.coeffs.begin());
      }
      if (!member) throw Error(ErrorCode::InvalidArgument, "recurrence hit failed the membership check");
      hit.patch_dists.push_back(patch_distance(near.translated(back), bases[k], R));
    }
  }
  return sorted;
}

std::vector<IntersectionRow> intersection_density_experiment(const Scheme& scheme, std::size_t r,
                                                             std::size_t trials,
                                                             const ConvenientSequence& seq,
                                                             std::uint64_t seed, double eta) {
  if (r == 0 || trials == 0 || !(eta > 0.0)) throw Error(ErrorCode::InvalidArgument, "need r, trials, eta > 0");
  seq.validate();
  const Box G = seq.set(seq.t_max());
  std::vector<IntersectionRow> rows(trials);
  parallel_for(trials, [&](std::size_t trial) {
    Rng rng = make_rng(seed, trial);
    std::vector<TransversalPoint> zs;
    for (std::size_t k = 0; k < r; ++k) zs.push_back(sample_transversal(scheme, rng, eta));
    std::vector<Patch> patches;
    for (const auto& z : zs) patches.push_back(model_set(scheme, z, G));
    const Patch common = return_time_set(patches, seq.t_max());
    IntersectionRow& row = rows[trial];
    row.trial = trial;
    row.predicted = predicted_intersection_density(scheme, zs);
    row.empirical = lower_density(common, seq).estimate;
    row.rel_err = std::abs(row.empirical - row.predicted) / row.predicted;
  });
  return rows;
}

std::vector<PoincareTrial> transverse_poincare_experiment(const Scheme& scheme, std::size_t trials,
                                                          std::span<const double> eps_schedule,
                                                          std::uint64_t seed, double eta,
                                                          double t_max) {
  for (std::size_t i = 1; i < eps_schedule.size(); ++i) {
    if (!(eps_schedule[i] < eps_schedule[i - 1])) throw Error(ErrorCode::InvalidArgument, "eps schedule must decrease");
  }
  if (!eps_schedule.empty() && !(eps_schedule.front() < eta)) {
    throw Error(ErrorCode::InvalidArgument, "eps schedule must stay below the sampling margin");
  }
  std::vector<PoincareTrial> out(trials);
  parallel_for(trials, [&](std::size_t trial) {
    Rng rng = make_rng(seed, trial);
    const TransversalPoint z = sample_transversal(scheme, rng, eta);
    PoincareTrial& res = out[trial];
    res.trial = trial;
    res.w = z.w();
    res.complete = true;
    double prev = 0.0;
    const std::vector<TransversalPoint> zs{z};
    for (std::size_t k = 0; k < eps_schedule.size() && res.complete; ++k) {
      const double floor_norm = prev + 1.0;
      std::optional<RecurrenceHit> found;
      for (double window = std::max(8.0, 2.0 * floor_norm); !found; window *= 2.0) {
        const double span = std::min(window, t_max);
        if (floor_norm >= span) break;
        try {
          for (auto& h : recurrence_search(scheme, zs, eps_schedule[k], floor_norm, span)) {
            if (norm(h.g) >= floor_norm) {
              found = std::move(h);
              break;
            }
          }
        } catch (const Error& e) {
          if (e.code() != ErrorCode::NoHits) throw;
        }
        if (span >= t_max) break;
      }
      if (!found) {
        res.complete = false;
        break;
      }
      StaircaseStep step;
      step.k = k + 1;
      step.eps = eps_schedule[k];
      step.g_norm = norm(found->g);
      step.internal_norm = found->internal_norm;
      step.patch_dist_max = *std::max_element(found->patch_dists.begin(), found->patch_dists.end());
      step.coeffs = found->coeffs;
      res.steps.push_back(step);
      prev = step.g_norm;
    }
  });
  return out;
}

}  // namespace meyerlab
