#pragma once

// Ergodic averages along centred boxes and recurrence of the transversal
// action.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "meyerlab/cutproject.hpp"

namespace meyerlab {

/// Boxes G_t = [-t, t)^dim over an increasing grid of t, with neighbourhoods
/// V_n = (-1/n, 1/n)^dim.
struct ConvenientSequence {
  std::size_t dim = 1;
  std::vector<double> t_grid;

  /// Throws InvalidArgument unless t_grid is strictly increasing with min > 1.
  void validate() const;
  Box set(double t) const { return Box::centered(dim, t); }
  double t_max() const { return t_grid.back(); }

  /// count values evenly spaced in [t_min, t_max].
  static ConvenientSequence linear(std::size_t dim, double t_min, double t_max, std::size_t count);
};

struct ConvenientRow {
  int n = 0;
  double delta = 0.0;
  double epsilon = 0.0;
  double epsilon_bound = 0.0;
  bool containment = true;
  bool degenerate = false;
};

struct ConvenientReport {
  std::vector<ConvenientRow> rows;
  bool pass = true;
};

/// Checks G_{t - 1/n} inside the erosion of G_t by V_n for every t and
/// n <= n_max, and measures eps_n = sup_t |((t +- 1/n) / t)^d - 1| against
/// d x (1 + x)^(d-1), x = 1 / (n t_min). The pointwise ergodic theorem for
/// boxes is assumed, not checked.
ConvenientReport verify_convenient(const ConvenientSequence& seq, int n_max);

struct DensityRow {
  double t = 0.0;
  double count = 0.0;
  double volume = 0.0;
  double ratio = 0.0;
};

struct DensityTrace {
  std::vector<DensityRow> rows;
  /// Minimum ratio over the last quarter of the grid.
  double estimate = 0.0;
};

using PatchSource = std::function<Patch(const Box&)>;

/// |P meet G_t| / vol(G_t) along the grid. The source is queried once, on
/// the largest box.
DensityTrace lower_density(const PatchSource& source, const ConvenientSequence& seq);
DensityTrace lower_density(const Patch& patch, const ConvenientSequence& seq);

struct AverageTrace {
  std::vector<DensityRow> rows;  // count holds the sum of f, ratio the average
  double estimate = 0.0;         // value at the largest t
  double predicted = 0.0;        // (1 / covol) * integral of f over W
};

/// Ergodic average of f over the return times of z in G_t:
/// (1 / vol G_t) * sum over gamma with p(gamma) in G_t, z.w + gamma* in W of f(z.w + gamma*).
AverageTrace transversal_average(const Scheme& scheme, const TransversalPoint& z,
                                 const std::function<double(std::span<const double>)>& f,
                                 const ConvenientSequence& seq);

struct RecurrenceHit {
  Vec g;
  IVec coeffs;
  double internal_norm = 0.0;
  std::vector<double> patch_dists;
};

struct RecurrenceOptions {
  /// Radius for the patch-distance diagnostic.
  double diagnostic_radius = 10.0;
  /// Keep only the first hits in the output order (0 keeps all).
  std::size_t max_hits = 0;
};

/// Common return times p(gamma) of z_1..z_r with |gamma*| < eps and
/// p(gamma) in [-t_max, t_max)^d outside [-min_norm, min_norm)^d, sorted by
/// |p(gamma)| then by coefficients. Throws NoHits if there are none.
std::vector<RecurrenceHit> recurrence_search(const Scheme& scheme, std::span<const TransversalPoint> zs,
                                             double eps, double min_norm, double t_max,
                                             const RecurrenceOptions& options = {});

struct IntersectionRow {
  std::size_t trial = 0;
  double predicted = 0.0;
  double empirical = 0.0;
  double rel_err = 0.0;
};

/// Per trial: r transversal points sampled with margin eta, the predicted
/// intersection density and the lower density of the common return times.
std::vector<IntersectionRow> intersection_density_experiment(const Scheme& scheme, std::size_t r,
                                                             std::size_t trials,
                                                             const ConvenientSequence& seq,
                                                             std::uint64_t seed, double eta);

struct StaircaseStep {
  std::size_t k = 0;
  double eps = 0.0;
  double g_norm = 0.0;
  double internal_norm = 0.0;
  double patch_dist_max = 0.0;
  IVec coeffs;
};

struct PoincareTrial {
  std::size_t trial = 0;
  Vec w;
  std::vector<StaircaseStep> steps;
  bool complete = false;
};

/// For each sampled z and each eps of the decreasing schedule, the nearest
/// return time with |g| at least one more than the previous step and
/// internal part below eps. The search box doubles up to t_max.
std::vector<PoincareTrial> transverse_poincare_experiment(const Scheme& scheme, std::size_t trials,
                                                          std::span<const double> eps_schedule,
                                                          std::uint64_t seed, double eta,
                                                          double t_max);

}  // namespace meyerlab
