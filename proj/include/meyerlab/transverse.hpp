#pragma once

// Periodization over the canonical transversal and Monte-Carlo checks of the
// transverse measure.
//
// For a hull point x = (u, w) the return times are Y_x = Q_w - u, and the
// return time g = p(gamma) - u carries x to the transversal point with
// parameter w + gamma*. Hence
//   Tf(x) = sum over gamma with w + gamma* in W of f(u - p(gamma), w + gamma*).

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "meyerlab/cutproject.hpp"

namespace meyerlab {

struct TestFn {
  using Evaluator = std::function<double(std::span<const double> g, std::span<const double> w)>;

  Box support_g;
  Box support_w;
  double bound = 1.0;
  Evaluator eval;
  /// Set for indicators of A x B; enables the exact right-hand side.
  std::optional<std::pair<Box, Box>> product;

  static TestFn indicator(Box A, Box B);
};

TestFn operator+(const TestFn& a, const TestFn& b);
TestFn scaled(const TestFn& f, double c);
/// f_g(h, w) = f(g + h, w).
TestFn shifted(const TestFn& f, std::span<const double> g);

double periodize(const Scheme& scheme, const TestFn& f, const HullPoint& x);

/// Number of return times g of x with -g in K.
std::size_t return_count(const Scheme& scheme, const HullPoint& x, const Box& K);

/// g.x for the translation action (the patch moves to Q_x - g).
HullPoint translate(const HullPoint& x, std::span<const double> g);

/// Throws InjectivityViolated unless V x {transversal points over B} embeds
/// in the hull, i.e. no nonzero gamma has p(gamma) in V - V and gamma* in B - B.
void check_injective(const Scheme& scheme, const Box& V, const Box& B);

struct IdentityReport {
  double lhs = 0.0;
  double std_error = 0.0;
  double rhs = 0.0;
  double z = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  bool rhs_exact = true;
};

/// Mean of Tf over hull samples against (m x nu)(f).
IdentityReport verify_transverse_identity(const Scheme& scheme, const TestFn& f,
                                          std::size_t n_samples, std::uint64_t seed);

struct MeasureEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

/// mu(V.B) / vol(V) from hull samples.
MeasureEstimate estimate_transverse_measure(const Scheme& scheme, const Box& B, const Box& V,
                                            std::size_t n_samples, std::uint64_t seed);

struct SectionReport {
  MeasureEstimate on_section;
  MeasureEstimate on_translate;
  double difference = 0.0;
  double difference_stderr = 0.0;
  double z = 0.0;
  double exact = 0.0;
};

/// Estimates nu(B) on the transversal and on its translate g.T with the same
/// hull samples. V defaults to a small centred box that passes the injectivity check.
SectionReport change_of_section_check(const Scheme& scheme, std::span<const double> g,
                                      const Box& B, std::size_t n_samples, std::uint64_t seed,
                                      std::optional<Box> V = std::nullopt);

struct StagesReport {
  double direct = 0.0;
  double staged = 0.0;
  double relative_deviation = 0.0;
  double exact = 0.0;
  /// Density along the single orbit through zs, and its window prediction.
  double orbit_density = 0.0;
  double orbit_predicted = 0.0;
  std::size_t nodes_direct = 0;
  std::size_t nodes_staged = 0;
};

/// Transverse measure of A = A_1 x ... x A_r for the r-fold product, computed
/// as a product of one-factor densities and in stages through the
/// intersection space. Both paths are deterministic quadratures over the
/// window parameters with about n_nodes nodes each; densities are taken
/// over [-t, t)^d.
StagesReport stages_check(const Scheme& scheme, std::span<const TransversalPoint> zs,
                          std::span<const Box> A, double t, std::size_t n_nodes);

}  // namespace meyerlab
