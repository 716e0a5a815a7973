#pragma once

#include <span>

namespace meyerlab {

double normal_cdf(double x);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// One-sample Kolmogorov-Smirnov test against the standard normal, with the
/// asymptotic Kolmogorov distribution (Stephens' small-sample correction).
KsResult ks_test_normal(std::span<const double> samples);

}  // namespace meyerlab
