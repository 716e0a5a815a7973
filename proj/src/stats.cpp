#include "meyerlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "meyerlab/error.hpp"

namespace meyerlab {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

KsResult ks_test_normal(std::span<const double> samples) {
  if (samples.empty()) throw Error(ErrorCode::InvalidArgument, "KS test needs samples");
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double D = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double F = normal_cdf(s[i]);
    D = std::max({D, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
  }
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * D;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    p += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return {D, std::clamp(p, 0.0, 1.0)};
}

}  // namespace meyerlab
