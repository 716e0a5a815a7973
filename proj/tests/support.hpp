#pragma once

#include <cmath>
#include <string>

#include "meyerlab/cutproject.hpp"
#include "meyerlab/scheme_io.hpp"

namespace meyerlab::testing {

inline const double kPhi = (1.0 + std::sqrt(5.0)) / 2.0;
inline const double kPhiPrime = (1.0 - std::sqrt(5.0)) / 2.0;

inline std::string fixture(const std::string& name) {
  return std::string(MEYERLAB_FIXTURES_DIR) + "/" + name;
}

/// Columns (1, 1) and (phi, phi'); window [-1, phi - 1).
inline Scheme fibonacci() {
  return Scheme(LatticeBasis::from_rows({{1.0, kPhi}, {1.0, kPhiPrime}}), 1, 1,
                Window(Box({-1.0}, {kPhi - 1.0})));
}

/// Z^2 with window [-0.5, 0.5): every model set is Z.
inline Scheme z2() {
  return Scheme(LatticeBasis::from_rows({{1.0, 0.0}, {0.0, 1.0}}), 1, 1,
                Window(Box({-0.5}, {0.5})));
}

inline Scheme cubic() { return load_scheme(fixture("cubic.json")); }

inline Patch integers(double lo, double hi, double step = 1.0, double offset = 0.0) {
  std::vector<Vec> pts;
  for (double x = std::ceil((lo - offset) / step) * step + offset; x < hi; x += step) pts.push_back({x});
  return Patch::from_points(1, std::move(pts), Box({lo}, {hi}));
}

}  // namespace meyerlab::testing
