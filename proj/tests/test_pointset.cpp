#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "meyerlab/pointset.hpp"
#include "support.hpp"

using namespace meyerlab;
using namespace meyerlab::testing;

namespace {

Patch fib_patch(double half) {
  const Scheme fib = fibonacci();
  return model_set(fib, TransversalPoint::make(fib, {0.0}), Box::centered(1, half));
}

std::vector<double> sorted_coords(const Patch& p) {
  std::vector<double> xs;
  for (std::size_t i = 0; i < p.size(); ++i) xs.push_back(p.point(i)[0]);
  return xs;
}

// adjacent spacings of a one-dimensional patch
std::pair<double, double> gap_range(const Patch& p) {
  const auto xs = sorted_coords(p);
  double lo = kInfinite, hi = 0.0;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    lo = std::min(lo, xs[i] - xs[i - 1]);
    hi = std::max(hi, xs[i] - xs[i - 1]);
  }
  return {lo, hi};
}

std::set<IVec> coeff_set(const Patch& p) {
  std::set<IVec> out;
  for (std::size_t i = 0; i < p.size(); ++i) out.emplace(p.coeffs(i).begin(), p.coeffs(i).end());
  return out;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("patch construction sorts, dedups and checks the extent") {
  const Patch p = Patch::from_points(1, {{3.0}, {1.0}, {1.0}, {2.0}}, Box({0.0}, {4.0}));
  CHECK(sorted_coords(p) == std::vector<double>{1.0, 2.0, 3.0});
  CHECK(code_of([] { Patch::from_points(1, {{5.0}}, Box({0.0}, {4.0})); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("min_gap") {
  CHECK(min_gap(integers(-10, 10)) == doctest::Approx(1.0));
  CHECK(min_gap(Patch::from_points(1, {{0.0}}, Box::centered(1, 1))) == kInfinite);
  const Patch fib = fib_patch(100);
  CHECK(min_gap(fib) == doctest::Approx(gap_range(fib).first).epsilon(1e-12));
  CHECK(min_gap(fib) > 0.0);

  // two-dimensional: a perturbed grid with one planted near pair
  std::vector<Vec> pts;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) pts.push_back({i * 1.0, j * 1.0});
  pts.push_back({4.3, 4.4});
  const Patch grid = Patch::from_points(2, pts, Box({0, 0}, {10, 10}));
  CHECK(min_gap(grid) == doctest::Approx(std::hypot(0.3, 0.4)));
}

TEST_CASE("covering_radius") {
  CHECK(covering_radius(integers(-20, 20), Box({-10.0}, {10.0}), 0.01) == doctest::Approx(0.5).epsilon(0.04));
  CHECK(covering_radius(integers(-20, 20, 2.0), Box({-10.0}, {10.0}), 0.01) ==
        doctest::Approx(1.0).epsilon(0.02));
  const Patch fib = fib_patch(120);
  const double largest = gap_range(fib).second;
  CHECK(covering_radius(fib, Box::centered(1, 100), 0.01) <= largest / 2 + 0.01);
  CHECK(code_of([] {
          covering_radius(Patch::from_points(1, {}, Box::centered(1, 5)), Box::centered(1, 1), 0.1);
        }) == ErrorCode::EmptyPatch);
}

TEST_CASE("difference_set") {
  const Patch d = difference_set(integers(-20, 20), 10);
  CHECK(sorted_coords(d) == sorted_coords(integers(-10, 10)));
  CHECK(difference_set(Patch::from_points(1, {{0.0}}, Box::centered(1, 1)), 1.0).size() == 1);
  CHECK(code_of([] { difference_set(integers(-20, 20), 30); }) == ErrorCode::RadiusExceedsValidity);

  const Patch lambda = difference_set(fib_patch(100), 50);
  const auto xs = sorted_coords(lambda);
  CHECK(std::binary_search(xs.begin(), xs.end(), 0.0));
  for (double x : xs) {
    if (-x >= 50.0) continue;  // -x falls outside the half-open box
    const auto it = std::lower_bound(xs.begin(), xs.end(), -x - 1e-9);
    REQUIRE(it != xs.end());
    CHECK(*it == doctest::Approx(-x).epsilon(1e-12));
  }
}

TEST_CASE("iterated_sumset") {
  CHECK(sorted_coords(iterated_sumset(integers(-20, 20), 3, 5)) == sorted_coords(integers(-5, 5)));
  CHECK(iterated_sumset(Patch::from_points(1, {{0.0}}, Box::centered(1, 10)), 4, 2).size() == 1);
  CHECK(code_of([] { iterated_sumset(integers(-20, 20), 3, 10); }) == ErrorCode::RadiusExceedsValidity);

  const Patch lambda = difference_set(fib_patch(200), 100);
  double previous = kInfinite;
  for (int k = 1; k <= 3; ++k) {
    const double gap = min_gap(iterated_sumset(lambda, k, 10));
    CHECK(gap > 0.0);
    CHECK(gap <= previous);
    previous = gap;
  }
}

TEST_CASE("accumulation_margin") {
  CHECK(accumulation_margin(integers(-5, 5), integers(-5, 5), 3) == doctest::Approx(1.0));
  const Patch zero = Patch::from_points(1, {{0.0}}, Box::centered(1, 5));
  CHECK(accumulation_margin(zero, zero, 3) == kInfinite);
  const Patch lambda3 = iterated_sumset(difference_set(fib_patch(200), 100), 3, 20);
  CHECK(accumulation_margin(lambda3, lambda3, 10) > 0.0);
}

TEST_CASE("approx_subgroup_witness") {
  const WitnessReport z = approx_subgroup_witness(integers(-50, 50), 20);
  CHECK(z.success);
  CHECK(z.F == std::vector<Vec>{{0.0}});
  const WitnessReport zero = approx_subgroup_witness(Patch::from_points(1, {{0.0}}, Box::centered(1, 5)), 2);
  CHECK(zero.success);
  CHECK(zero.F == std::vector<Vec>{{0.0}});

  const Patch lambda = difference_set(fib_patch(200), 200);
  const WitnessReport r25 = approx_subgroup_witness(lambda, 25);
  const WitnessReport r50 = approx_subgroup_witness(lambda, 50);
  REQUIRE(r25.success);
  REQUIRE(r50.success);
  CHECK(r25.F.size() == r50.F.size());
  CHECK(r50.F.size() < 10);

  // the cover really holds: every s in (L + L) has some f with s - f in L
  const auto lam = sorted_coords(lambda);
  const Patch sums = sumset(lambda, lambda, 50);
  for (std::size_t i = 0; i < sums.size(); ++i) {
    bool hit = false;
    for (const Vec& f : r50.F) {
      const double t = sums.point(i)[0] - f[0];
      const auto it = std::lower_bound(lam.begin(), lam.end(), t - 1e-9);
      hit = hit || (it != lam.end() && std::abs(*it - t) < 1e-9);
    }
    CHECK(hit);
  }

  CHECK(code_of([] { approx_subgroup_witness(integers(-10, 10), 8); }) == ErrorCode::RadiusExceedsValidity);
  const Patch lopsided = Patch::from_points(1, {{0.0}, {1.0}}, Box::centered(1, 10));
  CHECK(code_of([&] { approx_subgroup_witness(lopsided, 2); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("patch_distance") {
  const Patch z = integers(-20, 20);
  CHECK(patch_distance(z, z, 10) == 0.0);
  const Patch fib = fib_patch(30);
  CHECK(patch_distance(fib, fib, 10) == 0.0);

  const Patch shifted = integers(-20, 20, 1.0, 0.3);
  CHECK(patch_distance(z, shifted, 10) == doctest::Approx(0.3).epsilon(kDistanceResolution / 0.3));
  CHECK(patch_distance(z, shifted, 10) >= 0.3);

  // brute-force sweep: the least eps on a 1e-4 grid for which the matching
  // condition holds, evaluated directly on the point lists
  const Patch even = integers(-20, 20, 2.0);
  auto condition = [](const Patch& a, const Patch& b, double R, double eps) {
    const double r = std::min(R, 1.0 / eps);
    for (int pass = 0; pass < 2; ++pass) {
      const Patch& from = pass ? b : a;
      const Patch& to = pass ? a : b;
      for (std::size_t i = 0; i < from.size(); ++i) {
        const double x = from.point(i)[0];
        if (!(x >= -r && x < r)) continue;
        double best = kInfinite;
        for (std::size_t j = 0; j < to.size(); ++j) best = std::min(best, std::abs(to.point(j)[0] - x));
        if (best > eps) return false;
      }
    }
    return true;
  };
  double oracle = 1.0;
  for (int k = 1; k <= 10000; ++k) {
    if (condition(z, even, 10, k * 1e-4)) {
      oracle = k * 1e-4;
      break;
    }
  }
  CHECK(oracle == doctest::Approx(1.0));
  CHECK(patch_distance(z, even, 10) == doctest::Approx(oracle).epsilon(2e-4));
  CHECK(code_of([&] { patch_distance(z, even, 25); }) == ErrorCode::ExtentTooSmall);
}

TEST_CASE("patch_distance is symmetric and satisfies the triangle inequality on translates") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  for (int trial = 0; trial < 100; ++trial) {
    const double a = u(rng), b = u(rng);
    const Patch base = fib_patch(40);
    const Patch pa = base.translated(Vec{a}).restricted(Box::centered(1, 30));
    const Patch pb = base.translated(Vec{b}).restricted(Box::centered(1, 30));
    const Patch pc = base.restricted(Box::centered(1, 30));
    const double ab = patch_distance(pa, pb, 10), ba = patch_distance(pb, pa, 10);
    CHECK(ab == ba);
    CHECK(patch_distance(pa, pc, 10) <= ab + patch_distance(pb, pc, 10) + 2 * kDistanceResolution);
  }
}

TEST_CASE("return_time_set") {
  const Scheme fib = fibonacci();
  const Box big = Box::centered(1, 200);
  const auto w1 = TransversalPoint::make(fib, {-0.4});
  const auto w2 = TransversalPoint::make(fib, {0.3});
  const auto w3 = TransversalPoint::make(fib, {0.1});
  const std::vector<Patch> qs{model_set(fib, w1, big), model_set(fib, w2, big), model_set(fib, w3, big)};

  CHECK(coeff_set(return_time_set(std::span(qs).first(1), 100)) == coeff_set(qs[0].restricted(Box::centered(1, 100))));
  const std::vector<Patch> same{qs[0], qs[0]};
  CHECK(coeff_set(return_time_set(same, 100)) == coeff_set(qs[0].restricted(Box::centered(1, 100))));

  // window oracle: Q_{w1} meet Q_{w2} is the model set of (W - w1) meet (W - w2)
  const std::vector<TransversalPoint> ws{w1, w2};
  const Scheme narrowed = fib.with_window(Window(intersection_window(fib, ws)));
  const Patch oracle = model_set_at(narrowed, Vec{0.0}, Box::centered(1, 100));
  const Patch two = return_time_set(std::span(qs).first(2), 100);
  CHECK(coeff_set(two) == coeff_set(oracle));
  CHECK(two.size() > 10);

  const Patch three = return_time_set(qs, 100);
  const auto c3 = coeff_set(three), c2 = coeff_set(two);
  CHECK(std::includes(c2.begin(), c2.end(), c3.begin(), c3.end()));

  // float matching path: untagged copies give the same points
  std::vector<Patch> plain;
  for (const Patch& q : qs) plain.push_back(Patch::from_points(1, q.points(), q.extent()));
  CHECK(return_time_set(std::span(plain).first(2), 100).size() == two.size());
}

TEST_CASE("patch CSV round trip") {
  const Patch p = fib_patch(10);
  std::stringstream ss;
  write_patch_csv(ss, p);
  CHECK(ss.str().rfind("# extent -10 10\n", 0) == 0);
  const Patch q = read_patch_csv(ss);
  REQUIRE(q.size() == p.size());
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(q.point(i)[0] == doctest::Approx(p.point(i)[0]).epsilon(1e-11));
}
