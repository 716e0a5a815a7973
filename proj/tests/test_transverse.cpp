#include <cstdlib>

#include "doctest.h"
#include "meyerlab/transverse.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace meyerlab;
using namespace meyerlab::testing;

namespace {

TestFn random_indicator(Rng& rng, const Scheme& s) {
  const double a = uniform(rng, -3, 3), la = uniform(rng, 0.1, 4);
  const Box& W = s.window().box;
  const double b = uniform(rng, W.lo()[0], W.hi()[0]);
  const double lb = uniform(rng, 0.0, W.hi()[0] - b);
  return TestFn::indicator(Box({a}, {a + la}), Box({b}, {b + lb}));
}

}  // namespace

TEST_CASE("periodize of an injective indicator is the indicator of its image") {
  const Scheme fib = fibonacci();
  const Box V({-0.3}, {0.2});
  const Box B({-0.6}, {0.4});
  check_injective(fib, V, B);
  const TestFn f = TestFn::indicator(V, B);
  Rng rng = make_rng(11);
  int inside = 0;
  for (int i = 0; i < 100; ++i) {
    const HullPoint x = sample_hull(fib, rng);
    const int oracle = fib_in_image(x, V, B);
    REQUIRE(oracle <= 1);
    CHECK(periodize(fib, f, x) == static_cast<double>(oracle));
    inside += oracle;
  }
  CHECK(inside > 5);
  CHECK_THROWS_AS(check_injective(fib, Box::centered(1, 2.0), B), Error);
}

TEST_CASE("periodize simple cases") {
  const Scheme fib = fibonacci();
  // no return times in a support that avoids Q_x
  const HullPoint origin{{0.0}, {0.0}};
  CHECK(periodize(fib, TestFn::indicator(Box({-0.9}, {-0.1}), fib.window().box), origin) == 0.0);
  CHECK(periodize(fib, TestFn::indicator(Box({1.0}, {0.0}), fib.window().box), origin) == 0.0);

  // rho x 1 counts Q_x in -[0, 1)
  Rng rng = make_rng(4);
  const TestFn rho = TestFn::indicator(Box({0.0}, {1.0}), fib.window().box);
  for (int i = 0; i < 200; ++i) {
    const HullPoint x = sample_hull(fib, rng);
    const Patch p = hull_patch(fib, x, Box({-1.0}, {0.0}));
    CHECK(periodize(fib, rho, x) == static_cast<double>(p.size()));
    CHECK(return_count(fib, x, Box({0.0}, {1.0})) == p.size());
  }
}

TEST_CASE("periodize is linear and equivariant") {
  const Scheme fib = fibonacci();
  Rng rng = make_rng(5);
  for (int i = 0; i < 1000; ++i) {
    const TestFn f1 = random_indicator(rng, fib);
    const TestFn f2 = random_indicator(rng, fib);
    const HullPoint x = sample_hull(fib, rng);
    CHECK(periodize(fib, f1 + f2, x) == periodize(fib, f1, x) + periodize(fib, f2, x));
    CHECK(periodize(fib, scaled(f1, 0.5), x) == 0.5 * periodize(fib, f1, x));

    const Vec g{uniform(rng, -20, 20)};
    CHECK(periodize(fib, f1, translate(x, g)) == periodize(fib, shifted(f1, g), x));
  }
}

TEST_CASE("periodize is bounded by the return-time count") {
  const Scheme fib = fibonacci();
  const Box K({-2.0}, {3.0});
  const TestFn f = scaled(TestFn::indicator(K, fib.window().box), 2.5);
  Rng rng = make_rng(8);
  std::vector<HullPoint> xs;
  std::size_t M = 0;
  for (int i = 0; i < 500; ++i) {
    xs.push_back(sample_hull(fib, rng));
    M = std::max(M, return_count(fib, xs.back(), K));
  }
  for (const auto& x : xs) CHECK(std::abs(periodize(fib, f, x)) <= static_cast<double>(M) * f.bound);
  // points of Q are at least 1 apart, so five units hold at most five
  CHECK(M <= 5);
}

TEST_CASE("transverse identity") {
  const Scheme zz = z2();
  const auto r0 = verify_transverse_identity(zz, TestFn::indicator(Box({0.0}, {1.0}), zz.window().box), 5000, 1);
  CHECK(r0.lhs == 1.0);
  CHECK(r0.rhs == 1.0);
  CHECK(r0.z == 0.0);

  const Scheme fib = fibonacci();
  const TestFn f = TestFn::indicator(Box({0.0}, {2.0}), Box({-1.0}, {-1.0 + kPhi / 2}));
  const auto rep = verify_transverse_identity(fib, f, 20000, 3);
  CHECK(rep.rhs == doctest::Approx(2 * (kPhi / 2) / std::sqrt(5.0)));
  CHECK(std::abs(rep.z) <= 3.0);
  CHECK(rep.n == 20000);

  const auto empty = verify_transverse_identity(fib, TestFn::indicator(Box({1.0}, {1.0}), fib.window().box), 100, 3);
  CHECK(empty.lhs == 0.0);
  CHECK(empty.rhs == 0.0);

  // general f against the numerical integral
  const auto gen = verify_transverse_identity(fib, f + scaled(f, 2.0), 20000, 4);
  CHECK_FALSE(gen.rhs_exact);
  CHECK(gen.rhs == doctest::Approx(3 * rep.rhs).epsilon(1e-3));
  CHECK(std::abs(gen.z) <= 3.5);
}

TEST_CASE("sampling is independent of the worker count") {
  const Scheme fib = fibonacci();
  const TestFn f = TestFn::indicator(Box({0.0}, {2.0}), Box({-1.0}, {0.0}));
  ::setenv("MEYERLAB_THREADS", "1", 1);
  const auto a = verify_transverse_identity(fib, f, 5000, 9);
  ::setenv("MEYERLAB_THREADS", "4", 1);
  const auto b = verify_transverse_identity(fib, f, 5000, 9);
  ::unsetenv("MEYERLAB_THREADS");
  CHECK(a.lhs == b.lhs);
  CHECK(a.std_error == b.std_error);
}

TEST_CASE("transverse measure estimates") {
  const Scheme fib = fibonacci();
  const Box V = Box::centered(1, 0.25);
  const auto whole = estimate_transverse_measure(fib, fib.window().box, V, 20000, 1);
  CHECK(std::abs(whole.estimate - predicted_density(fib)) <= 3 * whole.std_error);
  CHECK(estimate_transverse_measure(fib, Box({0.0}, {0.0}), V, 100, 1).estimate == 0.0);

  const Box B1({-1.0}, {-0.2}), B2({-0.2}, {0.5}), B12({-1.0}, {0.5});
  const auto e1 = estimate_transverse_measure(fib, B1, V, 20000, 2);
  const auto e2 = estimate_transverse_measure(fib, B2, V, 20000, 3);
  const auto e12 = estimate_transverse_measure(fib, B12, V, 20000, 4);
  const double err = std::sqrt(e1.std_error * e1.std_error + e2.std_error * e2.std_error + e12.std_error * e12.std_error);
  CHECK(std::abs(e1.estimate + e2.estimate - e12.estimate) <= 3 * err);

  try {
    estimate_transverse_measure(fib, fib.window().box, Box::centered(1, 1.0), 10, 1);
    FAIL("expected InjectivityViolated");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InjectivityViolated);
  }
}

TEST_CASE("change of cross-section") {
  const Scheme fib = fibonacci();
  const Box B({-1.0}, {0.0});
  const auto same = change_of_section_check(fib, Vec{0.0}, B, 2000, 1);
  CHECK(same.on_section.estimate == same.on_translate.estimate);
  CHECK(same.z == 0.0);

  const Scheme zz = z2();
  const auto half = change_of_section_check(zz, Vec{0.5}, Box({-0.25}, {0.25}), 20000, 2);
  CHECK(std::abs(half.z) <= 3.0);
  CHECK(std::abs(half.on_section.estimate - 0.5) <= 3 * half.on_section.std_error);

  const auto fp = change_of_section_check(fib, Vec{kPhi}, B, 20000, 3);
  CHECK(std::abs(fp.z) <= 3.0);
  CHECK(fp.exact == doctest::Approx(1.0 / std::sqrt(5.0)));
}

TEST_CASE("restriction in stages") {
  const Scheme fib = fibonacci();
  const Box left({-1.0}, {-1.0 + kPhi / 2});
  const std::vector<Box> one{left};
  const auto r1 = stages_check(fib, {}, one, 1000, 4096);
  CHECK(r1.direct == r1.staged);

  const Scheme zz = z2();
  const std::vector<Box> zA{Box({-0.5}, {0.0}), Box({-0.25}, {0.25})};
  const auto rz = stages_check(zz, {}, zA, 100, 100000);
  CHECK(rz.direct == rz.staged);
  CHECK(rz.direct == 0.25);

  const std::vector<Box> A{left, left};
  const std::vector zs{TransversalPoint::make(fib, {-0.4}), TransversalPoint::make(fib, {0.1})};
  const auto rep = stages_check(fib, zs, A, 1e4, 100000);
  CHECK(rep.relative_deviation <= 0.02);
  CHECK(rep.direct == doctest::Approx(rep.exact).epsilon(0.02));
  CHECK(rep.orbit_density == doctest::Approx(rep.orbit_predicted).epsilon(0.02));
}
