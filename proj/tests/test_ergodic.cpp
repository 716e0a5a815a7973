#include <random>

#include "doctest.h"
#include "meyerlab/ergodic.hpp"
#include "meyerlab/stats.hpp"
#include "support.hpp"

using namespace meyerlab;
using namespace meyerlab::testing;

TEST_CASE("convenient sequences") {
  const ConvenientSequence one{1, {100.0}};
  const auto rep = verify_convenient(one, 10);
  CHECK(rep.pass);
  CHECK(rep.rows[9].delta == doctest::Approx(0.1));
  CHECK(rep.rows[9].epsilon <= 0.002);
  CHECK(rep.rows[9].containment);

  for (double t_min : {2.0, 10.0, 1000.0}) {
    const auto two = verify_convenient(ConvenientSequence::linear(2, t_min, 10 * t_min, 20), 50);
    CHECK(two.pass);
    for (const auto& row : two.rows) {
      const double x = 1.0 / (row.n * t_min);
      CHECK(row.epsilon <= 2 * x + x * x + 1e-15);
    }
  }

  const ConvenientSequence tiny{1, {0.05, 2.0}};
  const auto bad = verify_convenient(tiny, 30);
  CHECK_FALSE(bad.pass);
  CHECK(bad.rows[0].degenerate);
  CHECK_FALSE(bad.rows[29].degenerate);  // 1/30 < 0.05
  CHECK_THROWS_AS(tiny.validate(), Error);
  CHECK_THROWS_AS((ConvenientSequence{1, {5.0, 3.0}}.validate()), Error);
}

TEST_CASE("lower density of simple sets") {
  const auto seq = ConvenientSequence::linear(1, 10, 100, 10);
  const auto z = lower_density(integers(-100, 100), seq);
  for (const auto& row : z.rows) {
    CHECK(row.ratio == 1.0);
    CHECK(row.volume == 2 * row.t);
  }
  CHECK(z.estimate == 1.0);

  const auto two = lower_density([](const Box& b) { return integers(b.lo()[0], b.hi()[0], 2.0); },
                                 ConvenientSequence::linear(1, 10.5, 99.5, 12));
  for (const auto& row : two.rows) CHECK(std::abs(row.ratio - 0.5) <= 1.0 / row.t);

  CHECK_THROWS_AS(lower_density(integers(-10, 10), seq), Error);
}

TEST_CASE("lower density of model sets") {
  const Scheme fib = fibonacci();
  const auto seq = ConvenientSequence::linear(1, 1000, 1e4, 40);
  const auto z = TransversalPoint::make(fib, {0.123});
  const auto trace = lower_density([&](const Box& b) { return model_set(fib, z, b); }, seq);
  CHECK(trace.estimate == doctest::Approx(predicted_density(fib)).epsilon(0.01));
  for (const auto& row : trace.rows) CHECK(std::abs(row.ratio - predicted_density(fib)) <= 5.0 / row.t);

  // splitting the window splits the return times
  const double cut = -0.2;
  const Scheme left = fib.with_window(Window(Box({-1.0}, {cut})));
  const Scheme right = fib.with_window(Window(Box({cut}, {kPhi - 1.0})));
  const Box G = seq.set(seq.t_max());
  const auto a = lower_density(model_set_at(left, z.w(), G), seq);
  const auto b = lower_density(model_set_at(right, z.w(), G), seq);
  CHECK(std::abs(trace.estimate - a.estimate - b.estimate) <= 2.0 / seq.t_grid[30]);
  for (std::size_t i = 0; i < trace.rows.size(); ++i) {
    CHECK(trace.rows[i].count == a.rows[i].count + b.rows[i].count);
  }
}

TEST_CASE("transversal averages") {
  const Scheme fib = fibonacci();
  const auto seq = ConvenientSequence::linear(1, 1000, 1e4, 10);
  const auto z = TransversalPoint::make(fib, {-0.5});
  const auto ones = transversal_average(fib, z, [](std::span<const double>) { return 1.0; }, seq);
  CHECK(ones.predicted == doctest::Approx(predicted_density(fib)));
  CHECK(ones.estimate == doctest::Approx(ones.predicted).epsilon(0.01));

  const Box B({-0.3}, {0.4});
  const auto chi = transversal_average(fib, z, [&](std::span<const double> w) { return B.contains(w) ? 1.0 : 0.0; }, seq);
  CHECK(chi.estimate == doctest::Approx(0.7 / std::sqrt(5.0)).epsilon(0.01));
  CHECK(chi.predicted == doctest::Approx(0.7 / std::sqrt(5.0)).epsilon(1e-4));

  const auto zero = transversal_average(fib, z, [](std::span<const double>) { return 0.0; }, seq);
  CHECK(zero.estimate == 0.0);

  // the counts agree with the model set itself
  const Patch q = model_set(fib, z, seq.set(seq.t_max()));
  CHECK(ones.rows.back().count == static_cast<double>(q.size()));
}

TEST_CASE("recurrence in the lattice case") {
  const Scheme zz = z2();
  const std::vector zs{TransversalPoint::make(zz, {0.1}), TransversalPoint::make(zz, {-0.3})};
  const auto hits = recurrence_search(zz, zs, 0.05, 5, 20);
  REQUIRE(hits.size() == 30);  // a in [-20, -6] and [5, 19]
  for (const auto& h : hits) {
    CHECK(h.internal_norm == 0.0);
    CHECK(std::abs(h.g[0]) >= 5.0);
    CHECK(h.g[0] == static_cast<double>(h.coeffs[0]));
    for (double pd : h.patch_dists) CHECK(pd == 0.0);
  }
  CHECK(hits.front().g[0] == 5.0);
}

TEST_CASE("recurrence in the Fibonacci scheme") {
  const Scheme fib = fibonacci();
  const std::vector zs{TransversalPoint::make(fib, {-0.55}), TransversalPoint::make(fib, {0.3})};
  REQUIRE(zs[0].margin() >= 0.1);
  REQUIRE(zs[1].margin() >= 0.1);
  const double eps = 0.05, t_max = 1e4;
  const auto hits = recurrence_search(fib, zs, eps, 100, t_max);

  Box internal = Box::centered(1, eps);
  for (const auto& z : zs) internal = box_intersect(internal, fib.window().box.translated(Vec{-z.w()[0]}));
  const double expected = 2 * t_max * internal.volume() / fib.covolume();
  CHECK(static_cast<double>(hits.size()) == doctest::Approx(expected).epsilon(0.25));

  double last = 0.0;
  for (const auto& h : hits) {
    CHECK(std::abs(h.g[0]) >= last);
    last = std::abs(h.g[0]);
    CHECK(h.internal_norm < eps);
    for (const auto& z : zs) {
      const auto moved = act(fib, z, h.coeffs);
      CHECK(std::abs(moved.w()[0] - z.w()[0]) < eps);
    }
    CHECK(h.patch_dists.size() == 2);
  }

  RecurrenceOptions few;
  few.max_hits = 3;
  CHECK(recurrence_search(fib, zs, eps, 100, t_max, few).size() == 3);

  try {
    recurrence_search(fib, zs, 0.001, 100, 101);
    FAIL("expected NoHits");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoHits);
  }
  CHECK_THROWS_AS(recurrence_search(fib, zs, 0.35, 100, t_max), Error);
}

TEST_CASE("intersection densities") {
  const auto seq = ConvenientSequence::linear(1, 2000, 1e4, 9);
  // every model set of the lattice scheme is Z; the window formula assumes a
  // dense internal projection and only gives 1 when the shifted windows agree
  const auto lattice = intersection_density_experiment(z2(), 3, 4, seq, 1, 0.05);
  for (const auto& row : lattice) CHECK(row.empirical == 1.0);
  const Scheme zz = z2();
  const std::vector same(3, TransversalPoint::make(zz, {0.0}));
  CHECK(predicted_intersection_density(zz, same) == 1.0);

  const Scheme fib = fibonacci();
  const auto rows = intersection_density_experiment(fib, 2, 6, seq, 7, 0.05 * kPhi);
  for (const auto& row : rows) {
    CHECK(row.predicted > 0.0);
    CHECK(row.rel_err <= 0.02);
  }
  const auto single = intersection_density_experiment(fib, 1, 2, seq, 7, 0.05 * kPhi);
  for (const auto& row : single) CHECK(row.predicted == doctest::Approx(predicted_density(fib)));

  // adding patches can only shrink the common return times
  Rng rng = make_rng(12);
  std::vector<TransversalPoint> zs;
  std::vector<Patch> patches;
  double prev_emp = INFINITY, prev_pred = INFINITY;
  for (int k = 0; k < 4; ++k) {
    zs.push_back(sample_transversal(fib, rng, 0.08));
    patches.push_back(model_set(fib, zs.back(), seq.set(seq.t_max())));
    const auto trace = lower_density(return_time_set(patches, seq.t_max()), seq);
    const double pred = predicted_intersection_density(fib, zs);
    CHECK(trace.rows.back().ratio <= prev_emp);
    CHECK(pred <= prev_pred);
    prev_emp = trace.rows.back().ratio;
    prev_pred = pred;
  }
}

TEST_CASE("Poincare staircase") {
  const std::vector<double> schedule{0.1, 0.05, 0.02};
  const auto lattice = transverse_poincare_experiment(z2(), 2, schedule, 1, 0.15, 1e3);
  for (const auto& t : lattice) {
    CHECK(t.complete);
    REQUIRE(t.steps.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(t.steps[k].internal_norm == 0.0);
      CHECK(t.steps[k].g_norm == static_cast<double>(k + 1));
    }
  }

  const auto fib = transverse_poincare_experiment(fibonacci(), 5, schedule, 3, 0.15, 1e5);
  for (const auto& t : fib) {
    CHECK(t.complete);
    REQUIRE(t.steps.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(t.steps[k].internal_norm < schedule[k]);
      if (k > 0) CHECK(t.steps[k].g_norm >= t.steps[k - 1].g_norm + 1.0);
    }
  }
  const auto none = transverse_poincare_experiment(fibonacci(), 2, {}, 3, 0.15, 1e5);
  CHECK(none.size() == 2);
  CHECK(none[0].steps.empty());
}

TEST_CASE("KS test against the standard normal") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::vector<double> z(500), shifted(500);
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = g(rng);
    shifted[i] = z[i] + 0.5;
  }
  CHECK(ks_test_normal(z).p_value > 0.01);
  CHECK(ks_test_normal(shifted).p_value < 1e-6);
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_cdf(1.96) == doctest::Approx(0.975).epsilon(1e-4));
  // single point at 0: D = 1/2
  const std::vector<double> one{0.0};
  CHECK(ks_test_normal(one).statistic == 0.5);
}
