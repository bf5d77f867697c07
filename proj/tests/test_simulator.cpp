#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mosaic/simulator.hpp"

using namespace mosaic;

namespace {

SyntheticPoolSpec two_cluster_spec() {
  SyntheticPoolSpec spec;
  spec.M = 2;
  spec.a_true = {1.0, 10.0};
  spec.tau_true = {1.0, 100.0};
  spec.pool_sizes = {500, 500};
  spec.seed = 11;
  return spec;
}

}  // namespace

TEST_CASE("empty mixture scores the base utility exactly") {
  SyntheticPoolSpec spec = two_cluster_spec();
  spec.base_utility = 3.25;
  REQUIRE(structural_utility(spec, {0, 0}) == 3.25);
  REQUIRE(true_utility(spec, {0, 0}) == 3.25);  // sigma = 0: no noise at all
}

TEST_CASE("separable surface is the sum of saturating curves") {
  const SyntheticPoolSpec spec = two_cluster_spec();
  const std::vector<std::int64_t> counts = {3, 40};
  double expected = spec.base_utility;
  expected += spec.a_true[0] * -std::expm1(-3.0 / spec.tau_true[0]);
  expected += spec.a_true[1] * -std::expm1(-40.0 / spec.tau_true[1]);
  REQUIRE(structural_utility(spec, counts) == expected);
}

TEST_CASE("saturated interacting pair adds the full coupling") {
  SyntheticPoolSpec spec;
  spec.M = 2;
  spec.a_true = {1.0, 1.0};
  spec.tau_true = {1.0, 1.0};
  spec.pool_sizes = {1000, 1000};
  spec.base_utility = 7.0;
  Eigen::MatrixXd kappa = Eigen::MatrixXd::Zero(2, 2);
  kappa(0, 1) = kappa(1, 0) = 0.5;
  spec.interaction = kappa;
  // exp(-1000) underflows to zero, so both saturations are exactly 1.
  REQUIRE(structural_utility(spec, {1000, 1000}) == 9.5);
}

TEST_CASE("interaction vanishes when either cluster is empty") {
  SyntheticPoolSpec spec = two_cluster_spec();
  Eigen::MatrixXd kappa = Eigen::MatrixXd::Zero(2, 2);
  kappa(0, 1) = kappa(1, 0) = -2.0;
  SyntheticPoolSpec coupled = spec;
  coupled.interaction = kappa;
  REQUIRE(structural_utility(coupled, {5, 0}) == structural_utility(spec, {5, 0}));
  REQUIRE(structural_utility(coupled, {0, 9}) == structural_utility(spec, {0, 9}));
  REQUIRE(structural_utility(coupled, {5, 9}) < structural_utility(spec, {5, 9}));
}

TEST_CASE("pool specs are validated") {
  SyntheticPoolSpec spec = two_cluster_spec();
  spec.M = 0;
  REQUIRE_THROWS_AS(spec.validate(), std::invalid_argument);

  spec = two_cluster_spec();
  spec.tau_true[1] = 0.0;
  REQUIRE_THROWS_AS(spec.validate(), std::invalid_argument);

  spec = two_cluster_spec();
  spec.pool_sizes = {500};
  REQUIRE_THROWS_AS(spec.validate(), std::invalid_argument);

  spec = two_cluster_spec();
  spec.noise_sigma = -0.1;
  REQUIRE_THROWS_AS(spec.validate(), std::invalid_argument);

  spec = two_cluster_spec();
  Eigen::MatrixXd kappa = Eigen::MatrixXd::Zero(2, 2);
  kappa(0, 0) = 1.0;
  spec.interaction = kappa;
  REQUIRE_THROWS_AS(spec.validate(), std::invalid_argument);  // nonzero diagonal

  kappa(0, 0) = 0.0;
  kappa(0, 1) = 1.0;  // asymmetric
  spec.interaction = kappa;
  REQUIRE_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("count vectors are checked against the pools") {
  const SyntheticPoolSpec spec = two_cluster_spec();
  REQUIRE_THROWS_AS(structural_utility(spec, {0}), std::invalid_argument);
  REQUIRE_THROWS_AS(structural_utility(spec, {-1, 0}), std::invalid_argument);
  REQUIRE_THROWS_AS(structural_utility(spec, {501, 0}), std::invalid_argument);
}

TEST_CASE("noisy evaluation is a pure function of seed, tag, and counts") {
  SyntheticPoolSpec spec = two_cluster_spec();
  spec.noise_sigma = 0.3;
  const double u = true_utility(spec, {7, 20}, 5);
  REQUIRE(true_utility(spec, {7, 20}, 5) == u);           // bit-identical repeat
  REQUIRE(true_utility(spec, {7, 20}, 6) != u);           // tag matters
  REQUIRE(true_utility(spec, {20, 7}, 5) != u);           // counts matter
  SyntheticPoolSpec reseeded = spec;
  reseeded.seed = 12;
  REQUIRE(true_utility(reseeded, {7, 20}, 5) != u);       // spec seed matters

  spec.noise_sigma = 0.0;
  REQUIRE(true_utility(spec, {7, 20}, 5) == structural_utility(spec, {7, 20}));
}

TEST_CASE("noiseless pilots sit exactly on the per-cluster curves") {
  const SyntheticPoolSpec spec = two_cluster_spec();
  const auto pilots = run_pilots(spec, {10, 20});
  REQUIRE(pilots.size() == 4);
  std::size_t k = 0;
  for (std::int64_t i = 0; i < 2; ++i) {
    for (std::int64_t n : {10, 20}) {
      REQUIRE(pilots[k].cluster_id == i);
      REQUIRE(pilots[k].n_added == n);
      const double expected = spec.a_true[static_cast<std::size_t>(i)] *
                              -std::expm1(-static_cast<double>(n) /
                                          spec.tau_true[static_cast<std::size_t>(i)]);
      REQUIRE(pilots[k].delta_u == expected);
      ++k;
    }
  }

  // Fitting those pilots recovers the generating parameters.
  const auto fits = fit_all_clusters(pilots);
  REQUIRE(fits.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    REQUIRE_THAT(fits[i].a, Catch::Matchers::WithinRel(spec.a_true[i], 1e-6));
    REQUIRE_THAT(fits[i].tau, Catch::Matchers::WithinRel(spec.tau_true[i], 1e-6));
  }
}

TEST_CASE("single-cluster pilots ignore the interaction") {
  SyntheticPoolSpec spec = two_cluster_spec();
  const auto clean = run_pilots(spec, {10, 20});
  Eigen::MatrixXd kappa = Eigen::MatrixXd::Zero(2, 2);
  kappa(0, 1) = kappa(1, 0) = -5.0;
  spec.interaction = kappa;
  const auto coupled = run_pilots(spec, {10, 20});
  for (std::size_t k = 0; k < clean.size(); ++k)
    REQUIRE(clean[k].delta_u == coupled[k].delta_u);
}

TEST_CASE("pilot designs are validated") {
  const SyntheticPoolSpec spec = two_cluster_spec();
  REQUIRE_THROWS_AS(run_pilots(spec, {}), std::invalid_argument);
  REQUIRE_THROWS_AS(run_pilots(spec, {0}), std::invalid_argument);
  REQUIRE_THROWS_AS(run_pilots(spec, {501}), std::invalid_argument);
}

TEST_CASE("synthetic pools are deterministic and well-formed") {
  SyntheticPoolSpec spec = two_cluster_spec();
  spec.pool_sizes = {4, 7};
  const auto pool = build_synthetic_pool(spec);
  REQUIRE(pool.size() == 2);
  REQUIRE(pool[0].size() == 4);
  REQUIRE(pool[1].size() == 7);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    REQUIRE(pool[i].cluster_id == static_cast<std::int64_t>(i));
    for (std::size_t k = 0; k < pool[i].ordered_ids.size(); ++k) {
      REQUIRE(pool[i].ordered_ids[k].rfind("c" + std::to_string(i) + "_s", 0) == 0);
      REQUIRE(pool[i].scores[k] >= 0.0);
      REQUIRE(pool[i].scores[k] < 1.0);
      if (k > 0) REQUIRE(pool[i].scores[k] >= pool[i].scores[k - 1]);
    }
  }

  const auto again = build_synthetic_pool(spec);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    REQUIRE(pool[i].ordered_ids == again[i].ordered_ids);
    REQUIRE(pool[i].scores == again[i].scores);
  }
}

TEST_CASE("random-only experiments benchmark against themselves") {
  SyntheticPoolSpec spec = two_cluster_spec();
  spec.pool_sizes = {200, 200};
  const auto report = run_experiment(spec, {"random"}, {20, 60, 120}, {1, 2, 3}, {20, 40});
  REQUIRE(report.curves.size() == 1);
  REQUIRE(report.fits.empty());  // nothing needed the pilot fits
  const auto& row = report.brmr_table.at("random");
  for (const auto& value : row) {
    REQUIRE(value.has_value());
    REQUIRE(*value == 1.0);
  }
}

TEST_CASE("greedy selection matches the oracle on a separable surface") {
  SyntheticPoolSpec spec;
  spec.M = 3;
  spec.a_true = {4.0, 2.5, 1.0};
  spec.tau_true = {30.0, 80.0, 10.0};
  spec.pool_sizes = {200, 200, 200};
  spec.seed = 5;
  const auto report =
      run_experiment(spec, {"random", "mosaic", "oracle"}, {5, 17, 40}, {1, 2, 3, 4}, {50, 100});

  const MethodCurve* mosaic = nullptr;
  const MethodCurve* oracle = nullptr;
  const MethodCurve* random = nullptr;
  for (const auto& c : report.curves) {
    if (c.method == "mosaic") mosaic = &c;
    if (c.method == "oracle") oracle = &c;
    if (c.method == "random") random = &c;
  }
  REQUIRE(mosaic != nullptr);
  REQUIRE(oracle != nullptr);
  REQUIRE(random != nullptr);

  // Same counts, same noise stream: the curves agree bitwise.
  for (std::size_t s = 0; s < report.seeds.size(); ++s)
    for (std::size_t b = 0; b < report.budgets.size(); ++b)
      REQUIRE(mosaic->utilities[s][b] == oracle->utilities[s][b]);

  // sigma = 0: the evaluation is structural, so the optimal separable
  // allocation dominates every random one at every budget.
  for (std::size_t b = 0; b < report.budgets.size(); ++b)
    REQUIRE(mosaic->mean[b] >= random->mean[b] - 1e-9);

  // Utility grows with budget while every asymptote is positive.
  for (std::size_t b = 1; b < report.budgets.size(); ++b)
    REQUIRE(mosaic->mean[b] > mosaic->mean[b - 1]);

  // Greedy allocations nest across budgets.
  REQUIRE(report.mosaic_counts.size() == report.budgets.size());
  for (std::size_t b = 1; b < report.mosaic_counts.size(); ++b)
    for (std::size_t i = 0; i < report.mosaic_counts[b].size(); ++i)
      REQUIRE(report.mosaic_counts[b][i] >= report.mosaic_counts[b - 1][i]);

  // Better-than-random shows up as an early breakeven.
  for (const auto& value : report.brmr_table.at("mosaic")) {
    REQUIRE(value.has_value());
    REQUIRE(*value <= 1.0 + 1e-12);
  }
}

TEST_CASE("the recorded trace is a faithful argmax log") {
  SyntheticPoolSpec spec;
  spec.M = 3;
  spec.a_true = {4.0, 2.5, 1.0};
  spec.tau_true = {30.0, 80.0, 10.0};
  spec.pool_sizes = {200, 200, 200};
  spec.seed = 5;
  const auto report = run_experiment(spec, {"mosaic"}, {40}, {1}, {50, 100});
  REQUIRE(report.mosaic_trace.size() == 40);

  std::vector<std::int64_t> counts(3, 0);
  for (std::size_t step = 0; step < report.mosaic_trace.size(); ++step) {
    const auto& entry = report.mosaic_trace[step];
    REQUIRE(entry.iteration == static_cast<std::int64_t>(step));
    const auto chosen = static_cast<std::size_t>(entry.cluster_id);
    REQUIRE(entry.delta ==
            marginal_gain(report.fits[chosen], static_cast<double>(counts[chosen])));
    for (std::size_t i = 0; i < 3; ++i) {
      const double alternative =
          marginal_gain(report.fits[i], static_cast<double>(counts[i]));
      REQUIRE(entry.delta >= alternative);
      if (alternative == entry.delta && i < chosen) FAIL("tie not broken downward");
    }
    ++counts[chosen];
  }
}

TEST_CASE("estimated gains are honest on separable surfaces and optimistic under interference") {
  SyntheticPoolSpec spec;
  spec.M = 2;
  spec.a_true = {2.0, 2.0};
  spec.tau_true = {50.0, 50.0};
  spec.pool_sizes = {300, 300};
  spec.seed = 3;

  const auto separable = run_experiment(spec, {"mosaic"}, {2, 6, 10}, {1}, {25, 50});
  REQUIRE(separable.estimates.size() == 3);
  for (const auto& pair : separable.estimates)
    REQUIRE_THAT(pair.estimated_gain, Catch::Matchers::WithinRel(pair.actual_gain, 1e-6));

  Eigen::MatrixXd kappa = Eigen::MatrixXd::Zero(2, 2);
  kappa(0, 1) = kappa(1, 0) = -0.8;
  spec.interaction = kappa;
  const auto coupled = run_experiment(spec, {"mosaic"}, {2, 6, 10}, {1}, {25, 50});
  for (std::size_t b = 0; b < coupled.estimates.size(); ++b) {
    // Identical clusters alternate, so both are active from budget 2 on and
    // the negative coupling pulls the realized gain below the estimate.
    const auto& counts = coupled.mosaic_counts[b];
    REQUIRE(counts[0] > 0);
    REQUIRE(counts[1] > 0);
    REQUIRE(coupled.estimates[b].estimated_gain > coupled.estimates[b].actual_gain);
  }
}

TEST_CASE("experiment reports are rerun-identical") {
  SyntheticPoolSpec spec = two_cluster_spec();
  spec.pool_sizes = {200, 200};
  spec.noise_sigma = 0.2;
  const auto once = run_experiment(spec, {"random", "mosaic"}, {10, 30}, {1, 2, 3}, {20, 40});
  const auto twice = run_experiment(spec, {"random", "mosaic"}, {10, 30}, {1, 2, 3}, {20, 40});
  REQUIRE(once.curves.size() == twice.curves.size());
  for (std::size_t c = 0; c < once.curves.size(); ++c) {
    REQUIRE(once.curves[c].method == twice.curves[c].method);
    REQUIRE(once.curves[c].utilities == twice.curves[c].utilities);
    REQUIRE(once.curves[c].mean == twice.curves[c].mean);
    REQUIRE(once.curves[c].stddev == twice.curves[c].stddev);
  }
  REQUIRE(once.brmr_table == twice.brmr_table);
  REQUIRE(once.mosaic_counts == twice.mosaic_counts);
  for (std::size_t k = 0; k < once.fits.size(); ++k) {
    REQUIRE(once.fits[k].a == twice.fits[k].a);
    REQUIRE(once.fits[k].tau == twice.fits[k].tau);
  }
}

TEST_CASE("experiment inputs are validated") {
  SyntheticPoolSpec spec = two_cluster_spec();
  spec.pool_sizes = {50, 50};
  REQUIRE_THROWS_AS(run_experiment(spec, {"gradient"}, {10}, {1}, {5, 10}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(run_experiment(spec, {}, {10}, {1}, {5, 10}), std::invalid_argument);
  REQUIRE_THROWS_AS(run_experiment(spec, {"random"}, {}, {1}, {5, 10}), std::invalid_argument);
  REQUIRE_THROWS_AS(run_experiment(spec, {"random"}, {10, 10}, {1}, {5, 10}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(run_experiment(spec, {"random"}, {10}, {}, {5, 10}), std::invalid_argument);
  REQUIRE_THROWS_AS(run_experiment(spec, {"random"}, {101}, {1}, {5, 10}),
                    std::invalid_argument);
}
