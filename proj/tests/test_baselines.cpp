#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mosaic/baselines.hpp"
#include "mosaic/rng.hpp"

using namespace mosaic;

namespace {

std::vector<std::string> numbered_ids(const std::string& prefix, std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t k = 0; k < n; ++k) ids.push_back(prefix + std::to_string(k));
  return ids;
}

}  // namespace

TEST_CASE("random selection is a nested prefix of one permutation") {
  const auto pool = numbered_ids("s", 50);

  const auto all = random_select(pool, 50, 7);
  std::set<std::string> seen(all.begin(), all.end());
  REQUIRE(seen.size() == 50);  // a permutation, no duplicates

  for (std::int64_t B : {0, 1, 10, 37}) {
    const auto subset = random_select(pool, B, 7);
    REQUIRE(subset.size() == static_cast<std::size_t>(B));
    for (std::size_t k = 0; k < subset.size(); ++k) REQUIRE(subset[k] == all[k]);
  }
}

TEST_CASE("random selection is seed-deterministic") {
  const auto pool = numbered_ids("s", 100);
  REQUIRE(random_select(pool, 20, 1) == random_select(pool, 20, 1));
  REQUIRE(random_select(pool, 20, 1) != random_select(pool, 20, 2));
  REQUIRE(random_select(pool, 20) == random_select(pool, 20, 42));  // default seed
}

TEST_CASE("random selection validates the budget") {
  const auto pool = numbered_ids("s", 3);
  REQUIRE_THROWS_AS(random_select(pool, 4, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(random_select(pool, -1, 1), std::invalid_argument);
}

TEST_CASE("frame entropy spans [0, ln K]") {
  REQUIRE_THAT(frame_entropy({0.0, 0.0, 0.0, 0.0}),
               Catch::Matchers::WithinAbs(std::log(4.0), 1e-12));
  REQUIRE(frame_entropy({50.0, 0.0, 0.0}) < 1e-12);
  REQUIRE(frame_entropy({50.0, 0.0, 0.0}) >= 0.0);
  REQUIRE_THROWS_AS(frame_entropy({}), std::invalid_argument);
}

TEST_CASE("frame entropy is shift-invariant") {
  // Max subtraction makes the arithmetic identical, not merely close.
  REQUIRE(frame_entropy({1.0, 2.0, 3.0}) == frame_entropy({1001.0, 1002.0, 1003.0}));
}

TEST_CASE("clip entropy averages frames") {
  const double uniform2 = std::log(2.0);
  REQUIRE_THAT(clip_entropy({{0.0, 0.0}, {0.0, 0.0}}),
               Catch::Matchers::WithinAbs(uniform2, 1e-12));
  REQUIRE_THAT(clip_entropy({{0.0, 0.0}, {100.0, 0.0}}),
               Catch::Matchers::WithinAbs(uniform2 / 2.0, 1e-9));
  REQUIRE_THROWS_AS(clip_entropy({}), std::invalid_argument);
}

TEST_CASE("uncertainty ranks the most uniform clips first") {
  LogitMatrix logits;
  logits.ids = {"peaked", "uniform", "middling"};
  logits.logits = {
      {{9.0, 0.0, 0.0}, {9.0, 0.0, 0.0}},
      {{0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}},
      {{1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}},
  };
  REQUIRE(entropy_select(logits, 3) ==
          std::vector<std::string>{"uniform", "middling", "peaked"});
  REQUIRE(entropy_select(logits, 1) == std::vector<std::string>{"uniform"});
}

TEST_CASE("uncertainty breaks entropy ties by id") {
  LogitMatrix logits;
  logits.ids = {"zeta", "alpha"};
  logits.logits = {{{1.0, 2.0}}, {{1.0, 2.0}}};
  REQUIRE(entropy_select(logits, 2) == std::vector<std::string>{"alpha", "zeta"});
}

TEST_CASE("uncertainty ranking is invariant to per-frame logit shifts") {
  LogitMatrix shifted;
  shifted.ids = {"a", "b", "c"};
  shifted.logits = {
      {{500.0, 500.0, 500.0}},
      {{-3.0, -4.0, -5.0}},
      {{1000.0, 991.0, 991.0}},
  };
  LogitMatrix centered = shifted;
  for (auto& sample : centered.logits)
    for (auto& frame : sample) {
      const double zmax = *std::max_element(frame.begin(), frame.end());
      for (double& z : frame) z -= zmax;
    }
  REQUIRE(entropy_select(shifted, 3) == entropy_select(centered, 3));
}

TEST_CASE("logit matrices are validated") {
  LogitMatrix logits;
  logits.ids = {"a"};
  logits.logits = {};
  REQUIRE_THROWS_AS(logits.validate(), std::invalid_argument);

  logits.logits = {{}};
  REQUIRE_THROWS_AS(logits.validate(), std::invalid_argument);  // no frames

  logits.logits = {{{1.0, 2.0}, {1.0}}};
  REQUIRE_THROWS_AS(logits.validate(), std::invalid_argument);  // ragged K

  logits.logits = {{{1.0, std::numeric_limits<double>::quiet_NaN()}}};
  REQUIRE_THROWS_AS(logits.validate(), std::invalid_argument);
}

TEST_CASE("coreset picks the farthest point first") {
  Eigen::MatrixXd train(1, 1);
  train << 0.0;
  Eigen::MatrixXd pool(3, 1);
  pool << 1.0, 3.0, 5.0;
  const std::vector<std::string> ids = {"near", "mid", "far"};

  REQUIRE(coreset_select(train, pool, ids, 2) == std::vector<std::string>{"far", "mid"});
  // Full traversal continues farthest-first.
  REQUIRE(coreset_select(train, pool, ids, 3) ==
          std::vector<std::string>{"far", "mid", "near"});
}

TEST_CASE("coreset defers duplicates of covered points") {
  Eigen::MatrixXd train(1, 1);
  train << 0.0;
  Eigen::MatrixXd pool(3, 1);
  pool << 0.0, 10.0, 5.0;
  const std::vector<std::string> ids = {"dup", "edge", "center"};
  REQUIRE(coreset_select(train, pool, ids, 3) ==
          std::vector<std::string>{"edge", "center", "dup"});
}

TEST_CASE("coreset distance ties go to the lowest id") {
  Eigen::MatrixXd train(1, 1);
  train << 0.0;
  Eigen::MatrixXd pool(2, 1);
  pool << -2.0, 2.0;
  REQUIRE(coreset_select(train, pool, {"m", "z"}, 1) == std::vector<std::string>{"m"});
  REQUIRE(coreset_select(train, pool, {"z", "m"}, 1) == std::vector<std::string>{"m"});
}

TEST_CASE("coreset shrinks the covering radius monotonically") {
  rng::Engine engine(99);
  Eigen::MatrixXd train(4, 3);
  Eigen::MatrixXd pool(30, 3);
  for (Eigen::Index i = 0; i < train.rows(); ++i)
    for (Eigen::Index j = 0; j < 3; ++j) train(i, j) = engine.real01();
  for (Eigen::Index i = 0; i < pool.rows(); ++i)
    for (Eigen::Index j = 0; j < 3; ++j) pool(i, j) = 4.0 * engine.real01();
  const auto ids = numbered_ids("p", 30);
  const auto order = coreset_select(train, pool, ids, 30);

  double previous = covering_radius(train, pool);
  Eigen::MatrixXd covered = train;
  for (const auto& id : order) {
    const auto row = static_cast<Eigen::Index>(
        std::find(ids.begin(), ids.end(), id) - ids.begin());
    covered.conservativeResize(covered.rows() + 1, Eigen::NoChange);
    covered.row(covered.rows() - 1) = pool.row(row);
    const double radius = covering_radius(covered, pool);
    REQUIRE(radius <= previous + 1e-12);
    previous = radius;
  }
  REQUIRE(previous == 0.0);  // the whole pool is eventually covered exactly
}

TEST_CASE("coreset validates its inputs") {
  Eigen::MatrixXd train(1, 2);
  train << 0.0, 0.0;
  Eigen::MatrixXd pool(2, 2);
  pool << 1.0, 0.0, 0.0, 1.0;
  REQUIRE_THROWS_AS(coreset_select(Eigen::MatrixXd(0, 2), pool, {"a", "b"}, 1),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(coreset_select(train, pool, {"a"}, 1), std::invalid_argument);
  Eigen::MatrixXd train3(1, 3);
  train3 << 0.0, 0.0, 0.0;
  REQUIRE_THROWS_AS(coreset_select(train3, pool, {"a", "b"}, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(coreset_select(train, pool, {"a", "b"}, 3), std::invalid_argument);
}

TEST_CASE("leverage scores of orthonormal embeddings are all one half at unit ridge") {
  Eigen::MatrixXd embeddings = Eigen::MatrixXd::Identity(3, 5);
  const auto scores = krls_leverage_scores(embeddings, 1.0);
  for (double s : scores) REQUIRE_THAT(s, Catch::Matchers::WithinAbs(0.5, 1e-12));

  const DomainWeights weights = chameleon_weights(embeddings, 1.0);
  weights.validate();
  for (double w : weights.weights)
    REQUIRE_THAT(w, Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-12));
}

TEST_CASE("leverage scores stay in the unit interval") {
  rng::Engine engine(5);
  Eigen::MatrixXd embeddings(4, 6);
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 6; ++j) embeddings(i, j) = 2.0 * engine.real01() - 1.0;
  for (double lambda : {0.1, 1.0, 10.0}) {
    for (double s : krls_leverage_scores(embeddings, lambda)) {
      REQUIRE(s >= 0.0);
      REQUIRE(s < 1.0);
    }
  }
  REQUIRE_THROWS_AS(krls_leverage_scores(embeddings, 0.0), std::invalid_argument);
}

TEST_CASE("a zero embedding captures all the weight") {
  Eigen::MatrixXd embeddings(2, 3);
  embeddings << 0.0, 0.0, 0.0, 1.0, 2.0, 3.0;
  const auto scores = krls_leverage_scores(embeddings, 1.0);
  REQUIRE_THAT(scores[0], Catch::Matchers::WithinAbs(0.0, 1e-12));
  const DomainWeights weights = chameleon_weights(embeddings, 1.0);
  REQUIRE(weights.weights[0] == 1.0);
  REQUIRE(weights.weights[1] == 0.0);
}

TEST_CASE("symmetric embeddings give symmetric weights") {
  Eigen::MatrixXd embeddings(2, 3);
  embeddings << 1.0, 2.0, 3.0, 1.0, 2.0, 3.0;
  const DomainWeights weights = chameleon_weights(embeddings, 1.0);
  REQUIRE_THAT(weights.weights[0], Catch::Matchers::WithinAbs(0.5, 1e-12));
  REQUIRE_THAT(weights.weights[1], Catch::Matchers::WithinAbs(0.5, 1e-12));

  Eigen::MatrixXd single(1, 2);
  single << 0.3, 0.7;
  REQUIRE(chameleon_weights(single, 1.0).weights == std::vector<double>{1.0});
}

TEST_CASE("domain weights sum to one and permute with the clusters") {
  rng::Engine engine(17);
  Eigen::MatrixXd embeddings(5, 4);
  for (Eigen::Index i = 0; i < 5; ++i)
    for (Eigen::Index j = 0; j < 4; ++j) embeddings(i, j) = engine.gaussian();
  const DomainWeights weights = chameleon_weights(embeddings, 1.0);
  weights.validate();

  Eigen::MatrixXd swapped = embeddings;
  swapped.row(0) = embeddings.row(3);
  swapped.row(3) = embeddings.row(0);
  const DomainWeights permuted = chameleon_weights(swapped, 1.0);
  REQUIRE_THAT(permuted.weights[0], Catch::Matchers::WithinAbs(weights.weights[3], 1e-12));
  REQUIRE_THAT(permuted.weights[3], Catch::Matchers::WithinAbs(weights.weights[0], 1e-12));
  REQUIRE_THAT(permuted.weights[1], Catch::Matchers::WithinAbs(weights.weights[1], 1e-12));
}

TEST_CASE("weights follow the reciprocal-score softmax") {
  const DomainScoreFn fixed = [](const Eigen::MatrixXd&, double) {
    return std::vector<double>{0.25, 0.75};
  };
  const DomainWeights weights = chameleon_weights(Eigen::MatrixXd::Zero(2, 2), 1.0, fixed);
  const double gap = std::exp(4.0 / 3.0 - 4.0);  // exp(1/0.75 - 1/0.25)
  REQUIRE_THAT(weights.weights[0], Catch::Matchers::WithinAbs(1.0 / (1.0 + gap), 1e-12));
  REQUIRE_THAT(weights.weights[1], Catch::Matchers::WithinAbs(gap / (1.0 + gap), 1e-12));
}

TEST_CASE("quotas apportion by largest remainder") {
  DomainWeights weights;
  weights.weights = {0.75, 0.25};
  REQUIRE(chameleon_quotas(weights, {10, 10}, 4) == std::vector<std::int64_t>{3, 1});

  weights.weights = {0.5, 0.5};
  REQUIRE(chameleon_quotas(weights, {10, 10}, 4) == std::vector<std::int64_t>{2, 2});
  // Equal remainders: the extra unit goes to the lower index.
  REQUIRE(chameleon_quotas(weights, {10, 10}, 3) == std::vector<std::int64_t>{2, 1});
}

TEST_CASE("quota overflow spills into clusters with spare capacity") {
  DomainWeights weights;
  weights.weights = {0.9, 0.1};
  REQUIRE(chameleon_quotas(weights, {5, 20}, 10) == std::vector<std::int64_t>{5, 5});
  // The whole pool fits exactly.
  REQUIRE(chameleon_quotas(weights, {5, 20}, 25) == std::vector<std::int64_t>{5, 20});
  REQUIRE_THROWS_AS(chameleon_quotas(weights, {5, 20}, 26), std::invalid_argument);
}

TEST_CASE("quotas always sum to the budget") {
  rng::Engine engine(23);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t M = 1 + engine.below(5);
    DomainWeights weights;
    std::vector<std::int64_t> sizes;
    double sum = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
      weights.weights.push_back(0.01 + engine.real01());
      sizes.push_back(static_cast<std::int64_t>(1 + engine.below(12)));
      sum += weights.weights.back();
    }
    for (double& w : weights.weights) w /= sum;
    std::int64_t total = 0;
    for (std::int64_t s : sizes) total += s;
    const auto B = static_cast<std::int64_t>(engine.below(static_cast<std::uint64_t>(total) + 1));
    const auto quota = chameleon_quotas(weights, sizes, B);
    std::int64_t placed = 0;
    for (std::size_t i = 0; i < M; ++i) {
      REQUIRE(quota[i] >= 0);
      REQUIRE(quota[i] <= sizes[i]);
      placed += quota[i];
    }
    REQUIRE(placed == B);
  }
}

TEST_CASE("quota-driven selection is deterministic and respects quotas") {
  const std::vector<std::vector<std::string>> clusters = {
      numbered_ids("a", 6), numbered_ids("b", 6)};
  DomainWeights weights;
  weights.weights = {0.75, 0.25};
  const auto first = chameleon_select(clusters, weights, 4, 42);
  REQUIRE(first == chameleon_select(clusters, weights, 4, 42));
  REQUIRE(first.size() == 4);
  std::int64_t from_a = 0;
  for (const auto& id : first) {
    if (id[0] == 'a') ++from_a;
  }
  REQUIRE(from_a == 3);
  std::set<std::string> unique(first.begin(), first.end());
  REQUIRE(unique.size() == 4);  // no repeat draws
  REQUIRE(chameleon_select(clusters, weights, 4, 42) !=
          chameleon_select(clusters, weights, 4, 43));
}

TEST_CASE("ranked-cluster quotas take the top of each ranking") {
  RankedCluster a;
  a.cluster_id = 0;
  a.ordered_ids = {"a_best", "a_mid", "a_low", "a_worst"};
  a.scores = {0.9, 0.7, 0.5, 0.1};
  RankedCluster b;
  b.cluster_id = 1;
  b.ordered_ids = {"b_best", "b_mid"};
  b.scores = {0.8, 0.2};
  DomainWeights weights;
  weights.weights = {0.75, 0.25};
  REQUIRE(chameleon_select({a, b}, weights, 4) ==
          std::vector<std::string>{"a_best", "a_mid", "a_low", "b_best"});
}
