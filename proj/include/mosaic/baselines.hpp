#pragma once

// The four comparison selection strategies: seeded Random, entropy-based
// Uncertainty, greedy k-center Coreset, and Chameleon domain weighting.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mosaic/ranking.hpp"
#include "mosaic/rng.hpp"

namespace mosaic {

/// One seeded shuffle; the selection is its first B entries, so selections
/// at growing budgets nest as strict prefixes.
inline std::vector<std::string> random_select(const std::vector<std::string>& pool_ids,
                                              std::int64_t B, std::uint64_t seed = 42) {
  if (B < 0) throw std::invalid_argument("random select: negative budget");
  if (B > static_cast<std::int64_t>(pool_ids.size()))
    throw std::invalid_argument("random select: budget exceeds the pool");
  std::vector<std::string> order = pool_ids;
  rng::Engine engine(seed);
  engine.shuffle(order);
  order.resize(static_cast<std::size_t>(B));
  return order;
}

/// Per-sample, per-frame logits over a fixed candidate set.
struct LogitMatrix {
  std::vector<std::string> ids;
  std::vector<std::vector<std::vector<double>>> logits;  // sample -> frame -> candidate

  void validate() const {
    if (ids.size() != logits.size())
      throw std::invalid_argument("logits: ids must align with samples");
    if (ids.empty()) throw std::invalid_argument("logits: empty matrix");
    std::size_t K = 0;
    for (std::size_t s = 0; s < logits.size(); ++s) {
      if (logits[s].empty())
        throw std::invalid_argument("logits: sample \"" + ids[s] + "\" has no frames");
      for (const auto& frame : logits[s]) {
        if (frame.empty())
          throw std::invalid_argument("logits: empty candidate set at \"" + ids[s] + "\"");
        if (K == 0) K = frame.size();
        if (frame.size() != K)
          throw std::invalid_argument("logits: inconsistent candidate count at \"" + ids[s] + "\"");
        for (double z : frame)
          if (!std::isfinite(z))
            throw std::invalid_argument("logits: non-finite value at \"" + ids[s] + "\"");
      }
    }
  }
};

/// Softmax entropy of one frame's logits, in [0, ln K]. Max subtraction
/// keeps the exponentials in range, and entropy is invariant under it.
inline double frame_entropy(const std::vector<double>& logits) {
  if (logits.empty()) throw std::invalid_argument("entropy: empty candidate set");
  const double zmax = *std::max_element(logits.begin(), logits.end());
  double z_sum = 0.0;
  for (double z : logits) z_sum += std::exp(z - zmax);
  double entropy = 0.0;
  for (double z : logits) {
    const double p = std::exp(z - zmax) / z_sum;
    if (p > 0.0) entropy -= p * std::log(p);
  }
  return entropy;
}

/// Clip score = mean frame entropy.
inline double clip_entropy(const std::vector<std::vector<double>>& frames) {
  if (frames.empty()) throw std::invalid_argument("entropy: clip has no frames");
  double sum = 0.0;
  for (const auto& frame : frames) sum += frame_entropy(frame);
  return sum / static_cast<double>(frames.size());
}

/// Most-uncertain-first selection: rank clips by mean frame entropy,
/// descending, ties broken by id; take the top B.
inline std::vector<std::string> entropy_select(const LogitMatrix& logits, std::int64_t B) {
  logits.validate();
  if (B < 0) throw std::invalid_argument("entropy select: negative budget");
  if (B > static_cast<std::int64_t>(logits.ids.size()))
    throw std::invalid_argument("entropy select: budget exceeds the pool");
  std::vector<std::pair<double, std::string>> scored;
  scored.reserve(logits.ids.size());
  for (std::size_t s = 0; s < logits.ids.size(); ++s)
    scored.emplace_back(clip_entropy(logits.logits[s]), logits.ids[s]);
  std::sort(scored.begin(), scored.end(), [](const auto& lhs, const auto& rhs) {
    if (lhs.first != rhs.first) return lhs.first > rhs.first;
    return lhs.second < rhs.second;
  });
  std::vector<std::string> selected;
  selected.reserve(static_cast<std::size_t>(B));
  for (std::int64_t k = 0; k < B; ++k) selected.push_back(scored[static_cast<std::size_t>(k)].second);
  return selected;
}

/// Greedy k-center: repeatedly add the pool point farthest (Euclidean) from
/// everything already covered (the train set plus prior picks). Ties go to
/// the lexicographically lowest id.
inline std::vector<std::string> coreset_select(const Eigen::MatrixXd& train_features,
                                               const Eigen::MatrixXd& pool_features,
                                               const std::vector<std::string>& pool_ids,
                                               std::int64_t B) {
  if (train_features.rows() == 0) throw std::invalid_argument("coreset: empty train set");
  if (pool_features.rows() != static_cast<Eigen::Index>(pool_ids.size()))
    throw std::invalid_argument("coreset: pool ids must align with features");
  if (train_features.cols() != pool_features.cols())
    throw std::invalid_argument("coreset: feature dimension mismatch");
  if (B < 0) throw std::invalid_argument("coreset: negative budget");
  if (B > pool_features.rows()) throw std::invalid_argument("coreset: budget exceeds the pool");

  const auto n = pool_features.rows();
  std::vector<double> min_dist(static_cast<std::size_t>(n),
                               std::numeric_limits<double>::infinity());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index t = 0; t < train_features.rows(); ++t)
      min_dist[static_cast<std::size_t>(i)] =
          std::min(min_dist[static_cast<std::size_t>(i)],
                   (pool_features.row(i) - train_features.row(t)).norm());

  std::vector<bool> taken(static_cast<std::size_t>(n), false);
  std::vector<std::string> selected;
  selected.reserve(static_cast<std::size_t>(B));
  for (std::int64_t k = 0; k < B; ++k) {
    Eigen::Index best = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (taken[static_cast<std::size_t>(i)]) continue;
      if (best < 0 || min_dist[static_cast<std::size_t>(i)] > min_dist[static_cast<std::size_t>(best)] ||
          (min_dist[static_cast<std::size_t>(i)] == min_dist[static_cast<std::size_t>(best)] &&
           pool_ids[static_cast<std::size_t>(i)] < pool_ids[static_cast<std::size_t>(best)]))
        best = i;
    }
    taken[static_cast<std::size_t>(best)] = true;
    selected.push_back(pool_ids[static_cast<std::size_t>(best)]);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (taken[static_cast<std::size_t>(i)]) continue;
      min_dist[static_cast<std::size_t>(i)] =
          std::min(min_dist[static_cast<std::size_t>(i)],
                   (pool_features.row(i) - pool_features.row(best)).norm());
    }
  }
  return selected;
}

/// Largest min-distance over the pool to the covered set; the quantity the
/// greedy coreset shrinks.
inline double covering_radius(const Eigen::MatrixXd& covered, const Eigen::MatrixXd& pool) {
  if (covered.rows() == 0) throw std::invalid_argument("coreset: empty covered set");
  double radius = 0.0;
  for (Eigen::Index i = 0; i < pool.rows(); ++i) {
    double d = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < covered.rows(); ++c)
      d = std::min(d, (pool.row(i) - covered.row(c)).norm());
    radius = std::max(radius, d);
  }
  return radius;
}

struct DomainWeights {
  std::vector<double> weights;  // per cluster, non-negative, sums to 1

  void validate() const {
    double sum = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw std::invalid_argument("domain weights: negative weight");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::invalid_argument("domain weights: sum differs from 1");
  }
};

/// Kernel-ridge leverage scores diag(Omega (Omega + lambda I)^{-1}) with
/// Omega = X X^T, computed as 1 - lambda * diag((Omega + lambda I)^{-1}).
/// Each score lies in [0, 1); a zero embedding scores exactly 0.
inline std::vector<double> krls_leverage_scores(const Eigen::MatrixXd& embeddings, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("krls: lambda must be positive");
  const auto M = embeddings.rows();
  const Eigen::MatrixXd omega = embeddings * embeddings.transpose();
  const Eigen::MatrixXd regularized = omega + lambda * Eigen::MatrixXd::Identity(M, M);
  const Eigen::MatrixXd inverse = regularized.llt().solve(Eigen::MatrixXd::Identity(M, M));
  std::vector<double> scores(static_cast<std::size_t>(M));
  for (Eigen::Index i = 0; i < M; ++i) scores[static_cast<std::size_t>(i)] = 1.0 - lambda * inverse(i, i);
  return scores;
}

using DomainScoreFn = std::function<std::vector<double>(const Eigen::MatrixXd&, double)>;

/// Domain weights: softmax of reciprocal scores, so low-leverage (poorly
/// covered) domains weigh more. Zero scores dominate: their domains share
/// the mass uniformly and all others get zero.
inline DomainWeights chameleon_weights(const Eigen::MatrixXd& cluster_embeddings,
                                       double lambda = 1.0,
                                       const DomainScoreFn& score_fn = krls_leverage_scores) {
  const auto M = cluster_embeddings.rows();
  if (M < 1) throw std::invalid_argument("chameleon: need at least one cluster embedding");
  const std::vector<double> scores = score_fn(cluster_embeddings, lambda);
  if (scores.size() != static_cast<std::size_t>(M))
    throw std::invalid_argument("chameleon: score function returned wrong count");

  DomainWeights result;
  result.weights.assign(static_cast<std::size_t>(M), 0.0);
  std::vector<std::size_t> dominant;  // zero-score domains saturate the softmax
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (scores[i] <= 0.0) dominant.push_back(i);
  if (!dominant.empty()) {
    for (std::size_t i : dominant) result.weights[i] = 1.0 / static_cast<double>(dominant.size());
    return result;
  }
  std::vector<double> inv(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) inv[i] = 1.0 / scores[i];
  const double top = *std::max_element(inv.begin(), inv.end());
  double z_sum = 0.0;
  for (double v : inv) z_sum += std::exp(v - top);
  for (std::size_t i = 0; i < inv.size(); ++i) result.weights[i] = std::exp(inv[i] - top) / z_sum;
  return result;
}

namespace detail {

// Largest-remainder apportionment of `total` units by weight across the
// eligible indices; remainder ties go to the lowest index.
inline void apportion(std::int64_t total, const std::vector<double>& weights,
                      const std::vector<std::size_t>& eligible, std::vector<std::int64_t>& quota) {
  if (total <= 0 || eligible.empty()) return;
  double weight_sum = 0.0;
  for (std::size_t i : eligible) weight_sum += weights[i];
  std::vector<std::pair<double, std::size_t>> remainders;
  std::int64_t assigned = 0;
  for (std::size_t i : eligible) {
    const double share = weight_sum > 0.0
                             ? static_cast<double>(total) * weights[i] / weight_sum
                             : static_cast<double>(total) / static_cast<double>(eligible.size());
    const auto whole = static_cast<std::int64_t>(std::floor(share));
    quota[i] += whole;
    assigned += whole;
    remainders.emplace_back(share - static_cast<double>(whole), i);
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& lhs, const auto& rhs) {
    if (lhs.first != rhs.first) return lhs.first > rhs.first;
    return lhs.second < rhs.second;
  });
  for (std::int64_t k = 0; k < total - assigned; ++k)
    ++quota[remainders[static_cast<std::size_t>(k) % remainders.size()].second];
}

}  // namespace detail

/// Integer per-cluster quotas for a budget: largest-remainder apportionment
/// by weight, capped at cluster sizes, overflow re-apportioned among
/// clusters with spare capacity until the budget is placed.
inline std::vector<std::int64_t> chameleon_quotas(const DomainWeights& weights,
                                                  const std::vector<std::int64_t>& sizes,
                                                  std::int64_t B) {
  weights.validate();
  if (weights.weights.size() != sizes.size())
    throw std::invalid_argument("chameleon: weights must align with cluster sizes");
  if (B < 0) throw std::invalid_argument("chameleon: negative budget");
  std::int64_t total = 0;
  for (std::int64_t s : sizes) total += s;
  if (B > total) throw std::invalid_argument("chameleon: budget exceeds the pool");

  const std::size_t M = sizes.size();
  std::vector<std::int64_t> quota(M, 0);
  std::vector<std::size_t> eligible(M);
  for (std::size_t i = 0; i < M; ++i) eligible[i] = i;
  detail::apportion(B, weights.weights, eligible, quota);

  for (;;) {
    std::int64_t overflow = 0;
    for (std::size_t i = 0; i < M; ++i)
      if (quota[i] > sizes[i]) {
        overflow += quota[i] - sizes[i];
        quota[i] = sizes[i];
      }
    if (overflow == 0) break;
    std::vector<std::size_t> spare;
    for (std::size_t i = 0; i < M; ++i)
      if (quota[i] < sizes[i]) spare.push_back(i);
    detail::apportion(overflow, weights.weights, spare, quota);
  }
  return quota;
}

/// Fills each cluster's quota with seeded uniform draws (no replacement);
/// output is grouped by ascending cluster position.
inline std::vector<std::string> chameleon_select(const std::vector<std::vector<std::string>>& clusters,
                                                 const DomainWeights& weights, std::int64_t B,
                                                 std::uint64_t seed) {
  std::vector<std::int64_t> sizes;
  sizes.reserve(clusters.size());
  for (const auto& c : clusters) sizes.push_back(static_cast<std::int64_t>(c.size()));
  const auto quota = chameleon_quotas(weights, sizes, B);
  std::vector<std::string> selected;
  selected.reserve(static_cast<std::size_t>(B));
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    rng::Engine engine(rng::hash_combine(seed, static_cast<std::uint64_t>(i)));
    const auto picks = engine.sample_indices(clusters[i].size(), static_cast<std::size_t>(quota[i]));
    for (std::size_t p : picks) selected.push_back(clusters[i][p]);
  }
  return selected;
}

/// Ranked-cluster overload: quotas are drawn from the top of each ranking
/// instead of uniformly, preserving the within-cluster priority order.
inline std::vector<std::string> chameleon_select(const std::vector<RankedCluster>& clusters,
                                                 const DomainWeights& weights, std::int64_t B) {
  std::vector<std::int64_t> sizes;
  sizes.reserve(clusters.size());
  for (const auto& c : clusters) sizes.push_back(static_cast<std::int64_t>(c.size()));
  const auto quota = chameleon_quotas(weights, sizes, B);
  std::vector<std::string> selected;
  selected.reserve(static_cast<std::size_t>(B));
  for (std::size_t i = 0; i < clusters.size(); ++i)
    for (std::int64_t k = 0; k < quota[i]; ++k)
      selected.push_back(clusters[i].ordered_ids[static_cast<std::size_t>(k)]);
  return selected;
}

}  // namespace mosaic
