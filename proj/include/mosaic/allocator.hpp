#pragma once

// Budget allocation. The selection loop repeatedly draws the next sample
// from the cluster whose fitted curve promises the largest marginal gain;
// an exact bounded-knapsack oracle and a pairwise-interaction diagnostic
// verify the separable approximation it rests on.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "mosaic/ranking.hpp"
#include "mosaic/scaling.hpp"

namespace mosaic {

struct TraceEntry {
  std::int64_t iteration = 0;   // 0-based draw index
  std::int64_t cluster_id = 0;  // cluster chosen at this draw
  double delta = 0.0;           // marginal gain credited to the choice
};

struct AllocationState {
  std::vector<std::int64_t> cluster_ids;  // ascending; aligns counts
  std::vector<std::int64_t> counts;       // samples drawn per cluster
  std::vector<std::string> selected;      // draw order
  std::vector<TraceEntry> trace;          // one entry per draw
};

/// Value of a mixture under the separable approximation: sum of per-cluster
/// predicted gains at the allocated counts.
inline double estimated_mixture_utility(const std::vector<ScalingFit>& fits,
                                        const std::vector<std::int64_t>& counts) {
  if (fits.size() != counts.size())
    throw std::invalid_argument("mixture utility: counts must align with fits");
  double total = 0.0;
  for (std::size_t i = 0; i < fits.size(); ++i)
    total += predict(fits[i], static_cast<double>(counts[i]));
  return total;
}

/// Greedy selection: per draw, take one sample from the non-exhausted
/// cluster with maximal marginal gain (ties to the lowest cluster id).
/// Negative-gain clusters stay eligible; they are only chosen once every
/// better option is exhausted.
inline AllocationState mosaic_select(const std::vector<RankedCluster>& ranked,
                                     const std::vector<ScalingFit>& fits, std::int64_t B) {
  if (B < 0) throw std::invalid_argument("selection: negative budget");
  std::map<std::int64_t, const ScalingFit*> fit_of;
  for (const auto& f : fits) fit_of[f.cluster_id] = &f;

  // Clusters processed in ascending id order so argmax ties resolve low.
  std::vector<const RankedCluster*> clusters;
  clusters.reserve(ranked.size());
  for (const auto& rc : ranked) clusters.push_back(&rc);
  std::sort(clusters.begin(), clusters.end(),
            [](const RankedCluster* lhs, const RankedCluster* rhs) {
              return lhs->cluster_id < rhs->cluster_id;
            });
  for (std::size_t i = 1; i < clusters.size(); ++i)
    if (clusters[i]->cluster_id == clusters[i - 1]->cluster_id)
      throw std::invalid_argument("selection: duplicate cluster id " +
                                  std::to_string(clusters[i]->cluster_id));

  std::int64_t total = 0;
  AllocationState state;
  state.cluster_ids.reserve(clusters.size());
  state.counts.assign(clusters.size(), 0);
  for (const auto* rc : clusters) {
    if (!fit_of.count(rc->cluster_id))
      throw std::invalid_argument("selection: missing fit for cluster " +
                                  std::to_string(rc->cluster_id));
    state.cluster_ids.push_back(rc->cluster_id);
    total += static_cast<std::int64_t>(rc->size());
  }
  if (B > total) throw std::invalid_argument("selection: budget exceeds the pool");

  state.selected.reserve(static_cast<std::size_t>(B));
  state.trace.reserve(static_cast<std::size_t>(B));
  for (std::int64_t it = 0; it < B; ++it) {
    std::size_t chosen = clusters.size();
    double best_delta = 0.0;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      if (state.counts[i] >= static_cast<std::int64_t>(clusters[i]->size())) continue;
      const double delta = marginal_gain(*fit_of.at(clusters[i]->cluster_id),
                                         static_cast<double>(state.counts[i]));
      if (chosen == clusters.size() || delta > best_delta) {
        chosen = i;
        best_delta = delta;
      }
    }
    state.selected.push_back(return_sample(*clusters[chosen],
                                           static_cast<std::size_t>(state.counts[chosen])));
    state.trace.push_back({it, clusters[chosen]->cluster_id, best_delta});
    ++state.counts[chosen];
  }
  return state;
}

struct OptimalAllocation {
  std::vector<std::int64_t> counts;  // aligned with the input fits
  double objective = 0.0;
};

/// Exact maximizer of the separable objective under the budget and
/// per-cluster capacity constraints, via dynamic programming over
/// (cluster, budget). The returned objective is recomputed from the counts
/// so it is directly comparable with estimated_mixture_utility.
inline OptimalAllocation exhaustive_optimum(const std::vector<ScalingFit>& fits,
                                            const std::vector<std::int64_t>& sizes,
                                            std::int64_t B) {
  if (fits.size() != sizes.size())
    throw std::invalid_argument("optimum: sizes must align with fits");
  if (B < 0) throw std::invalid_argument("optimum: negative budget");
  std::int64_t total = 0;
  for (std::int64_t s : sizes) {
    if (s < 0) throw std::invalid_argument("optimum: negative cluster size");
    total += s;
  }
  if (B > total) throw std::invalid_argument("optimum: budget exceeds the pool");

  const std::size_t M = fits.size();
  const auto Bz = static_cast<std::size_t>(B);
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  // value[b] = best objective over processed clusters spending exactly b.
  std::vector<double> value(Bz + 1, neg_inf);
  value[0] = 0.0;
  std::vector<std::vector<std::int64_t>> choice(M, std::vector<std::int64_t>(Bz + 1, -1));
  for (std::size_t i = 0; i < M; ++i) {
    std::vector<double> next(Bz + 1, neg_inf);
    const auto cap = static_cast<std::size_t>(std::min<std::int64_t>(sizes[i], B));
    for (std::size_t b = 0; b <= Bz; ++b) {
      if (value[b] == neg_inf) continue;
      for (std::size_t n = 0; n <= cap && b + n <= Bz; ++n) {
        const double candidate = value[b] + predict(fits[i], static_cast<double>(n));
        if (candidate > next[b + n]) {
          next[b + n] = candidate;
          choice[i][b + n] = static_cast<std::int64_t>(n);
        }
      }
    }
    value = std::move(next);
  }
  if (value[Bz] == neg_inf) throw std::logic_error("optimum: infeasible despite capacity check");

  OptimalAllocation result;
  result.counts.assign(M, 0);
  std::size_t remaining = Bz;
  for (std::size_t i = M; i-- > 0;) {
    const std::int64_t n = choice[i][remaining];
    result.counts[i] = n;
    remaining -= static_cast<std::size_t>(n);
  }
  result.objective = estimated_mixture_utility(fits, result.counts);
  return result;
}

struct InteractionEstimate {
  std::int64_t i = 0;
  std::int64_t j = 0;
  double delta_u_ij = 0.0;
};

using UtilityCallback = std::function<double(const std::vector<std::string>&)>;

namespace detail {

inline std::vector<std::string> sorted_union(const std::vector<std::string>& a,
                                             const std::vector<std::string>& b,
                                             const std::vector<std::string>& c) {
  std::set<std::string> u(a.begin(), a.end());
  u.insert(b.begin(), b.end());
  u.insert(c.begin(), c.end());
  return {u.begin(), u.end()};
}

}  // namespace detail

/// Pairwise cross-cluster interaction term
/// U(base + i + j) - U(base + i) - U(base + j) + U(base), measured with four
/// callback evaluations. Zero for any additive utility; zero whenever one
/// selection is empty.
inline InteractionEstimate estimate_interaction(const UtilityCallback& evaluate,
                                                const std::vector<std::string>& base,
                                                const std::vector<std::string>& sel_i,
                                                const std::vector<std::string>& sel_j,
                                                std::int64_t i = 0, std::int64_t j = 1) {
  if (i == j) throw std::invalid_argument("interaction: cluster pair must be distinct");
  // An empty selection interacts with nothing; return exactly zero rather
  // than the rounding residue of a cancelled four-term sum.
  if (sel_i.empty() || sel_j.empty()) return {i, j, 0.0};
  const std::vector<std::string> none;
  const double u_base = evaluate(detail::sorted_union(base, none, none));
  const double u_i = evaluate(detail::sorted_union(base, sel_i, none));
  const double u_j = evaluate(detail::sorted_union(base, sel_j, none));
  const double u_ij = evaluate(detail::sorted_union(base, sel_i, sel_j));
  return {i, j, u_ij - u_i - u_j + u_base};
}

}  // namespace mosaic
