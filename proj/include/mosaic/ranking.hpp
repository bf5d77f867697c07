#pragma once

// Within-cluster sample ordering. Budget draws walk this order, so the sort
// must be fully deterministic: score first, then id as the tie-break.

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mosaic/pool.hpp"

namespace mosaic {

/// Ascending puts the lowest-scoring (hardest) samples first, which is the
/// default selection order; descending is exposed as a knob.
enum class RankDirection { ascending, descending };

inline RankDirection parse_direction(const std::string& name) {
  if (name == "ascending") return RankDirection::ascending;
  if (name == "descending") return RankDirection::descending;
  throw std::invalid_argument("ranking: unknown direction '" + name + "'");
}

struct RankedCluster {
  std::int64_t cluster_id = 0;
  std::vector<std::string> ordered_ids;
  std::vector<double> scores;  // aligned with ordered_ids

  std::size_t size() const { return ordered_ids.size(); }
};

/// Sorts one cluster's samples by importance. Every sample must carry an
/// importance value; ties are broken by id so reruns agree byte for byte.
inline RankedCluster rank_cluster(const std::vector<SampleRecord>& samples,
                                  std::int64_t cluster_id,
                                  RankDirection direction = RankDirection::ascending) {
  std::vector<std::pair<double, std::string>> keyed;
  keyed.reserve(samples.size());
  for (const auto& s : samples) {
    if (!s.importance)
      throw std::invalid_argument("ranking: sample \"" + s.id + "\" has no importance value");
    keyed.emplace_back(*s.importance, s.id);
  }
  std::sort(keyed.begin(), keyed.end(), [direction](const auto& lhs, const auto& rhs) {
    if (lhs.first != rhs.first)
      return direction == RankDirection::ascending ? lhs.first < rhs.first : lhs.first > rhs.first;
    return lhs.second < rhs.second;
  });
  RankedCluster ranked;
  ranked.cluster_id = cluster_id;
  ranked.ordered_ids.reserve(keyed.size());
  ranked.scores.reserve(keyed.size());
  for (auto& [score, id] : keyed) {
    ranked.ordered_ids.push_back(std::move(id));
    ranked.scores.push_back(score);
  }
  return ranked;
}

/// The (b+1)-th sample in priority order. b past the end signals exhaustion.
inline const std::string& return_sample(const RankedCluster& ranked, std::size_t b) {
  if (b >= ranked.ordered_ids.size())
    throw std::out_of_range("ranking: cluster " + std::to_string(ranked.cluster_id) +
                            " exhausted at draw " + std::to_string(b));
  return ranked.ordered_ids[b];
}

}  // namespace mosaic
