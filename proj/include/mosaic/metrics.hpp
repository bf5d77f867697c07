#pragma once

// Rule-compliance utility aggregation and the sample-efficiency metrics
// built on top of it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mosaic {

/// The nine rule-compliance subscores, each in [0, 1].
struct MetricVector {
  double nc = 1.0;   ///< no collision
  double dac = 1.0;  ///< drivable area compliance
  double ddc = 1.0;  ///< driving direction compliance
  double tlc = 1.0;  ///< traffic light compliance
  double ep = 1.0;   ///< ego progress
  double ttc = 1.0;  ///< time to collision
  double lk = 1.0;   ///< lane keeping
  double hc = 1.0;   ///< history comfort
  double ec = 1.0;   ///< extended comfort

  static constexpr const char* key_names[9] = {"NC", "DAC", "DDC", "TLC",
                                               "EP", "TTC", "LK",  "HC", "EC"};

  double get(std::string_view key) const {
    if (key == "NC") return nc;
    if (key == "DAC") return dac;
    if (key == "DDC") return ddc;
    if (key == "TLC") return tlc;
    if (key == "EP") return ep;
    if (key == "TTC") return ttc;
    if (key == "LK") return lk;
    if (key == "HC") return hc;
    if (key == "EC") return ec;
    throw std::invalid_argument("unknown metric key: " + std::string(key));
  }

  void set(std::string_view key, double value) {
    if (key == "NC") nc = value;
    else if (key == "DAC") dac = value;
    else if (key == "DDC") ddc = value;
    else if (key == "TLC") tlc = value;
    else if (key == "EP") ep = value;
    else if (key == "TTC") ttc = value;
    else if (key == "LK") lk = value;
    else if (key == "HC") hc = value;
    else if (key == "EC") ec = value;
    else throw std::invalid_argument("unknown metric key: " + std::string(key));
  }
};

/// Which subscores multiply, which average, and the averaging weights.
struct UtilityConfig {
  std::vector<std::string> penalty_keys;
  std::vector<std::string> averaged_keys;
  std::vector<double> weights;

  /// Penalties {NC, DAC, DDC, TLC}; averaged {EP, TTC, LK, HC, EC} with
  /// weights {5, 5, 2, 2, 2}.
  static UtilityConfig standard() {
    UtilityConfig cfg;
    cfg.penalty_keys = {"NC", "DAC", "DDC", "TLC"};
    cfg.averaged_keys = {"EP", "TTC", "LK", "HC", "EC"};
    cfg.weights = {5.0, 5.0, 2.0, 2.0, 2.0};
    return cfg;
  }

  void validate() const {
    if (averaged_keys.size() != weights.size())
      throw std::invalid_argument("utility config: weights must align with averaged keys");
    for (double w : weights)
      if (!(w > 0.0)) throw std::invalid_argument("utility config: weights must be positive");
    for (const auto& k : penalty_keys)
      for (const auto& a : averaged_keys)
        if (k == a)
          throw std::invalid_argument("utility config: key '" + k +
                                      "' appears in both penalty and averaged sets");
  }
};

/// Product of penalty subscores times the weighted average of the rest.
inline double epdms(const MetricVector& m, const UtilityConfig& cfg = UtilityConfig::standard()) {
  cfg.validate();
  auto checked = [&](const std::string& key) {
    const double v = m.get(key);
    if (!(v >= 0.0 && v <= 1.0))
      throw std::out_of_range("subscore " + key + " outside [0, 1]");
    return v;
  };
  double product = 1.0;
  for (const auto& key : cfg.penalty_keys) product *= checked(key);
  double weighted_sum = 0.0;
  double weight_total = 0.0;
  for (std::size_t i = 0; i < cfg.averaged_keys.size(); ++i) {
    weighted_sum += cfg.weights[i] * checked(cfg.averaged_keys[i]);
    weight_total += cfg.weights[i];
  }
  if (weight_total == 0.0) return 0.0;
  return product * (weighted_sum / weight_total);
}

/// Arithmetic mean of per-sample scores. Deliberately not the score of the
/// mean subscores; the two differ whenever penalties vary across samples.
inline double mean_epdms(const std::vector<MetricVector>& samples,
                         const UtilityConfig& cfg = UtilityConfig::standard()) {
  if (samples.empty()) throw std::invalid_argument("mean_epdms: empty sample list");
  double sum = 0.0;
  for (const auto& m : samples) sum += epdms(m, cfg);
  return sum / static_cast<double>(samples.size());
}

/// Per-sample importance: the utility of the base model on that sample.
inline double importance(const MetricVector& sample_metrics,
                         const UtilityConfig& cfg = UtilityConfig::standard()) {
  return epdms(sample_metrics, cfg);
}

/// Utility as a function of selection budget, sampled at increasing budgets.
struct BudgetCurve {
  std::vector<std::pair<std::int64_t, double>> points;

  void validate() const {
    if (points.empty()) throw std::invalid_argument("budget curve: no points");
    for (std::size_t i = 1; i < points.size(); ++i)
      if (points[i].first <= points[i - 1].first)
        throw std::invalid_argument("budget curve: budgets must be strictly increasing");
  }

  /// Piecewise-linear utility at budget b; b must lie within the span.
  double utility_at(double b) const {
    validate();
    if (b < static_cast<double>(points.front().first) ||
        b > static_cast<double>(points.back().first))
      throw std::invalid_argument("budget curve: budget outside curve span");
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
      const double b0 = static_cast<double>(points[i].first);
      const double b1 = static_cast<double>(points[i + 1].first);
      if (b <= b1) {
        const double t = (b - b0) / (b1 - b0);
        return points[i].second + t * (points[i + 1].second - points[i].second);
      }
    }
    return points.back().second;
  }
};

/// Budget at which a method first reaches `target`, interpolating linearly
/// between adjacent points. Returns nullopt if the curve never attains it.
inline std::optional<double> first_budget_reaching(const BudgetCurve& curve, double target) {
  curve.validate();
  const auto& pts = curve.points;
  if (pts.front().second >= target) return static_cast<double>(pts.front().first);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i].second >= target) {
      const double b0 = static_cast<double>(pts[i - 1].first);
      const double b1 = static_cast<double>(pts[i].first);
      const double u0 = pts[i - 1].second;
      const double u1 = pts[i].second;
      return b0 + (b1 - b0) * (target - u0) / (u1 - u0);
    }
  }
  return std::nullopt;
}

/// Budget Ratio to Match Random: B_k / B where B_k is the smallest method
/// budget matching the random curve's utility at B. nullopt = unreachable.
inline std::optional<double> brmr(const BudgetCurve& method, const BudgetCurve& random,
                                  std::int64_t budget) {
  const double target = random.utility_at(static_cast<double>(budget));
  const auto matched = first_budget_reaching(method, target);
  if (!matched) return std::nullopt;
  return *matched / static_cast<double>(budget);
}

namespace detail {

inline void require_same_id_set(const std::vector<std::string>& a,
                                const std::vector<std::string>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("kendall_tau: rankings have different sizes");
  std::vector<std::string> sa = a, sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  if (sa != sb) throw std::invalid_argument("kendall_tau: rankings cover different id sets");
}

}  // namespace detail

/// Kendall rank correlation between two orderings of the same id set.
/// (concordant - discordant) / (n(n-1)/2); O(n^2) pair counting.
inline double kendall_tau(const std::vector<std::string>& rank_a,
                          const std::vector<std::string>& rank_b) {
  detail::require_same_id_set(rank_a, rank_b);
  const std::size_t n = rank_a.size();
  if (n < 2) return 1.0;
  std::map<std::string, std::size_t> pos_b;
  for (std::size_t i = 0; i < n; ++i) pos_b[rank_b[i]] = i;
  std::int64_t concordant = 0, discordant = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      // i precedes j in rank_a by construction
      if (pos_b[rank_a[i]] < pos_b[rank_a[j]]) ++concordant;
      else ++discordant;
    }
  }
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  return static_cast<double>(concordant - discordant) / pairs;
}

/// Tie-adjusted variant (tau-b) for score maps that may contain duplicates.
/// Ids present in one map but not the other are rejected.
inline double kendall_tau_scores(const std::vector<std::pair<std::string, double>>& scores_a,
                                 const std::vector<std::pair<std::string, double>>& scores_b) {
  if (scores_a.size() != scores_b.size())
    throw std::invalid_argument("kendall_tau: score lists have different sizes");
  std::map<std::string, double> map_b;
  for (const auto& [id, s] : scores_b) map_b[id] = s;
  std::vector<std::pair<double, double>> paired;  // (score_a, score_b) per id
  paired.reserve(scores_a.size());
  for (const auto& [id, s] : scores_a) {
    const auto it = map_b.find(id);
    if (it == map_b.end())
      throw std::invalid_argument("kendall_tau: id '" + id + "' missing from second ranking");
    paired.emplace_back(s, it->second);
  }
  const std::size_t n = paired.size();
  if (n < 2) return 1.0;
  std::int64_t concordant = 0, discordant = 0, ties_a = 0, ties_b = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double da = paired[i].first - paired[j].first;
      const double db = paired[i].second - paired[j].second;
      if (da == 0.0) ++ties_a;
      if (db == 0.0) ++ties_b;
      if (da == 0.0 || db == 0.0) continue;
      if ((da > 0.0) == (db > 0.0)) ++concordant;
      else ++discordant;
    }
  }
  const double n0 = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  const double denom = std::sqrt((n0 - static_cast<double>(ties_a)) *
                                 (n0 - static_cast<double>(ties_b)));
  if (denom == 0.0) return 0.0;
  return static_cast<double>(concordant - discordant) / denom;
}

}  // namespace mosaic
