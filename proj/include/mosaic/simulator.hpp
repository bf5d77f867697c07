#pragma once

// Synthetic ground-truth oracle. Pools generated here have a known utility
// surface (per-cluster saturating curves plus optional pairwise
// interactions and seeded evaluation noise), so end-to-end selection
// quality can be checked exactly, without any training.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mosaic/allocator.hpp"
#include "mosaic/baselines.hpp"
#include "mosaic/metrics.hpp"
#include "mosaic/ranking.hpp"
#include "mosaic/rng.hpp"
#include "mosaic/scaling.hpp"

namespace mosaic {

struct SyntheticPoolSpec {
  std::int64_t M = 0;                       // cluster count
  std::vector<double> a_true;               // per-cluster asymptotic gains
  std::vector<double> tau_true;             // per-cluster saturation scales
  std::vector<std::int64_t> pool_sizes;     // per-cluster sample counts
  double noise_sigma = 0.0;                 // evaluation noise scale
  std::optional<Eigen::MatrixXd> interaction;  // symmetric, zero diagonal
  double base_utility = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (M < 1) throw std::invalid_argument("pool spec: M must be positive");
    const auto m = static_cast<std::size_t>(M);
    if (a_true.size() != m || tau_true.size() != m || pool_sizes.size() != m)
      throw std::invalid_argument("pool spec: per-cluster arrays must have M entries");
    for (double t : tau_true)
      if (!(t > 0.0)) throw std::invalid_argument("pool spec: tau must be positive");
    for (std::int64_t s : pool_sizes)
      if (s < 1) throw std::invalid_argument("pool spec: pool sizes must be positive");
    if (!(noise_sigma >= 0.0)) throw std::invalid_argument("pool spec: negative noise");
    if (interaction) {
      if (interaction->rows() != M || interaction->cols() != M)
        throw std::invalid_argument("pool spec: interaction matrix must be M x M");
      for (std::int64_t i = 0; i < M; ++i) {
        if ((*interaction)(i, i) != 0.0)
          throw std::invalid_argument("pool spec: interaction diagonal must be zero");
        for (std::int64_t j = 0; j < M; ++j)
          if ((*interaction)(i, j) != (*interaction)(j, i))
            throw std::invalid_argument("pool spec: interaction matrix must be symmetric");
      }
    }
  }
};

namespace detail {

inline void check_counts(const SyntheticPoolSpec& spec, const std::vector<std::int64_t>& counts) {
  if (counts.size() != static_cast<std::size_t>(spec.M))
    throw std::invalid_argument("simulator: counts must have M entries");
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < 0) throw std::invalid_argument("simulator: negative count");
    if (counts[i] > spec.pool_sizes[i])
      throw std::invalid_argument("simulator: count exceeds pool size for cluster " +
                                  std::to_string(i));
  }
}

// Saturation level of cluster i at n samples; exactly 0 at n = 0.
inline double saturation(const SyntheticPoolSpec& spec, std::size_t i, std::int64_t n) {
  return -std::expm1(-static_cast<double>(n) / spec.tau_true[i]);
}

}  // namespace detail

/// Utility surface without noise: base plus separable per-cluster gains
/// plus the pairwise product-of-saturations interaction. The interaction
/// vanishes whenever either cluster of a pair is empty.
inline double structural_utility(const SyntheticPoolSpec& spec,
                                 const std::vector<std::int64_t>& counts) {
  spec.validate();
  detail::check_counts(spec, counts);
  const auto m = static_cast<std::size_t>(spec.M);
  std::vector<double> g(m);
  for (std::size_t i = 0; i < m; ++i) g[i] = detail::saturation(spec, i, counts[i]);
  double u = spec.base_utility;
  for (std::size_t i = 0; i < m; ++i) u += spec.a_true[i] * g[i];
  if (spec.interaction)
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j)
        u += (*spec.interaction)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *
             g[i] * g[j];
  return u;
}

/// Noisy utility evaluation. The Gaussian noise is a pure function of
/// (spec.seed, eval_tag, counts), so a repeated evaluation of the same
/// mixture is bit-identical. eval_tag separates independent evaluation
/// contexts (e.g. per-run seeds); the default 0 is the canonical stream.
inline double true_utility(const SyntheticPoolSpec& spec, const std::vector<std::int64_t>& counts,
                           std::uint64_t eval_tag = 0) {
  const double u = structural_utility(spec, counts);
  if (spec.noise_sigma == 0.0) return u;
  std::uint64_t h = rng::hash_combine(spec.seed, eval_tag);
  for (std::int64_t c : counts) h = rng::hash_combine(h, static_cast<std::uint64_t>(c));
  rng::Engine engine(h);
  return u + spec.noise_sigma * engine.gaussian();
}

/// Pilot measurements: for each cluster and each pilot size n, the utility
/// change of adding n samples of that cluster alone on top of the base.
inline std::vector<PilotObservation> run_pilots(const SyntheticPoolSpec& spec,
                                                const std::vector<std::int64_t>& pilot_ns,
                                                std::uint64_t eval_tag = 0) {
  spec.validate();
  if (pilot_ns.empty()) throw std::invalid_argument("pilots: empty pilot design");
  std::vector<PilotObservation> observations;
  observations.reserve(pilot_ns.size() * static_cast<std::size_t>(spec.M));
  for (std::int64_t i = 0; i < spec.M; ++i) {
    for (std::int64_t n : pilot_ns) {
      if (n < 1) throw std::invalid_argument("pilots: pilot sizes must be positive");
      if (n > spec.pool_sizes[static_cast<std::size_t>(i)])
        throw std::invalid_argument("pilots: pilot size exceeds pool for cluster " +
                                    std::to_string(i));
      std::vector<std::int64_t> counts(static_cast<std::size_t>(spec.M), 0);
      counts[static_cast<std::size_t>(i)] = n;
      observations.push_back({i, n, true_utility(spec, counts, eval_tag) - spec.base_utility});
    }
  }
  return observations;
}

/// Synthetic ranked pool: ids "c<cluster>_s<index>" with per-cluster
/// importance draws, so the ranking and draw paths are exercised even
/// though the utility surface depends only on counts.
inline std::vector<RankedCluster> build_synthetic_pool(const SyntheticPoolSpec& spec) {
  spec.validate();
  std::vector<RankedCluster> ranked;
  ranked.reserve(static_cast<std::size_t>(spec.M));
  for (std::int64_t i = 0; i < spec.M; ++i) {
    rng::Engine engine(rng::hash_combine(spec.seed, 0x1000 + static_cast<std::uint64_t>(i)));
    std::vector<SampleRecord> samples;
    samples.reserve(static_cast<std::size_t>(spec.pool_sizes[static_cast<std::size_t>(i)]));
    for (std::int64_t k = 0; k < spec.pool_sizes[static_cast<std::size_t>(i)]; ++k) {
      SampleRecord s;
      s.id = "c" + std::to_string(i) + "_s" + std::to_string(k);
      s.cluster_id = i;
      s.importance = engine.real01();
      samples.push_back(std::move(s));
    }
    ranked.push_back(rank_cluster(samples, i));
  }
  return ranked;
}

struct MethodCurve {
  std::string method;
  std::vector<std::vector<double>> utilities;  // [seed index][budget index]
  std::vector<double> mean;                    // per budget
  std::vector<double> stddev;                  // population std per budget
};

/// Estimated-vs-actual gain of the greedy allocation at one budget; the
/// actual side is structural (noise-free), so the comparison isolates the
/// separability error.
struct EstimatePair {
  std::int64_t budget = 0;
  double estimated_gain = 0.0;
  double actual_gain = 0.0;
};

struct ExperimentReport {
  std::vector<std::int64_t> budgets;
  std::vector<std::uint64_t> seeds;
  std::vector<MethodCurve> curves;
  // method -> BRMR per budget against the Random mean curve (nullopt = unreachable)
  std::map<std::string, std::vector<std::optional<double>>> brmr_table;
  std::vector<ScalingFit> fits;                // fits the greedy allocator used
  std::vector<TraceEntry> mosaic_trace;        // trace at the largest budget
  std::vector<std::vector<std::int64_t>> mosaic_counts;  // per budget
  std::vector<EstimatePair> estimates;         // greedy allocations only
};

inline const std::vector<std::string>& simulator_methods() {
  static const std::vector<std::string> methods = {"random", "mosaic", "oracle"};
  return methods;
}

/// Full experiment: selection per (method, budget), noisy evaluation per
/// seed, mean/std aggregation, and BRMR of every method against Random.
/// Every step is a pure function of the inputs, so reports are
/// byte-identical across reruns.
inline ExperimentReport run_experiment(const SyntheticPoolSpec& spec,
                                       const std::vector<std::string>& methods,
                                       const std::vector<std::int64_t>& budgets,
                                       const std::vector<std::uint64_t>& seeds,
                                       const std::vector<std::int64_t>& pilot_ns = {100, 200}) {
  spec.validate();
  if (methods.empty()) throw std::invalid_argument("experiment: no methods");
  if (budgets.empty()) throw std::invalid_argument("experiment: no budgets");
  if (seeds.empty()) throw std::invalid_argument("experiment: no seeds");
  for (std::size_t b = 1; b < budgets.size(); ++b)
    if (budgets[b] <= budgets[b - 1])
      throw std::invalid_argument("experiment: budgets must be strictly increasing");
  std::int64_t total = 0;
  for (std::int64_t s : spec.pool_sizes) total += s;
  if (budgets.back() > total) throw std::invalid_argument("experiment: budget exceeds the pool");
  for (const auto& method : methods) {
    const auto& known = simulator_methods();
    if (std::find(known.begin(), known.end(), method) == known.end())
      throw std::invalid_argument("experiment: unknown strategy \"" + method + "\"");
  }

  ExperimentReport report;
  report.budgets = budgets;
  report.seeds = seeds;

  // Shared scaffolding: the ranked pool, id->cluster map, pilot fits.
  const auto ranked = build_synthetic_pool(spec);
  std::map<std::string, std::size_t> cluster_of;
  std::vector<std::string> all_ids;
  for (std::size_t i = 0; i < ranked.size(); ++i)
    for (const auto& id : ranked[i].ordered_ids) {
      cluster_of[id] = i;
      all_ids.push_back(id);
    }
  const bool needs_fits =
      std::find(methods.begin(), methods.end(), "mosaic") != methods.end() ||
      std::find(methods.begin(), methods.end(), "oracle") != methods.end();
  if (needs_fits) report.fits = fit_all_clusters(run_pilots(spec, pilot_ns));

  auto counts_of_ids = [&](const std::vector<std::string>& ids) {
    std::vector<std::int64_t> counts(static_cast<std::size_t>(spec.M), 0);
    for (const auto& id : ids) ++counts[cluster_of.at(id)];
    return counts;
  };

  for (const auto& method : methods) {
    MethodCurve curve;
    curve.method = method;

    // Selection depends on the method (and the seed, for random); the
    // noisy evaluation is tagged with the run seed in every case.
    std::vector<std::vector<std::int64_t>> counts_per_budget;
    if (method == "mosaic") {
      for (std::int64_t B : budgets) {
        auto state = mosaic_select(ranked, report.fits, B);
        counts_per_budget.push_back(state.counts);
        report.mosaic_counts.push_back(state.counts);
        report.estimates.push_back({B, estimated_mixture_utility(report.fits, state.counts),
                                    structural_utility(spec, state.counts) - spec.base_utility});
        if (B == budgets.back()) report.mosaic_trace = std::move(state.trace);
      }
    } else if (method == "oracle") {
      for (std::int64_t B : budgets)
        counts_per_budget.push_back(exhaustive_optimum(report.fits, spec.pool_sizes, B).counts);
    }

    for (std::uint64_t seed : seeds) {
      std::vector<double> row;
      row.reserve(budgets.size());
      for (std::size_t b = 0; b < budgets.size(); ++b) {
        std::vector<std::int64_t> counts;
        if (method == "random")
          counts = counts_of_ids(random_select(all_ids, budgets[b], seed));
        else
          counts = counts_per_budget[b];
        row.push_back(true_utility(spec, counts, seed));
      }
      curve.utilities.push_back(std::move(row));
    }

    curve.mean.assign(budgets.size(), 0.0);
    curve.stddev.assign(budgets.size(), 0.0);
    for (std::size_t b = 0; b < budgets.size(); ++b) {
      double sum = 0.0;
      for (const auto& row : curve.utilities) sum += row[b];
      curve.mean[b] = sum / static_cast<double>(seeds.size());
      double var = 0.0;
      for (const auto& row : curve.utilities) {
        const double d = row[b] - curve.mean[b];
        var += d * d;
      }
      curve.stddev[b] = std::sqrt(var / static_cast<double>(seeds.size()));
    }
    report.curves.push_back(std::move(curve));
  }

  // BRMR of every mean curve against the Random mean curve, when present.
  const MethodCurve* random_curve = nullptr;
  for (const auto& c : report.curves)
    if (c.method == "random") random_curve = &c;
  if (random_curve) {
    BudgetCurve random_budget_curve;
    for (std::size_t b = 0; b < budgets.size(); ++b)
      random_budget_curve.points.emplace_back(budgets[b], random_curve->mean[b]);
    for (const auto& c : report.curves) {
      BudgetCurve method_curve;
      for (std::size_t b = 0; b < budgets.size(); ++b)
        method_curve.points.emplace_back(budgets[b], c.mean[b]);
      std::vector<std::optional<double>> row;
      row.reserve(budgets.size());
      for (std::int64_t B : budgets) row.push_back(brmr(method_curve, random_budget_curve, B));
      report.brmr_table[c.method] = std::move(row);
    }
  }
  return report;
}

}  // namespace mosaic
