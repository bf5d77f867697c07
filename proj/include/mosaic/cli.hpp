#pragma once

// Subcommand implementations behind the command-line tool. Each command is
// a function of a resolved parameter object (config file overlaid by
// flags), writes its outputs under an output directory, and records the
// resolved parameters in a run record for provenance. No command reads
// ambient entropy; every random path takes an explicit seed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include <Eigen/Dense>

#include "mosaic/allocator.hpp"
#include "mosaic/baselines.hpp"
#include "mosaic/clustering.hpp"
#include "mosaic/io.hpp"
#include "mosaic/metrics.hpp"
#include "mosaic/pool.hpp"
#include "mosaic/ranking.hpp"
#include "mosaic/scaling.hpp"
#include "mosaic/simulator.hpp"
#include "mosaic/stopwords.hpp"

namespace mosaic::cli {

struct Invocation {
  nlohmann::json params;           // config file contents overlaid by explicit flags
  std::filesystem::path out_dir = ".";
};

namespace detail {

inline std::string require_str(const nlohmann::json& params, const std::string& key) {
  if (!params.contains(key))
    throw std::invalid_argument("missing required parameter \"" + key + "\"");
  return params.at(key).get<std::string>();
}

inline std::int64_t require_int(const nlohmann::json& params, const std::string& key) {
  if (!params.contains(key))
    throw std::invalid_argument("missing required parameter \"" + key + "\"");
  return params.at(key).get<std::int64_t>();
}

inline std::filesystem::path out_path(const Invocation& inv, const std::string& name) {
  std::filesystem::create_directories(inv.out_dir);
  return inv.out_dir / name;
}

inline void write_run_record(const Invocation& inv, const std::string& command) {
  nlohmann::json j;
  j["command"] = command;
  j["params"] = inv.params;
  io::write_json(out_path(inv, "run_" + command + ".json").string(), std::move(j));
}

inline std::vector<std::pair<std::string, std::string>> provenance_of(
    const nlohmann::json& params, const std::string& command) {
  std::vector<std::pair<std::string, std::string>> prov;
  prov.emplace_back("command", command);
  for (const auto& [key, value] : params.items())
    prov.emplace_back(key, value.is_string() ? value.get<std::string>() : value.dump());
  return prov;
}

inline Eigen::MatrixXd feature_matrix(const PoolManifest& manifest,
                                      std::vector<std::string>* ids_out) {
  std::size_t dim = 0;
  for (const auto& s : manifest.samples)
    if (s.feature) {
      dim = s.feature->size();
      break;
    }
  if (dim == 0) throw std::invalid_argument("manifest has no feature vectors (field \"feature\")");
  Eigen::MatrixXd features(static_cast<Eigen::Index>(manifest.samples.size()),
                           static_cast<Eigen::Index>(dim));
  Eigen::Index row = 0;
  for (const auto& s : manifest.samples) {
    if (!s.feature)
      throw std::invalid_argument("sample \"" + s.id + "\" is missing field \"feature\"");
    for (std::size_t c = 0; c < dim; ++c)
      features(row, static_cast<Eigen::Index>(c)) = (*s.feature)[c];
    if (ids_out) ids_out->push_back(s.id);
    ++row;
  }
  return features;
}

}  // namespace detail

/// ingest: validate a manifest, optionally merge a subscore table and
/// compute per-sample importance, optionally segment session logs into
/// virtual clips. Writes pool.jsonl (+ clips.csv when sessions are given).
inline int cmd_ingest(const Invocation& inv) {
  const auto& p = inv.params;
  PoolManifest manifest = load_manifest(detail::require_str(p, "manifest"));

  if (p.contains("subscores")) {
    const bool percent = p.value("percent", false);
    const auto subscores = io::read_subscores(p.at("subscores").get<std::string>(), percent);
    std::set<std::string> matched;
    for (auto& s : manifest.samples) {
      const auto it = subscores.find(s.id);
      if (it != subscores.end()) {
        s.metrics = it->second;
        matched.insert(s.id);
      }
    }
    for (const auto& [id, m] : subscores)
      if (!matched.count(id))
        throw std::invalid_argument("subscores: id \"" + id + "\" not present in the manifest");
  }

  const UtilityConfig cfg = UtilityConfig::standard();
  for (auto& s : manifest.samples)
    if (s.metrics) s.importance = importance(*s.metrics, cfg);
  manifest.validate();
  save_manifest(manifest, detail::out_path(inv, "pool.jsonl").string());

  if (p.contains("sessions")) {
    const double clip_seconds = p.value("clip_seconds", 10.0);
    const auto logs = load_sessions(p.at("sessions").get<std::string>());
    std::vector<std::vector<std::string>> rows;
    std::int64_t discarded_total = 0;
    for (const auto& log : logs) {
      const auto clips = segment_virtual_clips(log, clip_seconds);
      std::int64_t kept = 0;
      for (const auto& clip : clips) {
        rows.push_back({clip.session_id, std::to_string(clip.start_frame),
                        std::to_string(clip.end_frame)});
        kept += clip.end_frame - clip.start_frame;
      }
      discarded_total += log.frame_count - kept;
    }
    auto prov = detail::provenance_of(p, "ingest");
    prov.emplace_back("discarded_frames", std::to_string(discarded_total));
    io::write_csv(detail::out_path(inv, "clips.csv").string(), prov,
                  {"session_id", "start_frame", "end_frame"}, rows);
  }
  detail::write_run_record(inv, "ingest");
  return 0;
}

/// cluster: partition the pool. `by` selects the source: "metadata"
/// (pass-through of manifest cluster ids), "kmeans" (feature vectors), or
/// "tfidf" (caption text featurized, then k-means).
inline int cmd_cluster(const Invocation& inv) {
  const auto& p = inv.params;
  const PoolManifest manifest = load_manifest(detail::require_str(p, "manifest"));
  const std::string by = p.value("by", std::string("kmeans"));

  std::vector<std::pair<std::string, std::int64_t>> assignment;
  auto prov = detail::provenance_of(p, "cluster");

  if (by == "metadata") {
    for (const auto& s : manifest.samples) {
      if (!s.cluster_id)
        throw std::invalid_argument("sample \"" + s.id + "\" is missing field \"cluster_id\"");
      assignment.emplace_back(s.id, *s.cluster_id);
    }
  } else if (by == "kmeans" || by == "tfidf") {
    const auto M = static_cast<int>(detail::require_int(p, "M"));
    const auto seed = static_cast<std::uint64_t>(p.value("seed", 0));
    const int max_iters = static_cast<int>(p.value("max_iters", 100));

    std::vector<std::string> ids;
    Eigen::MatrixXd features;
    if (by == "kmeans") {
      features = detail::feature_matrix(manifest, &ids);
    } else {
      std::vector<std::string> captions;
      for (const auto& s : manifest.samples) {
        if (!s.caption)
          throw std::invalid_argument("sample \"" + s.id + "\" is missing field \"caption\"");
        captions.push_back(*s.caption);
        ids.push_back(s.id);
      }
      const auto vocab_size = p.value("vocab_size", std::int64_t{1024});
      auto stop_words = default_stop_words();
      if (p.contains("stop_words"))
        stop_words = load_stop_words(p.at("stop_words").get<std::string>());
      auto [vocab, matrix] = tfidf_features(captions, vocab_size, stop_words);
      features = std::move(matrix);
      prov.emplace_back("vocab_terms", std::to_string(vocab.terms.size()));
    }
    const ClusterModel model = kmeans(features, ids, M, seed, max_iters);
    for (const auto& id : ids)
      assignment.emplace_back(id, model.assignment.at(id));
    prov.emplace_back("inertia", io::fmt_double(model.inertia));
    prov.emplace_back("iterations", std::to_string(model.iterations));
    prov.emplace_back("converged", model.converged ? "true" : "false");
  } else {
    throw std::invalid_argument("unknown clustering source \"" + by + "\"");
  }

  io::write_assignments(detail::out_path(inv, "assignments.csv").string(), assignment, prov);
  detail::write_run_record(inv, "cluster");
  return 0;
}

/// rank: order each cluster's samples by importance. Cluster membership
/// comes from an assignments CSV or from the manifest; importance comes
/// from the manifest or is computed from per-sample metrics.
inline int cmd_rank(const Invocation& inv) {
  const auto& p = inv.params;
  PoolManifest manifest = load_manifest(detail::require_str(p, "manifest"));
  const RankDirection direction = parse_direction(p.value("direction", std::string("ascending")));

  std::map<std::string, std::int64_t> cluster_of;
  if (p.contains("assignments")) {
    cluster_of = io::read_assignments(p.at("assignments").get<std::string>());
  } else {
    for (const auto& s : manifest.samples) {
      if (!s.cluster_id)
        throw std::invalid_argument("sample \"" + s.id + "\" is missing field \"cluster_id\"");
      cluster_of[s.id] = *s.cluster_id;
    }
  }

  const UtilityConfig cfg = UtilityConfig::standard();
  std::map<std::int64_t, std::vector<SampleRecord>> grouped;
  for (auto& s : manifest.samples) {
    if (!s.importance) {
      if (!s.metrics)
        throw std::invalid_argument("sample \"" + s.id +
                                    "\" has neither importance nor metrics to rank by");
      s.importance = importance(*s.metrics, cfg);
    }
    const auto it = cluster_of.find(s.id);
    if (it == cluster_of.end())
      throw std::invalid_argument("sample \"" + s.id + "\" has no cluster assignment");
    grouped[it->second].push_back(s);
  }

  std::vector<RankedCluster> ranked;
  ranked.reserve(grouped.size());
  for (const auto& [cluster_id, samples] : grouped)
    ranked.push_back(rank_cluster(samples, cluster_id, direction));
  io::write_ranked(detail::out_path(inv, "ranked.csv").string(), ranked,
                   detail::provenance_of(p, "rank"));
  detail::write_run_record(inv, "rank");
  return 0;
}

/// fit: saturating-curve fits from a pilot observation table.
inline int cmd_fit(const Invocation& inv) {
  const auto& p = inv.params;
  const auto observations = io::read_pilots(detail::require_str(p, "pilots"));
  FitOptions opts;
  opts.tau_min = p.value("tau_min", opts.tau_min);
  opts.tau_max = p.value("tau_max", opts.tau_max);
  opts.grid_points = static_cast<int>(p.value("grid_points", std::int64_t{opts.grid_points}));
  const auto fits = fit_all_clusters(observations, opts);

  io::write_fits(detail::out_path(inv, "fits.csv").string(), fits,
                 detail::provenance_of(p, "fit"));
  nlohmann::json record;
  record["command"] = "fit";
  record["params"] = p;
  nlohmann::json flags = nlohmann::json::array();
  for (const auto& f : fits)
    if (f.tau_at_bound) flags.push_back(f.cluster_id);
  record["tau_at_bound_clusters"] = flags;
  io::write_json(detail::out_path(inv, "run_fit.json").string(), std::move(record));
  return 0;
}

/// select: run one selection strategy at a budget and write the chosen ids
/// (plus the per-draw trace for the greedy allocator).
inline int cmd_select(const Invocation& inv) {
  const auto& p = inv.params;
  const std::string method = detail::require_str(p, "method");
  const std::int64_t B = detail::require_int(p, "budget");

  std::vector<std::string> selected;
  std::vector<std::pair<std::int64_t, std::int64_t>> counts;

  if (method == "mosaic") {
    const auto ranked = io::read_ranked(detail::require_str(p, "ranked"));
    const auto fits = io::read_fits(detail::require_str(p, "fits"));
    const AllocationState state = mosaic_select(ranked, fits, B);
    selected = state.selected;
    for (std::size_t i = 0; i < state.cluster_ids.size(); ++i)
      counts.emplace_back(state.cluster_ids[i], state.counts[i]);
    io::write_trace(detail::out_path(inv, "trace.csv").string(), state.trace,
                    detail::provenance_of(p, "select"));
  } else if (method == "random") {
    const PoolManifest manifest = load_manifest(detail::require_str(p, "manifest"));
    std::vector<std::string> ids;
    ids.reserve(manifest.samples.size());
    for (const auto& s : manifest.samples) ids.push_back(s.id);
    selected = random_select(ids, B, static_cast<std::uint64_t>(p.value("seed", 42)));
  } else if (method == "entropy") {
    selected = entropy_select(io::read_logits(detail::require_str(p, "logits")), B);
  } else if (method == "coreset") {
    const PoolManifest pool = load_manifest(detail::require_str(p, "manifest"));
    const PoolManifest train = load_manifest(detail::require_str(p, "train_manifest"));
    std::vector<std::string> pool_ids;
    const Eigen::MatrixXd pool_features = detail::feature_matrix(pool, &pool_ids);
    const Eigen::MatrixXd train_features = detail::feature_matrix(train, nullptr);
    selected = coreset_select(train_features, pool_features, pool_ids, B);
  } else if (method == "chameleon") {
    const PoolManifest manifest = load_manifest(detail::require_str(p, "manifest"));
    std::map<std::string, std::int64_t> cluster_of;
    if (p.contains("assignments")) {
      cluster_of = io::read_assignments(p.at("assignments").get<std::string>());
    } else {
      for (const auto& s : manifest.samples) {
        if (!s.cluster_id)
          throw std::invalid_argument("sample \"" + s.id + "\" is missing field \"cluster_id\"");
        cluster_of[s.id] = *s.cluster_id;
      }
    }
    // Cluster embedding = mean of member feature vectors.
    std::map<std::int64_t, std::vector<const SampleRecord*>> grouped;
    for (const auto& s : manifest.samples) {
      const auto it = cluster_of.find(s.id);
      if (it == cluster_of.end())
        throw std::invalid_argument("sample \"" + s.id + "\" has no cluster assignment");
      grouped[it->second].push_back(&s);
    }
    std::size_t dim = 0;
    for (const auto& s : manifest.samples)
      if (s.feature) {
        dim = s.feature->size();
        break;
      }
    if (dim == 0) throw std::invalid_argument("manifest has no feature vectors (field \"feature\")");
    Eigen::MatrixXd embeddings(static_cast<Eigen::Index>(grouped.size()),
                               static_cast<Eigen::Index>(dim));
    std::vector<std::vector<std::string>> cluster_ids_lists;
    std::vector<std::int64_t> cluster_order;
    Eigen::Index row = 0;
    for (const auto& [cluster_id, members] : grouped) {
      Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(dim));
      std::vector<std::string> ids;
      for (const auto* s : members) {
        if (!s->feature)
          throw std::invalid_argument("sample \"" + s->id + "\" is missing field \"feature\"");
        for (std::size_t c = 0; c < dim; ++c) mean(static_cast<Eigen::Index>(c)) += (*s->feature)[c];
        ids.push_back(s->id);
      }
      mean /= static_cast<double>(members.size());
      embeddings.row(row++) = mean;
      cluster_ids_lists.push_back(std::move(ids));
      cluster_order.push_back(cluster_id);
    }
    const double lambda = p.value("lambda", 1.0);
    const DomainWeights weights = chameleon_weights(embeddings, lambda);
    selected = chameleon_select(cluster_ids_lists, weights, B,
                                static_cast<std::uint64_t>(p.value("seed", 42)));
    std::map<std::int64_t, std::int64_t> tally;
    for (const std::int64_t cluster_id : cluster_order) tally[cluster_id] = 0;
    for (const auto& id : selected) ++tally[cluster_of.at(id)];
    for (const auto& [cluster_id, count] : tally) counts.emplace_back(cluster_id, count);
  } else {
    throw std::invalid_argument("unknown selection method \"" + method + "\"");
  }

  nlohmann::json prov;
  prov["command"] = "select";
  prov["params"] = p;
  io::write_selection(detail::out_path(inv, "selection.json").string(), selected, counts, prov);
  detail::write_run_record(inv, "select");
  return 0;
}

namespace detail {

inline SyntheticPoolSpec spec_from_json(const nlohmann::json& p) {
  SyntheticPoolSpec spec;
  if (!p.contains("clusters") || !p.at("clusters").is_array() || p.at("clusters").empty())
    throw std::invalid_argument("simulate: config needs a non-empty \"clusters\" array");
  for (const auto& c : p.at("clusters")) {
    spec.a_true.push_back(c.at("a").get<double>());
    spec.tau_true.push_back(c.at("tau").get<double>());
    spec.pool_sizes.push_back(c.at("size").get<std::int64_t>());
  }
  spec.M = static_cast<std::int64_t>(spec.a_true.size());
  spec.noise_sigma = p.value("noise_sigma", 0.0);
  spec.base_utility = p.value("base_utility", 0.0);
  spec.seed = static_cast<std::uint64_t>(p.value("seed", 0));
  if (p.contains("interaction")) {
    const auto& rows = p.at("interaction");
    Eigen::MatrixXd kappa(spec.M, spec.M);
    if (static_cast<std::int64_t>(rows.size()) != spec.M)
      throw std::invalid_argument("simulate: interaction matrix must be M x M");
    for (std::int64_t i = 0; i < spec.M; ++i) {
      if (static_cast<std::int64_t>(rows[static_cast<std::size_t>(i)].size()) != spec.M)
        throw std::invalid_argument("simulate: interaction matrix must be M x M");
      for (std::int64_t j = 0; j < spec.M; ++j)
        kappa(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].get<double>();
    }
    spec.interaction = std::move(kappa);
  }
  spec.validate();
  return spec;
}

}  // namespace detail

/// simulate: run the synthetic-pool experiment described by the config and
/// write the per-seed utility curves plus the allocator diagnostics.
inline int cmd_simulate(const Invocation& inv) {
  const auto& p = inv.params;
  const SyntheticPoolSpec spec = detail::spec_from_json(p);
  const auto budgets = p.at("budgets").get<std::vector<std::int64_t>>();
  const auto seeds = p.at("seeds").get<std::vector<std::uint64_t>>();
  const auto methods = p.value("methods", std::vector<std::string>{"random", "mosaic"});
  const auto pilot_ns = p.value("pilot_ns", std::vector<std::int64_t>{100, 200});

  const ExperimentReport report = run_experiment(spec, methods, budgets, seeds, pilot_ns);
  const auto prov = detail::provenance_of(p, "simulate");

  std::vector<std::vector<std::string>> curve_rows;
  for (const auto& curve : report.curves)
    for (std::size_t s = 0; s < report.seeds.size(); ++s)
      for (std::size_t b = 0; b < report.budgets.size(); ++b)
        curve_rows.push_back({curve.method, std::to_string(report.budgets[b]),
                              std::to_string(report.seeds[s]),
                              io::fmt_double(curve.utilities[s][b])});
  io::write_csv(detail::out_path(inv, "curves.csv").string(), prov,
                {"method", "budget", "seed", "utility"}, curve_rows);

  if (!report.fits.empty())
    io::write_fits(detail::out_path(inv, "fits.csv").string(), report.fits, prov);
  if (!report.mosaic_trace.empty())
    io::write_trace(detail::out_path(inv, "trace.csv").string(), report.mosaic_trace, prov);
  if (!report.estimates.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& e : report.estimates)
      rows.push_back({std::to_string(e.budget), io::fmt_double(e.estimated_gain),
                      io::fmt_double(e.actual_gain)});
    io::write_csv(detail::out_path(inv, "estimates.csv").string(), prov,
                  {"budget", "estimated_gain", "actual_gain"}, rows);
  }
  if (!report.mosaic_counts.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t b = 0; b < report.mosaic_counts.size(); ++b)
      for (std::size_t i = 0; i < report.mosaic_counts[b].size(); ++i)
        rows.push_back({std::to_string(report.budgets[b]), std::to_string(i),
                        std::to_string(report.mosaic_counts[b][i])});
    io::write_csv(detail::out_path(inv, "allocation.csv").string(), prov,
                  {"budget", "cluster_id", "count"}, rows);
  }
  detail::write_run_record(inv, "simulate");
  return 0;
}

/// report: aggregate a per-seed curve table into mean/std summaries and the
/// BRMR of every method against the Random curve.
inline int cmd_report(const Invocation& inv) {
  const auto& p = inv.params;
  const io::CsvTable table = io::read_csv(detail::require_str(p, "curves"));
  const std::size_t method_col = table.column("method");
  const std::size_t budget_col = table.column("budget");
  const std::size_t utility_col = table.column("utility");

  // method -> budget -> utilities across seeds
  std::map<std::string, std::map<std::int64_t, std::vector<double>>> grouped;
  for (const auto& row : table.rows)
    grouped[row[method_col]][io::parse_int(row[budget_col])].push_back(
        io::parse_double(row[utility_col]));
  if (grouped.empty()) throw std::invalid_argument("report: empty curve table");

  std::vector<std::int64_t> budgets;
  for (const auto& [budget, unused] : grouped.begin()->second) budgets.push_back(budget);
  for (const auto& [method, per_budget] : grouped) {
    std::vector<std::int64_t> grid;
    for (const auto& [budget, unused] : per_budget) grid.push_back(budget);
    if (grid != budgets)
      throw std::invalid_argument("report: method \"" + method +
                                  "\" does not share the common budget grid");
  }
  if (!grouped.count("random"))
    throw std::invalid_argument("report: BRMR needs a \"random\" method curve");

  std::map<std::string, std::vector<double>> means, stds;
  for (const auto& [method, per_budget] : grouped) {
    for (const auto& [budget, values] : per_budget) {
      double sum = 0.0;
      for (double v : values) sum += v;
      const double mean = sum / static_cast<double>(values.size());
      double var = 0.0;
      for (double v : values) var += (v - mean) * (v - mean);
      means[method].push_back(mean);
      stds[method].push_back(std::sqrt(var / static_cast<double>(values.size())));
    }
  }

  const auto prov = detail::provenance_of(p, "report");
  std::vector<std::vector<std::string>> summary_rows;
  for (const auto& [method, mean_row] : means)
    for (std::size_t b = 0; b < budgets.size(); ++b)
      summary_rows.push_back({method, std::to_string(budgets[b]), io::fmt_double(mean_row[b]),
                              io::fmt_double(stds[method][b]),
                              io::fmt_mean_std(mean_row[b], stds[method][b])});
  io::write_csv(detail::out_path(inv, "curve_summary.csv").string(), prov,
                {"method", "budget", "mean", "std", "display"}, summary_rows);

  BudgetCurve random_curve;
  for (std::size_t b = 0; b < budgets.size(); ++b)
    random_curve.points.emplace_back(budgets[b], means.at("random")[b]);

  std::vector<std::vector<std::string>> brmr_rows;
  nlohmann::json brmr_json = nlohmann::json::object();
  for (const auto& [method, mean_row] : means) {
    BudgetCurve method_curve;
    for (std::size_t b = 0; b < budgets.size(); ++b)
      method_curve.points.emplace_back(budgets[b], mean_row[b]);
    nlohmann::json per_budget = nlohmann::json::array();
    for (std::size_t b = 0; b < budgets.size(); ++b) {
      const auto ratio = brmr(method_curve, random_curve, budgets[b]);
      brmr_rows.push_back({method, std::to_string(budgets[b]),
                           ratio ? io::fmt_double(*ratio) : std::string("unreachable")});
      if (ratio)
        per_budget.push_back(*ratio);
      else
        per_budget.push_back("unreachable");
    }
    brmr_json[method] = std::move(per_budget);
  }
  io::write_csv(detail::out_path(inv, "brmr.csv").string(), prov, {"method", "budget", "brmr"},
                brmr_rows);

  nlohmann::json summary;
  summary["budgets"] = budgets;
  for (const auto& [method, mean_row] : means) {
    summary["curves"][method]["mean"] = mean_row;
    summary["curves"][method]["std"] = stds.at(method);
    nlohmann::json display = nlohmann::json::array();
    for (std::size_t b = 0; b < budgets.size(); ++b)
      display.push_back(io::fmt_mean_std(mean_row[b], stds.at(method)[b]));
    summary["curves"][method]["display"] = display;
  }
  summary["brmr"] = brmr_json;
  summary["provenance"] = p;
  io::write_json(detail::out_path(inv, "summary.json").string(), std::move(summary));
  detail::write_run_record(inv, "report");
  return 0;
}

}  // namespace mosaic::cli
