#pragma once

// File plumbing shared by the CLI: shortest round-trip float formatting,
// commented CSV with provenance headers, and codecs for the artifact's
// table formats. Doubles are printed via to_chars so a value re-read from
// disk is bit-identical to the value written.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "mosaic/allocator.hpp"
#include "mosaic/baselines.hpp"
#include "mosaic/metrics.hpp"
#include "mosaic/pool.hpp"
#include "mosaic/ranking.hpp"
#include "mosaic/scaling.hpp"

namespace mosaic::io {

constexpr int schema_version = 1;

/// Shortest decimal string that round-trips to the same double.
inline std::string fmt_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  if (res.ec != std::errc{}) throw std::runtime_error("fmt_double: conversion failed");
  return std::string(buf, res.ptr);
}

/// Fixed-point with the given number of decimals (report display format).
inline std::string fmt_fixed(double value, int decimals) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed, decimals);
  if (res.ec != std::errc{}) throw std::runtime_error("fmt_fixed: conversion failed");
  return std::string(buf, res.ptr);
}

/// mean with the std as a two-decimal suffix: "84.25±0.31".
inline std::string fmt_mean_std(double mean, double stddev) {
  return fmt_fixed(mean, 2) + "±" + fmt_fixed(stddev, 2);
}

inline double parse_double(const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("cannot parse number: \"" + text + "\"");
  }
}

inline std::int64_t parse_int(const std::string& text) {
  try {
    std::size_t used = 0;
    const std::int64_t v = std::stoll(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("cannot parse integer: \"" + text + "\"");
  }
}

struct CsvTable {
  std::vector<std::pair<std::string, std::string>> provenance;  // leading # key=value lines
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] == name) return c;
    throw std::runtime_error("csv: missing column \"" + name + "\"");
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open " + path);
  CsvTable table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) {
        std::string key = line.substr(1, eq - 1);
        while (!key.empty() && key.front() == ' ') key.erase(key.begin());
        table.provenance.emplace_back(key, line.substr(eq + 1));
      }
      continue;
    }
    if (!have_header) {
      table.header = split_csv_line(line);
      have_header = true;
    } else {
      auto fields = split_csv_line(line);
      if (fields.size() != table.header.size())
        throw std::runtime_error("csv: row width mismatch in " + path);
      table.rows.push_back(std::move(fields));
    }
  }
  if (!have_header) throw std::runtime_error("csv: no header in " + path);
  return table;
}

inline void write_csv(const std::string& path,
                      const std::vector<std::pair<std::string, std::string>>& provenance,
                      const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("csv: cannot write " + path);
  out << "# schema_version=" << schema_version << "\n";
  for (const auto& [key, value] : provenance) out << "# " << key << "=" << value << "\n";
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
    out << "\n";
  }
}

inline void write_json(const std::string& path, nlohmann::json j) {
  j["schema_version"] = schema_version;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("json: cannot write " + path);
  out << j.dump(2) << "\n";
}

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("json: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("json: " + path + ": " + e.what());
  }
  if (j.contains("schema_version") && j.at("schema_version").get<int>() > schema_version)
    throw std::runtime_error("json: " + path + " uses a newer schema");
  return j;
}

// ---- table codecs ----

/// Subscore CSV: `id` plus the nine metric columns. With percent=true the
/// values arrive as 0..100 and are divided by 100 on ingestion.
inline std::map<std::string, MetricVector> read_subscores(const std::string& path, bool percent) {
  const CsvTable table = read_csv(path);
  const std::size_t id_col = table.column("id");
  std::vector<std::size_t> metric_cols;
  for (const char* key : MetricVector::key_names) metric_cols.push_back(table.column(key));
  std::map<std::string, MetricVector> result;
  for (const auto& row : table.rows) {
    MetricVector m;
    for (std::size_t k = 0; k < 9; ++k) {
      double v = parse_double(row[metric_cols[k]]);
      if (percent) v /= 100.0;
      m.set(MetricVector::key_names[k], v);
    }
    if (!result.emplace(row[id_col], m).second)
      throw std::runtime_error("subscores: duplicate id \"" + row[id_col] + "\"");
  }
  return result;
}

inline void write_assignments(const std::string& path,
                              const std::vector<std::pair<std::string, std::int64_t>>& assignment,
                              const std::vector<std::pair<std::string, std::string>>& provenance) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(assignment.size());
  for (const auto& [id, cluster] : assignment) rows.push_back({id, std::to_string(cluster)});
  write_csv(path, provenance, {"id", "cluster_id"}, rows);
}

inline std::map<std::string, std::int64_t> read_assignments(const std::string& path) {
  const CsvTable table = read_csv(path);
  const std::size_t id_col = table.column("id");
  const std::size_t cluster_col = table.column("cluster_id");
  std::map<std::string, std::int64_t> result;
  for (const auto& row : table.rows)
    if (!result.emplace(row[id_col], parse_int(row[cluster_col])).second)
      throw std::runtime_error("assignments: duplicate id \"" + row[id_col] + "\"");
  return result;
}

inline void write_ranked(const std::string& path, const std::vector<RankedCluster>& clusters,
                         const std::vector<std::pair<std::string, std::string>>& provenance) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& rc : clusters)
    for (std::size_t r = 0; r < rc.ordered_ids.size(); ++r)
      rows.push_back({std::to_string(rc.cluster_id), std::to_string(r), rc.ordered_ids[r],
                      fmt_double(rc.scores[r])});
  write_csv(path, provenance, {"cluster_id", "rank", "id", "score"}, rows);
}

inline std::vector<RankedCluster> read_ranked(const std::string& path) {
  const CsvTable table = read_csv(path);
  const std::size_t cluster_col = table.column("cluster_id");
  const std::size_t rank_col = table.column("rank");
  const std::size_t id_col = table.column("id");
  const std::size_t score_col = table.column("score");
  std::map<std::int64_t, std::vector<std::pair<std::int64_t, std::pair<std::string, double>>>> grouped;
  for (const auto& row : table.rows)
    grouped[parse_int(row[cluster_col])].push_back(
        {parse_int(row[rank_col]), {row[id_col], parse_double(row[score_col])}});
  std::vector<RankedCluster> clusters;
  for (auto& [cluster_id, entries] : grouped) {
    std::sort(entries.begin(), entries.end(),
              [](const auto& lhs, const auto& rhs) { return lhs.first < rhs.first; });
    RankedCluster rc;
    rc.cluster_id = cluster_id;
    for (std::size_t r = 0; r < entries.size(); ++r) {
      if (entries[r].first != static_cast<std::int64_t>(r))
        throw std::runtime_error("ranked: cluster " + std::to_string(cluster_id) +
                                 " has non-contiguous ranks");
      rc.ordered_ids.push_back(entries[r].second.first);
      rc.scores.push_back(entries[r].second.second);
    }
    clusters.push_back(std::move(rc));
  }
  return clusters;
}

inline void write_pilots(const std::string& path, const std::vector<PilotObservation>& observations,
                         const std::vector<std::pair<std::string, std::string>>& provenance) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(observations.size());
  for (const auto& obs : observations)
    rows.push_back({std::to_string(obs.cluster_id), std::to_string(obs.n_added),
                    fmt_double(obs.delta_u)});
  write_csv(path, provenance, {"cluster_id", "n_added", "delta_u"}, rows);
}

inline std::vector<PilotObservation> read_pilots(const std::string& path) {
  const CsvTable table = read_csv(path);
  const std::size_t cluster_col = table.column("cluster_id");
  const std::size_t n_col = table.column("n_added");
  const std::size_t du_col = table.column("delta_u");
  std::vector<PilotObservation> observations;
  observations.reserve(table.rows.size());
  for (const auto& row : table.rows)
    observations.push_back(
        {parse_int(row[cluster_col]), parse_int(row[n_col]), parse_double(row[du_col])});
  return observations;
}

inline void write_fits(const std::string& path, const std::vector<ScalingFit>& fits,
                       const std::vector<std::pair<std::string, std::string>>& provenance) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(fits.size());
  for (const auto& f : fits)
    rows.push_back({std::to_string(f.cluster_id), fmt_double(f.a), fmt_double(f.tau),
                    fmt_double(f.residual)});
  write_csv(path, provenance, {"cluster_id", "a", "tau", "residual"}, rows);
}

inline std::vector<ScalingFit> read_fits(const std::string& path) {
  const CsvTable table = read_csv(path);
  const std::size_t cluster_col = table.column("cluster_id");
  const std::size_t a_col = table.column("a");
  const std::size_t tau_col = table.column("tau");
  const std::size_t res_col = table.column("residual");
  std::vector<ScalingFit> fits;
  fits.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    ScalingFit f;
    f.cluster_id = parse_int(row[cluster_col]);
    f.a = parse_double(row[a_col]);
    f.tau = parse_double(row[tau_col]);
    f.residual = parse_double(row[res_col]);
    fits.push_back(f);
  }
  return fits;
}

inline void write_trace(const std::string& path, const std::vector<TraceEntry>& trace,
                        const std::vector<std::pair<std::string, std::string>>& provenance) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(trace.size());
  for (const auto& t : trace)
    rows.push_back({std::to_string(t.iteration), std::to_string(t.cluster_id), fmt_double(t.delta)});
  write_csv(path, provenance, {"iteration", "cluster_id", "delta"}, rows);
}

/// Logit CSV: `id,frame,logit_0..logit_{K-1}`; frames of one id grouped by
/// increasing frame index.
inline LogitMatrix read_logits(const std::string& path) {
  const CsvTable table = read_csv(path);
  const std::size_t id_col = table.column("id");
  const std::size_t frame_col = table.column("frame");
  std::vector<std::size_t> logit_cols;
  for (std::size_t c = 0; c < table.header.size(); ++c)
    if (table.header[c].rfind("logit_", 0) == 0) logit_cols.push_back(c);
  if (logit_cols.empty()) throw std::runtime_error("logits: no logit_* columns");

  std::map<std::string, std::vector<std::pair<std::int64_t, std::vector<double>>>> grouped;
  std::vector<std::string> id_order;
  for (const auto& row : table.rows) {
    auto& frames = grouped[row[id_col]];
    if (frames.empty()) id_order.push_back(row[id_col]);
    std::vector<double> z;
    z.reserve(logit_cols.size());
    for (std::size_t c : logit_cols) z.push_back(parse_double(row[c]));
    frames.emplace_back(parse_int(row[frame_col]), std::move(z));
  }
  LogitMatrix matrix;
  for (const auto& id : id_order) {
    auto& frames = grouped[id];
    std::sort(frames.begin(), frames.end(),
              [](const auto& lhs, const auto& rhs) { return lhs.first < rhs.first; });
    matrix.ids.push_back(id);
    std::vector<std::vector<double>> per_frame;
    per_frame.reserve(frames.size());
    for (auto& [frame, z] : frames) per_frame.push_back(std::move(z));
    matrix.logits.push_back(std::move(per_frame));
  }
  matrix.validate();
  return matrix;
}

inline void write_selection(const std::string& path, const std::vector<std::string>& selected,
                            const std::vector<std::pair<std::int64_t, std::int64_t>>& counts,
                            const nlohmann::json& provenance) {
  nlohmann::json j;
  j["selected_ids"] = selected;
  nlohmann::json counts_json = nlohmann::json::array();
  for (const auto& [cluster, count] : counts)
    counts_json.push_back({{"cluster_id", cluster}, {"count", count}});
  j["cluster_counts"] = counts_json;
  j["provenance"] = provenance;
  write_json(path, std::move(j));
}

}  // namespace mosaic::io
