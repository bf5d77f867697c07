#pragma once

// Pool ingestion: line-delimited manifest records, session logs, and the
// fixed-length virtual-clip segmentation that turns driving logs into
// selectable samples.

#include <cstdint>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "mosaic/metrics.hpp"

namespace mosaic {

/// One pool item. Optional fields stay absent until an operation needs them;
/// consumers fail fast with a named-field error instead of imputing.
struct SampleRecord {
  std::string id;
  std::string session_id;
  std::optional<std::vector<double>> feature;
  std::optional<MetricVector> metrics;
  std::optional<std::string> caption;
  std::optional<std::int64_t> cluster_id;
  std::optional<double> importance;
};

struct SessionLog {
  std::string session_id;
  std::int64_t frame_count = 0;
  double frame_rate_hz = 0.0;
};

/// Half-open frame range [start_frame, end_frame) within one session.
struct ClipDescriptor {
  std::string session_id;
  std::int64_t start_frame = 0;
  std::int64_t end_frame = 0;
};

struct PoolManifest {
  std::vector<SampleRecord> samples;
  std::optional<std::int64_t> feature_dim;
  std::optional<std::int64_t> num_clusters;

  void validate() const {
    if (samples.empty()) throw std::invalid_argument("manifest: no samples");
    std::unordered_set<std::string> seen;
    std::optional<std::size_t> dim;
    if (feature_dim) dim = static_cast<std::size_t>(*feature_dim);
    for (const auto& s : samples) {
      if (!seen.insert(s.id).second)
        throw std::invalid_argument("manifest: duplicate id \"" + s.id + "\"");
      if (s.feature) {
        if (dim && s.feature->size() != *dim)
          throw std::invalid_argument("manifest: feature dimension mismatch at id \"" + s.id +
                                      "\" (got " + std::to_string(s.feature->size()) +
                                      ", expected " + std::to_string(*dim) + ")");
        if (!dim) dim = s.feature->size();
      }
      if (s.cluster_id) {
        if (*s.cluster_id < 0)
          throw std::invalid_argument("manifest: negative cluster_id at id \"" + s.id + "\"");
        if (num_clusters && *s.cluster_id >= *num_clusters)
          throw std::invalid_argument("manifest: cluster_id out of range at id \"" + s.id + "\"");
      }
    }
  }
};

namespace detail {

inline MetricVector metrics_from_json(const nlohmann::json& obj) {
  MetricVector m;
  for (const char* key : MetricVector::key_names) {
    if (!obj.contains(key))
      throw std::invalid_argument(std::string("metrics object missing key ") + key);
    m.set(key, obj.at(key).get<double>());
  }
  return m;
}

inline nlohmann::json metrics_to_json(const MetricVector& m) {
  nlohmann::json obj = nlohmann::json::object();
  for (const char* key : MetricVector::key_names) obj[key] = m.get(key);
  return obj;
}

inline SampleRecord record_from_json(const nlohmann::json& j) {
  SampleRecord r;
  r.id = j.at("id").get<std::string>();
  r.session_id = j.value("session_id", std::string{});
  if (j.contains("feature")) r.feature = j.at("feature").get<std::vector<double>>();
  if (j.contains("metrics")) r.metrics = metrics_from_json(j.at("metrics"));
  if (j.contains("caption")) r.caption = j.at("caption").get<std::string>();
  if (j.contains("cluster_id")) r.cluster_id = j.at("cluster_id").get<std::int64_t>();
  if (j.contains("importance")) r.importance = j.at("importance").get<double>();
  return r;
}

inline nlohmann::json record_to_json(const SampleRecord& r) {
  nlohmann::json j;
  j["id"] = r.id;
  if (!r.session_id.empty()) j["session_id"] = r.session_id;
  if (r.feature) j["feature"] = *r.feature;
  if (r.metrics) j["metrics"] = metrics_to_json(*r.metrics);
  if (r.caption) j["caption"] = *r.caption;
  if (r.cluster_id) j["cluster_id"] = *r.cluster_id;
  if (r.importance) j["importance"] = *r.importance;
  return j;
}

}  // namespace detail

/// Parses a line-delimited manifest (one record object per line). Blank
/// lines are skipped; parse and invariant errors cite the line number.
inline PoolManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("manifest: cannot open " + path);
  PoolManifest manifest;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    try {
      manifest.samples.push_back(detail::record_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error("manifest: line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  for (const auto& s : manifest.samples)
    if (s.feature) {
      manifest.feature_dim = static_cast<std::int64_t>(s.feature->size());
      break;
    }
  manifest.validate();
  return manifest;
}

inline void save_manifest(const PoolManifest& manifest, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("manifest: cannot write " + path);
  for (const auto& s : manifest.samples) out << detail::record_to_json(s).dump() << "\n";
}

/// Loads the CSV session list `session_id,frame_count,frame_rate_hz`.
inline std::vector<SessionLog> load_sessions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("sessions: cannot open " + path);
  std::vector<SessionLog> logs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line_no == 1 && line.rfind("session_id", 0) == 0) continue;
    std::stringstream ss(line);
    std::string id_part, frames_part, rate_part;
    if (!std::getline(ss, id_part, ',') || !std::getline(ss, frames_part, ',') ||
        !std::getline(ss, rate_part, ','))
      throw std::runtime_error("sessions: line " + std::to_string(line_no) + ": expected 3 fields");
    SessionLog log;
    log.session_id = id_part;
    log.frame_count = std::stoll(frames_part);
    log.frame_rate_hz = std::stod(rate_part);
    if (log.frame_count < 0)
      throw std::runtime_error("sessions: line " + std::to_string(line_no) + ": negative frame_count");
    if (!(log.frame_rate_hz > 0.0))
      throw std::runtime_error("sessions: line " + std::to_string(line_no) + ": frame_rate_hz must be positive");
    logs.push_back(std::move(log));
  }
  return logs;
}

/// Cuts a session into consecutive non-overlapping clips of exactly
/// clip_seconds, starting at frame 0. The trailing remainder shorter than
/// one clip is discarded. clip_seconds * frame_rate_hz must be integral.
inline std::vector<ClipDescriptor> segment_virtual_clips(const SessionLog& log,
                                                         double clip_seconds) {
  if (!(clip_seconds > 0.0)) throw std::invalid_argument("segmentation: clip_seconds must be positive");
  if (!(log.frame_rate_hz > 0.0)) throw std::invalid_argument("segmentation: frame_rate_hz must be positive");
  if (log.frame_count < 0) throw std::invalid_argument("segmentation: negative frame_count");
  const double fpc_real = clip_seconds * log.frame_rate_hz;
  const double fpc_rounded = std::round(fpc_real);
  if (fpc_rounded < 1.0 || std::abs(fpc_real - fpc_rounded) > 1e-9)
    throw std::invalid_argument("segmentation: clip_seconds * frame_rate_hz must be a positive integer, got " +
                                std::to_string(fpc_real));
  const auto frames_per_clip = static_cast<std::int64_t>(fpc_rounded);
  const std::int64_t clip_count = log.frame_count / frames_per_clip;
  std::vector<ClipDescriptor> clips;
  clips.reserve(static_cast<std::size_t>(clip_count));
  for (std::int64_t k = 0; k < clip_count; ++k)
    clips.push_back({log.session_id, k * frames_per_clip, (k + 1) * frames_per_clip});
  return clips;
}

}  // namespace mosaic
