#pragma once

// Pool partitioning: Lloyd k-means over feature vectors and a TF-IDF
// featurizer for caption text. Both are deterministic for a fixed seed and
// single-threaded so results are bit-identical across machines.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "mosaic/rng.hpp"

namespace mosaic {

struct ClusterModel {
  Eigen::MatrixXd centroids;               // M x d, row per cluster
  std::vector<int> row_assignment;         // aligned with the input feature rows
  std::map<std::string, int> assignment;   // id -> cluster, filled when ids are supplied
  double inertia = 0.0;                    // sum of squared distances to assigned centroid
  std::vector<double> inertia_history;     // one entry per Lloyd iteration
  int iterations = 0;
  bool converged = false;
};

namespace detail {

// Nearest centroid by squared Euclidean distance; ties go to the lowest index.
inline int nearest_centroid(const Eigen::MatrixXd& centroids, const Eigen::RowVectorXd& x) {
  int best = 0;
  double best_d = (centroids.row(0) - x).squaredNorm();
  for (int c = 1; c < centroids.rows(); ++c) {
    const double d = (centroids.row(c) - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

}  // namespace detail

namespace detail {

// One Lloyd run from the given seed rows. Empty clusters are re-seeded with
// the point currently farthest from its centroid (skipped when every
// distance is zero, which leaves the degenerate all-identical-points pool in
// one cluster).
inline ClusterModel lloyd(const Eigen::MatrixXd& features, int M,
                          const std::vector<std::size_t>& init, int max_iters) {
  const auto n = features.rows();
  ClusterModel model;
  model.centroids.resize(M, features.cols());
  for (int c = 0; c < M; ++c) model.centroids.row(c) = features.row(static_cast<Eigen::Index>(init[static_cast<std::size_t>(c)]));

  std::vector<int> assign(static_cast<std::size_t>(n), 0);
  std::vector<int> prev_assign;
  for (int iter = 0; iter < max_iters; ++iter) {
    bool reseeded = false;
    // Assignment step, repeated if an empty cluster forces a re-seed.
    for (;;) {
      for (Eigen::Index i = 0; i < n; ++i)
        assign[static_cast<std::size_t>(i)] = detail::nearest_centroid(model.centroids, features.row(i));
      std::vector<std::int64_t> counts(static_cast<std::size_t>(M), 0);
      for (int a : assign) ++counts[static_cast<std::size_t>(a)];
      int empty = -1;
      for (int c = 0; c < M; ++c)
        if (counts[static_cast<std::size_t>(c)] == 0) {
          empty = c;
          break;
        }
      if (empty < 0) break;
      // Farthest point from its assigned centroid becomes the new seed.
      Eigen::Index far_row = -1;
      double far_d = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double d =
            (features.row(i) - model.centroids.row(assign[static_cast<std::size_t>(i)])).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far_row = i;
        }
      }
      if (far_row < 0) break;  // all points coincide with their centroids
      model.centroids.row(empty) = features.row(far_row);
      reseeded = true;
    }

    // Update step.
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(M, features.cols());
    std::vector<std::int64_t> counts(static_cast<std::size_t>(M), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(assign[static_cast<std::size_t>(i)]) += features.row(i);
      ++counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < M; ++c)
      if (counts[static_cast<std::size_t>(c)] > 0)
        model.centroids.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);

    double inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      inertia += (features.row(i) - model.centroids.row(assign[static_cast<std::size_t>(i)])).squaredNorm();
    model.inertia_history.push_back(inertia);
    model.iterations = iter + 1;

    if (!reseeded && assign == prev_assign) {
      model.converged = true;
      break;
    }
    prev_assign = assign;
  }

  model.row_assignment = std::move(assign);
  model.inertia = model.inertia_history.back();
  return model;
}

}  // namespace detail

/// Lloyd k-means. Each restart seeds the centroids with M distinct rows
/// picked uniformly; the lowest-inertia run of `n_init` restarts wins (first
/// run on ties). Deterministic for a fixed seed.
inline ClusterModel kmeans(const Eigen::MatrixXd& features, int M, std::uint64_t seed,
                           int max_iters = 100, int n_init = 10) {
  const auto n = features.rows();
  if (M <= 0) throw std::invalid_argument("kmeans: M must be positive");
  if (n < M) throw std::invalid_argument("kmeans: M exceeds the number of samples");
  if (!features.allFinite()) throw std::invalid_argument("kmeans: non-finite feature value");
  if (max_iters <= 0) throw std::invalid_argument("kmeans: max_iters must be positive");
  if (n_init <= 0) throw std::invalid_argument("kmeans: n_init must be positive");

  rng::Engine engine(seed);
  ClusterModel best;
  for (int restart = 0; restart < n_init; ++restart) {
    const auto init =
        engine.sample_indices(static_cast<std::size_t>(n), static_cast<std::size_t>(M));
    ClusterModel model = detail::lloyd(features, M, init, max_iters);
    if (restart == 0 || model.inertia < best.inertia) best = std::move(model);
  }
  return best;
}

/// kmeans plus an id map aligned with the feature rows.
inline ClusterModel kmeans(const Eigen::MatrixXd& features, const std::vector<std::string>& ids,
                           int M, std::uint64_t seed, int max_iters = 100, int n_init = 10) {
  if (static_cast<Eigen::Index>(ids.size()) != features.rows())
    throw std::invalid_argument("kmeans: ids must align with feature rows");
  ClusterModel model = kmeans(features, M, seed, max_iters, n_init);
  for (std::size_t i = 0; i < ids.size(); ++i) model.assignment[ids[i]] = model.row_assignment[i];
  return model;
}

struct TfidfVocabulary {
  std::vector<std::string> terms;                       // column order of the feature matrix
  std::vector<std::int64_t> document_frequencies;       // aligned with terms
  std::int64_t max_terms = 0;
};

namespace detail {

// Lowercase alphanumeric runs; everything else separates tokens.
inline std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const unsigned char u = static_cast<unsigned char>(ch);
    if (std::isalnum(u)) {
      current.push_back(static_cast<char>(std::tolower(u)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

// Unigrams plus adjacent-pair bigrams of the stop-word-filtered sequence.
inline std::vector<std::string> terms_of(const std::string& text,
                                         const std::unordered_set<std::string>& stop_words) {
  std::vector<std::string> kept;
  for (auto& tok : tokenize(text))
    if (!stop_words.count(tok)) kept.push_back(std::move(tok));
  std::vector<std::string> terms = kept;
  for (std::size_t i = 0; i + 1 < kept.size(); ++i) terms.push_back(kept[i] + " " + kept[i + 1]);
  return terms;
}

}  // namespace detail

/// TF-IDF featurization: vocabulary = top vocab_size terms by total corpus
/// count (ties broken lexicographically), idf = ln((1+N)/(1+df)) + 1, rows
/// L2-normalized. A document of only stop words yields a zero row.
inline std::pair<TfidfVocabulary, Eigen::MatrixXd> tfidf_features(
    const std::vector<std::string>& captions, std::int64_t vocab_size,
    const std::unordered_set<std::string>& stop_words) {
  if (captions.empty()) throw std::invalid_argument("tfidf: empty corpus");
  if (vocab_size <= 0) throw std::invalid_argument("tfidf: vocab_size must be positive");

  std::vector<std::vector<std::string>> doc_terms;
  doc_terms.reserve(captions.size());
  std::unordered_map<std::string, std::int64_t> corpus_count;
  std::unordered_map<std::string, std::int64_t> doc_freq;
  for (const auto& caption : captions) {
    doc_terms.push_back(detail::terms_of(caption, stop_words));
    std::unordered_set<std::string> seen;
    for (const auto& t : doc_terms.back()) {
      ++corpus_count[t];
      if (seen.insert(t).second) ++doc_freq[t];
    }
  }

  std::vector<std::pair<std::string, std::int64_t>> ranked(corpus_count.begin(), corpus_count.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& lhs, const auto& rhs) {
    if (lhs.second != rhs.second) return lhs.second > rhs.second;
    return lhs.first < rhs.first;
  });
  if (static_cast<std::int64_t>(ranked.size()) > vocab_size) ranked.resize(static_cast<std::size_t>(vocab_size));

  TfidfVocabulary vocab;
  vocab.max_terms = vocab_size;
  vocab.terms.reserve(ranked.size());
  for (const auto& [term, count] : ranked) vocab.terms.push_back(term);
  std::sort(vocab.terms.begin(), vocab.terms.end());
  vocab.document_frequencies.reserve(vocab.terms.size());
  for (const auto& term : vocab.terms) vocab.document_frequencies.push_back(doc_freq.at(term));

  std::unordered_map<std::string, std::size_t> column;
  for (std::size_t c = 0; c < vocab.terms.size(); ++c) column[vocab.terms[c]] = c;

  const double N = static_cast<double>(captions.size());
  std::vector<double> idf(vocab.terms.size());
  for (std::size_t c = 0; c < vocab.terms.size(); ++c)
    idf[c] = std::log((1.0 + N) / (1.0 + static_cast<double>(vocab.document_frequencies[c]))) + 1.0;

  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(captions.size()),
                                               static_cast<Eigen::Index>(vocab.terms.size()));
  for (std::size_t d = 0; d < doc_terms.size(); ++d) {
    for (const auto& t : doc_terms[d]) {
      const auto it = column.find(t);
      if (it != column.end())
        rows(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(it->second)) += 1.0;
    }
    for (std::size_t c = 0; c < vocab.terms.size(); ++c)
      rows(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(c)) *= idf[c];
    const double norm = rows.row(static_cast<Eigen::Index>(d)).norm();
    if (norm > 0.0) rows.row(static_cast<Eigen::Index>(d)) /= norm;
  }
  return {std::move(vocab), std::move(rows)};
}

}  // namespace mosaic
