#pragma once

// Bundled English stop-word list plus a loader for user-supplied lists
// (plain text, one word per line).

#include <fstream>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace mosaic {

inline const std::unordered_set<std::string>& default_stop_words() {
  static const std::unordered_set<std::string> words = {
      "a",       "about",  "above",  "after",   "again",   "against", "all",
      "am",      "an",     "and",    "any",     "are",     "as",      "at",
      "be",      "because", "been",  "before",  "being",   "below",   "between",
      "both",    "but",    "by",     "can",     "cannot",  "could",   "did",
      "do",      "does",   "doing",  "down",    "during",  "each",    "few",
      "for",     "from",   "further", "had",    "has",     "have",    "having",
      "he",      "her",    "here",   "hers",    "herself", "him",     "himself",
      "his",     "how",    "i",      "if",      "in",      "into",    "is",
      "it",      "its",    "itself", "just",    "me",      "more",    "most",
      "my",      "myself", "no",     "nor",     "not",     "now",     "of",
      "off",     "on",     "once",   "only",    "or",      "other",   "our",
      "ours",    "ourselves", "out", "over",    "own",     "same",    "she",
      "should",  "so",     "some",   "such",    "than",    "that",    "the",
      "their",   "theirs", "them",   "themselves", "then", "there",   "these",
      "they",    "this",   "those",  "through", "to",      "too",     "under",
      "until",   "up",     "very",   "was",     "we",      "were",    "what",
      "when",    "where",  "which",  "while",   "who",     "whom",    "why",
      "will",    "with",   "would",  "you",     "your",    "yours",   "yourself",
      "yourselves"};
  return words;
}

inline std::unordered_set<std::string> load_stop_words(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("stop words: cannot open " + path);
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) words.insert(line);
  }
  return words;
}

}  // namespace mosaic
