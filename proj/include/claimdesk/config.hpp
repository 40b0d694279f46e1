#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace claimdesk {

/// Engine settings. Every field has a `key=value` spelling (see keys()),
/// settable from a config file, `CLAIMDESK_<KEY>` environment variables
/// (dots become underscores, uppercase) and CLI flags.
struct Config {
  // ranking
  double theta = 0.6;
  std::size_t k_docs = 5000;
  double w_ent = 2.0;
  double bm25_k1 = 1.2;
  double bm25_b = 0.75;
  std::size_t max_sentence_tokens = 500;
  double novelty_max_overlap = 0.9;
  std::size_t embedding_dim = 64;
  std::string embeddings;  // path; empty selects hashed vectors

  // analysis resources; empty selects the compiled-in lists
  std::string gazetteer;
  std::string stopwords;
  std::string abbreviations;
  std::string negation_cues;

  // entailment
  std::string classifier = "lexical";  // lexical | remote
  double support_overlap = 0.6;
  std::string classifier_endpoint;
  std::int64_t classifier_timeout_ms = 5000;
  std::size_t classifier_max_in_flight = 4;

  // persistence
  std::string claims_log;
  std::string feedback_log;
  std::size_t feedback_snapshot_every = 1000;

  /// Sets one key; throws kConfig for unknown keys or unparsable values.
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;
  static const std::vector<std::string>& keys();

  /// `key = value` lines; `#` comments and blank lines ignored.
  void load_file(const std::filesystem::path& path);
  void load_text(std::string_view text, std::string_view source = "<config>");
  /// Applies CLAIMDESK_* variables from `environ`.
  void apply_environment();
  void apply_environment(const std::map<std::string, std::string>& env);

  /// Throws kConfig when a value is out of range.
  void validate() const;

  /// Stable 16-hex-digit hash over the keys that influence verdicts.
  std::string fingerprint() const;
};

std::string environment_name(std::string_view key);

}  // namespace claimdesk
