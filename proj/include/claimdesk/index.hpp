#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <memory>
#include <ostream>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "claimdesk/corpus.hpp"

namespace claimdesk {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
  /// Multiplier on entity-feature contributions relative to word/lemma ones.
  double entity_weight = 2.0;

  bool operator==(const Bm25Params&) const = default;
};

struct RetrievalResult {
  std::string doc_id;
  double bm25_score = 0.0;
  std::vector<std::string> matched_features;  // feature keys, sorted
};

/// One posting as seen from outside the index.
struct PostingView {
  std::string doc_id;
  std::uint32_t term_frequency = 0;
  std::vector<std::uint32_t> positions;

  bool operator==(const PostingView&) const = default;
};

/// Full statistics dump, used to compare indexes built in different orders.
struct IndexStatistics {
  std::size_t doc_count = 0;
  double avg_doc_length = 0.0;
  std::map<std::string, std::uint32_t> doc_lengths;
  std::map<std::string, std::vector<PostingView>> postings;

  bool operator==(const IndexStatistics&) const = default;
};

/// IDF used for scoring: ln(1 + (N - df + 0.5) / (df + 0.5)), never negative.
double bm25_idf(std::size_t doc_count, std::size_t document_frequency);

/// Per-feature BM25 contribution for a term seen `tf` times in a document
/// of length `doc_length`.
double bm25_term(const Bm25Params& params, double idf, std::uint32_t tf, double doc_length,
                 double avg_doc_length);

/// Word, lemma and entity postings over one key space (see feature_key).
/// Postings are sorted by doc_id. A single writer adds documents while any
/// number of readers query; each document becomes visible atomically.
class InvertedIndex {
 public:
  explicit InvertedIndex(Bm25Params params = {});
  InvertedIndex(const InvertedIndex&) = delete;
  InvertedIndex& operator=(const InvertedIndex&) = delete;

  Bm25Params params() const;

  /// Adds all features of `doc`. Throws kDuplicate for a known doc_id.
  void index_document(const Document& doc);
  void index_document(std::string_view doc_id, std::uint32_t length, const FeatureSet& features);

  /// Scoring parameters do not affect postings and may change after load.
  void set_params(const Bm25Params& params);

  /// Sum over the claim's feature keys of the BM25 contribution. Throws
  /// kNotFound for an unknown doc_id.
  double bm25_score(const FeatureSet& claim, std::string_view doc_id) const;

  /// The k best documents among those sharing at least one feature with the
  /// claim; ties broken by doc_id ascending. Throws kEmptyQuery when the
  /// claim has no features, kValidation when k is zero.
  std::vector<RetrievalResult> retrieve(const FeatureSet& claim, std::size_t k) const;

  /// For each doc_id, the sorted distinct positions of any of `keys` in it.
  std::vector<std::vector<std::uint32_t>> match_positions(const std::vector<std::string>& keys,
                                                          const std::vector<std::string>& doc_ids) const;

  std::size_t doc_count() const;
  double avg_doc_length() const;
  std::size_t document_frequency(std::string_view key) const;
  bool contains(std::string_view doc_id) const;
  /// Incremented on every successful index_document.
  std::uint64_t generation() const;

  /// Document frequencies of all word keys, keyed by the folded word.
  std::unordered_map<std::string, std::size_t> word_document_frequencies() const;

  IndexStatistics statistics() const;

  /// Binary snapshot: magic, format version, parameters, documents and
  /// postings. Doubles are stored as their IEEE-754 bit patterns.
  void save(std::ostream& out) const;
  static std::unique_ptr<InvertedIndex> load(std::istream& in);

 private:
  struct PostingList {
    std::vector<std::uint32_t> docs;        // internal doc numbers, doc_id order
    std::vector<std::uint32_t> offsets{0};  // into positions; size docs+1
    std::vector<std::uint32_t> positions;

    std::uint32_t tf(std::size_t i) const { return offsets[i + 1] - offsets[i]; }
  };

  double avg_doc_length_locked() const;
  double key_weight(std::string_view key) const;
  std::size_t find_posting(const PostingList& list, std::string_view doc_id) const;

  Bm25Params params_;
  mutable std::shared_mutex mutex_;
  std::vector<std::string> doc_ids_;
  std::vector<std::uint32_t> doc_lengths_;
  std::unordered_map<std::string, std::uint32_t> doc_numbers_;
  std::unordered_map<std::string, PostingList> postings_;
  std::uint64_t total_length_ = 0;
  std::uint64_t generation_ = 0;
};

}  // namespace claimdesk
