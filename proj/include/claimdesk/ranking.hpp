#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "claimdesk/corpus.hpp"

namespace claimdesk {

class InvertedIndex;

/// Result of positional matching of one sentence against a claim.
struct PositionalScore {
  double s1 = 0.0;
  /// Sentence token positions of the matching tokens, strictly increasing.
  std::vector<std::uint32_t> matched_positions;
  /// Number of matching tokens (N).
  std::uint32_t matched_count = 0;
};

/// Positional feature-matching score in [0, 1].
///
/// A sentence token matches when it is a content token whose folded word is
/// a claim word or whose lemma is a claim lemma. With matches at feature
/// positions p_1 < ... < p_N (positions counted over content tokens only, so
/// stop words and punctuation add no distance):
///
///   raw = sum_{j=2..N} exp(-(p_j - p_{j-1} - 1))
///
/// Adjacent matches contribute exp(0) = 1. With M distinct claim lemmas the
/// score is raw / (M - 1) clamped to [0, 1]; when M = 1 it is 1 if N >= 1.
/// Throws kEmptyQuery when the claim has no lemmas.
PositionalScore positional_score(const Sentence& sentence, const FeatureSet& claim);

/// positional_score from the document-level positions of the matching
/// tokens (sorted, unique), as stored in the index.
PositionalScore positional_score_at(const Sentence& sentence, std::span<const std::uint32_t> doc_positions,
                                    std::size_t claim_lemma_count);

/// Same formula over precomputed feature positions; exposed for testing.
double positional_score_from_positions(std::span<const std::uint32_t> feature_positions,
                                       std::size_t claim_feature_count);

/// Word vectors plus corpus IDF weights.
///
/// Vectors either come from a text file (`D` on the first line, then
/// `token v1 ... vD`) or are derived deterministically from a hash of the
/// token lemma. Lookups try the folded word first, then its lemma.
class EmbeddingStore {
 public:
  static EmbeddingStore load(const std::filesystem::path& path);
  static EmbeddingStore parse(std::istream& in, std::string_view source = "<stream>");
  /// Pseudo-random unit-scale vectors seeded by the token lemma. Every token
  /// is in vocabulary; inflections of one lemma share a vector.
  static EmbeddingStore hashed(std::size_t dimension);

  std::size_t dimension() const { return dimension_; }
  std::size_t vocabulary_size() const { return vectors_.size(); }
  bool is_hashed() const { return hashed_; }

  /// Adds `weight * vector(folded)` into `sum`. Returns false for OOV tokens.
  bool accumulate(std::string_view folded, double weight, std::span<double> sum) const;
  bool contains(std::string_view folded) const;

  /// IDF = ln((1 + N) / (1 + df)) + 1. Words absent from the table have df 0.
  double idf(std::string_view folded) const;
  void set_idf(std::unordered_map<std::string, double> idf, std::size_t doc_count);
  /// Recomputes the IDF table from word document frequencies of the index.
  void refresh_idf(const InvertedIndex& index);
  std::uint64_t idf_generation() const { return idf_generation_; }

 private:
  std::size_t dimension_ = 0;
  bool hashed_ = false;
  std::unordered_map<std::string, std::vector<float>> vectors_;
  std::unordered_map<std::string, double> idf_;
  std::size_t doc_count_ = 0;
  std::uint64_t idf_generation_ = 0;
};

/// One text span entering an embedding: the text and its tokens.
struct TextPiece {
  std::string_view text;
  std::span<const Token> tokens;
};

/// IDF-weighted mean of the vectors of all content tokens across the
/// pieces; repeated tokens count once per occurrence. OOV tokens are
/// skipped. Zero vector when nothing is in vocabulary.
std::vector<double> embed(std::span<const TextPiece> pieces, const EmbeddingStore& store);

/// Embedding of a sentence with its document title prepended.
std::vector<double> sentence_embedding(const Sentence& sentence, std::string_view title,
                                       std::span<const Token> title_tokens,
                                       const EmbeddingStore& store);
std::vector<double> sentence_embedding(const Sentence& sentence, std::string_view title,
                                       const Lexicon& lexicon, const EmbeddingStore& store);

/// Cosine similarity in [-1, 1]; 0 when either vector is zero. Throws
/// kValidation on a dimension mismatch.
double cosine(std::span<const double> u, std::span<const double> v);

struct FilterParams {
  std::size_t max_sentence_tokens = 500;  // keep length < this
  double novelty_max_overlap = 0.9;       // keep overlap < this
};

/// A scored sentence waiting for filtering. Points into a live Document.
struct ScoredSentence {
  const Document* doc = nullptr;
  const Sentence* sentence = nullptr;
  PositionalScore score;
};

/// Orders by s1 descending, then doc_id, then sentence ordinal.
void sort_by_positional_score(std::vector<ScoredSentence>& candidates);

/// Keeps, in the given order, sentences that (a) have fewer than
/// max_sentence_tokens tokens, (b) contain every claim entity as a
/// case-folded token sequence, and (c) have less than novelty_max_overlap of
/// their word types already seen in previously kept sentences.
std::vector<ScoredSentence> apply_filters(const std::vector<ScoredSentence>& candidates,
                                          const FeatureSet& claim, const FilterParams& params = {});

/// Case-folded, non-punctuation word types of a sentence.
std::vector<std::string> word_types(const Sentence& sentence);
/// True when the entity's folded tokens occur contiguously in the sentence.
bool contains_entity(const Sentence& sentence, std::string_view entity_key);

struct EvidenceCandidate {
  SentenceId sent_id;
  std::string text;
  double s1 = 0.0;
  double s2 = 0.0;
  double combined = 0.0;
  std::string doc_id;
  std::string doc_title;
};

/// Computes s2 = cosine(claim, title + sentence), combined = (s1 + s2) / 2,
/// sorts by combined descending (ties: doc_id, ordinal) and drops items with
/// combined < theta.
std::vector<EvidenceCandidate> rerank_and_threshold(const std::vector<ScoredSentence>& filtered,
                                                    std::span<const double> claim_embedding,
                                                    const EmbeddingStore& store, double theta);

}  // namespace claimdesk
