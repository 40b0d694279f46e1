#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "claimdesk/text.hpp"
#include "claimdesk/timeutil.hpp"

namespace claimdesk {

enum class EntityKind : std::uint8_t { kPerson, kOrg, kLoc, kOther };

const char* to_string(EntityKind kind);
/// Accepts PERSON/PER, ORG/ORGANIZATION, LOC/LOCATION/GPE, OTHER/MISC.
std::optional<EntityKind> parse_entity_kind(std::string_view text);

/// A named-entity mention. `span` holds token positions in the coordinate
/// system of the text it was extracted from (document-level for documents).
struct EntityMention {
  std::string surface;
  EntityKind kind = EntityKind::kOther;
  TokenSpan span;

  bool operator==(const EntityMention&) const = default;
};

/// Surface -> kind dictionary matched longest-first over token sequences.
/// Matching is case-sensitive on surfaces so that e.g. `US` does not fire on
/// the pronoun `us`.
class Gazetteer {
 public:
  Gazetteer() = default;

  /// One `surface<TAB>kind` per line; blank lines and `#` comments skipped.
  static Gazetteer parse(std::string_view text, std::string_view source = "<memory>");
  static Gazetteer load(const std::filesystem::path& path);

  void add(std::string_view surface, EntityKind kind);
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  struct Match {
    std::uint32_t length = 0;  // in tokens
    EntityKind kind = EntityKind::kOther;
  };
  /// Longest entry whose token surfaces equal tokens[start...].
  std::optional<Match> match(std::string_view text, std::span<const Token> tokens,
                             std::size_t start) const;

 private:
  struct Entry {
    std::vector<std::string> tokens;
    EntityKind kind;
  };
  std::unordered_map<std::string, std::vector<Entry>> by_first_token_;
  std::size_t size_ = 0;
};

/// Gazetteer longest-match hits plus capitalized runs (kind OTHER) over the
/// uncovered tokens. A lone capitalized word at sentence start is not taken
/// as a mention. Output is sorted and non-overlapping.
std::vector<EntityMention> extract_entities(std::string_view text, std::span<const Token> tokens,
                                            const Gazetteer& gazetteer, const Lexicon& lexicon);

enum class FeatureKind : std::uint8_t { kWord, kLemma, kEntity };

/// Index key for a feature: a one-letter kind prefix, `:`, the folded text.
std::string feature_key(FeatureKind kind, std::string_view text);
FeatureKind feature_key_kind(std::string_view key);
std::string_view feature_key_text(std::string_view key);

/// Case-folded token surfaces of an entity joined by single spaces.
std::string entity_key_text(std::string_view surface);

/// Matching features of a text: content words, their lemmas and entity
/// mentions. `positions` maps every feature key to its sorted token
/// positions (mention start for entities).
struct FeatureSet {
  std::set<std::string> words;
  std::set<std::string> lemmas;
  std::vector<EntityMention> entities;
  std::map<std::string, std::vector<std::uint32_t>> positions;

  bool empty() const { return words.empty() && lemmas.empty() && entities.empty(); }
  /// Distinct feature keys in sorted order.
  std::vector<std::string> keys() const;
  /// Distinct case-folded entity surfaces, sorted.
  std::vector<std::string> entity_keys() const;

  bool operator==(const FeatureSet&) const = default;
};

/// Accumulates features from one or more token streams. `position_offset`
/// shifts token positions into a shared coordinate system.
class FeatureBuilder {
 public:
  void add_tokens(std::string_view text, std::span<const Token> tokens,
                  std::uint32_t position_offset = 0);
  void add_entities(std::span<const EntityMention> mentions);
  FeatureSet build() &&;

 private:
  FeatureSet features_;
};

struct SentenceId {
  std::string doc_id;
  std::uint32_t ordinal = 0;

  auto operator<=>(const SentenceId&) const = default;
  bool operator==(const SentenceId&) const = default;
};

/// A sentence of a document body. Token offsets index into `text`; token
/// positions restart at 0 for every sentence.
struct Sentence {
  SentenceId id;
  std::string text;
  std::uint32_t body_offset = 0;     // byte offset of `text` inside the body
  std::uint32_t first_position = 0;  // document-level position of tokens[0]
  std::vector<Token> tokens;

  std::size_t length_tokens() const { return tokens.size(); }
};

/// A news article after analysis. Document-level token positions run over
/// the title first, then the body.
struct Document {
  std::string doc_id;
  std::string title;
  std::string body;
  std::optional<Timestamp> published_at;
  std::vector<Token> title_tokens;
  std::vector<Sentence> sentences;
  std::vector<EntityMention> entities;
  FeatureSet features;
  /// Non-punctuation tokens over title and body; the BM25 document length.
  std::uint32_t length = 0;

  std::uint32_t token_count() const;
  /// Surface of the token at a document-level position.
  std::string_view token_surface(std::uint32_t position) const;
  const Token& token_at(std::uint32_t position) const;
};

struct PrecomputedEntity {
  std::string surface;
  EntityKind kind = EntityKind::kOther;
  std::optional<TokenSpan> span;  // document-level token positions
};

/// One line of the corpus input file.
struct CorpusRecord {
  std::string id;
  std::string title;
  std::string body;
  std::optional<Timestamp> published_at;
  /// When present, replaces automatic entity extraction for the document.
  std::optional<std::vector<PrecomputedEntity>> entities;
};

/// Parses one JSON object. Errors name the offending field.
CorpusRecord parse_corpus_record(std::string_view json_line);
std::string to_json_line(const CorpusRecord& record);
/// Record that re-ingests to the same document, with entity spans pinned.
CorpusRecord to_record(const Document& doc);

/// Reads newline-delimited records, skipping blank lines. Parse errors carry
/// the 1-based line number.
void read_corpus(std::istream& in, const std::function<void(CorpusRecord)>& sink);

/// A claim after analysis.
struct Claim {
  std::string text;
  std::vector<Token> tokens;
  FeatureSet features;
};

/// Tokenization, segmentation and feature extraction with a fixed lexicon
/// and gazetteer. Stateless and safe to share across threads.
class Analyzer {
 public:
  Analyzer(std::shared_ptr<const Lexicon> lexicon, std::shared_ptr<const Gazetteer> gazetteer);

  /// Builds a Document. Rejects missing `id` or empty `body` naming the field.
  Document ingest_document(const CorpusRecord& record) const;
  Claim analyze_claim(std::string_view text) const;

  const Lexicon& lexicon() const { return *lexicon_; }
  const Gazetteer& gazetteer() const { return *gazetteer_; }

 private:
  std::shared_ptr<const Lexicon> lexicon_;
  std::shared_ptr<const Gazetteer> gazetteer_;
};

/// Thread-safe document store keyed by doc_id. Stored documents drop their
/// FeatureSet once indexed; the index holds the postings.
class Corpus {
 public:
  /// Throws kDuplicate when the id is already present.
  void add(std::shared_ptr<const Document> doc);
  bool contains(std::string_view doc_id) const;
  std::shared_ptr<const Document> find(std::string_view doc_id) const;
  std::size_t size() const;
  /// Snapshot of all documents in insertion order.
  std::vector<std::shared_ptr<const Document>> documents() const;

 private:
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, std::shared_ptr<const Document>> by_id_;
  std::vector<std::shared_ptr<const Document>> ordered_;
};

}  // namespace claimdesk
