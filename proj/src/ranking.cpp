#include "claimdesk/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "claimdesk/error.hpp"
#include "claimdesk/index.hpp"

namespace claimdesk {

// ---------------------------------------------------------------------------
// Positional score

double positional_score_from_positions(std::span<const std::uint32_t> feature_positions,
                                       std::size_t claim_feature_count) {
  if (feature_positions.empty()) return 0.0;
  if (claim_feature_count <= 1) return 1.0;
  double raw = 0.0;
  for (std::size_t j = 1; j < feature_positions.size(); ++j) {
    const double gap = static_cast<double>(feature_positions[j]) -
                       static_cast<double>(feature_positions[j - 1]) - 1.0;
    raw += std::exp(-gap);
  }
  return std::clamp(raw / static_cast<double>(claim_feature_count - 1), 0.0, 1.0);
}

PositionalScore positional_score(const Sentence& sentence, const FeatureSet& claim) {
  if (claim.lemmas.empty()) {
    throw Error(ErrorCode::kEmptyQuery, "claim has no matchable content words");
  }
  PositionalScore out;
  std::vector<std::uint32_t> feature_positions;
  std::uint32_t content_index = 0;
  for (const Token& t : sentence.tokens) {
    if (!t.content) continue;
    const std::string folded = fold_case(t.surface(sentence.text));
    if (claim.words.count(folded) > 0 || claim.lemmas.count(stem(folded)) > 0) {
      out.matched_positions.push_back(t.position);
      feature_positions.push_back(content_index);
    }
    ++content_index;
  }
  out.matched_count = static_cast<std::uint32_t>(feature_positions.size());
  out.s1 = positional_score_from_positions(feature_positions, claim.lemmas.size());
  return out;
}

PositionalScore positional_score_at(const Sentence& sentence, std::span<const std::uint32_t> doc_positions,
                                    std::size_t claim_lemma_count) {
  if (claim_lemma_count == 0) {
    throw Error(ErrorCode::kEmptyQuery, "claim has no matchable content words");
  }
  PositionalScore out;
  std::vector<std::uint32_t> feature_positions;
  const std::uint32_t first = sentence.first_position;
  const auto last = first + static_cast<std::uint32_t>(sentence.tokens.size());
  auto it = std::lower_bound(doc_positions.begin(), doc_positions.end(), first);
  std::uint32_t content_index = 0;
  for (const Token& t : sentence.tokens) {
    if (it == doc_positions.end() || *it >= last) break;
    if (!t.content) continue;
    while (it != doc_positions.end() && *it < first + t.position) ++it;
    if (it != doc_positions.end() && *it == first + t.position) {
      out.matched_positions.push_back(t.position);
      feature_positions.push_back(content_index);
      ++it;
    }
    ++content_index;
  }
  out.matched_count = static_cast<std::uint32_t>(feature_positions.size());
  out.s1 = positional_score_from_positions(feature_positions, claim_lemma_count);
  return out;
}

// ---------------------------------------------------------------------------
// Embeddings

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

EmbeddingStore EmbeddingStore::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot read embeddings " + path.string(), "embeddings");
  return parse(in, path.string());
}

EmbeddingStore EmbeddingStore::parse(std::istream& in, std::string_view source) {
  EmbeddingStore store;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    return Error(ErrorCode::kConfig,
                 std::string(source) + ":" + std::to_string(line_no) + ": " + what, "embeddings");
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    if (store.dimension_ == 0) {
      long long d = 0;
      if (!(fields >> d) || d <= 0) throw fail("first line must hold the dimension");
      store.dimension_ = static_cast<std::size_t>(d);
      continue;
    }
    std::string token;
    fields >> token;
    std::vector<float> v;
    v.reserve(store.dimension_);
    double x = 0.0;
    while (fields >> x) v.push_back(static_cast<float>(x));
    if (!fields.eof()) throw fail("non-numeric vector component");
    if (v.size() != store.dimension_) {
      throw fail("expected " + std::to_string(store.dimension_) + " components, got " +
                 std::to_string(v.size()));
    }
    store.vectors_.insert_or_assign(fold_case(token), std::move(v));
  }
  if (store.dimension_ == 0) throw fail("empty embeddings file");
  return store;
}

EmbeddingStore EmbeddingStore::hashed(std::size_t dimension) {
  if (dimension == 0) throw Error(ErrorCode::kConfig, "embedding dimension must be positive", "embedding_dim");
  EmbeddingStore store;
  store.dimension_ = dimension;
  store.hashed_ = true;
  return store;
}

bool EmbeddingStore::contains(std::string_view folded) const {
  if (hashed_) return true;
  return vectors_.count(std::string(folded)) > 0 || vectors_.count(stem(folded)) > 0;
}

bool EmbeddingStore::accumulate(std::string_view folded, double weight, std::span<double> sum) const {
  if (sum.size() != dimension_) {
    throw Error(ErrorCode::kValidation, "embedding accumulator has wrong dimension");
  }
  if (hashed_) {
    std::uint64_t state = fnv1a(stem(folded));
    for (std::size_t i = 0; i < dimension_; ++i) {
      const double u = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
      sum[i] += weight * (2.0 * u - 1.0);
    }
    return true;
  }
  auto it = vectors_.find(std::string(folded));
  if (it == vectors_.end()) it = vectors_.find(stem(folded));
  if (it == vectors_.end()) return false;
  for (std::size_t i = 0; i < dimension_; ++i) sum[i] += weight * static_cast<double>(it->second[i]);
  return true;
}

double EmbeddingStore::idf(std::string_view folded) const {
  const auto it = idf_.find(std::string(folded));
  if (it != idf_.end()) return it->second;
  return std::log(1.0 + static_cast<double>(doc_count_)) + 1.0;
}

void EmbeddingStore::set_idf(std::unordered_map<std::string, double> idf, std::size_t doc_count) {
  idf_ = std::move(idf);
  doc_count_ = doc_count;
}

void EmbeddingStore::refresh_idf(const InvertedIndex& index) {
  const std::uint64_t generation = index.generation();
  const auto n = static_cast<double>(index.doc_count());
  std::unordered_map<std::string, double> table;
  for (auto& [word, df] : index.word_document_frequencies()) {
    table.emplace(word, std::log((1.0 + n) / (1.0 + static_cast<double>(df))) + 1.0);
  }
  set_idf(std::move(table), index.doc_count());
  idf_generation_ = generation;
}

std::vector<double> embed(std::span<const TextPiece> pieces, const EmbeddingStore& store) {
  std::vector<double> sum(store.dimension(), 0.0);
  double total = 0.0;
  for (const TextPiece& piece : pieces) {
    for (const Token& t : piece.tokens) {
      if (!t.content) continue;
      const std::string folded = fold_case(t.surface(piece.text));
      const double w = store.idf(folded);
      if (store.accumulate(folded, w, sum)) total += w;
    }
  }
  if (total > 0.0) {
    for (double& x : sum) x /= total;
  }
  return sum;
}

std::vector<double> sentence_embedding(const Sentence& sentence, std::string_view title,
                                       std::span<const Token> title_tokens,
                                       const EmbeddingStore& store) {
  const TextPiece pieces[] = {{title, title_tokens}, {sentence.text, sentence.tokens}};
  return embed(pieces, store);
}

std::vector<double> sentence_embedding(const Sentence& sentence, std::string_view title,
                                       const Lexicon& lexicon, const EmbeddingStore& store) {
  auto title_tokens = tokenize(title);
  lexicon.mark_content(title, title_tokens);
  return sentence_embedding(sentence, title, title_tokens, store);
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw Error(ErrorCode::kValidation, "cosine of vectors with dimensions " +
                                            std::to_string(u.size()) + " and " +
                                            std::to_string(v.size()));
  }
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// Filters

void sort_by_positional_score(std::vector<ScoredSentence>& candidates) {
  std::sort(candidates.begin(), candidates.end(), [](const ScoredSentence& a, const ScoredSentence& b) {
    if (a.score.s1 != b.score.s1) return a.score.s1 > b.score.s1;
    return a.sentence->id < b.sentence->id;
  });
}

namespace {

std::vector<std::string> folded_tokens(const Sentence& sentence) {
  std::vector<std::string> out;
  out.reserve(sentence.tokens.size());
  for (const Token& t : sentence.tokens) out.push_back(fold_case(t.surface(sentence.text)));
  return out;
}

std::vector<std::string> split_spaces(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < s.size()) {
    std::size_t end = s.find(' ', start);
    if (end == std::string_view::npos) end = s.size();
    if (end > start) out.emplace_back(s.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

bool contains_sequence(const std::vector<std::string>& haystack, const std::vector<std::string>& needle) {
  if (needle.empty()) return true;
  if (needle.size() > haystack.size()) return false;
  for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
    if (std::equal(needle.begin(), needle.end(), haystack.begin() + static_cast<std::ptrdiff_t>(i))) {
      return true;
    }
  }
  return false;
}

}  // namespace

std::vector<std::string> word_types(const Sentence& sentence) {
  std::vector<std::string> types;
  for (const Token& t : sentence.tokens) {
    if (!t.is_punct()) types.push_back(fold_case(t.surface(sentence.text)));
  }
  std::sort(types.begin(), types.end());
  types.erase(std::unique(types.begin(), types.end()), types.end());
  return types;
}

bool contains_entity(const Sentence& sentence, std::string_view entity_key) {
  return contains_sequence(folded_tokens(sentence), split_spaces(entity_key));
}

std::vector<ScoredSentence> apply_filters(const std::vector<ScoredSentence>& candidates,
                                          const FeatureSet& claim, const FilterParams& params) {
  std::vector<std::vector<std::string>> entity_patterns;
  for (const auto& key : claim.entity_keys()) entity_patterns.push_back(split_spaces(key));

  std::vector<ScoredSentence> kept;
  std::unordered_set<std::string> seen;
  for (const ScoredSentence& c : candidates) {
    const Sentence& s = *c.sentence;
    if (s.length_tokens() >= params.max_sentence_tokens) continue;

    if (!entity_patterns.empty()) {
      const auto folded = folded_tokens(s);
      const bool covers_all = std::all_of(entity_patterns.begin(), entity_patterns.end(),
                                          [&](const auto& p) { return contains_sequence(folded, p); });
      if (!covers_all) continue;
    }

    const auto types = word_types(s);
    std::size_t already = 0;
    for (const auto& w : types) already += seen.count(w);
    const double overlap =
        types.empty() ? 1.0 : static_cast<double>(already) / static_cast<double>(types.size());
    if (overlap >= params.novelty_max_overlap) continue;

    seen.insert(types.begin(), types.end());
    kept.push_back(c);
  }
  return kept;
}

std::vector<EvidenceCandidate> rerank_and_threshold(const std::vector<ScoredSentence>& filtered,
                                                    std::span<const double> claim_embedding,
                                                    const EmbeddingStore& store, double theta) {
  std::vector<EvidenceCandidate> out;
  for (const ScoredSentence& c : filtered) {
    const auto emb = sentence_embedding(*c.sentence, c.doc->title, c.doc->title_tokens, store);
    EvidenceCandidate e;
    e.sent_id = c.sentence->id;
    e.text = c.sentence->text;
    e.s1 = c.score.s1;
    e.s2 = cosine(claim_embedding, emb);
    e.combined = (e.s1 + e.s2) / 2.0;
    e.doc_id = c.doc->doc_id;
    e.doc_title = c.doc->title;
    if (e.combined >= theta) out.push_back(std::move(e));
  }
  std::sort(out.begin(), out.end(), [](const EvidenceCandidate& a, const EvidenceCandidate& b) {
    if (a.combined != b.combined) return a.combined > b.combined;
    return a.sent_id < b.sent_id;
  });
  return out;
}

}  // namespace claimdesk
