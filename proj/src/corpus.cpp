#include "claimdesk/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <mutex>
#include <sstream>

#include <json.hpp>

#include "claimdesk/error.hpp"

namespace claimdesk {

using nlohmann::json;

const char* to_string(EntityKind kind) {
  switch (kind) {
    case EntityKind::kPerson: return "PERSON";
    case EntityKind::kOrg: return "ORG";
    case EntityKind::kLoc: return "LOC";
    case EntityKind::kOther: return "OTHER";
  }
  return "OTHER";
}

std::optional<EntityKind> parse_entity_kind(std::string_view text) {
  std::string upper(text);
  for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (upper == "PERSON" || upper == "PER") return EntityKind::kPerson;
  if (upper == "ORG" || upper == "ORGANIZATION" || upper == "ORGANISATION") return EntityKind::kOrg;
  if (upper == "LOC" || upper == "LOCATION" || upper == "GPE") return EntityKind::kLoc;
  if (upper == "OTHER" || upper == "MISC") return EntityKind::kOther;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Gazetteer

Gazetteer Gazetteer::parse(std::string_view text, std::string_view source) {
  Gazetteer g;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;

    const auto tab = line.find('\t');
    const auto where = std::string(source) + ":" + std::to_string(line_no);
    if (tab == std::string_view::npos) {
      throw Error(ErrorCode::kConfig, where + ": expected surface<TAB>kind", std::string(source));
    }
    const auto kind = parse_entity_kind(line.substr(tab + 1));
    if (!kind) {
      throw Error(ErrorCode::kConfig, where + ": unknown entity kind '" +
                                          std::string(line.substr(tab + 1)) + "'",
                  std::string(source));
    }
    g.add(line.substr(0, tab), *kind);
  }
  return g;
}

Gazetteer Gazetteer::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kConfig, "cannot read gazetteer " + path.string(), "gazetteer");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.string());
}

void Gazetteer::add(std::string_view surface, EntityKind kind) {
  const auto tokens = tokenize(surface);
  if (tokens.empty()) return;
  Entry entry{{}, kind};
  for (const Token& t : tokens) entry.tokens.emplace_back(t.surface(surface));

  auto& bucket = by_first_token_[entry.tokens.front()];
  for (const Entry& existing : bucket) {
    if (existing.tokens == entry.tokens) return;  // first definition wins
  }
  bucket.push_back(std::move(entry));
  std::stable_sort(bucket.begin(), bucket.end(), [](const Entry& a, const Entry& b) {
    return a.tokens.size() > b.tokens.size();
  });
  ++size_;
}

std::optional<Gazetteer::Match> Gazetteer::match(std::string_view text,
                                                 std::span<const Token> tokens,
                                                 std::size_t start) const {
  if (start >= tokens.size()) return std::nullopt;
  const auto it = by_first_token_.find(std::string(tokens[start].surface(text)));
  if (it == by_first_token_.end()) return std::nullopt;
  for (const Entry& entry : it->second) {
    const std::size_t len = entry.tokens.size();
    if (start + len > tokens.size()) continue;
    bool ok = true;
    for (std::size_t k = 1; ok && k < len; ++k) ok = tokens[start + k].surface(text) == entry.tokens[k];
    if (ok) return Match{static_cast<std::uint32_t>(len), entry.kind};
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Entity extraction

namespace {

bool sentence_initial(std::string_view text, std::span<const Token> tokens, std::size_t i) {
  while (i > 0) {
    const std::string_view prev = tokens[i - 1].surface(text);
    if (!tokens[i - 1].is_punct()) return false;
    if (prev == "." || prev == "!" || prev == "?") return true;
    if (prev == "\"" || prev == "'" || prev == "(" || prev == "“" || prev == "‘" || prev == "[") {
      --i;
      continue;
    }
    return false;
  }
  return true;
}

}  // namespace

std::vector<EntityMention> extract_entities(std::string_view text, std::span<const Token> tokens,
                                            const Gazetteer& gazetteer, const Lexicon& lexicon) {
  std::vector<EntityMention> mentions;
  std::vector<bool> covered(tokens.size(), false);

  auto emit = [&](std::size_t begin, std::size_t end, EntityKind kind) {
    EntityMention m;
    m.surface = std::string(text.substr(tokens[begin].begin, tokens[end - 1].end - tokens[begin].begin));
    m.kind = kind;
    m.span = {tokens[begin].position, tokens[end - 1].position + 1};
    mentions.push_back(std::move(m));
    for (std::size_t k = begin; k < end; ++k) covered[k] = true;
  };

  if (!gazetteer.empty()) {
    for (std::size_t i = 0; i < tokens.size();) {
      if (tokens[i].is_punct()) {
        ++i;
        continue;
      }
      if (auto hit = gazetteer.match(text, tokens, i)) {
        emit(i, i + hit->length, hit->kind);
        i += hit->length;
      } else {
        ++i;
      }
    }
  }

  auto capitalized = [&](std::size_t i) {
    if (covered[i] || tokens[i].kind != TokenKind::kWord) return false;
    const std::string_view s = tokens[i].surface(text);
    return starts_uppercase(s) && !lexicon.is_stopword(fold_case(s));
  };
  for (std::size_t i = 0; i < tokens.size();) {
    if (!capitalized(i)) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < tokens.size() && capitalized(j)) ++j;
    if (j - i > 1 || !sentence_initial(text, tokens, i)) emit(i, j, EntityKind::kOther);
    i = j;
  }

  std::sort(mentions.begin(), mentions.end(),
            [](const EntityMention& a, const EntityMention& b) { return a.span.begin < b.span.begin; });
  return mentions;
}

// ---------------------------------------------------------------------------
// Features

std::string feature_key(FeatureKind kind, std::string_view text) {
  const char prefix = kind == FeatureKind::kWord ? 'w' : kind == FeatureKind::kLemma ? 'l' : 'e';
  std::string key;
  key.reserve(text.size() + 2);
  key.push_back(prefix);
  key.push_back(':');
  key.append(text);
  return key;
}

FeatureKind feature_key_kind(std::string_view key) {
  if (!key.empty() && key[0] == 'l') return FeatureKind::kLemma;
  if (!key.empty() && key[0] == 'e') return FeatureKind::kEntity;
  return FeatureKind::kWord;
}

std::string_view feature_key_text(std::string_view key) {
  return key.size() >= 2 ? key.substr(2) : std::string_view{};
}

std::string entity_key_text(std::string_view surface) {
  std::string out;
  for (const Token& t : tokenize(surface)) {
    if (!out.empty()) out.push_back(' ');
    out += fold_case(t.surface(surface));
  }
  return out;
}

std::vector<std::string> FeatureSet::keys() const {
  std::vector<std::string> out;
  out.reserve(words.size() + lemmas.size() + entities.size());
  for (const auto& w : words) out.push_back(feature_key(FeatureKind::kWord, w));
  for (const auto& l : lemmas) out.push_back(feature_key(FeatureKind::kLemma, l));
  for (const auto& e : entity_keys()) out.push_back(feature_key(FeatureKind::kEntity, e));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::string> FeatureSet::entity_keys() const {
  std::vector<std::string> out;
  for (const auto& m : entities) out.push_back(entity_key_text(m.surface));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void FeatureBuilder::add_tokens(std::string_view text, std::span<const Token> tokens,
                                std::uint32_t position_offset) {
  for (const Token& t : tokens) {
    if (!t.content) continue;
    std::string word = fold_case(t.surface(text));
    std::string lemma = stem(word);
    const std::uint32_t pos = t.position + position_offset;
    features_.positions[feature_key(FeatureKind::kWord, word)].push_back(pos);
    features_.positions[feature_key(FeatureKind::kLemma, lemma)].push_back(pos);
    features_.words.insert(std::move(word));
    features_.lemmas.insert(std::move(lemma));
  }
}

void FeatureBuilder::add_entities(std::span<const EntityMention> mentions) {
  for (const EntityMention& m : mentions) {
    features_.positions[feature_key(FeatureKind::kEntity, entity_key_text(m.surface))].push_back(
        m.span.begin);
    features_.entities.push_back(m);
  }
}

FeatureSet FeatureBuilder::build() && {
  for (auto& [key, pos] : features_.positions) std::sort(pos.begin(), pos.end());
  std::sort(features_.entities.begin(), features_.entities.end(),
            [](const EntityMention& a, const EntityMention& b) { return a.span.begin < b.span.begin; });
  return std::move(features_);
}

// ---------------------------------------------------------------------------
// Documents

std::uint32_t Document::token_count() const {
  std::uint32_t n = static_cast<std::uint32_t>(title_tokens.size());
  for (const Sentence& s : sentences) n += static_cast<std::uint32_t>(s.tokens.size());
  return n;
}

const Token& Document::token_at(std::uint32_t position) const {
  if (position < title_tokens.size()) return title_tokens[position];
  auto it = std::upper_bound(sentences.begin(), sentences.end(), position,
                             [](std::uint32_t p, const Sentence& s) { return p < s.first_position; });
  if (it == sentences.begin()) throw Error(ErrorCode::kNotFound, "token position out of range");
  --it;
  const std::uint32_t local = position - it->first_position;
  if (local >= it->tokens.size()) throw Error(ErrorCode::kNotFound, "token position out of range");
  return it->tokens[local];
}

std::string_view Document::token_surface(std::uint32_t position) const {
  if (position < title_tokens.size()) return title_tokens[position].surface(title);
  const Token& t = token_at(position);
  auto it = std::upper_bound(sentences.begin(), sentences.end(), position,
                             [](std::uint32_t p, const Sentence& s) { return p < s.first_position; });
  --it;
  return t.surface(it->text);
}

// ---------------------------------------------------------------------------
// Corpus records

namespace {

std::string require_string(const json& obj, const char* field, bool allow_empty) {
  const auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) {
    throw Error(ErrorCode::kValidation, std::string("missing field '") + field + "'", field);
  }
  if (!it->is_string()) {
    throw Error(ErrorCode::kValidation, std::string("field '") + field + "' must be a string", field);
  }
  auto value = it->get<std::string>();
  if (!allow_empty && value.empty()) {
    throw Error(ErrorCode::kValidation, std::string("field '") + field + "' is empty", field);
  }
  return value;
}

}  // namespace

CorpusRecord parse_corpus_record(std::string_view json_line) {
  json obj;
  try {
    obj = json::parse(json_line);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kValidation, std::string("malformed record: ") + e.what());
  }
  if (!obj.is_object()) throw Error(ErrorCode::kValidation, "record must be a JSON object");

  CorpusRecord rec;
  rec.id = require_string(obj, "id", false);
  rec.body = require_string(obj, "body", false);
  if (obj.contains("title") && !obj["title"].is_null()) rec.title = require_string(obj, "title", true);
  if (obj.contains("published_at") && !obj["published_at"].is_null()) {
    const auto raw = require_string(obj, "published_at", false);
    rec.published_at = parse_iso8601(raw);
    if (!rec.published_at) {
      throw Error(ErrorCode::kValidation, "field 'published_at' is not ISO-8601: " + raw, "published_at");
    }
  }
  if (obj.contains("entities") && !obj["entities"].is_null()) {
    const json& list = obj["entities"];
    if (!list.is_array()) throw Error(ErrorCode::kValidation, "field 'entities' must be an array", "entities");
    rec.entities.emplace();
    for (const json& e : list) {
      if (!e.is_object()) throw Error(ErrorCode::kValidation, "entity must be an object", "entities");
      PrecomputedEntity pe;
      pe.surface = require_string(e, "surface", false);
      const auto kind = parse_entity_kind(require_string(e, "kind", false));
      if (!kind) throw Error(ErrorCode::kValidation, "unknown entity kind", "entities");
      pe.kind = *kind;
      if (e.contains("start") || e.contains("end")) {
        if (!e.value("start", json()).is_number_unsigned() || !e.value("end", json()).is_number_unsigned()) {
          throw Error(ErrorCode::kValidation, "entity span needs unsigned 'start' and 'end'", "entities");
        }
        pe.span = TokenSpan{e["start"].get<std::uint32_t>(), e["end"].get<std::uint32_t>()};
        if (pe.span->end <= pe.span->begin) {
          throw Error(ErrorCode::kValidation, "entity span is empty", "entities");
        }
      }
      rec.entities->push_back(std::move(pe));
    }
  }
  return rec;
}

std::string to_json_line(const CorpusRecord& rec) {
  json obj = {{"id", rec.id}, {"title", rec.title}, {"body", rec.body}};
  if (rec.published_at) obj["published_at"] = format_iso8601(*rec.published_at);
  if (rec.entities) {
    json list = json::array();
    for (const auto& e : *rec.entities) {
      json item = {{"surface", e.surface}, {"kind", to_string(e.kind)}};
      if (e.span) {
        item["start"] = e.span->begin;
        item["end"] = e.span->end;
      }
      list.push_back(std::move(item));
    }
    obj["entities"] = std::move(list);
  }
  return obj.dump();
}

CorpusRecord to_record(const Document& doc) {
  CorpusRecord rec;
  rec.id = doc.doc_id;
  rec.title = doc.title;
  rec.body = doc.body;
  rec.published_at = doc.published_at;
  rec.entities.emplace();
  for (const auto& m : doc.entities) rec.entities->push_back({m.surface, m.kind, m.span});
  return rec;
}

void read_corpus(std::istream& in, const std::function<void(CorpusRecord)>& sink) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    CorpusRecord rec;
    try {
      rec = parse_corpus_record(line);
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what(), e.field());
    }
    sink(std::move(rec));
  }
}

// ---------------------------------------------------------------------------
// Analyzer

Analyzer::Analyzer(std::shared_ptr<const Lexicon> lexicon, std::shared_ptr<const Gazetteer> gazetteer)
    : lexicon_(std::move(lexicon)), gazetteer_(std::move(gazetteer)) {}

namespace {

// Positions of `pattern` (by surface) inside a token stream.
void locate_precomputed(const PrecomputedEntity& entity, std::string_view text,
                        std::span<const Token> tokens, std::uint32_t offset,
                        std::vector<EntityMention>& out) {
  const auto pattern = tokenize(entity.surface);
  if (pattern.empty() || pattern.size() > tokens.size()) return;
  for (std::size_t i = 0; i + pattern.size() <= tokens.size(); ++i) {
    bool ok = true;
    for (std::size_t k = 0; ok && k < pattern.size(); ++k) {
      ok = tokens[i + k].surface(text) == pattern[k].surface(entity.surface);
    }
    if (!ok) continue;
    out.push_back({std::string(text.substr(tokens[i].begin, tokens[i + pattern.size() - 1].end - tokens[i].begin)),
                   entity.kind,
                   {tokens[i].position + offset,
                    tokens[i + pattern.size() - 1].position + offset + 1}});
    i += pattern.size() - 1;
  }
}

}  // namespace

Document Analyzer::ingest_document(const CorpusRecord& record) const {
  if (record.id.empty()) throw Error(ErrorCode::kValidation, "missing field 'id'", "id");
  if (record.body.empty()) throw Error(ErrorCode::kValidation, "field 'body' is empty", "body");

  Document doc;
  doc.doc_id = record.id;
  doc.title = record.title;
  doc.body = record.body;
  doc.published_at = record.published_at;

  doc.title_tokens = tokenize(doc.title);
  lexicon_->mark_content(doc.title, doc.title_tokens);
  const auto title_len = static_cast<std::uint32_t>(doc.title_tokens.size());

  auto body_tokens = tokenize(doc.body);
  if (body_tokens.empty()) throw Error(ErrorCode::kValidation, "field 'body' has no tokens", "body");
  lexicon_->mark_content(doc.body, body_tokens);

  for (const TokenSpan& span : segment_sentences(doc.body, body_tokens, *lexicon_)) {
    Sentence s;
    s.id = {doc.doc_id, static_cast<std::uint32_t>(doc.sentences.size())};
    s.body_offset = body_tokens[span.begin].begin;
    const std::uint32_t end_offset = body_tokens[span.end - 1].end;
    s.text = doc.body.substr(s.body_offset, end_offset - s.body_offset);
    s.first_position = title_len + span.begin;
    s.tokens.reserve(span.size());
    for (std::uint32_t i = span.begin; i < span.end; ++i) {
      Token t = body_tokens[i];
      t.begin -= s.body_offset;
      t.end -= s.body_offset;
      t.position = i - span.begin;
      s.tokens.push_back(t);
    }
    doc.sentences.push_back(std::move(s));
  }

  if (record.entities) {
    for (const PrecomputedEntity& e : *record.entities) {
      if (e.span) {
        const std::uint32_t total = title_len + static_cast<std::uint32_t>(body_tokens.size());
        if (e.span->end > total) {
          throw Error(ErrorCode::kValidation, "entity span outside document tokens", "entities");
        }
        doc.entities.push_back({e.surface, e.kind, *e.span});
      } else {
        locate_precomputed(e, doc.title, doc.title_tokens, 0, doc.entities);
        locate_precomputed(e, doc.body, body_tokens, title_len, doc.entities);
      }
    }
    std::sort(doc.entities.begin(), doc.entities.end(),
              [](const EntityMention& a, const EntityMention& b) {
                return a.span.begin != b.span.begin ? a.span.begin < b.span.begin
                                                    : a.span.end > b.span.end;
              });
    // keep the outermost of overlapping annotations
    std::vector<EntityMention> kept;
    for (auto& m : doc.entities) {
      if (!kept.empty() && m.span.begin < kept.back().span.end) continue;
      kept.push_back(std::move(m));
    }
    doc.entities = std::move(kept);
  } else {
    doc.entities = extract_entities(doc.title, doc.title_tokens, *gazetteer_, *lexicon_);
    auto body_entities = extract_entities(doc.body, body_tokens, *gazetteer_, *lexicon_);
    for (auto& m : body_entities) {
      m.span.begin += title_len;
      m.span.end += title_len;
      doc.entities.push_back(std::move(m));
    }
  }

  FeatureBuilder builder;
  builder.add_tokens(doc.title, doc.title_tokens, 0);
  builder.add_tokens(doc.body, body_tokens, title_len);
  builder.add_entities(doc.entities);
  doc.features = std::move(builder).build();

  for (const Token& t : doc.title_tokens) doc.length += t.is_punct() ? 0 : 1;
  for (const Token& t : body_tokens) doc.length += t.is_punct() ? 0 : 1;
  return doc;
}

Claim Analyzer::analyze_claim(std::string_view text) const {
  Claim claim;
  claim.text = std::string(text);
  claim.tokens = tokenize(claim.text);
  lexicon_->mark_content(claim.text, claim.tokens);
  const auto entities = extract_entities(claim.text, claim.tokens, *gazetteer_, *lexicon_);
  FeatureBuilder builder;
  builder.add_tokens(claim.text, claim.tokens, 0);
  builder.add_entities(entities);
  claim.features = std::move(builder).build();
  return claim;
}

// ---------------------------------------------------------------------------
// Corpus

void Corpus::add(std::shared_ptr<const Document> doc) {
  std::unique_lock lock(mutex_);
  auto [it, inserted] = by_id_.try_emplace(doc->doc_id, doc);
  if (!inserted) {
    throw Error(ErrorCode::kDuplicate, "duplicate doc_id '" + doc->doc_id + "'", "id");
  }
  ordered_.push_back(std::move(doc));
}

bool Corpus::contains(std::string_view doc_id) const {
  std::shared_lock lock(mutex_);
  return by_id_.count(std::string(doc_id)) > 0;
}

std::shared_ptr<const Document> Corpus::find(std::string_view doc_id) const {
  std::shared_lock lock(mutex_);
  const auto it = by_id_.find(std::string(doc_id));
  return it == by_id_.end() ? nullptr : it->second;
}

std::size_t Corpus::size() const {
  std::shared_lock lock(mutex_);
  return ordered_.size();
}

std::vector<std::shared_ptr<const Document>> Corpus::documents() const {
  std::shared_lock lock(mutex_);
  return ordered_;
}

}  // namespace claimdesk
