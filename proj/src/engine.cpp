#include "claimdesk/engine.hpp"

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <mutex>

#include "claimdesk/error.hpp"
#include "claimdesk/resources.hpp"

namespace claimdesk {

std::shared_ptr<spdlog::logger> logger() {
  static std::once_flag once;
  static std::shared_ptr<spdlog::logger> instance;
  std::call_once(once, [] {
    instance = spdlog::get("claimdesk");
    if (!instance) {
      instance = spdlog::stderr_logger_mt("claimdesk");
      instance->set_level(spdlog::level::warn);
    }
  });
  return instance;
}

void set_log_level(std::string_view level) {
  const auto parsed = spdlog::level::from_str(std::string(level));
  if (parsed == spdlog::level::off && level != "off") {
    throw Error(ErrorCode::kConfig, "unknown log level '" + std::string(level) + "'", "log_level");
  }
  logger()->set_level(parsed);
}

namespace {

constexpr char kSnapshotMagic[8] = {'C', 'L', 'M', 'D', 'S', 'N', 'P', '\0'};
constexpr std::uint32_t kSnapshotVersion = 1;

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::size_t code_points(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

std::unordered_set<std::string> list_or_default(const std::string& path, std::string_view fallback) {
  return path.empty() ? Lexicon::parse_list(fallback) : Lexicon::read_list(path);
}

Bm25Params bm25_params(const Config& c) { return Bm25Params{c.bm25_k1, c.bm25_b, c.w_ent}; }

}  // namespace

std::unique_ptr<Engine> Engine::create(const Config& config) {
  config.validate();
  auto lexicon = std::make_shared<const Lexicon>(list_or_default(config.stopwords, resources::default_stopwords()),
                                                 list_or_default(config.abbreviations, resources::default_abbreviations()),
                                                 list_or_default(config.negation_cues, resources::default_negation_cues()));
  auto gazetteer = std::make_shared<const Gazetteer>(config.gazetteer.empty() ? Gazetteer{}
                                                                             : Gazetteer::load(config.gazetteer));
  EmbeddingStore embeddings = config.embeddings.empty() ? EmbeddingStore::hashed(config.embedding_dim)
                                                        : EmbeddingStore::load(config.embeddings);
  std::unique_ptr<Classifier> classifier;
  if (config.classifier == "remote") {
    RemoteOptions options;
    options.endpoint = config.classifier_endpoint;
    options.timeout = std::chrono::milliseconds(config.classifier_timeout_ms);
    options.max_in_flight = std::max<std::size_t>(1, config.classifier_max_in_flight);
    classifier = std::make_unique<RemoteClassifier>(std::move(options));
  } else {
    classifier = std::make_unique<LexicalBaseline>(lexicon, config.support_overlap);
  }
  auto analyzer = std::make_shared<const Analyzer>(lexicon, gazetteer);
  return std::make_unique<Engine>(config, std::move(analyzer), std::move(embeddings), std::move(classifier));
}

Engine::Engine(Config config, std::shared_ptr<const Analyzer> analyzer, EmbeddingStore embeddings,
               std::unique_ptr<Classifier> classifier)
    : config_(std::move(config)),
      analyzer_(std::move(analyzer)),
      index_(std::make_unique<InvertedIndex>(bm25_params(config_))),
      embeddings_(std::move(embeddings)),
      classifier_(std::move(classifier)) {}

void Engine::add_document(const CorpusRecord& record) {
  Document doc = analyzer_->ingest_document(record);
  if (corpus_.contains(doc.doc_id)) {
    throw Error(ErrorCode::kDuplicate, "document '" + doc.doc_id + "' already exists", "id");
  }
  FeatureSet features = std::move(doc.features);
  doc.features = FeatureSet{};
  const std::string id = doc.doc_id;
  const std::uint32_t length = doc.length;
  // The corpus goes first so that anything retrievable is also resolvable.
  corpus_.add(std::make_shared<const Document>(std::move(doc)));
  index_->index_document(id, length, features);
}

std::size_t Engine::load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot read corpus " + path.string(), "corpus");
  return load_corpus(in);
}

std::size_t Engine::load_corpus(std::istream& in) {
  std::size_t count = 0;
  read_corpus(in, [&](CorpusRecord record) {
    add_document(record);
    ++count;
  });
  logger()->info("loaded {} documents ({} total)", count, corpus_.size());
  return count;
}

std::shared_ptr<const Document> Engine::document(std::string_view doc_id) const {
  return corpus_.find(doc_id);
}

std::string Engine::claim_id(std::string_view claim_text, const Config& effective) const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
  };
  mix(claim_text);
  mix("\n");
  mix(effective.fingerprint());
  char buf[19];
  std::snprintf(buf, sizeof buf, "c-%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void Engine::refresh_embeddings() const {
  {
    std::shared_lock lock(embeddings_mutex_);
    if (idf_loaded_ && embeddings_.idf_generation() == index_->generation()) return;
  }
  std::unique_lock lock(embeddings_mutex_);
  if (idf_loaded_ && embeddings_.idf_generation() == index_->generation()) return;
  embeddings_.refresh_idf(*index_);
  idf_loaded_ = true;
}

CheckResult Engine::check(const ClaimRequest& request) const {
  const auto started = Clock::now();
  Config effective = config_;
  if (request.theta) effective.theta = *request.theta;
  if (request.k_docs) effective.k_docs = *request.k_docs;
  if (!(effective.theta >= 0.0 && effective.theta <= 1.0)) {
    throw Error(ErrorCode::kValidation, "theta must lie in [0, 1]", "theta");
  }
  if (effective.k_docs == 0) throw Error(ErrorCode::kValidation, "k_docs must be at least 1", "k_docs");

  const std::string& text = request.claim_text;
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw Error(ErrorCode::kValidation, "claim text is empty", "claim_text");
  }
  if (code_points(text) > kMaxClaimChars) {
    throw Error(ErrorCode::kValidation,
                "claim text exceeds " + std::to_string(kMaxClaimChars) + " characters", "claim_text");
  }
  const Claim claim = analyzer_->analyze_claim(text);
  if (claim.features.lemmas.empty()) {
    throw Error(ErrorCode::kEmptyQuery, "claim has no matchable content words", "claim_text");
  }

  CheckResult result;
  PipelineTrace& trace = result.trace;
  trace.claim_features = claim.features.keys().size();

  // Retrieval.
  auto t = Clock::now();
  const auto hits = index_->retrieve(claim.features, effective.k_docs);
  trace.documents = hits.size();
  result.timings.push_back({"doc_retrieval", elapsed_ms(t), trace.claim_features, hits.size()});

  // Sentence ranking.
  t = Clock::now();
  std::vector<std::shared_ptr<const Document>> docs;
  docs.reserve(hits.size());
  for (const auto& hit : hits) {
    if (auto doc = corpus_.find(hit.doc_id)) docs.push_back(std::move(doc));
  }
  std::vector<std::string> match_keys;
  for (const auto& w : claim.features.words) match_keys.push_back(feature_key(FeatureKind::kWord, w));
  for (const auto& l : claim.features.lemmas) match_keys.push_back(feature_key(FeatureKind::kLemma, l));
  std::vector<std::string> doc_ids;
  doc_ids.reserve(docs.size());
  for (const auto& doc : docs) doc_ids.push_back(doc->doc_id);
  const auto positions = index_->match_positions(match_keys, doc_ids);

  std::vector<ScoredSentence> scored;
  const std::size_t lemma_count = claim.features.lemmas.size();
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (const Sentence& s : docs[d]->sentences) {
      ScoredSentence item{docs[d].get(), &s, positional_score_at(s, positions[d], lemma_count)};
      if (item.score.s1 > 0.0) ++trace.sentences_matched;
      ++trace.sentences_scored;
      scored.push_back(std::move(item));
    }
  }
  // Sentences that cannot reach theta even with s2 = 1 sort last; drop them first.
  scored.erase(std::remove_if(scored.begin(), scored.end(),
                              [&](const ScoredSentence& s) { return (s.score.s1 + 1.0) / 2.0 < effective.theta; }),
               scored.end());
  sort_by_positional_score(scored);
  const auto filtered =
      apply_filters(scored, claim.features,
                    FilterParams{effective.max_sentence_tokens, effective.novelty_max_overlap});
  trace.sentences_filtered = filtered.size();
  for (const auto& f : filtered) trace.kept_in_filter_order.push_back(f.sentence->id);

  refresh_embeddings();
  std::vector<EvidenceCandidate> selected;
  {
    std::shared_lock lock(embeddings_mutex_);
    const TextPiece piece{claim.text, claim.tokens};
    const auto claim_vec = embed(std::span<const TextPiece>(&piece, 1), embeddings_);
    selected = rerank_and_threshold(filtered, claim_vec, embeddings_, effective.theta);
  }
  trace.sentences_selected = selected.size();
  result.timings.push_back({"sentence_ranking", elapsed_ms(t), trace.sentences_scored, selected.size()});

  // Classification and aggregation.
  t = Clock::now();
  const auto classes = classifier_->classify_batch(claim, selected);
  result.evidence.reserve(selected.size());
  std::size_t unclassified = 0;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    ClassifiedEvidence item{selected[i], classes[i].distribution, classes[i].unclassified};
    if (item.unclassified) {
      ++unclassified;
      logger()->warn("evidence {}#{} unclassified: {}", item.evidence.doc_id, item.evidence.sent_id.ordinal,
                     classes[i].error);
    }
    result.evidence.push_back(std::move(item));
  }
  result.verdict = build_verdict(claim_id(text, effective), text, result.evidence);
  result.verdict.generated_at = now_utc();
  result.verdict.config_fingerprint = effective.fingerprint();
  result.timings.push_back({"classification", elapsed_ms(t), selected.size(), selected.size() - unclassified});

  result.total_ms = elapsed_ms(started);
  logger()->info("claim {} label={} docs={} sentences={} selected={} retrieval_ms={:.2f} ranking_ms={:.2f} "
                 "classification_ms={:.2f}",
                 result.verdict.claim_id, to_string(result.verdict.global_label), trace.documents,
                 trace.sentences_scored, trace.sentences_selected, result.timings[0].elapsed_ms,
                 result.timings[1].elapsed_ms, result.timings[2].elapsed_ms);
  return result;
}

void Engine::save_snapshot(const std::filesystem::path& path) const {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kBackend, "cannot write snapshot " + tmp.string());
    out.write(kSnapshotMagic, sizeof kSnapshotMagic);
    out.write(reinterpret_cast<const char*>(&kSnapshotVersion), sizeof kSnapshotVersion);
    index_->save(out);
    const auto docs = corpus_.documents();
    const std::uint64_t count = docs.size();
    out.write(reinterpret_cast<const char*>(&count), sizeof count);
    for (const auto& doc : docs) out << to_json_line(to_record(*doc)) << '\n';
    if (!out) throw Error(ErrorCode::kBackend, "failed writing snapshot " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void Engine::load_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot read snapshot " + path.string(), "snapshot");
  char magic[sizeof kSnapshotMagic];
  std::uint32_t version = 0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  if (!in || std::memcmp(magic, kSnapshotMagic, sizeof magic) != 0) {
    throw Error(ErrorCode::kFormat, path.string() + " is not a snapshot", "snapshot");
  }
  if (version != kSnapshotVersion) {
    throw Error(ErrorCode::kFormat, "unsupported snapshot version " + std::to_string(version), "snapshot");
  }
  auto index = InvertedIndex::load(in);
  index->set_params(bm25_params(config_));
  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), sizeof count);
  if (!in || count != index->doc_count()) {
    throw Error(ErrorCode::kFormat, "snapshot document section is inconsistent", "snapshot");
  }
  Corpus corpus;
  std::string line;
  for (std::uint64_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw Error(ErrorCode::kFormat, "snapshot is truncated", "snapshot");
    Document doc = analyzer_->ingest_document(parse_corpus_record(line));
    if (!index->contains(doc.doc_id)) {
      throw Error(ErrorCode::kFormat, "snapshot document '" + doc.doc_id + "' is not indexed", "snapshot");
    }
    doc.features = FeatureSet{};
    corpus.add(std::make_shared<const Document>(std::move(doc)));
  }
  if (corpus_.size() > 0) throw Error(ErrorCode::kValidation, "engine already holds documents", "snapshot");
  for (const auto& doc : corpus.documents()) corpus_.add(doc);
  index_ = std::move(index);
  std::unique_lock lock(embeddings_mutex_);
  idf_loaded_ = false;
}

}  // namespace claimdesk
