#include "claimdesk/serialize.hpp"

#include "claimdesk/error.hpp"

namespace claimdesk {

using nlohmann::json;

namespace {

Label label_field(const json& j, const char* key) {
  const auto label = parse_label(j.at(key).get<std::string>());
  if (!label) throw Error(ErrorCode::kFormat, std::string("bad label in '") + key + "'", key);
  return *label;
}

json highlights_json(const Document& doc, const Sentence& sentence) {
  json out = json::array();
  for (const Highlight& h : highlights(doc, sentence)) {
    out.push_back({{"begin", h.begin}, {"end", h.end}, {"surface", h.surface}, {"kind", to_string(h.kind)}});
  }
  return out;
}

const Sentence* find_sentence(const Document& doc, std::uint32_t ordinal) {
  return ordinal < doc.sentences.size() ? &doc.sentences[ordinal] : nullptr;
}

}  // namespace

std::vector<Highlight> highlights(const Document& doc, const Sentence& sentence) {
  std::vector<Highlight> out;
  const std::uint32_t first = sentence.first_position;
  const auto last = first + static_cast<std::uint32_t>(sentence.tokens.size());
  for (const EntityMention& m : doc.entities) {
    if (m.span.begin < first || m.span.end > last || m.span.size() == 0) continue;
    const Token& a = sentence.tokens[m.span.begin - first];
    const Token& b = sentence.tokens[m.span.end - 1 - first];
    out.push_back(Highlight{a.begin, b.end, m.surface, m.kind});
  }
  return out;
}

json to_json(const SentenceId& id) { return {{"doc_id", id.doc_id}, {"ordinal", id.ordinal}}; }

SentenceId sentence_id_from_json(const json& j) {
  return SentenceId{j.at("doc_id").get<std::string>(), j.at("ordinal").get<std::uint32_t>()};
}

json to_json(const LabelDistribution& d) {
  return {{"supports", d[Label::kSupports]}, {"refutes", d[Label::kRefutes]}, {"other", d[Label::kOther]}};
}

json to_json(const ClassifiedEvidence& item, const Document* doc) {
  const EvidenceCandidate& e = item.evidence;
  json j = {{"sent_id", to_json(e.sent_id)},
            {"text", e.text},
            {"doc_id", e.doc_id},
            {"doc_title", e.doc_title},
            {"s1", e.s1},
            {"s2", e.s2},
            {"combined", e.combined},
            {"label", to_string(item.label())},
            {"probabilities", to_json(item.distribution)},
            {"unclassified", item.unclassified}};
  const Sentence* sentence = doc != nullptr ? find_sentence(*doc, e.sent_id.ordinal) : nullptr;
  j["entities"] = sentence != nullptr ? highlights_json(*doc, *sentence) : json::array();
  return j;
}

ClassifiedEvidence evidence_from_json(const json& j) {
  ClassifiedEvidence item;
  EvidenceCandidate& e = item.evidence;
  e.sent_id = sentence_id_from_json(j.at("sent_id"));
  e.text = j.at("text").get<std::string>();
  e.doc_id = j.at("doc_id").get<std::string>();
  e.doc_title = j.value("doc_title", "");
  e.s1 = j.at("s1").get<double>();
  e.s2 = j.at("s2").get<double>();
  e.combined = j.at("combined").get<double>();
  const json& p = j.at("probabilities");
  item.distribution[Label::kSupports] = p.at("supports").get<double>();
  item.distribution[Label::kRefutes] = p.at("refutes").get<double>();
  item.distribution[Label::kOther] = p.at("other").get<double>();
  item.unclassified = j.value("unclassified", false);
  return item;
}

json to_json(const Verdict& verdict, const Engine* lookup) {
  json columns = json::object();
  for (Label label : kAllLabels) {
    json column = json::array();
    for (const ClassifiedEvidence& item : verdict.column(label)) {
      std::shared_ptr<const Document> doc = lookup != nullptr ? lookup->document(item.evidence.doc_id) : nullptr;
      column.push_back(to_json(item, doc.get()));
    }
    columns[to_string(label)] = std::move(column);
  }
  return {{"claim_id", verdict.claim_id},
          {"claim_text", verdict.claim_text},
          {"global_label", to_string(verdict.global_label)},
          {"columns", std::move(columns)},
          {"generated_at", format_iso8601(verdict.generated_at)},
          {"config_fingerprint", verdict.config_fingerprint}};
}

Verdict verdict_from_json(const json& j) {
  try {
    Verdict v;
    v.claim_id = j.at("claim_id").get<std::string>();
    v.claim_text = j.at("claim_text").get<std::string>();
    v.global_label = label_field(j, "global_label");
    for (Label label : kAllLabels) {
      for (const json& item : j.at("columns").at(to_string(label))) {
        v.columns[static_cast<std::size_t>(label)].push_back(evidence_from_json(item));
      }
    }
    const auto at = parse_iso8601(j.at("generated_at").get<std::string>());
    if (!at) throw Error(ErrorCode::kFormat, "bad generated_at", "generated_at");
    v.generated_at = *at;
    v.config_fingerprint = j.value("config_fingerprint", "");
    return v;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("malformed verdict: ") + e.what());
  }
}

json to_json(const StageTiming& t) {
  return {{"stage", t.stage}, {"elapsed_ms", t.elapsed_ms}, {"count_in", t.count_in}, {"count_out", t.count_out}};
}

json to_json(const PipelineTrace& t) {
  return {{"claim_features", t.claim_features},         {"documents", t.documents},
          {"sentences_scored", t.sentences_scored},     {"sentences_matched", t.sentences_matched},
          {"sentences_filtered", t.sentences_filtered}, {"sentences_selected", t.sentences_selected}};
}

json to_json(const CheckResult& result, const Engine* lookup) {
  json j = to_json(result.verdict, lookup);
  json timings = json::array();
  for (const StageTiming& t : result.timings) timings.push_back(to_json(t));
  j["timings"] = std::move(timings);
  j["total_ms"] = result.total_ms;
  j["trace"] = to_json(result.trace);
  return j;
}

json to_json(const Document& doc) {
  json sentences = json::array();
  for (const Sentence& s : doc.sentences) {
    sentences.push_back({{"ordinal", s.id.ordinal},
                         {"text", s.text},
                         {"body_offset", s.body_offset},
                         {"length_tokens", s.length_tokens()},
                         {"entities", highlights_json(doc, s)}});
  }
  json title_entities = json::array();
  for (const EntityMention& m : doc.entities) {
    if (m.span.end > doc.title_tokens.size()) continue;
    title_entities.push_back({{"begin", doc.title_tokens[m.span.begin].begin},
                              {"end", doc.title_tokens[m.span.end - 1].end},
                              {"surface", m.surface},
                              {"kind", to_string(m.kind)}});
  }
  json j = {{"doc_id", doc.doc_id},
            {"title", doc.title},
            {"title_entities", std::move(title_entities)},
            {"body", doc.body},
            {"sentences", std::move(sentences)},
            {"length", doc.length}};
  j["published_at"] = doc.published_at ? json(format_iso8601(*doc.published_at)) : json(nullptr);
  return j;
}

json stable_view(const json& verdict) {
  json out = verdict;
  for (const char* key : {"generated_at", "timings", "total_ms"}) out.erase(key);
  return out;
}

}  // namespace claimdesk
