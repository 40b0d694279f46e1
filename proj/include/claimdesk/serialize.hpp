#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "claimdesk/corpus.hpp"
#include "claimdesk/engine.hpp"
#include "claimdesk/verdict.hpp"

namespace claimdesk {

/// Entity mention inside one sentence; offsets are bytes into the sentence text.
struct Highlight {
  std::uint32_t begin = 0;
  std::uint32_t end = 0;
  std::string surface;
  EntityKind kind = EntityKind::kOther;
};

/// Mentions of `doc` that lie entirely inside `sentence`, in order.
std::vector<Highlight> highlights(const Document& doc, const Sentence& sentence);

nlohmann::json to_json(const SentenceId& id);
SentenceId sentence_id_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LabelDistribution& d);

/// Evidence item as shown in a verdict column. `doc` adds entity highlights.
nlohmann::json to_json(const ClassifiedEvidence& item, const Document* doc = nullptr);
ClassifiedEvidence evidence_from_json(const nlohmann::json& j);

/// Highlights are resolved through `lookup` when it is given.
nlohmann::json to_json(const Verdict& verdict, const Engine* lookup = nullptr);
/// Inverse of to_json(Verdict); highlights are dropped.
Verdict verdict_from_json(const nlohmann::json& j);

nlohmann::json to_json(const StageTiming& timing);
nlohmann::json to_json(const PipelineTrace& trace);
/// Verdict plus timings and trace.
nlohmann::json to_json(const CheckResult& result, const Engine* lookup = nullptr);

/// Document with sentence boundaries and entity highlights.
nlohmann::json to_json(const Document& doc);

/// Verdict body without generation time, for comparing runs.
nlohmann::json stable_view(const nlohmann::json& verdict);

}  // namespace claimdesk
