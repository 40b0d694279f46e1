#include "claimdesk/feedback.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <tuple>

#include "claimdesk/error.hpp"

namespace claimdesk {

using nlohmann::json;

void validate(const FeedbackRecord& r) {
  if (r.claim_id.empty()) throw Error(ErrorCode::kValidation, "feedback needs a claim_id", "claim_id");
  if (r.reviewer_id.empty()) {
    throw Error(ErrorCode::kValidation, "feedback needs a reviewer_id", "reviewer_id");
  }
  if (!r.relevant && !r.correct_label) {
    throw Error(ErrorCode::kValidation, "feedback needs 'relevant' or 'correct_label'", "relevant");
  }
  if (r.target.is_global() && r.relevant) {
    throw Error(ErrorCode::kValidation, "global feedback carries only 'correct_label'", "relevant");
  }
}

json to_json(const FeedbackRecord& r) {
  json j;
  j["id"] = r.id;
  j["claim_id"] = r.claim_id;
  if (r.target.is_global()) {
    j["target"] = "GLOBAL";
  } else {
    j["target"] = {{"doc_id", r.target.sentence->doc_id}, {"ordinal", r.target.sentence->ordinal}};
  }
  j["relevant"] = r.relevant ? json(*r.relevant) : json(nullptr);
  j["correct_label"] = r.correct_label ? json(to_string(*r.correct_label)) : json(nullptr);
  j["reviewer_id"] = r.reviewer_id;
  j["submitted_at"] = format_iso8601(r.submitted_at);
  return j;
}

FeedbackRecord feedback_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kValidation, "feedback must be a JSON object");
  FeedbackRecord r;
  auto str = [&](const char* field) -> std::string {
    const auto it = j.find(field);
    if (it == j.end() || it->is_null()) return {};
    if (!it->is_string()) {
      throw Error(ErrorCode::kValidation, std::string("field '") + field + "' must be a string", field);
    }
    return it->get<std::string>();
  };
  r.id = str("id");
  r.claim_id = str("claim_id");
  r.reviewer_id = str("reviewer_id");

  const auto target = j.find("target");
  if (target == j.end() || target->is_null()) {
    throw Error(ErrorCode::kValidation, "missing field 'target'", "target");
  }
  if (target->is_string()) {
    if (target->get<std::string>() != "GLOBAL") {
      throw Error(ErrorCode::kValidation, "string target must be \"GLOBAL\"", "target");
    }
    r.target = FeedbackTarget::global();
  } else if (target->is_object()) {
    const auto doc = target->find("doc_id");
    const auto ord = target->find("ordinal");
    if (doc == target->end() || !doc->is_string() || ord == target->end() || !ord->is_number_unsigned()) {
      throw Error(ErrorCode::kValidation, "target needs string 'doc_id' and unsigned 'ordinal'", "target");
    }
    r.target = FeedbackTarget::evidence({doc->get<std::string>(), ord->get<std::uint32_t>()});
  } else {
    throw Error(ErrorCode::kValidation, "target must be \"GLOBAL\" or an object", "target");
  }

  if (const auto it = j.find("relevant"); it != j.end() && !it->is_null()) {
    if (!it->is_boolean()) throw Error(ErrorCode::kValidation, "'relevant' must be boolean", "relevant");
    r.relevant = it->get<bool>();
  }
  if (const auto it = j.find("correct_label"); it != j.end() && !it->is_null()) {
    const auto label = it->is_string() ? parse_label(it->get<std::string>()) : std::nullopt;
    if (!label) {
      throw Error(ErrorCode::kValidation, "'correct_label' must be SUPPORTS, REFUTES or OTHER",
                  "correct_label");
    }
    r.correct_label = label;
  }
  const auto submitted = str("submitted_at");
  if (!submitted.empty()) {
    const auto t = parse_iso8601(submitted);
    if (!t) throw Error(ErrorCode::kValidation, "'submitted_at' is not ISO-8601", "submitted_at");
    r.submitted_at = *t;
  }
  return r;
}

ClaimOutput output_of(const Verdict& verdict) {
  ClaimOutput out;
  out.global_label = verdict.global_label;
  for (const auto& column : verdict.columns) {
    for (const auto& item : column) out.evidence.emplace(item.evidence.sent_id, item.label());
  }
  return out;
}

std::vector<FeedbackRecord> latest_judgments(std::span<const FeedbackRecord> log) {
  std::vector<std::size_t> order(log.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = log[a];
    const auto& y = log[b];
    if (x.submitted_at != y.submitted_at) return x.submitted_at < y.submitted_at;
    return x.id < y.id;
  });

  // Each field is superseded independently: a later record that carries
  // only a label keeps the earlier relevance judgment.
  using Key = std::tuple<std::string, std::string, FeedbackTarget>;
  std::map<Key, std::pair<FeedbackRecord, std::size_t>> merged;
  for (std::size_t i : order) {
    const FeedbackRecord& r = log[i];
    auto [it, inserted] = merged.try_emplace(Key{r.claim_id, r.reviewer_id, r.target}, r, i);
    if (inserted) continue;
    FeedbackRecord& m = it->second.first;
    if (r.relevant) m.relevant = r.relevant;
    if (r.correct_label) m.correct_label = r.correct_label;
    m.id = r.id;
    m.submitted_at = r.submitted_at;
    it->second.second = i;
  }
  std::vector<std::pair<std::size_t, FeedbackRecord>> picked;
  picked.reserve(merged.size());
  for (auto& [key, entry] : merged) picked.emplace_back(entry.second, std::move(entry.first));
  std::sort(picked.begin(), picked.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<FeedbackRecord> out;
  out.reserve(picked.size());
  for (auto& [i, r] : picked) out.push_back(std::move(r));
  return out;
}

// ---------------------------------------------------------------------------
// Store

void write_feedback_log(std::ostream& out, std::span<const FeedbackRecord> records) {
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

std::vector<FeedbackRecord> read_feedback_log(std::istream& in) {
  std::vector<FeedbackRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(feedback_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kFormat, "feedback log line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::kFormat, "feedback log line " + std::to_string(line_no) + ": " + e.what(),
                  e.field());
    }
  }
  return out;
}

namespace {

std::string format_id(std::uint64_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "fb-%010llu", static_cast<unsigned long long>(n));
  return buf;
}

std::uint64_t parse_id(const std::string& id) {
  if (id.rfind("fb-", 0) != 0) return 0;
  try {
    return std::stoull(id.substr(3));
  } catch (...) {
    return 0;
  }
}

}  // namespace

FeedbackStore::FeedbackStore(std::optional<std::filesystem::path> path, std::size_t snapshot_every)
    : path_(std::move(path)), snapshot_every_(snapshot_every) {
  if (!path_ || !std::filesystem::exists(*path_)) return;
  std::ifstream in(*path_);
  if (!in) throw Error(ErrorCode::kConfig, "cannot read feedback log " + path_->string(), "feedback_log");
  records_ = read_feedback_log(in);
  for (const auto& r : records_) next_id_ = std::max(next_id_, parse_id(r.id) + 1);
}

std::string FeedbackStore::record(FeedbackRecord rec, const ClaimOutput* claim) {
  validate(rec);
  if (claim == nullptr) {
    throw Error(ErrorCode::kNotFound, "unknown claim '" + rec.claim_id + "'", "claim_id");
  }
  if (!rec.target.is_global() && claim->evidence.count(*rec.target.sentence) == 0) {
    throw Error(ErrorCode::kNotFound,
                "sentence " + rec.target.sentence->doc_id + "#" +
                    std::to_string(rec.target.sentence->ordinal) + " was not shown for this claim",
                "target");
  }
  if (rec.submitted_at == Timestamp{}) rec.submitted_at = now_utc();

  std::lock_guard lock(mutex_);
  rec.id = format_id(next_id_++);
  if (path_) {
    std::ofstream out(*path_, std::ios::app);
    if (!out) throw Error(ErrorCode::kConfig, "cannot append to " + path_->string(), "feedback_log");
    out << to_json(rec).dump() << '\n';
    out.flush();
  }
  records_.push_back(rec);
  if (path_ && snapshot_every_ > 0 && ++appends_since_snapshot_ >= snapshot_every_) compact_locked();
  return rec.id;
}

std::vector<FeedbackRecord> FeedbackStore::log() const {
  std::lock_guard lock(mutex_);
  return records_;
}

std::vector<FeedbackRecord> FeedbackStore::latest() const {
  std::lock_guard lock(mutex_);
  return latest_judgments(records_);
}

std::size_t FeedbackStore::size() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

void FeedbackStore::compact() {
  std::lock_guard lock(mutex_);
  compact_locked();
}

void FeedbackStore::compact_locked() {
  appends_since_snapshot_ = 0;
  if (!path_) return;
  const auto latest = latest_judgments(records_);
  const auto tmp = std::filesystem::path(path_->string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error(ErrorCode::kConfig, "cannot write " + tmp.string(), "feedback_log");
    write_feedback_log(out, latest);
  }
  std::filesystem::rename(tmp, *path_);
}

// ---------------------------------------------------------------------------
// Metrics

std::optional<double> MetricCell::percent() const {
  if (judged == 0) return std::nullopt;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(judged);
}

MetricsTable compute_metrics(std::span<const FeedbackRecord> log, const SystemOutputs& outputs) {
  MetricsTable table;
  for (const auto& [claim_id, out] : outputs) {
    ++table.shown[2][static_cast<std::size_t>(out.global_label)];
    ++table.shown[2][kAllColumn];
    for (const auto& [sent, label] : out.evidence) {
      for (std::size_t row = 0; row < 2; ++row) {
        ++table.shown[row][static_cast<std::size_t>(label)];
        ++table.shown[row][kAllColumn];
      }
    }
  }

  auto count = [&](MetricRow row, Label system, bool hit) {
    for (std::size_t col : {static_cast<std::size_t>(system), kAllColumn}) {
      MetricCell& c = table.cells[static_cast<std::size_t>(row)][col];
      ++c.judged;
      if (hit) ++c.hits;
    }
  };

  for (const FeedbackRecord& r : latest_judgments(log)) {
    const auto claim = outputs.find(r.claim_id);
    if (claim == outputs.end()) continue;
    if (r.target.is_global()) {
      if (r.correct_label) {
        count(MetricRow::kGlobalCorrectness, claim->second.global_label,
              *r.correct_label == claim->second.global_label);
      }
      continue;
    }
    const auto item = claim->second.evidence.find(*r.target.sentence);
    if (item == claim->second.evidence.end()) continue;
    if (r.relevant) count(MetricRow::kRelevant, item->second, *r.relevant);
    if (r.correct_label) count(MetricRow::kEvidenceCorrectness, item->second, *r.correct_label == item->second);
  }
  return table;
}

namespace {

constexpr const char* kRowNames[] = {"Relevant", "Evidence Correctness", "Global Correctness"};
constexpr const char* kRowKeys[] = {"relevant", "evidence_correctness", "global_correctness"};
constexpr const char* kColumnKeys[] = {"SUPPORTS", "REFUTES", "OTHER", "ALL"};

}  // namespace

std::string to_csv(const MetricsTable& table) {
  std::ostringstream out;
  out << "precision,SUPPORTS,REFUTES,OTHER,ALL\n";
  for (std::size_t row = 0; row < 3; ++row) {
    out << kRowNames[row];
    for (std::size_t col = 0; col < 4; ++col) {
      out << ',';
      if (const auto p = table.cells[row][col].percent()) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.1f", *p);
        out << buf;
      } else {
        out << "undefined";
      }
    }
    out << '\n';
  }
  return out.str();
}

json to_json(const MetricsTable& table) {
  json j = json::object();
  for (std::size_t row = 0; row < 3; ++row) {
    json r = json::object();
    for (std::size_t col = 0; col < 4; ++col) {
      const auto& c = table.cells[row][col];
      const auto p = c.percent();
      r[kColumnKeys[col]] = {{"precision", p ? json(*p) : json(nullptr)},
                             {"hits", c.hits},
                             {"judged", c.judged},
                             {"shown", table.shown[row][col]}};
    }
    j[kRowKeys[row]] = std::move(r);
  }
  return j;
}

}  // namespace claimdesk
