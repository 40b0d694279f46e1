#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "claimdesk/corpus.hpp"
#include "claimdesk/entailment.hpp"
#include "claimdesk/timeutil.hpp"
#include "claimdesk/verdict.hpp"

namespace claimdesk {

/// Either one evidence sentence or the claim's global verdict.
struct FeedbackTarget {
  std::optional<SentenceId> sentence;

  static FeedbackTarget global() { return {}; }
  static FeedbackTarget evidence(SentenceId id) { return {std::move(id)}; }
  bool is_global() const { return !sentence.has_value(); }

  auto operator<=>(const FeedbackTarget&) const = default;
  bool operator==(const FeedbackTarget&) const = default;
};

struct FeedbackRecord {
  std::string id;  // assigned by the store
  std::string claim_id;
  FeedbackTarget target;
  std::optional<bool> relevant;
  std::optional<Label> correct_label;  // reviewer's gold label
  std::string reviewer_id;
  Timestamp submitted_at{};
};

/// Throws kValidation unless the record carries a claim, a reviewer and at
/// least one judgment, and GLOBAL targets carry only a label.
void validate(const FeedbackRecord& record);

nlohmann::json to_json(const FeedbackRecord& record);
/// Parses the wire/log form. Missing `submitted_at` is left at epoch.
FeedbackRecord feedback_from_json(const nlohmann::json& j);

/// What the system showed for one claim: the global label and the label of
/// every displayed evidence sentence.
struct ClaimOutput {
  Label global_label = Label::kOther;
  std::map<SentenceId, Label> evidence;
};
using SystemOutputs = std::map<std::string, ClaimOutput>;

ClaimOutput output_of(const Verdict& verdict);

/// One merged record per (claim, reviewer, target). Records are ordered by
/// submitted_at, then id, then log position; the latest record carrying a
/// field decides that field.
std::vector<FeedbackRecord> latest_judgments(std::span<const FeedbackRecord> log);

/// Append-only feedback log, optionally backed by a newline-delimited file.
/// Every `snapshot_every` appends the file is rewritten with only the
/// latest judgments.
class FeedbackStore {
 public:
  explicit FeedbackStore(std::optional<std::filesystem::path> path = std::nullopt,
                         std::size_t snapshot_every = 1000);

  /// Validates, checks that the target was shown for `claim` (null means
  /// unknown claim), assigns an id and appends. Returns the id.
  std::string record(FeedbackRecord record, const ClaimOutput* claim);

  std::vector<FeedbackRecord> log() const;
  std::vector<FeedbackRecord> latest() const;
  std::size_t size() const;
  /// Rewrites the backing file with the latest judgments only.
  void compact();

 private:
  void compact_locked();

  std::optional<std::filesystem::path> path_;
  std::size_t snapshot_every_;
  mutable std::mutex mutex_;
  std::vector<FeedbackRecord> records_;
  std::uint64_t next_id_ = 1;
  std::size_t appends_since_snapshot_ = 0;
};

enum class MetricRow : std::uint8_t { kRelevant = 0, kEvidenceCorrectness = 1, kGlobalCorrectness = 2 };
inline constexpr std::size_t kAllColumn = 3;

struct MetricCell {
  std::size_t hits = 0;
  std::size_t judged = 0;

  /// Undefined when nothing was judged.
  std::optional<double> percent() const;
};

/// Precision per system-assigned class plus the judged-count-weighted ALL
/// column. Rows: relevance of evidence, correctness of the evidence label,
/// correctness of the global label.
struct MetricsTable {
  std::array<std::array<MetricCell, 4>, 3> cells{};
  /// Items the system showed, per row and column (rows 0 and 1 count
  /// evidence, row 2 counts global verdicts).
  std::array<std::array<std::size_t, 4>, 3> shown{};

  const MetricCell& cell(MetricRow row, std::size_t column) const {
    return cells[static_cast<std::size_t>(row)][column];
  }
  const MetricCell& cell(MetricRow row, Label label) const {
    return cell(row, static_cast<std::size_t>(label));
  }
};

MetricsTable compute_metrics(std::span<const FeedbackRecord> log, const SystemOutputs& outputs);

/// Header plus one row per metric; percentages with one decimal, empty
/// cells written as `undefined`.
std::string to_csv(const MetricsTable& table);
nlohmann::json to_json(const MetricsTable& table);

void write_feedback_log(std::ostream& out, std::span<const FeedbackRecord> records);
std::vector<FeedbackRecord> read_feedback_log(std::istream& in);

}  // namespace claimdesk
