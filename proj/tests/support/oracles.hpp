#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "claimdesk/corpus.hpp"
#include "claimdesk/engine.hpp"
#include "claimdesk/feedback.hpp"
#include "claimdesk/index.hpp"

namespace oracle {

/// Exhaustive BM25 over analyzed documents: every document is scored, zero
/// scores dropped, ordered by score then doc_id.
struct Scored {
  std::string doc_id;
  double score = 0.0;
};
std::vector<Scored> bm25_rank(const std::vector<claimdesk::Document>& docs, const claimdesk::FeatureSet& claim,
                              const claimdesk::Bm25Params& params);

/// S1 from match positions in content-token coordinates.
double s1(const std::vector<std::uint32_t>& positions, std::size_t claim_lemmas);

/// S1 of raw sentence text: words split on spaces, all lowercase, matched
/// by exact word against `claim_words`; stop words listed in `skip` carry no
/// position.
double s1_text(const std::string& sentence, const std::vector<std::string>& claim_words,
               const std::vector<std::string>& skip);

/// Violations of the emitted-evidence contract for one check result.
struct FilterAudit {
  std::size_t items = 0;
  std::size_t too_long = 0;
  std::size_t missing_entity = 0;
  std::size_t below_theta = 0;
  std::size_t not_novel = 0;
  std::size_t total() const { return too_long + missing_entity + below_theta + not_novel; }
};
void audit_filters(const claimdesk::Engine& engine, const claimdesk::CheckResult& result, double theta,
                   FilterAudit& audit);

/// Judged and hit counts per class for one metric row.
struct RowPlan {
  std::array<std::size_t, 3> judged{};
  std::array<std::size_t, 3> hits{};
};
/// Largest judged counts (each <= shown) whose rounded hit rates land within
/// `tolerance` points of every class target and of the pooled target.
std::optional<RowPlan> plan_row(const std::array<std::size_t, 3>& shown, const std::array<double, 4>& targets,
                                double tolerance);

struct Table1Log {
  claimdesk::SystemOutputs outputs;
  std::vector<claimdesk::FeedbackRecord> log;
  std::array<std::size_t, 3> shown_evidence{};
  std::array<std::size_t, 3> shown_global{};
  RowPlan relevant;
  RowPlan evidence;
  RowPlan global;
};
/// Claims, shown evidence and reviewer judgments matching the published
/// marginals. Records are shuffled with `rng` and include superseded
/// re-submissions.
std::optional<Table1Log> synthesize_table1(std::mt19937_64& rng);

/// The published table, rows Relevant / Evidence / Global, columns
/// SUPPORTS, REFUTES, OTHER, ALL.
inline constexpr double kTable1[3][4] = {{71, 69, 49, 59}, {48, 27, 70, 58}, {56, 26, 31, 42}};

}  // namespace oracle
