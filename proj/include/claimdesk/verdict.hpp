#pragma once

#include <array>
#include <string>
#include <vector>

#include "claimdesk/entailment.hpp"
#include "claimdesk/ranking.hpp"
#include "claimdesk/timeutil.hpp"

namespace claimdesk {

inline constexpr std::size_t kColumnSize = 5;

struct ClassifiedEvidence {
  EvidenceCandidate evidence;
  LabelDistribution distribution;
  bool unclassified = false;

  Label label() const { return distribution.argmax(); }
};

struct Verdict {
  std::string claim_id;
  std::string claim_text;
  Label global_label = Label::kOther;
  /// Indexed by Label; each holds at most kColumnSize items, best first.
  std::array<std::vector<ClassifiedEvidence>, 3> columns;
  Timestamp generated_at{};
  std::string config_fingerprint;

  const std::vector<ClassifiedEvidence>& column(Label l) const {
    return columns[static_cast<std::size_t>(l)];
  }
};

/// Weighted vote: W(L) = sum of combined * max probability over items whose
/// argmax is L, for L in {SUPPORTS, REFUTES}. The larger positive weight wins;
/// a tie or no weight gives OTHER.
Label aggregate(const std::vector<ClassifiedEvidence>& items);

/// Partitions items by label, keeps the kColumnSize best by combined score
/// per column and labels the claim from all items.
Verdict build_verdict(std::string claim_id, std::string claim_text,
                      const std::vector<ClassifiedEvidence>& items);

}  // namespace claimdesk
