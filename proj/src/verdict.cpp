#include "claimdesk/verdict.hpp"

#include <algorithm>

namespace claimdesk {

Label aggregate(const std::vector<ClassifiedEvidence>& items) {
  // Summing sorted weights makes the vote independent of item order.
  std::vector<double> supports;
  std::vector<double> refutes;
  for (const auto& item : items) {
    const Label l = item.label();
    const double w = item.evidence.combined * item.distribution.max();
    if (l == Label::kSupports) supports.push_back(w);
    if (l == Label::kRefutes) refutes.push_back(w);
  }
  auto total = [](std::vector<double>& ws) {
    std::sort(ws.begin(), ws.end());
    double sum = 0.0;
    for (double w : ws) sum += w;
    return sum;
  };
  const double ws = total(supports);
  const double wr = total(refutes);
  if (ws > wr && ws > 0.0) return Label::kSupports;
  if (wr > ws && wr > 0.0) return Label::kRefutes;
  return Label::kOther;
}

Verdict build_verdict(std::string claim_id, std::string claim_text,
                      const std::vector<ClassifiedEvidence>& items) {
  Verdict v;
  v.claim_id = std::move(claim_id);
  v.claim_text = std::move(claim_text);
  v.global_label = aggregate(items);
  for (const auto& item : items) v.columns[static_cast<std::size_t>(item.label())].push_back(item);
  for (auto& column : v.columns) {
    std::stable_sort(column.begin(), column.end(), [](const auto& a, const auto& b) {
      if (a.evidence.combined != b.evidence.combined) return a.evidence.combined > b.evidence.combined;
      return a.evidence.sent_id < b.evidence.sent_id;
    });
    if (column.size() > kColumnSize) column.resize(kColumnSize);
  }
  return v;
}

}  // namespace claimdesk
