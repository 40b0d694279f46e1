#pragma once

#include <array>
#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "claimdesk/corpus.hpp"
#include "claimdesk/ranking.hpp"

namespace claimdesk {

enum class Label : std::uint8_t { kSupports = 0, kRefutes = 1, kOther = 2 };

inline constexpr std::array<Label, 3> kAllLabels = {Label::kSupports, Label::kRefutes, Label::kOther};

/// SUPPORTS / REFUTES / OTHER.
const char* to_string(Label label);
/// Case-insensitive; accepts the uppercase names used on the wire.
std::optional<Label> parse_label(std::string_view text);

/// Probability per label, indexed by Label.
struct LabelDistribution {
  std::array<double, 3> p{0.0, 0.0, 1.0};

  double operator[](Label l) const { return p[static_cast<std::size_t>(l)]; }
  double& operator[](Label l) { return p[static_cast<std::size_t>(l)]; }

  /// Highest probability; ties resolve SUPPORTS > REFUTES > OTHER.
  Label argmax() const;
  double max() const { return (*this)[argmax()]; }
  double sum() const { return p[0] + p[1] + p[2]; }

  /// Puts `mass` on `label` and splits the rest equally over the others.
  static LabelDistribution peaked(Label label, double mass);

  bool operator==(const LabelDistribution&) const = default;
};

/// Outcome of classifying one evidence item.
struct Classification {
  LabelDistribution distribution;
  /// Set when the backend failed; the item is then OTHER with all mass on OTHER.
  bool unclassified = false;
  std::string error;

  Label label() const { return distribution.argmax(); }
};

class Classifier {
 public:
  virtual ~Classifier() = default;
  /// Throws kBackend on failure.
  virtual LabelDistribution classify(const Claim& claim, const EvidenceCandidate& evidence) const = 0;
  /// Element-wise classify; per-item failures become unclassified entries.
  virtual std::vector<Classification> classify_batch(const Claim& claim,
                                                     const std::vector<EvidenceCandidate>& evidence) const;
};

/// Deterministic overlap-and-negation rule.
///
/// r is the share of the claim's content word types found in the evidence,
/// and the negation parity is the total count of negation cues in claim and
/// evidence modulo 2. With r >= support_overlap the label is SUPPORTS
/// (parity 0) or REFUTES (parity 1) with probability 0.5 + r/2; otherwise
/// OTHER with probability 1 - r/2. Remaining mass is split equally.
class LexicalBaseline : public Classifier {
 public:
  LexicalBaseline(std::shared_ptr<const Lexicon> lexicon, double support_overlap = 0.6);

  LabelDistribution classify(const Claim& claim, const EvidenceCandidate& evidence) const override;
  LabelDistribution classify_text(std::string_view claim, std::string_view evidence) const;

  /// Components of the rule, exposed for tests.
  double overlap_ratio(std::string_view claim, std::string_view evidence) const;
  std::size_t negation_cues(std::string_view text) const;

 private:
  std::shared_ptr<const Lexicon> lexicon_;
  double support_overlap_;
};

struct RemoteOptions {
  std::string endpoint;  // http://host:port/path
  std::chrono::milliseconds timeout{5000};
  std::size_t max_in_flight = 4;
};

/// HTTP adapter for an external NLI model.
///
/// POSTs `{"claim": ..., "evidence": ...}` as JSON and expects
/// `{"supports": p, "refutes": p, "other": p}`. Non-2xx statuses, transport
/// errors, negative components or a sum off by more than 1e-6 raise
/// kBackend. Accepted distributions are renormalized.
class RemoteClassifier : public Classifier {
 public:
  explicit RemoteClassifier(RemoteOptions options);

  LabelDistribution classify(const Claim& claim, const EvidenceCandidate& evidence) const override;
  std::vector<Classification> classify_batch(const Claim& claim,
                                             const std::vector<EvidenceCandidate>& evidence) const override;

  const RemoteOptions& options() const { return options_; }

 private:
  LabelDistribution post(std::string_view claim, std::string_view evidence) const;

  RemoteOptions options_;
  std::string base_url_;
  std::string path_;
};

/// Validates a wire response body and returns the normalized distribution.
LabelDistribution parse_remote_response(std::string_view body);

}  // namespace claimdesk
