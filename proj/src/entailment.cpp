#include "claimdesk/entailment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <future>
#include <set>

#include <httplib.h>
#include <json.hpp>

#include "claimdesk/error.hpp"

namespace claimdesk {

const char* to_string(Label label) {
  switch (label) {
    case Label::kSupports: return "SUPPORTS";
    case Label::kRefutes: return "REFUTES";
    case Label::kOther: return "OTHER";
  }
  return "OTHER";
}

std::optional<Label> parse_label(std::string_view text) {
  std::string upper(text);
  for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (upper == "SUPPORTS") return Label::kSupports;
  if (upper == "REFUTES") return Label::kRefutes;
  if (upper == "OTHER") return Label::kOther;
  return std::nullopt;
}

Label LabelDistribution::argmax() const {
  Label best = Label::kSupports;
  for (Label l : kAllLabels) {
    if ((*this)[l] > (*this)[best]) best = l;
  }
  return best;
}

LabelDistribution LabelDistribution::peaked(Label label, double mass) {
  LabelDistribution d;
  const double rest = (1.0 - mass) / 2.0;
  for (Label l : kAllLabels) d[l] = l == label ? mass : rest;
  return d;
}

std::vector<Classification> Classifier::classify_batch(const Claim& claim,
                                                       const std::vector<EvidenceCandidate>& evidence) const {
  std::vector<Classification> out;
  out.reserve(evidence.size());
  for (const auto& e : evidence) {
    Classification c;
    try {
      c.distribution = classify(claim, e);
    } catch (const Error& err) {
      c.distribution = LabelDistribution::peaked(Label::kOther, 1.0);
      c.unclassified = true;
      c.error = err.what();
    }
    out.push_back(std::move(c));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lexical baseline

LexicalBaseline::LexicalBaseline(std::shared_ptr<const Lexicon> lexicon, double support_overlap)
    : lexicon_(std::move(lexicon)), support_overlap_(support_overlap) {}

namespace {

std::set<std::string> content_types(std::string_view text, const Lexicon& lexicon) {
  std::set<std::string> out;
  for (const Token& t : tokenize(text)) {
    if (t.is_punct()) continue;
    std::string folded = fold_case(t.surface(text));
    if (!lexicon.is_stopword(folded)) out.insert(std::move(folded));
  }
  return out;
}

}  // namespace

double LexicalBaseline::overlap_ratio(std::string_view claim, std::string_view evidence) const {
  const auto c = content_types(claim, *lexicon_);
  if (c.empty()) return 0.0;
  const auto e = content_types(evidence, *lexicon_);
  std::size_t shared = 0;
  for (const auto& w : c) shared += e.count(w);
  return static_cast<double>(shared) / static_cast<double>(c.size());
}

std::size_t LexicalBaseline::negation_cues(std::string_view text) const {
  std::size_t n = 0;
  for (const Token& t : tokenize(text)) {
    if (!t.is_punct() && lexicon_->is_negation_cue(fold_case(t.surface(text)))) ++n;
  }
  return n;
}

LabelDistribution LexicalBaseline::classify_text(std::string_view claim, std::string_view evidence) const {
  const double r = overlap_ratio(claim, evidence);
  const std::size_t parity = (negation_cues(claim) + negation_cues(evidence)) % 2;
  if (r >= support_overlap_) {
    return LabelDistribution::peaked(parity == 0 ? Label::kSupports : Label::kRefutes, 0.5 + r / 2.0);
  }
  return LabelDistribution::peaked(Label::kOther, 1.0 - r / 2.0);
}

LabelDistribution LexicalBaseline::classify(const Claim& claim, const EvidenceCandidate& evidence) const {
  return classify_text(claim.text, evidence.text);
}

// ---------------------------------------------------------------------------
// Remote backend

LabelDistribution parse_remote_response(std::string_view body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error&) {
    throw Error(ErrorCode::kBackend, "classifier response is not JSON");
  }
  if (!j.is_object()) throw Error(ErrorCode::kBackend, "classifier response must be an object");
  LabelDistribution d;
  const std::pair<const char*, Label> fields[] = {
      {"supports", Label::kSupports}, {"refutes", Label::kRefutes}, {"other", Label::kOther}};
  for (const auto& [name, label] : fields) {
    const auto it = j.find(name);
    if (it == j.end() || !it->is_number()) {
      throw Error(ErrorCode::kBackend, std::string("classifier response lacks numeric '") + name + "'");
    }
    const double v = it->get<double>();
    if (!std::isfinite(v) || v < 0.0) {
      throw Error(ErrorCode::kBackend, std::string("classifier probability '") + name + "' is invalid");
    }
    d[label] = v;
  }
  const double total = d.sum();
  if (std::abs(total - 1.0) > 1e-6) {
    throw Error(ErrorCode::kBackend, "classifier distribution sums to " + std::to_string(total));
  }
  for (double& p : d.p) p /= total;
  return d;
}

RemoteClassifier::RemoteClassifier(RemoteOptions options) : options_(std::move(options)) {
  const auto scheme = options_.endpoint.find("://");
  if (scheme == std::string::npos) {
    throw Error(ErrorCode::kConfig, "classifier endpoint must be an http URL", "classifier.endpoint");
  }
  const auto slash = options_.endpoint.find('/', scheme + 3);
  base_url_ = options_.endpoint.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : options_.endpoint.substr(slash);
  if (options_.max_in_flight == 0) options_.max_in_flight = 1;
}

LabelDistribution RemoteClassifier::post(std::string_view claim, std::string_view evidence) const {
  httplib::Client client(base_url_);
  if (!client.is_valid()) throw Error(ErrorCode::kBackend, "invalid classifier endpoint " + base_url_);
  const auto ms = options_.timeout.count();
  client.set_connection_timeout(ms / 1000, (ms % 1000) * 1000);
  client.set_read_timeout(ms / 1000, (ms % 1000) * 1000);
  client.set_write_timeout(ms / 1000, (ms % 1000) * 1000);

  const nlohmann::json request = {{"claim", claim}, {"evidence", evidence}};
  const auto res = client.Post(path_, request.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::kBackend, "classifier unreachable: " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCode::kBackend, "classifier returned HTTP " + std::to_string(res->status));
  }
  return parse_remote_response(res->body);
}

LabelDistribution RemoteClassifier::classify(const Claim& claim, const EvidenceCandidate& evidence) const {
  return post(claim.text, evidence.text);
}

std::vector<Classification> RemoteClassifier::classify_batch(
    const Claim& claim, const std::vector<EvidenceCandidate>& evidence) const {
  std::vector<Classification> out(evidence.size());
  for (std::size_t start = 0; start < evidence.size(); start += options_.max_in_flight) {
    const std::size_t end = std::min(evidence.size(), start + options_.max_in_flight);
    std::vector<std::future<void>> inflight;
    for (std::size_t i = start; i < end; ++i) {
      inflight.push_back(std::async(std::launch::async, [&, i] {
        try {
          out[i].distribution = post(claim.text, evidence[i].text);
        } catch (const Error& err) {
          out[i].distribution = LabelDistribution::peaked(Label::kOther, 1.0);
          out[i].unclassified = true;
          out[i].error = err.what();
        }
      }));
    }
    for (auto& f : inflight) f.get();
  }
  return out;
}

}  // namespace claimdesk
