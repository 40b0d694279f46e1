#include "claimdesk/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <unordered_set>

#include "claimdesk/resources.hpp"
#include "claimdesk/text.hpp"

namespace claimdesk {

namespace {

constexpr const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "tr", "kl"};
constexpr const char* kVowels[] = {"a", "e", "i", "o", "u"};

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

bool chance(std::mt19937_64& rng, double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; }

std::string pseudo_word(std::mt19937_64& rng, std::size_t syllables) {
  std::string w;
  for (std::size_t i = 0; i < syllables; ++i) {
    w += kOnsets[pick(rng, std::size(kOnsets))];
    w += kVowels[pick(rng, std::size(kVowels))];
  }
  return w;
}

std::string capitalized(std::string w) {
  if (!w.empty()) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
  return w;
}

class Zipf {
 public:
  Zipf(std::size_t n, double s) : cdf_(n) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      total += 1.0 / std::pow(static_cast<double>(i + 1), s);
      cdf_[i] = total;
    }
    for (double& c : cdf_) c /= total;
  }
  std::size_t operator()(std::mt19937_64& rng) const {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
};

const EntityKind kKinds[] = {EntityKind::kPerson, EntityKind::kOrg, EntityKind::kLoc};

}  // namespace

SyntheticCorpus generate_corpus(const SyntheticOptions& options) {
  std::mt19937_64 rng(options.seed);
  SyntheticCorpus out;
  const auto stopwords = Lexicon::parse_list(resources::default_stopwords());

  std::unordered_set<std::string> used;
  while (out.vocabulary.size() < options.vocabulary) {
    std::string w = pseudo_word(rng, 2 + pick(rng, 3));
    if (stopwords.count(w) > 0 || !used.insert(w).second) continue;
    out.vocabulary.push_back(std::move(w));
  }
  while (out.entity_names.size() < options.entities) {
    std::string name = capitalized(pseudo_word(rng, 2 + pick(rng, 2)));
    if (chance(rng, 0.4)) name += " " + capitalized(pseudo_word(rng, 2 + pick(rng, 2)));
    if (!used.insert(name).second) continue;
    out.gazetteer.add(name, kKinds[out.entity_names.size() % std::size(kKinds)]);
    out.entity_names.push_back(std::move(name));
  }

  const Zipf zipf(out.vocabulary.size(), options.zipf_exponent);
  auto sentence = [&]() {
    if (!out.sentences.empty() && chance(rng, options.duplicate_rate)) {
      return out.sentences[pick(rng, out.sentences.size())];
    }
    std::size_t words = options.min_sentence_words +
                        pick(rng, options.max_sentence_words - options.min_sentence_words + 1);
    if (chance(rng, options.long_sentence_rate)) words = 500 + pick(rng, 100);
    std::vector<std::string> parts;
    parts.reserve(words + 2);
    for (std::size_t i = 0; i < words; ++i) parts.push_back(out.vocabulary[zipf(rng)]);
    if (!out.entity_names.empty() && chance(rng, options.entity_rate)) {
      const std::size_t at = 1 + pick(rng, parts.size());
      parts.insert(parts.begin() + static_cast<std::ptrdiff_t>(std::min(at, parts.size())),
                   out.entity_names[pick(rng, out.entity_names.size())]);
    }
    std::string s = capitalized(parts[0]);
    for (std::size_t i = 1; i < parts.size(); ++i) {
      s += (chance(rng, 0.05) ? ", " : " ") + parts[i];
    }
    s += '.';
    out.sentences.push_back(s);
    return s;
  };

  out.records.reserve(options.documents);
  for (std::size_t d = 0; d < options.documents; ++d) {
    CorpusRecord r;
    char id[24];
    std::snprintf(id, sizeof id, "doc-%07zu", d);
    r.id = id;
    std::string title = capitalized(out.vocabulary[zipf(rng)]);
    for (std::size_t i = 0, n = 3 + pick(rng, 5); i < n; ++i) title += " " + out.vocabulary[zipf(rng)];
    r.title = std::move(title);
    const std::size_t count = options.min_sentences + pick(rng, options.max_sentences - options.min_sentences + 1);
    for (std::size_t i = 0; i < count; ++i) {
      if (i > 0) r.body += ' ';
      r.body += sentence();
    }
    out.records.push_back(std::move(r));
  }
  return out;
}

std::string generate_claim(const SyntheticCorpus& corpus, std::mt19937_64& rng) {
  std::vector<std::string> words;
  if (!corpus.sentences.empty()) {
    const std::string& s = corpus.sentences[pick(rng, corpus.sentences.size())];
    std::string current;
    for (char c : s) {
      if (c == ' ' || c == ',' || c == '.') {
        if (!current.empty()) words.push_back(std::move(current));
        current.clear();
      } else {
        current += c;
      }
    }
  }
  std::vector<std::string> claim;
  if (!words.empty()) {
    const std::size_t len = std::min<std::size_t>(words.size(), 3 + pick(rng, 5));
    const std::size_t start = pick(rng, words.size() - len + 1);
    claim.assign(words.begin() + static_cast<std::ptrdiff_t>(start),
                 words.begin() + static_cast<std::ptrdiff_t>(start + len));
  }
  if (!corpus.vocabulary.empty() && (claim.empty() || chance(rng, 0.3))) {
    claim.push_back(corpus.vocabulary[pick(rng, corpus.vocabulary.size())]);
  }
  if (!corpus.entity_names.empty() && chance(rng, 0.3)) {
    claim.push_back(corpus.entity_names[pick(rng, corpus.entity_names.size())]);
  }
  std::string out;
  for (std::size_t i = 0; i < claim.size(); ++i) {
    if (i > 0) out += ' ';
    out += i == 0 ? capitalized(claim[i]) : claim[i];
  }
  return out;
}

}  // namespace claimdesk
