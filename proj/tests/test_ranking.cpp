#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "claimdesk/error.hpp"
#include "claimdesk/index.hpp"
#include "claimdesk/ranking.hpp"
#include "support/fixture.hpp"
#include "support/oracles.hpp"

using namespace claimdesk;

namespace {

std::shared_ptr<const Analyzer> analyzer() {
  static const auto a = std::make_shared<const Analyzer>(
      std::make_shared<const Lexicon>(Lexicon::defaults()),
      std::make_shared<const Gazetteer>(Gazetteer::load(fixture::kDir / "gazetteer.tsv")));
  return a;
}

Document single(const std::string& id, const std::string& body, const std::string& title = "") {
  CorpusRecord r;
  r.id = id;
  r.title = title;
  r.body = body;
  return analyzer()->ingest_document(r);
}

double s1(const std::string& sentence, const std::string& claim) {
  const Document doc = single("d", sentence);
  return positional_score(doc.sentences.at(0), analyzer()->analyze_claim(claim).features).s1;
}

std::vector<ScoredSentence> scored(const std::vector<Document>& docs, const FeatureSet& claim) {
  std::vector<ScoredSentence> out;
  for (const auto& d : docs) {
    for (const auto& s : d.sentences) out.push_back({&d, &s, positional_score(s, claim)});
  }
  sort_by_positional_score(out);
  return out;
}

EmbeddingStore two_word_store() {
  std::istringstream in("2\nalpha 1 0\nbeta 0 1\ngamma 0.6 0.8\n");
  EmbeddingStore store = EmbeddingStore::parse(in);
  store.set_idf({{"alpha", 2.0}, {"beta", 1.0}, {"gamma", 1.0}}, 10);
  return store;
}

const std::vector<std::string> kWords = {"alpha", "beta", "gamma", "delta", "omega", "sigma", "kappa", "theta"};

}  // namespace

TEST_SUITE("ranking") {
  TEST_CASE("s1 formula on positions") {
    CHECK(positional_score_from_positions(std::vector<std::uint32_t>{4, 5, 6}, 3) == doctest::Approx(1.0));
    CHECK(positional_score_from_positions(std::vector<std::uint32_t>{2, 7, 8}, 3) ==
          doctest::Approx(0.50916).epsilon(1e-5));
    CHECK(positional_score_from_positions(std::vector<std::uint32_t>{2, 7, 8}, 3) ==
          doctest::Approx(oracle::s1({2, 7, 8}, 3)).epsilon(1e-15));
    CHECK(positional_score_from_positions(std::vector<std::uint32_t>{}, 3) == 0.0);
    CHECK(positional_score_from_positions(std::vector<std::uint32_t>{9}, 1) == 1.0);
    CHECK(positional_score_from_positions(std::vector<std::uint32_t>{9}, 4) == 0.0);
    CHECK(positional_score_from_positions(std::vector<std::uint32_t>{0, 1, 2, 3, 4, 5}, 3) == 1.0);
  }

  TEST_CASE("s1 on sentences") {
    CHECK(s1("Officials said Tesla factory Shanghai plans advanced.", "Tesla factory Shanghai") ==
          doctest::Approx(1.0));
    CHECK(s1("Nothing relevant appears here.", "Tesla factory Shanghai") == 0.0);
    // Content ordinals: Tesla 2, build 7, factory 8, Shanghai 9 of five claim lemmas.
    CHECK(s1(fixture::kTeslaEvidence, fixture::kTeslaClaim) ==
          doctest::Approx((std::exp(-4.0) + 2.0) / 4.0).epsilon(1e-12));
    CHECK(s1(fixture::kTeslaEvidence, fixture::kTeslaClaim) == doctest::Approx(0.504579).epsilon(1e-6));
    // Stop words carry no distance.
    CHECK(s1("Tesla is in the factory.", "Tesla factory") == 1.0);
    // Inflections match through the lemma.
    CHECK(s1("Moscow says Russia meddles in past elections.", "Russia meddled elections") ==
          doctest::Approx((1.0 + std::exp(-1.0)) / 2.0));
  }

  TEST_CASE("claims without lemmas are an empty query") {
    const Document doc = single("d", "Tesla builds cars.");
    try {
      positional_score(doc.sentences[0], analyzer()->analyze_claim("it is what it is").features);
      FAIL("expected empty_query");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kEmptyQuery);
    }
  }

  TEST_CASE("index positions give the same score as sentence matching") {
    std::vector<CorpusRecord> records;
    std::ifstream in(fixture::kDir / "corpus.jsonl");
    read_corpus(in, [&](CorpusRecord r) { records.push_back(std::move(r)); });
    InvertedIndex index;
    std::vector<Document> docs;
    for (const auto& r : records) {
      docs.push_back(analyzer()->ingest_document(r));
      index.index_document(docs.back());
    }
    for (const char* text : {fixture::kTeslaClaim, fixture::kRussiaClaim, "BMW batteries in Berlin"}) {
      const Claim claim = analyzer()->analyze_claim(text);
      std::vector<std::string> keys;
      for (const auto& w : claim.features.words) keys.push_back(feature_key(FeatureKind::kWord, w));
      for (const auto& l : claim.features.lemmas) keys.push_back(feature_key(FeatureKind::kLemma, l));
      std::vector<std::string> ids;
      for (const auto& d : docs) ids.push_back(d.doc_id);
      const auto positions = index.match_positions(keys, ids);
      for (std::size_t i = 0; i < docs.size(); ++i) {
        for (const auto& s : docs[i].sentences) {
          const auto a = positional_score(s, claim.features);
          const auto b = positional_score_at(s, positions[i], claim.features.lemmas.size());
          CHECK(a.s1 == b.s1);
          CHECK(a.matched_positions == b.matched_positions);
          CHECK(a.matched_count == b.matched_count);
        }
      }
    }
  }

  TEST_CASE("s1 properties over random sentences") {
    std::mt19937_64 rng(17);
    const std::vector<std::string> stop = {"the", "of", "and", "a"};
    const std::vector<std::string> claim = {"alpha", "beta", "gamma"};
    for (int trial = 0; trial < 2000; ++trial) {
      std::vector<std::string> words;
      const std::size_t n = 1 + rng() % 20;
      for (std::size_t i = 0; i < n; ++i) {
        words.push_back(rng() % 5 == 0 ? stop[rng() % stop.size()] : kWords[rng() % kWords.size()]);
      }
      auto join = [](const std::vector<std::string>& ws) {
        std::string s;
        for (const auto& w : ws) s += (s.empty() ? "" : " ") + w;
        return s;
      };
      const std::string text = join(words);
      const double got = s1(text, "alpha beta gamma");
      CHECK(got >= 0.0);
      CHECK(got <= 1.0);
      CHECK(got == doctest::Approx(oracle::s1_text(text, claim, stop)).epsilon(1e-12));

      auto padded = words;
      padded.insert(padded.begin(), {"delta", "the", "omega"});
      CHECK(s1(join(padded), "alpha beta gamma") == doctest::Approx(got).epsilon(1e-12));
    }
  }

  TEST_CASE("widening a gap never raises s1") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 500; ++trial) {
      std::vector<std::uint32_t> p;
      std::uint32_t at = rng() % 5;
      const std::size_t n = 2 + rng() % 5;
      for (std::size_t i = 0; i < n; ++i) {
        p.push_back(at);
        at += 1 + rng() % 4;
      }
      const std::size_t m = n + rng() % 3;
      const double before = positional_score_from_positions(p, m);
      const std::size_t gap = 1 + rng() % (n - 1);
      const std::uint32_t shift = 1 + rng() % 3;
      auto wider = p;
      for (std::size_t i = gap; i < wider.size(); ++i) wider[i] += shift;
      CHECK(positional_score_from_positions(wider, m) <= before);
    }
  }

  TEST_CASE("embeddings: weighted mean and OOV handling") {
    const EmbeddingStore store = two_word_store();
    const Lexicon lexicon = Lexicon::defaults();
    auto make = [&](const std::string& text) {
      auto tokens = tokenize(text);
      lexicon.mark_content(text, tokens);
      const TextPiece piece{text, tokens};
      return embed(std::span<const TextPiece>(&piece, 1), store);
    };
    const auto two = make("alpha beta");
    CHECK(two[0] == doctest::Approx(2.0 / 3.0));
    CHECK(two[1] == doctest::Approx(1.0 / 3.0));
    const auto one = make("gamma");
    CHECK(one[0] == doctest::Approx(0.6));
    CHECK(one[1] == doctest::Approx(0.8));
    CHECK(make("unknown words only") == std::vector<double>{0.0, 0.0});
    CHECK(store.contains("alpha"));
    CHECK_FALSE(store.contains("zeta"));
  }

  TEST_CASE("embedding file errors") {
    std::istringstream wrong_dim("3\nalpha 1 0\n");
    CHECK_THROWS_AS(EmbeddingStore::parse(wrong_dim), Error);
    std::istringstream bad_number("2\nalpha 1 x\n");
    CHECK_THROWS_AS(EmbeddingStore::parse(bad_number), Error);
  }

  TEST_CASE("hashed vectors share a lemma") {
    const EmbeddingStore store = EmbeddingStore::hashed(16);
    std::vector<double> a(16, 0.0);
    std::vector<double> b(16, 0.0);
    CHECK(store.accumulate("builds", 1.0, a));
    CHECK(store.accumulate("build", 1.0, b));
    CHECK(a == b);
  }

  TEST_CASE("cosine") {
    const std::vector<double> x{1.0, 0.0};
    const std::vector<double> y{1.0, 1.0};
    CHECK(cosine(x, y) == doctest::Approx(0.70711).epsilon(1e-5));
    CHECK(cosine(x, x) == doctest::Approx(1.0));
    CHECK(cosine(x, std::vector<double>{0.0, 3.0}) == 0.0);
    CHECK(cosine(x, std::vector<double>{0.0, 0.0}) == 0.0);
    CHECK_THROWS_AS(cosine(x, std::vector<double>{1.0, 0.0, 0.0}), Error);

    std::mt19937_64 rng(31);
    std::normal_distribution<double> normal;
    for (int i = 0; i < 1000; ++i) {
      std::vector<double> u(8);
      std::vector<double> v(8);
      for (auto& e : u) e = normal(rng);
      for (auto& e : v) e = normal(rng);
      CHECK(cosine(u, v) == cosine(v, u));
      CHECK(std::fabs(cosine(u, v)) <= 1.0 + 1e-12);
    }
  }

  TEST_CASE("length filter is strict at 500 tokens") {
    std::string at_limit;
    for (int i = 0; i < 499; ++i) at_limit += (i == 0 ? "Tesla" : " word");
    const std::string under = at_limit.substr(0, at_limit.size() - 5) + ".";
    at_limit += ".";
    std::vector<Document> docs{single("a", at_limit), single("b", under)};
    REQUIRE(docs[0].sentences[0].length_tokens() == 500);
    REQUIRE(docs[1].sentences[0].length_tokens() == 499);
    const Claim claim = analyzer()->analyze_claim("Tesla word");
    const auto kept = apply_filters(scored(docs, claim.features), claim.features);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].doc->doc_id == "b");
  }

  TEST_CASE("every claim entity must appear") {
    std::vector<Document> docs{single("a", "Tesla opened a factory in Shanghai."),
                               single("b", "Tesla opened a factory in Berlin.")};
    const Claim claim = analyzer()->analyze_claim(fixture::kTeslaClaim);
    REQUIRE(claim.features.entity_keys() == std::vector<std::string>{"shanghai", "tesla"});
    const auto kept = apply_filters(scored(docs, claim.features), claim.features);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].doc->doc_id == "a");
    CHECK(contains_entity(docs[1].sentences[0], "tesla"));
    CHECK_FALSE(contains_entity(docs[1].sentences[0], "shanghai"));
    CHECK(contains_entity(single("c", "He met Elon Musk today.").sentences[0], "elon musk"));
    CHECK_FALSE(contains_entity(single("c", "Elon said Musk left.").sentences[0], "elon musk"));
  }

  TEST_CASE("novelty drops repeats of kept sentences only") {
    std::vector<Document> docs{single("a", "Tesla factory opens in Shanghai."),
                               single("b", "Tesla factory opens in Shanghai."),
                               single("c", "Tesla factory opens in Shanghai soon, officials said.")};
    const Claim claim = analyzer()->analyze_claim("Tesla factory");
    const auto kept = apply_filters(scored(docs, claim.features), claim.features);
    std::vector<std::string> ids;
    for (const auto& k : kept) ids.push_back(k.doc->doc_id);
    // c: 5 of its 8 word types were seen, below 90%.
    CHECK(ids == std::vector<std::string>{"a", "c"});
    CHECK(word_types(docs[2].sentences[0]).size() == 8);
  }

  TEST_CASE("rerank thresholds the averaged score") {
    const EmbeddingStore store = two_word_store();
    std::vector<Document> docs{single("a", "gamma.")};
    std::vector<ScoredSentence> in{{&docs[0], &docs[0].sentences[0], PositionalScore{0.5, {0}, 1}}};
    const std::vector<double> claim{1.0, 0.0};
    CHECK(rerank_and_threshold(in, claim, store, 0.6).empty());
    const auto kept = rerank_and_threshold(in, claim, store, 0.5);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].s2 == doctest::Approx(0.6));
    CHECK(kept[0].combined == doctest::Approx(0.55));
    CHECK(kept[0].combined == (kept[0].s1 + kept[0].s2) / 2.0);
    CHECK(rerank_and_threshold({}, claim, store, 0.6).empty());

    std::vector<ScoredSentence> perfect{{&docs[0], &docs[0].sentences[0], PositionalScore{1.0, {0}, 1}}};
    const std::vector<double> along{0.6, 0.8};
    const auto top = rerank_and_threshold(perfect, along, store, 0.6);
    REQUIRE(top.size() == 1);
    CHECK(top[0].combined == doctest::Approx(1.0));
  }

  TEST_CASE("rerank orders by combined, then doc_id and ordinal") {
    const EmbeddingStore store = two_word_store();
    std::vector<Document> docs{single("b", "alpha."), single("a", "alpha."), single("c", "beta.")};
    std::vector<ScoredSentence> in;
    for (const auto& d : docs) in.push_back({&d, &d.sentences[0], PositionalScore{1.0, {0}, 1}});
    const std::vector<double> claim{1.0, 0.0};
    const auto out = rerank_and_threshold(in, claim, store, 0.0);
    REQUIRE(out.size() == 3);
    CHECK(out[0].doc_id == "a");
    CHECK(out[1].doc_id == "b");
    CHECK(out[2].doc_id == "c");
    CHECK(out[2].combined == doctest::Approx(0.5));
  }
}
