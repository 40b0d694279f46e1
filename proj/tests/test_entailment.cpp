#include <doctest.h>
#include <httplib.h>

#include <json.hpp>
#include <random>
#include <thread>

#include "claimdesk/entailment.hpp"
#include "claimdesk/error.hpp"
#include "support/fixture.hpp"

using namespace claimdesk;

namespace {

LexicalBaseline baseline() { return LexicalBaseline(std::make_shared<const Lexicon>(Lexicon::defaults())); }

void check_distribution(const LabelDistribution& d) {
  for (double p : d.p) CHECK(p >= 0.0);
  CHECK(d.sum() == doctest::Approx(1.0).epsilon(1e-9));
}

EvidenceCandidate candidate(const std::string& text) {
  EvidenceCandidate e;
  e.text = text;
  e.sent_id = {"d", 0};
  e.doc_id = "d";
  return e;
}

/// NLI stand-in. The evidence text selects the behavior.
class MockNli {
 public:
  MockNli() {
    server_.Post("/nli", [](const httplib::Request& req, httplib::Response& res) {
      const auto body = nlohmann::json::parse(req.body);
      const std::string evidence = body.at("evidence");
      if (evidence == "fail") {
        res.status = 500;
        res.set_content("boom", "text/plain");
      } else if (evidence == "slow") {
        std::this_thread::sleep_for(std::chrono::milliseconds(600));
        res.set_content(R"({"supports":1,"refutes":0,"other":0})", "application/json");
      } else if (evidence == "unnormalized") {
        res.set_content(R"({"supports":0.5,"refutes":0.5,"other":0.5})", "application/json");
      } else if (evidence == "garbage") {
        res.set_content("not json", "application/json");
      } else {
        const double s = body.at("claim") == evidence ? 0.7 : 0.1;
        res.set_content(nlohmann::json{{"supports", s}, {"refutes", 0.2}, {"other", 0.8 - s}}.dump(),
                        "application/json");
      }
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockNli() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/nli"; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

RemoteClassifier remote(const std::string& endpoint, int timeout_ms = 2000) {
  return RemoteClassifier(RemoteOptions{endpoint, std::chrono::milliseconds(timeout_ms), 3});
}

Claim claim_of(const std::string& text) {
  Claim c;
  c.text = text;
  return c;
}

}  // namespace

TEST_SUITE("entailment") {
  TEST_CASE("labels") {
    for (Label l : kAllLabels) CHECK(parse_label(to_string(l)) == l);
    CHECK(parse_label("supports") == Label::kSupports);
    CHECK_FALSE(parse_label("MAYBE").has_value());
  }

  TEST_CASE("argmax ties prefer SUPPORTS, then REFUTES") {
    CHECK(LabelDistribution{{1.0 / 3, 1.0 / 3, 1.0 / 3}}.argmax() == Label::kSupports);
    CHECK(LabelDistribution{{0.2, 0.4, 0.4}}.argmax() == Label::kRefutes);
    CHECK(LabelDistribution{{0.2, 0.3, 0.5}}.argmax() == Label::kOther);
    const auto p = LabelDistribution::peaked(Label::kRefutes, 0.8);
    CHECK(p[Label::kRefutes] == 0.8);
    CHECK(p[Label::kSupports] == doctest::Approx(0.1));
    check_distribution(p);
  }

  TEST_CASE("identical evidence supports") {
    const auto d = baseline().classify_text("Russia meddled with US elections", "Russia meddled with US elections");
    CHECK(d.argmax() == Label::kSupports);
    CHECK(d[Label::kSupports] == doctest::Approx(1.0));
    check_distribution(d);
  }

  TEST_CASE("one negation cue refutes, two cancel") {
    const auto lb = baseline();
    const auto one = lb.classify_text("Russia meddled with US elections", "Russia did not meddle with US elections");
    CHECK(one.argmax() == Label::kRefutes);
    CHECK(lb.negation_cues("Russia did not meddle with US elections") == 1);
    const auto two = lb.classify_text("Russia never meddled with US elections", "Moscow denies Russia meddled with US elections");
    CHECK(two.argmax() == Label::kSupports);
    CHECK(lb.negation_cues("It isn't false and didn’t happen") == 3);
  }

  TEST_CASE("disjoint content words give OTHER") {
    const auto d = baseline().classify_text("Russia meddled with US elections", "The weather in Paris was mild.");
    CHECK(d.argmax() == Label::kOther);
    CHECK(d[Label::kOther] == doctest::Approx(1.0));
  }

  TEST_CASE("the Tesla evidence supports its claim") {
    const auto lb = baseline();
    // tesla, factory and shanghai of five claim word types.
    CHECK(lb.overlap_ratio(fixture::kTeslaClaim, fixture::kTeslaEvidence) == doctest::Approx(0.6));
    const auto d = lb.classify_text(fixture::kTeslaClaim, fixture::kTeslaEvidence);
    CHECK(d.argmax() == Label::kSupports);
    CHECK(d[Label::kSupports] == doctest::Approx(0.8));
    CHECK(d[Label::kRefutes] == doctest::Approx(0.1));
  }

  TEST_CASE("below the overlap threshold the label is OTHER") {
    const auto lb = baseline();
    CHECK(lb.overlap_ratio("Tesla builds car factory", "Tesla sells cars") == doctest::Approx(0.25));
    const auto d = lb.classify_text("Tesla builds car factory", "Tesla sells cars");
    CHECK(d.argmax() == Label::kOther);
    CHECK(d[Label::kOther] == doctest::Approx(0.875));
  }

  TEST_CASE("baseline distributions are valid and batch-equivalent") {
    const auto lb = baseline();
    const std::vector<std::string> pool = {"Russia", "meddled", "US", "elections", "not", "denies", "Paris",
                                           "the", "factory", "never", "Tesla", "builds"};
    std::mt19937_64 rng(41);
    for (int i = 0; i < 300; ++i) {
      auto sentence = [&] {
        std::string s;
        for (std::size_t n = 1 + rng() % 8; n > 0; --n) s += pool[rng() % pool.size()] + " ";
        return s;
      };
      const Claim claim = claim_of(sentence());
      std::vector<EvidenceCandidate> batch;
      for (std::size_t n = 1 + rng() % 5; n > 0; --n) batch.push_back(candidate(sentence()));
      const auto out = lb.classify_batch(claim, batch);
      REQUIRE(out.size() == batch.size());
      for (std::size_t k = 0; k < batch.size(); ++k) {
        check_distribution(out[k].distribution);
        CHECK(out[k].distribution == lb.classify(claim, batch[k]));
        CHECK(out[k].distribution == lb.classify(claim, batch[k]));
      }
      auto reversed = batch;
      std::reverse(reversed.begin(), reversed.end());
      const auto back = lb.classify_batch(claim, reversed);
      for (std::size_t k = 0; k < batch.size(); ++k) {
        CHECK(back[k].distribution == out[batch.size() - 1 - k].distribution);
      }
    }
  }

  TEST_CASE("remote responses are validated") {
    const auto ok = parse_remote_response(R"({"supports":0.2,"refutes":0.3,"other":0.5})");
    CHECK(ok.argmax() == Label::kOther);
    const auto near = parse_remote_response(R"({"supports":0.2,"refutes":0.3,"other":0.5000005})");
    CHECK(near.sum() == doctest::Approx(1.0).epsilon(1e-12));
    for (const char* bad : {R"({"supports":0.5,"refutes":0.5,"other":0.5})",
                            R"({"supports":-0.1,"refutes":0.6,"other":0.5})", R"({"supports":1})", "[]", "nope"}) {
      try {
        parse_remote_response(bad);
        FAIL("accepted " << bad);
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::kBackend);
      }
    }
  }

  TEST_CASE("remote classifier over HTTP") {
    MockNli server;
    const RemoteClassifier rc = remote(server.endpoint());
    const Claim claim = claim_of("same");
    const auto d = rc.classify(claim, candidate("same"));
    CHECK(d[Label::kSupports] == doctest::Approx(0.7));
    CHECK(d.argmax() == Label::kSupports);

    for (const char* behavior : {"fail", "unnormalized", "garbage"}) {
      try {
        rc.classify(claim, candidate(behavior));
        FAIL("accepted " << behavior);
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::kBackend);
      }
    }
  }

  TEST_CASE("remote batch isolates failures and keeps order") {
    MockNli server;
    const RemoteClassifier rc = remote(server.endpoint(), 300);
    const Claim claim = claim_of("same");
    const std::vector<EvidenceCandidate> batch = {candidate("same"), candidate("fail"), candidate("other"),
                                                  candidate("slow"), candidate("unnormalized"), candidate("same")};
    const auto out = rc.classify_batch(claim, batch);
    REQUIRE(out.size() == batch.size());
    const std::vector<bool> unclassified = {false, true, false, true, true, false};
    for (std::size_t i = 0; i < out.size(); ++i) {
      CHECK(out[i].unclassified == unclassified[i]);
      check_distribution(out[i].distribution);
      if (out[i].unclassified) {
        CHECK(out[i].label() == Label::kOther);
        CHECK(out[i].distribution[Label::kOther] == 1.0);
        CHECK_FALSE(out[i].error.empty());
      }
    }
    CHECK(out[0].distribution[Label::kSupports] == doctest::Approx(0.7));
    CHECK(out[2].distribution[Label::kSupports] == doctest::Approx(0.1));
  }

  TEST_CASE("unreachable backend is a backend error") {
    int port = 0;
    {
      httplib::Server probe;
      port = probe.bind_to_any_port("127.0.0.1");
    }
    const RemoteClassifier rc = remote("http://127.0.0.1:" + std::to_string(port) + "/nli", 300);
    try {
      rc.classify(claim_of("x"), candidate("x"));
      FAIL("expected backend error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kBackend);
    }
    CHECK_THROWS_AS(RemoteClassifier(RemoteOptions{"not a url"}), Error);
  }
}
