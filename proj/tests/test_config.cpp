#include <doctest.h>

#include <fstream>

#include "claimdesk/config.hpp"
#include "claimdesk/error.hpp"
#include "support/fixture.hpp"

using namespace claimdesk;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::kBackend;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("defaults") {
    const Config c;
    CHECK(c.theta == 0.6);
    CHECK(c.bm25_k1 == 1.2);
    CHECK(c.bm25_b == 0.75);
    CHECK(c.w_ent == 2.0);
    CHECK(c.max_sentence_tokens == 500);
    CHECK(c.novelty_max_overlap == 0.9);
    CHECK(c.classifier == "lexical");
    CHECK_NOTHROW(c.validate());
  }

  TEST_CASE("every key round-trips through set and get") {
    Config c;
    for (const std::string& key : Config::keys()) {
      const std::string value = c.get(key);
      Config other;
      other.set(key, value);
      CHECK(other.get(key) == value);
    }
    c.set("bm25.k1", " 1.5 ");
    CHECK(c.bm25_k1 == 1.5);
    c.set("k_docs", "10");
    CHECK(c.get("k_docs") == "10");
    CHECK(code_of([&] { c.set("k_docs", "ten"); }) == ErrorCode::kConfig);
    CHECK(code_of([&] { c.set("k_docs", "-1"); }) == ErrorCode::kConfig);
    CHECK(code_of([&] { c.set("no_such_key", "1"); }) == ErrorCode::kConfig);
  }

  TEST_CASE("files") {
    Config c;
    c.load_text("# ranking\ntheta = 0.7\n\nbm25.b=0.5\nclassifier = lexical\n");
    CHECK(c.theta == 0.7);
    CHECK(c.bm25_b == 0.5);
    CHECK_THROWS_WITH_AS(c.load_text("theta 0.7\n", "x.conf"), doctest::Contains("x.conf:1"), Error);
    fixture::TempDir dir;
    std::ofstream(dir / "c.conf") << "k_docs=42\n";
    c.load_file(dir / "c.conf");
    CHECK(c.k_docs == 42);
    CHECK(code_of([&] { c.load_file(dir / "missing.conf"); }) == ErrorCode::kConfig);
  }

  TEST_CASE("environment") {
    CHECK(environment_name("bm25.k1") == "CLAIMDESK_BM25_K1");
    CHECK(environment_name("theta") == "CLAIMDESK_THETA");
    Config c;
    c.apply_environment({{"CLAIMDESK_THETA", "0.4"}, {"CLAIMDESK_BM25_K1", "2"}, {"OTHER", "x"}});
    CHECK(c.theta == 0.4);
    CHECK(c.bm25_k1 == 2.0);
    setenv("CLAIMDESK_K_DOCS", "77", 1);
    c.apply_environment();
    unsetenv("CLAIMDESK_K_DOCS");
    CHECK(c.k_docs == 77);
  }

  TEST_CASE("validation") {
    const std::pair<const char*, const char*> bad[] = {
        {"theta", "1.5"}, {"k_docs", "0"}, {"bm25.b", "2"}, {"novelty_max_overlap", "0"},
        {"classifier", "neural"}, {"classifier", "remote"}, {"embedding_dim", "0"}, {"w_ent", "0.5"}};
    for (const auto& [key, value] : bad) {
      Config c;
      c.set(key, value);
      CHECK(code_of([&] { c.validate(); }) == ErrorCode::kConfig);
    }
  }

  TEST_CASE("fingerprint covers verdict-relevant keys only") {
    const Config base;
    CHECK(base.fingerprint().size() == 16);
    CHECK(base.fingerprint() == Config{}.fingerprint());
    Config theta;
    theta.theta = 0.5;
    CHECK(theta.fingerprint() != base.fingerprint());
    Config log;
    log.feedback_log = "/tmp/elsewhere.jsonl";
    log.classifier_timeout_ms = 10;
    CHECK(log.fingerprint() == base.fingerprint());
  }
}
