// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <CLI11.hpp>
#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <random>

#include "claimdesk/engine.hpp"
#include "claimdesk/error.hpp"
#include "claimdesk/feedback.hpp"
#include "claimdesk/index.hpp"
#include "claimdesk/ranking.hpp"
#include "claimdesk/serialize.hpp"
#include "claimdesk/synthetic.hpp"
#include "support/fixture.hpp"
#include "support/oracles.hpp"

using namespace claimdesk;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : (v[m - 1] + v[m]) / 2.0;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::unique_ptr<Engine> synthetic_engine(const SyntheticCorpus& corpus) {
  Config config;
  auto lexicon = std::make_shared<const Lexicon>(Lexicon::defaults());
  auto analyzer = std::make_shared<const Analyzer>(lexicon, std::make_shared<const Gazetteer>(corpus.gazetteer));
  auto engine = std::make_unique<Engine>(config, analyzer, EmbeddingStore::hashed(config.embedding_dim),
                                         std::make_unique<LexicalBaseline>(lexicon, config.support_overlap));
  for (const auto& r : corpus.records) engine->add_document(r);
  return engine;
}

Outcome retrieval_oracle() {
  const auto start = Clock::now();
  std::mt19937_64 rng(20190601);
  const Analyzer analyzer(std::make_shared<const Lexicon>(Lexicon::defaults()), std::make_shared<const Gazetteer>());
  std::size_t queries = 0;
  std::size_t mismatches = 0;
  double worst = 0.0;
  for (int c = 0; c < 50; ++c) {
    SyntheticOptions options;
    options.documents = 100 + rng() % 901;
    options.vocabulary = 500 + rng() % 4501;
    options.seed = rng();
    const SyntheticCorpus corpus = generate_corpus(options);
    std::vector<Document> docs;
    docs.reserve(corpus.records.size());
    InvertedIndex index;
    for (const auto& r : corpus.records) {
      docs.push_back(analyzer.ingest_document(r));
      index.index_document(docs.back());
    }
    for (int q = 0; q < 20; ++q) {
      const Claim claim = analyzer.analyze_claim(generate_claim(corpus, rng));
      if (claim.features.empty()) continue;
      ++queries;
      const auto expected = oracle::bm25_rank(docs, claim.features, index.params());
      const std::size_t k = 1 + rng() % 100;
      const auto got = index.retrieve(claim.features, k);
      if (got.size() != std::min(k, expected.size())) {
        ++mismatches;
        continue;
      }
      for (std::size_t i = 0; i < got.size(); ++i) {
        const double diff = std::fabs(got[i].bm25_score - expected[i].score);
        worst = std::max(worst, diff);
        if (got[i].doc_id != expected[i].doc_id || diff > 1e-9) {
          ++mismatches;
          break;
        }
      }
    }
  }
  const double elapsed = seconds_since(start);
  return {mismatches == 0 && elapsed < 60.0,
          fmt::format("50 corpora, {} queries, {} mismatches, max |diff| {:.2e}, {:.1f} s", queries, mismatches,
                      worst, elapsed)};
}

Outcome s1_checks() {
  std::size_t failures = 0;
  auto expect = [&](double got, double want) {
    if (std::fabs(got - want) > 1e-5) ++failures;
  };
  expect(positional_score_from_positions(std::vector<std::uint32_t>{4, 5, 6}, 3), 1.0);
  expect(positional_score_from_positions(std::vector<std::uint32_t>{2, 7, 8}, 3), 0.50916);
  expect(positional_score_from_positions(std::vector<std::uint32_t>{}, 3), 0.0);

  std::mt19937_64 rng(77);
  std::size_t instances = 0;
  for (int i = 0; i < 12000; ++i) {
    std::vector<std::uint32_t> p;
    std::uint32_t at = rng() % 10;
    const std::size_t n = 1 + rng() % 8;
    for (std::size_t j = 0; j < n; ++j) {
      p.push_back(at);
      at += 1 + rng() % 6;
    }
    const std::size_t m = std::max<std::size_t>(1, n - rng() % 2 + rng() % 3);
    const double s = positional_score_from_positions(p, m);
    if (!(s >= 0.0 && s <= 1.0)) ++failures;
    if (std::fabs(s - oracle::s1(p, m)) > 1e-12) ++failures;

    const std::uint32_t shift = 1 + rng() % 20;
    auto shifted = p;
    for (auto& x : shifted) x += shift;
    if (positional_score_from_positions(shifted, m) != s) ++failures;

    if (n >= 2) {
      const std::size_t gap = 1 + rng() % (n - 1);
      auto wider = p;
      for (std::size_t j = gap; j < wider.size(); ++j) wider[j] += shift;
      if (positional_score_from_positions(wider, m) > s) ++failures;
    }
    ++instances;
  }

  // The same properties on analyzed text, where stop words carry no distance.
  const Analyzer analyzer(std::make_shared<const Lexicon>(Lexicon::defaults()), std::make_shared<const Gazetteer>());
  const std::vector<std::string> words = {"alpha", "beta", "gamma", "delta", "omega", "the", "of"};
  const Claim claim = analyzer.analyze_claim("alpha beta gamma");
  for (int i = 0; i < 2000; ++i) {
    std::string text;
    for (std::size_t n = 1 + rng() % 15; n > 0; --n) text += words[rng() % words.size()] + " ";
    CorpusRecord plain{"a", "", text + ".", std::nullopt, std::nullopt};
    CorpusRecord padded{"b", "", "delta of omega " + text + ".", std::nullopt, std::nullopt};
    const double a = positional_score(analyzer.ingest_document(plain).sentences[0], claim.features).s1;
    const double b = positional_score(analyzer.ingest_document(padded).sentences[0], claim.features).s1;
    const double o = oracle::s1_text(text, {"alpha", "beta", "gamma"}, {"the", "of"});
    if (std::fabs(a - b) > 1e-12 || std::fabs(a - o) > 1e-12 || a < 0.0 || a > 1.0) ++failures;
    ++instances;
  }
  return {failures == 0, fmt::format("{} property instances, {} failures", instances, failures)};
}

Outcome filter_invariants() {
  const auto start = Clock::now();
  SyntheticOptions options;
  options.documents = 10000;
  options.seed = 4242;
  const SyntheticCorpus corpus = generate_corpus(options);
  const auto engine = synthetic_engine(corpus);
  std::mt19937_64 rng(99);
  oracle::FilterAudit audit;
  std::size_t checked = 0;
  std::size_t rejected = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::string claim = generate_claim(corpus, rng);
    try {
      const CheckResult r = engine->check(ClaimRequest{claim, std::nullopt, std::nullopt});
      oracle::audit_filters(*engine, r, engine->config().theta, audit);
      ++checked;
    } catch (const Error&) {
      ++rejected;
    }
  }
  return {audit.total() == 0 && checked > 0,
          fmt::format("{} claims ({} rejected), {} items, violations: length {} entity {} theta {} novelty {}, "
                      "{:.1f} s",
                      checked, rejected, audit.items, audit.too_long, audit.missing_entity, audit.below_theta,
                      audit.not_novel, seconds_since(start))};
}

Outcome fixture_fig1() {
  const auto engine = fixture::engine();
  const CheckResult r = engine->check(ClaimRequest{fixture::kTeslaClaim, std::nullopt, std::nullopt});
  bool found = false;
  double combined = 0.0;
  for (const auto& item : r.verdict.column(Label::kSupports)) {
    if (item.evidence.text == fixture::kTeslaEvidence) {
      found = true;
      combined = item.evidence.combined;
    }
  }
  bool sizes = true;
  for (Label l : kAllLabels) sizes = sizes && r.verdict.column(l).size() <= kColumnSize;
  return {found && sizes,
          fmt::format("evidence in SUPPORTS: {} (combined {:.3f}), column sizes {}/{}/{}, verdict {}",
                      found ? "yes" : "no", combined, r.verdict.column(Label::kSupports).size(),
                      r.verdict.column(Label::kRefutes).size(), r.verdict.column(Label::kOther).size(),
                      to_string(r.verdict.global_label))};
}

Outcome table1() {
  std::mt19937_64 rng(1);
  const auto t = oracle::synthesize_table1(rng);
  if (!t) return {false, "no judged counts reproduce the table within 0.5 points"};
  const MetricsTable m = compute_metrics(t->log, t->outputs);
  double worst = 0.0;
  bool ok = m.shown[0][kAllColumn] == 488;
  for (std::size_t row = 0; row < 3; ++row) {
    for (std::size_t col = 0; col < 4; ++col) {
      const auto p = m.cells[row][col].percent();
      if (!p) {
        ok = false;
        continue;
      }
      worst = std::max(worst, std::fabs(*p - oracle::kTable1[row][col]));
    }
  }
  auto counts = [](const oracle::RowPlan& p) {
    return fmt::format("{}/{}/{}", p.judged[0], p.judged[1], p.judged[2]);
  };
  return {ok && worst <= 0.5,
          fmt::format("max deviation {:.2f} points; shown {}/{}/{}, judged relevant {}, evidence {}, global {} "
                      "of {}/{}/{} claims; {} log records",
                      worst, t->shown_evidence[0], t->shown_evidence[1], t->shown_evidence[2], counts(t->relevant),
                      counts(t->evidence), counts(t->global), t->shown_global[0], t->shown_global[1],
                      t->shown_global[2], t->log.size())};
}

Outcome performance() {
  const auto start = Clock::now();
  SyntheticOptions options;
  options.documents = 100000;
  options.seed = 100000;
  const SyntheticCorpus corpus = generate_corpus(options);
  const auto engine = synthetic_engine(corpus);
  const double build = seconds_since(start);
  std::mt19937_64 rng(5);
  std::vector<double> retrieval;
  std::vector<double> total;
  std::vector<double> ranking;
  while (total.size() < 50) {
    try {
      const CheckResult r = engine->check(ClaimRequest{generate_claim(corpus, rng), std::nullopt, std::nullopt});
      retrieval.push_back(r.timings.at(0).elapsed_ms);
      ranking.push_back(r.timings.at(1).elapsed_ms);
      total.push_back(r.total_ms);
    } catch (const Error&) {
    }
  }
  const double med_retrieval = median(retrieval);
  const double med_total = median(total);
  return {med_retrieval < 100.0 && med_total < 2000.0,
          fmt::format("100k docs (built in {:.0f} s), 50 claims: median retrieval {:.1f} ms, ranking {:.1f} ms, "
                      "pipeline {:.1f} ms",
                      build, med_retrieval, median(ranking), med_total)};
}

std::string run(const std::string& command) {
  std::string out;
  FILE* pipe = popen(command.c_str(), "r");
  if (pipe == nullptr) return out;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  pclose(pipe);
  return out;
}

Outcome determinism(const std::string& cli) {
  const auto a = fixture::engine();
  const auto b = fixture::engine();
  bool same = true;
  for (const char* claim : {fixture::kTeslaClaim, fixture::kRussiaClaim}) {
    const ClaimRequest req{claim, std::nullopt, std::nullopt};
    const std::string x = stable_view(to_json(a->check(req), a.get())).dump();
    same = same && x == stable_view(to_json(a->check(req), a.get())).dump();
    same = same && x == stable_view(to_json(b->check(req), b.get())).dump();
  }
  std::string cli_note = "CLI not given";
  if (!cli.empty()) {
    const std::string command = "'" + cli + "' check '" + std::string(fixture::kRussiaClaim) + "' --json --corpus '" +
                                (fixture::kDir / "corpus.jsonl").string() + "' --gazetteer '" +
                                (fixture::kDir / "gazetteer.tsv").string() + "'";
    const std::string first = run(command);
    const std::string second = run(command);
    try {
      const auto j1 = stable_view(nlohmann::json::parse(first));
      const auto j2 = stable_view(nlohmann::json::parse(second));
      const bool cli_same = j1.dump() == j2.dump();
      same = same && cli_same;
      cli_note = cli_same ? "CLI runs identical" : "CLI runs differ";
    } catch (const std::exception& e) {
      same = false;
      cli_note = std::string("CLI output unparsable: ") + e.what();
    }
  }
  return {same, "in-process runs identical: " + std::string(same ? "yes" : "no") + "; " + cli_note};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string cli;
  bool skip_perf = false;
  app.add_option("--cli", cli, "Path to the claimdesk executable");
  app.add_flag("--skip-perf", skip_perf, "Skip the 100k-document performance run");
  CLI11_PARSE(app, argc, argv);

  set_log_level("warn");
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  std::vector<Criterion> criteria = {
      {"retrieval-oracle", retrieval_oracle},
      {"s1-formula", s1_checks},
      {"filter-invariants", filter_invariants},
      {"fig1-fixture", fixture_fig1},
      {"table1-reconstruction", table1},
      {"performance-100k", performance},
      {"determinism", [&] { return determinism(cli); }},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    if (skip_perf && std::string(c.name) == "performance-100k") {
      std::cout << "SKIP " << c.name << "\n" << std::flush;
      continue;
    }
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail << "\n" << std::flush;
  }
  return failed == 0 ? 0 : 1;
}
