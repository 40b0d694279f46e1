#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <csignal>
#include <fstream>
#include <iostream>
#include <random>

#include "claimdesk/config.hpp"
#include "claimdesk/engine.hpp"
#include "claimdesk/error.hpp"
#include "claimdesk/feedback.hpp"
#include "claimdesk/serialize.hpp"
#include "claimdesk/service.hpp"
#include "claimdesk/synthetic.hpp"

using namespace claimdesk;

namespace {

struct Options {
  std::string config_file;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flags;
  std::string log_level = "warn";
  std::string snapshot;
  std::string corpus;
};

std::string flag_name(const std::string& key) {
  std::string out = key;
  std::replace(out.begin(), out.end(), '.', '-');
  std::replace(out.begin(), out.end(), '_', '-');
  return out;
}

void add_config_flags(CLI::App& app, Options& o) {
  app.add_option("--config", o.config_file, "key=value configuration file");
  app.add_option("--set", o.sets, "Override one key (key=value); repeatable");
  app.add_option("--log-level", o.log_level, "trace|debug|info|warn|error|off");
  for (const std::string& key : Config::keys()) {
    app.add_option_function<std::string>(
        "--" + flag_name(key), [&o, key](const std::string& v) { o.flags[key] = v; }, "Config key " + key);
  }
}

void add_source_flags(CLI::App& app, Options& o) {
  app.add_option("--snapshot", o.snapshot, "Snapshot written by `index`");
  app.add_option("--corpus", o.corpus, "Newline-delimited JSON corpus");
}

Config resolve_config(const Options& o) {
  Config config;
  if (!o.config_file.empty()) config.load_file(o.config_file);
  config.apply_environment();
  for (const auto& [key, value] : o.flags) config.set(key, value);
  for (const std::string& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::kConfig, "--set expects key=value, got '" + s + "'");
    config.set(s.substr(0, eq), s.substr(eq + 1));
  }
  config.validate();
  return config;
}

std::unique_ptr<Engine> open_engine(const Options& o, const Config& config) {
  auto engine = Engine::create(config);
  if (!o.snapshot.empty()) engine->load_snapshot(o.snapshot);
  if (!o.corpus.empty()) engine->load_corpus(std::filesystem::path(o.corpus));
  if (o.snapshot.empty() && o.corpus.empty()) {
    throw Error(ErrorCode::kConfig, "one of --snapshot or --corpus is required", "corpus");
  }
  return engine;
}

std::optional<std::filesystem::path> optional_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::filesystem::path(s);
}

void print_verdict(const CheckResult& r) {
  const Verdict& v = r.verdict;
  std::cout << "claim:   " << v.claim_text << "\n"
            << "id:      " << v.claim_id << "\n"
            << "verdict: " << to_string(v.global_label) << "\n";
  for (Label label : kAllLabels) {
    std::cout << "\n" << to_string(label) << " (" << v.column(label).size() << ")\n";
    for (const auto& item : v.column(label)) {
      std::cout << fmt::format("  {:.3f}  [{}#{}] {}\n", item.evidence.combined, item.evidence.doc_id,
                               item.evidence.sent_id.ordinal, item.evidence.text);
    }
  }
  std::cout << "\n";
  for (const auto& t : r.timings) {
    std::cout << fmt::format("{:<17} {:>9.2f} ms  {} -> {}\n", t.stage, t.elapsed_ms, t.count_in, t.count_out);
  }
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : (v[m - 1] + v[m]) / 2.0;
}

Service* running_service = nullptr;

void handle_signal(int) {
  if (running_service != nullptr) running_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Claim checking against a news corpus"};
  app.require_subcommand(1);
  Options o;

  auto* index_cmd = app.add_subcommand("index", "Index a corpus into a snapshot");
  std::string index_input;
  std::string index_out;
  index_cmd->add_option("corpus", index_input, "Newline-delimited JSON corpus")->required();
  index_cmd->add_option("--out,-o", index_out, "Snapshot path")->required();
  add_config_flags(*index_cmd, o);

  auto* check_cmd = app.add_subcommand("check", "Check one claim");
  std::string claim_text;
  bool as_json = false;
  check_cmd->add_option("claim", claim_text, "Claim text")->required();
  check_cmd->add_flag("--json", as_json, "Print the verdict as JSON");
  add_source_flags(*check_cmd, o);
  add_config_flags(*check_cmd, o);

  auto* serve_cmd = app.add_subcommand("serve", "Serve the REST API");
  std::string host = "127.0.0.1";
  int port = 8080;
  serve_cmd->add_option("--host", host, "Bind address");
  serve_cmd->add_option("--port", port, "Port (0 picks a free one)");
  add_source_flags(*serve_cmd, o);
  add_config_flags(*serve_cmd, o);

  auto* eval_cmd = app.add_subcommand("eval", "Compute precision metrics from a feedback log");
  std::string feedback_path;
  std::string claims_path;
  std::string eval_format = "csv";
  eval_cmd->add_option("feedback-log", feedback_path, "Feedback log")->required();
  eval_cmd->add_option("--claims", claims_path, "Claims log with the verdicts shown")->required();
  eval_cmd->add_option("--format", eval_format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
  eval_cmd->add_option("--log-level", o.log_level, "trace|debug|info|warn|error|off");

  auto* bench_cmd = app.add_subcommand("bench", "Time the pipeline over generated claims");
  std::size_t bench_docs = 0;
  std::size_t bench_claims = 50;
  std::uint64_t bench_seed = 1;
  bench_cmd->add_option("--synthetic", bench_docs, "Generate this many documents instead of loading");
  bench_cmd->add_option("--claims", bench_claims, "Number of claims");
  bench_cmd->add_option("--seed", bench_seed, "Generator seed");
  add_source_flags(*bench_cmd, o);
  add_config_flags(*bench_cmd, o);

  auto* gen_cmd = app.add_subcommand("generate", "Write a synthetic corpus and gazetteer");
  SyntheticOptions gen;
  std::string gen_out;
  std::string gen_gazetteer;
  gen_cmd->add_option("--docs", gen.documents, "Documents");
  gen_cmd->add_option("--seed", gen.seed, "Generator seed");
  gen_cmd->add_option("--out,-o", gen_out, "Corpus path")->required();
  gen_cmd->add_option("--gazetteer", gen_gazetteer, "Gazetteer path");

  CLI11_PARSE(app, argc, argv);

  try {
    set_log_level(o.log_level);

    if (*index_cmd) {
      const Config config = resolve_config(o);
      auto engine = Engine::create(config);
      const std::size_t n = engine->load_corpus(std::filesystem::path(index_input));
      engine->save_snapshot(index_out);
      std::cout << "indexed " << n << " documents into " << index_out << "\n";
    } else if (*check_cmd) {
      const Config config = resolve_config(o);
      auto engine = open_engine(o, config);
      const CheckResult result = engine->check(ClaimRequest{claim_text, std::nullopt, std::nullopt});
      if (!config.claims_log.empty()) {
        ClaimRegistry(optional_path(config.claims_log)).put(to_json(result.verdict, engine.get()));
      }
      if (as_json) {
        std::cout << to_json(result, engine.get()).dump(2) << "\n";
      } else {
        print_verdict(result);
      }
    } else if (*serve_cmd) {
      const Config config = resolve_config(o);
      auto engine = open_engine(o, config);
      ClaimRegistry claims(optional_path(config.claims_log));
      FeedbackStore feedback(optional_path(config.feedback_log), config.feedback_snapshot_every);
      Service service(*engine, claims, feedback);
      const int bound = service.bind(host, port);
      running_service = &service;
      std::signal(SIGINT, handle_signal);
      std::signal(SIGTERM, handle_signal);
      std::cout << "listening on http://" << host << ":" << bound << "\n" << std::flush;
      service.listen();
      running_service = nullptr;
    } else if (*eval_cmd) {
      std::ifstream in(feedback_path);
      if (!in) throw Error(ErrorCode::kNotFound, "cannot read " + feedback_path, "feedback-log");
      const auto log = read_feedback_log(in);
      const MetricsTable table = compute_metrics(log, read_claims_log(claims_path));
      std::cout << (eval_format == "json" ? to_json(table).dump(2) + "\n" : to_csv(table));
    } else if (*bench_cmd) {
      const Config config = resolve_config(o);
      std::unique_ptr<Engine> engine;
      std::optional<SyntheticCorpus> synthetic;
      if (bench_docs > 0) {
        SyntheticOptions options;
        options.documents = bench_docs;
        options.seed = bench_seed;
        synthetic = generate_corpus(options);
        engine = Engine::create(config);
        for (const auto& r : synthetic->records) engine->add_document(r);
      } else {
        engine = open_engine(o, config);
      }
      std::mt19937_64 rng(bench_seed);
      std::vector<std::string> claims;
      if (synthetic) {
        for (std::size_t i = 0; i < bench_claims; ++i) claims.push_back(generate_claim(*synthetic, rng));
      } else {
        const auto docs = engine->corpus().documents();
        for (std::size_t i = 0; i < bench_claims && !docs.empty(); ++i) {
          const auto& doc = docs[rng() % docs.size()];
          claims.push_back(doc->title.empty() ? doc->sentences.front().text : doc->title);
        }
      }
      std::map<std::string, std::vector<double>> stages;
      std::vector<double> totals;
      std::size_t rejected = 0;
      for (const std::string& claim : claims) {
        try {
          const CheckResult r = engine->check(ClaimRequest{claim, std::nullopt, std::nullopt});
          for (const auto& t : r.timings) stages[t.stage].push_back(t.elapsed_ms);
          totals.push_back(r.total_ms);
        } catch (const Error&) {
          ++rejected;
        }
      }
      std::cout << fmt::format("documents {}  claims {}  rejected {}\n", engine->corpus().size(), claims.size(),
                               rejected);
      for (const char* stage : {"doc_retrieval", "sentence_ranking", "classification"}) {
        std::cout << fmt::format("{:<17} median {:>9.2f} ms\n", stage, median(stages[stage]));
      }
      std::cout << fmt::format("{:<17} median {:>9.2f} ms\n", "total", median(totals));
    } else if (*gen_cmd) {
      const SyntheticCorpus corpus = generate_corpus(gen);
      std::ofstream out(gen_out);
      for (const auto& r : corpus.records) out << to_json_line(r) << "\n";
      if (!gen_gazetteer.empty()) {
        std::ofstream gz(gen_gazetteer);
        for (std::size_t i = 0; i < corpus.entity_names.size(); ++i) {
          const char* kinds[] = {"PERSON", "ORG", "LOC"};
          gz << corpus.entity_names[i] << "\t" << kinds[i % 3] << "\n";
        }
      }
      std::cout << "wrote " << corpus.records.size() << " documents to " << gen_out << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return e.code() == ErrorCode::kValidation || e.code() == ErrorCode::kEmptyQuery ? 3 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
