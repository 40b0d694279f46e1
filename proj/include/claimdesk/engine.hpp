#pragma once

#include <filesystem>
#include <istream>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "claimdesk/config.hpp"
#include "claimdesk/corpus.hpp"
#include "claimdesk/entailment.hpp"
#include "claimdesk/index.hpp"
#include "claimdesk/ranking.hpp"
#include "claimdesk/verdict.hpp"

namespace spdlog {
class logger;
}

namespace claimdesk {

inline constexpr std::size_t kMaxClaimChars = 1000;

/// Shared stderr logger for the library and tools.
std::shared_ptr<spdlog::logger> logger();
/// trace, debug, info, warn, error, critical or off.
void set_log_level(std::string_view level);

struct ClaimRequest {
  std::string claim_text;
  std::optional<double> theta;
  std::optional<std::size_t> k_docs;
};

struct StageTiming {
  std::string stage;  // doc_retrieval | sentence_ranking | classification
  double elapsed_ms = 0.0;
  std::size_t count_in = 0;
  std::size_t count_out = 0;
};

/// Diagnostics of one run, beyond what the verdict shows.
struct PipelineTrace {
  std::size_t claim_features = 0;
  std::size_t documents = 0;
  std::size_t sentences_scored = 0;
  std::size_t sentences_matched = 0;  // s1 > 0
  std::size_t sentences_filtered = 0;  // survived length/entity/novelty
  std::size_t sentences_selected = 0;  // combined >= theta
  /// Sentences kept by the filters, in the order they were kept.
  std::vector<SentenceId> kept_in_filter_order;
};

struct CheckResult {
  Verdict verdict;
  std::vector<StageTiming> timings;
  /// Every selected evidence item with its classification, best first.
  std::vector<ClassifiedEvidence> evidence;
  PipelineTrace trace;
  double total_ms = 0.0;
};

/// Corpus, index, embeddings and classifier behind one claim-check entry
/// point. Documents can be added while checks run; each check sees a
/// consistent set of documents.
class Engine {
 public:
  /// Loads the resources named in `config` (compiled-in defaults otherwise).
  static std::unique_ptr<Engine> create(const Config& config);

  Engine(Config config, std::shared_ptr<const Analyzer> analyzer, EmbeddingStore embeddings,
         std::unique_ptr<Classifier> classifier);

  const Config& config() const { return config_; }
  const Analyzer& analyzer() const { return *analyzer_; }
  const InvertedIndex& index() const { return *index_; }
  const Corpus& corpus() const { return corpus_; }

  /// Ingests and indexes one record. Throws kValidation or kDuplicate.
  void add_document(const CorpusRecord& record);
  /// Adds every record of a newline-delimited corpus file.
  std::size_t load_corpus(const std::filesystem::path& path);
  std::size_t load_corpus(std::istream& in);

  std::shared_ptr<const Document> document(std::string_view doc_id) const;

  /// Runs retrieval, sentence ranking, classification and aggregation.
  /// Throws kValidation for an empty or over-long claim and kEmptyQuery when
  /// the claim has no matchable content words.
  CheckResult check(const ClaimRequest& request) const;

  /// Deterministic id from the claim text and the effective configuration.
  std::string claim_id(std::string_view claim_text, const Config& effective) const;

  /// Single binary file: the index snapshot followed by the documents.
  void save_snapshot(const std::filesystem::path& path) const;
  void load_snapshot(const std::filesystem::path& path);

 private:
  void refresh_embeddings() const;

  Config config_;
  std::shared_ptr<const Analyzer> analyzer_;
  std::unique_ptr<InvertedIndex> index_;
  Corpus corpus_;
  mutable std::shared_mutex embeddings_mutex_;
  mutable EmbeddingStore embeddings_;
  mutable bool idf_loaded_ = false;
  std::unique_ptr<Classifier> classifier_;
};

}  // namespace claimdesk
