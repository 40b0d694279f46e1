#include "support/fixture.hpp"

#include <atomic>
#include <random>
#include <unistd.h>

namespace fixture {

claimdesk::Config config() {
  claimdesk::Config c;
  c.gazetteer = (kDir / "gazetteer.tsv").string();
  return c;
}

std::unique_ptr<claimdesk::Engine> engine(claimdesk::Config config) {
  auto e = claimdesk::Engine::create(config);
  e->load_corpus(kDir / "corpus.jsonl");
  return e;
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("claimdesk-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace fixture
