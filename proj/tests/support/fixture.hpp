#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "claimdesk/config.hpp"
#include "claimdesk/engine.hpp"

namespace fixture {

inline const std::filesystem::path kDir = CLAIMDESK_FIXTURE_DIR;

/// The text of the evidence sentence in the Tesla fixture article.
inline constexpr const char* kTeslaEvidence =
    "Electric carmaker Tesla has signed an agreement with Chinese authorities to build a factory in Shanghai.";
inline constexpr const char* kTeslaClaim = "Tesla builds car factory in Shanghai";
inline constexpr const char* kRussiaClaim = "Russia meddled with US elections";

/// Config with the fixture gazetteer.
claimdesk::Config config();
/// Engine loaded with the fixture corpus.
std::unique_ptr<claimdesk::Engine> engine(claimdesk::Config config = fixture::config());

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixture
