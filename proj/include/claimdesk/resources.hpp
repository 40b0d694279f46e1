#pragma once

#include <string_view>

// Word lists shipped in data/ and compiled into the library so binaries work
// without a data directory. Config keys point at replacement files.
namespace claimdesk::resources {

std::string_view default_abbreviations();
std::string_view default_stopwords();
std::string_view default_negation_cues();

}  // namespace claimdesk::resources
