#pragma once

#include <stdexcept>
#include <string>

namespace claimdesk {

/// Error categories surfaced by the engine. The service maps each one onto an
/// HTTP status; the CLI prints `code: message`.
enum class ErrorCode {
  kValidation,   // malformed input or a record missing a required field
  kDuplicate,    // doc_id already ingested/indexed
  kNotFound,     // unknown doc, claim or sentence
  kEmptyQuery,   // claim without matchable features
  kConfig,       // unreadable resource file, bad config value
  kFormat,       // corrupt snapshot or log file
  kBackend,      // remote classifier failure
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string field = {})
      : std::runtime_error(std::move(message)), code_(code), field_(std::move(field)) {}

  ErrorCode code() const { return code_; }
  /// Name of the offending input field, empty when not applicable.
  const std::string& field() const { return field_; }

 private:
  ErrorCode code_;
  std::string field_;
};

}  // namespace claimdesk
