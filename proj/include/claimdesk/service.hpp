#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include <json.hpp>

#include "claimdesk/engine.hpp"
#include "claimdesk/error.hpp"
#include "claimdesk/feedback.hpp"

namespace httplib {
class Server;
}

namespace claimdesk {

/// Verdicts by claim id, optionally persisted as newline-delimited JSON.
/// Re-checking a claim replaces its stored verdict.
class ClaimRegistry {
 public:
  explicit ClaimRegistry(std::optional<std::filesystem::path> path = std::nullopt);

  void put(const nlohmann::json& verdict);
  std::optional<nlohmann::json> get(const std::string& claim_id) const;
  std::optional<ClaimOutput> output(const std::string& claim_id) const;
  SystemOutputs outputs() const;
  std::size_t size() const;

 private:
  struct Entry {
    nlohmann::json verdict;
    ClaimOutput output;
  };
  void insert_locked(const nlohmann::json& verdict);

  std::optional<std::filesystem::path> path_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, Entry> entries_;
};

/// Reads every verdict of a claims log.
SystemOutputs read_claims_log(const std::filesystem::path& path);

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// HTTP status for an error code.
int http_status(ErrorCode code);
/// `{code, message, field?}` body for an error.
nlohmann::json error_body(const Error& error);

/// REST front end over one engine. Handlers are callable directly; serve()
/// binds them to an HTTP server.
class Service {
 public:
  Service(Engine& engine, ClaimRegistry& claims, FeedbackStore& feedback);
  ~Service();

  HttpResponse post_claim(const std::string& body);
  HttpResponse get_claim(const std::string& claim_id);
  HttpResponse post_feedback(const std::string& claim_id, const std::string& body);
  HttpResponse get_metrics(bool csv);
  HttpResponse get_health();
  HttpResponse get_document(const std::string& doc_id);

  /// Binds to host:port (port 0 picks a free one) and returns the port.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  void stop();

 private:
  template <typename Fn>
  HttpResponse guarded(Fn&& fn);

  Engine& engine_;
  ClaimRegistry& claims_;
  FeedbackStore& feedback_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace claimdesk
