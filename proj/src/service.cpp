#include "claimdesk/service.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <fstream>

#include "claimdesk/error.hpp"
#include "claimdesk/serialize.hpp"

namespace claimdesk {

using nlohmann::json;

ClaimRegistry::ClaimRegistry(std::optional<std::filesystem::path> path) : path_(std::move(path)) {
  if (!path_ || !std::filesystem::exists(*path_)) return;
  std::ifstream in(*path_);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      insert_locked(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kFormat, path_->string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void ClaimRegistry::insert_locked(const json& verdict) {
  const Verdict parsed = verdict_from_json(verdict);
  entries_[parsed.claim_id] = Entry{verdict, output_of(parsed)};
}

void ClaimRegistry::put(const json& verdict) {
  std::unique_lock lock(mutex_);
  if (path_) {
    std::ofstream out(*path_, std::ios::app);
    if (!out) throw Error(ErrorCode::kConfig, "cannot append to " + path_->string(), "claims_log");
    out << verdict.dump() << '\n';
  }
  insert_locked(verdict);
}

std::optional<json> ClaimRegistry::get(const std::string& claim_id) const {
  std::shared_lock lock(mutex_);
  const auto it = entries_.find(claim_id);
  if (it == entries_.end()) return std::nullopt;
  return it->second.verdict;
}

std::optional<ClaimOutput> ClaimRegistry::output(const std::string& claim_id) const {
  std::shared_lock lock(mutex_);
  const auto it = entries_.find(claim_id);
  if (it == entries_.end()) return std::nullopt;
  return it->second.output;
}

SystemOutputs ClaimRegistry::outputs() const {
  std::shared_lock lock(mutex_);
  SystemOutputs out;
  for (const auto& [id, entry] : entries_) out.emplace(id, entry.output);
  return out;
}

std::size_t ClaimRegistry::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

SystemOutputs read_claims_log(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::kNotFound, "cannot read claims log " + path.string(), "claims_log");
  }
  return ClaimRegistry(path).outputs();
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kValidation:
    case ErrorCode::kEmptyQuery:
      return 422;
    case ErrorCode::kFormat:
      return 400;
    case ErrorCode::kNotFound:
      return 404;
    case ErrorCode::kDuplicate:
      return 409;
    case ErrorCode::kBackend:
      return 502;
    case ErrorCode::kConfig:
      break;
  }
  return 500;
}

json error_body(const Error& error) {
  json j = {{"code", to_string(error.code())}, {"message", error.what()}};
  if (!error.field().empty()) j["field"] = error.field();
  return j;
}

namespace {

HttpResponse json_response(int status, const json& body) { return HttpResponse{status, body.dump(), "application/json"}; }

json parse_object(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kFormat, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kFormat, "request body must be a JSON object");
  return j;
}

}  // namespace

Service::Service(Engine& engine, ClaimRegistry& claims, FeedbackStore& feedback)
    : engine_(engine), claims_(claims), feedback_(feedback) {}

Service::~Service() = default;

template <typename Fn>
HttpResponse Service::guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    return json_response(http_status(e.code()), error_body(e));
  } catch (const std::exception& e) {
    logger()->error("request failed: {}", e.what());
    return json_response(500, {{"code", "internal_error"}, {"message", e.what()}});
  }
}

HttpResponse Service::post_claim(const std::string& body) {
  return guarded([&] {
    const json j = parse_object(body);
    ClaimRequest request;
    const auto text = j.find("claim_text");
    if (text == j.end() || !text->is_string()) {
      throw Error(ErrorCode::kValidation, "'claim_text' must be a string", "claim_text");
    }
    request.claim_text = text->get<std::string>();
    if (const auto it = j.find("theta"); it != j.end() && !it->is_null()) {
      if (!it->is_number()) throw Error(ErrorCode::kValidation, "'theta' must be a number", "theta");
      request.theta = it->get<double>();
    }
    if (const auto it = j.find("k_docs"); it != j.end() && !it->is_null()) {
      if (!it->is_number_unsigned()) {
        throw Error(ErrorCode::kValidation, "'k_docs' must be a positive integer", "k_docs");
      }
      request.k_docs = it->get<std::size_t>();
    }
    const CheckResult result = engine_.check(request);
    json verdict = to_json(result.verdict, &engine_);
    claims_.put(verdict);
    json timings = json::array();
    for (const StageTiming& t : result.timings) timings.push_back(to_json(t));
    verdict["timings"] = std::move(timings);
    verdict["total_ms"] = result.total_ms;
    return json_response(200, verdict);
  });
}

HttpResponse Service::get_claim(const std::string& claim_id) {
  return guarded([&] {
    auto verdict = claims_.get(claim_id);
    if (!verdict) throw Error(ErrorCode::kNotFound, "unknown claim '" + claim_id + "'", "claim_id");
    return json_response(200, *verdict);
  });
}

HttpResponse Service::post_feedback(const std::string& claim_id, const std::string& body) {
  return guarded([&] {
    json j = parse_object(body);
    if (const auto it = j.find("claim_id"); it != j.end() && it->is_string() && *it != claim_id) {
      throw Error(ErrorCode::kValidation, "'claim_id' does not match the URL", "claim_id");
    }
    j["claim_id"] = claim_id;
    j.erase("id");
    FeedbackRecord record = feedback_from_json(j);
    const auto output = claims_.output(claim_id);
    const std::string id = feedback_.record(std::move(record), output ? &*output : nullptr);
    return json_response(201, {{"id", id}});
  });
}

HttpResponse Service::get_metrics(bool csv) {
  return guarded([&] {
    const auto log = feedback_.log();
    const MetricsTable table = compute_metrics(log, claims_.outputs());
    if (csv) return HttpResponse{200, to_csv(table), "text/csv"};
    return json_response(200, to_json(table));
  });
}

HttpResponse Service::get_health() {
  return guarded([&] {
    return json_response(200, {{"status", "ok"},
                               {"documents", engine_.corpus().size()},
                               {"claims", claims_.size()},
                               {"feedback", feedback_.size()}});
  });
}

HttpResponse Service::get_document(const std::string& doc_id) {
  return guarded([&] {
    const auto doc = engine_.document(doc_id);
    if (!doc) throw Error(ErrorCode::kNotFound, "unknown document '" + doc_id + "'", "doc_id");
    return json_response(200, to_json(*doc));
  });
}

int Service::bind(const std::string& host, int port) {
  server_ = std::make_unique<httplib::Server>();
  auto reply = [](httplib::Response& res, const HttpResponse& r) {
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  server_->Post("/claims", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, post_claim(req.body));
  });
  server_->Get(R"(/claims/([^/]+))", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, get_claim(req.matches[1]));
  });
  server_->Post(R"(/claims/([^/]+)/feedback)", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, post_feedback(req.matches[1], req.body));
  });
  server_->Get("/metrics", [this, reply](const httplib::Request& req, httplib::Response& res) {
    const bool csv = req.get_param_value("format") == "csv" ||
                     req.get_header_value("Accept").find("text/csv") != std::string::npos;
    reply(res, get_metrics(csv));
  });
  server_->Get("/health", [this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, get_health());
  });
  server_->Get(R"(/documents/([^/]+))", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, get_document(req.matches[1]));
  });
  server_->set_logger([](const httplib::Request& req, const httplib::Response& res) {
    logger()->info("{} {} -> {}", req.method, req.path, res.status);
  });

  const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorCode::kConfig, "cannot bind " + host + ":" + std::to_string(port), "port");
  return bound;
}

void Service::listen() {
  if (!server_) throw Error(ErrorCode::kConfig, "service is not bound");
  server_->listen_after_bind();
}

void Service::stop() {
  if (server_) server_->stop();
}

}  // namespace claimdesk
