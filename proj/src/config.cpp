#include "claimdesk/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "claimdesk/error.hpp"

extern char** environ;

namespace claimdesk {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

Error bad_value(std::string_view key, std::string_view value) {
  return Error(ErrorCode::kConfig,
               "invalid value '" + std::string(value) + "' for '" + std::string(key) + "'",
               std::string(key));
}

double parse_double(std::string_view key, std::string_view value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) throw bad_value(key, value);
  return out;
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view value) {
  Int out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) throw bad_value(key, value);
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

struct Field {
  const char* key;
  bool affects_verdict;
  std::function<void(Config&, std::string_view)> set;
  std::function<std::string(const Config&)> get;
};

template <typename T>
Field number(const char* key, bool affects, T Config::*member) {
  return Field{key, affects,
               [key, member](Config& c, std::string_view v) {
                 if constexpr (std::is_floating_point_v<T>) {
                   c.*member = parse_double(key, v);
                 } else {
                   c.*member = parse_int<T>(key, v);
                 }
               },
               [member](const Config& c) {
                 if constexpr (std::is_floating_point_v<T>) {
                   return format_double(c.*member);
                 } else {
                   return std::to_string(c.*member);
                 }
               }};
}

Field text(const char* key, bool affects, std::string Config::*member) {
  return Field{key, affects, [member](Config& c, std::string_view v) { c.*member = std::string(v); },
               [member](const Config& c) { return c.*member; }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      number("theta", true, &Config::theta),
      number("k_docs", true, &Config::k_docs),
      number("w_ent", true, &Config::w_ent),
      number("bm25.k1", true, &Config::bm25_k1),
      number("bm25.b", true, &Config::bm25_b),
      number("max_sentence_tokens", true, &Config::max_sentence_tokens),
      number("novelty_max_overlap", true, &Config::novelty_max_overlap),
      number("embedding_dim", true, &Config::embedding_dim),
      text("embeddings", true, &Config::embeddings),
      text("gazetteer", true, &Config::gazetteer),
      text("stopwords", true, &Config::stopwords),
      text("abbreviations", true, &Config::abbreviations),
      text("negation_cues", true, &Config::negation_cues),
      text("classifier", true, &Config::classifier),
      number("support_overlap", true, &Config::support_overlap),
      text("classifier.endpoint", true, &Config::classifier_endpoint),
      number("classifier.timeout_ms", false, &Config::classifier_timeout_ms),
      number("classifier.max_in_flight", false, &Config::classifier_max_in_flight),
      text("claims_log", false, &Config::claims_log),
      text("feedback_log", false, &Config::feedback_log),
      number("feedback.snapshot_every", false, &Config::feedback_snapshot_every),
  };
  return table;
}

const Field& field(std::string_view key) {
  for (const Field& f : fields()) {
    if (key == f.key) return f;
  }
  throw Error(ErrorCode::kConfig, "unknown config key '" + std::string(key) + "'", std::string(key));
}

}  // namespace

void Config::set(std::string_view key, std::string_view value) { field(key).set(*this, trim(value)); }

std::string Config::get(std::string_view key) const { return field(key).get(*this); }

const std::vector<std::string>& Config::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const Field& f : fields()) out.emplace_back(f.key);
    return out;
  }();
  return names;
}

void Config::load_text(std::string_view text, std::string_view source) {
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = trim(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kConfig,
                  std::string(source) + ":" + std::to_string(line_no) + ": expected key=value");
    }
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void Config::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot read config " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  load_text(buffer.str(), path.string());
}

std::string environment_name(std::string_view key) {
  std::string out = "CLAIMDESK_";
  for (char c : key) {
    out.push_back(c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  return out;
}

void Config::apply_environment(const std::map<std::string, std::string>& env) {
  for (const Field& f : fields()) {
    const auto it = env.find(environment_name(f.key));
    if (it != env.end()) set(f.key, it->second);
  }
}

void Config::apply_environment() {
  std::map<std::string, std::string> env;
  for (char** e = environ; e != nullptr && *e != nullptr; ++e) {
    const std::string_view entry(*e);
    const auto eq = entry.find('=');
    if (eq != std::string_view::npos && entry.rfind("CLAIMDESK_", 0) == 0) {
      env.emplace(entry.substr(0, eq), entry.substr(eq + 1));
    }
  }
  apply_environment(env);
}

void Config::validate() const {
  auto fail = [](const char* key, const std::string& why) {
    throw Error(ErrorCode::kConfig, std::string(key) + " " + why, key);
  };
  if (!(theta >= 0.0 && theta <= 1.0)) fail("theta", "must lie in [0, 1]");
  if (k_docs == 0) fail("k_docs", "must be at least 1");
  if (!(w_ent >= 1.0)) fail("w_ent", "must be >= 1");
  if (!(bm25_k1 >= 0.0)) fail("bm25.k1", "must be >= 0");
  if (!(bm25_b >= 0.0 && bm25_b <= 1.0)) fail("bm25.b", "must lie in [0, 1]");
  if (max_sentence_tokens == 0) fail("max_sentence_tokens", "must be positive");
  if (!(novelty_max_overlap > 0.0 && novelty_max_overlap <= 1.0)) {
    fail("novelty_max_overlap", "must lie in (0, 1]");
  }
  if (embedding_dim == 0) fail("embedding_dim", "must be positive");
  if (classifier != "lexical" && classifier != "remote") fail("classifier", "must be lexical or remote");
  if (classifier == "remote" && classifier_endpoint.empty()) {
    fail("classifier.endpoint", "is required for the remote classifier");
  }
  if (!(support_overlap >= 0.0 && support_overlap <= 1.0)) fail("support_overlap", "must lie in [0, 1]");
  if (classifier_timeout_ms <= 0) fail("classifier.timeout_ms", "must be positive");
}

std::string Config::fingerprint() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
  };
  for (const Field& f : fields()) {
    if (!f.affects_verdict) continue;
    mix(f.key);
    mix("=");
    mix(f.get(*this));
    mix("\n");
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace claimdesk
