#include "claimdesk/index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <mutex>

#include "claimdesk/error.hpp"

namespace claimdesk {

double bm25_idf(std::size_t doc_count, std::size_t document_frequency) {
  const auto n = static_cast<double>(doc_count);
  const auto df = static_cast<double>(document_frequency);
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double bm25_term(const Bm25Params& params, double idf, std::uint32_t tf, double doc_length,
                 double avg_doc_length) {
  const auto f = static_cast<double>(tf);
  const double norm = avg_doc_length > 0.0 ? doc_length / avg_doc_length : 1.0;
  return idf * f * (params.k1 + 1.0) / (f + params.k1 * (1.0 - params.b + params.b * norm));
}

InvertedIndex::InvertedIndex(Bm25Params params) : params_(params) {}

double InvertedIndex::key_weight(std::string_view key) const {
  return feature_key_kind(key) == FeatureKind::kEntity ? params_.entity_weight : 1.0;
}

Bm25Params InvertedIndex::params() const {
  std::shared_lock lock(mutex_);
  return params_;
}

void InvertedIndex::set_params(const Bm25Params& params) {
  std::unique_lock lock(mutex_);
  params_ = params;
}

void InvertedIndex::index_document(const Document& doc) {
  index_document(doc.doc_id, doc.length, doc.features);
}

void InvertedIndex::index_document(std::string_view doc_id_view, std::uint32_t length,
                                   const FeatureSet& features) {
  const std::string doc_id(doc_id_view);
  std::unique_lock lock(mutex_);
  if (doc_numbers_.count(doc_id) > 0) {
    throw Error(ErrorCode::kDuplicate, "document '" + doc_id + "' is already indexed", "id");
  }
  const auto number = static_cast<std::uint32_t>(doc_ids_.size());
  doc_ids_.push_back(doc_id);
  doc_lengths_.push_back(length);
  doc_numbers_.emplace(doc_id, number);
  total_length_ += length;

  for (const auto& [key, positions_vec] : features.positions) {
    const auto* positions = &positions_vec;
    PostingList& list = postings_[key];
    // Appends are the common case; out-of-order ids fall back to an insert.
    std::size_t at = list.docs.size();
    if (!list.docs.empty() && doc_ids_[list.docs.back()] > doc_id) {
      at = static_cast<std::size_t>(
          std::lower_bound(list.docs.begin(), list.docs.end(), doc_id,
                           [&](std::uint32_t d, const std::string& id) { return doc_ids_[d] < id; }) -
          list.docs.begin());
    }
    const auto count = static_cast<std::uint32_t>(positions->size());
    const std::uint32_t pos_at = list.offsets[at];
    list.docs.insert(list.docs.begin() + static_cast<std::ptrdiff_t>(at), number);
    list.positions.insert(list.positions.begin() + pos_at, positions->begin(), positions->end());
    list.offsets.insert(list.offsets.begin() + static_cast<std::ptrdiff_t>(at) + 1, pos_at + count);
    for (std::size_t i = at + 2; i < list.offsets.size(); ++i) list.offsets[i] += count;
  }
  ++generation_;
}

double InvertedIndex::avg_doc_length_locked() const {
  return doc_ids_.empty() ? 0.0
                          : static_cast<double>(total_length_) / static_cast<double>(doc_ids_.size());
}

std::size_t InvertedIndex::find_posting(const PostingList& list, std::string_view doc_id) const {
  const auto it =
      std::lower_bound(list.docs.begin(), list.docs.end(), doc_id,
                       [&](std::uint32_t d, std::string_view id) { return doc_ids_[d] < id; });
  if (it == list.docs.end() || doc_ids_[*it] != doc_id) return list.docs.size();
  return static_cast<std::size_t>(it - list.docs.begin());
}

double InvertedIndex::bm25_score(const FeatureSet& claim, std::string_view doc_id) const {
  const auto keys = claim.keys();
  std::shared_lock lock(mutex_);
  const auto doc = doc_numbers_.find(std::string(doc_id));
  if (doc == doc_numbers_.end()) {
    throw Error(ErrorCode::kNotFound, "document '" + std::string(doc_id) + "' is not indexed");
  }
  const std::size_t n = doc_ids_.size();
  const double avgdl = avg_doc_length_locked();
  const double dl = doc_lengths_[doc->second];
  double score = 0.0;
  for (const auto& key : keys) {
    const auto it = postings_.find(key);
    if (it == postings_.end()) continue;
    const std::size_t i = find_posting(it->second, doc_id);
    if (i == it->second.docs.size()) continue;
    const double idf = bm25_idf(n, it->second.docs.size());
    score += key_weight(key) * bm25_term(params_, idf, it->second.tf(i), dl, avgdl);
  }
  return score;
}

std::vector<RetrievalResult> InvertedIndex::retrieve(const FeatureSet& claim, std::size_t k) const {
  if (k == 0) throw Error(ErrorCode::kValidation, "k must be at least 1", "k_docs");
  const auto keys = claim.keys();
  if (keys.empty()) throw Error(ErrorCode::kEmptyQuery, "claim has no features to match");

  std::shared_lock lock(mutex_);
  const std::size_t n = doc_ids_.size();
  if (n == 0) return {};
  const double avgdl = avg_doc_length_locked();

  std::vector<const PostingList*> lists;
  std::vector<double> weights;
  for (const auto& key : keys) {
    const auto it = postings_.find(key);
    lists.push_back(it == postings_.end() ? nullptr : &it->second);
    weights.push_back(key_weight(key));
  }

  std::vector<double> scores(n, 0.0);
  std::vector<std::uint8_t> seen(n, 0);
  std::vector<std::uint32_t> touched;
  for (std::size_t q = 0; q < lists.size(); ++q) {
    const PostingList* list = lists[q];
    if (list == nullptr) continue;
    const double idf = bm25_idf(n, list->docs.size());
    for (std::size_t i = 0; i < list->docs.size(); ++i) {
      const std::uint32_t d = list->docs[i];
      scores[d] += weights[q] * bm25_term(params_, idf, list->tf(i), doc_lengths_[d], avgdl);
      if (!seen[d]) {
        seen[d] = 1;
        touched.push_back(d);
      }
    }
  }

  auto better = [&](std::uint32_t a, std::uint32_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return doc_ids_[a] < doc_ids_[b];
  };
  const std::size_t take = std::min(k, touched.size());
  if (take < touched.size()) {
    std::nth_element(touched.begin(), touched.begin() + static_cast<std::ptrdiff_t>(take), touched.end(),
                     better);
    touched.resize(take);
  }
  std::sort(touched.begin(), touched.end(), better);

  std::vector<RetrievalResult> results;
  results.reserve(take);
  for (std::uint32_t d : touched) {
    RetrievalResult r;
    r.doc_id = doc_ids_[d];
    r.bm25_score = scores[d];
    for (std::size_t q = 0; q < lists.size(); ++q) {
      if (lists[q] != nullptr && find_posting(*lists[q], r.doc_id) < lists[q]->docs.size()) {
        r.matched_features.push_back(keys[q]);
      }
    }
    results.push_back(std::move(r));
  }
  return results;
}

std::vector<std::vector<std::uint32_t>> InvertedIndex::match_positions(
    const std::vector<std::string>& keys, const std::vector<std::string>& doc_ids) const {
  std::vector<std::vector<std::uint32_t>> out(doc_ids.size());
  std::shared_lock lock(mutex_);
  for (const auto& key : keys) {
    const auto it = postings_.find(key);
    if (it == postings_.end()) continue;
    const PostingList& list = it->second;
    for (std::size_t d = 0; d < doc_ids.size(); ++d) {
      const std::size_t i = find_posting(list, doc_ids[d]);
      if (i == list.docs.size()) continue;
      out[d].insert(out[d].end(), list.positions.begin() + list.offsets[i],
                    list.positions.begin() + list.offsets[i + 1]);
    }
  }
  for (auto& positions : out) {
    std::sort(positions.begin(), positions.end());
    positions.erase(std::unique(positions.begin(), positions.end()), positions.end());
  }
  return out;
}

std::size_t InvertedIndex::doc_count() const {
  std::shared_lock lock(mutex_);
  return doc_ids_.size();
}

double InvertedIndex::avg_doc_length() const {
  std::shared_lock lock(mutex_);
  return avg_doc_length_locked();
}

std::size_t InvertedIndex::document_frequency(std::string_view key) const {
  std::shared_lock lock(mutex_);
  const auto it = postings_.find(std::string(key));
  return it == postings_.end() ? 0 : it->second.docs.size();
}

bool InvertedIndex::contains(std::string_view doc_id) const {
  std::shared_lock lock(mutex_);
  return doc_numbers_.count(std::string(doc_id)) > 0;
}

std::uint64_t InvertedIndex::generation() const {
  std::shared_lock lock(mutex_);
  return generation_;
}

std::unordered_map<std::string, std::size_t> InvertedIndex::word_document_frequencies() const {
  std::shared_lock lock(mutex_);
  std::unordered_map<std::string, std::size_t> out;
  for (const auto& [key, list] : postings_) {
    if (feature_key_kind(key) == FeatureKind::kWord) {
      out.emplace(std::string(feature_key_text(key)), list.docs.size());
    }
  }
  return out;
}

IndexStatistics InvertedIndex::statistics() const {
  std::shared_lock lock(mutex_);
  IndexStatistics stats;
  stats.doc_count = doc_ids_.size();
  stats.avg_doc_length = avg_doc_length_locked();
  for (std::size_t d = 0; d < doc_ids_.size(); ++d) stats.doc_lengths[doc_ids_[d]] = doc_lengths_[d];
  for (const auto& [key, list] : postings_) {
    auto& out = stats.postings[key];
    for (std::size_t i = 0; i < list.docs.size(); ++i) {
      PostingView p;
      p.doc_id = doc_ids_[list.docs[i]];
      p.term_frequency = list.tf(i);
      p.positions.assign(list.positions.begin() + list.offsets[i],
                         list.positions.begin() + list.offsets[i + 1]);
      out.push_back(std::move(p));
    }
  }
  return stats;
}

// ---------------------------------------------------------------------------
// Snapshot format (little-endian):
//   "CLMDIDX\0" u32 version
//   f64 k1, f64 b, f64 entity_weight
//   u64 doc_count { str doc_id, u32 length }*
//   u64 key_count { str key, u64 n, u32 docs[n], u32 offsets[n+1], u64 m, u32 positions[m] }*
// Strings are u32 length + bytes. Keys are written in sorted order.

namespace {

constexpr char kMagic[8] = {'C', 'L', 'M', 'D', 'I', 'D', 'X', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

static_assert(std::endian::native == std::endian::little, "snapshot format assumes little-endian");

template <typename T>
void write_pod(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

void write_str(std::ostream& out, std::string_view s) {
  write_pod(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void write_u32s(std::ostream& out, const std::vector<std::uint32_t>& v) {
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * 4));
}

template <typename T>
T read_pod(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof value)) {
    throw Error(ErrorCode::kFormat, "index snapshot is truncated");
  }
  return value;
}

std::string read_str(std::istream& in) {
  const auto n = read_pod<std::uint32_t>(in);
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), n)) throw Error(ErrorCode::kFormat, "index snapshot is truncated");
  return s;
}

std::vector<std::uint32_t> read_u32s(std::istream& in, std::uint64_t n) {
  std::vector<std::uint32_t> v(n);
  if (n > 0 && !in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * 4))) {
    throw Error(ErrorCode::kFormat, "index snapshot is truncated");
  }
  return v;
}

}  // namespace

void InvertedIndex::save(std::ostream& out) const {
  std::shared_lock lock(mutex_);
  out.write(kMagic, sizeof kMagic);
  write_pod(out, kFormatVersion);
  write_pod(out, params_.k1);
  write_pod(out, params_.b);
  write_pod(out, params_.entity_weight);
  write_pod(out, static_cast<std::uint64_t>(doc_ids_.size()));
  for (std::size_t d = 0; d < doc_ids_.size(); ++d) {
    write_str(out, doc_ids_[d]);
    write_pod(out, doc_lengths_[d]);
  }
  std::vector<const std::string*> keys;
  keys.reserve(postings_.size());
  for (const auto& [key, list] : postings_) keys.push_back(&key);
  std::sort(keys.begin(), keys.end(), [](const auto* a, const auto* b) { return *a < *b; });
  write_pod(out, static_cast<std::uint64_t>(keys.size()));
  for (const std::string* key : keys) {
    const PostingList& list = postings_.at(*key);
    write_str(out, *key);
    write_pod(out, static_cast<std::uint64_t>(list.docs.size()));
    write_u32s(out, list.docs);
    write_u32s(out, list.offsets);
    write_pod(out, static_cast<std::uint64_t>(list.positions.size()));
    write_u32s(out, list.positions);
  }
  if (!out) throw Error(ErrorCode::kFormat, "failed writing index snapshot");
}

std::unique_ptr<InvertedIndex> InvertedIndex::load(std::istream& in) {
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw Error(ErrorCode::kFormat, "not an index snapshot");
  }
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kFormatVersion) {
    throw Error(ErrorCode::kFormat, "unsupported index snapshot version " + std::to_string(version));
  }
  Bm25Params params;
  params.k1 = read_pod<double>(in);
  params.b = read_pod<double>(in);
  params.entity_weight = read_pod<double>(in);
  auto index = std::make_unique<InvertedIndex>(params);

  const auto docs = read_pod<std::uint64_t>(in);
  for (std::uint64_t d = 0; d < docs; ++d) {
    auto id = read_str(in);
    const auto length = read_pod<std::uint32_t>(in);
    index->doc_numbers_.emplace(id, static_cast<std::uint32_t>(d));
    index->doc_ids_.push_back(std::move(id));
    index->doc_lengths_.push_back(length);
    index->total_length_ += length;
  }
  if (index->doc_numbers_.size() != index->doc_ids_.size()) {
    throw Error(ErrorCode::kFormat, "index snapshot has duplicate doc ids");
  }
  const auto keys = read_pod<std::uint64_t>(in);
  for (std::uint64_t k = 0; k < keys; ++k) {
    auto key = read_str(in);
    PostingList list;
    const auto n = read_pod<std::uint64_t>(in);
    list.docs = read_u32s(in, n);
    list.offsets = read_u32s(in, n + 1);
    const auto m = read_pod<std::uint64_t>(in);
    list.positions = read_u32s(in, m);
    if (list.offsets.back() != m) throw Error(ErrorCode::kFormat, "index snapshot offsets corrupt");
    for (std::uint32_t d : list.docs) {
      if (d >= docs) throw Error(ErrorCode::kFormat, "index snapshot posting out of range");
    }
    index->postings_.emplace(std::move(key), std::move(list));
  }
  index->generation_ = docs;
  return index;
}

}  // namespace claimdesk
