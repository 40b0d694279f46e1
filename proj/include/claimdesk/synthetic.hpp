#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "claimdesk/corpus.hpp"

namespace claimdesk {

/// Shape of a generated news corpus. Word frequencies follow a Zipf law
/// over pseudo-words; entity names come with a matching gazetteer.
struct SyntheticOptions {
  std::size_t documents = 1000;
  std::size_t vocabulary = 5000;
  double zipf_exponent = 1.0;
  std::size_t entities = 200;
  std::size_t min_sentences = 3;
  std::size_t max_sentences = 12;
  std::size_t min_sentence_words = 5;
  std::size_t max_sentence_words = 25;
  /// Share of sentences stretched past 500 tokens.
  double long_sentence_rate = 0.002;
  /// Share of sentences copied verbatim from an earlier document.
  double duplicate_rate = 0.02;
  /// Share of sentences mentioning an entity.
  double entity_rate = 0.3;
  std::uint64_t seed = 1;
};

struct SyntheticCorpus {
  std::vector<CorpusRecord> records;
  Gazetteer gazetteer;
  std::vector<std::string> vocabulary;  // most frequent first
  std::vector<std::string> entity_names;
  /// Every generated sentence, for drawing claims.
  std::vector<std::string> sentences;
};

SyntheticCorpus generate_corpus(const SyntheticOptions& options);

/// A claim built from words of a corpus sentence, sometimes mixed with
/// random vocabulary words and an entity.
std::string generate_claim(const SyntheticCorpus& corpus, std::mt19937_64& rng);

}  // namespace claimdesk
