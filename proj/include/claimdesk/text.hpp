#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace claimdesk {

enum class TokenKind : std::uint8_t { kWord, kNumber, kPunct };

/// A token is a byte range into the text it was produced from. Surface and
/// case-folded key are derived on demand so long documents stay compact.
struct Token {
  std::uint32_t begin = 0;
  std::uint32_t end = 0;
  std::uint32_t position = 0;
  TokenKind kind = TokenKind::kWord;
  /// Cleared for punctuation and stop words; only content tokens carry features.
  bool content = true;

  bool is_punct() const { return kind == TokenKind::kPunct; }
  std::string_view surface(std::string_view text) const {
    return text.substr(begin, end - begin);
  }

  bool operator==(const Token&) const = default;
};

/// Splits on whitespace and punctuation boundaries. Every punctuation code
/// point becomes its own token; apostrophes between letters and `.`/`,`
/// between digits stay inside the word. Positions are 0-based and consecutive.
std::vector<Token> tokenize(std::string_view text);

/// Lowercases ASCII and Latin-1 letters and maps typographic apostrophes to
/// `'`. Everything else passes through unchanged.
std::string fold_case(std::string_view surface);

/// True when the surface starts with an uppercase letter.
bool starts_uppercase(std::string_view surface);

/// Suffix-stripping lemmatizer for plural and verb inflections. Input is a
/// case-folded word; tokens containing digits are returned unchanged.
std::string stem(std::string_view folded);

/// Word lists used by analysis: stop words, sentence-splitter abbreviations
/// and negation cues. Read-only after construction.
class Lexicon {
 public:
  /// Compiled-in lists from data/.
  static Lexicon defaults();

  /// Parses a one-entry-per-line list; `#` starts a comment line.
  static std::unordered_set<std::string> parse_list(std::string_view text);
  static std::unordered_set<std::string> read_list(const std::filesystem::path& path);

  Lexicon(std::unordered_set<std::string> stopwords,
          std::unordered_set<std::string> abbreviations,
          std::unordered_set<std::string> negation_cues);

  bool is_stopword(std::string_view folded) const;
  bool is_abbreviation(std::string_view folded) const;
  bool is_negation_cue(std::string_view folded) const;

  /// Marks punctuation and stop words as non-content.
  void mark_content(std::string_view text, std::span<Token> tokens) const;

 private:
  std::unordered_set<std::string> stopwords_;
  std::unordered_set<std::string> abbreviations_;
  std::unordered_set<std::string> negation_cues_;
};

/// Half-open range of token indices.
struct TokenSpan {
  std::uint32_t begin = 0;
  std::uint32_t end = 0;

  std::uint32_t size() const { return end - begin; }
  bool operator==(const TokenSpan&) const = default;
};

/// Splits after `.`, `!` or `?` (plus any closing quotes/brackets glued to
/// it) when whitespace follows and the next token, or the token after an
/// opening quote, starts uppercase. A period after an abbreviation or a
/// dotted initialism (`U.S.`) never splits. Spans are disjoint and cover all
/// tokens in order.
std::vector<TokenSpan> segment_sentences(std::string_view text, std::span<const Token> tokens,
                                         const Lexicon& lexicon);

}  // namespace claimdesk
