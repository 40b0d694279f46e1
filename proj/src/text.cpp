#include "claimdesk/text.hpp"

#include <fstream>
#include <sstream>

#include "claimdesk/error.hpp"
#include "claimdesk/resources.hpp"

namespace claimdesk {

namespace {

enum class CharClass { kSpace, kLetter, kDigit, kPunct };

struct CodePoint {
  char32_t value;
  std::uint32_t length;
};

// Invalid sequences decode byte-by-byte as U+FFFD-like letters; the text is
// expected to be valid UTF-8.
CodePoint decode(std::string_view text, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(text[i]);
  if (b0 < 0x80) return {b0, 1};
  auto cont = [&](std::size_t k) {
    return i + k < text.size() && (static_cast<unsigned char>(text[i + k]) & 0xC0) == 0x80;
  };
  auto bits = [&](std::size_t k) { return static_cast<char32_t>(text[i + k] & 0x3F); };
  if ((b0 & 0xE0) == 0xC0 && cont(1)) return {((b0 & 0x1Fu) << 6) | bits(1), 2};
  if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2))
    return {((b0 & 0x0Fu) << 12) | (bits(1) << 6) | bits(2), 3};
  if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3))
    return {((b0 & 0x07u) << 18) | (bits(1) << 12) | (bits(2) << 6) | bits(3), 4};
  return {0xFFFD, 1};
}

CharClass classify(char32_t c) {
  if (c < 0x80) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      return CharClass::kSpace;
    }
    if (c >= '0' && c <= '9') return CharClass::kDigit;
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) return CharClass::kLetter;
    return CharClass::kPunct;
  }
  if (c == 0x85 || c == 0xA0 || c == 0x1680 || (c >= 0x2000 && c <= 0x200B) || c == 0x2028 ||
      c == 0x2029 || c == 0x202F || c == 0x205F || c == 0x3000) {
    return CharClass::kSpace;
  }
  // Latin-1 symbols, general punctuation, CJK punctuation, fullwidth forms.
  if ((c >= 0xA1 && c <= 0xBF) || c == 0xD7 || c == 0xF7 || (c >= 0x2010 && c <= 0x206F) ||
      (c >= 0x20A0 && c <= 0x20CF) || (c >= 0x3001 && c <= 0x303F) ||
      (c >= 0xFF01 && c <= 0xFF0F)) {
    return CharClass::kPunct;
  }
  return CharClass::kLetter;
}

bool is_apostrophe(char32_t c) { return c == '\'' || c == 0x2019; }

bool is_word_char(CharClass cls) { return cls == CharClass::kLetter || cls == CharClass::kDigit; }

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();

  auto push = [&](std::size_t begin, std::size_t end, TokenKind kind) {
    Token t;
    t.begin = static_cast<std::uint32_t>(begin);
    t.end = static_cast<std::uint32_t>(end);
    t.position = static_cast<std::uint32_t>(tokens.size());
    t.kind = kind;
    t.content = kind != TokenKind::kPunct;
    tokens.push_back(t);
  };

  while (i < n) {
    const CodePoint cp = decode(text, i);
    const CharClass cls = classify(cp.value);
    if (cls == CharClass::kSpace) {
      i += cp.length;
      continue;
    }
    if (cls == CharClass::kPunct) {
      push(i, i + cp.length, TokenKind::kPunct);
      i += cp.length;
      continue;
    }

    const std::size_t begin = i;
    bool has_letter = cls == CharClass::kLetter;
    CharClass prev = cls;
    i += cp.length;
    while (i < n) {
      const CodePoint next = decode(text, i);
      const CharClass next_cls = classify(next.value);
      if (is_word_char(next_cls)) {
        has_letter = has_letter || next_cls == CharClass::kLetter;
        prev = next_cls;
        i += next.length;
        continue;
      }
      if (i + next.length < n) {
        const CodePoint after = decode(text, i + next.length);
        const CharClass after_cls = classify(after.value);
        const bool joins_letters = is_apostrophe(next.value) && prev == CharClass::kLetter &&
                                   after_cls == CharClass::kLetter;
        const bool joins_digits = (next.value == '.' || next.value == ',') &&
                                  prev == CharClass::kDigit && after_cls == CharClass::kDigit;
        if (joins_letters || joins_digits) {
          i += next.length + after.length;
          prev = after_cls;
          has_letter = has_letter || after_cls == CharClass::kLetter;
          continue;
        }
      }
      break;
    }
    push(begin, i, has_letter ? TokenKind::kWord : TokenKind::kNumber);
  }
  return tokens;
}

std::string fold_case(std::string_view surface) {
  std::string out;
  out.reserve(surface.size());
  std::size_t i = 0;
  while (i < surface.size()) {
    const auto b = static_cast<unsigned char>(surface[i]);
    if (b < 0x80) {
      out.push_back((b >= 'A' && b <= 'Z') ? static_cast<char>(b + 32) : static_cast<char>(b));
      ++i;
      continue;
    }
    const CodePoint cp = decode(surface, i);
    if (cp.length == 2 && cp.value >= 0xC0 && cp.value <= 0xDE && cp.value != 0xD7) {
      const char32_t lower = cp.value + 0x20;
      out.push_back(static_cast<char>(0xC0 | (lower >> 6)));
      out.push_back(static_cast<char>(0x80 | (lower & 0x3F)));
    } else if (cp.value == 0x2019) {
      out.push_back('\'');
    } else {
      out.append(surface.substr(i, cp.length));
    }
    i += cp.length;
  }
  return out;
}

bool starts_uppercase(std::string_view surface) {
  if (surface.empty()) return false;
  const CodePoint cp = decode(surface, 0);
  return (cp.value >= 'A' && cp.value <= 'Z') ||
         (cp.value >= 0xC0 && cp.value <= 0xDE && cp.value != 0xD7);
}

namespace {

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

bool has_vowel(std::string_view s) {
  for (char c : s) {
    if (is_vowel(c) || c == 'y') return true;
  }
  return false;
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void undouble(std::string& s) {
  const std::size_t n = s.size();
  if (n >= 2 && s[n - 1] == s[n - 2] && !is_vowel(s[n - 1]) && s[n - 1] != 'l' &&
      s[n - 1] != 's' && s[n - 1] != 'z') {
    s.pop_back();
  }
}

}  // namespace

std::string stem(std::string_view folded) {
  std::string s(folded);
  if (s.size() <= 3) return s;
  for (char c : s) {
    if ((c >= '0' && c <= '9') || static_cast<unsigned char>(c) >= 0x80) return s;
  }

  if (ends_with(s, "ies") && s.size() > 4) {
    s.replace(s.size() - 3, 3, "y");
  } else if (ends_with(s, "sses")) {
    s.resize(s.size() - 2);
  } else if (ends_with(s, "ss") || ends_with(s, "us") || ends_with(s, "is") ||
             ends_with(s, "'s")) {
    if (ends_with(s, "'s")) s.resize(s.size() - 2);
  } else if (ends_with(s, "s")) {
    s.pop_back();
  }

  if (ends_with(s, "ing") && s.size() >= 6 && has_vowel(std::string_view(s).substr(0, s.size() - 3))) {
    s.resize(s.size() - 3);
    undouble(s);
  } else if (ends_with(s, "ed") && s.size() >= 5 &&
             has_vowel(std::string_view(s).substr(0, s.size() - 2))) {
    s.resize(s.size() - 2);
    undouble(s);
  }

  if (s.size() > 4 && s.back() == 'e') s.pop_back();
  return s;
}

Lexicon Lexicon::defaults() {
  return Lexicon(parse_list(resources::default_stopwords()),
                 parse_list(resources::default_abbreviations()),
                 parse_list(resources::default_negation_cues()));
}

std::unordered_set<std::string> Lexicon::parse_list(std::string_view text) {
  std::unordered_set<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
      line.remove_suffix(1);
    }
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
    if (!line.empty() && line.front() != '#') out.insert(fold_case(line));
    start = end + 1;
  }
  return out;
}

std::unordered_set<std::string> Lexicon::read_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot read word list " + path.string(), path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_list(buffer.str());
}

Lexicon::Lexicon(std::unordered_set<std::string> stopwords,
                 std::unordered_set<std::string> abbreviations,
                 std::unordered_set<std::string> negation_cues)
    : stopwords_(std::move(stopwords)),
      abbreviations_(std::move(abbreviations)),
      negation_cues_(std::move(negation_cues)) {}

bool Lexicon::is_stopword(std::string_view folded) const {
  return stopwords_.find(std::string(folded)) != stopwords_.end();
}

bool Lexicon::is_abbreviation(std::string_view folded) const {
  return abbreviations_.find(std::string(folded)) != abbreviations_.end();
}

bool Lexicon::is_negation_cue(std::string_view folded) const {
  return negation_cues_.find(std::string(folded)) != negation_cues_.end();
}

void Lexicon::mark_content(std::string_view text, std::span<Token> tokens) const {
  for (Token& t : tokens) {
    t.content = !t.is_punct() && !is_stopword(fold_case(t.surface(text)));
  }
}

namespace {

bool is_terminal(std::string_view s) { return s == "." || s == "!" || s == "?"; }

bool is_closer(std::string_view s) {
  return s == "\"" || s == "'" || s == ")" || s == "]" || s == "”" || s == "’";
}

bool is_opener(std::string_view s) {
  return s == "\"" || s == "'" || s == "(" || s == "[" || s == "“" || s == "‘";
}

}  // namespace

std::vector<TokenSpan> segment_sentences(std::string_view text, std::span<const Token> tokens,
                                         const Lexicon& lexicon) {
  std::vector<TokenSpan> spans;
  const auto n = static_cast<std::uint32_t>(tokens.size());
  std::uint32_t start = 0;

  auto surface = [&](std::uint32_t i) { return tokens[i].surface(text); };
  auto glued = [&](std::uint32_t a, std::uint32_t b) { return tokens[a].end == tokens[b].begin; };

  for (std::uint32_t i = 0; i < n; ++i) {
    if (!tokens[i].is_punct() || !is_terminal(surface(i))) continue;

    if (surface(i) == "." && i > 0 && glued(i - 1, i) && !tokens[i - 1].is_punct()) {
      const std::string prev = fold_case(surface(i - 1));
      if (lexicon.is_abbreviation(prev)) continue;
      // Dotted initialism such as U.S. or e.g.
      const bool single_letter = tokens[i - 1].end - tokens[i - 1].begin == 1;
      if (single_letter && i >= 2 && glued(i - 2, i - 1) && surface(i - 2) == ".") continue;
      if (single_letter && i + 2 < n && glued(i, i + 1) && tokens[i + 1].end - tokens[i + 1].begin == 1 &&
          glued(i + 1, i + 2) && surface(i + 2) == ".") {
        continue;
      }
    }

    std::uint32_t last = i;
    while (last + 1 < n && glued(last, last + 1) && tokens[last + 1].is_punct() &&
           (is_terminal(surface(last + 1)) || is_closer(surface(last + 1)))) {
      ++last;
    }
    const std::uint32_t next = last + 1;
    if (next >= n) break;
    if (glued(last, next)) {
      i = last;
      continue;
    }
    bool boundary = starts_uppercase(surface(next));
    if (!boundary && tokens[next].is_punct() && is_opener(surface(next)) && next + 1 < n) {
      boundary = starts_uppercase(surface(next + 1));
    }
    if (boundary) {
      spans.push_back({start, next});
      start = next;
    }
    i = last;
  }
  if (start < n) spans.push_back({start, n});
  return spans;
}

}  // namespace claimdesk
