#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace punk {

// Half-open byte range [start, end) into a UTF-8 string.
struct CharSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - start; }
  bool contains(std::size_t pos) const { return pos >= start && pos < end; }
  bool overlaps(const CharSpan& other) const {
    return start < other.end && other.start < end;
  }
  friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

struct Sentence {
  int index = 0;
  std::string text;
  CharSpan span;  // offsets into the owning problem text

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

// Placeholder that replaces code blocks when stripping markup.
inline constexpr std::string_view kCodeToken = "<code>";

// Math regions delimited by $...$, $$...$$, \(...\) or \[...\], delimiters
// included. Unterminated openers are treated as literal text.
std::vector<CharSpan> math_spans(std::string_view text);

// Decodes the HTML character references used in post bodies.
std::string decode_entities(std::string_view text);

// HTML-ish post body to plain text: tags dropped, entities decoded, code
// blocks collapsed to kCodeToken, whitespace outside math collapsed to single
// spaces. Math spans are kept byte-for-byte.
std::string strip_markup(std::string_view body);

// Rule-based segmentation. A sentence ends at a run of '.', '?' or '!'
// (plus closing quotes/brackets) followed by whitespace and an uppercase
// letter, or by the end of the text. Terminators inside math spans, inside
// decimal numbers and after dotted abbreviations ("e.g.", "i.e.", "cf.")
// never split. Throws ValidationError on empty or whitespace-only input.
std::vector<Sentence> segment_sentences(std::string_view text);

// Word tokens: runs of ASCII alphanumerics, '_' and non-ASCII bytes; every
// other visible character is a token on its own; kCodeToken stays whole.
std::vector<std::string> tokenize(std::string_view text);

std::string to_lower_ascii(std::string_view text);
std::string trim(std::string_view text);

}  // namespace punk
