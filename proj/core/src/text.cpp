#include "punk/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "punk/error.hpp"

namespace punk {
namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)); }
bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_word_byte(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || std::isalnum(u) || c == '_';
}

constexpr std::array<std::string_view, 16> kAbbreviations = {
    "e.g", "i.e", "cf", "vs", "etc", "fig", "eq", "eqs", "dr",
    "mr", "mrs", "ms", "prof", "approx", "resp", "viz"};

// Index one past the closing delimiter, or npos when unterminated.
std::size_t find_close(std::string_view text, std::size_t from,
                       std::string_view close) {
  for (std::size_t i = from; i + close.size() <= text.size(); ++i) {
    if (text[i] == '\\' && close[0] != '\\') {
      ++i;  // skip escaped character
      continue;
    }
    if (text.compare(i, close.size(), close) == 0) return i + close.size();
  }
  return std::string_view::npos;
}

void append_entity_decoded(std::string& out, std::string_view text) {
  out += decode_entities(text);
}

bool is_block_tag(std::string_view name) {
  static constexpr std::array<std::string_view, 19> kBlock = {
      "p",  "br", "div", "li", "ul", "ol", "h1", "h2", "h3", "h4",
      "h5", "h6", "blockquote", "hr", "table", "tr", "td", "th", "dd"};
  return std::find(kBlock.begin(), kBlock.end(), name) != kBlock.end();
}

struct Tag {
  std::string name;  // lowercase, without '/'
  bool closing = false;
  std::size_t end = 0;  // one past '>'
};

// Parses a tag at text[pos] == '<'. Returns false when the '<' is literal.
bool parse_tag(std::string_view text, std::size_t pos, Tag& tag) {
  std::size_t i = pos + 1;
  if (i < text.size() && text[i] == '!') {
    std::size_t close = text.find('>', i);
    if (close == std::string_view::npos) return false;
    tag = {"!", false, close + 1};
    return true;
  }
  tag.closing = i < text.size() && text[i] == '/';
  if (tag.closing) ++i;
  std::size_t name_start = i;
  if (i >= text.size() || !is_alpha(text[i])) return false;
  while (i < text.size() && std::isalnum(static_cast<unsigned char>(text[i])))
    ++i;
  if (i < text.size() && !(is_space(text[i]) || text[i] == '/' || text[i] == '>'))
    return false;
  tag.name = to_lower_ascii(text.substr(name_start, i - name_start));
  char quote = 0;
  for (; i < text.size(); ++i) {
    char c = text[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '>') {
      tag.end = i + 1;
      return true;
    }
  }
  return false;
}

std::size_t skip_to_closing(std::string_view text, std::size_t from,
                            std::string_view name) {
  std::size_t i = from;
  while (true) {
    std::size_t lt = text.find('<', i);
    if (lt == std::string_view::npos) return text.size();
    Tag t;
    if (parse_tag(text, lt, t) && t.closing && t.name == name) return t.end;
    i = lt + 1;
  }
}

bool in_spans(const std::vector<CharSpan>& spans, std::size_t pos) {
  auto it = std::upper_bound(
      spans.begin(), spans.end(), pos,
      [](std::size_t p, const CharSpan& s) { return p < s.start; });
  return it != spans.begin() && std::prev(it)->contains(pos);
}

bool is_abbreviation(std::string_view text, std::size_t dot) {
  std::size_t start = dot;
  while (start > 0 && (is_alpha(text[start - 1]) || text[start - 1] == '.'))
    --start;
  std::string word = to_lower_ascii(text.substr(start, dot - start));
  if (word.empty()) return false;
  if (std::find(kAbbreviations.begin(), kAbbreviations.end(), word) !=
      kAbbreviations.end())
    return true;
  // Dotted chains of single letters: "u.s", "a.k.a".
  if (word.size() >= 3) {
    bool chain = true;
    for (std::size_t i = 0; i < word.size(); ++i) {
      bool want_letter = i % 2 == 0;
      if (want_letter ? !is_alpha(word[i]) : word[i] != '.') chain = false;
    }
    if (chain && word.size() % 2 == 1) return true;
  }
  return false;
}

}  // namespace

std::string to_lower_ascii(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string trim(std::string_view text) {
  std::size_t b = 0, e = text.size();
  while (b < e && is_space(text[b])) ++b;
  while (e > b && is_space(text[e - 1])) --e;
  return std::string(text.substr(b, e - b));
}

std::vector<CharSpan> math_spans(std::string_view text) {
  std::vector<CharSpan> spans;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    std::size_t close = std::string_view::npos;
    if (c == '\\' && i + 1 < text.size()) {
      char n = text[i + 1];
      if (n == '(') close = find_close(text, i + 2, "\\)");
      else if (n == '[') close = find_close(text, i + 2, "\\]");
      if (close == std::string_view::npos) {
        i += 2;  // escaped char such as \$
        continue;
      }
    } else if (c == '$') {
      if (i + 1 < text.size() && text[i + 1] == '$')
        close = find_close(text, i + 2, "$$");
      else
        close = find_close(text, i + 1, "$");
    }
    if (close != std::string_view::npos) {
      spans.push_back({i, close});
      i = close;
    } else {
      ++i;
    }
  }
  return spans;
}

std::string decode_entities(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '&') {
      out += text[i];
      continue;
    }
    std::size_t semi = text.find(';', i);
    if (semi == std::string_view::npos || semi - i > 10) {
      out += '&';
      continue;
    }
    std::string_view ent = text.substr(i + 1, semi - i - 1);
    long code = -1;
    if (ent == "lt") code = '<';
    else if (ent == "gt") code = '>';
    else if (ent == "amp") code = '&';
    else if (ent == "quot") code = '"';
    else if (ent == "apos") code = '\'';
    else if (ent == "nbsp") code = ' ';
    else if (ent.size() > 1 && ent[0] == '#') {
      try {
        code = (ent[1] == 'x' || ent[1] == 'X')
                   ? std::stol(std::string(ent.substr(2)), nullptr, 16)
                   : std::stol(std::string(ent.substr(1)));
      } catch (const std::exception&) {
        code = -1;
      }
    }
    if (code < 0 || code > 0x10FFFF) {
      out += '&';
      continue;
    }
    // UTF-8 encode.
    auto cp = static_cast<unsigned long>(code);
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
    i = semi;
  }
  return out;
}

std::string strip_markup(std::string_view body) {
  std::string plain;
  std::size_t i = 0;
  while (i < body.size()) {
    std::size_t lt = body.find('<', i);
    if (lt == std::string_view::npos) {
      append_entity_decoded(plain, body.substr(i));
      break;
    }
    Tag tag;
    if (!parse_tag(body, lt, tag)) {
      append_entity_decoded(plain, body.substr(i, lt + 1 - i));
      i = lt + 1;
      continue;
    }
    append_entity_decoded(plain, body.substr(i, lt - i));
    i = tag.end;
    if (!tag.closing && (tag.name == "pre" || tag.name == "code")) {
      i = skip_to_closing(body, i, tag.name);
      plain += ' ';
      plain += kCodeToken;
      plain += ' ';
    } else if (is_block_tag(tag.name)) {
      plain += '\n';
    }
  }

  // Collapse whitespace outside math.
  const auto math = math_spans(plain);
  std::string out;
  out.reserve(plain.size());
  std::size_t m = 0;
  bool pending_space = false;
  for (std::size_t p = 0; p < plain.size();) {
    while (m < math.size() && math[m].end <= p) ++m;
    if (m < math.size() && math[m].start == p) {
      if (pending_space && !out.empty()) out += ' ';
      pending_space = false;
      out.append(plain, p, math[m].size());
      p = math[m].end;
      continue;
    }
    if (is_space(plain[p])) {
      pending_space = true;
    } else {
      if (pending_space && !out.empty()) out += ' ';
      pending_space = false;
      out += plain[p];
    }
    ++p;
  }
  return out;
}

std::vector<Sentence> segment_sentences(std::string_view text) {
  if (trim(text).empty()) {
    throw ValidationError("cannot segment empty text");
  }
  const auto math = math_spans(text);
  std::vector<CharSpan> raw;
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if ((c != '.' && c != '?' && c != '!') || in_spans(math, i)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && (text[j] == '.' || text[j] == '?' ||
                               text[j] == '!') &&
           !in_spans(math, j))
      ++j;
    std::size_t end = j;
    while (end < text.size() && (text[end] == '"' || text[end] == '\'' ||
                                 text[end] == ')' || text[end] == ']'))
      ++end;
    std::size_t k = end;
    while (k < text.size() && is_space(text[k])) ++k;
    bool boundary = false;
    if (k == text.size()) {
      boundary = true;
    } else if (k > end && is_upper(text[k])) {
      boundary = !(j - i == 1 && c == '.' && is_abbreviation(text, i));
    }
    if (boundary) {
      raw.push_back({start, end});
      start = end;
    }
    i = end > i ? end : i + 1;
  }
  if (start < text.size()) raw.push_back({start, text.size()});

  std::vector<Sentence> out;
  for (CharSpan s : raw) {
    while (s.start < s.end && is_space(text[s.start])) ++s.start;
    while (s.end > s.start && is_space(text[s.end - 1])) --s.end;
    if (s.start == s.end) continue;
    Sentence sent;
    sent.index = static_cast<int>(out.size());
    sent.span = s;
    sent.text = std::string(text.substr(s.start, s.size()));
    out.push_back(std::move(sent));
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (is_space(c)) {
      ++i;
    } else if (text.compare(i, kCodeToken.size(), kCodeToken) == 0) {
      tokens.emplace_back(kCodeToken);
      i += kCodeToken.size();
    } else if (is_word_byte(c)) {
      std::size_t j = i;
      while (j < text.size() && is_word_byte(text[j])) ++j;
      tokens.emplace_back(text.substr(i, j - i));
      i = j;
    } else {
      tokens.emplace_back(1, c);
      ++i;
    }
  }
  return tokens;
}

}  // namespace punk
