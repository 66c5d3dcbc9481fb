#include <fstream>
#include <sstream>

#include "elicit/error.hpp"
#include "elicit/text.hpp"

namespace elicit::text {

namespace {

// Decodes one code point at `i`; returns the byte length, or 0 when the
// sequence is malformed.
std::size_t decode(std::string_view s, std::size_t i, char32_t& cp) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    cp = b0;
    return 1;
  }
  std::size_t len = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    return 0;
  }
  if (i + len > s.size()) return 0;
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) return 0;
    cp = (cp << 6) | (b & 0x3F);
  }
  // Overlong forms, surrogates and out-of-range values.
  if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
      cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    return 0;
  }
  return len;
}

bool is_separator(char32_t cp) {
  if (cp < 0x80) {
    const bool alnum = (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') ||
                       (cp >= 'A' && cp <= 'Z');
    return !alnum;
  }
  if (cp <= 0xBF) return cp != 0xAA && cp != 0xB5 && cp != 0xBA;  // Latin-1 punctuation
  if (cp == 0xD7 || cp == 0xF7) return true;
  if (cp >= 0x2000 && cp <= 0x206F) return true;  // general punctuation, spaces
  if (cp >= 0x2190 && cp <= 0x2BFF) return true;  // arrows, math, technical, box drawing
  if (cp >= 0x2E00 && cp <= 0x2E7F) return true;
  if (cp >= 0x3000 && cp <= 0x303F) return true;
  if (cp >= 0xFE30 && cp <= 0xFE4F) return true;
  if ((cp >= 0xFF01 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) ||
      (cp >= 0xFF3B && cp <= 0xFF40) || (cp >= 0xFF5B && cp <= 0xFF65)) {
    return true;
  }
  return cp == 0xFEFF;
}

void append_lower(std::string& out, char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') cp += 0x20;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) cp += 0x20;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

std::vector<TokenSpan> tokenize_with_offsets(std::string_view text) {
  std::vector<TokenSpan> out;
  TokenSpan cur;
  bool in_token = false;
  std::size_t i = 0;
  while (i < text.size()) {
    char32_t cp = 0;
    std::size_t len = decode(text, i, cp);
    const bool sep = len == 0 || is_separator(cp);
    if (len == 0) len = 1;
    if (sep) {
      if (in_token) {
        cur.end = i;
        out.push_back(std::move(cur));
        cur = TokenSpan{};
        in_token = false;
      }
    } else {
      if (!in_token) {
        cur.begin = i;
        in_token = true;
      }
      append_lower(cur.token, cp);
    }
    i += len;
  }
  if (in_token) {
    cur.end = text.size();
    out.push_back(std::move(cur));
  }
  return out;
}

Tokens tokenize(std::string_view text) {
  Tokens out;
  for (auto& span : tokenize_with_offsets(text)) out.push_back(std::move(span.token));
  return out;
}

Stoplist Stoplist::english() {
  static const std::unordered_set<std::string> kWords = {
#include "stopwords_en.inc"
  };
  return Stoplist(kWords);
}

Stoplist Stoplist::parse(std::string_view contents) {
  std::unordered_set<std::string> words;
  std::size_t pos = 0;
  while (pos <= contents.size()) {
    std::size_t eol = contents.find('\n', pos);
    if (eol == std::string_view::npos) eol = contents.size();
    std::string_view line = contents.substr(pos, eol - pos);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    for (auto& tok : tokenize(line)) words.insert(tok);
    pos = eol + 1;
  }
  return Stoplist(std::move(words));
}

Stoplist Stoplist::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot read stoplist " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string contents = buf.str();
  require_utf8(contents, path.string());
  return parse(contents);
}

void Stoplist::merge(const Stoplist& other) {
  words_.insert(other.words_.begin(), other.words_.end());
}

bool is_numeric(std::string_view token) {
  if (token.empty()) return false;
  for (char c : token) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

std::string normalize_token(std::string_view token, const Stoplist& stoplist) {
  if (token.empty() || is_numeric(token) || stoplist.contains(token)) return {};
  std::string stem(token);
  // Porter's algorithm is not idempotent (agree -> agre); iterate to a
  // fixpoint. Each pass either shortens the word or leaves it unchanged
  // except for same-length rewrites that cannot cycle.
  for (int pass = 0; pass < 8; ++pass) {
    std::string next = porter_stem(stem);
    if (next == stem) break;
    stem = std::move(next);
  }
  if (stem.empty() || stoplist.contains(stem) || is_numeric(stem)) return {};
  return stem;
}

Tokens normalize(std::span<const std::string> tokens, const Stoplist& stoplist) {
  Tokens out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    std::string n = normalize_token(t, stoplist);
    if (!n.empty()) out.push_back(std::move(n));
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> split_sentences(std::string_view text) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  auto push = [&](std::size_t b, std::size_t e) {
    while (b < e && is_ascii_space(text[b])) ++b;
    while (e > b && is_ascii_space(text[e - 1])) --e;
    if (b < e) out.emplace_back(b, e);
  };
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '?' && c != '!') continue;
    if (i + 1 == text.size() || is_ascii_space(text[i + 1])) {
      push(start, i + 1);
      start = i + 1;
    }
  }
  push(start, text.size());
  return out;
}

Document make_document(std::string id, std::string title, std::string raw_text,
                       const Stoplist& stoplist) {
  Document doc{std::move(id), std::move(title), std::move(raw_text), {}};
  for (auto [b, e] : split_sentences(doc.raw_text)) {
    const auto toks = tokenize(std::string_view(doc.raw_text).substr(b, e - b));
    doc.sentences.push_back(Sentence{b, e, normalize(toks, stoplist)});
  }
  return doc;
}

bool is_valid_utf8(std::string_view bytes) {
  std::size_t i = 0;
  while (i < bytes.size()) {
    char32_t cp = 0;
    const std::size_t len = decode(bytes, i, cp);
    if (len == 0) return false;
    i += len;
  }
  return true;
}

void require_utf8(std::string_view bytes, std::string_view what) {
  if (!is_valid_utf8(bytes)) {
    throw Error(ErrorCode::parse, "not valid UTF-8: " + std::string(what));
  }
}

}  // namespace elicit::text
