#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace elicit::text {

using Tokens = std::vector<std::string>;

struct TokenSpan {
  std::string token;  // lowercased
  std::size_t begin = 0;  // byte offsets into the source text
  std::size_t end = 0;
};

/// Lowercased tokens split on whitespace and punctuation (ASCII plus the
/// common Unicode punctuation and space blocks). Never fails; invalid UTF-8
/// bytes are treated as separators.
Tokens tokenize(std::string_view text);
std::vector<TokenSpan> tokenize_with_offsets(std::string_view text);

/// Porter (1980) suffix stripping. Tokens that are not all ASCII letters are
/// returned unchanged.
std::string porter_stem(std::string_view word);

class Stoplist {
 public:
  Stoplist() = default;
  explicit Stoplist(std::unordered_set<std::string> words) : words_(std::move(words)) {}

  /// Standard English list shipped with the engine.
  static Stoplist english();
  /// UTF-8, one token per line, '#' starts a comment.
  static Stoplist from_file(const std::filesystem::path& path);
  static Stoplist parse(std::string_view contents);

  void merge(const Stoplist& other);
  bool contains(std::string_view token) const { return words_.count(std::string(token)) > 0; }
  std::size_t size() const { return words_.size(); }
  const std::unordered_set<std::string>& words() const { return words_; }

 private:
  std::unordered_set<std::string> words_;
};

bool is_numeric(std::string_view token);

/// Drops stopwords and numeric tokens, then stems the rest. Stemming is
/// iterated to a fixpoint and the stoplist re-checked afterwards, which makes
/// normalize idempotent.
Tokens normalize(std::span<const std::string> tokens, const Stoplist& stoplist);
/// Normalized form of one token, or empty when it is dropped.
std::string normalize_token(std::string_view token, const Stoplist& stoplist);

struct Sentence {
  std::size_t begin = 0;  // byte span in Document::raw_text
  std::size_t end = 0;
  Tokens tokens;          // normalized
};

struct Document {
  std::string id;
  std::string title;
  std::string raw_text;
  std::vector<Sentence> sentences;
};

/// Byte spans of sentences: a sentence ends at '.', '?' or '!' followed by
/// whitespace or end of text. Whitespace-only spans are skipped.
std::vector<std::pair<std::size_t, std::size_t>> split_sentences(std::string_view text);

Document make_document(std::string id, std::string title, std::string raw_text,
                       const Stoplist& stoplist);

/// Throws elicit::Error(parse) naming `what` when `bytes` is not valid UTF-8.
void require_utf8(std::string_view bytes, std::string_view what);
bool is_valid_utf8(std::string_view bytes);

}  // namespace elicit::text
