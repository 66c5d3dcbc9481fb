#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "elicit/ngram.hpp"
#include "elicit/text.hpp"
#include "elicit/tone.hpp"

namespace elicit::extract {

enum class Mode { automatic, manual };
std::string_view to_string(Mode m);
/// "auto"/"automatic" and "manual".
std::optional<Mode> parse_mode(std::string_view s);

struct ExtractionConfig {
  int z = 5;            // terms kept (and highlighted per snippet)
  int m = 5;            // n-best paths pooled
  int snippet_len = 3;  // sentences per snippet
  Mode mode = Mode::automatic;

  /// Throws Error(invalid_argument) unless z, m, snippet_len >= 1.
  void validate() const;
  friend bool operator==(const ExtractionConfig&, const ExtractionConfig&) = default;
};

inline constexpr int kManualSnippets = 5;

struct RelevantTerm {
  std::string surface;  // a stem, or two stems separated by one space
  double cost = 0.0;
  int rank = 0;

  /// Stems of the term (one or two).
  text::Tokens stems() const;
  friend bool operator==(const RelevantTerm&, const RelevantTerm&) = default;
};

struct TermResult {
  std::vector<RelevantTerm> terms;
  /// The window shares no word with the repository.
  bool no_overlap = false;
};

/// Composes a chain over the window with the repository automaton and pools
/// the output words of the m cheapest paths. A word costs its arc plus any
/// backoff arcs taken just before it. A pair of adjacent words is also a
/// term when the second word was predicted from a non-empty history; its
/// cost is the sum of both. Keeps the z cheapest terms, ties by surface.
TermResult extract_relevant_terms(const lm::LmAutomaton& lm, std::span<const std::string> window,
                                  const ExtractionConfig& cfg);

struct Snippet {
  std::string doc_id;
  std::size_t doc_index = 0;  // position in the repository
  std::size_t start = 0;      // sentence span [start, end)
  std::size_t end = 0;
  std::string text;
  double score = 0.0;
  std::vector<std::string> matched;  // term surfaces, in term rank order

  /// "doc_id#start-end"
  std::string key() const;
};

/// Windows of snippet_len sentences with stride 1; a document shorter than
/// snippet_len yields one snippet.
std::vector<Snippet> segment_snippets(const text::Document& doc, std::size_t doc_index,
                                      const ExtractionConfig& cfg);

/// (sum over terms of occurrences * exp(-cost)) / snippet token count.
/// Fills snippet.matched (at most z surfaces). Zero-token snippets score 0.
double score_snippet(Snippet& snippet, const text::Document& doc,
                     std::span<const RelevantTerm> terms, int z);

/// Scores every snippet of the repository and returns the ones with a
/// positive score, best first; ties by doc_id, then start.
std::vector<Snippet> score_snippets(std::span<const text::Document> repository,
                                    std::span<const RelevantTerm> terms,
                                    const ExtractionConfig& cfg);
std::vector<Snippet> score_snippets_serial(std::span<const text::Document> repository,
                                           std::span<const RelevantTerm> terms,
                                           const ExtractionConfig& cfg);

/// Manual mode: the top five. Automatic mode: one or three, from the tone
/// policy.
std::vector<Snippet> select_snippets(std::span<const Snippet> scored,
                                     const tone::ToneProfile& profile,
                                     const ExtractionConfig& cfg);

struct Highlight {
  std::size_t begin = 0;  // byte offsets into the highlighted text
  std::size_t end = 0;
  std::string term;
};

/// Spans of `raw` whose normalized tokens match a term, so inflected forms
/// are found. A two-word term matches consecutive kept tokens and spans from
/// the first to the second.
std::vector<Highlight> find_highlights(std::string_view raw, std::span<const std::string> terms,
                                       const text::Stoplist& stoplist);

}  // namespace elicit::extract
