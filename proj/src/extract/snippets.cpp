#include <algorithm>
#include <cmath>

#include "elicit/error.hpp"
#include "elicit/extraction.hpp"

namespace elicit::extract {

std::string Snippet::key() const {
  return doc_id + "#" + std::to_string(start) + "-" + std::to_string(end);
}

std::vector<Snippet> segment_snippets(const text::Document& doc, std::size_t doc_index,
                                      const ExtractionConfig& cfg) {
  cfg.validate();
  std::vector<Snippet> out;
  const std::size_t n = doc.sentences.size();
  if (n == 0) return out;
  const auto len = static_cast<std::size_t>(cfg.snippet_len);
  const std::size_t last = n > len ? n - len : 0;
  for (std::size_t i = 0; i <= last; ++i) {
    Snippet s;
    s.doc_id = doc.id;
    s.doc_index = doc_index;
    s.start = i;
    s.end = std::min(i + len, n);
    const auto begin = doc.sentences[s.start].begin;
    const auto end = doc.sentences[s.end - 1].end;
    s.text = doc.raw_text.substr(begin, end - begin);
    out.push_back(std::move(s));
  }
  return out;
}

double score_snippet(Snippet& snippet, const text::Document& doc,
                     std::span<const RelevantTerm> terms, int z) {
  snippet.matched.clear();
  snippet.score = 0.0;
  std::size_t n_tokens = 0;
  for (std::size_t i = snippet.start; i < snippet.end; ++i) n_tokens += doc.sentences[i].tokens.size();
  if (n_tokens == 0) return 0.0;

  double total = 0.0;
  for (const auto& term : terms) {
    const auto stems = term.stems();
    std::size_t hits = 0;
    for (std::size_t i = snippet.start; i < snippet.end; ++i) {
      const auto& toks = doc.sentences[i].tokens;
      if (stems.size() == 1) {
        hits += static_cast<std::size_t>(std::count(toks.begin(), toks.end(), stems[0]));
      } else {
        for (std::size_t k = 0; k + 1 < toks.size(); ++k) {
          if (toks[k] == stems[0] && toks[k + 1] == stems[1]) ++hits;
        }
      }
    }
    if (hits == 0) continue;
    total += static_cast<double>(hits) * std::exp(-term.cost);
    if (snippet.matched.size() < static_cast<std::size_t>(z)) snippet.matched.push_back(term.surface);
  }
  snippet.score = total / static_cast<double>(n_tokens);
  return snippet.score;
}

namespace {

std::vector<Snippet> all_snippets(std::span<const text::Document> repository,
                                  const ExtractionConfig& cfg) {
  std::vector<Snippet> out;
  for (std::size_t d = 0; d < repository.size(); ++d) {
    auto s = segment_snippets(repository[d], d, cfg);
    out.insert(out.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
  }
  return out;
}

std::vector<Snippet> rank(std::vector<Snippet> snippets) {
  std::erase_if(snippets, [](const Snippet& s) { return !(s.score > 0.0); });
  std::sort(snippets.begin(), snippets.end(), [](const Snippet& a, const Snippet& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.doc_id != b.doc_id) return a.doc_id < b.doc_id;
    return a.start < b.start;
  });
  return snippets;
}

}  // namespace

std::vector<Snippet> score_snippets(std::span<const text::Document> repository,
                                    std::span<const RelevantTerm> terms,
                                    const ExtractionConfig& cfg) {
  auto snippets = all_snippets(repository, cfg);
  const auto n = static_cast<std::ptrdiff_t>(snippets.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    auto& s = snippets[i];
    score_snippet(s, repository[s.doc_index], terms, cfg.z);
  }
  return rank(std::move(snippets));
}

std::vector<Snippet> score_snippets_serial(std::span<const text::Document> repository,
                                           std::span<const RelevantTerm> terms,
                                           const ExtractionConfig& cfg) {
  auto snippets = all_snippets(repository, cfg);
  for (auto& s : snippets) score_snippet(s, repository[s.doc_index], terms, cfg.z);
  return rank(std::move(snippets));
}

std::vector<Snippet> select_snippets(std::span<const Snippet> scored,
                                     const tone::ToneProfile& profile,
                                     const ExtractionConfig& cfg) {
  const std::size_t want = cfg.mode == Mode::manual
                               ? kManualSnippets
                               : tone::snippet_count(tone::snippet_count_policy(profile));
  return {scored.begin(), scored.begin() + std::min(want, scored.size())};
}

std::vector<Highlight> find_highlights(std::string_view raw, std::span<const std::string> terms,
                                       const text::Stoplist& stoplist) {
  struct Kept {
    std::string stem;
    std::size_t begin, end;
  };
  std::vector<Kept> kept;
  for (auto& span : text::tokenize_with_offsets(raw)) {
    auto stem = text::normalize_token(span.token, stoplist);
    if (!stem.empty()) kept.push_back({std::move(stem), span.begin, span.end});
  }
  std::vector<Highlight> out;
  for (const auto& term : terms) {
    const auto space = term.find(' ');
    if (space == std::string::npos) {
      for (const auto& k : kept) {
        if (k.stem == term) out.push_back({k.begin, k.end, term});
      }
      continue;
    }
    const std::string_view first(term.data(), space);
    const std::string_view second(term.data() + space + 1, term.size() - space - 1);
    for (std::size_t i = 0; i + 1 < kept.size(); ++i) {
      if (kept[i].stem == first && kept[i + 1].stem == second) {
        out.push_back({kept[i].begin, kept[i + 1].end, term});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const Highlight& a, const Highlight& b) {
    if (a.begin != b.begin) return a.begin < b.begin;
    if (a.end != b.end) return a.end > b.end;
    return a.term < b.term;
  });
  return out;
}

}  // namespace elicit::extract
