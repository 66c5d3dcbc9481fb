#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "elicit/ngram.hpp"
#include "elicit/text.hpp"

namespace testlm {

using elicit::text::Tokens;

inline elicit::text::Document doc_from_sentences(const std::string& id,
                                                 const std::vector<Tokens>& sentences) {
  elicit::text::Document d;
  d.id = id;
  for (const auto& s : sentences) {
    elicit::text::Sentence sent;
    sent.begin = d.raw_text.size();
    for (const auto& t : s) d.raw_text += t + " ";
    sent.end = d.raw_text.size();
    d.raw_text += ". ";
    sent.tokens = s;
    d.sentences.push_back(std::move(sent));
  }
  return d;
}

inline std::vector<Tokens> random_corpus(std::mt19937_64& rng, int vocab, int max_tokens) {
  std::uniform_int_distribution<int> word(0, vocab - 1);
  std::uniform_int_distribution<int> len(1, 7);
  std::vector<Tokens> out;
  int total = 0;
  while (total < max_tokens) {
    Tokens s;
    const int n = std::min(len(rng), max_tokens - total);
    for (int i = 0; i < n; ++i) s.push_back("w" + std::to_string(word(rng)));
    total += n;
    out.push_back(std::move(s));
  }
  return out;
}

// Sum of P(w | h) over the predicted vocabulary, straight from the backoff
// recursion.
inline double mass(const elicit::lm::NGramModel& m, elicit::lm::NGramTrie::NodeId h) {
  double s = 0.0;
  for (auto w : m.vocabulary()) s += m.prob_at(h, w);
  return s;
}

// Cost of the deterministic route through a backoff automaton: take the
// word arc when the state has one, otherwise follow its epsilon arc.
inline std::optional<double> canonical_cost(const elicit::lm::LmAutomaton& a,
                                            std::span<const elicit::wfst::Label> labels) {
  const auto& t = a.fst;
  auto s = t.start();
  double cost = 0.0;
  for (auto raw : labels) {
    const auto w = a.map_label(raw);
    while (true) {
      const auto arcs = t.arcs_with_ilabel(s, w);
      if (!arcs.empty()) {
        cost += arcs.front().weight;
        s = arcs.front().dst;
        break;
      }
      const auto eps = t.arcs_with_ilabel(s, elicit::wfst::kEpsilon);
      if (eps.empty()) return std::nullopt;
      cost += eps.front().weight;
      s = eps.front().dst;
    }
  }
  return cost + t.final_weight(s);
}

}  // namespace testlm
