#include <algorithm>
#include <cmath>

#include "elicit/ngram.hpp"

namespace elicit::lm {

Label LmAutomaton::map_label(Label w) const {
  return std::binary_search(vocabulary.begin(), vocabulary.end(), w) ? w : unk;
}

std::vector<Label> LmAutomaton::map_tokens(std::span<const std::string> tokens) const {
  std::vector<Label> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    auto label = fst.symbols().find(t);
    out.push_back(label ? map_label(*label) : unk);
  }
  return out;
}

LmAutomaton to_wfst(const NGramModel& model) {
  using NodeId = NGramTrie::NodeId;
  const auto& trie = model.trie();
  const int n = model.order();

  LmAutomaton out{wfst::Wfst(model.symbols()), wfst::kNoState, model.unk(),
                  std::vector<Label>(model.vocabulary().begin(), model.vocabulary().end())};
  auto& fst = out.fst;

  std::vector<wfst::StateId> state(trie.size_upto(n), wfst::kNoState);
  for (std::size_t x = 0; x < trie.size_upto(n - 1); ++x) {
    if (model.is_history(static_cast<NodeId>(x))) {
      state[x] = fst.add_state();
      fst.set_final(state[x], 0.0);
    }
  }
  // Longest suffix of `node` that is a state. Every suffix of a trie n-gram
  // is itself in the trie, so the suffix chain reaches it.
  auto state_of = [&](NodeId node) {
    while (node != NGramTrie::kRoot &&
           (trie.order(node) > n - 1 || state[node] == wfst::kNoState)) {
      node = trie.suffix(node);
    }
    return state[node];
  };
  out.root_state = state[NGramTrie::kRoot];

  for (Label w : out.vocabulary) {
    const double p = model.unigram(w);
    if (!(p > 0.0)) continue;
    wfst::StateId dst = out.root_state;
    if (n >= 2) {
      const NodeId node = trie.find(NGramTrie::kRoot, w);
      if (node != NGramTrie::kNone) dst = state_of(node);
    }
    fst.add_arc(out.root_state, {w, w, std::max(0.0, -std::log(p)), dst});
  }

  for (std::size_t x = 1; x < trie.size_upto(n - 1); ++x) {
    const auto h = static_cast<NodeId>(x);
    if (state[x] == wfst::kNoState) continue;
    for (NodeId c : trie.children(h)) {
      if (!model.stored(c)) continue;
      const double p = model.stored_prob(c);
      if (!(p > 0.0)) continue;
      const wfst::StateId dst = trie.order(c) <= n - 1 ? state_of(c) : state_of(trie.suffix(c));
      const Label w = trie.word(c);
      fst.add_arc(state[x], {w, w, std::max(0.0, -std::log(p)), dst});
    }
    const double bow = model.backoff(h);
    if (bow > 0.0) {
      fst.add_arc(state[x], {wfst::kEpsilon, wfst::kEpsilon, std::max(0.0, -std::log(bow)),
                             state_of(trie.suffix(h))});
    }
  }

  NodeId start = NGramTrie::kRoot;
  if (model.params().padded && n >= 2) {
    const NodeId bos = trie.find(NGramTrie::kRoot, model.bos());
    if (bos != NGramTrie::kNone) start = bos;
  }
  fst.set_start(state_of(start));
  fst.sort_arcs();
  return out;
}

}  // namespace elicit::lm
