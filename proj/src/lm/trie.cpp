#include <algorithm>

#include "elicit/error.hpp"
#include "elicit/ngram.hpp"

namespace elicit::lm {

NGramTrie::NGramTrie() {
  nodes_.push_back({kNone, wfst::kEpsilon, 0});
  first_.push_back(wfst::kEpsilon);
  suffix_.push_back(kNone);
}

NGramTrie::NodeId NGramTrie::find(NodeId parent, Label word) const {
  auto it = index_.find(key(parent, word));
  return it == index_.end() ? kNone : it->second;
}

NGramTrie::NodeId NGramTrie::intern(NodeId parent, Label word) {
  const auto k = key(parent, word);
  if (auto it = index_.find(k); it != index_.end()) return it->second;
  const int order = nodes_[parent].order + 1;
  if (order < nodes_.back().order) {
    throw Error(ErrorCode::invalid_argument, "NGramTrie: n-grams must be interned by order");
  }
  const auto id = static_cast<NodeId>(nodes_.size());
  nodes_.push_back({parent, word, order});
  first_.push_back(parent == kRoot ? word : first_[parent]);
  index_.emplace(k, id);
  return id;
}

NGramTrie::NodeId NGramTrie::lookup(std::span<const Label> ngram) const {
  NodeId n = kRoot;
  for (Label w : ngram) {
    n = find(n, w);
    if (n == kNone) return kNone;
  }
  return n;
}

std::span<const NGramTrie::NodeId> NGramTrie::children(NodeId n) const {
  return {child_ids_.data() + child_begin_[n], child_ids_.data() + child_begin_[n + 1]};
}

std::size_t NGramTrie::size_upto(int k) const {
  if (k < 0) return 0;
  if (static_cast<std::size_t>(k) >= order_end_.size()) return nodes_.size();
  return order_end_[k];
}

std::vector<Label> NGramTrie::ngram(NodeId n) const {
  std::vector<Label> out;
  for (; n != kRoot; n = nodes_[n].parent) out.push_back(nodes_[n].word);
  std::reverse(out.begin(), out.end());
  return out;
}

void NGramTrie::finalize() {
  const std::size_t n = nodes_.size();
  suffix_.assign(n, kNone);
  for (std::size_t i = 1; i < n; ++i) {
    const Node& node = nodes_[i];
    if (node.order == 1) {
      suffix_[i] = kRoot;
      continue;
    }
    NodeId s = suffix_[node.parent];
    while (true) {
      const NodeId c = find(s, node.word);
      if (c != kNone) {
        suffix_[i] = c;
        break;
      }
      if (s == kRoot) {
        suffix_[i] = kRoot;
        break;
      }
      s = suffix_[s];
    }
  }

  child_begin_.assign(n + 1, 0);
  for (std::size_t i = 1; i < n; ++i) ++child_begin_[nodes_[i].parent + 1];
  for (std::size_t i = 0; i < n; ++i) child_begin_[i + 1] += child_begin_[i];
  child_ids_.assign(n > 0 ? n - 1 : 0, kNone);
  std::vector<std::uint32_t> fill(child_begin_.begin(), child_begin_.end() - 1);
  for (std::size_t i = 1; i < n; ++i) child_ids_[fill[nodes_[i].parent]++] = static_cast<NodeId>(i);

  const int max_order = nodes_.back().order;
  order_end_.assign(max_order + 1, 0);
  for (std::size_t i = 0; i < n; ++i) order_end_[nodes_[i].order] = i + 1;
  for (int k = 1; k <= max_order; ++k) order_end_[k] = std::max(order_end_[k], order_end_[k - 1]);
}

std::uint64_t NGramCounts::count_of(std::span<const std::string> ngram) const {
  NGramTrie::NodeId node = NGramTrie::kRoot;
  for (const auto& tok : ngram) {
    auto label = symbols->find(tok);
    if (!label) return 0;
    node = trie->find(node, *label);
    if (node == NGramTrie::kNone) return 0;
  }
  return node == NGramTrie::kRoot ? 0 : count[node];
}

NGramCounts count_ngrams(const std::vector<text::Tokens>& sentences, int n, CountOptions options,
                         std::shared_ptr<wfst::SymbolTable> symbols) {
  if (n < 1 || n > kMaxOrder) {
    throw Error(ErrorCode::invalid_argument, "count_ngrams: order must be in 1..5");
  }
  NGramCounts counts;
  counts.symbols = symbols ? std::move(symbols) : std::make_shared<wfst::SymbolTable>();
  counts.bos = counts.symbols->add(kBos);
  counts.eos = counts.symbols->add(kEos);
  counts.unk = counts.symbols->add(kUnk);
  counts.order = n;
  counts.options = options;

  std::vector<std::vector<Label>> seqs;
  for (const auto& sentence : sentences) {
    if (sentence.empty()) continue;
    std::vector<Label> seq;
    seq.reserve(sentence.size() + 2);
    if (options.pad_sentences) seq.push_back(counts.bos);
    for (const auto& tok : sentence) seq.push_back(counts.symbols->add(tok));
    if (options.pad_sentences) seq.push_back(counts.eos);
    seqs.push_back(std::move(seq));
  }
  if (seqs.empty()) throw Error(ErrorCode::empty_repository, "empty repository");

  auto trie = std::make_shared<NGramTrie>();
  std::vector<std::uint64_t>& count = counts.count;
  count.assign(1, 0);
  // ends[s][i]: node of the (k-1)-gram ending at position i of sentence s.
  std::vector<std::vector<NGramTrie::NodeId>> ends(seqs.size());
  for (std::size_t s = 0; s < seqs.size(); ++s) ends[s].assign(seqs[s].size(), NGramTrie::kRoot);

  for (int k = 1; k <= n; ++k) {
    for (std::size_t s = 0; s < seqs.size(); ++s) {
      const auto& seq = seqs[s];
      auto& prev = ends[s];
      // Walk right to left so prev[i-1] still holds the (k-1)-gram.
      for (std::size_t i = seq.size(); i-- > 0;) {
        if (i + 1 < static_cast<std::size_t>(k)) {
          prev[i] = NGramTrie::kNone;
          continue;
        }
        const NGramTrie::NodeId parent = k == 1 ? NGramTrie::kRoot : prev[i - 1];
        if (parent == NGramTrie::kNone) {
          prev[i] = NGramTrie::kNone;
          continue;
        }
        const NGramTrie::NodeId node = trie->intern(parent, seq[i]);
        if (node >= static_cast<NGramTrie::NodeId>(count.size())) count.resize(node + 1, 0);
        ++count[node];
        prev[i] = node;
      }
    }
  }
  trie->finalize();
  count.resize(trie->size(), 0);

  counts.continuation.assign(trie->size(), 0);
  for (std::size_t x = 1; x < trie->size(); ++x) {
    const auto node = static_cast<NGramTrie::NodeId>(x);
    if (trie->order(node) >= 2) ++counts.continuation[trie->suffix(node)];
  }
  counts.trie = std::move(trie);
  return counts;
}

}  // namespace elicit::lm
