#include <algorithm>
#include <cmath>
#include <limits>

#include "elicit/error.hpp"
#include "elicit/ngram.hpp"

namespace elicit::lm {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::katz: return "katz";
    case Method::witten_bell: return "witten_bell";
    case Method::absolute: return "absolute";
    case Method::kneser_ney: return "kneser_ney";
  }
  return "?";
}

std::optional<Method> parse_method(std::string_view s) {
  for (Method m : kMethods) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

bool NGramModel::is_predicted(Label w) const {
  return w > 0 && static_cast<std::size_t>(w) < unigram_.size() && !std::isnan(unigram_[w]);
}

std::vector<Label> NGramModel::map_tokens(std::span<const std::string> tokens) const {
  std::vector<Label> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    auto label = symbols_->find(t);
    out.push_back(label ? map_label(*label) : unk_);
  }
  return out;
}

bool NGramModel::stored(NodeId n) const {
  return n >= 0 && static_cast<std::size_t>(n) < prob_.size() && !std::isnan(prob_[n]);
}

double NGramModel::backoff(NodeId n) const {
  return static_cast<std::size_t>(n) < backoff_.size() ? backoff_[n] : 1.0;
}

bool NGramModel::is_history(NodeId n) const {
  return static_cast<std::size_t>(n) < history_.size() && history_[n] != 0;
}

double NGramModel::prob_at(NodeId history, Label w) const {
  double scale = 1.0;
  NodeId node = history;
  while (node != NGramTrie::kRoot) {
    const NodeId child = trie_->find(node, w);
    if (stored(child)) return scale * prob_[child];
    scale *= backoff(node);
    node = trie_->suffix(node);
  }
  const double p = static_cast<std::size_t>(w) < unigram_.size() ? unigram_[w] : 0.0;
  return std::isnan(p) ? 0.0 : scale * p;
}

NGramModel::NodeId NGramModel::history_node(std::span<const Label> history) const {
  const std::size_t max_len = std::min<std::size_t>(history.size(), order_ - 1);
  for (std::size_t k = max_len; k > 0; --k) {
    const NodeId n = trie_->lookup(history.subspan(history.size() - k));
    if (n != NGramTrie::kNone) return n;
  }
  return NGramTrie::kRoot;
}

double NGramModel::prob(std::span<const Label> history, Label w) const {
  return prob_at(history_node(history), w);
}

double sequence_logprob(const NGramModel& model, std::span<const Label> labels) {
  std::vector<Label> history;
  if (model.params().padded && model.order() >= 2) history.push_back(model.bos());
  double cost = 0.0;
  for (Label raw : labels) {
    const Label w = model.map_label(raw);
    cost -= std::log(model.prob(history, w));
    history.push_back(w);
    if (history.size() >= static_cast<std::size_t>(kMaxOrder)) history.erase(history.begin());
  }
  return cost;
}

double sequence_logprob(const NGramModel& model, std::span<const std::string> tokens) {
  const auto labels = model.map_tokens(tokens);
  return sequence_logprob(model, std::span<const Label>(labels));
}

double perplexity(const NGramModel& model, std::span<const Label> labels) {
  if (labels.empty()) throw Error(ErrorCode::empty_evaluation_text, "empty evaluation text");
  return std::exp(sequence_logprob(model, labels) / static_cast<double>(labels.size()));
}

double perplexity(const NGramModel& model, std::span<const std::string> tokens) {
  const auto labels = model.map_tokens(tokens);
  return perplexity(model, std::span<const Label>(labels));
}

ModelBuilder::ModelBuilder(Method method, int order, ModelParams params,
                           std::shared_ptr<const NGramTrie> trie,
                           std::shared_ptr<wfst::SymbolTable> symbols) {
  model_.method_ = method;
  model_.order_ = order;
  model_.params_ = params;
  model_.symbols_ = std::move(symbols);
  model_.bos_ = model_.symbols_->add(kBos);
  model_.eos_ = model_.symbols_->add(kEos);
  model_.unk_ = model_.symbols_->add(kUnk);
  model_.trie_ = std::move(trie);
  const std::size_t n = model_.trie_->size();
  model_.prob_.assign(n, std::numeric_limits<double>::quiet_NaN());
  model_.backoff_.assign(n, 1.0);
  model_.history_.assign(n, 0);
  model_.unigram_.assign(model_.symbols_->size(), std::numeric_limits<double>::quiet_NaN());
}

void ModelBuilder::set_unigram(Label w, double p) {
  if (static_cast<std::size_t>(w) >= model_.unigram_.size()) {
    model_.unigram_.resize(w + 1, std::numeric_limits<double>::quiet_NaN());
  }
  model_.unigram_[w] = p;
}

void ModelBuilder::set_prob(NGramModel::NodeId n, double p) { model_.prob_.at(n) = p; }
void ModelBuilder::set_backoff(NGramModel::NodeId n, double bow) { model_.backoff_.at(n) = bow; }

NGramModel ModelBuilder::finish() {
  auto& m = model_;
  m.unigram_.resize(m.symbols_->size(), std::numeric_limits<double>::quiet_NaN());
  m.vocabulary_.clear();
  for (std::size_t w = 1; w < m.unigram_.size(); ++w) {
    if (!std::isnan(m.unigram_[w])) m.vocabulary_.push_back(static_cast<Label>(w));
  }
  const auto& trie = *m.trie_;
  for (std::size_t x = 1; x < trie.size(); ++x) {
    const auto node = static_cast<NGramModel::NodeId>(x);
    if (trie.order(node) == 1 && !std::isnan(m.unigram_[trie.word(node)])) {
      m.prob_[x] = m.unigram_[trie.word(node)];
    }
  }
  for (std::size_t x = 1; x < trie.size(); ++x) {
    const auto node = static_cast<NGramModel::NodeId>(x);
    if (trie.order(node) >= 2 && !std::isnan(m.prob_[x])) m.history_[trie.parent(node)] = 1;
  }
  m.history_[NGramTrie::kRoot] = 1;
  return std::move(model_);
}

}  // namespace elicit::lm
