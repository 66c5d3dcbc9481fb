#pragma once

// Smoothed n-gram language models (orders 1-5) under four discounting
// methods, compiled to backoff WFSTs.
//
// Every method is stored in backoff form: a probability for each stored
// n-gram and a backoff weight per history. For an unstored word,
// P(w | h) = bow(h) * P(w | h'), where h' drops the oldest word. Interpolated
// methods (absolute, kneser_ney, witten_bell) are converted to this form
// exactly; the backoff weight is the interpolation weight of the lower order.

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "elicit/text.hpp"
#include "elicit/wfst.hpp"

namespace elicit::lm {

using wfst::Label;

enum class Method { katz, witten_bell, absolute, kneser_ney };

inline constexpr std::array<Method, 4> kMethods = {Method::katz, Method::witten_bell,
                                                   Method::absolute, Method::kneser_ney};
inline constexpr int kMaxOrder = 5;

std::string_view to_string(Method m);
std::optional<Method> parse_method(std::string_view s);

inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";
inline constexpr std::string_view kUnk = "<unk>";

/// Prefix tree of n-grams. Node 0 is the empty n-gram. Nodes must be
/// interned in non-decreasing order, so ids are grouped by order.
class NGramTrie {
 public:
  using NodeId = std::int32_t;
  static constexpr NodeId kRoot = 0;
  static constexpr NodeId kNone = -1;

  NGramTrie();

  NodeId find(NodeId parent, Label word) const;
  NodeId intern(NodeId parent, Label word);
  /// Node for the exact n-gram, or kNone.
  NodeId lookup(std::span<const Label> ngram) const;

  std::size_t size() const { return nodes_.size(); }
  Label word(NodeId n) const { return nodes_[n].word; }
  NodeId parent(NodeId n) const { return nodes_[n].parent; }
  int order(NodeId n) const { return nodes_[n].order; }
  /// Longest proper suffix present in the trie (w2..wk when it exists).
  NodeId suffix(NodeId n) const { return suffix_[n]; }
  std::span<const NodeId> children(NodeId n) const;
  /// Number of nodes with order <= k.
  std::size_t size_upto(int k) const;
  std::vector<Label> ngram(NodeId n) const;
  Label first_word(NodeId n) const { return first_[n]; }

  /// Builds suffix links and child lists. Call after the last intern().
  void finalize();

 private:
  struct Node {
    NodeId parent;
    Label word;
    std::int32_t order;
  };
  static std::uint64_t key(NodeId parent, Label word) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(parent)) << 32) |
           static_cast<std::uint32_t>(word);
  }

  std::vector<Node> nodes_;
  std::vector<Label> first_;
  std::vector<NodeId> suffix_;
  std::vector<std::uint32_t> child_begin_;
  std::vector<NodeId> child_ids_;
  std::vector<std::size_t> order_end_;
  std::unordered_map<std::uint64_t, NodeId> index_;
};

struct CountOptions {
  /// Wrap each sentence in <s> ... </s>. <s> is counted as history only.
  bool pad_sentences = true;
};

struct NGramCounts {
  std::shared_ptr<wfst::SymbolTable> symbols;
  std::shared_ptr<NGramTrie> trie;
  std::vector<std::uint64_t> count;  // occurrences of each trie node's n-gram
  /// Distinct one-word left extensions (N1+(. x)); 0 for the top order.
  std::vector<std::uint64_t> continuation;
  int order = 0;
  CountOptions options;
  Label bos = 0, eos = 0, unk = 0;

  /// Count of an n-gram given as tokens; 0 when absent.
  std::uint64_t count_of(std::span<const std::string> ngram) const;
};

/// Counts all k-grams, k = 1..n. Throws Error(empty_repository) when no
/// sentence has a token.
NGramCounts count_ngrams(const std::vector<text::Tokens>& sentences, int n,
                         CountOptions options = {},
                         std::shared_ptr<wfst::SymbolTable> symbols = nullptr);

struct EstimateOptions {
  /// Absolute / Kneser-Ney discount; defaults to n1 / (n1 + 2 n2) from the
  /// bigram count-of-counts.
  std::optional<double> discount;
  /// Probability mass spread uniformly over the predicted vocabulary at the
  /// unigram level, keeping every word (including <unk>) finite.
  double unk_floor = 1e-6;
  /// Kneser-Ney with raw counts in place of continuation counts. Only
  /// useful for checking that the two interpolated methods then coincide.
  bool kneser_ney_raw_lower_counts = false;
};

struct ModelParams {
  double discount = 0.0;
  double unk_floor = 0.0;
  bool padded = true;
  /// Katz Good-Turing discount d_r, indexed [order][r] for r = 1..4.
  std::array<std::array<double, 5>, kMaxOrder + 1> katz{};
};

class NGramModel {
 public:
  using NodeId = NGramTrie::NodeId;

  NGramModel() = default;

  Method method() const { return method_; }
  int order() const { return order_; }
  const ModelParams& params() const { return params_; }
  const NGramTrie& trie() const { return *trie_; }
  const std::shared_ptr<wfst::SymbolTable>& symbols() const { return symbols_; }
  Label bos() const { return bos_; }
  Label eos() const { return eos_; }
  Label unk() const { return unk_; }

  /// Predicted vocabulary: corpus words, <unk>, and </s> when padded.
  std::span<const Label> vocabulary() const { return vocabulary_; }
  bool is_predicted(Label w) const;
  /// OOV labels become <unk>.
  Label map_label(Label w) const { return is_predicted(w) ? w : unk_; }
  std::vector<Label> map_tokens(std::span<const std::string> tokens) const;

  double unigram(Label w) const { return unigram_[w]; }
  bool stored(NodeId n) const;
  double stored_prob(NodeId n) const { return prob_[n]; }
  double backoff(NodeId n) const;
  /// Node has at least one stored child, i.e. it is an automaton state.
  bool is_history(NodeId n) const;

  /// P(w | node's n-gram) through the backoff recursion.
  double prob_at(NodeId history, Label w) const;
  /// Longest suffix (at most order-1 words) of `history` present in the trie.
  NodeId history_node(std::span<const Label> history) const;
  /// P(w | history), history given most-recent-last.
  double prob(std::span<const Label> history, Label w) const;

 private:
  friend NGramModel estimate(const NGramCounts&, Method, int, const EstimateOptions&);
  friend class ModelBuilder;

  Method method_ = Method::katz;
  int order_ = 1;
  ModelParams params_;
  std::shared_ptr<const NGramTrie> trie_;
  std::shared_ptr<wfst::SymbolTable> symbols_;
  Label bos_ = 0, eos_ = 0, unk_ = 0;
  std::vector<Label> vocabulary_;
  std::vector<double> unigram_;   // by label; NaN for labels that are never predicted
  std::vector<double> prob_;      // by node; NaN when not stored
  std::vector<double> backoff_;   // by node; 1 when absent
  std::vector<std::uint8_t> history_;
};

/// Assembles models whose tables come from somewhere other than counts
/// (the ARPA loader).
class ModelBuilder {
 public:
  ModelBuilder(Method method, int order, ModelParams params,
               std::shared_ptr<const NGramTrie> trie, std::shared_ptr<wfst::SymbolTable> symbols);
  void set_unigram(Label w, double p);
  void set_prob(NGramModel::NodeId n, double p);
  void set_backoff(NGramModel::NodeId n, double bow);
  NGramModel finish();

 private:
  NGramModel model_;
};

/// Throws Error(invalid_argument) when order is outside 1..counts.order.
NGramModel estimate(const NGramCounts& counts, Method method, int order,
                    const EstimateOptions& options = {});

/// Total cost in nats, sum of -ln P(w_i | h_i). Starts from <s> when the
/// model was trained on padded sentences; </s> is not scored.
double sequence_logprob(const NGramModel& model, std::span<const Label> labels);
double sequence_logprob(const NGramModel& model, std::span<const std::string> tokens);

/// exp(sequence_logprob / |tokens|). Throws Error(empty_evaluation_text).
double perplexity(const NGramModel& model, std::span<const std::string> tokens);
double perplexity(const NGramModel& model, std::span<const Label> labels);

/// Backoff automaton of a model: one state per history, word arcs weighted
/// -ln P(w | h), epsilon arcs weighted -ln bow(h) to the backed-off history.
/// Every state is final with weight 0.
struct LmAutomaton {
  wfst::Wfst fst;
  wfst::StateId root_state = wfst::kNoState;
  Label unk = 0;
  std::vector<Label> vocabulary;  // sorted predicted labels

  Label map_label(Label w) const;
  std::vector<Label> map_tokens(std::span<const std::string> tokens) const;
};

LmAutomaton to_wfst(const NGramModel& model);

// ---------------------------------------------------------------------------
// Model grid: 4 methods x 5 orders over one repository.

struct ModelKey {
  Method method = Method::katz;
  int order = 1;

  friend bool operator==(const ModelKey&, const ModelKey&) = default;
};

std::string to_string(const ModelKey& key);  // e.g. "kneser_ney-3"
std::optional<ModelKey> parse_model_key(std::string_view s);

inline constexpr std::size_t kGridSize = kMethods.size() * kMaxOrder;

/// Grid slot: order-major, then method, which is also the tie-break order.
std::size_t grid_index(const ModelKey& key);
ModelKey grid_key(std::size_t index);

struct GridOptions {
  CountOptions count;
  EstimateOptions estimate;
};

class ModelGrid {
 public:
  ModelGrid() = default;
  ModelGrid(std::string fingerprint, std::shared_ptr<wfst::SymbolTable> symbols,
            std::vector<NGramModel> models);

  const std::string& fingerprint() const { return fingerprint_; }
  const std::shared_ptr<wfst::SymbolTable>& symbols() const { return symbols_; }
  const NGramModel& model(const ModelKey& key) const { return models_.at(grid_index(key)); }
  const std::vector<NGramModel>& models() const { return models_; }
  std::size_t size() const { return models_.size(); }

 private:
  std::string fingerprint_;
  std::shared_ptr<wfst::SymbolTable> symbols_;
  std::vector<NGramModel> models_;
};

/// SHA-256 over document ids and bytes, in repository order.
std::string corpus_fingerprint(std::span<const text::Document> repository);
std::vector<text::Tokens> corpus_sentences(std::span<const text::Document> repository);

/// One counting pass at order 5, then the 20 estimators. The OpenMP version
/// distributes estimators over threads; both produce identical grids.
ModelGrid build_grid(std::span<const text::Document> repository, const GridOptions& options = {});
ModelGrid build_grid_serial(std::span<const text::Document> repository,
                            const GridOptions& options = {});

struct Selection {
  ModelKey key;
  double perplexity = 0.0;
  std::array<double, kGridSize> perplexities{};  // by grid_index
};

/// argmin perplexity over the grid; ties go to the smaller order, then
/// katz < witten_bell < absolute < kneser_ney. Throws on an empty window.
Selection select_model(const ModelGrid& grid, std::span<const std::string> window);
Selection select_model_serial(const ModelGrid& grid, std::span<const std::string> window);

}  // namespace elicit::lm
