#pragma once

// Weighted finite-state transducers over the tropical semiring (min, +).
// Weights are costs: a path's weight is the sum of its arc weights plus the
// final weight of its last state, and alternatives combine by minimum.

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace elicit::wfst {

using Label = std::int32_t;
using StateId = std::int32_t;

inline constexpr Label kEpsilon = 0;
inline constexpr StateId kNoState = -1;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Bijection between token strings and positive labels. Label 0 is always
/// epsilon ("<eps>"). Entries are only ever added.
class SymbolTable {
 public:
  SymbolTable();

  Label add(std::string_view token);
  std::optional<Label> find(std::string_view token) const;
  const std::string& symbol(Label label) const;
  std::size_t size() const { return symbols_.size(); }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, Label> index_;
};

struct Arc {
  Label ilabel = kEpsilon;
  Label olabel = kEpsilon;
  double weight = 0.0;
  StateId dst = kNoState;

  friend bool operator==(const Arc&, const Arc&) = default;
};

class Wfst {
 public:
  explicit Wfst(std::shared_ptr<SymbolTable> symbols);

  StateId add_state();
  void set_start(StateId s);
  void set_final(StateId s, double weight = 0.0);
  /// Throws elicit::Error if the weight is negative, infinite or NaN, or if
  /// either endpoint does not exist.
  void add_arc(StateId src, const Arc& arc);
  /// Orders every adjacency list by (ilabel, olabel, dst, weight). All
  /// operations in this module return sorted machines.
  void sort_arcs();

  StateId start() const { return start_; }
  StateId num_states() const { return static_cast<StateId>(states_.size()); }
  std::size_t num_arcs() const;
  std::span<const Arc> arcs(StateId s) const { return states_[s].arcs; }
  /// Arcs of `s` whose ilabel equals `label`; requires sorted arcs.
  std::span<const Arc> arcs_with_ilabel(StateId s, Label label) const;
  double final_weight(StateId s) const { return states_[s].final_weight; }
  bool is_final(StateId s) const { return states_[s].final_weight < kInfinity; }

  const SymbolTable& symbols() const { return *symbols_; }
  const std::shared_ptr<SymbolTable>& symbols_ptr() const { return symbols_; }

  /// True when some final state is reachable from the start state.
  bool has_successful_path() const;

  /// Debug text: one arc per line `src ilabel olabel weight dst`, then one
  /// final per line `state weight`.
  std::string dump() const;

 private:
  struct State {
    std::vector<Arc> arcs;
    double final_weight = kInfinity;
  };

  std::shared_ptr<SymbolTable> symbols_;
  std::vector<State> states_;
  StateId start_ = kNoState;
};

struct PathArc {
  StateId src = kNoState;
  Label ilabel = kEpsilon;
  Label olabel = kEpsilon;
  double weight = 0.0;
  StateId dst = kNoState;
};

struct Path {
  std::vector<PathArc> arcs;
  double final_weight = 0.0;
  double total_weight = 0.0;

  /// Input / output label sequences with epsilons removed.
  std::vector<Label> ilabels() const;
  std::vector<Label> olabels() const;
  /// Sum of arc weights plus final weight, recomputed from the arcs.
  double recomputed_weight() const;
};

/// Single-path acceptor for `tokens`; registers unseen tokens.
Wfst linear_chain(std::span<const std::string> tokens,
                  const std::shared_ptr<SymbolTable>& symbols);
Wfst linear_chain(std::span<const Label> labels,
                  const std::shared_ptr<SymbolTable>& symbols);

/// Composed state provenance: (state in t1, state in t2, filter state).
struct ComposeTuple {
  StateId left = kNoState;
  StateId right = kNoState;
  std::uint8_t filter = 0;
};

struct ComposeResult {
  Wfst fst;
  std::vector<ComposeTuple> origin;  // indexed by composed state id
};

/// t1 ∘ t2. Both machines must share one SymbolTable. Only states reachable
/// from the start pair are built; an empty intersection yields a machine with
/// no successful path (check has_successful_path()).
Wfst compose(const Wfst& t1, const Wfst& t2);
ComposeResult compose_with_origin(const Wfst& t1, const Wfst& t2);

/// Up to n lowest-cost successful paths, ascending by total weight, ties
/// ordered by output label sequence. Terminates on cyclic machines because
/// each state is expanded at most n times.
std::vector<Path> n_shortest_paths(const Wfst& t, int n);

/// Minimum cost from the start state to any final state.
std::optional<double> shortest_distance(const Wfst& t);

/// Minimum cost over successful paths of `t` whose input string is `tokens`.
/// Tokens missing from the symbol table make the result absent.
std::optional<double> path_weight(const Wfst& t, std::span<const std::string> tokens);
std::optional<double> path_weight(const Wfst& t, std::span<const Label> labels);

}  // namespace elicit::wfst
