#include "elicit/wfst.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <tuple>

#include "elicit/error.hpp"

namespace elicit::wfst {

SymbolTable::SymbolTable() { add("<eps>"); }

Label SymbolTable::add(std::string_view token) {
  std::string key(token);
  if (auto it = index_.find(key); it != index_.end()) return it->second;
  const auto label = static_cast<Label>(symbols_.size());
  symbols_.push_back(key);
  index_.emplace(std::move(key), label);
  return label;
}

std::optional<Label> SymbolTable::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& SymbolTable::symbol(Label label) const {
  if (label < 0 || static_cast<std::size_t>(label) >= symbols_.size()) {
    throw Error(ErrorCode::invalid_argument, "unknown label " + std::to_string(label));
  }
  return symbols_[label];
}

Wfst::Wfst(std::shared_ptr<SymbolTable> symbols) : symbols_(std::move(symbols)) {
  if (!symbols_) throw Error(ErrorCode::invalid_argument, "Wfst requires a symbol table");
}

StateId Wfst::add_state() {
  states_.emplace_back();
  return static_cast<StateId>(states_.size() - 1);
}

void Wfst::set_start(StateId s) {
  if (s < 0 || s >= num_states()) throw Error(ErrorCode::invalid_argument, "bad start state");
  start_ = s;
}

void Wfst::set_final(StateId s, double weight) {
  if (s < 0 || s >= num_states()) throw Error(ErrorCode::invalid_argument, "bad final state");
  if (std::isnan(weight) || weight < 0.0) {
    throw Error(ErrorCode::invalid_argument, "final weight must be a non-negative cost");
  }
  states_[s].final_weight = weight;
}

void Wfst::add_arc(StateId src, const Arc& arc) {
  if (src < 0 || src >= num_states() || arc.dst < 0 || arc.dst >= num_states()) {
    throw Error(ErrorCode::invalid_argument, "arc endpoint does not exist");
  }
  if (!std::isfinite(arc.weight) || arc.weight < 0.0) {
    throw Error(ErrorCode::invalid_argument, "arc weight must be a finite non-negative cost");
  }
  states_[src].arcs.push_back(arc);
}

void Wfst::sort_arcs() {
  for (auto& state : states_) {
    std::sort(state.arcs.begin(), state.arcs.end(), [](const Arc& a, const Arc& b) {
      return std::tie(a.ilabel, a.olabel, a.dst, a.weight) <
             std::tie(b.ilabel, b.olabel, b.dst, b.weight);
    });
  }
}

std::size_t Wfst::num_arcs() const {
  std::size_t n = 0;
  for (const auto& state : states_) n += state.arcs.size();
  return n;
}

std::span<const Arc> Wfst::arcs_with_ilabel(StateId s, Label label) const {
  const auto& arcs = states_[s].arcs;
  auto lo = std::lower_bound(arcs.begin(), arcs.end(), label,
                             [](const Arc& a, Label l) { return a.ilabel < l; });
  auto hi = std::upper_bound(lo, arcs.end(), label,
                             [](Label l, const Arc& a) { return l < a.ilabel; });
  return {lo, hi};
}

bool Wfst::has_successful_path() const {
  if (start_ == kNoState) return false;
  std::vector<bool> seen(states_.size(), false);
  std::deque<StateId> queue{start_};
  seen[start_] = true;
  while (!queue.empty()) {
    const StateId s = queue.front();
    queue.pop_front();
    if (is_final(s)) return true;
    for (const auto& arc : states_[s].arcs) {
      if (!seen[arc.dst]) {
        seen[arc.dst] = true;
        queue.push_back(arc.dst);
      }
    }
  }
  return false;
}

std::string Wfst::dump() const {
  std::string out;
  char line[128];
  for (StateId s = 0; s < num_states(); ++s) {
    for (const auto& arc : states_[s].arcs) {
      std::snprintf(line, sizeof line, "%d %d %d %.17g %d\n", s, arc.ilabel, arc.olabel,
                    arc.weight, arc.dst);
      out += line;
    }
  }
  for (StateId s = 0; s < num_states(); ++s) {
    if (is_final(s)) {
      std::snprintf(line, sizeof line, "%d %.17g\n", s, states_[s].final_weight);
      out += line;
    }
  }
  return out;
}

std::vector<Label> Path::ilabels() const {
  std::vector<Label> out;
  for (const auto& a : arcs) {
    if (a.ilabel != kEpsilon) out.push_back(a.ilabel);
  }
  return out;
}

std::vector<Label> Path::olabels() const {
  std::vector<Label> out;
  for (const auto& a : arcs) {
    if (a.olabel != kEpsilon) out.push_back(a.olabel);
  }
  return out;
}

double Path::recomputed_weight() const {
  double w = 0.0;
  for (const auto& a : arcs) w += a.weight;
  return w + final_weight;
}

Wfst linear_chain(std::span<const Label> labels, const std::shared_ptr<SymbolTable>& symbols) {
  Wfst fst(symbols);
  StateId prev = fst.add_state();
  fst.set_start(prev);
  for (Label label : labels) {
    const StateId next = fst.add_state();
    fst.add_arc(prev, Arc{label, label, 0.0, next});
    prev = next;
  }
  fst.set_final(prev, 0.0);
  return fst;
}

Wfst linear_chain(std::span<const std::string> tokens,
                  const std::shared_ptr<SymbolTable>& symbols) {
  std::vector<Label> labels;
  labels.reserve(tokens.size());
  for (const auto& t : tokens) labels.push_back(symbols->add(t));
  return linear_chain(std::span<const Label>(labels), symbols);
}

}  // namespace elicit::wfst
