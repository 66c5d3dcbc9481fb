#include <algorithm>
#include <cmath>
#include <map>

#include "elicit/error.hpp"
#include "elicit/extraction.hpp"

namespace elicit::extract {

std::string_view to_string(Mode m) { return m == Mode::automatic ? "automatic" : "manual"; }

std::optional<Mode> parse_mode(std::string_view s) {
  if (s == "auto" || s == "automatic") return Mode::automatic;
  if (s == "manual") return Mode::manual;
  return std::nullopt;
}

void ExtractionConfig::validate() const {
  if (z < 1 || m < 1 || snippet_len < 1) {
    throw Error(ErrorCode::invalid_argument, "z, m and snippet_len must be at least 1");
  }
}

text::Tokens RelevantTerm::stems() const {
  const auto space = surface.find(' ');
  if (space == std::string::npos) return {surface};
  return {surface.substr(0, space), surface.substr(space + 1)};
}

TermResult extract_relevant_terms(const lm::LmAutomaton& lm, std::span<const std::string> window,
                                  const ExtractionConfig& cfg) {
  cfg.validate();
  if (window.empty()) throw Error(ErrorCode::no_conversation, "no conversation yet");
  TermResult result;

  const auto labels = lm.map_tokens(window);
  const auto& symbols = lm.fst.symbols();
  const auto eos = symbols.find(lm::kEos);
  auto is_term_word = [&](wfst::Label w) { return w != lm.unk && (!eos || w != *eos); };
  if (std::none_of(labels.begin(), labels.end(), is_term_word)) {
    result.no_overlap = true;
    return result;
  }

  const auto chain = wfst::linear_chain(std::span<const wfst::Label>(labels), lm.fst.symbols_ptr());
  const auto composed = wfst::compose_with_origin(chain, lm.fst);
  const auto paths = wfst::n_shortest_paths(composed.fst, cfg.m);

  std::map<std::string, double> best;
  auto offer = [&](std::string surface, double cost) {
    auto [it, inserted] = best.emplace(std::move(surface), cost);
    if (!inserted && cost < it->second) it->second = cost;
  };
  for (const auto& path : paths) {
    double pending = 0.0;
    wfst::Label prev = wfst::kEpsilon;
    double prev_cost = 0.0;
    for (const auto& arc : path.arcs) {
      if (arc.olabel == wfst::kEpsilon) {
        pending += arc.weight;
        continue;
      }
      const double cost = pending + arc.weight;
      pending = 0.0;
      const wfst::Label w = arc.olabel;
      const bool from_history = composed.origin[arc.src].right != lm.root_state;
      if (is_term_word(w)) {
        offer(symbols.symbol(w), cost);
        if (prev != wfst::kEpsilon && is_term_word(prev) && from_history) {
          offer(symbols.symbol(prev) + " " + symbols.symbol(w), prev_cost + cost);
        }
      }
      prev = w;
      prev_cost = cost;
    }
  }

  std::vector<RelevantTerm> terms;
  terms.reserve(best.size());
  for (auto& [surface, cost] : best) terms.push_back({surface, cost, 0});
  std::sort(terms.begin(), terms.end(), [](const RelevantTerm& a, const RelevantTerm& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    return a.surface < b.surface;
  });
  if (terms.size() > static_cast<std::size_t>(cfg.z)) terms.resize(cfg.z);
  for (std::size_t i = 0; i < terms.size(); ++i) terms[i].rank = static_cast<int>(i) + 1;
  result.terms = std::move(terms);
  result.no_overlap = result.terms.empty();
  return result;
}

}  // namespace elicit::extract
