#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the code under test beyond the data types.

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "elicit/wfst.hpp"

namespace oracle {

using elicit::wfst::Label;
using elicit::wfst::StateId;

struct EnumPath {
  std::vector<Label> in;   // epsilons removed
  std::vector<Label> out;
  double weight = 0.0;
};

// Every successful path of an acyclic machine, by depth-first search.
inline std::vector<EnumPath> enumerate_paths(const elicit::wfst::Wfst& t) {
  std::vector<EnumPath> out;
  if (t.start() == elicit::wfst::kNoState) return out;
  EnumPath cur;
  auto dfs = [&](auto&& self, StateId s) -> void {
    if (t.is_final(s)) {
      EnumPath done = cur;
      done.weight += t.final_weight(s);
      out.push_back(std::move(done));
    }
    for (const auto& a : t.arcs(s)) {
      const auto saved = cur;
      if (a.ilabel != 0) cur.in.push_back(a.ilabel);
      if (a.olabel != 0) cur.out.push_back(a.olabel);
      cur.weight += a.weight;
      self(self, a.dst);
      cur = saved;
    }
  };
  dfs(dfs, t.start());
  return out;
}

// Composition by pairing every path of t1 with every path of t2 whose input
// equals the first path's output.
inline std::vector<EnumPath> brute_force_compose(const elicit::wfst::Wfst& t1,
                                                 const elicit::wfst::Wfst& t2) {
  std::vector<EnumPath> out;
  const auto p1 = enumerate_paths(t1);
  const auto p2 = enumerate_paths(t2);
  for (const auto& a : p1) {
    for (const auto& b : p2) {
      if (a.out == b.in) out.push_back({a.in, b.out, a.weight + b.weight});
    }
  }
  return out;
}

inline void sort_paths(std::vector<EnumPath>& paths) {
  std::sort(paths.begin(), paths.end(), [](const EnumPath& a, const EnumPath& b) {
    return std::tie(a.in, a.out, a.weight) < std::tie(b.in, b.out, b.weight);
  });
}

// Random acyclic transducer: arcs only go from lower to higher state ids.
inline elicit::wfst::Wfst random_acyclic(std::mt19937_64& rng,
                                         const std::shared_ptr<elicit::wfst::SymbolTable>& symbols,
                                         int max_states, int n_symbols, double eps_rate = 0.25) {
  std::uniform_int_distribution<int> n_states_dist(1, max_states);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> sym(1, n_symbols);
  elicit::wfst::Wfst t(symbols);
  const int n = n_states_dist(rng);
  for (int i = 0; i < n; ++i) t.add_state();
  t.set_start(0);
  for (int i = 0; i < n; ++i) {
    if (unit(rng) < 0.4 || i == n - 1) t.set_final(i, std::round(unit(rng) * 8.0) / 4.0);
    for (int j = i + 1; j < n; ++j) {
      const int arcs = static_cast<int>(unit(rng) * 2.2);
      for (int k = 0; k < arcs; ++k) {
        const Label in = unit(rng) < eps_rate ? 0 : sym(rng);
        const Label out = unit(rng) < eps_rate ? 0 : sym(rng);
        t.add_arc(i, {in, out, std::round(unit(rng) * 12.0) / 4.0, j});
      }
    }
  }
  t.sort_arcs();
  return t;
}

// Unit-cost edit distance by the textbook full-matrix recurrence.
template <typename T>
std::size_t edit_distance(const std::vector<T>& a, const std::vector<T>& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                          d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
  }
  return d[a.size()][b.size()];
}

}  // namespace oracle
