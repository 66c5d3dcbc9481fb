#include <algorithm>
#include <cmath>
#include <queue>

#include "elicit/error.hpp"
#include "elicit/wfst.hpp"

namespace elicit::wfst {

namespace {

// Exact cost-to-go from every state (reverse Dijkstra seeded with final
// weights). Used as the A* potential for n-best search.
std::vector<double> distances_to_final(const Wfst& t) {
  const StateId n = t.num_states();
  std::vector<std::vector<std::pair<StateId, double>>> reverse(n);
  for (StateId s = 0; s < n; ++s) {
    for (const Arc& a : t.arcs(s)) reverse[a.dst].emplace_back(s, a.weight);
  }
  std::vector<double> dist(n, kInfinity);
  using Item = std::pair<double, StateId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  for (StateId s = 0; s < n; ++s) {
    if (t.is_final(s)) {
      dist[s] = t.final_weight(s);
      queue.emplace(dist[s], s);
    }
  }
  while (!queue.empty()) {
    auto [d, s] = queue.top();
    queue.pop();
    if (d > dist[s]) continue;
    for (auto [prev, w] : reverse[s]) {
      if (d + w < dist[prev]) {
        dist[prev] = d + w;
        queue.emplace(dist[prev], prev);
      }
    }
  }
  return dist;
}

struct PartialPath {
  int parent;
  PathArc arc;
};

struct Entry {
  double priority;
  double cost;
  double final_weight;  // only meaningful for completions
  StateId state;        // kNoState marks a completed path
  int node;
  std::uint64_t seq;
};

struct EntryAfter {
  bool operator()(const Entry& a, const Entry& b) const {
    if (a.priority != b.priority) return a.priority > b.priority;
    return a.seq > b.seq;
  }
};

}  // namespace

std::vector<Path> n_shortest_paths(const Wfst& t, int n) {
  if (n < 1) throw Error(ErrorCode::invalid_argument, "n_shortest_paths: n must be >= 1");
  std::vector<Path> result;
  if (t.start() == kNoState) return result;
  const auto to_final = distances_to_final(t);
  if (to_final[t.start()] == kInfinity) return result;

  std::vector<PartialPath> pool;
  std::vector<int> expanded(t.num_states(), 0);
  std::priority_queue<Entry, std::vector<Entry>, EntryAfter> queue;
  std::uint64_t seq = 0;
  queue.push({to_final[t.start()], 0.0, 0.0, t.start(), -1, seq++});

  while (!queue.empty() && static_cast<int>(result.size()) < n) {
    const Entry e = queue.top();
    queue.pop();
    if (e.state == kNoState) {
      Path path;
      for (int i = e.node; i >= 0; i = pool[i].parent) path.arcs.push_back(pool[i].arc);
      std::reverse(path.arcs.begin(), path.arcs.end());
      path.final_weight = e.final_weight;
      path.total_weight = path.recomputed_weight();
      result.push_back(std::move(path));
      continue;
    }
    if (expanded[e.state]++ >= n) continue;
    if (t.is_final(e.state)) {
      const double fw = t.final_weight(e.state);
      queue.push({e.cost + fw, e.cost + fw, fw, kNoState, e.node, seq++});
    }
    for (const Arc& a : t.arcs(e.state)) {
      if (to_final[a.dst] == kInfinity) continue;
      pool.push_back({e.node, PathArc{e.state, a.ilabel, a.olabel, a.weight, a.dst}});
      const double g = e.cost + a.weight;
      queue.push({g + to_final[a.dst], g, 0.0, a.dst, static_cast<int>(pool.size()) - 1, seq++});
    }
  }

  auto by_weight_then_labels = [](const Path& a, const Path& b) {
    if (a.total_weight != b.total_weight) return a.total_weight < b.total_weight;
    return a.olabels() < b.olabels();
  };
  std::stable_sort(result.begin(), result.end(), by_weight_then_labels);
  if (static_cast<int>(result.size()) < n) return result;

  // The search above gets the n best weights right, but which of several
  // paths tied at the n-th weight it keeps depends on expansion order. Collect
  // every path up to that weight and order them properly; give up on that
  // (keeping the search result) if zero-weight cycles make the ties unbounded.
  const double bound = result.back().total_weight;
  const double slack = 1e-9 * std::max(1.0, std::abs(bound));
  constexpr std::size_t kMaxSteps = std::size_t{1} << 22;
  const std::size_t max_paths = static_cast<std::size_t>(n) + 4096;
  std::vector<Path> tied;
  std::vector<PathArc> stack;
  std::size_t steps = 0;
  bool overflow = false;
  auto dfs = [&](auto&& self, StateId s, double g) -> void {
    if (overflow) return;
    if (++steps > kMaxSteps || tied.size() > max_paths) {
      overflow = true;
      return;
    }
    if (t.is_final(s) && g + t.final_weight(s) <= bound + slack) {
      Path p;
      p.arcs = stack;
      p.final_weight = t.final_weight(s);
      p.total_weight = p.recomputed_weight();
      tied.push_back(std::move(p));
    }
    for (const Arc& a : t.arcs(s)) {
      if (g + a.weight + to_final[a.dst] > bound + slack) continue;
      stack.push_back(PathArc{s, a.ilabel, a.olabel, a.weight, a.dst});
      self(self, a.dst, g + a.weight);
      stack.pop_back();
    }
  };
  dfs(dfs, t.start(), 0.0);
  if (overflow || tied.size() < result.size()) return result;
  std::stable_sort(tied.begin(), tied.end(), by_weight_then_labels);
  tied.resize(static_cast<std::size_t>(n));
  return tied;
}

std::optional<double> shortest_distance(const Wfst& t) {
  if (t.start() == kNoState) return std::nullopt;
  std::vector<double> dist(t.num_states(), kInfinity);
  using Item = std::pair<double, StateId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[t.start()] = 0.0;
  queue.emplace(0.0, t.start());
  double best = kInfinity;
  while (!queue.empty()) {
    auto [d, s] = queue.top();
    queue.pop();
    if (d > dist[s]) continue;
    if (d >= best) break;
    if (t.is_final(s)) best = std::min(best, d + t.final_weight(s));
    for (const Arc& a : t.arcs(s)) {
      if (d + a.weight < dist[a.dst]) {
        dist[a.dst] = d + a.weight;
        queue.emplace(dist[a.dst], a.dst);
      }
    }
  }
  if (best == kInfinity) return std::nullopt;
  return best;
}

std::optional<double> path_weight(const Wfst& t, std::span<const Label> labels) {
  const Wfst chain = linear_chain(labels, t.symbols_ptr());
  return shortest_distance(compose(chain, t));
}

std::optional<double> path_weight(const Wfst& t, std::span<const std::string> tokens) {
  std::vector<Label> labels;
  labels.reserve(tokens.size());
  for (const auto& tok : tokens) {
    auto label = t.symbols().find(tok);
    if (!label) return std::nullopt;
    labels.push_back(*label);
  }
  return path_weight(t, std::span<const Label>(labels));
}

}  // namespace elicit::wfst
