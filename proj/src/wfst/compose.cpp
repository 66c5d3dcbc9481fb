#include <deque>
#include <unordered_map>

#include "elicit/error.hpp"
#include "elicit/wfst.hpp"

namespace elicit::wfst {

namespace {

// Filter states of the epsilon-sequencing filter:
//   0: free; any move allowed
//   1: t2 has moved alone on an input epsilon; t1 may not move alone
//   2: t1 has moved alone on an output epsilon; t2 may not move alone
// A joint epsilon move (both sides) is only allowed from 0. This admits
// exactly one alignment per pair of paths with matching middle strings.
constexpr std::uint8_t kFree = 0;
constexpr std::uint8_t kRightMoved = 1;
constexpr std::uint8_t kLeftMoved = 2;

class Composer {
 public:
  Composer(const Wfst& t1, const Wfst& t2)
      : t1_(t1), t2_(t2), out_(t1.symbols_ptr()) {}

  ComposeResult run() {
    if (t1_.start() == kNoState || t2_.start() == kNoState) {
      const StateId s = out_.add_state();
      out_.set_start(s);
      origin_.push_back({kNoState, kNoState, kFree});
      return {std::move(out_), std::move(origin_)};
    }
    out_.set_start(intern({t1_.start(), t2_.start(), kFree}));
    while (!queue_.empty()) {
      const StateId s = queue_.front();
      queue_.pop_front();
      expand(s);
    }
    out_.sort_arcs();
    return {std::move(out_), std::move(origin_)};
  }

 private:
  std::uint64_t key(const ComposeTuple& t) const {
    const auto n2 = static_cast<std::uint64_t>(t2_.num_states());
    return (static_cast<std::uint64_t>(t.left) * n2 + static_cast<std::uint64_t>(t.right)) * 3 +
           t.filter;
  }

  StateId intern(const ComposeTuple& t) {
    const auto k = key(t);
    if (auto it = index_.find(k); it != index_.end()) return it->second;
    const StateId s = out_.add_state();
    index_.emplace(k, s);
    origin_.push_back(t);
    queue_.push_back(s);
    return s;
  }

  void expand(StateId s) {
    const ComposeTuple cur = origin_[s];
    const StateId q1 = cur.left;
    const StateId q2 = cur.right;
    if (t1_.is_final(q1) && t2_.is_final(q2)) {
      out_.set_final(s, t1_.final_weight(q1) + t2_.final_weight(q2));
    }
    const auto right_eps = t2_.arcs_with_ilabel(q2, kEpsilon);

    for (const Arc& a1 : t1_.arcs(q1)) {
      if (a1.olabel != kEpsilon) {
        for (const Arc& a2 : t2_.arcs_with_ilabel(q2, a1.olabel)) {
          add(s, a1.ilabel, a2.olabel, a1.weight + a2.weight, {a1.dst, a2.dst, kFree});
        }
        continue;
      }
      if (cur.filter != kRightMoved) {
        add(s, a1.ilabel, kEpsilon, a1.weight, {a1.dst, q2, kLeftMoved});
      }
      if (cur.filter == kFree) {
        for (const Arc& a2 : right_eps) {
          add(s, a1.ilabel, a2.olabel, a1.weight + a2.weight, {a1.dst, a2.dst, kFree});
        }
      }
    }
    if (cur.filter != kLeftMoved) {
      for (const Arc& a2 : right_eps) {
        add(s, kEpsilon, a2.olabel, a2.weight, {q1, a2.dst, kRightMoved});
      }
    }
  }

  void add(StateId src, Label il, Label ol, double w, const ComposeTuple& dst) {
    const StateId d = intern(dst);
    out_.add_arc(src, Arc{il, ol, w, d});
  }

  const Wfst& t1_;
  const Wfst& t2_;
  Wfst out_;
  std::vector<ComposeTuple> origin_;
  std::unordered_map<std::uint64_t, StateId> index_;
  std::deque<StateId> queue_;
};

}  // namespace

ComposeResult compose_with_origin(const Wfst& t1, const Wfst& t2) {
  if (t1.symbols_ptr() != t2.symbols_ptr()) {
    throw Error(ErrorCode::invalid_argument, "compose: machines must share a symbol table");
  }
  return Composer(t1, t2).run();
}

Wfst compose(const Wfst& t1, const Wfst& t2) { return compose_with_origin(t1, t2).fst; }

}  // namespace elicit::wfst
