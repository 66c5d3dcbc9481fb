#include <algorithm>
#include <cmath>
#include <limits>

#include "elicit/error.hpp"
#include "elicit/ngram.hpp"

namespace elicit::lm {

namespace {

using NodeId = NGramTrie::NodeId;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Katz's Good-Turing discount with counts above 4 trusted:
//   d_r = (r*/r - c) / (1 - c),  r* = (r+1) n_{r+1} / n_r,  c = 5 n_5 / n_1.
// A ratio outside (0, 1] leaves that count undiscounted.
std::array<double, 5> katz_discounts(const NGramCounts& counts, int order) {
  std::array<double, 5> d{1.0, 1.0, 1.0, 1.0, 1.0};
  std::array<double, 7> n{};
  const auto& trie = *counts.trie;
  for (std::size_t x = trie.size_upto(order - 1); x < trie.size_upto(order); ++x) {
    const auto c = counts.count[x];
    if (c >= 1 && c <= 6) n[c] += 1.0;
  }
  if (n[1] <= 0.0) return d;
  const double common = 5.0 * n[5] / n[1];
  if (common >= 1.0) return d;
  for (int r = 1; r <= 4; ++r) {
    if (n[r] <= 0.0) continue;
    const double rstar = (r + 1) * n[r + 1] / n[r];
    const double dr = (rstar / r - common) / (1.0 - common);
    if (dr > 0.0 && dr <= 1.0) d[r] = dr;
  }
  return d;
}

double default_discount(const NGramCounts& counts) {
  double n1 = 0.0, n2 = 0.0;
  const auto& trie = *counts.trie;
  for (std::size_t x = trie.size_upto(1); x < trie.size_upto(2); ++x) {
    if (counts.count[x] == 1) n1 += 1.0;
    if (counts.count[x] == 2) n2 += 1.0;
  }
  if (n1 + 2.0 * n2 <= 0.0) return 0.5;
  const double d = n1 / (n1 + 2.0 * n2);
  return (d > 0.0 && d < 1.0) ? d : 0.5;
}

}  // namespace

NGramModel estimate(const NGramCounts& counts, Method method, int order,
                    const EstimateOptions& options) {
  if (order < 1 || order > counts.order) {
    throw Error(ErrorCode::invalid_argument,
                "estimate: order " + std::to_string(order) + " exceeds counted order " +
                    std::to_string(counts.order));
  }
  if (!(options.unk_floor >= 0.0 && options.unk_floor < 1.0)) {
    throw Error(ErrorCode::invalid_argument, "estimate: unk_floor must be in [0, 1)");
  }
  const auto& trie = *counts.trie;

  NGramModel m;
  m.method_ = method;
  m.order_ = order;
  m.trie_ = counts.trie;
  m.symbols_ = counts.symbols;
  m.bos_ = counts.bos;
  m.eos_ = counts.eos;
  m.unk_ = counts.unk;
  m.params_.unk_floor = options.unk_floor;
  m.params_.padded = counts.options.pad_sentences;
  m.params_.discount = options.discount.value_or(default_discount(counts));
  if (!(m.params_.discount >= 0.0 && m.params_.discount < 1.0)) {
    throw Error(ErrorCode::invalid_argument, "estimate: discount must be in [0, 1)");
  }
  for (int k = 2; k <= order; ++k) {
    const auto d = katz_discounts(counts, k);
    std::copy(d.begin(), d.end(), m.params_.katz[k].begin());
  }

  const std::size_t n_nodes = trie.size_upto(order);
  m.prob_.assign(n_nodes, kNaN);
  m.backoff_.assign(n_nodes, 1.0);
  m.history_.assign(n_nodes, 0);
  m.unigram_.assign(counts.symbols->size(), kNaN);

  const bool kn_lower = method == Method::kneser_ney && !options.kneser_ney_raw_lower_counts;
  // Count used for node x at a level below the model's top order.
  auto lower_count = [&](NodeId x) -> double {
    if (kn_lower && trie.first_word(x) != counts.bos) {
      return static_cast<double>(counts.continuation[x]);
    }
    return static_cast<double>(counts.count[x]);
  };

  // Unigram level.
  {
    double total = 0.0;
    std::vector<std::pair<Label, double>> seen;
    for (std::size_t x = 1; x < trie.size_upto(1); ++x) {
      const auto node = static_cast<NodeId>(x);
      const Label w = trie.word(node);
      if (w == counts.bos) continue;
      const double a = order >= 2 ? lower_count(node) : static_cast<double>(counts.count[x]);
      seen.emplace_back(w, a);
      total += a;
      m.vocabulary_.push_back(w);
    }
    m.vocabulary_.push_back(counts.unk);
    std::sort(m.vocabulary_.begin(), m.vocabulary_.end());
    m.vocabulary_.erase(std::unique(m.vocabulary_.begin(), m.vocabulary_.end()),
                        m.vocabulary_.end());
    const double eps = options.unk_floor;
    const double spread = eps / static_cast<double>(m.vocabulary_.size());
    for (Label w : m.vocabulary_) m.unigram_[w] = spread;
    if (total > 0.0) {
      for (auto [w, a] : seen) m.unigram_[w] += (1.0 - eps) * a / total;
    } else {
      for (Label w : m.vocabulary_) m.unigram_[w] = 1.0 / m.vocabulary_.size();
    }
    for (std::size_t x = 1; x < trie.size_upto(1); ++x) {
      const auto node = static_cast<NodeId>(x);
      if (trie.word(node) != counts.bos) m.prob_[x] = m.unigram_[trie.word(node)];
    }
  }

  const double D = m.params_.discount;
  std::vector<std::pair<NodeId, double>> kids;
  std::vector<double> lower;
  for (int level = 2; level <= order; ++level) {
    const bool top = level == order;
    const auto& katz_d = m.params_.katz[level];
    for (std::size_t hx = trie.size_upto(level - 2); hx < trie.size_upto(level - 1); ++hx) {
      const auto h = static_cast<NodeId>(hx);
      kids.clear();
      double total = 0.0;
      for (NodeId c : trie.children(h)) {
        const double a = top ? static_cast<double>(counts.count[c]) : lower_count(c);
        if (a > 0.0) {
          kids.emplace_back(c, a);
          total += a;
        }
      }
      if (kids.empty()) continue;
      const double types = static_cast<double>(kids.size());
      lower.resize(kids.size());
      const NodeId backed_off = trie.suffix(h);
      for (std::size_t i = 0; i < kids.size(); ++i) {
        lower[i] = m.prob_at(backed_off, trie.word(kids[i].first));
      }

      switch (method) {
        case Method::witten_bell: {
          const double bow = types / (total + types);
          m.backoff_[h] = bow;
          for (std::size_t i = 0; i < kids.size(); ++i) {
            m.prob_[kids[i].first] = (kids[i].second + types * lower[i]) / (total + types);
          }
          break;
        }
        case Method::absolute:
        case Method::kneser_ney: {
          const double bow = D * types / total;
          m.backoff_[h] = bow;
          for (std::size_t i = 0; i < kids.size(); ++i) {
            m.prob_[kids[i].first] = std::max(kids[i].second - D, 0.0) / total + bow * lower[i];
          }
          break;
        }
        case Method::katz: {
          double discounted = 0.0;
          double lower_seen = 0.0;
          for (std::size_t i = 0; i < kids.size(); ++i) {
            const auto r = static_cast<std::size_t>(kids[i].second);
            const double d = r <= 4 ? katz_d[r] : 1.0;
            discounted += d * kids[i].second / total;
            lower_seen += lower[i];
          }
          const double unseen_lower = std::max(1.0 - lower_seen, 0.0);
          double leftover = std::max(1.0 - discounted, options.unk_floor);
          double alpha = unseen_lower > 0.0 ? leftover / unseen_lower : 0.0;
          if (unseen_lower <= 0.0) leftover = 0.0;
          if (alpha > 1.0) {
            alpha = 1.0;
            leftover = unseen_lower;
          }
          const double scale = (1.0 - leftover) / discounted;
          m.backoff_[h] = alpha;
          for (std::size_t i = 0; i < kids.size(); ++i) {
            const auto r = static_cast<std::size_t>(kids[i].second);
            const double d = r <= 4 ? katz_d[r] : 1.0;
            m.prob_[kids[i].first] = d * kids[i].second / total * scale;
          }
          break;
        }
      }
    }
  }

  // Histories are nodes with a stored child. Make them prefix-closed: a
  // history that is not itself stored gets its backoff probability
  // materialized, which leaves the distribution unchanged.
  for (std::size_t x = trie.size_upto(1); x < n_nodes; ++x) {
    if (!std::isnan(m.prob_[x])) m.history_[trie.parent(static_cast<NodeId>(x))] = 1;
  }
  for (int level = order - 1; level >= 1; --level) {
    for (std::size_t x = trie.size_upto(level - 1); x < trie.size_upto(level); ++x) {
      const auto node = static_cast<NodeId>(x);
      if (!m.history_[x] || !std::isnan(m.prob_[x])) continue;
      if (level == 1 && trie.word(node) == counts.bos) continue;
      m.prob_[x] = m.prob_at(trie.parent(node), trie.word(node));
      m.history_[trie.parent(node)] = 1;
    }
  }
  m.history_[NGramTrie::kRoot] = 1;
  return m;
}

}  // namespace elicit::lm
