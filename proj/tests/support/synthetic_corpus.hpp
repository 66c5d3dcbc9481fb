#pragma once

// Neutral pseudo-word corpus for ranking and latency checks. Words are built
// from consonant-vowel syllables and kept only when normalization leaves
// them unchanged, so raw text and stems line up one to one.

#include <cmath>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "elicit/text.hpp"

namespace synth {

struct Corpus {
  std::vector<std::string> vocab;  // by decreasing frequency rank
  std::vector<elicit::text::Document> documents;
  std::size_t bytes = 0;
};

inline std::vector<std::string> pseudo_words(std::mt19937_64& rng, std::size_t n,
                                             const elicit::text::Stoplist& stop) {
  static const std::string consonants = "bdgklmnprtvz";
  static const std::string vowels = "aiou";
  std::uniform_int_distribution<int> syllables(2, 4);
  std::uniform_int_distribution<std::size_t> c(0, consonants.size() - 1), v(0, vowels.size() - 1);
  std::set<std::string> seen;
  std::vector<std::string> out;
  while (out.size() < n) {
    std::string w;
    for (int k = syllables(rng); k > 0; --k) {
      w += consonants[c(rng)];
      w += vowels[v(rng)];
    }
    if (elicit::text::normalize_token(w, stop) != w || !seen.insert(w).second) continue;
    out.push_back(w);
  }
  return out;
}

class Zipf {
 public:
  Zipf(std::size_t n, double s) : cdf_(n) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) cdf_[i] = total += 1.0 / std::pow(static_cast<double>(i + 1), s);
    for (auto& x : cdf_) x /= total;
  }
  std::size_t operator()(std::mt19937_64& rng) const {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    return static_cast<std::size_t>(std::lower_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin());
  }

 private:
  std::vector<double> cdf_;
};

inline std::string sentence(std::mt19937_64& rng, const std::vector<std::string>& vocab, const Zipf& zipf,
                            int min_len, int max_len) {
  std::uniform_int_distribution<int> len(min_len, max_len);
  std::string s;
  for (int k = len(rng); k > 0; --k) {
    std::string w = vocab[zipf(rng)];
    if (s.empty()) w[0] = static_cast<char>(w[0] - 'a' + 'A');
    s += (s.empty() ? "" : " ") + w;
  }
  return s + ".";
}

inline Corpus make_corpus(std::uint64_t seed, std::size_t target_bytes = 500 * 1024,
                          std::size_t vocab_size = 4000) {
  std::mt19937_64 rng(seed);
  const auto stop = elicit::text::Stoplist::english();
  Corpus c;
  c.vocab = pseudo_words(rng, vocab_size, stop);
  const Zipf zipf(vocab_size, 1.05);
  std::uniform_int_distribution<int> doc_len(20, 60);
  while (c.bytes < target_bytes) {
    std::string raw;
    for (int k = doc_len(rng); k > 0; --k) raw += sentence(rng, c.vocab, zipf, 6, 16) + " ";
    raw.pop_back();
    char id[32];
    std::snprintf(id, sizeof id, "doc%04zu.txt", c.documents.size());
    c.bytes += raw.size();
    c.documents.push_back(elicit::text::make_document(id, id, std::move(raw), stop));
  }
  return c;
}

}  // namespace synth
