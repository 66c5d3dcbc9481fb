#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "elicit/archive.hpp"
#include "elicit/error.hpp"
#include "elicit/ngram.hpp"
#include "lm_helpers.hpp"

using namespace elicit::lm;
using elicit::text::Tokens;
using testlm::doc_from_sentences;

namespace {

const CountOptions kNoPad{false};

Label lbl(const NGramCounts& c, const std::string& s) { return *c.symbols->find(s); }

double p(const NGramModel& m, std::vector<std::string> hist, const std::string& w) {
  std::vector<Label> h;
  for (const auto& t : hist) h.push_back(*m.symbols()->find(t));
  return m.prob(h, *m.symbols()->find(w));
}

std::vector<NGramTrie::NodeId> histories(const NGramModel& m) {
  std::vector<NGramTrie::NodeId> out{NGramTrie::kRoot};
  for (std::size_t x = 1; x < m.trie().size_upto(m.order() - 1); ++x) {
    out.push_back(static_cast<NGramTrie::NodeId>(x));
  }
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("counts without padding") {
  const std::vector<Tokens> s{{"a", "b", "a", "c"}};
  const auto c2 = count_ngrams(s, 2, kNoPad);
  CHECK(c2.count_of(Tokens{"a", "b"}) == 1);
  CHECK(c2.count_of(Tokens{"b", "a"}) == 1);
  CHECK(c2.count_of(Tokens{"a", "c"}) == 1);
  CHECK(c2.count_of(Tokens{"c", "a"}) == 0);
  const auto c1 = count_ngrams(s, 1, kNoPad);
  CHECK(c1.count_of(Tokens{"a"}) == 2);
  CHECK(c1.count_of(Tokens{"b"}) == 1);
  CHECK(c1.count_of(Tokens{"c"}) == 1);
  CHECK_THROWS_AS(count_ngrams({}, 2), elicit::Error);
  CHECK_THROWS_AS(count_ngrams({{}}, 2), elicit::Error);
  CHECK_THROWS_AS(count_ngrams(s, 6), elicit::Error);
}

TEST_CASE("counts match a sliding-window oracle") {
  const std::vector<Tokens> s{{"x", "y", "x", "y", "z"}, {"y", "x", "y"}};
  const auto c = count_ngrams(s, 3);
  std::map<Tokens, std::uint64_t> want;
  for (const auto& sent : s) {
    Tokens padded{"<s>"};
    padded.insert(padded.end(), sent.begin(), sent.end());
    padded.push_back("</s>");
    for (std::size_t k = 1; k <= 3; ++k) {
      for (std::size_t i = 0; i + k <= padded.size(); ++i) {
        ++want[Tokens(padded.begin() + i, padded.begin() + i + k)];
      }
    }
  }
  std::size_t nodes = 0;
  for (const auto& [ng, n] : want) {
    CAPTURE(ng);
    CHECK(c.count_of(ng) == n);
    ++nodes;
  }
  CHECK(c.trie->size() == nodes + 1);
}

TEST_CASE("smoothing oracles on a b a c") {
  const std::vector<Tokens> s{{"a", "b", "a", "c"}};
  const auto c = count_ngrams(s, 2, kNoPad);
  EstimateOptions o;
  o.discount = 0.5;
  o.unk_floor = 0.0;
  CHECK(p(estimate(c, Method::witten_bell, 2, o), {"a"}, "b") == doctest::Approx(0.375).epsilon(1e-9));
  CHECK(p(estimate(c, Method::absolute, 2, o), {"a"}, "b") == doctest::Approx(0.375).epsilon(1e-9));
  CHECK(p(estimate(c, Method::kneser_ney, 2, o), {"a"}, "b") ==
        doctest::Approx(0.25 + 0.5 / 3.0).epsilon(1e-9));
  // With the default floor the values move by far less than 1e-6.
  EstimateOptions floor = o;
  floor.unk_floor = 1e-6;
  CHECK(std::abs(p(estimate(c, Method::kneser_ney, 2, floor), {"a"}, "b") - 0.41666667) < 1e-6);
  CHECK(std::abs(p(estimate(c, Method::witten_bell, 2, floor), {"a"}, "b") - 0.375) < 1e-6);
}

TEST_CASE("perplexity and path weight under a unigram MLE") {
  const std::vector<Tokens> s{{"a", "a", "b"}};
  const auto c = count_ngrams(s, 1, kNoPad);
  EstimateOptions o;
  o.unk_floor = 0.0;
  const auto m = estimate(c, Method::katz, 1, o);
  const Tokens aab{"a", "a", "b"};
  CHECK(perplexity(m, std::span<const std::string>(aab)) ==
        doctest::Approx(std::cbrt(27.0 / 4.0)).epsilon(1e-12));
  CHECK(std::abs(perplexity(m, std::span<const std::string>(aab)) - 1.8899) < 1e-4);
  const Tokens ab{"a", "b"};
  const double want = -std::log(2.0 / 3.0) - std::log(1.0 / 3.0);
  CHECK(sequence_logprob(m, std::span<const std::string>(ab)) == doctest::Approx(want));
  const auto a = to_wfst(m);
  const auto pw = elicit::wfst::path_weight(a.fst, std::span<const std::string>(ab));
  REQUIRE(pw.has_value());
  CHECK(*pw == doctest::Approx(want).epsilon(1e-12));
  CHECK(std::abs(*pw - 1.5041) < 1e-4);
  CHECK(sequence_logprob(m, std::span<const std::string>()) == 0.0);
  CHECK_THROWS_AS(perplexity(m, std::span<const std::string>()), elicit::Error);
}

TEST_CASE("unknown words stay finite") {
  const auto c = count_ngrams({{"a", "b"}}, 3);
  for (Method meth : kMethods) {
    const auto m = estimate(c, meth, 3);
    const Tokens t{"zzz", "a", "qq"};
    CHECK(std::isfinite(sequence_logprob(m, std::span<const std::string>(t))));
    CHECK(sequence_logprob(m, std::span<const std::string>(t)) > 0.0);
  }
}

TEST_CASE("katz is MLE when every count is trusted") {
  std::vector<Tokens> s(5, Tokens{"a", "b", "a", "c"});
  const auto c = count_ngrams(s, 2, kNoPad);
  EstimateOptions o;
  o.unk_floor = 0.0;
  const auto m = estimate(c, Method::katz, 2, o);
  CHECK(p(m, {"a"}, "b") == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p(m, {"b"}, "a") == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("a single-type corpus predicts that type with near certainty") {
  const auto c = count_ngrams({{"a", "a", "a"}}, 2, kNoPad);
  for (Method meth : kMethods) {
    const auto m = estimate(c, meth, 1);
    CHECK(p(m, {}, "a") == doctest::Approx(1.0).epsilon(1e-5));
    const auto fst = to_wfst(m);
    const Tokens aaa{"a", "a", "a"};
    CHECK(*elicit::wfst::path_weight(fst.fst, std::span<const std::string>(aaa)) < 1e-5);
  }
  CHECK_THROWS_AS(estimate(c, Method::katz, 3), elicit::Error);
}

TEST_CASE("every history is normalized") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> vsize(1, 8), tokens(1, 40);
  for (int corpus = 0; corpus < 50; ++corpus) {
    const auto sentences = testlm::random_corpus(rng, vsize(rng), tokens(rng));
    for (bool pad : {true, false}) {
      NGramCounts c;
      try {
        c = count_ngrams(sentences, 3, CountOptions{pad});
      } catch (const elicit::Error&) {
        continue;
      }
      for (Method meth : kMethods) {
        for (int order = 1; order <= 3; ++order) {
          const auto m = estimate(c, meth, order);
          for (auto h : histories(m)) {
            CAPTURE(to_string(meth));
            CAPTURE(order);
            CHECK(std::abs(testlm::mass(m, h) - 1.0) <= 1e-6);
          }
        }
      }
    }
  }
}

TEST_CASE("kneser-ney with raw lower counts is absolute discounting") {
  std::mt19937_64 rng(99);
  for (int corpus = 0; corpus < 10; ++corpus) {
    const auto c = count_ngrams(testlm::random_corpus(rng, 6, 60), 4);
    EstimateOptions raw;
    raw.kneser_ney_raw_lower_counts = true;
    for (int order = 1; order <= 4; ++order) {
      const auto kn = estimate(c, Method::kneser_ney, order, raw);
      const auto ab = estimate(c, Method::absolute, order, raw);
      for (auto h : histories(kn)) {
        for (auto w : kn.vocabulary()) CHECK(std::abs(kn.prob_at(h, w) - ab.prob_at(h, w)) <= 1e-9);
      }
    }
  }
}

TEST_CASE("repeated sentence: perplexity does not increase with order") {
  const Tokens sent{"ticket", "rout", "queue", "ticket", "escal", "agent"};
  const std::vector<Tokens> corpus(5, sent);
  const auto c = count_ngrams(corpus, 5);
  for (Method meth : kMethods) {
    double prev = INFINITY;
    for (int order = 1; order <= 5; ++order) {
      const double ppl = perplexity(estimate(c, meth, order), std::span<const std::string>(sent));
      CAPTURE(to_string(meth));
      CAPTURE(order);
      CHECK(ppl <= prev + 1e-9);
      prev = ppl;
    }
  }
}

TEST_CASE("backoff automaton reproduces the recursion") {
  std::mt19937_64 rng(17);
  int shadow_free = 0, total = 0;
  double max_slack = 0.0;
  for (int corpus = 0; corpus < 12; ++corpus) {
    const auto sentences = testlm::random_corpus(rng, 5, 80);
    const auto c = count_ngrams(sentences, 5, CountOptions{corpus % 3 != 0});
    std::uniform_int_distribution<int> word(0, 5), len(1, 8);  // w5 is out of vocabulary
    for (Method meth : kMethods) {
      for (int order = 1; order <= 5; ++order) {
        const auto m = estimate(c, meth, order);
        const auto a = to_wfst(m);
        for (int i = 0; i < 10; ++i) {
          Tokens s;
          const int n = len(rng);
          for (int k = 0; k < n; ++k) s.push_back("w" + std::to_string(word(rng)));
          const auto labels = m.map_tokens(s);
          const double exact = sequence_logprob(m, std::span<const Label>(labels));
          const auto canon = testlm::canonical_cost(a, labels);
          REQUIRE(canon.has_value());
          CHECK(*canon == doctest::Approx(exact).epsilon(1e-9));
          const auto pw = elicit::wfst::path_weight(a.fst, std::span<const Label>(labels));
          REQUIRE(pw.has_value());
          CHECK(*pw <= exact + 1e-9);
          max_slack = std::max(max_slack, exact - *pw);
          ++total;
          if (*pw >= *canon - 1e-12) {
            ++shadow_free;
            CHECK(std::abs(*pw - exact) <= 1e-6);
          }
        }
      }
    }
  }
  MESSAGE("shadow-free " << shadow_free << "/" << total << ", max slack " << max_slack);
  CHECK(shadow_free > total / 2);
}

TEST_CASE("automaton over a one-word vocabulary accepts a*") {
  const auto c = count_ngrams({{"a"}}, 1, kNoPad);
  const auto a = to_wfst(estimate(c, Method::witten_bell, 1));
  const Tokens t(5, "a");
  const auto w = elicit::wfst::path_weight(a.fst, std::span<const std::string>(t));
  REQUIRE(w.has_value());
  CHECK(*w < 1e-5);
}

TEST_CASE("model keys and grid slots") {
  CHECK(to_string(ModelKey{Method::kneser_ney, 3}) == "kneser_ney-3");
  CHECK(parse_model_key("witten_bell-5") == ModelKey{Method::witten_bell, 5});
  CHECK_FALSE(parse_model_key("katz-6").has_value());
  CHECK_FALSE(parse_model_key("foo-1").has_value());
  for (std::size_t i = 0; i < kGridSize; ++i) CHECK(grid_index(grid_key(i)) == i);
  CHECK(grid_key(0) == ModelKey{Method::katz, 1});
  CHECK(grid_key(1) == ModelKey{Method::witten_bell, 1});
}

TEST_CASE("grid: cardinality, parallel equals serial, entries match single builds") {
  std::mt19937_64 rng(5);
  std::vector<elicit::text::Document> repo;
  for (int d = 0; d < 3; ++d) repo.push_back(doc_from_sentences("d" + std::to_string(d), testlm::random_corpus(rng, 7, 120)));
  const auto g = build_grid(repo);
  const auto gs = build_grid_serial(repo);
  CHECK(g.size() == 20);
  CHECK(g.fingerprint() == gs.fingerprint());

  const auto dir = std::filesystem::temp_directory_path() / "elicit_test_grid";
  std::filesystem::remove_all(dir);
  write_archive(g, dir / "a" / "manifest.json");
  write_archive(gs, dir / "b" / "manifest.json");
  for (std::size_t i = 0; i < kGridSize; ++i) {
    const auto f = to_string(grid_key(i)) + ".arpa";
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
  CHECK(slurp(dir / "a" / "manifest.json") == slurp(dir / "b" / "manifest.json"));

  const auto c = count_ngrams(corpus_sentences(repo), 5);
  for (std::size_t i = 0; i < kGridSize; i += 3) {
    const auto key = grid_key(i);
    const auto single = estimate(c, key.method, key.order);
    const auto& in_grid = g.model(key);
    for (auto h : histories(single)) {
      for (auto w : single.vocabulary()) CHECK(single.prob_at(h, w) == in_grid.prob_at(h, w));
    }
  }

  const Tokens window{"w1", "w2", "w3", "w1", "w9"};
  const auto s1 = select_model(g, window);
  const auto s2 = select_model_serial(g, window);
  CHECK(s1.key == s2.key);
  CHECK(s1.perplexities == s2.perplexities);
  CHECK_THROWS_AS(select_model(g, Tokens{}), elicit::Error);

  SUBCASE("archive round trip") {
    const auto loaded = load_archive(dir / "a" / "manifest.json", g.fingerprint());
    const auto s3 = select_model(loaded, window);
    CHECK(s3.key == s1.key);
    for (std::size_t i = 0; i < kGridSize; ++i) {
      CHECK(s3.perplexities[i] == doctest::Approx(s1.perplexities[i]).epsilon(1e-12));
    }
    CHECK_THROWS_AS(load_archive(dir / "a" / "manifest.json", std::string("deadbeef")), elicit::Error);
    // Re-saving the loaded grid reproduces the files.
    write_archive(loaded, dir / "c" / "manifest.json");
    CHECK(slurp(dir / "c" / "kneser_ney-3.arpa") == slurp(dir / "a" / "kneser_ney-3.arpa"));
  }
}

TEST_CASE("ties go to the first key") {
  const auto c = count_ngrams({{"a", "b"}}, 1);
  const auto m = estimate(c, Method::katz, 1);
  const ModelGrid g("fp", c.symbols, std::vector<NGramModel>(kGridSize, m));
  const auto s = select_model(g, Tokens{"a", "b"});
  CHECK(s.key == ModelKey{Method::katz, 1});
}

TEST_CASE("a repeated sentence selects a higher order for every method") {
  const Tokens sent{"disput", "system", "support", "concurr", "user", "system", "log"};
  const std::vector<elicit::text::Document> repo{doc_from_sentences("r", std::vector<Tokens>(10, sent))};
  const auto g = build_grid(repo);
  const auto s = select_model(g, sent);
  CHECK(s.key.order >= 2);
  for (Method meth : kMethods) {
    int best = 1;
    for (int order = 2; order <= 5; ++order) {
      if (s.perplexities[grid_index({meth, order})] < s.perplexities[grid_index({meth, best})]) best = order;
    }
    CAPTURE(to_string(meth));
    CHECK(best >= 2);
  }
}
