#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <json.hpp>

#include "elicit/error.hpp"
#include "elicit/evaluation.hpp"
#include "oracles.hpp"

using namespace elicit;
using namespace elicit::eval;
using Tokens = text::Tokens;

namespace {

// Textbook H: average ranks, tie correction 1 - sum(t^3 - t) / (N^3 - N).
double oracle_h(const std::vector<std::vector<double>>& groups) {
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (double v : groups[g]) all.push_back({v, g});
  }
  std::sort(all.begin(), all.end());
  const double n = static_cast<double>(all.size());
  std::vector<double> rank_sum(groups.size(), 0.0);
  double ties = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) rank_sum[all[k].second] += avg;
    const double t = static_cast<double>(j - i);
    ties += t * t * t - t;
    i = j;
  }
  double h = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    h += rank_sum[g] * rank_sum[g] / static_cast<double>(groups[g].size());
  }
  h = 12.0 / (n * (n + 1.0)) * h - 3.0 * (n + 1.0);
  return h / (1.0 - ties / (n * n * n - n));
}

// Closed-form chi-squared upper tails for df 1 and 2.
double chi2_sf(double x, int df) {
  if (df == 1) return std::erfc(std::sqrt(x / 2.0));
  if (df == 2) return std::exp(-x / 2.0);
  return NAN;
}

Tokens random_tokens(std::mt19937_64& rng, int max_len) {
  std::uniform_int_distribution<int> len(0, max_len);
  std::uniform_int_distribution<int> sym(0, 3);
  Tokens t(len(rng));
  for (auto& s : t) s = std::string(1, static_cast<char>('a' + sym(rng)));
  return t;
}

}  // namespace

TEST_CASE("levenshtein examples") {
  CHECK(levenshtein(Tokens{"user", "login"}, Tokens{"user", "login"}) == 0);
  CHECK(levenshtein(Tokens{}, Tokens{"a", "b", "c"}) == 3);
  CHECK(levenshtein(Tokens{"password", "reset", "email"}, Tokens{"password", "email"}) == 1);
  CHECK(levenshtein(Tokens{"a", "b"}, Tokens{"b", "a"}) == 2);
  CHECK(levenshtein_chars("kitten", "sitting") == 3);
  CHECK(levenshtein_chars("", "abc") == 3);
  CHECK(levenshtein_chars("na\xC3\xAFve", "naive") == 1);  // one code point, two bytes
  CHECK(levenshtein_chars("\xE2\x82\xAC", "") == 1);
}

TEST_CASE("levenshtein agrees with the full-matrix oracle and is a metric") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_tokens(rng, 8);
    const auto b = random_tokens(rng, 8);
    const auto c = random_tokens(rng, 8);
    const auto ab = levenshtein(a, b);
    CHECK(ab == oracle::edit_distance(a, b));
    CHECK(ab == levenshtein(b, a));
    CHECK((ab == 0) == (a == b));
    CHECK(levenshtein(a, c) <= ab + levenshtein(b, c));
    CHECK(ab >= (a.size() > b.size() ? a.size() - b.size() : b.size() - a.size()));
    CHECK(ab <= std::max(a.size(), b.size()));
  }
}

TEST_CASE("kruskal-wallis worked example") {
  const auto kw = kruskal_wallis({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}});
  CHECK(kw.df == 2);
  CHECK(kw.h == doctest::Approx(7.2).epsilon(1e-12));
  CHECK(kw.p_value == doctest::Approx(0.0273).epsilon(0.002));
  CHECK(kw.p_value == doctest::Approx(std::exp(-3.6)).epsilon(1e-10));
}

TEST_CASE("kruskal-wallis balanced ranks give zero") {
  const auto kw = kruskal_wallis({{1, 4}, {2, 3}});
  CHECK(kw.df == 1);
  CHECK(kw.h == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(kw.p_value == doctest::Approx(1.0));
}

TEST_CASE("kruskal-wallis matches the textbook formula with ties") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> val(0, 5);
  std::uniform_int_distribution<int> size(1, 7);
  int compared = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int k = 2 + trial % 2;
    std::vector<std::vector<double>> groups(k);
    for (auto& g : groups) {
      g.resize(size(rng));
      for (auto& v : g) v = val(rng);
    }
    std::size_t n = 0;
    for (const auto& g : groups) n += g.size();
    bool all_equal = true;
    for (const auto& g : groups) {
      for (double v : g) all_equal &= v == groups[0][0];
    }
    if (n < 3) continue;
    if (all_equal) {
      CHECK_THROWS_AS(kruskal_wallis(groups), Error);
      continue;
    }
    const auto kw = kruskal_wallis(groups);
    const double h = oracle_h(groups);
    CHECK(kw.df == k - 1);
    CHECK(kw.h == doctest::Approx(h).epsilon(1e-9));
    CHECK(kw.p_value == doctest::Approx(chi2_sf(std::max(0.0, h), k - 1)).epsilon(1e-9));
    ++compared;
  }
  CHECK(compared > 250);
}

TEST_CASE("kruskal-wallis is invariant to permutation and monotone transforms") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<double>> groups(3, std::vector<double>(6));
    for (std::size_t g = 0; g < 3; ++g) {
      for (auto& v : groups[g]) v = std::round(z(rng) * 3.0 + static_cast<double>(g));
    }
    const auto base = kruskal_wallis(groups);

    auto shuffled = groups;
    for (auto& g : shuffled) std::shuffle(g.begin(), g.end(), rng);
    std::swap(shuffled[0], shuffled[2]);
    const auto perm = kruskal_wallis(shuffled);
    CHECK(perm.h == doctest::Approx(base.h).epsilon(1e-12));

    auto transformed = groups;
    for (auto& g : transformed) {
      for (auto& v : g) v = std::exp(v / 4.0) * 10.0 + 3.0;
    }
    const auto mono = kruskal_wallis(transformed);
    CHECK(mono.h == doctest::Approx(base.h).epsilon(1e-12));
    CHECK(mono.p_value == doctest::Approx(base.p_value).epsilon(1e-12));
  }
}

TEST_CASE("kruskal-wallis rejects degenerate input") {
  auto code = [](const std::vector<std::vector<double>>& g) {
    try {
      kruskal_wallis(g);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::io;
  };
  CHECK(code({{2, 2}, {2, 2}}) == ErrorCode::degenerate_ties);
  CHECK(code({{1, 2, 3}}) == ErrorCode::invalid_argument);
  CHECK(code({{1, 2}, {}}) == ErrorCode::invalid_argument);
  CHECK(code({{1}, {2}}) == ErrorCode::invalid_argument);
}

TEST_CASE("reference file parsing") {
  const auto ref = ReferenceSet::parse("# header\n\ndoc.txt#0-3\tpassword reset\r\nb#1-2\t\n");
  CHECK(ref.size() == 2);
  REQUIRE(ref.find("doc.txt#0-3"));
  CHECK(*ref.find("doc.txt#0-3") == Tokens{"password", "reset"});
  CHECK(ref.find("b#1-2")->empty());
  CHECK(ref.find("c") == nullptr);
  CHECK_THROWS_AS(ReferenceSet::parse("no tab here\n"), Error);
  CHECK_THROWS_AS(ReferenceSet::parse("k\ta\nk\tb\n"), Error);
}

TEST_CASE("evaluate extraction against references") {
  ReferenceSet ref;
  ref.add("d#0-3", {"password", "reset"});
  ref.add("d#1-4", {"ticket", "queue", "escal"});
  ref.add("e#0-3", {"agent"});

  std::vector<ExtractionRecord> recs = {
      {"d#0-3", "kn", {"password", "reset"}},
      {"d#1-4", "kn", {"ticket", "queue"}},
      {"e#0-3", "kn", {"agent"}},
      {"d#0-3", "katz", {"login"}},
      {"d#1-4", "katz", {"portal", "custom"}},
      {"e#0-3", "katz", {"report", "weekli", "custom"}},
  };
  const auto r = evaluate_extraction(recs, ref);
  REQUIRE(r.rows.size() == 6);
  CHECK(r.groups == std::vector<std::string>{"kn", "katz"});
  CHECK(r.rows[0].distance == 0);
  CHECK(r.rows[1].distance == 1);
  CHECK(r.rows[3].distance == 2);
  CHECK(r.rows[5].distance == 3);
  REQUIRE(r.test.has_value());
  CHECK(r.test->h == doctest::Approx(oracle_h({{0, 1, 0}, {2, 3, 3}})));
  CHECK(r.verdict == (r.test->p_value < 0.05 ? Verdict::rejected : Verdict::not_rejected));

  const auto j = nlohmann::json::parse(r.to_json());
  CHECK(j["rows"].size() == 6);
  CHECK(j["verdict"] == std::string(to_string(r.verdict)));
  const auto csv = r.to_csv();
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 8);
  CHECK(csv.rfind("key,group,distance\n", 0) == 0);

  const auto chars = evaluate_extraction(recs, ref, Granularity::character);
  CHECK(chars.rows[1].distance == 6);  // " escal"
}

TEST_CASE("evaluate extraction error paths") {
  ReferenceSet ref;
  ref.add("a", {"x"});
  std::vector<ExtractionRecord> missing = {{"a", "g1", {"x"}}, {"b", "g2", {}}, {"c", "g2", {}}};
  try {
    evaluate_extraction(missing, ref);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::missing_reference);
    CHECK(std::string(e.what()).find("b") != std::string::npos);
    CHECK(std::string(e.what()).find("c") != std::string::npos);
  }
  std::vector<ExtractionRecord> one_group = {{"a", "g1", {"x"}}, {"a", "g1", {}}};
  CHECK_THROWS_AS(evaluate_extraction(one_group, ref), Error);

  std::vector<ExtractionRecord> flat = {{"a", "g1", {"x"}}, {"a", "g2", {"x"}}, {"a", "g2", {"x"}}};
  const auto r = evaluate_extraction(flat, ref);
  CHECK(r.verdict == Verdict::no_variance);
  CHECK_FALSE(r.test.has_value());
}
