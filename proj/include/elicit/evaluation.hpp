#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "elicit/text.hpp"

namespace elicit::eval {

/// Unit-cost edit distance over tokens.
std::size_t levenshtein(std::span<const std::string> a, std::span<const std::string> b);
/// Same over Unicode code points of two strings.
std::size_t levenshtein_chars(std::string_view a, std::string_view b);

struct KruskalWallis {
  double h = 0.0;
  double p_value = 1.0;
  int df = 0;
};

/// Rank-sum H with tie correction; p from chi-squared with k-1 degrees of
/// freedom. Throws Error(invalid_argument) for fewer than two groups, an
/// empty group or fewer than three observations, and Error(degenerate_ties)
/// when every observation is equal.
KruskalWallis kruskal_wallis(const std::vector<std::vector<double>>& groups);

/// Analyst-authored reference terms per snippet key.
class ReferenceSet {
 public:
  /// Lines `key<TAB>stem stem ...`; blank lines and '#' lines skipped.
  /// Throws Error(parse) on a line without a tab or a repeated key.
  static ReferenceSet parse(std::string_view contents);
  static ReferenceSet from_file(const std::filesystem::path& path);

  void add(std::string key, text::Tokens terms);
  const text::Tokens* find(const std::string& key) const;
  std::size_t size() const { return terms_.size(); }

 private:
  std::map<std::string, text::Tokens> terms_;
};

struct ExtractionRecord {
  std::string key;    // snippet key
  std::string group;  // grouping factor, e.g. the method that produced it
  text::Tokens terms;
};

enum class Granularity { token, character };
enum class Verdict { rejected, not_rejected, no_variance };
std::string_view to_string(Verdict v);

struct EvalRow {
  std::string key;
  std::string group;
  std::size_t distance = 0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::vector<std::string> groups;  // first-seen order
  std::optional<KruskalWallis> test;
  Verdict verdict = Verdict::no_variance;
  double alpha = 0.05;

  std::string to_json() const;
  /// key,group,distance rows, then a summary comment line.
  std::string to_csv() const;
};

/// Per-record distance to the reference, then Kruskal-Wallis across groups.
/// Throws Error(missing_reference) listing every unknown key, and
/// Error(invalid_argument) when fewer than two groups are present.
EvalReport evaluate_extraction(std::span<const ExtractionRecord> records,
                               const ReferenceSet& reference,
                               Granularity granularity = Granularity::token, double alpha = 0.05);

}  // namespace elicit::eval
