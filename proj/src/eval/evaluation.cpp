#include "elicit/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>
#include <json.hpp>

#include "elicit/error.hpp"

namespace elicit::eval {

namespace {

template <typename T>
std::size_t edit_distance(std::span<const T> a, std::span<const T> b) {
  // Two-row dynamic program.
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::vector<char32_t> code_points(std::string_view s) {
  std::vector<char32_t> out;
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    int len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 1;
    if (i + len > s.size()) len = 1;
    char32_t cp = len == 1 ? c : (c & (0x7F >> len));
    for (int k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    out.push_back(cp);
    i += len;
  }
  return out;
}

}  // namespace

std::size_t levenshtein(std::span<const std::string> a, std::span<const std::string> b) {
  return edit_distance(a, b);
}

std::size_t levenshtein_chars(std::string_view a, std::string_view b) {
  const auto ca = code_points(a);
  const auto cb = code_points(b);
  return edit_distance(std::span<const char32_t>(ca), std::span<const char32_t>(cb));
}

KruskalWallis kruskal_wallis(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw Error(ErrorCode::invalid_argument, "kruskal_wallis: need k >= 2 groups");
  struct Obs {
    double value;
    std::size_t group;
  };
  std::vector<Obs> all;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) throw Error(ErrorCode::invalid_argument, "kruskal_wallis: empty group");
    for (double v : groups[g]) {
      if (std::isnan(v)) throw Error(ErrorCode::invalid_argument, "kruskal_wallis: NaN observation");
      all.push_back({v, g});
    }
  }
  const double n = static_cast<double>(all.size());
  if (all.size() < 3) throw Error(ErrorCode::invalid_argument, "kruskal_wallis: need N >= 3");
  std::sort(all.begin(), all.end(), [](const Obs& a, const Obs& b) { return a.value < b.value; });

  std::vector<double> rank_sum(groups.size(), 0.0);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].value == all[i].value) ++j;
    const double t = static_cast<double>(j - i);
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) rank_sum[all[k].group] += avg_rank;
    tie_term += t * t * t - t;
    i = j;
  }
  const double correction = 1.0 - tie_term / (n * n * n - n);
  if (correction <= 0.0) throw Error(ErrorCode::degenerate_ties, "degenerate: all values tied");

  double h = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    h += rank_sum[g] * rank_sum[g] / static_cast<double>(groups[g].size());
  }
  h = 12.0 / (n * (n + 1.0)) * h - 3.0 * (n + 1.0);
  h = std::max(0.0, h / correction);

  KruskalWallis r;
  r.h = h;
  r.df = static_cast<int>(groups.size()) - 1;
  r.p_value = std::clamp(boost::math::gamma_q(r.df / 2.0, h / 2.0), 0.0, 1.0);
  return r;
}

ReferenceSet ReferenceSet::parse(std::string_view contents) {
  ReferenceSet set;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= contents.size()) {
    auto eol = contents.find('\n', pos);
    if (eol == std::string_view::npos) eol = contents.size();
    std::string_view line = contents.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw Error(ErrorCode::parse, "reference line " + std::to_string(line_no) + ": missing tab");
    }
    std::string key(line.substr(0, tab));
    if (set.terms_.count(key)) {
      throw Error(ErrorCode::parse, "reference line " + std::to_string(line_no) + ": duplicate key " + key);
    }
    text::Tokens terms;
    std::istringstream words{std::string(line.substr(tab + 1))};
    for (std::string w; words >> w;) terms.push_back(w);
    set.terms_.emplace(std::move(key), std::move(terms));
  }
  return set;
}

ReferenceSet ReferenceSet::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  text::require_utf8(ss.str(), path.string());
  return parse(ss.str());
}

void ReferenceSet::add(std::string key, text::Tokens terms) {
  terms_[std::move(key)] = std::move(terms);
}

const text::Tokens* ReferenceSet::find(const std::string& key) const {
  auto it = terms_.find(key);
  return it == terms_.end() ? nullptr : &it->second;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::rejected: return "rejected";
    case Verdict::not_rejected: return "not_rejected";
    case Verdict::no_variance: return "no_variance";
  }
  return "?";
}

EvalReport evaluate_extraction(std::span<const ExtractionRecord> records,
                               const ReferenceSet& reference, Granularity granularity,
                               double alpha) {
  std::vector<std::string> missing;
  for (const auto& r : records) {
    if (!reference.find(r.key)) missing.push_back(r.key);
  }
  if (!missing.empty()) {
    std::string msg = "no reference for:";
    for (const auto& k : missing) msg += " " + k;
    throw Error(ErrorCode::missing_reference, msg);
  }

  EvalReport report;
  report.alpha = alpha;
  std::map<std::string, std::vector<double>> by_group;
  for (const auto& r : records) {
    const auto& ref = *reference.find(r.key);
    std::size_t d = 0;
    if (granularity == Granularity::token) {
      d = levenshtein(r.terms, ref);
    } else {
      auto join = [](const text::Tokens& t) {
        std::string s;
        for (const auto& w : t) s += (s.empty() ? "" : " ") + w;
        return s;
      };
      d = levenshtein_chars(join(r.terms), join(ref));
    }
    report.rows.push_back({r.key, r.group, d});
    if (!by_group.count(r.group)) report.groups.push_back(r.group);
    by_group[r.group].push_back(static_cast<double>(d));
  }
  if (report.groups.size() < 2) {
    throw Error(ErrorCode::invalid_argument, "evaluation needs at least two groups");
  }
  std::vector<std::vector<double>> groups;
  for (const auto& g : report.groups) groups.push_back(by_group[g]);
  try {
    report.test = kruskal_wallis(groups);
    report.verdict = report.test->p_value < alpha ? Verdict::rejected : Verdict::not_rejected;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::degenerate_ties) throw;
    report.verdict = Verdict::no_variance;
  }
  return report;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json doc;
  nlohmann::ordered_json rows_json = nlohmann::ordered_json::array();
  for (const auto& r : rows) rows_json.push_back({{"key", r.key}, {"group", r.group}, {"distance", r.distance}});
  doc["rows"] = std::move(rows_json);
  doc["groups"] = groups;
  if (test) {
    doc["h"] = test->h;
    doc["df"] = test->df;
    doc["p_value"] = test->p_value;
  } else {
    doc["h"] = nullptr;
    doc["df"] = nullptr;
    doc["p_value"] = nullptr;
  }
  doc["alpha"] = alpha;
  doc["verdict"] = to_string(verdict);
  return doc.dump(2) + "\n";
}

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  out << "key,group,distance\n";
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  for (const auto& r : rows) out << quote(r.key) << "," << quote(r.group) << "," << r.distance << "\n";
  out << "# verdict=" << to_string(verdict);
  if (test) {
    char buf[96];
    std::snprintf(buf, sizeof buf, " h=%.6g df=%d p=%.6g", test->h, test->df, test->p_value);
    out << buf;
  }
  out << " alpha=" << alpha << "\n";
  return out.str();
}

}  // namespace elicit::eval
