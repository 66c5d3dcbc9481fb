#include "elicit/archive.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "elicit/error.hpp"

namespace elicit::lm {

namespace fs = std::filesystem;
using json = nlohmann::json;
using NodeId = NGramTrie::NodeId;

namespace {

constexpr double kLogZero = -99.0;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double log10_or_zero(double p) { return p > 0.0 ? std::log10(p) : kLogZero; }
double from_log10(double v) { return v <= kLogZero ? 0.0 : std::pow(10.0, v); }

std::string model_file(const ModelKey& key) { return to_string(key) + ".arpa"; }

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_arpa(const NGramModel& m, const std::string& fingerprint, std::ostream& out) {
  const auto& trie = m.trie();
  const auto& sym = *m.symbols();
  const int n = m.order();

  std::vector<std::vector<NodeId>> entries(n + 1);
  for (std::size_t x = 1; x < trie.size_upto(n); ++x) {
    const auto node = static_cast<NodeId>(x);
    if (trie.order(node) >= 2 && m.stored(node)) entries[trie.order(node)].push_back(node);
  }
  // Unigrams: the predicted vocabulary, plus <s> when it carries a backoff.
  std::vector<Label> unigrams(m.vocabulary().begin(), m.vocabulary().end());
  const NodeId bos_node = trie.find(NGramTrie::kRoot, m.bos());
  const bool bos_entry = bos_node != NGramTrie::kNone && m.is_history(bos_node);
  if (bos_entry) unigrams.insert(unigrams.begin(), m.bos());

  auto ngram_text = [&](NodeId node) {
    std::string s;
    for (Label w : trie.ngram(node)) {
      if (!s.empty()) s += ' ';
      s += sym.symbol(w);
    }
    return s;
  };
  auto bow_suffix = [&](NodeId node) {
    if (node == NGramTrie::kNone || trie.order(node) >= n || !m.is_history(node)) return std::string();
    return "\t" + fmt(log10_or_zero(m.backoff(node)));
  };

  out << "# fingerprint " << fingerprint << "\n";
  out << "# model " << to_string(ModelKey{m.method(), n}) << "\n\n";
  out << "\\data\\\n";
  out << "ngram 1=" << unigrams.size() << "\n";
  for (int k = 2; k <= n; ++k) out << "ngram " << k << "=" << entries[k].size() << "\n";
  out << "\n\\1-grams:\n";
  for (Label w : unigrams) {
    const double lp = w == m.bos() ? kLogZero : log10_or_zero(m.unigram(w));
    out << fmt(lp) << "\t" << sym.symbol(w) << bow_suffix(trie.find(NGramTrie::kRoot, w)) << "\n";
  }
  for (int k = 2; k <= n; ++k) {
    out << "\n\\" << k << "-grams:\n";
    for (NodeId node : entries[k]) {
      out << fmt(log10_or_zero(m.stored_prob(node))) << "\t" << ngram_text(node) << bow_suffix(node)
          << "\n";
    }
  }
  out << "\n\\end\\\n";
}

struct ArpaEntry {
  std::vector<Label> words;
  double prob = 0.0;
  std::optional<double> bow;
};

struct ArpaModel {
  std::string fingerprint;
  std::vector<std::vector<ArpaEntry>> levels;  // index k-1
};

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t j = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > j) out.emplace_back(s.substr(j, i - j));
  }
  return out;
}

double parse_double(const std::string& s, const fs::path& file) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size()) throw Error(ErrorCode::parse, file.string() + ": bad number '" + s + "'");
  return v;
}

ArpaModel parse_arpa(const fs::path& file, const wfst::SymbolTable& symbols) {
  const std::string text = read_file(file);
  ArpaModel model;
  std::istringstream in(text);
  std::string line;
  int level = 0;
  while (std::getline(in, line)) {
    if (line.rfind("# fingerprint ", 0) == 0) {
      model.fingerprint = line.substr(14);
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    if (line == "\\data\\" || line.rfind("ngram ", 0) == 0) continue;
    if (line == "\\end\\") break;
    if (line.front() == '\\') {
      const auto dash = line.find("-grams:");
      if (dash == std::string::npos) throw Error(ErrorCode::parse, file.string() + ": " + line);
      level = std::stoi(line.substr(1, dash - 1));
      if (level < 1 || level > kMaxOrder) throw Error(ErrorCode::parse, file.string() + ": " + line);
      if (model.levels.size() < static_cast<std::size_t>(level)) model.levels.resize(level);
      continue;
    }
    if (level == 0) throw Error(ErrorCode::parse, file.string() + ": entry outside a section");
    const auto fields = split_ws(line);
    if (fields.size() != static_cast<std::size_t>(level) + 1 &&
        fields.size() != static_cast<std::size_t>(level) + 2) {
      throw Error(ErrorCode::parse, file.string() + ": malformed entry '" + line + "'");
    }
    ArpaEntry e;
    e.prob = from_log10(parse_double(fields[0], file));
    for (int k = 0; k < level; ++k) {
      auto label = symbols.find(fields[1 + k]);
      if (!label) throw Error(ErrorCode::parse, file.string() + ": unknown word " + fields[1 + k]);
      e.words.push_back(*label);
    }
    if (fields.size() == static_cast<std::size_t>(level) + 2) {
      e.bow = from_log10(parse_double(fields.back(), file));
    }
    model.levels[level - 1].push_back(std::move(e));
  }
  return model;
}

}  // namespace

void write_archive(const ModelGrid& grid, const fs::path& manifest) {
  const fs::path dir = manifest.parent_path().empty() ? fs::path(".") : manifest.parent_path();
  fs::create_directories(dir);

  json doc;
  doc["version"] = kArchiveVersion;
  doc["fingerprint"] = grid.fingerprint();
  json vocab = json::array();
  for (std::size_t l = 1; l < grid.symbols()->size(); ++l) {
    vocab.push_back(grid.symbols()->symbol(static_cast<Label>(l)));
  }
  doc["symbols"] = std::move(vocab);
  json models = json::array();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& m = grid.models()[i];
    const ModelKey key{m.method(), m.order()};
    json params;
    params["discount"] = m.params().discount;
    params["unk_floor"] = m.params().unk_floor;
    params["padded"] = m.params().padded;
    json katz = json::array();
    for (const auto& row : m.params().katz) katz.push_back(row);
    params["katz"] = std::move(katz);
    models.push_back({{"key", to_string(key)}, {"file", model_file(key)}, {"params", params}});

    std::ofstream out(dir / model_file(key), std::ios::binary);
    if (!out) throw Error(ErrorCode::io, "cannot write " + (dir / model_file(key)).string());
    write_arpa(m, grid.fingerprint(), out);
  }
  doc["models"] = std::move(models);
  std::ofstream out(manifest, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write " + manifest.string());
  out << doc.dump(2) << "\n";
}

std::string archive_fingerprint(const fs::path& manifest) {
  try {
    return json::parse(read_file(manifest)).at("fingerprint").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, manifest.string() + ": " + e.what());
  }
}

ModelGrid load_archive(const fs::path& manifest, const std::optional<std::string>& expected) {
  json doc;
  try {
    doc = json::parse(read_file(manifest));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, manifest.string() + ": " + e.what());
  }
  try {
    if (doc.at("version").get<int>() != kArchiveVersion) {
      throw Error(ErrorCode::parse, manifest.string() + ": unsupported archive version");
    }
    const auto fingerprint = doc.at("fingerprint").get<std::string>();
    if (expected && *expected != fingerprint) {
      throw Error(ErrorCode::fingerprint_mismatch,
                  "archive fingerprint " + fingerprint + " does not match corpus " + *expected);
    }
    auto symbols = std::make_shared<wfst::SymbolTable>();
    for (const auto& s : doc.at("symbols")) symbols->add(s.get<std::string>());
    const fs::path dir = manifest.parent_path();

    struct Pending {
      ModelKey key;
      ModelParams params;
      ArpaModel arpa;
    };
    std::vector<Pending> pending;
    for (const auto& entry : doc.at("models")) {
      auto key = parse_model_key(entry.at("key").get<std::string>());
      if (!key) throw Error(ErrorCode::parse, manifest.string() + ": bad model key");
      Pending p{*key, {}, parse_arpa(dir / entry.at("file").get<std::string>(), *symbols)};
      if (p.arpa.fingerprint != fingerprint) {
        throw Error(ErrorCode::fingerprint_mismatch,
                    entry.at("file").get<std::string>() + " was built from another corpus");
      }
      const auto& params = entry.at("params");
      p.params.discount = params.at("discount").get<double>();
      p.params.unk_floor = params.at("unk_floor").get<double>();
      p.params.padded = params.at("padded").get<bool>();
      const auto& katz = params.at("katz");
      for (std::size_t k = 0; k < p.params.katz.size() && k < katz.size(); ++k) {
        for (std::size_t r = 0; r < 5; ++r) p.params.katz[k][r] = katz[k][r].get<double>();
      }
      pending.push_back(std::move(p));
    }
    if (pending.size() != kGridSize) {
      throw Error(ErrorCode::parse, manifest.string() + ": expected 20 models");
    }

    // One trie for the whole grid, interned order by order.
    auto trie = std::make_shared<NGramTrie>();
    for (int k = 1; k <= kMaxOrder; ++k) {
      for (const auto& p : pending) {
        if (p.arpa.levels.size() < static_cast<std::size_t>(k)) continue;
        for (const auto& e : p.arpa.levels[k - 1]) {
          const NodeId parent =
              k == 1 ? NGramTrie::kRoot
                     : trie->lookup(std::span<const Label>(e.words.data(), e.words.size() - 1));
          if (parent == NGramTrie::kNone) {
            throw Error(ErrorCode::parse, "ARPA entry without its prefix in " + to_string(p.key));
          }
          trie->intern(parent, e.words.back());
        }
      }
    }
    trie->finalize();

    const auto bos = symbols->add(kBos);
    std::vector<NGramModel> models(kGridSize);
    for (const auto& p : pending) {
      ModelBuilder b(p.key.method, p.key.order, p.params, trie, symbols);
      for (std::size_t k = 0; k < p.arpa.levels.size(); ++k) {
        for (const auto& e : p.arpa.levels[k]) {
          const NodeId node = trie->lookup(e.words);
          if (k == 0) {
            if (e.words.front() != bos) b.set_unigram(e.words.front(), e.prob);
          } else {
            b.set_prob(node, e.prob);
          }
          if (e.bow) b.set_backoff(node, *e.bow);
        }
      }
      models[grid_index(p.key)] = b.finish();
    }
    return ModelGrid(fingerprint, symbols, std::move(models));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, manifest.string() + ": " + e.what());
  }
}

}  // namespace elicit::lm
