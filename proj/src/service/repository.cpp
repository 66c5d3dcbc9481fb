#include <algorithm>
#include <fstream>
#include <sstream>

#include "elicit/archive.hpp"
#include "elicit/digest.hpp"
#include "elicit/error.hpp"
#include "elicit/session.hpp"

namespace elicit::service {

namespace fs = std::filesystem;

namespace {

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_bytes(const fs::path& p, const std::string& bytes) {
  const auto tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorCode::io, "cannot write " + tmp);
    out << bytes;
  }
  fs::rename(tmp, p);
}

std::vector<std::string> sorted_words(const text::Stoplist& stoplist) {
  std::vector<std::string> words(stoplist.words().begin(), stoplist.words().end());
  std::sort(words.begin(), words.end());
  return words;
}

}  // namespace

std::string repository_id(std::span<const text::Document> documents, const text::Stoplist& stoplist) {
  Sha256 h;
  h.update(lm::corpus_fingerprint(documents));
  for (const auto& w : sorted_words(stoplist)) {
    h.update("\n");
    h.update(w);
  }
  return h.hex();
}

Repository::Repository(std::string id, std::vector<text::Document> documents, lm::ModelGrid grid,
                       text::Stoplist stoplist)
    : id_(std::move(id)),
      documents_(std::move(documents)),
      grid_(std::move(grid)),
      stoplist_(std::move(stoplist)) {}

const lm::LmAutomaton& Repository::automaton(const lm::ModelKey& key) const {
  const auto i = lm::grid_index(key);
  std::call_once(once_[i], [&] {
    automata_[i] = std::make_unique<lm::LmAutomaton>(lm::to_wfst(grid_.model(key)));
  });
  return *automata_[i];
}

void Repository::warm() const {
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t i = 0; i < lm::kGridSize; ++i) automaton(lm::grid_key(i));
}

std::vector<text::Document> read_corpus(std::span<const fs::path> inputs,
                                        const text::Stoplist& stoplist) {
  std::vector<std::pair<std::string, fs::path>> files;
  for (const auto& input : inputs) {
    if (fs::is_directory(input)) {
      for (const auto& entry : fs::recursive_directory_iterator(input)) {
        if (!entry.is_regular_file()) continue;
        const auto name = entry.path().filename().string();
        if (!name.empty() && name.front() == '.') continue;
        files.emplace_back(fs::relative(entry.path(), input).generic_string(), entry.path());
      }
    } else if (fs::is_regular_file(input)) {
      files.emplace_back(input.filename().generic_string(), input);
    } else {
      throw Error(ErrorCode::io, "cannot read " + input.string());
    }
  }
  std::sort(files.begin(), files.end());
  for (std::size_t i = 1; i < files.size(); ++i) {
    if (files[i].first == files[i - 1].first) {
      throw Error(ErrorCode::invalid_argument, "duplicate document id " + files[i].first);
    }
  }

  std::vector<text::Document> docs;
  bool any_tokens = false;
  for (const auto& [id, path] : files) {
    auto bytes = read_bytes(path);
    text::require_utf8(bytes, path.string());
    auto doc = text::make_document(id, path.stem().string(), std::move(bytes), stoplist);
    for (const auto& s : doc.sentences) any_tokens = any_tokens || !s.tokens.empty();
    docs.push_back(std::move(doc));
  }
  if (!any_tokens) throw Error(ErrorCode::empty_repository, "empty repository");
  return docs;
}

void save_repository(const Repository& repo, const fs::path& manifest) {
  lm::write_archive(repo.grid(), manifest);
  Json docs = Json::array();
  for (const auto& d : repo.documents()) {
    Json sentences = Json::array();
    for (const auto& s : d.sentences) sentences.push_back({{"begin", s.begin}, {"end", s.end}, {"tokens", s.tokens}});
    docs.push_back({{"id", d.id}, {"title", d.title}, {"raw_text", d.raw_text}, {"sentences", std::move(sentences)}});
  }
  Json doc{{"repository_id", repo.id()}, {"stoplist", sorted_words(repo.stoplist())}, {"documents", std::move(docs)}};
  write_bytes(manifest.parent_path() / "documents.json", doc.dump() + "\n");
}

std::shared_ptr<Repository> load_repository(const fs::path& manifest) {
  auto grid = lm::load_archive(manifest);
  const auto docs_path = manifest.parent_path() / "documents.json";
  Json doc;
  try {
    doc = Json::parse(read_bytes(docs_path));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::parse, docs_path.string() + ": " + e.what());
  }
  std::vector<text::Document> docs;
  text::Stoplist stoplist;
  try {
    stoplist = text::Stoplist(doc.at("stoplist").get<std::unordered_set<std::string>>());
    for (const auto& d : doc.at("documents")) {
      text::Document out;
      out.id = d.at("id").get<std::string>();
      out.title = d.at("title").get<std::string>();
      out.raw_text = d.at("raw_text").get<std::string>();
      for (const auto& s : d.at("sentences")) {
        out.sentences.push_back({s.at("begin").get<std::size_t>(), s.at("end").get<std::size_t>(),
                                 s.at("tokens").get<text::Tokens>()});
      }
      docs.push_back(std::move(out));
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::parse, docs_path.string() + ": " + e.what());
  }
  const auto fingerprint = lm::corpus_fingerprint(docs);
  if (fingerprint != grid.fingerprint()) {
    throw Error(ErrorCode::fingerprint_mismatch,
                "documents in " + docs_path.string() + " do not match the model archive");
  }
  auto id = repository_id(docs, stoplist);
  return std::make_shared<Repository>(std::move(id), std::move(docs), std::move(grid),
                                      std::move(stoplist));
}

RepositoryStore::RepositoryStore(fs::path root) : root_(std::move(root)) {}

std::map<std::string, std::string> RepositoryStore::read_registry() const {
  const auto path = root_ / "registry.json";
  if (!fs::exists(path)) return {};
  try {
    return Json::parse(read_bytes(path)).get<std::map<std::string, std::string>>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::parse, path.string() + ": " + e.what());
  }
}

void RepositoryStore::write_registry(const std::map<std::string, std::string>& reg) const {
  fs::create_directories(root_);
  write_bytes(root_ / "registry.json", Json(reg).dump(2) + "\n");
}

void RepositoryStore::register_manifest(const std::string& id, const fs::path& manifest) {
  std::lock_guard lock(mu_);
  auto reg = read_registry();
  reg[id] = fs::absolute(manifest).lexically_normal().string();
  write_registry(reg);
}

std::optional<fs::path> RepositoryStore::manifest_of(const std::string& id) const {
  std::lock_guard lock(mu_);
  const auto reg = read_registry();
  auto it = reg.find(id);
  if (it == reg.end()) return std::nullopt;
  return fs::path(it->second);
}

std::string RepositoryStore::ingest(std::span<const fs::path> inputs, const text::Stoplist& stoplist,
                                    const lm::GridOptions& options) {
  if (inputs.empty()) throw Error(ErrorCode::empty_repository, "empty repository");
  auto docs = read_corpus(inputs, stoplist);
  const auto id = repository_id(docs, stoplist);
  if (auto existing = manifest_of(id); existing && fs::exists(*existing)) return id;

  auto grid = lm::build_grid(docs, options);
  const auto manifest = root_ / id / "manifest.json";
  save_repository(Repository(id, std::move(docs), std::move(grid), stoplist), manifest);
  register_manifest(id, manifest);
  // Serve what a later process would load, so results never depend on
  // whether the grid was built in this process.
  std::shared_ptr<const Repository> repo = load_repository(manifest);
  std::lock_guard lock(mu_);
  open_[id] = repo;
  return id;
}

std::shared_ptr<const Repository> RepositoryStore::open(const std::string& id_or_manifest) {
  {
    std::lock_guard lock(mu_);
    if (auto it = open_.find(id_or_manifest); it != open_.end()) return it->second;
  }
  fs::path manifest;
  if (auto m = manifest_of(id_or_manifest)) {
    manifest = *m;
  } else if (fs::is_regular_file(id_or_manifest)) {
    manifest = id_or_manifest;
  } else {
    throw Error(ErrorCode::not_found, "unknown repository " + id_or_manifest);
  }
  std::shared_ptr<const Repository> repo = load_repository(manifest);
  std::lock_guard lock(mu_);
  open_.emplace(id_or_manifest, repo);
  open_.emplace(repo->id(), repo);
  return repo;
}

}  // namespace elicit::service
