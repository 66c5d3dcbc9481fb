#pragma once

// Repositories, live sessions and the per-window pipeline:
// normalize -> window -> tone -> model selection -> terms -> snippets.

#include <array>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "elicit/extraction.hpp"
#include "elicit/ngram.hpp"
#include "elicit/stream.hpp"
#include "elicit/text.hpp"
#include "elicit/tone.hpp"

namespace elicit::service {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Repositories

class Repository {
 public:
  Repository(std::string id, std::vector<text::Document> documents, lm::ModelGrid grid,
             text::Stoplist stoplist = text::Stoplist::english());

  const std::string& id() const { return id_; }
  /// The stoplist the documents were normalized with; windows use it too.
  const text::Stoplist& stoplist() const { return stoplist_; }
  const std::vector<text::Document>& documents() const { return documents_; }
  const lm::ModelGrid& grid() const { return grid_; }

  /// Automaton of one grid model, compiled on first use and cached.
  /// Safe to call concurrently.
  const lm::LmAutomaton& automaton(const lm::ModelKey& key) const;
  /// Compiles every automaton up front.
  void warm() const;

 private:
  std::string id_;
  std::vector<text::Document> documents_;
  lm::ModelGrid grid_;
  text::Stoplist stoplist_;
  mutable std::array<std::once_flag, lm::kGridSize> once_;
  mutable std::array<std::unique_ptr<lm::LmAutomaton>, lm::kGridSize> automata_;
};

/// Corpus inputs: files, or directories searched recursively for regular
/// files. Document ids are paths relative to the directory given (or the
/// bare file name), and documents are ordered by id.
std::vector<text::Document> read_corpus(std::span<const std::filesystem::path> inputs,
                                        const text::Stoplist& stoplist);

/// SHA-256 over the corpus fingerprint and the stoplist: identical bytes
/// normalized the same way give the same id.
std::string repository_id(std::span<const text::Document> documents, const text::Stoplist& stoplist);

/// Writes the grid archive plus documents.json next to `manifest`.
void save_repository(const Repository& repo, const std::filesystem::path& manifest);
std::shared_ptr<Repository> load_repository(const std::filesystem::path& manifest);

/// Content-addressed repositories under a root directory, with
/// registry.json mapping ids to manifests.
class RepositoryStore {
 public:
  explicit RepositoryStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  /// Reads, normalizes and builds the grid, unless a repository with the
  /// same id is already stored. Returns the id.
  std::string ingest(std::span<const std::filesystem::path> inputs, const text::Stoplist& stoplist,
                     const lm::GridOptions& options = {});
  /// Adds an archive written elsewhere to the registry.
  void register_manifest(const std::string& id, const std::filesystem::path& manifest);
  /// By id (registry) or by manifest path. Opened repositories are cached.
  std::shared_ptr<const Repository> open(const std::string& id_or_manifest);
  std::optional<std::filesystem::path> manifest_of(const std::string& id) const;

 private:
  std::map<std::string, std::string> read_registry() const;
  void write_registry(const std::map<std::string, std::string>& reg) const;

  std::filesystem::path root_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<const Repository>> open_;
};

// ---------------------------------------------------------------------------
// Sessions

struct SessionConfig {
  extract::ExtractionConfig extraction;
  std::size_t window_size = text::SourceStream::kDefaultWindow;
};

struct SnippetResult {
  extract::Snippet snippet;
  std::vector<extract::Highlight> highlights;  // offsets into snippet.text
};

struct WindowResult {
  std::int64_t index = 0;
  std::int64_t exchange = 0;  // exchange that triggered the window
  text::Speaker speaker = text::Speaker::stakeholder;
  /// ok | no_content | no_overlap | no_snippet
  std::string status = "ok";
  text::Tokens tokens;
  std::optional<lm::ModelKey> model;
  double perplexity = 0.0;
  std::vector<extract::RelevantTerm> terms;
  std::vector<SnippetResult> snippets;
  tone::ToneProfile tones;
  std::vector<extract::Highlight> highlights;  // offsets into the exchange text
  double latency_ms = 0.0;
};

enum class Rating { up, down };

struct Feedback {
  std::int64_t window = 0;
  Rating rating = Rating::up;
  std::string note;
  std::string key;  // optional idempotency key
};

struct SessionData {
  std::string id;
  std::string repository_id;
  SessionConfig config;
  std::vector<text::Exchange> exchanges;
  std::vector<WindowResult> windows;
  std::vector<Feedback> feedback;
};

Json to_json(const WindowResult& w);
WindowResult window_from_json(const Json& j);
Json to_json(const SessionData& s);
/// Throws Error(parse) on malformed documents.
SessionData session_from_json(const Json& j);
/// One row per window: window,model,top_terms,snippet_keys,analytical,
/// confident,tentative,latency_ms.
std::string to_csv(const SessionData& s);

struct ToneSetup {
  std::shared_ptr<tone::ToneClient> client;  // may be null: lexicon only
  std::shared_ptr<const tone::ToneLexicon> lexicon;
  tone::ToneClientConfig config;
};

struct SessionOptions {
  SessionConfig config;
  ToneSetup tone;
  /// Timestamps become exchange ordinals and latency is recorded as 0, so
  /// replays produce identical exports.
  bool deterministic = false;
  /// Append-only JSONL event log; empty disables persistence.
  std::filesystem::path log_path;
};

class Session {
 public:
  Session(std::string id, std::shared_ptr<const Repository> repo, SessionOptions options);

  const std::string& id() const { return data_.id; }

  /// Runs the pipeline for the window ending with this exchange. Exchanges
  /// are processed one at a time in arrival order.
  WindowResult append_exchange(text::Speaker speaker, std::string text);
  /// Returns false when the idempotency key was already recorded.
  bool add_feedback(const Feedback& f);
  void set_config(const SessionConfig& cfg);
  SessionConfig config() const;

  std::optional<WindowResult> latest() const;
  /// Windows with index >= from, waiting up to `timeout` for one to arrive.
  std::vector<WindowResult> wait_for_windows(std::int64_t from, std::chrono::milliseconds timeout) const;
  SessionData snapshot() const;

  /// Throws Error(invalid_argument) when no window was processed yet.
  std::string export_json() const;
  std::string export_csv() const;

  /// Rebuilds a session from its event log.
  static std::unique_ptr<Session> restore(const std::filesystem::path& log_path,
                                          std::shared_ptr<const Repository> repo, ToneSetup tone);

 private:
  WindowResult run_pipeline(const text::Exchange& latest);
  void log_event(const Json& event);

  std::shared_ptr<const Repository> repo_;
  SessionOptions options_;
  text::SourceStream stream_;
  text::Stoplist stoplist_;
  SessionData data_;
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
};

// ---------------------------------------------------------------------------
// Service

struct ServiceOptions {
  std::filesystem::path store_root;
  std::filesystem::path sessions_dir;  // empty: sessions are not persisted
  ToneSetup tone;
  text::Stoplist stoplist = text::Stoplist::english();
};

class SessionService {
 public:
  explicit SessionService(ServiceOptions options);

  std::string ingest_repository(std::span<const std::filesystem::path> inputs);
  std::string create_session(const std::string& repository, const SessionConfig& cfg);
  /// Throws Error(not_found).
  std::shared_ptr<Session> session(const std::string& id) const;
  RepositoryStore& store() { return store_; }

 private:
  ServiceOptions options_;
  RepositoryStore store_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 1;
};

/// Starts the REST + server-sent-events API and blocks until stop_server().
class HttpServer {
 public:
  explicit HttpServer(SessionService& service);
  ~HttpServer();
  /// Binds and serves; returns when stopped. Port 0 picks a free port.
  bool listen(const std::string& host, int port);
  /// Binds to a free port and returns it; call serve() afterwards.
  int bind_any(const std::string& host);
  bool serve();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace elicit::service
