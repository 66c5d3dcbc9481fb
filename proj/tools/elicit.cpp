// elicit: build repository models, run extraction, replay transcripts,
// serve the session API, and evaluate extractions against references.

#include <CLI11.hpp>

#include <algorithm>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "elicit/archive.hpp"
#include "elicit/digest.hpp"
#include "elicit/error.hpp"
#include "elicit/evaluation.hpp"
#include "elicit/session.hpp"

namespace fs = std::filesystem;
using namespace elicit;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& bytes) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write " + p.string());
  out << bytes;
}

fs::path default_store() {
  if (const char* env = std::getenv("ELICIT_STORE")) return env;
  return ".elicit";
}

fs::path default_lexicon() {
  if (const char* env = std::getenv("ELICIT_TONE_LEXICON")) return env;
  return fs::path(ELICIT_DATA_DIR) / "tones";
}

struct ToneOptions {
  std::string fixtures;
  std::string endpoint;
  std::string credentials_env = "ELICIT_TONE_TOKEN";
  std::string lexicon = default_lexicon().string();
  int timeout_ms = 3000;
  bool no_fallback = false;

  void add(CLI::App* app) {
    app->add_option("--tone-fixtures", fixtures, "Recorded tone service replies (JSON)");
    app->add_option("--tone-endpoint", endpoint, "Tone service URL");
    app->add_option("--tone-credentials-env", credentials_env, "Variable holding the service token");
    app->add_option("--tone-lexicon", lexicon, "Directory of per-tone word lists");
    app->add_option("--tone-timeout-ms", timeout_ms, "Tone request timeout")->check(CLI::PositiveNumber);
    app->add_flag("--no-tone-fallback", no_fallback, "Do not fall back to the word lists");
  }

  service::ToneSetup build() const {
    service::ToneSetup t;
    t.config.endpoint = endpoint;
    t.config.credentials_env = credentials_env;
    t.config.timeout = std::chrono::milliseconds(timeout_ms);
    t.config.fallback_enabled = !no_fallback;
    t.lexicon = std::make_shared<tone::ToneLexicon>(
        fs::is_directory(lexicon) ? tone::ToneLexicon::from_dir(lexicon) : tone::ToneLexicon{});
    if (!fixtures.empty()) {
      t.client = std::make_shared<tone::ReplayToneClient>(tone::ReplayToneClient::from_file(fixtures));
    } else if (!endpoint.empty()) {
      t.client = std::make_shared<tone::HttpToneClient>(t.config);
    }
    return t;
  }
};

struct ConfigOptions {
  int z = 5, m = 5, snippet_len = 3;
  std::size_t window = text::SourceStream::kDefaultWindow;
  std::string mode = "auto";

  void add(CLI::App* app) {
    app->add_option("--z", z, "Relevant terms kept")->check(CLI::PositiveNumber);
    app->add_option("--m", m, "n-best paths pooled")->check(CLI::PositiveNumber);
    app->add_option("--snippet-len", snippet_len, "Sentences per snippet")->check(CLI::PositiveNumber);
    app->add_option("--window-size", window, "Window size in tokens")->check(CLI::PositiveNumber);
    app->add_option("--mode", mode, "Snippet count: auto (tone policy) or manual")
        ->check(CLI::IsMember({"auto", "automatic", "manual"}));
  }

  service::SessionConfig build() const {
    service::SessionConfig c;
    c.extraction.z = z;
    c.extraction.m = m;
    c.extraction.snippet_len = snippet_len;
    c.extraction.mode = *extract::parse_mode(mode);
    c.window_size = window;
    return c;
  }
};

text::Stoplist load_stoplist(const std::vector<std::string>& extra) {
  auto s = text::Stoplist::english();
  for (const auto& f : extra) s.merge(text::Stoplist::from_file(f));
  return s;
}

struct TranscriptLine {
  text::Speaker speaker;
  std::string text;
};

std::vector<TranscriptLine> read_transcript(const fs::path& path) {
  const auto bytes = read_file(path);
  text::require_utf8(bytes, path.string());
  std::vector<TranscriptLine> out;
  std::istringstream in(bytes);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    auto speaker = tab == std::string::npos ? std::nullopt : text::parse_speaker(line.substr(0, tab));
    if (!speaker) {
      throw Error(ErrorCode::parse, path.string() + ":" + std::to_string(line_no) +
                                        ": expected 'A<TAB>text' or 'B<TAB>text'");
    }
    out.push_back({*speaker, line.substr(tab + 1)});
  }
  return out;
}

std::vector<eval::ExtractionRecord> records_from_export(const std::string& label, const fs::path& path) {
  const auto data = service::session_from_json(service::Json::parse(read_file(path)));
  std::vector<eval::ExtractionRecord> out;
  for (const auto& w : data.windows) {
    for (const auto& s : w.snippets) {
      eval::ExtractionRecord r;
      r.key = s.snippet.key();
      r.group = label;
      for (const auto& term : s.snippet.matched) {
        std::istringstream words(term);
        for (std::string stem; words >> stem;) {
          if (std::find(r.terms.begin(), r.terms.end(), stem) == r.terms.end()) r.terms.push_back(stem);
        }
      }
      out.push_back(std::move(r));
    }
  }
  return out;
}

service::HttpServer* g_server = nullptr;

extern "C" void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Requirements elicitation assistant: WFST n-gram extraction over a document repository"};
  app.require_subcommand(1);
  std::string store = default_store().string();
  app.add_option("--store", store, "Repository store directory (default $ELICIT_STORE or .elicit)");

  // build-lm
  auto* build = app.add_subcommand("build-lm", "Normalize a corpus, build the 20-model grid and archive it");
  std::vector<std::string> corpus;
  std::string out_manifest;
  std::vector<std::string> stoplists;
  build->add_option("--corpus", corpus, "Corpus file or directory (repeatable)")->required();
  build->add_option("--out", out_manifest, "Manifest path; model files go next to it")->required();
  build->add_option("--stoplist", stoplists, "Extra contextual stopword file (repeatable)");

  // extract
  auto* ext = app.add_subcommand("extract", "Extract terms and snippets for one window of text");
  std::string repo;
  std::string window_text;
  ConfigOptions ext_cfg;
  ToneOptions ext_tone;
  ext->add_option("--repo", repo, "Repository id or manifest path")->required();
  ext->add_option("--window", window_text, "Conversation text")->required();
  ext_cfg.add(ext);
  ext_tone.add(ext);

  // replay
  auto* replay = app.add_subcommand("replay", "Run a speaker-labeled transcript through a session and export it");
  std::string transcript, out_report, out_csv, session_log;
  bool deterministic = false;
  ConfigOptions replay_cfg;
  ToneOptions replay_tone;
  replay->add_option("--repo", repo, "Repository id or manifest path")->required();
  replay->add_option("--transcript", transcript, "Lines of 'A|B<TAB>text'")->required()->check(CLI::ExistingFile);
  replay->add_option("--out", out_report, "Session JSON export")->required();
  replay->add_option("--csv", out_csv, "Also write the CSV export");
  replay->add_option("--log", session_log, "Append-only session event log");
  replay->add_flag("--deterministic", deterministic, "Ordinal timestamps and zero latency for reproducible exports");
  replay_cfg.add(replay);
  replay_tone.add(replay);

  // serve
  auto* serve = app.add_subcommand("serve", "Run the session REST API with a server-sent-events stream");
  int port = 8080;
  std::string host = "127.0.0.1";
  std::string sessions_dir;
  ToneOptions serve_tone;
  serve->add_option("--port", port, "TCP port")->check(CLI::Range(0, 65535));
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--sessions", sessions_dir, "Directory for session logs");
  serve->add_option("--stoplist", stoplists, "Extra contextual stopword file for ingestion");
  serve_tone.add(serve);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Edit distances to a reference set and a Kruskal-Wallis test across groups");
  std::string reference;
  std::vector<std::string> extractions;
  bool chars = false;
  double alpha = 0.05;
  evaluate->add_option("--reference", reference, "key<TAB>stems file")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--extractions", extractions, "LABEL=session-export.json (repeatable)")->required();
  evaluate->add_option("--out", out_report, "JSON report (default stdout)");
  evaluate->add_option("--csv", out_csv, "CSV report");
  evaluate->add_flag("--chars", chars, "Character-level instead of token-level distance");
  evaluate->add_option("--alpha", alpha, "Significance level")->check(CLI::Range(0.0, 1.0));

  CLI11_PARSE(app, argc, argv);

  try {
    if (build->parsed()) {
      const auto stop = load_stoplist(stoplists);
      std::vector<fs::path> inputs(corpus.begin(), corpus.end());
      auto docs = service::read_corpus(inputs, stop);
      const auto id = service::repository_id(docs, stop);
      auto grid = lm::build_grid(docs);
      service::save_repository(service::Repository(id, std::move(docs), std::move(grid), stop), out_manifest);
      service::RepositoryStore(store).register_manifest(id, out_manifest);
      std::cout << id << "\n";
      return 0;
    }

    if (ext->parsed()) {
      service::RepositoryStore repos(store);
      service::SessionOptions opts;
      opts.config = ext_cfg.build();
      opts.tone = ext_tone.build();
      opts.deterministic = true;
      service::Session session("extract", repos.open(repo), opts);
      const auto result = session.append_exchange(text::Speaker::stakeholder, window_text);
      std::cout << service::to_json(result).dump(2) << "\n";
      return 0;
    }

    if (replay->parsed()) {
      service::RepositoryStore repos(store);
      const auto lines = read_transcript(transcript);
      service::SessionOptions opts;
      opts.config = replay_cfg.build();
      opts.tone = replay_tone.build();
      opts.deterministic = deterministic;
      opts.log_path = session_log;
      const auto id = "replay-" + sha256_hex(read_file(transcript)).substr(0, 12);
      service::Session session(id, repos.open(repo), opts);
      for (const auto& l : lines) session.append_exchange(l.speaker, l.text);
      write_file(out_report, session.export_json());
      if (!out_csv.empty()) write_file(out_csv, session.export_csv());
      std::cerr << "replayed " << lines.size() << " exchanges into " << out_report << "\n";
      return 0;
    }

    if (serve->parsed()) {
      service::ServiceOptions opts;
      opts.store_root = store;
      opts.sessions_dir = sessions_dir;
      opts.tone = serve_tone.build();
      opts.stoplist = load_stoplist(stoplists);
      service::SessionService svc(std::move(opts));
      service::HttpServer server(svc);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on " << host << ":" << port << "\n";
      if (!server.listen(host, port)) {
        std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
        return 1;
      }
      return 0;
    }

    if (evaluate->parsed()) {
      const auto ref = eval::ReferenceSet::from_file(reference);
      std::vector<eval::ExtractionRecord> records;
      for (const auto& arg : extractions) {
        const auto eq = arg.find('=');
        const std::string label = eq == std::string::npos ? fs::path(arg).stem().string() : arg.substr(0, eq);
        const std::string file = eq == std::string::npos ? arg : arg.substr(eq + 1);
        auto r = records_from_export(label, file);
        records.insert(records.end(), r.begin(), r.end());
      }
      const auto report = eval::evaluate_extraction(
          records, ref, chars ? eval::Granularity::character : eval::Granularity::token, alpha);
      if (out_report.empty()) {
        std::cout << report.to_json();
      } else {
        write_file(out_report, report.to_json());
      }
      if (!out_csv.empty()) write_file(out_csv, report.to_csv());
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
