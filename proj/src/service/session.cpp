#include <chrono>
#include <fstream>
#include <random>
#include <sstream>

#include "elicit/error.hpp"
#include "elicit/session.hpp"

namespace elicit::service {

namespace fs = std::filesystem;

namespace {

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

Json feedback_json(const Feedback& f) {
  Json j{{"window", f.window}, {"rating", f.rating == Rating::up ? "up" : "down"}, {"note", f.note}};
  if (!f.key.empty()) j["key"] = f.key;
  return j;
}

}  // namespace

Session::Session(std::string id, std::shared_ptr<const Repository> repo, SessionOptions options)
    : repo_(std::move(repo)),
      options_(std::move(options)),
      stream_(options_.config.window_size),
      stoplist_(repo_->stoplist()) {
  options_.config.extraction.validate();
  if (options_.config.window_size == 0) {
    throw Error(ErrorCode::invalid_argument, "window size must be positive");
  }
  if (!options_.tone.lexicon) options_.tone.lexicon = std::make_shared<tone::ToneLexicon>();
  data_.id = std::move(id);
  data_.repository_id = repo_->id();
  data_.config = options_.config;
  Json created{{"type", "created"},
               {"id", data_.id},
               {"repository_id", data_.repository_id},
               {"deterministic", options_.deterministic}};
  created["config"] = to_json(data_)["config"];
  log_event(created);
}

void Session::log_event(const Json& event) {
  if (options_.log_path.empty()) return;
  if (options_.log_path.has_parent_path()) fs::create_directories(options_.log_path.parent_path());
  std::ofstream out(options_.log_path, std::ios::binary | std::ios::app);
  if (!out) throw Error(ErrorCode::io, "cannot append to " + options_.log_path.string());
  out << event.dump() << "\n";
}

WindowResult Session::append_exchange(text::Speaker speaker, std::string raw) {
  std::unique_lock lock(mu_);
  const auto started = std::chrono::steady_clock::now();
  text::require_utf8(raw, "exchange text");
  auto tokens = text::normalize(text::tokenize(raw), stoplist_);
  const auto ordinal = static_cast<std::int64_t>(stream_.exchanges().size());
  const std::int64_t timestamp = options_.deterministic ? ordinal : now_ms();
  const auto& exchange = stream_.append(speaker, std::move(raw), std::move(tokens), timestamp);
  data_.exchanges.push_back(exchange);
  log_event({{"type", "exchange"},
             {"speaker", text::to_string(speaker)},
             {"text", exchange.text},
             {"timestamp", timestamp}});

  WindowResult result = run_pipeline(exchange);
  if (!options_.deterministic) {
    result.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  }
  data_.windows.push_back(result);
  log_event({{"type", "window"}, {"result", to_json(result)}});
  lock.unlock();
  cv_.notify_all();
  return result;
}

WindowResult Session::run_pipeline(const text::Exchange& latest) {
  WindowResult r;
  r.index = static_cast<std::int64_t>(data_.windows.size());
  r.exchange = latest.index;
  r.speaker = latest.speaker;
  r.tokens = stream_.latest_window();
  r.tones.source = tone::ToneSource::unavailable;
  if (latest.tokens.empty()) {
    r.status = "no_content";
    return r;
  }
  const auto& cfg = data_.config.extraction;

  // Tone of the same text the window was built from.
  std::string tone_text;
  const auto& exchanges = stream_.exchanges();
  for (std::size_t i = stream_.window_first_exchange(); i < exchanges.size(); ++i) {
    if (!tone_text.empty()) tone_text += "\n";
    tone_text += exchanges[i].text;
  }
  try {
    r.tones = tone::analyze_tone(tone_text, options_.tone.client.get(), *options_.tone.lexicon,
                                 options_.tone.config);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::tone_service_unavailable) throw;
    r.tones = tone::ToneProfile{};
    r.tones.source = tone::ToneSource::unavailable;
  }

  const auto selection = lm::select_model(repo_->grid(), r.tokens);
  r.model = selection.key;
  r.perplexity = selection.perplexity;
  const auto terms = extract::extract_relevant_terms(repo_->automaton(selection.key), r.tokens, cfg);
  r.terms = terms.terms;
  std::vector<std::string> surfaces;
  for (const auto& t : r.terms) surfaces.push_back(t.surface);
  r.highlights = extract::find_highlights(latest.text, surfaces, stoplist_);
  if (terms.no_overlap) {
    r.status = "no_overlap";
    return r;
  }

  const auto scored = extract::score_snippets(repo_->documents(), r.terms, cfg);
  for (auto& s : extract::select_snippets(scored, r.tones, cfg)) {
    SnippetResult sr;
    sr.highlights = extract::find_highlights(s.text, s.matched, stoplist_);
    sr.snippet = std::move(s);
    r.snippets.push_back(std::move(sr));
  }
  if (r.snippets.empty()) r.status = "no_snippet";
  return r;
}

bool Session::add_feedback(const Feedback& f) {
  std::lock_guard lock(mu_);
  if (f.window < 0 || f.window >= static_cast<std::int64_t>(data_.windows.size())) {
    throw Error(ErrorCode::invalid_argument, "feedback for unknown window " + std::to_string(f.window));
  }
  if (!f.key.empty()) {
    for (const auto& existing : data_.feedback) {
      if (existing.key == f.key) return false;
    }
  }
  data_.feedback.push_back(f);
  Json event = feedback_json(f);
  event["type"] = "feedback";
  log_event(event);
  return true;
}

void Session::set_config(const SessionConfig& cfg) {
  cfg.extraction.validate();
  std::lock_guard lock(mu_);
  if (cfg.window_size != stream_.window_size()) {
    throw Error(ErrorCode::invalid_argument, "window size is fixed for the life of a session");
  }
  data_.config = cfg;
  SessionData tmp;
  tmp.config = cfg;
  log_event({{"type", "config"}, {"config", to_json(tmp)["config"]}});
}

SessionConfig Session::config() const {
  std::lock_guard lock(mu_);
  return data_.config;
}

std::optional<WindowResult> Session::latest() const {
  std::lock_guard lock(mu_);
  if (data_.windows.empty()) return std::nullopt;
  return data_.windows.back();
}

std::vector<WindowResult> Session::wait_for_windows(std::int64_t from,
                                                    std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [&] { return static_cast<std::int64_t>(data_.windows.size()) > from; });
  std::vector<WindowResult> out;
  for (auto i = std::max<std::int64_t>(from, 0); i < static_cast<std::int64_t>(data_.windows.size()); ++i) {
    out.push_back(data_.windows[i]);
  }
  return out;
}

SessionData Session::snapshot() const {
  std::lock_guard lock(mu_);
  return data_;
}

std::string Session::export_json() const {
  const auto data = snapshot();
  if (data.windows.empty()) throw Error(ErrorCode::invalid_argument, "session has no results to export");
  return to_json(data).dump(2) + "\n";
}

std::string Session::export_csv() const {
  const auto data = snapshot();
  if (data.windows.empty()) throw Error(ErrorCode::invalid_argument, "session has no results to export");
  return to_csv(data);
}

std::unique_ptr<Session> Session::restore(const fs::path& log_path,
                                          std::shared_ptr<const Repository> repo, ToneSetup tone) {
  std::ifstream in(log_path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot read " + log_path.string());
  std::unique_ptr<Session> session;
  std::string line;
  std::size_t line_no = 0;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto ev = Json::parse(line);
      const auto type = ev.at("type").get<std::string>();
      if (type == "created") {
        if (ev.at("repository_id").get<std::string>() != repo->id()) {
          throw Error(ErrorCode::invalid_argument, "session log belongs to another repository");
        }
        SessionOptions opts;
        Json wrapper{{"id", ""}, {"repository_id", ""}, {"config", ev.at("config")}, {"windows", Json::array()},
                     {"feedback", Json::array()}};
        opts.config = session_from_json(wrapper).config;
        opts.tone = std::move(tone);
        opts.deterministic = ev.value("deterministic", false);
        // Construct without a log so the creation event is not written twice.
        auto s = std::make_unique<Session>(ev.at("id").get<std::string>(), repo, opts);
        s->options_.log_path = log_path;
        session = std::move(s);
        continue;
      }
      if (!session) throw Error(ErrorCode::parse, "session log does not start with a creation event");
      auto& s = *session;
      if (type == "exchange") {
        auto speaker = text::parse_speaker(ev.at("speaker").get<std::string>());
        if (!speaker) throw Error(ErrorCode::parse, "unknown speaker");
        auto raw = ev.at("text").get<std::string>();
        auto tokens = text::normalize(text::tokenize(raw), s.stoplist_);
        s.data_.exchanges.push_back(
            s.stream_.append(*speaker, std::move(raw), std::move(tokens), ev.at("timestamp").get<std::int64_t>()));
      } else if (type == "window") {
        s.data_.windows.push_back(window_from_json(ev.at("result")));
      } else if (type == "feedback") {
        Feedback f;
        f.window = ev.at("window").get<std::int64_t>();
        f.rating = ev.at("rating").get<std::string>() == "up" ? Rating::up : Rating::down;
        f.note = ev.value("note", std::string());
        f.key = ev.value("key", std::string());
        s.data_.feedback.push_back(std::move(f));
      } else if (type == "config") {
        Json wrapper{{"id", ""}, {"repository_id", ""}, {"config", ev.at("config")}, {"windows", Json::array()},
                     {"feedback", Json::array()}};
        s.data_.config = session_from_json(wrapper).config;
      } else {
        throw Error(ErrorCode::parse, "unknown event type " + type);
      }
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::parse, log_path.string() + ":" + std::to_string(line_no) + ": " + e.what());
  }
  if (!session) throw Error(ErrorCode::parse, log_path.string() + ": empty session log");
  return session;
}

SessionService::SessionService(ServiceOptions options)
    : options_(std::move(options)), store_(options_.store_root) {}

std::string SessionService::ingest_repository(std::span<const fs::path> inputs) {
  return store_.ingest(inputs, options_.stoplist);
}

std::string SessionService::create_session(const std::string& repository, const SessionConfig& cfg) {
  auto repo = store_.open(repository);
  std::string id;
  {
    std::lock_guard lock(mu_);
    std::random_device rd;
    std::ostringstream ss;
    ss << "s" << next_id_++ << "-" << std::hex << (static_cast<std::uint64_t>(rd()) << 32 | rd());
    id = ss.str();
  }
  SessionOptions opts;
  opts.config = cfg;
  opts.tone = options_.tone;
  if (!options_.sessions_dir.empty()) opts.log_path = options_.sessions_dir / (id + ".jsonl");
  auto session = std::make_shared<Session>(id, std::move(repo), std::move(opts));
  std::lock_guard lock(mu_);
  sessions_.emplace(id, std::move(session));
  return id;
}

std::shared_ptr<Session> SessionService::session(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::not_found, "unknown session " + id);
  return it->second;
}

}  // namespace elicit::service
