#include <httplib.h>

#include <atomic>

#include "elicit/error.hpp"
#include "elicit/session.hpp"

namespace elicit::service {

namespace {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::not_found: return 404;
    case ErrorCode::no_conversation: return 409;
    case ErrorCode::io: return 500;
    case ErrorCode::tone_service_unavailable: return 503;
    default: return 400;
  }
}

void send_json(httplib::Response& res, const Json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  send_json(res, {{"error", code}, {"message", message}}, status);
}

Json parse_body(const httplib::Request& req) {
  try {
    return req.body.empty() ? Json::object() : Json::parse(req.body);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::parse, std::string("request body: ") + e.what());
  }
}

// Applies the fields present in `patch` on top of `base`.
SessionConfig merge_config(SessionConfig base, const Json& patch) {
  try {
    if (patch.contains("z")) base.extraction.z = patch.at("z").get<int>();
    if (patch.contains("m")) base.extraction.m = patch.at("m").get<int>();
    if (patch.contains("snippet_len")) base.extraction.snippet_len = patch.at("snippet_len").get<int>();
    if (patch.contains("window_size")) base.window_size = patch.at("window_size").get<std::size_t>();
    if (patch.contains("mode")) {
      auto mode = extract::parse_mode(patch.at("mode").get<std::string>());
      if (!mode) throw Error(ErrorCode::invalid_argument, "mode must be auto or manual");
      base.extraction.mode = *mode;
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::invalid_argument, std::string("config: ") + e.what());
  }
  base.extraction.validate();
  return base;
}

Json config_json(const SessionConfig& c) {
  SessionData tmp;
  tmp.config = c;
  return to_json(tmp)["config"];
}

}  // namespace

struct HttpServer::Impl {
  SessionService& service;
  httplib::Server server;
  std::atomic<bool> stopping{false};

  explicit Impl(SessionService& s) : service(s) { routes(); }

  template <typename F>
  httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const Error& e) {
        send_error(res, http_status(e.code()), to_string(e.code()), e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
      }
    };
  }

  void routes() {
    server.Post("/repositories", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto body = parse_body(req);
      std::vector<std::filesystem::path> paths;
      try {
        for (const auto& p : body.at("paths")) paths.emplace_back(p.get<std::string>());
      } catch (const Json::exception&) {
        throw Error(ErrorCode::invalid_argument, "expected {\"paths\": [...]}");
      }
      send_json(res, {{"id", service.ingest_repository(paths)}}, 201);
    }));

    server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto body = parse_body(req);
      if (!body.contains("repository_id")) throw Error(ErrorCode::invalid_argument, "repository_id required");
      const auto cfg = merge_config({}, body.value("config", Json::object()));
      const auto id = service.create_session(body.at("repository_id").get<std::string>(), cfg);
      send_json(res, {{"id", id}, {"config", config_json(cfg)}}, 201);
    }));

    server.Post(R"(/sessions/([^/]+)/exchanges)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto session = service.session(req.matches[1]);
      const auto body = parse_body(req);
      auto speaker = text::parse_speaker(body.value("speaker", std::string("stakeholder")));
      if (!speaker) throw Error(ErrorCode::invalid_argument, "speaker must be analyst or stakeholder");
      if (!body.contains("text") || !body.at("text").is_string()) {
        throw Error(ErrorCode::invalid_argument, "text required");
      }
      send_json(res, to_json(session->append_exchange(*speaker, body.at("text").get<std::string>())));
    }));

    server.Get(R"(/sessions/([^/]+)/results/latest)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto latest = service.session(req.matches[1])->latest();
      if (!latest) throw Error(ErrorCode::no_conversation, "no conversation yet");
      send_json(res, to_json(*latest));
    }));

    server.Post(R"(/sessions/([^/]+)/feedback)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto session = service.session(req.matches[1]);
      const auto body = parse_body(req);
      Feedback f;
      try {
        f.window = body.at("window").get<std::int64_t>();
        const auto rating = body.at("rating").get<std::string>();
        if (rating != "up" && rating != "down") throw Error(ErrorCode::invalid_argument, "rating must be up or down");
        f.rating = rating == "up" ? Rating::up : Rating::down;
        f.note = body.value("note", std::string());
        f.key = body.value("key", std::string());
      } catch (const Json::exception& e) {
        throw Error(ErrorCode::invalid_argument, std::string("feedback: ") + e.what());
      }
      const bool stored = session->add_feedback(f);
      send_json(res, {{"stored", stored}, {"feedback", session->snapshot().feedback.size()}}, stored ? 201 : 200);
    }));

    server.Post(R"(/sessions/([^/]+)/config)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto session = service.session(req.matches[1]);
      const auto cfg = merge_config(session->config(), parse_body(req));
      session->set_config(cfg);
      send_json(res, config_json(cfg));
    }));

    server.Get(R"(/sessions/([^/]+)/export)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto session = service.session(req.matches[1]);
      const auto format = req.has_param("format") ? req.get_param_value("format") : std::string("json");
      if (format == "json") {
        res.set_content(session->export_json(), "application/json");
      } else if (format == "csv") {
        res.set_content(session->export_csv(), "text/csv");
      } else {
        throw Error(ErrorCode::invalid_argument, "format must be json or csv");
      }
    }));

    // Server-sent events: the latest result on connect, then every new one.
    server.Get(R"(/sessions/([^/]+)/stream)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto session = service.session(req.matches[1]);
      std::int64_t next = 0;
      if (auto latest = session->latest()) next = latest->index;
      if (req.has_header("Last-Event-ID")) next = std::stoll(req.get_header_value("Last-Event-ID")) + 1;
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider(
          "text/event-stream", [this, session, next](std::size_t, httplib::DataSink& sink) mutable {
            if (stopping) return false;
            const auto windows = session->wait_for_windows(next, std::chrono::milliseconds(500));
            if (windows.empty()) {
              const std::string ping = ": keep-alive\n\n";
              return sink.write(ping.data(), ping.size());
            }
            for (const auto& w : windows) {
              const std::string event = "id: " + std::to_string(w.index) + "\nevent: window\ndata: " +
                                        to_json(w).dump() + "\n\n";
              if (!sink.write(event.data(), event.size())) return false;
              next = w.index + 1;
            }
            return true;
          });
    }));
  }
};

HttpServer::HttpServer(SessionService& service) : impl_(std::make_unique<Impl>(service)) {}
HttpServer::~HttpServer() { stop(); }

bool HttpServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }
int HttpServer::bind_any(const std::string& host) { return impl_->server.bind_to_any_port(host); }
bool HttpServer::serve() { return impl_->server.listen_after_bind(); }
bool HttpServer::running() const { return impl_->server.is_running(); }

void HttpServer::stop() {
  impl_->stopping = true;
  impl_->server.stop();
}

}  // namespace elicit::service
