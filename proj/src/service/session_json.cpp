#include <sstream>

#include "elicit/error.hpp"
#include "elicit/session.hpp"

namespace elicit::service {

namespace {

Json highlights_json(const std::vector<extract::Highlight>& hs) {
  Json out = Json::array();
  for (const auto& h : hs) out.push_back({{"begin", h.begin}, {"end", h.end}, {"term", h.term}});
  return out;
}

std::vector<extract::Highlight> highlights_from(const Json& j) {
  std::vector<extract::Highlight> out;
  for (const auto& h : j) {
    out.push_back({h.at("begin").get<std::size_t>(), h.at("end").get<std::size_t>(),
                   h.at("term").get<std::string>()});
  }
  return out;
}

text::Speaker speaker_from(const Json& j) {
  auto s = text::parse_speaker(j.get<std::string>());
  if (!s) throw Error(ErrorCode::parse, "unknown speaker " + j.get<std::string>());
  return *s;
}

Json config_json(const SessionConfig& c) {
  return {{"z", c.extraction.z},
          {"m", c.extraction.m},
          {"snippet_len", c.extraction.snippet_len},
          {"mode", extract::to_string(c.extraction.mode)},
          {"window_size", c.window_size}};
}

SessionConfig config_from(const Json& j) {
  SessionConfig c;
  c.extraction.z = j.at("z").get<int>();
  c.extraction.m = j.at("m").get<int>();
  c.extraction.snippet_len = j.at("snippet_len").get<int>();
  auto mode = extract::parse_mode(j.at("mode").get<std::string>());
  if (!mode) throw Error(ErrorCode::parse, "unknown mode");
  c.extraction.mode = *mode;
  c.window_size = j.value("window_size", text::SourceStream::kDefaultWindow);
  return c;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

std::string number(double v) {
  // Same shortest round-trip form the JSON export uses.
  return Json(v).dump();
}

}  // namespace

Json to_json(const WindowResult& w) {
  Json terms = Json::array();
  for (const auto& t : w.terms) terms.push_back({{"surface", t.surface}, {"cost", t.cost}, {"rank", t.rank}});
  Json snippets = Json::array();
  for (const auto& s : w.snippets) {
    snippets.push_back({{"doc_id", s.snippet.doc_id},
                        {"start", s.snippet.start},
                        {"end", s.snippet.end},
                        {"score", s.snippet.score},
                        {"text", s.snippet.text},
                        {"matched", s.snippet.matched},
                        {"highlights", highlights_json(s.highlights)}});
  }
  Json tones = Json::object();
  for (auto t : tone::kTones) tones[std::string(tone::to_string(t))] = w.tones.get(t);
  Json model = nullptr;
  if (w.model) model = {{"method", lm::to_string(w.model->method)}, {"order", w.model->order}};
  return {{"index", w.index},
          {"exchange", w.exchange},
          {"speaker", text::to_string(w.speaker)},
          {"status", w.status},
          {"tokens", w.tokens},
          {"model", model},
          {"perplexity", w.perplexity},
          {"terms", terms},
          {"snippets", snippets},
          {"tones", tones},
          {"tone_source", tone::to_string(w.tones.source)},
          {"highlights", highlights_json(w.highlights)},
          {"latency_ms", w.latency_ms}};
}

WindowResult window_from_json(const Json& j) {
  try {
    WindowResult w;
    w.index = j.at("index").get<std::int64_t>();
    w.exchange = j.value("exchange", std::int64_t{0});
    if (j.contains("speaker")) w.speaker = speaker_from(j.at("speaker"));
    w.status = j.value("status", std::string("ok"));
    w.tokens = j.at("tokens").get<text::Tokens>();
    if (!j.at("model").is_null()) {
      auto method = lm::parse_method(j.at("model").at("method").get<std::string>());
      if (!method) throw Error(ErrorCode::parse, "unknown method");
      w.model = lm::ModelKey{*method, j.at("model").at("order").get<int>()};
    }
    w.perplexity = j.value("perplexity", 0.0);
    for (const auto& t : j.at("terms")) {
      w.terms.push_back({t.at("surface").get<std::string>(), t.at("cost").get<double>(), t.at("rank").get<int>()});
    }
    for (const auto& s : j.at("snippets")) {
      SnippetResult r;
      r.snippet.doc_id = s.at("doc_id").get<std::string>();
      r.snippet.start = s.at("start").get<std::size_t>();
      r.snippet.end = s.at("end").get<std::size_t>();
      r.snippet.score = s.at("score").get<double>();
      r.snippet.text = s.at("text").get<std::string>();
      r.snippet.matched = s.at("matched").get<std::vector<std::string>>();
      if (s.contains("highlights")) r.highlights = highlights_from(s.at("highlights"));
      w.snippets.push_back(std::move(r));
    }
    for (auto t : tone::kTones) w.tones.set(t, j.at("tones").value(std::string(tone::to_string(t)), 0.0));
    if (j.contains("tone_source")) {
      auto src = tone::parse_tone_source(j.at("tone_source").get<std::string>());
      if (!src) throw Error(ErrorCode::parse, "unknown tone source");
      w.tones.source = *src;
    }
    if (j.contains("highlights")) w.highlights = highlights_from(j.at("highlights"));
    w.latency_ms = j.at("latency_ms").get<double>();
    return w;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::parse, std::string("window result: ") + e.what());
  }
}

Json to_json(const SessionData& s) {
  Json exchanges = Json::array();
  for (const auto& e : s.exchanges) {
    exchanges.push_back({{"index", e.index},
                         {"speaker", text::to_string(e.speaker)},
                         {"text", e.text},
                         {"timestamp", e.timestamp}});
  }
  Json windows = Json::array();
  for (const auto& w : s.windows) windows.push_back(to_json(w));
  Json feedback = Json::array();
  for (const auto& f : s.feedback) {
    Json entry{{"window", f.window}, {"rating", f.rating == Rating::up ? "up" : "down"}, {"note", f.note}};
    if (!f.key.empty()) entry["key"] = f.key;
    feedback.push_back(std::move(entry));
  }
  return {{"id", s.id},
          {"repository_id", s.repository_id},
          {"config", config_json(s.config)},
          {"exchanges", exchanges},
          {"windows", windows},
          {"feedback", feedback}};
}

SessionData session_from_json(const Json& j) {
  try {
    SessionData s;
    s.id = j.at("id").get<std::string>();
    s.repository_id = j.at("repository_id").get<std::string>();
    s.config = config_from(j.at("config"));
    if (j.contains("exchanges")) {
      for (const auto& e : j.at("exchanges")) {
        text::Exchange ex;
        ex.index = e.at("index").get<std::int64_t>();
        ex.speaker = speaker_from(e.at("speaker"));
        ex.text = e.at("text").get<std::string>();
        ex.timestamp = e.at("timestamp").get<std::int64_t>();
        s.exchanges.push_back(std::move(ex));
      }
    }
    for (const auto& w : j.at("windows")) s.windows.push_back(window_from_json(w));
    for (const auto& f : j.at("feedback")) {
      Feedback fb;
      fb.window = f.at("window").get<std::int64_t>();
      const auto rating = f.at("rating").get<std::string>();
      if (rating != "up" && rating != "down") throw Error(ErrorCode::parse, "rating must be up or down");
      fb.rating = rating == "up" ? Rating::up : Rating::down;
      fb.note = f.value("note", std::string());
      fb.key = f.value("key", std::string());
      s.feedback.push_back(std::move(fb));
    }
    return s;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::parse, std::string("session: ") + e.what());
  }
}

std::string to_csv(const SessionData& s) {
  std::ostringstream out;
  out << "window,model,top_terms,snippet_keys,analytical,confident,tentative,latency_ms\n";
  for (const auto& w : s.windows) {
    std::string terms, keys;
    for (const auto& t : w.terms) terms += (terms.empty() ? "" : ";") + t.surface;
    for (const auto& r : w.snippets) keys += (keys.empty() ? "" : ";") + r.snippet.key();
    out << w.index << "," << (w.model ? lm::to_string(*w.model) : std::string()) << ","
        << csv_field(terms) << "," << csv_field(keys) << ","
        << number(w.tones.get(tone::Tone::analytical)) << ","
        << number(w.tones.get(tone::Tone::confident)) << ","
        << number(w.tones.get(tone::Tone::tentative)) << "," << number(w.latency_ms) << "\n";
  }
  return out.str();
}

}  // namespace elicit::service
