#include <doctest.h>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "elicit/error.hpp"
#include "elicit/tone.hpp"

using namespace elicit;
using namespace elicit::tone;

namespace {

ToneProfile profile(double analytical, double confident, double tentative) {
  ToneProfile p;
  p.set(Tone::analytical, analytical);
  p.set(Tone::confident, confident);
  p.set(Tone::tentative, tentative);
  return p;
}

// Straight transcription of the decision table, kept independent of the
// implementation's branch order.
SnippetCount table(double a, double c, double t) {
  const bool conf_and_anal = c >= 0.75 && a >= 0.75;
  const bool tent = t >= 0.75;
  const bool conf_dominant = c >= 0.5 && c < 0.75;
  if (conf_and_anal) return SnippetCount::One;
  if (tent || conf_dominant) return SnippetCount::Three;
  return SnippetCount::One;
}

ToneLexicon shipped() { return ToneLexicon::from_dir(std::filesystem::path(ELICIT_DATA_DIR) / "tones"); }

}  // namespace

TEST_CASE("policy matches the decision table on the boundary grid") {
  const double grid[] = {0.0, 0.49, 0.5, 0.74, 0.75, 0.76, 1.0};
  int checked = 0;
  for (double a : grid) {
    for (double c : grid) {
      for (double t : grid) {
        CHECK(snippet_count_policy(profile(a, c, t)) == table(a, c, t));
        ++checked;
      }
    }
  }
  CHECK(checked == 343);
}

TEST_CASE("policy named rows") {
  CHECK(snippet_count_policy(profile(0.8, 0.8, 0.9)) == SnippetCount::One);
  CHECK(snippet_count_policy(profile(0.2, 0.1, 0.8)) == SnippetCount::Three);
  CHECK(snippet_count_policy(profile(0.2, 0.6, 0.1)) == SnippetCount::Three);
  CHECK(snippet_count_policy(profile(0.9, 0.8, 0.0)) == SnippetCount::One);
  CHECK(snippet_count_policy(profile(0.9, 0.49, 0.74)) == SnippetCount::One);
  CHECK(snippet_count_policy(ToneProfile{}) == SnippetCount::One);
  CHECK(snippet_count(SnippetCount::One) == 1);
  CHECK(snippet_count(SnippetCount::Three) == 3);
}

TEST_CASE("profile set clamps") {
  ToneProfile p;
  p.set(Tone::joy, 1.7);
  p.set(Tone::anger, -0.2);
  p.set(Tone::sadness, std::nan(""));
  CHECK(p.get(Tone::joy) == 1.0);
  CHECK(p.get(Tone::anger) == 0.0);
  CHECK(p.get(Tone::sadness) == 0.0);
}

TEST_CASE("tone names") {
  for (Tone t : kTones) CHECK(parse_tone(to_string(t)) == t);
  CHECK(parse_tone("cheer") == Tone::joy);
  CHECK_FALSE(parse_tone("fear").has_value());
}

TEST_CASE("lexicon score counts hits with saturation") {
  ToneLexicon lex;
  lex.add(Tone::tentative, "maybe");
  lex.add(Tone::confident, "definitely");

  // 1 hit in 10 tokens -> 0.5
  auto p = lexicon_score("maybe we could look at the other screen layout today", lex);
  CHECK(p.source == ToneSource::lexicon);
  CHECK(p.get(Tone::tentative) == doctest::Approx(0.5));
  CHECK(p.get(Tone::confident) == 0.0);

  // 2 hits in 4 tokens saturates
  p = lexicon_score("Maybe, maybe not really", lex);
  CHECK(p.get(Tone::tentative) == 1.0);

  CHECK(lexicon_score("", lex).get(Tone::tentative) == 0.0);
}

TEST_CASE("lexicon score is monotone in hits") {
  ToneLexicon lex;
  lex.add(Tone::analytical, "because");
  std::string filler = "one two three four five six seven eight nine ten eleven twelve thirteen fourteen "
                       "fifteen sixteen seventeen eighteen nineteen twenty";
  double last = -1.0;
  for (int hits = 0; hits <= 6; ++hits) {
    std::string text = filler;
    for (int i = 0; i < hits; ++i) text += " because";
    const double s = lexicon_score(text, lex).get(Tone::analytical);
    CHECK(s >= last);
    CHECK(s <= 1.0);
    last = s;
  }
}

TEST_CASE("shipped lexicon covers every tone") {
  const auto lex = shipped();
  for (Tone t : kTones) CHECK_FALSE(lex.words(t).empty());
  CHECK(lex.words(Tone::tentative).count("doubt") == 1);
  const auto p = lexicon_score("I guess maybe it might work, not sure", lex);
  CHECK(p.get(Tone::tentative) >= 0.75);
}

TEST_CASE("wire format") {
  const auto p = parse_wire(
      R"({"document_tone":{"tones":[{"tone_id":"cheer","score":0.6},{"tone_id":"tentative","score":0.9},)"
      R"({"tone_id":"fear","score":0.7}]}})");
  CHECK(p.source == ToneSource::external);
  CHECK(p.get(Tone::joy) == doctest::Approx(0.6));
  CHECK(p.get(Tone::tentative) == doctest::Approx(0.9));
  CHECK(p.get(Tone::anger) == 0.0);

  auto round = parse_wire(to_wire(p));
  CHECK(round == p);

  CHECK_THROWS_AS(parse_wire("not json"), Error);
  CHECK_THROWS_AS(parse_wire(R"({"tones":[]})"), Error);
}

TEST_CASE("replay client") {
  ReplayToneClient c;
  c.add("hello", R"({"document_tone":{"tones":[{"tone_id":"confident","score":0.8}]}})");
  CHECK(c.analyze("hello").get(Tone::confident) == doctest::Approx(0.8));
  try {
    c.analyze("hello ");
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::tone_service_unavailable);
  }

  const auto path = std::filesystem::temp_directory_path() / "elicit_tone_replay.json";
  {
    std::ofstream out(path);
    out << R"({"responses":[{"text":"a\nb","response":{"document_tone":{"tones":[{"tone_id":"anger","score":0.3}]}}}]})";
  }
  auto f = ReplayToneClient::from_file(path);
  CHECK(f.size() == 1);
  CHECK(f.analyze("a\nb").get(Tone::anger) == doctest::Approx(0.3));
  std::filesystem::remove(path);
}

TEST_CASE("http client against a local service") {
  httplib::Server srv;
  std::string seen_auth, seen_text;
  srv.Post("/v3/tone", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    seen_text = nlohmann::json::parse(req.body).at("text").get<std::string>();
    res.set_content(R"({"document_tone":{"tones":[{"tone_id":"analytical","score":0.77}]}})",
                    "application/json");
  });
  srv.Post("/broken", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
  const int port = srv.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread th([&] { srv.listen_after_bind(); });
  srv.wait_until_ready();

  ::setenv("ELICIT_TEST_TONE_TOKEN", "secret", 1);
  ToneClientConfig cfg;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v3/tone";
  cfg.credentials_env = "ELICIT_TEST_TONE_TOKEN";
  cfg.timeout = std::chrono::milliseconds(2000);
  HttpToneClient client(cfg);
  const auto p = client.analyze("what about the report");
  CHECK(p.source == ToneSource::external);
  CHECK(p.get(Tone::analytical) == doctest::Approx(0.77));
  CHECK(seen_auth == "Bearer secret");
  CHECK(seen_text == "what about the report");

  ToneClientConfig bad = cfg;
  bad.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/broken";
  HttpToneClient broken(bad);
  CHECK_THROWS_AS(broken.analyze("x"), Error);

  ToneLexicon lex;
  lex.add(Tone::tentative, "maybe");
  bad.fallback_enabled = true;
  const auto fb = analyze_tone("maybe", &broken, lex, bad);
  CHECK(fb.source == ToneSource::lexicon);
  CHECK(fb.get(Tone::tentative) == 1.0);

  bad.fallback_enabled = false;
  try {
    analyze_tone("maybe", &broken, lex, bad);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::tone_service_unavailable);
  }

  srv.stop();
  th.join();
}

TEST_CASE("unreachable endpoint is unavailable") {
  ToneClientConfig cfg;
  cfg.endpoint = "http://127.0.0.1:1/tone";
  cfg.timeout = std::chrono::milliseconds(300);
  HttpToneClient client(cfg);
  try {
    client.analyze("x");
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::tone_service_unavailable);
  }
  CHECK_THROWS_AS(HttpToneClient(ToneClientConfig{"no-scheme", "", std::chrono::milliseconds(10), true}), Error);
}

TEST_CASE("no client uses the lexicon") {
  ToneLexicon lex;
  lex.add(Tone::joy, "great");
  ToneClientConfig cfg;
  const auto p = analyze_tone("great", nullptr, lex, cfg);
  CHECK(p.source == ToneSource::lexicon);
  CHECK(p.get(Tone::joy) == 1.0);
}
