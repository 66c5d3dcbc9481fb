#include "elicit/tone.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "elicit/error.hpp"
#include "elicit/text.hpp"

namespace elicit::tone {

using json = nlohmann::json;

std::string_view to_string(Tone t) {
  switch (t) {
    case Tone::analytical: return "analytical";
    case Tone::confident: return "confident";
    case Tone::tentative: return "tentative";
    case Tone::joy: return "joy";
    case Tone::sadness: return "sadness";
    case Tone::anger: return "anger";
  }
  return "?";
}

std::optional<Tone> parse_tone(std::string_view s) {
  if (s == "cheer") return Tone::joy;
  for (Tone t : kTones) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

std::string_view to_string(ToneSource s) {
  switch (s) {
    case ToneSource::external: return "external";
    case ToneSource::lexicon: return "lexicon";
    case ToneSource::unavailable: return "unavailable";
  }
  return "?";
}

std::optional<ToneSource> parse_tone_source(std::string_view s) {
  for (ToneSource src : {ToneSource::external, ToneSource::lexicon, ToneSource::unavailable}) {
    if (to_string(src) == s) return src;
  }
  return std::nullopt;
}

void ToneProfile::set(Tone t, double v) {
  if (std::isnan(v)) v = 0.0;
  scores[static_cast<std::size_t>(t)] = std::clamp(v, 0.0, 1.0);
}

SnippetCount snippet_count_policy(const ToneProfile& p) {
  const double confident = p.get(Tone::confident);
  const double analytical = p.get(Tone::analytical);
  const double tentative = p.get(Tone::tentative);
  if (confident >= kDecisionThreshold && analytical >= kDecisionThreshold) return SnippetCount::One;
  if (tentative >= kDecisionThreshold) return SnippetCount::Three;
  if (confident >= kDominanceThreshold && confident < kDecisionThreshold) return SnippetCount::Three;
  return SnippetCount::One;
}

int snippet_count(SnippetCount c) { return c == SnippetCount::One ? 1 : 3; }

ToneLexicon ToneLexicon::from_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::io, "tone lexicon directory not found: " + dir.string());
  }
  ToneLexicon lex;
  for (Tone t : kTones) {
    const auto file = dir / (std::string(to_string(t)) + ".txt");
    if (!std::filesystem::exists(file)) continue;
    // Same line format as stoplists.
    const auto list = text::Stoplist::from_file(file);
    for (const auto& w : list.words()) lex.add(t, w);
  }
  return lex;
}

void ToneLexicon::add(Tone t, std::string word) {
  words_[static_cast<std::size_t>(t)].insert(std::move(word));
}

ToneProfile lexicon_score(std::string_view raw, const ToneLexicon& lexicon, double kappa) {
  ToneProfile p;
  p.source = ToneSource::lexicon;
  const auto tokens = text::tokenize(raw);
  const double denom = std::max<double>(1.0, static_cast<double>(tokens.size()));
  for (Tone t : kTones) {
    const auto& words = lexicon.words(t);
    if (words.empty()) continue;
    const auto hits = std::count_if(tokens.begin(), tokens.end(),
                                    [&](const std::string& tok) { return words.count(tok) > 0; });
    p.set(t, std::min(1.0, static_cast<double>(hits) / denom * kappa));
  }
  return p;
}

ToneProfile parse_wire(std::string_view body) {
  ToneProfile p;
  p.source = ToneSource::external;
  try {
    const auto doc = json::parse(body);
    for (const auto& entry : doc.at("document_tone").at("tones")) {
      auto t = parse_tone(entry.at("tone_id").get<std::string>());
      if (t) p.set(*t, entry.at("score").get<double>());
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, std::string("tone response: ") + e.what());
  }
  return p;
}

std::string to_wire(const ToneProfile& profile) {
  json tones = json::array();
  for (Tone t : kTones) {
    if (profile.get(t) > 0.0) tones.push_back({{"tone_id", to_string(t)}, {"score", profile.get(t)}});
  }
  return json{{"document_tone", {{"tones", tones}}}}.dump();
}

ReplayToneClient ReplayToneClient::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot read tone fixtures " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  ReplayToneClient c;
  try {
    const auto doc = json::parse(ss.str());
    for (const auto& r : doc.at("responses")) {
      c.add(r.at("text").get<std::string>(), r.at("response").dump());
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, path.string() + ": " + e.what());
  }
  return c;
}

void ReplayToneClient::add(std::string text, std::string wire) {
  responses_[std::move(text)] = std::move(wire);
}

ToneProfile ReplayToneClient::analyze(std::string_view text) {
  auto it = responses_.find(text);
  if (it == responses_.end()) {
    throw Error(ErrorCode::tone_service_unavailable, "no recorded tone response for this text");
  }
  return parse_wire(it->second);
}

ToneProfile analyze_tone(std::string_view text, ToneClient* client, const ToneLexicon& lexicon,
                         const ToneClientConfig& cfg) {
  if (client) {
    try {
      return client->analyze(text);
    } catch (const Error& e) {
      if (!cfg.fallback_enabled) {
        throw Error(ErrorCode::tone_service_unavailable,
                    std::string("tone service unavailable: ") + e.what());
      }
    }
  }
  return lexicon_score(text, lexicon);
}

}  // namespace elicit::tone
