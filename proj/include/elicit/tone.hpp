#pragma once

// Tone profiles, the snippet-count policy they drive, and the scorers that
// produce them: an external HTTP service, recorded replies of that service,
// and an offline word-list scorer.

#include <array>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>

namespace elicit::tone {

enum class Tone { analytical, confident, tentative, joy, sadness, anger };
inline constexpr std::array<Tone, 6> kTones = {Tone::analytical, Tone::confident, Tone::tentative,
                                               Tone::joy,        Tone::sadness,   Tone::anger};

std::string_view to_string(Tone t);
/// Also accepts the service's "cheer" as joy.
std::optional<Tone> parse_tone(std::string_view s);

enum class ToneSource { external, lexicon, unavailable };
std::string_view to_string(ToneSource s);
std::optional<ToneSource> parse_tone_source(std::string_view s);

struct ToneProfile {
  std::array<double, kTones.size()> scores{};
  ToneSource source = ToneSource::lexicon;

  double get(Tone t) const { return scores[static_cast<std::size_t>(t)]; }
  /// Clamps into [0, 1]; NaN becomes 0.
  void set(Tone t, double v);

  friend bool operator==(const ToneProfile&, const ToneProfile&) = default;
};

inline constexpr double kDecisionThreshold = 0.75;
inline constexpr double kDominanceThreshold = 0.5;

enum class SnippetCount { One, Three };

/// confident and analytical both >= 0.75 -> One; otherwise tentative >= 0.75,
/// or confident dominant (>= 0.5) but below 0.75 -> Three; otherwise One.
SnippetCount snippet_count_policy(const ToneProfile& profile);
int snippet_count(SnippetCount c);

class ToneLexicon {
 public:
  ToneLexicon() = default;

  /// Reads `<tone>.txt` for each tone that has a file in `dir`; one word per
  /// line, '#' comments.
  static ToneLexicon from_dir(const std::filesystem::path& dir);
  void add(Tone t, std::string word);
  const std::unordered_set<std::string>& words(Tone t) const {
    return words_[static_cast<std::size_t>(t)];
  }

 private:
  std::array<std::unordered_set<std::string>, kTones.size()> words_;
};

inline constexpr double kLexiconKappa = 5.0;

/// score(tone) = min(1, hits / max(1, tokens) * kappa) over the lowercased
/// raw tokens of `text`.
ToneProfile lexicon_score(std::string_view text, const ToneLexicon& lexicon,
                          double kappa = kLexiconKappa);

/// Wire format of the external service:
/// {"document_tone": {"tones": [{"tone_id": "...", "score": 0.8}, ...]}}.
/// Unknown tone ids are ignored. Throws Error(parse).
ToneProfile parse_wire(std::string_view body);
std::string to_wire(const ToneProfile& profile);

struct ToneClientConfig {
  std::string endpoint;         // http(s)://host[:port]/path
  std::string credentials_env;  // name of the variable holding a bearer token
  std::chrono::milliseconds timeout{3000};
  bool fallback_enabled = true;
};

class ToneClient {
 public:
  virtual ~ToneClient() = default;
  /// Throws Error(tone_service_unavailable) on any failure.
  virtual ToneProfile analyze(std::string_view text) = 0;
};

class HttpToneClient : public ToneClient {
 public:
  explicit HttpToneClient(ToneClientConfig cfg);
  ToneProfile analyze(std::string_view text) override;

 private:
  ToneClientConfig cfg_;
  std::string base_;
  std::string path_;
};

/// Serves recorded service replies keyed by the exact request text. The
/// fixture file is {"responses": [{"text": ..., "response": <wire>}, ...]}.
class ReplayToneClient : public ToneClient {
 public:
  static ReplayToneClient from_file(const std::filesystem::path& path);
  void add(std::string text, std::string wire);
  ToneProfile analyze(std::string_view text) override;
  std::size_t size() const { return responses_.size(); }

 private:
  std::map<std::string, std::string, std::less<>> responses_;
};

/// Client call with lexicon fallback. Without a client, or when the client
/// fails and fallback is enabled, the lexicon scores the text. When it fails
/// and fallback is disabled, throws Error(tone_service_unavailable).
ToneProfile analyze_tone(std::string_view text, ToneClient* client, const ToneLexicon& lexicon,
                         const ToneClientConfig& cfg);

}  // namespace elicit::tone
