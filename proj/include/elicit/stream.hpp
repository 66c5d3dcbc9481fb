#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "elicit/text.hpp"

namespace elicit::text {

enum class Speaker { analyst, stakeholder };

std::string_view to_string(Speaker s);
/// Accepts "analyst"/"stakeholder" and the transcript codes "A"/"B".
std::optional<Speaker> parse_speaker(std::string_view s);

struct Exchange {
  std::int64_t index = 0;
  Speaker speaker = Speaker::stakeholder;
  std::string text;
  Tokens tokens;
  std::int64_t timestamp = 0;
};

/// Append-only conversation turns plus the sliding token window over them.
/// Analyst and stakeholder turns contribute equally to the window.
class SourceStream {
 public:
  static constexpr std::size_t kDefaultWindow = 60;

  explicit SourceStream(std::size_t window_size_tokens = kDefaultWindow);

  const Exchange& append(Speaker speaker, std::string text, Tokens normalized_tokens,
                         std::int64_t timestamp);

  /// Normalized tokens of the most recent exchanges, truncated from the left
  /// to the window size. Throws Error(no_conversation) on an empty stream.
  Tokens latest_window() const;
  /// Index of the first exchange that contributes to latest_window().
  std::size_t window_first_exchange() const;

  const std::vector<Exchange>& exchanges() const { return exchanges_; }
  std::size_t window_size() const { return window_size_; }
  bool empty() const { return exchanges_.empty(); }

 private:
  std::vector<Exchange> exchanges_;
  std::size_t window_size_;
};

}  // namespace elicit::text
