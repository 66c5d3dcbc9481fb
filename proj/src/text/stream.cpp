#include "elicit/stream.hpp"

#include "elicit/error.hpp"

namespace elicit::text {

std::string_view to_string(Speaker s) {
  return s == Speaker::analyst ? "analyst" : "stakeholder";
}

std::optional<Speaker> parse_speaker(std::string_view s) {
  if (s == "analyst" || s == "A" || s == "a") return Speaker::analyst;
  if (s == "stakeholder" || s == "B" || s == "b") return Speaker::stakeholder;
  return std::nullopt;
}

SourceStream::SourceStream(std::size_t window_size_tokens) : window_size_(window_size_tokens) {
  if (window_size_ == 0) throw Error(ErrorCode::invalid_argument, "window size must be positive");
}

const Exchange& SourceStream::append(Speaker speaker, std::string text, Tokens normalized_tokens,
                                     std::int64_t timestamp) {
  const std::int64_t index =
      exchanges_.empty() ? 0 : exchanges_.back().index + 1;
  exchanges_.push_back(
      Exchange{index, speaker, std::move(text), std::move(normalized_tokens), timestamp});
  return exchanges_.back();
}

std::size_t SourceStream::window_first_exchange() const {
  if (exchanges_.empty()) throw Error(ErrorCode::no_conversation, "no conversation yet");
  std::size_t budget = window_size_;
  std::size_t i = exchanges_.size();
  while (i > 0) {
    const std::size_t n = exchanges_[i - 1].tokens.size();
    if (n >= budget) return n == 0 ? i : i - 1;
    budget -= n;
    --i;
  }
  return 0;
}

Tokens SourceStream::latest_window() const {
  if (exchanges_.empty()) throw Error(ErrorCode::no_conversation, "no conversation yet");
  Tokens window;
  for (std::size_t i = window_first_exchange(); i < exchanges_.size(); ++i) {
    const auto& toks = exchanges_[i].tokens;
    window.insert(window.end(), toks.begin(), toks.end());
  }
  if (window.size() > window_size_) {
    window.erase(window.begin(), window.end() - static_cast<std::ptrdiff_t>(window_size_));
  }
  return window;
}

}  // namespace elicit::text
