#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>

#include <json.hpp>

#include "elicit/error.hpp"
#include "elicit/tone.hpp"

namespace elicit::tone {

HttpToneClient::HttpToneClient(ToneClientConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.timeout.count() <= 0) {
    throw Error(ErrorCode::invalid_argument, "tone client timeout must be positive");
  }
  const auto scheme_end = cfg_.endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::invalid_argument, "tone endpoint must be an http(s) URL");
  }
  const auto path_begin = cfg_.endpoint.find('/', scheme_end + 3);
  base_ = cfg_.endpoint.substr(0, path_begin);
  path_ = path_begin == std::string::npos ? "/" : cfg_.endpoint.substr(path_begin);
}

ToneProfile HttpToneClient::analyze(std::string_view text) {
  httplib::Client cli(base_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(cfg_.timeout - secs);
  cli.set_connection_timeout(secs.count(), usecs.count());
  cli.set_read_timeout(secs.count(), usecs.count());
  cli.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers headers;
  if (!cfg_.credentials_env.empty()) {
    if (const char* token = std::getenv(cfg_.credentials_env.c_str())) {
      headers.emplace("Authorization", std::string("Bearer ") + token);
    }
  }
  const std::string body = nlohmann::json{{"text", std::string(text)}}.dump();
  auto res = cli.Post(path_, headers, body, "application/json");
  if (!res) {
    throw Error(ErrorCode::tone_service_unavailable,
                "tone request failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::tone_service_unavailable,
                "tone service returned HTTP " + std::to_string(res->status));
  }
  try {
    return parse_wire(res->body);
  } catch (const Error& e) {
    throw Error(ErrorCode::tone_service_unavailable, e.what());
  }
}

}  // namespace elicit::tone
