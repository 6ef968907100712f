#include <chrono>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "radar/paraphrase/paraphrase.hpp"

namespace radar::paraphrase {

HttpParaphraseService::HttpParaphraseService(HttpClientConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.endpoint.empty()) throw Error("unseen paraphraser endpoint is not set (--unseen-endpoint or RADAR_UNSEEN_ENDPOINT)");
  if (cfg_.max_attempts < 1) throw Error("max_attempts must be >= 1");
  const auto scheme = cfg_.endpoint.find("://");
  if (scheme == std::string::npos) throw Error("endpoint must include a scheme: " + cfg_.endpoint);
  const auto slash = cfg_.endpoint.find('/', scheme + 3);
  base_ = cfg_.endpoint.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : cfg_.endpoint.substr(slash);
}

ParaphraseResponse HttpParaphraseService::call(const ParaphraseRequest& request) {
  if (request.instruction.empty() || request.text.empty()) {
    throw Error("paraphrase request " + request.id + " needs a non-empty instruction and text");
  }
  const std::string body =
      nlohmann::json{{"id", request.id}, {"instruction", request.instruction}, {"text", request.text}}.dump();
  httplib::Headers headers;
  if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

  std::string last_error;
  double backoff = cfg_.initial_backoff_ms;
  for (int attempt = 1; attempt <= cfg_.max_attempts; ++attempt) {
    const auto start = std::chrono::steady_clock::now();
    httplib::Client client(base_);
    const auto timeout = std::chrono::duration<double>(cfg_.timeout_s);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    auto res = client.Post(path_, headers, body, "application/json");
    if (res && res->status == 200) {
      try {
        const auto j = nlohmann::json::parse(res->body);
        auto text = j.at("text").get<std::string>();
        if (text.empty()) throw Error("empty text");
        const double ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        return {request.id, std::move(text), ms, res->status};
      } catch (const std::exception& e) {
        last_error = std::string("bad response body: ") + e.what();
      }
    } else if (res) {
      last_error = "HTTP status " + std::to_string(res->status);
    } else {
      last_error = "transport error: " + httplib::to_string(res.error());
    }
    if (attempt < cfg_.max_attempts) {
      std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(backoff));
      backoff *= cfg_.backoff_multiplier;
    }
  }
  throw Error("paraphrase request " + request.id + " failed after " + std::to_string(cfg_.max_attempts) +
              " attempts: " + last_error);
}

}  // namespace radar::paraphrase
