#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "json.hpp"
#include "pedsim/errors.hpp"
#include "pedsim/oracle_gateway.hpp"
#include "util.hpp"

namespace pedsim {

namespace {

std::string base64(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string mime_type(const std::filesystem::path& p) {
  const auto ext = detail::to_lower(p.extension().string());
  if (ext == ".png") return "image/png";
  return "image/jpeg";
}

}  // namespace

std::string build_chat_request(const OracleConfig& config, std::span<const ChatTurn> turns) {
  nlohmann::ordered_json doc;
  doc["model"] = config.model;
  doc["temperature"] = config.temperature;
  auto& messages = doc["messages"] = nlohmann::ordered_json::array();
  for (const auto& turn : turns) {
    nlohmann::ordered_json msg;
    msg["role"] = to_string(turn.role);
    if (turn.frames.empty()) {
      msg["content"] = turn.text;
    } else {
      auto parts = nlohmann::ordered_json::array();
      parts.push_back({{"type", "text"}, {"text", turn.text}});
      for (const auto& frame : turn.frames) {
        const auto url = "data:" + mime_type(frame) + ";base64," + base64(detail::read_file(frame));
        parts.push_back({{"type", "image_url"}, {"image_url", {{"url", url}}}});
      }
      msg["content"] = std::move(parts);
    }
    messages.push_back(std::move(msg));
  }
  return doc.dump();
}

std::string parse_chat_response(std::string_view body) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw TransportError(std::string("response is not JSON: ") + e.what());
  }
  try {
    const auto& content = doc.at("choices").at(0).at("message").at("content");
    if (content.is_string()) return content.get<std::string>();
    // Some services return content as a list of text parts.
    std::string text;
    for (const auto& part : content) {
      if (part.value("type", "") == "text") text += part.value("text", "");
    }
    return text;
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("response has no choices[0].message.content: ") + e.what());
  }
}

// In-flight cap plus a token bucket (burst of one second's worth).
struct RemoteOracle::Throttle {
  explicit Throttle(int max_in_flight, double rate)
      : slots(max_in_flight), rate(rate), tokens(std::max(1.0, rate)) {}

  void acquire() {
    std::unique_lock lock(mu);
    cv.wait(lock, [&] { return slots > 0; });
    --slots;
    if (rate <= 0) return;
    for (;;) {
      const auto now = std::chrono::steady_clock::now();
      const double elapsed = std::chrono::duration<double>(now - last).count();
      last = now;
      tokens = std::min(std::max(1.0, rate), tokens + elapsed * rate);
      if (tokens >= 1.0) {
        tokens -= 1.0;
        return;
      }
      const auto wait = std::chrono::duration<double>((1.0 - tokens) / rate);
      lock.unlock();
      std::this_thread::sleep_for(wait);
      lock.lock();
    }
  }

  void release() {
    {
      std::lock_guard lock(mu);
      ++slots;
    }
    cv.notify_one();
  }

  std::mutex mu;
  std::condition_variable cv;
  int slots;
  double rate;
  double tokens;
  std::chrono::steady_clock::time_point last = std::chrono::steady_clock::now();
};

RemoteOracle::RemoteOracle(OracleConfig config, std::shared_ptr<HttpTransport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  config_.backend = Backend::remote;
  config_.validate();
  const char* value = std::getenv(config_.credential_env.c_str());
  if (value == nullptr || *value == '\0') {
    throw ConfigError("credential variable " + config_.credential_env + " is not set");
  }
  credential_ = value;
  if (!transport_) throw ContractViolation("remote oracle requires a transport");
  throttle_ = std::make_unique<Throttle>(config_.max_in_flight, config_.requests_per_second);
}

RemoteOracle::~RemoteOracle() = default;

std::string RemoteOracle::exchange(std::span<const ChatTurn> turns) {
  HttpRequest request;
  request.url = config_.endpoint;
  request.headers = {{"Authorization", "Bearer " + credential_}, {"Content-Type", "application/json"}};
  request.body = build_chat_request(config_, turns);
  request.timeout_s = config_.timeout_s;

  std::string last_error;
  for (int attempt = 0; attempt <= config_.retry_limit; ++attempt) {
    if (attempt > 0 && config_.retry_backoff_s > 0) {
      std::this_thread::sleep_for(std::chrono::duration<double>(config_.retry_backoff_s * attempt));
    }
    throttle_->acquire();
    try {
      const auto response = transport_->post(request);
      throttle_->release();
      if (response.status >= 200 && response.status < 300) return parse_chat_response(response.body);
      last_error = fmt::format("HTTP {}: {}", response.status, response.body.substr(0, 200));
    } catch (const TransportError& e) {
      throttle_->release();
      last_error = e.what();
    } catch (...) {
      throttle_->release();
      throw;
    }
  }
  throw TransportError(fmt::format("oracle request failed after {} attempt(s): {}",
                                   config_.retry_limit + 1, last_error));
}

std::string RemoteOracle::decide(const DecisionQuery& query) {
  const auto turns = build_decision_turns(config_, query);
  return exchange(turns);
}

std::string RemoteOracle::ask(const SurveyQuery& query) {
  const auto turns = build_survey_turns(query);
  return exchange(turns);
}

std::string RemoteOracle::craft_persona(std::string_view instruction) {
  const std::vector<ChatTurn> turns = {
      {ChatTurn::Role::system,
       "You turn questionnaire data into persona documents. Reply with JSON only.",
       {}},
      {ChatTurn::Role::user, std::string(instruction), {}}};
  return exchange(turns);
}

std::string RemoteOracle::label() const { return "remote:" + config_.model; }

}  // namespace pedsim
