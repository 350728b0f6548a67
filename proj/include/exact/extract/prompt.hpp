#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "exact/core/error.hpp"

namespace exact::extract {

enum class PromptKind { lobe, lymph };

constexpr std::string_view to_string(PromptKind k) noexcept { return k == PromptKind::lobe ? "lobe" : "lymph"; }

enum class Role { system, assistant, user };

constexpr std::string_view to_string(Role r) noexcept {
  switch (r) {
    case Role::system: return "system";
    case Role::assistant: return "assistant";
    case Role::user: return "user";
  }
  return "user";
}

inline Role parse_role(std::string_view s) {
  if (s == "system") return Role::system;
  if (s == "assistant") return Role::assistant;
  if (s == "user") return Role::user;
  fail(Errc::invalid_argument, "unknown chat role '" + std::string(s) + "'");
}

struct PromptTemplate {
  std::string assistant_context =
      "The possible options are: right upper lobe (RUL), right middle lobe (RML), right lower lobe (RLL), "
      "left upper lobe (LUL), left lower lobe (LLL).";
  std::string user_prompt_lobe =
      "find the current lung lobe that the determinate tumor/carcinoma/malignancy is involving in this report:";
  std::string user_prompt_lymph = "find out what lymph station/node are malignant in this report:";
  double temperature = 0.0;
  std::string model_id = "gpt-3.5-turbo";

  void validate() const {
    require(!user_prompt_lobe.empty() && !user_prompt_lymph.empty(), Errc::config, "prompts must be non-empty");
    require(!model_id.empty(), Errc::config, "model id must be non-empty");
    require(std::isfinite(temperature) && temperature >= 0.0 && temperature <= 2.0, Errc::config,
            "temperature must lie in [0, 2]");
  }

  /// The lobe prompt must ask for a current, determinate malignancy.
  bool has_lobe_keywords() const {
    return user_prompt_lobe.find("current") != std::string::npos &&
           user_prompt_lobe.find("determinate") != std::string::npos &&
           user_prompt_lobe.find("tumor") != std::string::npos &&
           user_prompt_lobe.find("carcinoma") != std::string::npos &&
           user_prompt_lobe.find("malignancy") != std::string::npos;
  }
};

struct ChatMessage {
  Role role = Role::user;
  std::string content;
  bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
  std::string model_id;
  double temperature = 0.0;
  std::vector<ChatMessage> messages;
  bool operator==(const ChatRequest&) const = default;
};

struct ChatResponse {
  std::string content;
};

inline ChatRequest build_chat_request(std::string_view report, PromptKind kind, const PromptTemplate& tpl = {}) {
  tpl.validate();
  require(report.find_first_not_of(" \t\r\n") != std::string_view::npos, Errc::invalid_argument,
          "report text is empty");
  ChatRequest req{tpl.model_id, tpl.temperature, {}};
  if (kind == PromptKind::lobe) {
    if (!tpl.assistant_context.empty()) req.messages.push_back({Role::assistant, tpl.assistant_context});
    req.messages.push_back({Role::user, tpl.user_prompt_lobe + "\n" + std::string(report)});
  } else {
    req.messages.push_back({Role::user, tpl.user_prompt_lymph + "\n" + std::string(report)});
  }
  return req;
}

/// Wire form. Key order is fixed and an integral temperature is written as
/// an integer, so the default request carries `"temperature":0`.
inline nlohmann::ordered_json to_wire_json(const ChatRequest& req) {
  nlohmann::ordered_json j;
  j["model"] = req.model_id;
  if (req.temperature == std::floor(req.temperature) && std::abs(req.temperature) < 1e15)
    j["temperature"] = static_cast<long long>(req.temperature);
  else
    j["temperature"] = req.temperature;
  j["messages"] = nlohmann::ordered_json::array();
  for (const auto& m : req.messages) {
    nlohmann::ordered_json mj;
    mj["role"] = std::string(to_string(m.role));
    mj["content"] = m.content;
    j["messages"].push_back(std::move(mj));
  }
  return j;
}

inline std::string serialize_request(const ChatRequest& req) {
  return to_wire_json(req).dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
}

inline ChatRequest parse_wire_request(std::string_view body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::invalid_argument, std::string("request body is not JSON: ") + e.what());
  }
  try {
    ChatRequest req;
    req.model_id = j.at("model").get<std::string>();
    req.temperature = j.at("temperature").get<double>();
    for (const auto& m : j.at("messages"))
      req.messages.push_back({parse_role(m.at("role").get<std::string>()), m.at("content").get<std::string>()});
    return req;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::invalid_argument, std::string("malformed chat request: ") + e.what());
  }
}

/// Pulls `choices[0].message.content` out of a completion response body.
inline ChatResponse parse_wire_response(std::string_view body) {
  try {
    const auto j = nlohmann::json::parse(body);
    return {j.at("choices").at(0).at("message").at("content").get<std::string>()};
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::unparseable_response, std::string("completion body lacks choices[0].message.content: ") + e.what());
  }
}

inline std::string make_wire_response(std::string_view content) {
  nlohmann::ordered_json msg;
  msg["role"] = "assistant";
  msg["content"] = std::string(content);
  nlohmann::ordered_json choice;
  choice["index"] = 0;
  choice["message"] = msg;
  choice["finish_reason"] = "stop";
  nlohmann::ordered_json j;
  j["object"] = "chat.completion";
  j["choices"] = nlohmann::ordered_json::array({choice});
  return j.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
}

}  // namespace exact::extract
