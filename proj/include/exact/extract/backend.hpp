#pragma once

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "exact/core/phenotype.hpp"
#include "exact/extract/prompt.hpp"
#include "exact/extract/response.hpp"
#include "exact/extract/rules.hpp"

namespace exact::extract {

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  require(EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) == 1, Errc::io,
          "SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

class ExtractionBackend {
 public:
  virtual ~ExtractionBackend() = default;
  /// Raw extraction; may return an empty lobe set.
  virtual TumorPhenotype extract(std::string_view report) const = 0;
  virtual std::string name() const = 0;
};

class RuleBackend final : public ExtractionBackend {
 public:
  TumorPhenotype extract(std::string_view report) const override { return rule_extract(report); }
  std::string name() const override { return "rule"; }
};

/// Carries one serialized request to a completion service and returns the
/// raw response body. Failures throw Errc::transport.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual std::string post(const std::string& body) const = 0;
};

class HttpTransport final : public ChatTransport {
 public:
  /// `endpoint` is a full URL such as "https://api.openai.com/v1/chat/completions".
  explicit HttpTransport(std::string endpoint, std::string api_key = env_api_key(),
                         std::chrono::seconds timeout = std::chrono::seconds(60))
      : api_key_(std::move(api_key)), timeout_(timeout) {
    static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    require(std::regex_match(endpoint, m, url_re), Errc::config, "bad endpoint URL '" + endpoint + "'");
    base_ = m[1].str();
    path_ = m[2].matched ? m[2].str() : "/";
  }

  static std::string env_api_key() {
    const char* k = std::getenv("EXACT_API_KEY");
    return k ? std::string(k) : std::string();
  }

  std::string post(const std::string& body) const override {
    httplib::Client cli(base_);
    cli.set_connection_timeout(timeout_);
    cli.set_read_timeout(timeout_);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    auto res = cli.Post(path_, headers, body, "application/json");
    if (!res) fail(Errc::transport, "POST " + base_ + path_ + " failed: " + httplib::to_string(res.error()));
    if (res->status != 200) fail(Errc::transport, "POST " + base_ + path_ + " returned HTTP " + std::to_string(res->status));
    return res->body;
  }

 private:
  std::string base_, path_, api_key_;
  std::chrono::seconds timeout_;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
};

/// Sends both prompt kinds through a transport and validates the answers.
class ChatBackend : public ExtractionBackend {
 public:
  ChatBackend(std::shared_ptr<const ChatTransport> transport, PromptTemplate tpl = {}, RetryPolicy retry = {})
      : transport_(std::move(transport)), tpl_(std::move(tpl)), retry_(retry) {
    require(transport_ != nullptr, Errc::config, "chat backend needs a transport");
    require(retry_.attempts >= 1, Errc::config, "retry attempts must be at least 1");
    tpl_.validate();
  }

  TumorPhenotype extract(std::string_view report) const override {
    TumorPhenotype out = parse_phenotype_response(complete(build_chat_request(report, PromptKind::lobe, tpl_)).content,
                                                  PromptKind::lobe);
    out.lymph_stations =
        parse_phenotype_response(complete(build_chat_request(report, PromptKind::lymph, tpl_)).content,
                                 PromptKind::lymph)
            .lymph_stations;
    return out;
  }

  ChatResponse complete(const ChatRequest& req) const {
    const std::string body = serialize_request(req);
    auto backoff = retry_.initial_backoff;
    for (int attempt = 1;; ++attempt) {
      try {
        return parse_wire_response(transport_->post(body));
      } catch (const Error& e) {
        if (e.code() != Errc::transport) throw;
        if (attempt >= retry_.attempts)
          fail(Errc::transport, e.message() + " (gave up after " + std::to_string(attempt) + " attempts)");
      }
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }

  std::string name() const override { return "chat"; }
  const PromptTemplate& prompt_template() const { return tpl_; }

 private:
  std::shared_ptr<const ChatTransport> transport_;
  PromptTemplate tpl_;
  RetryPolicy retry_;
};

/// Canned answers for one report, keyed in the fixture file by the SHA-256
/// of the report text.
struct MockAnswer {
  std::string lobe;
  std::string lymph = "None";
};

using MockFixtures = std::map<std::string, MockAnswer>;

inline MockFixtures mock_fixtures_from_json(const nlohmann::json& j) {
  require(j.is_object(), Errc::config, "mock fixtures must be a JSON object");
  MockFixtures out;
  for (const auto& [key, value] : j.items()) {
    MockAnswer a;
    if (value.is_string()) {
      a.lobe = value.get<std::string>();
    } else if (value.is_object() && value.contains("lobe") && value["lobe"].is_string()) {
      a.lobe = value["lobe"].get<std::string>();
      if (value.contains("lymph")) a.lymph = value["lymph"].get<std::string>();
    } else {
      fail(Errc::config, "mock fixture '" + key + "' must be a string or {lobe, lymph}");
    }
    out.emplace(key, std::move(a));
  }
  return out;
}

inline MockFixtures load_mock_fixtures(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Errc::io, "cannot open mock fixtures '" + path + "'");
  try {
    return mock_fixtures_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::config, "mock fixtures '" + path + "' are not valid JSON: " + e.what());
  }
}

/// Offline stand-in for a completion service. It decodes the request body,
/// recovers the report behind the prompt and answers from the fixtures.
class MockTransport final : public ChatTransport {
 public:
  MockTransport(MockFixtures fixtures, PromptTemplate tpl = {}) : fixtures_(std::move(fixtures)), tpl_(std::move(tpl)) {}

  std::string post(const std::string& body) const override {
    const ChatRequest req = parse_wire_request(body);
    for (const auto& m : req.messages) {
      if (m.role != Role::user) continue;
      for (auto kind : {PromptKind::lobe, PromptKind::lymph}) {
        const std::string prefix = (kind == PromptKind::lobe ? tpl_.user_prompt_lobe : tpl_.user_prompt_lymph) + "\n";
        if (m.content.rfind(prefix, 0) != 0) continue;
        const std::string report = m.content.substr(prefix.size());
        const auto it = fixtures_.find(sha256_hex(report));
        if (it == fixtures_.end())
          fail(Errc::mock_fixture_missing, "no mock answer for report " + sha256_hex(report).substr(0, 12));
        return make_wire_response(kind == PromptKind::lobe ? it->second.lobe : it->second.lymph);
      }
    }
    fail(Errc::invalid_argument, "request carries no recognised prompt");
  }

 private:
  MockFixtures fixtures_;
  PromptTemplate tpl_;
};

class MockBackend final : public ChatBackend {
 public:
  explicit MockBackend(MockFixtures fixtures, PromptTemplate tpl = {})
      : ChatBackend(std::make_shared<MockTransport>(std::move(fixtures), tpl), tpl, RetryPolicy{1, {}}) {}
  std::string name() const override { return "mock"; }
};

/// Answer a well-behaved model would give for `truth`; used to build fixtures.
inline MockAnswer render_mock_answer(const TumorPhenotype& truth) {
  MockAnswer a;
  if (truth.lobes.empty()) {
    a.lobe = "No current determinate tumor is described.";
  } else {
    a.lobe = "The tumor is located in the ";
    std::size_t i = 0;
    for (LobeId l : truth.lobes) {
      if (i > 0) a.lobe += (i + 1 == truth.lobes.size()) ? " and the " : ", the ";
      a.lobe += std::string(full_name(l)) + " (" + std::string(to_string(l)) + ")";
      ++i;
    }
    a.lobe += ".";
  }
  if (truth.lymph_stations.empty()) {
    a.lymph = "None";
  } else {
    a.lymph = "Malignant stations: ";
    std::size_t i = 0;
    for (const auto& s : truth.lymph_stations) a.lymph += (i++ ? ", " : "") + s;
    a.lymph += ".";
  }
  return a;
}

inline nlohmann::ordered_json mock_fixtures_to_json(const MockFixtures& f) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, a] : f) j[k] = {{"lobe", a.lobe}, {"lymph", a.lymph}};
  return j;
}

/// Guided-mode entry point: an extraction with no lobe is an error.
inline TumorPhenotype extract_phenotype(std::string_view report, const ExtractionBackend& backend) {
  TumorPhenotype p = backend.extract(report);
  require(!p.lobes.empty(), Errc::empty_phenotype, backend.name() + " backend found no tumor lobe in the report");
  return p;
}

inline nlohmann::ordered_json phenotype_to_json(const TumorPhenotype& p) {
  nlohmann::ordered_json j;
  j["lobes"] = nlohmann::ordered_json::array();
  for (LobeId l : p.lobes) j["lobes"].push_back(std::string(to_string(l)));
  j["lymph_stations"] = p.lymph_stations;
  return j;
}

inline TumorPhenotype phenotype_from_json(const nlohmann::json& j) {
  TumorPhenotype p;
  for (const auto& l : j.at("lobes")) p.lobes.insert(parse_lobe(l.get<std::string>()));
  if (j.contains("lymph_stations"))
    for (const auto& s : j.at("lymph_stations")) p.lymph_stations.insert(s.get<std::string>());
  return p;
}

}  // namespace exact::extract
