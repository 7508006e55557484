#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include <json.hpp>

#include "s2sg/config.hpp"

namespace s2sg {

struct LlmRequest {
    std::string model_name;
    double temperature = 0.0;
    std::string system_text;
    std::string user_text;
    enum class Format { json, free };
    Format format = Format::json;
};

struct LlmReply {
    std::string text;
    std::optional<int> prompt_tokens;
    std::optional<int> completion_tokens;
    long latency_ms = 0;
    int attempts = 1;
};

// Stable 64-bit FNV-1a of the prompt bytes, as 16 lowercase hex digits.
// Keys scripted-responder fixtures and the audit log.
std::string prompt_hash(std::string_view text);

// Minimal chat-completion client over HTTP. One generic wire shape:
// POST {model, temperature, messages[], response_format?} to the
// configured endpoint, bearer credential in the Authorization header.
// Transient failures (connect errors, timeouts, 429, 5xx) retry with
// exponential backoff up to the configured cap; auth failures and
// well-formed completions never retry. Safe for concurrent calls; a
// global in-flight limit provides backpressure.
class LlmClient {
  public:
    explicit LlmClient(LlmSettings settings, std::string audit_path = "");
    ~LlmClient();

    LlmClient(const LlmClient&) = delete;
    LlmClient& operator=(const LlmClient&) = delete;

    LlmReply complete(const LlmRequest& req) const;

    // Request construction is a pure function of the request; exposed for
    // determinism tests.
    static nlohmann::json request_body(const LlmRequest& req);

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Offline test double: deterministic replies keyed by prompt hash.
class ScriptedResponder {
  public:
    ScriptedResponder() = default;

    static ScriptedResponder from_file(const std::string& path);
    static ScriptedResponder from_json_text(const std::string& text, const std::string& label);

    // Throws Error{runtime} naming the hash when the prompt is unknown.
    std::string reply_for(const std::string& prompt) const;
    bool has(const std::string& prompt) const;

    void add(const std::string& prompt, std::string reply);
    std::size_t size() const { return replies_.size(); }
    std::string to_json() const;

  private:
    std::unordered_map<std::string, std::string> replies_;
};

}  // namespace s2sg
