#include "s2sg/llm_client.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <semaphore>
#include <thread>

#include <httplib.h>

#include "s2sg/error.hpp"
#include "s2sg/interchange.hpp"

namespace s2sg {

using nlohmann::json;

std::string prompt_hash(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

namespace {

std::string env_or(const char* name, const std::string& fallback) {
    if (!fallback.empty()) return fallback;
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::string();
}

struct EndpointParts {
    std::string base;  // scheme://host[:port]
    std::string path;  // /v1/chat/completions
};

EndpointParts split_endpoint(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw config_error("llm endpoint must be a full URL (scheme://host/path): " + url);
    }
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

bool is_transient_status(int status) {
    return status == 429 || (status >= 500 && status < 600);
}

}  // namespace

struct LlmClient::Impl {
    LlmSettings settings;
    std::string audit_path;
    mutable std::mutex audit_mutex;
    mutable std::counting_semaphore<4096> in_flight{1};

    Impl(LlmSettings s, std::string audit) : settings(std::move(s)), audit_path(std::move(audit)) {
        settings.endpoint = env_or("S2SG_LLM_ENDPOINT", settings.endpoint);
        settings.api_key = env_or("S2SG_LLM_API_KEY", settings.api_key);
        settings.model = env_or("S2SG_LLM_MODEL", settings.model);
        in_flight.release(std::max(0, settings.max_in_flight - 1));
    }

    void audit(const json& record) const {
        if (audit_path.empty()) return;
        std::lock_guard<std::mutex> lock(audit_mutex);
        std::ofstream out(audit_path, std::ios::app);
        out << record.dump() << '\n';
    }
};

LlmClient::LlmClient(LlmSettings settings, std::string audit_path)
    : impl_(std::make_unique<Impl>(std::move(settings), std::move(audit_path))) {}

LlmClient::~LlmClient() = default;

json LlmClient::request_body(const LlmRequest& req) {
    json messages = json::array();
    if (!req.system_text.empty()) {
        messages.push_back(json{{"role", "system"}, {"content", req.system_text}});
    }
    messages.push_back(json{{"role", "user"}, {"content", req.user_text}});
    json body;
    body["model"] = req.model_name;
    body["temperature"] = req.temperature;
    body["messages"] = std::move(messages);
    if (req.format == LlmRequest::Format::json) {
        body["response_format"] = json{{"type", "json_object"}};
    }
    return body;
}

LlmReply LlmClient::complete(const LlmRequest& req) const {
    const LlmSettings& s = impl_->settings;
    if (s.endpoint.empty()) {
        throw config_error("llm endpoint not configured (set S2SG_LLM_ENDPOINT or llm.endpoint)");
    }
    if (s.api_key.empty()) {
        throw config_error("llm credential not configured (set S2SG_LLM_API_KEY or llm.api_key)");
    }
    EndpointParts endpoint = split_endpoint(s.endpoint);
    std::string body = request_body(req).dump();
    std::string hash = prompt_hash(req.user_text);

    impl_->in_flight.acquire();
    struct Release {
        const Impl* impl;
        ~Release() { impl->in_flight.release(); }
    } release{impl_.get()};

    auto start = std::chrono::steady_clock::now();
    int last_status = 0;
    std::string last_detail;
    for (int attempt = 0; attempt <= s.max_retries; ++attempt) {
        if (attempt > 0) {
            long delay = s.backoff_base_ms * (1L << (attempt - 1));
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }

        httplib::Client client(endpoint.base);
        client.set_connection_timeout(s.timeout_ms / 1000, (s.timeout_ms % 1000) * 1000);
        client.set_read_timeout(s.timeout_ms / 1000, (s.timeout_ms % 1000) * 1000);
        httplib::Headers headers = {{"Authorization", "Bearer " + s.api_key}};
        auto res = client.Post(endpoint.path, headers, body, "application/json");

        if (!res) {
            last_status = 0;
            last_detail = "transport failure: " + httplib::to_string(res.error());
            continue;
        }
        last_status = res->status;
        if (res->status == 401 || res->status == 403) {
            impl_->audit(json{{"prompt_hash", hash}, {"status", res->status}, {"attempts", attempt + 1}});
            throw config_error("llm credential rejected (HTTP " + std::to_string(res->status) + ")");
        }
        if (is_transient_status(res->status)) {
            last_detail = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw s2sg::runtime_error("llm request failed with HTTP " + std::to_string(res->status) +
                                      ": " + res->body);
        }

        json reply_json;
        try {
            reply_json = json::parse(res->body);
        } catch (const json::parse_error& e) {
            throw s2sg::runtime_error(std::string("llm response is not JSON: ") + e.what());
        }
        LlmReply reply;
        try {
            reply.text = reply_json.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception&) {
            throw s2sg::runtime_error("llm response missing choices[0].message.content");
        }
        if (reply_json.contains("usage")) {
            const json& usage = reply_json.at("usage");
            if (usage.contains("prompt_tokens")) reply.prompt_tokens = usage.at("prompt_tokens").get<int>();
            if (usage.contains("completion_tokens")) {
                reply.completion_tokens = usage.at("completion_tokens").get<int>();
            }
        }
        auto end = std::chrono::steady_clock::now();
        reply.latency_ms =
            std::chrono::duration_cast<std::chrono::milliseconds>(end - start).count();
        reply.attempts = attempt + 1;
        json record{{"prompt_hash", hash},
                    {"status", 200},
                    {"latency_ms", reply.latency_ms},
                    {"attempts", reply.attempts},
                    {"model", req.model_name}};
        if (reply.prompt_tokens) record["prompt_tokens"] = *reply.prompt_tokens;
        if (reply.completion_tokens) record["completion_tokens"] = *reply.completion_tokens;
        impl_->audit(record);
        return reply;
    }

    impl_->audit(json{{"prompt_hash", hash}, {"status", last_status}, {"attempts", s.max_retries + 1}});
    throw s2sg::runtime_error("llm retries exhausted after " + std::to_string(s.max_retries + 1) +
                              " attempts; last: " +
                              (last_detail.empty() ? "unknown failure" : last_detail));
}

ScriptedResponder ScriptedResponder::from_file(const std::string& path) {
    return from_json_text(read_text_file(path), path);
}

ScriptedResponder ScriptedResponder::from_json_text(const std::string& text,
                                                    const std::string& label) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw parse_error("cannot parse responder fixture " + label + ": " + e.what());
    }
    ScriptedResponder out;
    const json replies = j.value("replies", json::object());
    for (auto it = replies.begin(); it != replies.end(); ++it) {
        out.replies_[it.key()] = it.value().get<std::string>();
    }
    return out;
}

std::string ScriptedResponder::reply_for(const std::string& prompt) const {
    std::string hash = prompt_hash(prompt);
    auto it = replies_.find(hash);
    if (it == replies_.end()) {
        throw s2sg::runtime_error("responder fixture has no reply for prompt hash " + hash);
    }
    return it->second;
}

bool ScriptedResponder::has(const std::string& prompt) const {
    return replies_.contains(prompt_hash(prompt));
}

void ScriptedResponder::add(const std::string& prompt, std::string reply) {
    replies_[prompt_hash(prompt)] = std::move(reply);
}

std::string ScriptedResponder::to_json() const {
    json replies = json::object();
    for (const auto& [hash, reply] : replies_) replies[hash] = reply;
    json out;
    out["format_version"] = 1;
    out["replies"] = std::move(replies);
    return out.dump();
}

}  // namespace s2sg
