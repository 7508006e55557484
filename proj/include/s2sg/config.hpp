#pragma once

#include <string>

#include <json.hpp>

#include "s2sg/interchange.hpp"

namespace s2sg {

enum class GrounderKind { lexical, llm, scripted };

GrounderKind parse_grounder_kind(const std::string& name);

struct LlmSettings {
    std::string endpoint;  // falls back to S2SG_LLM_ENDPOINT
    std::string api_key;   // falls back to S2SG_LLM_API_KEY
    std::string model;     // falls back to S2SG_LLM_MODEL
    int timeout_ms = 60000;
    int max_retries = 3;
    int backoff_base_ms = 1000;
    int max_in_flight = 4;
};

struct AvatarSettings {
    bool visible = true;
    std::string corner = "bottom-right";  // top-left|top-right|bottom-left|bottom-right
};

// Merged pipeline settings. The CLI layers config file, environment and
// flags (flags win) into one of these; the C API receives it as JSON.
struct Config {
    GrounderKind grounder = GrounderKind::lexical;
    FormatVariant variant{true, true};
    double theta = 0.5;
    bool exclude_titles = false;
    double temperature = 0.0;
    int max_repair_attempts = 1;
    std::string rules_text;                // empty selects the built-in rules
    std::string prompt_template_eval;      // template file path override
    std::string prompt_template_conduct;   // template file path override
    std::string fixture;                   // scripted responder fixture path
    LlmSettings llm;
    std::string audit_path;
    int max_concurrent_slides = 4;
    int fps = 10;
    int width = 1280;
    int height = 720;
    AvatarSettings avatar;
    double wpm = 150.0;
    double min_clip_seconds = 1.5;
    std::string slides_dir;                // rasterized slide images for render
    bool emit_mux = false;

    // Parses and validates; unknown keys are rejected with Error{config}.
    static Config from_json(const nlohmann::json& j);
    static Config from_json_text(const std::string& text);

    nlohmann::json to_json() const;
    void validate() const;
};

}  // namespace s2sg
