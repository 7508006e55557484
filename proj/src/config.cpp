#include "s2sg/config.hpp"

#include <set>

#include "s2sg/error.hpp"

namespace s2sg {

using nlohmann::json;

GrounderKind parse_grounder_kind(const std::string& name) {
    if (name == "lexical") return GrounderKind::lexical;
    if (name == "llm") return GrounderKind::llm;
    if (name == "scripted") return GrounderKind::scripted;
    throw config_error("unknown grounder: " + name + " (expected llm|lexical|scripted)");
}

namespace {

const char* grounder_name(GrounderKind kind) {
    switch (kind) {
        case GrounderKind::lexical: return "lexical";
        case GrounderKind::llm: return "llm";
        case GrounderKind::scripted: return "scripted";
    }
    return "lexical";
}

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& scope) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.contains(it.key())) {
            throw config_error("unknown config key: " + scope + it.key());
        }
    }
}

std::pair<int, int> parse_resolution(const std::string& text) {
    std::size_t x = text.find('x');
    if (x == std::string::npos) throw config_error("resolution must look like 1280x720: " + text);
    try {
        int w = std::stoi(text.substr(0, x));
        int h = std::stoi(text.substr(x + 1));
        return {w, h};
    } catch (const std::exception&) {
        throw config_error("resolution must look like 1280x720: " + text);
    }
}

}  // namespace

Config Config::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw config_error(std::string("cannot parse config JSON: ") + e.what());
    }
    return from_json(j);
}

Config Config::from_json(const json& j) {
    if (!j.is_object()) throw config_error("config must be a JSON object");
    static const std::set<std::string> known = {
        "grounder",       "variant",        "theta",
        "exclude_titles", "temperature",    "max_repair_attempts",
        "rules_text",     "prompt_template_eval", "prompt_template_conduct",
        "fixture",        "llm",            "audit",
        "max_concurrent_slides", "fps",     "resolution",
        "avatar",         "wpm",            "min_clip_seconds",
        "slides_dir",     "emit_mux",
    };
    reject_unknown_keys(j, known, "");

    Config c;
    if (j.contains("grounder")) c.grounder = parse_grounder_kind(j.at("grounder").get<std::string>());
    if (j.contains("variant")) c.variant = FormatVariant::parse(j.at("variant").get<std::string>());
    if (j.contains("theta")) c.theta = j.at("theta").get<double>();
    if (j.contains("exclude_titles")) c.exclude_titles = j.at("exclude_titles").get<bool>();
    if (j.contains("temperature")) c.temperature = j.at("temperature").get<double>();
    if (j.contains("max_repair_attempts")) c.max_repair_attempts = j.at("max_repair_attempts").get<int>();
    if (j.contains("rules_text")) c.rules_text = j.at("rules_text").get<std::string>();
    if (j.contains("prompt_template_eval")) c.prompt_template_eval = j.at("prompt_template_eval").get<std::string>();
    if (j.contains("prompt_template_conduct")) c.prompt_template_conduct = j.at("prompt_template_conduct").get<std::string>();
    if (j.contains("fixture")) c.fixture = j.at("fixture").get<std::string>();
    if (j.contains("audit")) c.audit_path = j.at("audit").get<std::string>();
    if (j.contains("max_concurrent_slides")) c.max_concurrent_slides = j.at("max_concurrent_slides").get<int>();
    if (j.contains("fps")) c.fps = j.at("fps").get<int>();
    if (j.contains("resolution")) {
        auto [w, h] = parse_resolution(j.at("resolution").get<std::string>());
        c.width = w;
        c.height = h;
    }
    if (j.contains("wpm")) c.wpm = j.at("wpm").get<double>();
    if (j.contains("min_clip_seconds")) c.min_clip_seconds = j.at("min_clip_seconds").get<double>();
    if (j.contains("slides_dir")) c.slides_dir = j.at("slides_dir").get<std::string>();
    if (j.contains("emit_mux")) c.emit_mux = j.at("emit_mux").get<bool>();

    if (j.contains("llm")) {
        const json& l = j.at("llm");
        static const std::set<std::string> known_llm = {
            "endpoint", "api_key", "model", "timeout_ms", "max_retries",
            "backoff_base_ms", "max_in_flight",
        };
        reject_unknown_keys(l, known_llm, "llm.");
        if (l.contains("endpoint")) c.llm.endpoint = l.at("endpoint").get<std::string>();
        if (l.contains("api_key")) c.llm.api_key = l.at("api_key").get<std::string>();
        if (l.contains("model")) c.llm.model = l.at("model").get<std::string>();
        if (l.contains("timeout_ms")) c.llm.timeout_ms = l.at("timeout_ms").get<int>();
        if (l.contains("max_retries")) c.llm.max_retries = l.at("max_retries").get<int>();
        if (l.contains("backoff_base_ms")) c.llm.backoff_base_ms = l.at("backoff_base_ms").get<int>();
        if (l.contains("max_in_flight")) c.llm.max_in_flight = l.at("max_in_flight").get<int>();
    }
    if (j.contains("avatar")) {
        const json& a = j.at("avatar");
        static const std::set<std::string> known_avatar = {"visible", "corner"};
        reject_unknown_keys(a, known_avatar, "avatar.");
        if (a.contains("visible")) c.avatar.visible = a.at("visible").get<bool>();
        if (a.contains("corner")) c.avatar.corner = a.at("corner").get<std::string>();
    }

    c.validate();
    return c;
}

void Config::validate() const {
    if (theta < 0.0 || theta > 1.0) throw config_error("theta must be in [0,1]");
    if (temperature < 0.0) throw config_error("temperature must be >= 0");
    if (max_repair_attempts < 0) throw config_error("max_repair_attempts must be >= 0");
    if (max_concurrent_slides < 1) throw config_error("max_concurrent_slides must be >= 1");
    if (fps <= 0) throw config_error("fps must be > 0");
    if (width <= 0 || height <= 0) throw config_error("resolution must be positive");
    if (wpm <= 0.0) throw config_error("wpm must be > 0");
    if (min_clip_seconds <= 0.0) throw config_error("min_clip_seconds must be > 0");
    if (llm.timeout_ms <= 0) throw config_error("llm.timeout_ms must be > 0");
    if (llm.max_retries < 0) throw config_error("llm.max_retries must be >= 0");
    if (llm.max_in_flight < 1) throw config_error("llm.max_in_flight must be >= 1");
    static const std::set<std::string> corners = {"top-left", "top-right", "bottom-left",
                                                  "bottom-right"};
    if (!corners.contains(avatar.corner)) {
        throw config_error("avatar.corner must be one of top-left|top-right|bottom-left|bottom-right");
    }
}

json Config::to_json() const {
    json j;
    j["grounder"] = grounder_name(grounder);
    j["variant"] = variant.name();
    j["theta"] = theta;
    j["exclude_titles"] = exclude_titles;
    j["temperature"] = temperature;
    j["max_repair_attempts"] = max_repair_attempts;
    if (!rules_text.empty()) j["rules_text"] = rules_text;
    if (!prompt_template_eval.empty()) j["prompt_template_eval"] = prompt_template_eval;
    if (!prompt_template_conduct.empty()) j["prompt_template_conduct"] = prompt_template_conduct;
    if (!fixture.empty()) j["fixture"] = fixture;
    if (!audit_path.empty()) j["audit"] = audit_path;
    j["max_concurrent_slides"] = max_concurrent_slides;
    j["fps"] = fps;
    j["resolution"] = std::to_string(width) + "x" + std::to_string(height);
    j["avatar"] = json{{"visible", avatar.visible}, {"corner", avatar.corner}};
    j["wpm"] = wpm;
    j["min_clip_seconds"] = min_clip_seconds;
    if (!slides_dir.empty()) j["slides_dir"] = slides_dir;
    j["emit_mux"] = emit_mux;
    json l;
    if (!llm.endpoint.empty()) l["endpoint"] = llm.endpoint;
    if (!llm.api_key.empty()) l["api_key"] = llm.api_key;
    if (!llm.model.empty()) l["model"] = llm.model;
    l["timeout_ms"] = llm.timeout_ms;
    l["max_retries"] = llm.max_retries;
    l["backoff_base_ms"] = llm.backoff_base_ms;
    l["max_in_flight"] = llm.max_in_flight;
    j["llm"] = std::move(l);
    return j;
}

}  // namespace s2sg
