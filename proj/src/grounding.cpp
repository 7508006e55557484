#include "s2sg/grounding.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <set>
#include <thread>
#include <unordered_set>

#include "s2sg/error.hpp"

namespace s2sg {

using nlohmann::json;

namespace {

const std::string kEvalInstruction =
    "You are a presentation support assistant. For each sentence in the following presentation "
    "script, please ground it to the object it describes from the list of slide objects. Note "
    "that not all objects will necessarily be described. Your output must be in JSON format. For "
    "each sentence, return a list of shape_IDs for the corresponding objects.";

const std::string kConductInstruction =
    "You are a presentation video generation assistant. For each sentence in the following "
    "presentation script, please ground it to the object it describes from the list of slide "
    "objects. Note that not all objects are necessarily described. The overall goal is to create "
    "a short video clip for each script sentence and then concatenate them to produce the final "
    "video. Based on the grounding results, assign appropriate visual effect commands for each "
    "script sentence. You may assign multiple commands to a single sentence.";

const std::string kEvalTemplate = kEvalInstruction +
    "\n\n{rules}\n\nSlide objects (JSON):\n{slide_payload}\n\nScript sentences:\n{sentences}\n\n"
    "Return one JSON object mapping each sentence index (as a string) to the list of shape_IDs "
    "for the corresponding objects, for example {\"0\": [\"s2\", \"s4\"], \"1\": []}. Use only "
    "shape_IDs that appear in the slide objects.";

const std::string kConductTemplate = kConductInstruction +
    "\n\n{rules}\n\nSlide objects (JSON):\n{slide_payload}\n\nScript sentences:\n{sentences}\n\n"
    "Return one JSON object mapping each sentence index (as a string) to an object "
    "{\"shape_ids\": [...], \"commands\": [...]}.";

std::string replace_all(std::string text, const std::string& needle, const std::string& value) {
    std::size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        text.replace(pos, needle.size(), value);
        pos += value.size();
    }
    return text;
}

void collect_candidate_ids(const json& entry, std::vector<ShapeId>& out) {
    if (entry.contains("shape_id") && entry.contains("content")) {
        out.emplace_back(entry.at("shape_id").get<std::string>());
    }
    if (entry.contains("children")) {
        for (const json& child : entry.at("children")) collect_candidate_ids(child, out);
    }
}

}  // namespace

const std::string& eval_instruction_text() { return kEvalInstruction; }
const std::string& conduct_instruction_text() { return kConductInstruction; }

std::string default_rules_text(PromptMode mode, const Config& config) {
    std::string rules = "Rules:\n"
        "- Ground each sentence using the whole slide as context. Child objects elaborate their "
        "parent; prefer the most specific object the sentence actually describes.\n"
        "- A sentence may correspond to several objects. Return every object it describes, and "
        "an empty list when none apply.\n";
    if (config.exclude_titles) {
        rules += "- Never ground a sentence to a title object; titles are excluded from the "
                 "candidates.";
    } else {
        rules += "- Grounding to the title is allowed when a sentence introduces the slide's "
                 "topic.";
    }
    if (mode == PromptMode::conduct) {
        rules += "\n\nVisual effect commands you may assign:\n"
            "- POINT: param {\"start_pos\": shape_ID, \"end_pos\": shape_ID}, a pointer moving "
            "between object centers.\n"
            "- RECTANGLE: param {\"position\": shape_ID}, a frame enclosing the object.\n";
        if (config.avatar.visible) {
            rules += "- AVATAR: param {\"pose\": text}, a presenter avatar gesture.\n";
        }
        rules += "Each command is an object {\"type\", \"start_time\", \"duration\", \"param\"}; "
                 "start_time and duration are seconds within the sentence's clip.";
    }
    return rules;
}

PromptBundle build_prompt(const SlideDocument& doc, const std::vector<ScriptSentence>& sentences,
                          PromptMode mode, const Config& config) {
    PromptBundle bundle;
    bundle.mode = mode;
    bundle.instruction = mode == PromptMode::eval ? kEvalInstruction : kConductInstruction;
    bundle.rules = config.rules_text.empty() ? default_rules_text(mode, config)
                                             : config.rules_text;

    // Title objects drop out of the candidate payload only when the
    // variant carries role information.
    json payload = doc.doc;
    if (config.exclude_titles && doc.variant.stylistic) {
        json kept = json::array();
        for (const json& group : payload.at("objects")) {
            if (group.value("role", "") == "title") continue;
            kept.push_back(group);
        }
        payload["objects"] = std::move(kept);
    }
    for (const json& group : payload.at("objects")) {
        collect_candidate_ids(group, bundle.candidate_ids);
    }
    bundle.slide_payload = payload.dump();

    std::string numbered;
    for (const ScriptSentence& s : sentences) {
        if (!numbered.empty()) numbered += '\n';
        numbered += std::to_string(s.index) + ": " + s.text;
    }
    bundle.sentence_list = std::move(numbered);

    std::string tpl;
    const std::string& override_path =
        mode == PromptMode::eval ? config.prompt_template_eval : config.prompt_template_conduct;
    if (!override_path.empty()) {
        tpl = read_text_file(override_path);
    } else {
        tpl = mode == PromptMode::eval ? kEvalTemplate : kConductTemplate;
    }
    tpl = replace_all(std::move(tpl), "{rules}", bundle.rules);
    tpl = replace_all(std::move(tpl), "{slide_payload}", bundle.slide_payload);
    tpl = replace_all(std::move(tpl), "{sentences}", bundle.sentence_list);
    bundle.text = std::move(tpl);
    return bundle;
}

namespace {

json extract_reply_json(const std::string& reply) {
    try {
        return json::parse(reply);
    } catch (const json::parse_error&) {
    }
    // Tolerate markdown fences and prose around the payload: parse the
    // outermost brace/bracket span.
    std::size_t first = reply.find_first_of("{[");
    std::size_t last = reply.find_last_of("}]");
    if (first != std::string::npos && last != std::string::npos && last > first) {
        try {
            return json::parse(reply.substr(first, last - first + 1));
        } catch (const json::parse_error&) {
        }
    }
    throw parse_error("reply is not parseable as JSON");
}

std::optional<std::string> id_from_json(const json& value) {
    if (value.is_string()) return value.get<std::string>();
    if (value.is_number_integer()) return std::to_string(value.get<long long>());
    return std::nullopt;
}

}  // namespace

ParsedGrounding parse_grounding_reply(const std::string& reply,
                                      const std::vector<ShapeId>& valid_ids,
                                      std::size_t n_sentences,
                                      std::vector<ShapeId> object_order) {
    json j = extract_reply_json(reply);

    // Normalize to index -> list-of-ids.
    std::map<std::size_t, json> lists;
    std::vector<std::string> warnings;
    auto note_index = [&](long long index, const json& value) {
        if (index < 0 || index >= static_cast<long long>(n_sentences)) {
            warnings.push_back("reply index " + std::to_string(index) + " out of range; ignored");
            return;
        }
        if (value.is_array()) {
            lists[static_cast<std::size_t>(index)] = value;
        } else if (value.is_object() && value.contains("shape_ids") &&
                   value.at("shape_ids").is_array()) {
            lists[static_cast<std::size_t>(index)] = value.at("shape_ids");
        } else {
            warnings.push_back("reply entry for sentence " + std::to_string(index) +
                               " is not an id list; ignored");
        }
    };

    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it) {
            try {
                std::size_t used = 0;
                long long index = std::stoll(it.key(), &used);
                if (used != it.key().size()) throw std::invalid_argument(it.key());
                note_index(index, it.value());
            } catch (const std::exception&) {
                warnings.push_back("reply key \"" + it.key() + "\" is not a sentence index; ignored");
            }
        }
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) note_index(static_cast<long long>(i), j[i]);
    } else {
        throw parse_error("reply JSON is neither an object nor an array");
    }

    std::unordered_set<ShapeId> valid(valid_ids.begin(), valid_ids.end());
    ParsedGrounding out;
    out.result.object_order = std::move(object_order);
    out.result.sentence_objects.resize(n_sentences);
    for (auto& [index, list] : lists) {
        std::vector<ShapeId> ids;
        std::unordered_set<ShapeId> seen;
        for (const json& value : list) {
            auto text = id_from_json(value);
            if (!text) {
                warnings.push_back("non-id entry for sentence " + std::to_string(index) +
                                   "; ignored");
                continue;
            }
            ShapeId id(*text);
            if (!valid.contains(id)) {
                warnings.push_back("unknown id " + id.str() + " for sentence " +
                                   std::to_string(index) + "; dropped");
                continue;
            }
            if (seen.insert(id).second) ids.push_back(std::move(id));
        }
        out.result.sentence_objects[index] = std::move(ids);
    }
    out.warnings = std::move(warnings);
    return out;
}

std::vector<std::string> tokenize_for_grounding(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&]() {
        std::size_t begin = 0;
        std::size_t end = current.size();
        while (begin < end && std::ispunct(static_cast<unsigned char>(current[begin]))) ++begin;
        while (end > begin && std::ispunct(static_cast<unsigned char>(current[end - 1]))) --end;
        if (end > begin) tokens.push_back(current.substr(begin, end - begin));
        current.clear();
    };
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            flush();
        } else {
            current += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
    }
    flush();
    return tokens;
}

GroundingResult lexical_ground(const SlideUnit& unit,
                               const std::vector<ScriptSentence>& sentences, double theta) {
    if (theta < 0.0 || theta > 1.0) throw validation_error("theta must be in [0,1]");

    auto elements = canonical_elements(unit);
    std::vector<std::set<std::string>> element_tokens;
    element_tokens.reserve(elements.size());
    for (const SentenceElement* e : elements) {
        auto tokens = tokenize_for_grounding(e->content);
        element_tokens.emplace_back(tokens.begin(), tokens.end());
    }

    GroundingResult g;
    g.object_order = canonical_object_order(unit);
    g.sentence_objects.resize(sentences.size());
    for (const ScriptSentence& s : sentences) {
        auto tokens = tokenize_for_grounding(s.text);
        std::set<std::string> sentence_tokens(tokens.begin(), tokens.end());
        for (std::size_t jdx = 0; jdx < elements.size(); ++jdx) {
            const auto& obj_tokens = element_tokens[jdx];
            if (obj_tokens.empty()) continue;
            std::size_t overlap = 0;
            for (const std::string& t : obj_tokens) {
                if (sentence_tokens.contains(t)) ++overlap;
            }
            double score = static_cast<double>(overlap) / static_cast<double>(obj_tokens.size());
            if (score >= theta) {
                g.sentence_objects[s.index].push_back(elements[jdx]->shape_id);
            }
        }
    }
    return g;
}

GroundingResult LexicalGrounder::ground(const SlideContext& ctx) {
    return lexical_ground(ctx.unit, ctx.unit.sentences, ctx.config.theta);
}

GroundingResult ScriptedGrounder::ground(const SlideContext& ctx) {
    SlideDocument doc = serialize_slide(ctx.unit, ctx.config.variant);
    PromptBundle bundle = build_prompt(doc, ctx.unit.sentences, PromptMode::eval, ctx.config);
    std::string reply = responder_.reply_for(bundle.text);
    ParsedGrounding parsed = parse_grounding_reply(reply, bundle.candidate_ids,
                                                   ctx.unit.sentences.size(),
                                                   canonical_object_order(ctx.unit));
    if (ctx.warnings) {
        ctx.warnings->insert(ctx.warnings->end(), parsed.warnings.begin(), parsed.warnings.end());
    }
    return std::move(parsed.result);
}

GroundingResult LlmGrounder::ground(const SlideContext& ctx) {
    SlideDocument doc = serialize_slide(ctx.unit, ctx.config.variant);
    PromptBundle bundle = build_prompt(doc, ctx.unit.sentences, PromptMode::eval, ctx.config);

    LlmRequest req;
    req.model_name = ctx.config.llm.model;
    req.temperature = ctx.config.temperature;
    req.user_text = bundle.text;
    req.format = LlmRequest::Format::json;

    std::string last_error;
    for (int attempt = 0; attempt <= ctx.config.max_repair_attempts; ++attempt) {
        LlmReply reply = client_->complete(req);
        try {
            ParsedGrounding parsed = parse_grounding_reply(reply.text, bundle.candidate_ids,
                                                           ctx.unit.sentences.size(),
                                                           canonical_object_order(ctx.unit));
            if (ctx.warnings) {
                ctx.warnings->insert(ctx.warnings->end(), parsed.warnings.begin(),
                                     parsed.warnings.end());
            }
            return std::move(parsed.result);
        } catch (const Error& e) {
            if (e.kind() != Error::Kind::parse) throw;
            last_error = e.what();
            req.user_text = bundle.text + "\n\nYour previous reply could not be parsed: " +
                            last_error + "\nReply again with exactly the requested JSON.";
        }
    }

    if (ctx.failure) {
        *ctx.failure = "grounding reply unparseable after " +
                       std::to_string(ctx.config.max_repair_attempts + 1) +
                       " attempts: " + last_error;
    }
    GroundingResult empty;
    empty.object_order = canonical_object_order(ctx.unit);
    empty.sentence_objects.resize(ctx.unit.sentences.size());
    return empty;
}

std::unique_ptr<Grounder> make_grounder(const Config& config) {
    switch (config.grounder) {
        case GrounderKind::lexical:
            return std::make_unique<LexicalGrounder>();
        case GrounderKind::scripted: {
            if (config.fixture.empty()) {
                throw config_error("grounder scripted requires a fixture path (--fixture)");
            }
            return std::make_unique<ScriptedGrounder>(ScriptedResponder::from_file(config.fixture));
        }
        case GrounderKind::llm: {
            auto env_nonempty = [](const char* name) {
                const char* v = std::getenv(name);
                return v != nullptr && *v != '\0';
            };
            if (config.llm.endpoint.empty() && !env_nonempty("S2SG_LLM_ENDPOINT")) {
                throw config_error(
                    "grounder llm requires an endpoint: set S2SG_LLM_ENDPOINT or llm.endpoint");
            }
            if (config.llm.api_key.empty() && !env_nonempty("S2SG_LLM_API_KEY")) {
                throw config_error(
                    "grounder llm requires a credential: set S2SG_LLM_API_KEY or llm.api_key");
            }
            auto client = std::make_shared<LlmClient>(config.llm, config.audit_path);
            return std::make_unique<LlmGrounder>(std::move(client));
        }
    }
    throw config_error("unknown grounder kind");
}

DeckGrounding ground_deck(const Deck& deck, Grounder& grounder, const Config& config) {
    const std::size_t n = deck.slides.size();
    std::vector<std::optional<GroundingResult>> results(n);
    std::vector<std::string> failures(n);
    std::vector<std::vector<std::string>> warnings(n);
    std::vector<std::string> hard_failures(n);
    std::vector<Error::Kind> hard_kinds(n, Error::Kind::runtime);
    std::vector<bool> hard_failed(n, false);

    auto work = [&](std::size_t i) {
        const SlideUnit& unit = deck.slides[i];
        SlideContext ctx{unit, config, &warnings[i], &failures[i]};
        try {
            results[i] = grounder.ground(ctx);
        } catch (const Error& e) {
            hard_failed[i] = true;
            hard_failures[i] = e.what();
            hard_kinds[i] = e.kind();
        } catch (const std::exception& e) {
            hard_failed[i] = true;
            hard_failures[i] = e.what();
        }
    };

    std::size_t worker_count = grounder.single_flight()
                                   ? 1
                                   : std::min<std::size_t>(config.max_concurrent_slides, n);
    if (worker_count <= 1) {
        for (std::size_t i = 0; i < n; ++i) work(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> threads;
        threads.reserve(worker_count);
        for (std::size_t t = 0; t < worker_count; ++t) {
            threads.emplace_back([&]() {
                for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) work(i);
            });
        }
        for (std::thread& t : threads) t.join();
    }

    // Configuration problems are not per-slide conditions; surface the
    // first one directly.
    for (std::size_t i = 0; i < n; ++i) {
        if (hard_failed[i] && hard_kinds[i] == Error::Kind::config) {
            throw config_error(hard_failures[i]);
        }
    }

    DeckGrounding out;
    std::size_t usable = 0;
    for (std::size_t i = 0; i < n; ++i) {
        int slide = deck.slides[i].slide_number;
        if (hard_failed[i]) {
            out.failures[slide] = hard_failures[i];
        } else {
            out.results[slide] = std::move(*results[i]);
            ++usable;
            if (!failures[i].empty()) out.failures[slide] = failures[i];
        }
        for (std::string& w : warnings[i]) {
            out.warnings.push_back("slide " + std::to_string(slide) + ": " + std::move(w));
        }
    }
    if (n > 0 && usable == 0) {
        throw s2sg::runtime_error("grounding failed for all " + std::to_string(n) +
                                  " slides; first failure: " + out.failures.begin()->second);
    }
    return out;
}

GroundingMap to_grounding_map(const DeckGrounding& grounding) {
    GroundingMap map;
    for (const auto& [slide, result] : grounding.results) {
        auto& per_sentence = map.slides[slide];
        for (std::size_t i = 0; i < result.sentence_objects.size(); ++i) {
            per_sentence[static_cast<int>(i)] = result.sentence_objects[i];
        }
    }
    map.failures = grounding.failures;
    return map;
}

}  // namespace s2sg
