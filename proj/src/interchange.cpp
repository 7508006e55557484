#include "s2sg/interchange.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "s2sg/error.hpp"

namespace s2sg {

using nlohmann::json;

double round6(double v) { return std::round(v * 1e6) / 1e6; }

std::string FormatVariant::name() const {
    if (hierarchical && stylistic) return "hier+style";
    if (hierarchical) return "hier";
    if (stylistic) return "style";
    return "plain";
}

FormatVariant FormatVariant::parse(const std::string& name) {
    for (FormatVariant v : all()) {
        if (v.name() == name) return v;
    }
    throw config_error("unknown format variant: " + name +
                       " (expected hier+style|hier|style|plain)");
}

std::array<FormatVariant, 4> FormatVariant::all() {
    return {FormatVariant{true, true}, FormatVariant{true, false}, FormatVariant{false, true},
            FormatVariant{false, false}};
}

namespace {

json rect_json(const NormalizedRect& r) {
    return json{{"x0", round6(r.x0)},
                {"y0", round6(r.y0)},
                {"x1", round6(r.x1)},
                {"y1", round6(r.y1)}};
}

NormalizedRect rect_from_json(const json& j) {
    NormalizedRect r;
    r.x0 = j.at("x0").get<double>();
    r.y0 = j.at("y0").get<double>();
    r.x1 = j.at("x1").get<double>();
    r.y1 = j.at("y1").get<double>();
    return r;
}

const char* role_name(Role role) {
    switch (role) {
        case Role::title: return "title";
        case Role::body: return "body";
        case Role::other: return "other";
    }
    return "other";
}

json element_json(const SentenceElement& e, FormatVariant variant,
                  const std::map<ShapeId, NormalizedRect>& positions) {
    json out;
    out["shape_id"] = e.shape_id.str();
    out["content"] = e.content;
    if (variant.hierarchical) {
        out["indent"] = e.indent;
        if (!e.children.empty()) {
            json kids = json::array();
            for (const SentenceElement& child : e.children) {
                kids.push_back(element_json(child, variant, positions));
            }
            out["children"] = std::move(kids);
        }
    }
    if (variant.stylistic) {
        auto it = positions.find(e.shape_id);
        if (it != positions.end()) out["position"] = rect_json(it->second);
    }
    return out;
}

json group_json(const TextObjectGroup& group, FormatVariant variant,
                const std::map<ShapeId, NormalizedRect>& positions) {
    json out;
    out["shape_id"] = group.group_shape_id.str();
    if (variant.stylistic && group.style) {
        if (group.style->font_size_pt) out["font_size_pt"] = round6(*group.style->font_size_pt);
        if (group.style->position) out["position"] = rect_json(*group.style->position);
        if (group.style->role) out["role"] = role_name(*group.style->role);
    }
    json children = json::array();
    if (variant.hierarchical) {
        for (const SentenceElement& root : group.content_list) {
            children.push_back(element_json(root, variant, positions));
        }
    } else {
        for (const SentenceElement* e : canonical_elements(group)) {
            children.push_back(element_json(*e, variant, positions));
        }
    }
    out["children"] = std::move(children);
    return out;
}

}  // namespace

SlideDocument serialize_slide(const SlideUnit& unit, FormatVariant variant) {
    std::map<ShapeId, NormalizedRect> positions;
    if (variant.stylistic) {
        for (const TextObjectGroup& group : unit.objects) {
            for (auto& [id, rect] : slice_positions(group)) positions[id] = rect;
        }
    }

    json doc;
    doc["slide_number"] = unit.slide_number;
    json objects = json::array();
    for (const TextObjectGroup& group : unit.objects) {
        objects.push_back(group_json(group, variant, positions));
    }
    doc["objects"] = std::move(objects);
    json sentences = json::array();
    for (const ScriptSentence& s : unit.sentences) {
        sentences.push_back(json{{"index", s.index}, {"text", s.text}});
    }
    doc["sentences"] = std::move(sentences);

    SlideDocument out;
    out.slide_number = unit.slide_number;
    out.variant = variant;
    out.doc = std::move(doc);
    return out;
}

namespace {

void flatten_core(const json& entry, json& out) {
    json core;
    core["shape_id"] = entry.at("shape_id");
    if (entry.contains("content")) core["content"] = entry.at("content");
    out.push_back(std::move(core));
    if (entry.contains("children")) {
        for (const json& child : entry.at("children")) flatten_core(child, out);
    }
}

}  // namespace

json canonical_core_document(const json& doc) {
    json out;
    out["slide_number"] = doc.at("slide_number");
    json objects = json::array();
    for (const json& group : doc.at("objects")) {
        json group_core;
        group_core["shape_id"] = group.at("shape_id");
        json flat = json::array();
        if (group.contains("children")) {
            for (const json& child : group.at("children")) flatten_core(child, flat);
        }
        group_core["children"] = std::move(flat);
        objects.push_back(std::move(group_core));
    }
    out["objects"] = std::move(objects);
    out["sentences"] = doc.at("sentences");
    return out;
}

namespace {

json parse_json(const std::string& text, const std::string& label) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw parse_error("cannot parse " + label + ": " + e.what());
    }
}

int parse_int_key(const std::string& key, const std::string& label) {
    try {
        std::size_t used = 0;
        int v = std::stoi(key, &used);
        if (used != key.size()) throw std::invalid_argument(key);
        return v;
    } catch (const std::exception&) {
        throw parse_error("non-integer key \"" + key + "\" in " + label);
    }
}

}  // namespace

GroundingMap parse_grounding_map(const std::string& text, const std::string& label) {
    json j = parse_json(text, label);
    GroundingMap out;
    if (!j.is_object()) throw parse_error(label + ": top level must be an object");
    const json slides = j.value("slides", json::object());
    for (auto it = slides.begin(); it != slides.end(); ++it) {
        int slide = parse_int_key(it.key(), label);
        if (!it.value().is_object()) {
            throw parse_error(label + ": slide " + it.key() + " must map sentence indices to id lists");
        }
        auto& per_sentence = out.slides[slide];
        for (auto sit = it.value().begin(); sit != it.value().end(); ++sit) {
            int index = parse_int_key(sit.key(), label);
            if (!sit.value().is_array()) {
                throw parse_error(label + ": slide " + it.key() + " sentence " + sit.key() +
                                  " must be a list of shape ids");
            }
            std::vector<ShapeId> ids;
            for (const json& id : sit.value()) {
                if (!id.is_string()) {
                    throw parse_error(label + ": slide " + it.key() + " sentence " + sit.key() +
                                      " contains a non-string id");
                }
                ids.emplace_back(id.get<std::string>());
            }
            per_sentence[index] = std::move(ids);
        }
    }
    if (j.contains("failures")) {
        for (auto it = j.at("failures").begin(); it != j.at("failures").end(); ++it) {
            out.failures[parse_int_key(it.key(), label)] = it.value().get<std::string>();
        }
    }
    return out;
}

std::string grounding_map_to_json(const GroundingMap& map) {
    json slides = json::object();
    for (const auto& [slide, per_sentence] : map.slides) {
        json sentences = json::object();
        for (const auto& [index, ids] : per_sentence) {
            json list = json::array();
            for (const ShapeId& id : ids) list.push_back(id.str());
            sentences[std::to_string(index)] = std::move(list);
        }
        slides[std::to_string(slide)] = std::move(sentences);
    }
    json out;
    out["format_version"] = 1;
    out["slides"] = std::move(slides);
    if (!map.failures.empty()) {
        json failures = json::object();
        for (const auto& [slide, message] : map.failures) {
            failures[std::to_string(slide)] = message;
        }
        out["failures"] = std::move(failures);
    }
    return out.dump();
}

void validate_grounding_map(const GroundingMap& map, const Deck& deck, const std::string& label) {
    std::vector<std::string> offenders;
    std::map<int, const SlideUnit*> units;
    for (const SlideUnit& unit : deck.slides) units[unit.slide_number] = &unit;

    for (const auto& [slide, per_sentence] : map.slides) {
        auto uit = units.find(slide);
        if (uit == units.end()) {
            offenders.push_back("slide " + std::to_string(slide) + " not in deck");
            continue;
        }
        const SlideUnit& unit = *uit->second;
        std::set<ShapeId> known;
        for (const TextObjectGroup& group : unit.objects) {
            known.insert(group.group_shape_id);
            for (const SentenceElement* e : canonical_elements(group)) known.insert(e->shape_id);
        }
        for (const auto& [index, ids] : per_sentence) {
            if (index < 0 || index >= static_cast<int>(unit.sentences.size())) {
                offenders.push_back("slide " + std::to_string(slide) + " sentence index " +
                                    std::to_string(index) + " out of range");
            }
            for (const ShapeId& id : ids) {
                if (!known.contains(id)) {
                    offenders.push_back("slide " + std::to_string(slide) + " unknown id " +
                                        id.str());
                }
            }
        }
    }
    if (!offenders.empty()) {
        std::string msg = label + " has " + std::to_string(offenders.size()) + " invalid entries:";
        for (const std::string& o : offenders) msg += "\n  " + o;
        throw validation_error(msg);
    }
}

SearchableData build_searchable_data(const SlideUnit& unit) {
    SearchableData out;
    SearchableSlide slide;
    slide.slide_number = unit.slide_number;
    for (const TextObjectGroup& group : unit.objects) {
        std::map<ShapeId, NormalizedRect> slices;
        for (auto& [id, rect] : slice_positions(group)) slices[id] = rect;
        for (const SentenceElement* e : canonical_elements(group)) {
            auto it = slices.find(e->shape_id);
            if (it == slices.end()) {
                out.warnings.push_back("slide " + std::to_string(unit.slide_number) +
                                       ": element " + e->shape_id.str() +
                                       " has no position; omitted from searchable data");
                continue;
            }
            slide.objects.push_back(SearchableObject{e->shape_id, e->content, it->second});
        }
    }
    out.slides.push_back(std::move(slide));
    return out;
}

SearchableData build_searchable_data(const Deck& deck) {
    SearchableData out;
    for (const SlideUnit& unit : deck.slides) {
        SearchableData one = build_searchable_data(unit);
        out.slides.push_back(std::move(one.slides.front()));
        out.warnings.insert(out.warnings.end(), one.warnings.begin(), one.warnings.end());
    }
    return out;
}

std::string searchable_to_json(const SearchableData& data) {
    json slides = json::array();
    for (const SearchableSlide& slide : data.slides) {
        json objects = json::array();
        for (const SearchableObject& obj : slide.objects) {
            objects.push_back(json{{"shape_id", obj.shape_id.str()},
                                   {"content", obj.content},
                                   {"position", rect_json(obj.position)}});
        }
        slides.push_back(json{{"slide_number", slide.slide_number}, {"objects", std::move(objects)}});
    }
    json out;
    out["format_version"] = 1;
    out["slides"] = std::move(slides);
    if (!data.warnings.empty()) out["warnings"] = data.warnings;
    return out.dump();
}

SearchableData parse_searchable(const std::string& text, const std::string& label) {
    json j = parse_json(text, label);
    SearchableData out;
    for (const json& slide : j.value("slides", json::array())) {
        SearchableSlide s;
        s.slide_number = slide.at("slide_number").get<int>();
        for (const json& obj : slide.value("objects", json::array())) {
            SearchableObject o;
            o.shape_id = ShapeId(obj.at("shape_id").get<std::string>());
            o.content = obj.value("content", "");
            o.position = rect_from_json(obj.at("position"));
            s.objects.push_back(std::move(o));
        }
        out.slides.push_back(std::move(s));
    }
    if (j.contains("warnings")) {
        for (const json& w : j.at("warnings")) out.warnings.push_back(w.get<std::string>());
    }
    return out;
}

std::string slides_file_json(const Deck& deck) {
    json variants = json::object();
    for (FormatVariant v : FormatVariant::all()) {
        json docs = json::array();
        for (const SlideUnit& unit : deck.slides) {
            docs.push_back(serialize_slide(unit, v).doc);
        }
        variants[v.name()] = std::move(docs);
    }
    json out;
    out["format_version"] = 1;
    out["variants"] = std::move(variants);
    return out.dump();
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open file for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out.good()) throw io_error("cannot write file: " + path);
}

}  // namespace s2sg
