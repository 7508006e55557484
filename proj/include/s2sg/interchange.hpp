#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "s2sg/deck.hpp"
#include "s2sg/model.hpp"

namespace s2sg {

// One of the four slide serializations: with/without the element hierarchy
// and with/without stylistic fields (font size, position, role).
struct FormatVariant {
    bool hierarchical = true;
    bool stylistic = true;

    std::string name() const;  // "hier+style", "hier", "style", "plain"
    static FormatVariant parse(const std::string& name);
    static std::array<FormatVariant, 4> all();

    bool operator==(const FormatVariant&) const = default;
};

// A slide rendered for prompting under one variant. canonical_text is the
// byte-deterministic form embedded in prompts and files: UTF-8 JSON with
// sorted keys, no insignificant whitespace, reals at most 6 decimals.
struct SlideDocument {
    int slide_number = 0;
    FormatVariant variant;
    nlohmann::json doc;

    std::string canonical_text() const { return doc.dump(); }
};

SlideDocument serialize_slide(const SlideUnit& unit, FormatVariant variant);

// Variant-independent core of a document: groups with their elements
// flattened to canonical order, hierarchy and style fields stripped.
// The four serializations of one unit canonicalize to identical bytes.
nlohmann::json canonical_core_document(const nlohmann::json& doc);

// Rounds to at most 6 decimal places, the interchange precision for reals.
double round6(double v);

// Per-slide, per-sentence id lists. Used for both ground truth and
// predictions; failures carries per-slide grounding failure messages and
// stays empty in truth files.
struct GroundingMap {
    std::map<int, std::map<int, std::vector<ShapeId>>> slides;
    std::map<int, std::string> failures;

    bool operator==(const GroundingMap&) const = default;
};

GroundingMap parse_grounding_map(const std::string& text, const std::string& label);
std::string grounding_map_to_json(const GroundingMap& map);

// Checks that every slide number, sentence index and ShapeId resolves in
// the deck. Throws Error{validation} listing all offenders.
void validate_grounding_map(const GroundingMap& map, const Deck& deck,
                            const std::string& label);

// Flat per-element view used by the renderer to resolve effect commands to
// coordinates.
struct SearchableObject {
    ShapeId shape_id;
    std::string content;
    NormalizedRect position;
};

struct SearchableSlide {
    int slide_number = 0;
    std::vector<SearchableObject> objects;
};

struct SearchableData {
    std::vector<SearchableSlide> slides;
    std::vector<std::string> warnings;
};

// One entry per sentence element in canonical order; elements without a
// position are omitted with a warning record.
SearchableData build_searchable_data(const SlideUnit& unit);
SearchableData build_searchable_data(const Deck& deck);

std::string searchable_to_json(const SearchableData& data);
SearchableData parse_searchable(const std::string& text, const std::string& label);

// <deck>.slides.json payload: all four variants of every slide.
std::string slides_file_json(const Deck& deck);

// Whole-file helpers. write_text_file builds the content first and writes
// once, so failures leave no partial file.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace s2sg
