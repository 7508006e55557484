#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "s2sg/model.hpp"

namespace s2sg {

// One non-blank line of a text object before tree building.
struct RawLine {
    std::string text;  // trimmed, non-empty
    int indent = 0;
};

struct DeckMeta {
    int slide_count = 0;
    std::int64_t slide_width_emu = 0;
    std::int64_t slide_height_emu = 0;
};

struct Deck {
    DeckMeta meta;
    std::vector<SlideUnit> slides;
};

// Parses a deck archive (ECMA-376 zip layout: presentation part, slide
// parts, notes parts) into one SlideUnit per slide, in presentation order.
// Pictures, tables and connectors are skipped; a slide without a notes part
// gets an empty sentence list. Throws Error{io} for unreadable files,
// Error{format} for non-deck archives or missing/corrupt parts.
Deck open_deck(const std::string& path);

// Splits one text object's paragraph into non-blank lines carrying the
// paragraph's indent level. Paragraph text may contain embedded newlines
// (line breaks inside a paragraph); each resulting line becomes its own
// RawLine.
std::vector<RawLine> split_lines(const std::string& paragraph_text, int indent);

// Builds the element forest from lines in document order: each line's
// parent is the nearest preceding line with strictly smaller indent.
// Accepts any indent sequence. Shape ids on the produced elements are left
// empty; the caller assigns them in canonical order.
std::vector<SentenceElement> build_hierarchy(const std::vector<RawLine>& lines);

// Splits the notes script into sentences at newlines and at periods
// followed by whitespace or end-of-text. The terminal period is retained,
// a period between two digits never splits, and empty fragments are
// dropped. Indices are assigned contiguously from 0.
std::vector<ScriptSentence> segment_script(const std::string& notes_text);

// Per-element positions for one group: the group rectangle partitioned
// into equal-height horizontal slices, one per element in preorder.
// Empty when the group has no position.
std::vector<std::pair<ShapeId, NormalizedRect>> slice_positions(const TextObjectGroup& group);

// All known positions of a unit: group rectangles plus element slices.
std::map<ShapeId, NormalizedRect> unit_positions(const SlideUnit& unit);

}  // namespace s2sg
