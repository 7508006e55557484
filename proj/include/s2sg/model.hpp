#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace s2sg {

// Identifier of one slide object (a text-object group or one of its
// sentence-level elements). Unique within a slide, stable across
// serializations of the same deck.
class ShapeId {
  public:
    ShapeId() = default;
    explicit ShapeId(std::string value) : value_(std::move(value)) {}

    const std::string& str() const noexcept { return value_; }
    bool empty() const noexcept { return value_.empty(); }

    auto operator<=>(const ShapeId&) const = default;

  private:
    std::string value_;
};

// One newline-delimited line of a text object, with the subtree of lines
// nested under it by indent level.
struct SentenceElement {
    ShapeId shape_id;
    std::string content;  // single line, trimmed, non-empty
    int indent = 0;
    std::vector<SentenceElement> children;
};

enum class Role { title, body, other };

// Normalized rectangle in slide-fraction coordinates.
struct NormalizedRect {
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 0.0;
    double y1 = 0.0;

    bool valid() const noexcept {
        return 0.0 <= x0 && x0 <= x1 && x1 <= 1.0 && 0.0 <= y0 && y0 <= y1 && y1 <= 1.0;
    }
    bool operator==(const NormalizedRect&) const = default;
};

struct StyleInfo {
    std::optional<double> font_size_pt;  // > 0 when present
    std::optional<NormalizedRect> position;
    std::optional<Role> role;
};

// A source text object: its identifier plus the forest of root sentence
// elements reconstructing the indent hierarchy.
struct TextObjectGroup {
    ShapeId group_shape_id;
    std::vector<SentenceElement> content_list;
    std::optional<StyleInfo> style;
};

// One narration sentence, 0-indexed within its slide's script.
struct ScriptSentence {
    int index = 0;
    std::string text;
};

// All grounding-relevant content of one slide.
struct SlideUnit {
    int slide_number = 0;  // 1-based
    std::vector<TextObjectGroup> objects;
    std::vector<ScriptSentence> sentences;
    std::int64_t width_emu = 0;
    std::int64_t height_emu = 0;
};

// Per-sentence object sets: sentence_objects[i] holds the ids grounded to
// sentence i, in first-mention order and free of duplicates. object_order
// is the canonical ordered list of all sentence-element ids of the slide
// and fixes the matrix column indexing.
struct GroundingResult {
    std::vector<std::vector<ShapeId>> sentence_objects;
    std::vector<ShapeId> object_order;

    std::size_t sentence_count() const noexcept { return sentence_objects.size(); }
    std::size_t object_count() const noexcept { return object_order.size(); }
};

// Binary n×m correspondence matrix, row i / column j marking whether
// sentence i grounds to the j-th object of the canonical order.
class CorrespondenceMatrix {
  public:
    CorrespondenceMatrix() = default;
    CorrespondenceMatrix(std::size_t n, std::size_t m)
        : n_(n), m_(m), cells_(n * m, 0) {}

    std::size_t rows() const noexcept { return n_; }
    std::size_t cols() const noexcept { return m_; }

    std::uint8_t at(std::size_t i, std::size_t j) const { return cells_.at(i * m_ + j); }
    void set(std::size_t i, std::size_t j, std::uint8_t v) { cells_.at(i * m_ + j) = v; }

    std::size_t row_sum(std::size_t i) const {
        std::size_t s = 0;
        for (std::size_t j = 0; j < m_; ++j) s += at(i, j);
        return s;
    }

    bool operator==(const CorrespondenceMatrix&) const = default;

  private:
    std::size_t n_ = 0;
    std::size_t m_ = 0;
    std::vector<std::uint8_t> cells_;
};

// Set view of the grounding as a matrix and back. Both directions validate
// their input and throw Error{validation} on duplicate or unknown ids and
// on non-binary entries.
CorrespondenceMatrix grounding_to_matrix(const GroundingResult& g);
GroundingResult matrix_to_grounding(const CorrespondenceMatrix& m,
                                    const std::vector<ShapeId>& object_order);

// Canonical traversal order of a slide's sentence elements: preorder within
// each group, groups in document order.
std::vector<const SentenceElement*> canonical_elements(const TextObjectGroup& group);
std::vector<const SentenceElement*> canonical_elements(const SlideUnit& unit);
std::vector<ShapeId> canonical_object_order(const SlideUnit& unit);

}  // namespace s2sg

template <>
struct std::hash<s2sg::ShapeId> {
    std::size_t operator()(const s2sg::ShapeId& id) const noexcept {
        return std::hash<std::string>{}(id.str());
    }
};
