#include "s2sg/model.hpp"

#include <unordered_map>
#include <unordered_set>

#include "s2sg/error.hpp"

namespace s2sg {

CorrespondenceMatrix grounding_to_matrix(const GroundingResult& g) {
    std::unordered_map<ShapeId, std::size_t> column;
    column.reserve(g.object_order.size());
    for (std::size_t j = 0; j < g.object_order.size(); ++j) {
        auto [it, inserted] = column.emplace(g.object_order[j], j);
        if (!inserted) {
            throw validation_error("duplicate id in object_order: " + g.object_order[j].str());
        }
    }

    CorrespondenceMatrix m(g.sentence_objects.size(), g.object_order.size());
    for (std::size_t i = 0; i < g.sentence_objects.size(); ++i) {
        std::unordered_set<ShapeId> seen;
        for (const ShapeId& id : g.sentence_objects[i]) {
            auto it = column.find(id);
            if (it == column.end()) {
                throw validation_error("grounded id not in object_order: " + id.str());
            }
            if (!seen.insert(id).second) {
                throw validation_error("duplicate id in g(s" + std::to_string(i) + "): " + id.str());
            }
            m.set(i, it->second, 1);
        }
    }
    return m;
}

GroundingResult matrix_to_grounding(const CorrespondenceMatrix& m,
                                    const std::vector<ShapeId>& object_order) {
    if (object_order.size() != m.cols()) {
        throw validation_error("object_order size " + std::to_string(object_order.size()) +
                               " does not match matrix columns " + std::to_string(m.cols()));
    }
    GroundingResult g;
    g.object_order = object_order;
    g.sentence_objects.resize(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            std::uint8_t v = m.at(i, j);
            if (v > 1) {
                throw validation_error("non-binary matrix entry at (" + std::to_string(i) + "," +
                                       std::to_string(j) + ")");
            }
            if (v == 1) g.sentence_objects[i].push_back(object_order[j]);
        }
    }
    return g;
}

namespace {

void collect_preorder(const SentenceElement& e, std::vector<const SentenceElement*>& out) {
    out.push_back(&e);
    for (const SentenceElement& child : e.children) collect_preorder(child, out);
}

}  // namespace

std::vector<const SentenceElement*> canonical_elements(const TextObjectGroup& group) {
    std::vector<const SentenceElement*> out;
    for (const SentenceElement& root : group.content_list) collect_preorder(root, out);
    return out;
}

std::vector<const SentenceElement*> canonical_elements(const SlideUnit& unit) {
    std::vector<const SentenceElement*> out;
    for (const TextObjectGroup& group : unit.objects) {
        for (const SentenceElement& root : group.content_list) collect_preorder(root, out);
    }
    return out;
}

std::vector<ShapeId> canonical_object_order(const SlideUnit& unit) {
    std::vector<ShapeId> order;
    for (const SentenceElement* e : canonical_elements(unit)) order.push_back(e->shape_id);
    return order;
}

}  // namespace s2sg
