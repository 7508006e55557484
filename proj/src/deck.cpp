#include "s2sg/deck.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <sstream>
#include <string_view>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "s2sg/error.hpp"
#include "zip_archive.hpp"

namespace s2sg {

namespace {

using boost::property_tree::ptree;

std::string_view local_name(std::string_view key) {
    auto pos = key.rfind(':');
    return pos == std::string_view::npos ? key : key.substr(pos + 1);
}

const ptree* find_child(const ptree& node, std::string_view local) {
    for (const auto& [key, child] : node) {
        if (local_name(key) == local) return &child;
    }
    return nullptr;
}

// Attribute lookup by local name. Prefixed attributes (e.g. r:id) match
// only when allow_prefixed; unprefixed ones always do. sldId carries both
// an unprefixed id and a prefixed r:id, so the distinction matters.
std::optional<std::string> attr(const ptree& node, std::string_view local, bool allow_prefixed) {
    const ptree* attrs = nullptr;
    for (const auto& [key, child] : node) {
        if (key == "<xmlattr>") {
            attrs = &child;
            break;
        }
    }
    if (!attrs) return std::nullopt;
    for (const auto& [key, child] : *attrs) {
        bool prefixed = key.find(':') != std::string::npos;
        if (local_name(key) == local && (allow_prefixed ? prefixed : !prefixed)) {
            return child.get_value<std::string>();
        }
    }
    return std::nullopt;
}

ptree parse_xml_part(const ZipArchive& archive, const std::string& part) {
    std::string content = archive.read(part);
    std::istringstream in(content);
    ptree tree;
    try {
        boost::property_tree::read_xml(in, tree);
    } catch (const boost::property_tree::xml_parser_error& e) {
        throw format_error("malformed XML in archive part " + part + ": " + e.message());
    }
    return tree;
}

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

// Joins a rels target onto its base directory, resolving ".." segments.
std::string resolve_target(const std::string& base_dir, const std::string& target) {
    std::vector<std::string> parts;
    std::string combined = target.starts_with('/') ? target.substr(1) : base_dir + target;
    std::size_t start = 0;
    while (start <= combined.size()) {
        std::size_t slash = combined.find('/', start);
        std::string seg = combined.substr(start, slash == std::string::npos ? std::string::npos
                                                                            : slash - start);
        if (seg == "..") {
            if (!parts.empty()) parts.pop_back();
        } else if (!seg.empty() && seg != ".") {
            parts.push_back(seg);
        }
        if (slash == std::string::npos) break;
        start = slash + 1;
    }
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += '/';
        out += parts[i];
    }
    return out;
}

struct Relationship {
    std::string type;
    std::string target;  // resolved, archive-absolute
};

std::map<std::string, Relationship> read_rels(const ZipArchive& archive,
                                              const std::string& rels_part,
                                              const std::string& base_dir) {
    std::map<std::string, Relationship> out;
    if (!archive.contains(rels_part)) return out;
    ptree tree = parse_xml_part(archive, rels_part);
    const ptree* rels = find_child(tree, "Relationships");
    if (!rels) return out;
    for (const auto& [key, rel] : *rels) {
        if (local_name(key) != "Relationship") continue;
        auto id = attr(rel, "Id", false);
        auto type = attr(rel, "Type", false);
        auto target = attr(rel, "Target", false);
        if (!id || !target) continue;
        out[*id] = Relationship{type.value_or(""), resolve_target(base_dir, *target)};
    }
    return out;
}

// Concatenates the visible text of one paragraph: runs and fields in
// order, explicit line breaks as newlines.
std::string paragraph_text(const ptree& para) {
    std::string out;
    for (const auto& [key, child] : para) {
        std::string_view local = local_name(key);
        if (local == "r" || local == "fld") {
            if (const ptree* t = find_child(child, "t")) {
                out += t->get_value<std::string>();
            }
        } else if (local == "br") {
            out += '\n';
        }
    }
    return out;
}

int paragraph_level(const ptree& para) {
    if (const ptree* ppr = find_child(para, "pPr")) {
        if (auto lvl = attr(*ppr, "lvl", false)) {
            try {
                return std::max(0, std::stoi(*lvl));
            } catch (const std::exception&) {
                return 0;
            }
        }
    }
    return 0;
}

// First explicit run font size in the body, in hundredths of a point.
std::optional<double> first_font_size(const ptree& node) {
    for (const auto& [key, child] : node) {
        std::string_view local = local_name(key);
        if (local == "rPr" || local == "defRPr") {
            if (auto sz = attr(child, "sz", false)) {
                try {
                    double pt = std::stod(*sz) / 100.0;
                    if (pt > 0) return pt;
                } catch (const std::exception&) {
                }
            }
        }
        if (auto nested = first_font_size(child)) return nested;
    }
    return std::nullopt;
}

std::optional<Role> placeholder_role(const ptree& shape) {
    const ptree* nv = find_child(shape, "nvSpPr");
    if (!nv) return std::nullopt;
    const ptree* nvpr = find_child(*nv, "nvPr");
    if (!nvpr) return std::nullopt;
    const ptree* ph = find_child(*nvpr, "ph");
    if (!ph) return std::nullopt;
    std::string type = attr(*ph, "type", false).value_or("body");
    if (type == "title" || type == "ctrTitle") return Role::title;
    if (type == "body" || type == "subTitle") return Role::body;
    return Role::other;
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

std::optional<NormalizedRect> shape_rect(const ptree& shape, const DeckMeta& meta) {
    const ptree* sppr = find_child(shape, "spPr");
    if (!sppr) return std::nullopt;
    const ptree* xfrm = find_child(*sppr, "xfrm");
    if (!xfrm) return std::nullopt;
    const ptree* off = find_child(*xfrm, "off");
    const ptree* ext = find_child(*xfrm, "ext");
    if (!off || !ext) return std::nullopt;
    auto ox = attr(*off, "x", false);
    auto oy = attr(*off, "y", false);
    auto cx = attr(*ext, "cx", false);
    auto cy = attr(*ext, "cy", false);
    if (!ox || !oy || !cx || !cy) return std::nullopt;
    try {
        double x = std::stod(*ox);
        double y = std::stod(*oy);
        double w = std::stod(*cx);
        double h = std::stod(*cy);
        double sw = static_cast<double>(meta.slide_width_emu);
        double sh = static_cast<double>(meta.slide_height_emu);
        NormalizedRect r;
        r.x0 = clamp01(x / sw);
        r.y0 = clamp01(y / sh);
        r.x1 = clamp01((x + w) / sw);
        r.y1 = clamp01((y + h) / sh);
        if (r.x1 < r.x0) std::swap(r.x0, r.x1);
        if (r.y1 < r.y0) std::swap(r.y0, r.y1);
        return r;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

// Collects text shapes from a shape tree in document order, descending
// into nested group shapes. Pictures, tables and connectors have no sp
// element and fall through.
void collect_text_shapes(const ptree& sp_tree, std::vector<const ptree*>& out) {
    for (const auto& [key, child] : sp_tree) {
        std::string_view local = local_name(key);
        if (local == "sp") {
            if (find_child(child, "txBody")) out.push_back(&child);
        } else if (local == "grpSp") {
            collect_text_shapes(child, out);
        }
    }
}

const ptree* slide_shape_tree(const ptree& doc, std::string_view root_local,
                              const std::string& part) {
    const ptree* root = find_child(doc, root_local);
    if (!root) throw format_error("archive part " + part + " has no " + std::string(root_local) +
                                  " root element");
    const ptree* csld = find_child(*root, "cSld");
    if (!csld) throw format_error("archive part " + part + " has no cSld element");
    const ptree* tree = find_child(*csld, "spTree");
    if (!tree) throw format_error("archive part " + part + " has no spTree element");
    return tree;
}

TextObjectGroup build_group(const ptree& shape, const DeckMeta& meta) {
    TextObjectGroup group;
    const ptree* body = find_child(shape, "txBody");
    std::vector<RawLine> lines;
    for (const auto& [key, child] : *body) {
        if (local_name(key) != "p") continue;
        auto para_lines = split_lines(paragraph_text(child), paragraph_level(child));
        lines.insert(lines.end(), para_lines.begin(), para_lines.end());
    }
    group.content_list = build_hierarchy(lines);

    StyleInfo style;
    style.position = shape_rect(shape, meta);
    style.role = placeholder_role(shape);
    style.font_size_pt = first_font_size(*body);
    if (style.position || style.role || style.font_size_pt) group.style = style;
    return group;
}

std::string notes_script_text(const ptree& notes_doc, const std::string& part) {
    const ptree* sp_tree = slide_shape_tree(notes_doc, "notes", part);
    std::vector<const ptree*> shapes;
    collect_text_shapes(*sp_tree, shapes);
    // The script lives in the body placeholder; the slide-image and
    // slide-number placeholders are ignored.
    for (const ptree* shape : shapes) {
        if (placeholder_role(*shape) != Role::body) continue;
        const ptree* body = find_child(*shape, "txBody");
        std::string text;
        bool first = true;
        for (const auto& [key, child] : *body) {
            if (local_name(key) != "p") continue;
            if (!first) text += '\n';
            text += paragraph_text(child);
            first = false;
        }
        return text;
    }
    return "";
}

void assign_shape_ids(SlideUnit& unit) {
    int group_seq = 0;
    int element_seq = 0;
    for (TextObjectGroup& group : unit.objects) {
        group.group_shape_id = ShapeId("g" + std::to_string(++group_seq));
        std::vector<SentenceElement*> stack;
        for (SentenceElement& root : group.content_list) stack.push_back(&root);
        std::reverse(stack.begin(), stack.end());
        while (!stack.empty()) {
            SentenceElement* e = stack.back();
            stack.pop_back();
            e->shape_id = ShapeId("s" + std::to_string(++element_seq));
            for (auto it = e->children.rbegin(); it != e->children.rend(); ++it) {
                stack.push_back(&*it);
            }
        }
    }
}

}  // namespace

std::vector<RawLine> split_lines(const std::string& paragraph_text, int indent) {
    std::vector<RawLine> lines;
    std::size_t start = 0;
    while (start <= paragraph_text.size()) {
        std::size_t nl = paragraph_text.find('\n', start);
        std::string_view piece(paragraph_text);
        piece = piece.substr(start, nl == std::string::npos ? std::string::npos : nl - start);
        std::string text = trim(piece);
        if (!text.empty()) lines.push_back(RawLine{std::move(text), std::max(0, indent)});
        if (nl == std::string::npos) break;
        start = nl + 1;
    }
    return lines;
}

std::vector<SentenceElement> build_hierarchy(const std::vector<RawLine>& lines) {
    const int n = static_cast<int>(lines.size());
    std::vector<std::vector<int>> children(n);
    std::vector<int> roots;
    std::vector<int> open;  // indices of the current ancestor chain
    for (int i = 0; i < n; ++i) {
        while (!open.empty() && lines[open.back()].indent >= lines[i].indent) open.pop_back();
        if (open.empty()) {
            roots.push_back(i);
        } else {
            children[open.back()].push_back(i);
        }
        open.push_back(i);
    }

    std::function<SentenceElement(int)> materialize = [&](int idx) {
        SentenceElement e;
        e.content = lines[idx].text;
        e.indent = lines[idx].indent;
        e.children.reserve(children[idx].size());
        for (int c : children[idx]) e.children.push_back(materialize(c));
        return e;
    };

    std::vector<SentenceElement> out;
    out.reserve(roots.size());
    for (int r : roots) out.push_back(materialize(r));
    return out;
}

std::vector<ScriptSentence> segment_script(const std::string& notes_text) {
    std::vector<std::string> pieces;
    const std::string& t = notes_text;
    std::size_t start = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        char c = t[i];
        if (c == '\n') {
            pieces.push_back(t.substr(start, i - start));
            start = i + 1;
            continue;
        }
        if (c != '.') continue;
        bool prev_digit = i > 0 && std::isdigit(static_cast<unsigned char>(t[i - 1]));
        bool next_digit = i + 1 < t.size() && std::isdigit(static_cast<unsigned char>(t[i + 1]));
        if (prev_digit && next_digit) continue;  // decimal, never a boundary
        bool at_end = i + 1 == t.size();
        bool next_ws = !at_end && std::isspace(static_cast<unsigned char>(t[i + 1]));
        if (at_end || next_ws) {
            pieces.push_back(t.substr(start, i - start + 1));
            start = i + 1;
        }
    }
    if (start < t.size()) pieces.push_back(t.substr(start));

    std::vector<ScriptSentence> sentences;
    for (const std::string& piece : pieces) {
        std::string text = trim(piece);
        if (text.empty()) continue;
        sentences.push_back(ScriptSentence{static_cast<int>(sentences.size()), std::move(text)});
    }
    return sentences;
}

std::vector<std::pair<ShapeId, NormalizedRect>> slice_positions(const TextObjectGroup& group) {
    std::vector<std::pair<ShapeId, NormalizedRect>> out;
    if (!group.style || !group.style->position) return out;
    const NormalizedRect rect = *group.style->position;
    auto elements = canonical_elements(group);
    const double count = static_cast<double>(elements.size());
    const double height = rect.y1 - rect.y0;
    for (std::size_t k = 0; k < elements.size(); ++k) {
        NormalizedRect slice;
        slice.x0 = rect.x0;
        slice.x1 = rect.x1;
        slice.y0 = rect.y0 + height * (static_cast<double>(k) / count);
        slice.y1 = rect.y0 + height * (static_cast<double>(k + 1) / count);
        out.emplace_back(elements[k]->shape_id, slice);
    }
    return out;
}

std::map<ShapeId, NormalizedRect> unit_positions(const SlideUnit& unit) {
    std::map<ShapeId, NormalizedRect> out;
    for (const TextObjectGroup& group : unit.objects) {
        if (group.style && group.style->position) {
            out[group.group_shape_id] = *group.style->position;
        }
        for (auto& [id, rect] : slice_positions(group)) out[id] = rect;
    }
    return out;
}

Deck open_deck(const std::string& path) {
    ZipArchive archive = ZipArchive::open(path);

    const std::string presentation_part = "ppt/presentation.xml";
    if (!archive.contains(presentation_part)) {
        throw format_error("not a presentation deck (missing " + presentation_part + "): " + path);
    }

    ptree presentation = parse_xml_part(archive, presentation_part);
    const ptree* pres_root = find_child(presentation, "presentation");
    if (!pres_root) {
        throw format_error("archive part " + presentation_part + " has no presentation root");
    }

    Deck deck;
    deck.meta.slide_width_emu = 9144000;
    deck.meta.slide_height_emu = 6858000;
    if (const ptree* sldsz = find_child(*pres_root, "sldSz")) {
        if (auto cx = attr(*sldsz, "cx", false)) deck.meta.slide_width_emu = std::stoll(*cx);
        if (auto cy = attr(*sldsz, "cy", false)) deck.meta.slide_height_emu = std::stoll(*cy);
    }
    if (deck.meta.slide_width_emu <= 0 || deck.meta.slide_height_emu <= 0) {
        throw format_error("invalid slide dimensions in " + presentation_part);
    }

    auto pres_rels = read_rels(archive, "ppt/_rels/presentation.xml.rels", "ppt/");

    // Slide parts in presentation order from sldIdLst; fall back to
    // numeric part order when the id list or rels are unusable.
    std::vector<std::string> slide_parts;
    if (const ptree* id_list = find_child(*pres_root, "sldIdLst")) {
        for (const auto& [key, sld] : *id_list) {
            if (local_name(key) != "sldId") continue;
            auto rid = attr(sld, "id", true);
            if (!rid) continue;
            auto rel = pres_rels.find(*rid);
            if (rel != pres_rels.end()) slide_parts.push_back(rel->second.target);
        }
    }
    if (slide_parts.empty()) {
        std::vector<std::pair<int, std::string>> numbered;
        for (const std::string& name : archive.names()) {
            if (name.starts_with("ppt/slides/slide") && name.ends_with(".xml")) {
                try {
                    int num = std::stoi(name.substr(16));
                    numbered.emplace_back(num, name);
                } catch (const std::exception&) {
                }
            }
        }
        std::sort(numbered.begin(), numbered.end());
        for (auto& [num, name] : numbered) slide_parts.push_back(name);
    }

    int slide_number = 0;
    for (const std::string& part : slide_parts) {
        ptree slide_doc = parse_xml_part(archive, part);
        SlideUnit unit;
        unit.slide_number = ++slide_number;
        unit.width_emu = deck.meta.slide_width_emu;
        unit.height_emu = deck.meta.slide_height_emu;

        const ptree* sp_tree = slide_shape_tree(slide_doc, "sld", part);
        std::vector<const ptree*> shapes;
        collect_text_shapes(*sp_tree, shapes);
        for (const ptree* shape : shapes) {
            TextObjectGroup group = build_group(*shape, deck.meta);
            if (!group.content_list.empty()) unit.objects.push_back(std::move(group));
        }
        assign_shape_ids(unit);

        // Notes part via the slide's rels; absent part means empty script.
        std::size_t slash = part.rfind('/');
        std::string dir = part.substr(0, slash + 1);
        std::string rels_part = dir + "_rels/" + part.substr(slash + 1) + ".rels";
        for (auto& [rid, rel] : read_rels(archive, rels_part, dir)) {
            if (!rel.type.ends_with("/notesSlide")) continue;
            if (!archive.contains(rel.target)) continue;
            ptree notes_doc = parse_xml_part(archive, rel.target);
            unit.sentences = segment_script(notes_script_text(notes_doc, rel.target));
            break;
        }

        deck.slides.push_back(std::move(unit));
    }

    deck.meta.slide_count = static_cast<int>(deck.slides.size());
    return deck;
}

}  // namespace s2sg
