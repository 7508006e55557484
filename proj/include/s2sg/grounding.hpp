#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "s2sg/config.hpp"
#include "s2sg/interchange.hpp"
#include "s2sg/llm_client.hpp"
#include "s2sg/model.hpp"

namespace s2sg {

enum class PromptMode { eval, conduct };

// A fully assembled prompt. instruction carries the verbatim task
// instruction for the mode; text is the rendered template with the rules
// block, the canonical slide payload and the numbered sentence list
// substituted in. candidate_ids lists the sentence-element ids offered to
// the model (titles removed when configured), which is also the valid-id
// set for reply parsing.
struct PromptBundle {
    PromptMode mode = PromptMode::eval;
    std::string instruction;
    std::string rules;
    std::string slide_payload;
    std::string sentence_list;
    std::string text;
    std::vector<ShapeId> candidate_ids;
};

PromptBundle build_prompt(const SlideDocument& doc, const std::vector<ScriptSentence>& sentences,
                          PromptMode mode, const Config& config);

// Built-in prompt pieces, exposed so fixtures and docs stay in sync.
const std::string& eval_instruction_text();
const std::string& conduct_instruction_text();
std::string default_rules_text(PromptMode mode, const Config& config);

struct ParsedGrounding {
    GroundingResult result;
    std::vector<std::string> warnings;
};

// Interprets a grounding reply: a JSON object mapping sentence indices to
// id lists (a bare array of lists is also accepted, positionally). Ids are
// deduplicated preserving first occurrence; ids outside valid_ids are
// dropped with a warning; indices absent from the reply come back empty.
// The result covers exactly 0..n_sentences-1. Throws Error{parse} when the
// reply has no usable structure.
ParsedGrounding parse_grounding_reply(const std::string& reply,
                                      const std::vector<ShapeId>& valid_ids,
                                      std::size_t n_sentences,
                                      std::vector<ShapeId> object_order);

// Deterministic lexical baseline: token-overlap score
// |tokens(s) ∩ tokens(v)| / |tokens(v)| with threshold theta.
GroundingResult lexical_ground(const SlideUnit& unit,
                               const std::vector<ScriptSentence>& sentences, double theta);

// Whitespace split, ASCII lowercase, leading/trailing punctuation stripped.
std::vector<std::string> tokenize_for_grounding(const std::string& text);

struct SlideContext {
    const SlideUnit& unit;
    const Config& config;
    std::vector<std::string>* warnings = nullptr;
    // Set when the grounder degraded to an empty result (e.g. repair
    // attempts exhausted); recorded as a per-slide failure.
    std::string* failure = nullptr;
};

// Pluggable grounding function g: implementations must reference only
// ShapeIds present in the slide and must either be safe for concurrent
// invocation or declare single_flight.
class Grounder {
  public:
    virtual ~Grounder() = default;
    virtual GroundingResult ground(const SlideContext& ctx) = 0;
    virtual bool single_flight() const { return false; }
    virtual std::string name() const = 0;
};

class LexicalGrounder : public Grounder {
  public:
    GroundingResult ground(const SlideContext& ctx) override;
    std::string name() const override { return "lexical"; }
};

class ScriptedGrounder : public Grounder {
  public:
    explicit ScriptedGrounder(ScriptedResponder responder) : responder_(std::move(responder)) {}
    GroundingResult ground(const SlideContext& ctx) override;
    std::string name() const override { return "scripted"; }

  private:
    ScriptedResponder responder_;
};

class LlmGrounder : public Grounder {
  public:
    explicit LlmGrounder(std::shared_ptr<LlmClient> client) : client_(std::move(client)) {}
    GroundingResult ground(const SlideContext& ctx) override;
    std::string name() const override { return "llm"; }

  private:
    std::shared_ptr<LlmClient> client_;
};

std::unique_ptr<Grounder> make_grounder(const Config& config);

struct DeckGrounding {
    std::map<int, GroundingResult> results;  // keyed by slide number
    std::map<int, std::string> failures;
    std::vector<std::string> warnings;
};

// Grounds every slide independently, up to config.max_concurrent_slides at
// a time (serialized for single-flight grounders). Per-slide failures are
// recorded without aborting the rest; Error{runtime} only when every slide
// failed.
DeckGrounding ground_deck(const Deck& deck, Grounder& grounder, const Config& config);

GroundingMap to_grounding_map(const DeckGrounding& grounding);

}  // namespace s2sg
