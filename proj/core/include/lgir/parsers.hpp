#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lgir/types.hpp"

namespace lgir {

struct Stage1Output {
    std::vector<AtomicInstruction> atomic_instructions;
    TargetDescriptions descriptions;
};

/// Extracts the reasoner's JSON object (fenced or embedded in prose). Keys are
/// matched ignoring case, spaces and punctuation, at any nesting depth.
/// A missing instruction list yields an empty vector; a missing description
/// key, an unknown instruction type or no JSON at all throws ParseError.
Stage1Output parse_stage1_output(std::string_view raw);

/// The canonical JSON a reasoner is asked to emit; parse_stage1_output inverts it.
nlohmann::json stage1_to_canonical_json(const Stage1Output& out);

/// Reads "Q: ...? A: Yes. (True)" lines. A parenthesised (True)/(False) wins
/// over the Yes/No word. Statements come from the numbered step-1 lines when
/// present. Throws ParseError when nothing is recovered.
std::vector<Proposition> parse_stage2_output(std::string_view raw);

/// Yes/No from the first token, case-insensitive with punctuation stripped.
/// Never throws; anything else is Answer::Ambiguous.
Answer parse_yes_no(std::string_view raw);

struct EvaluatorReading {
    Answer answer = Answer::Ambiguous;
    std::string justification;
};

/// Finds the first "ANSWER:" line. Ambiguous when there is none or its value
/// is neither yes nor no.
EvaluatorReading parse_evaluator_output(std::string_view raw);

/// First balanced {...} object in `raw`, preferring a ```json fence.
/// Returns nullopt-equivalent (discarded json) when none parses.
nlohmann::json extract_json_object(std::string_view raw);

}  // namespace lgir
