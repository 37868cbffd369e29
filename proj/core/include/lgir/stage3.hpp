#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lgir/context.hpp"
#include "lgir/index.hpp"

namespace lgir {

/// Prompt3 with the reference image (if any) attached first and the
/// candidate second. Ambiguous answers and transport failures reject.
EvaluatorVerdict evaluate_pairwise(const std::optional<ImagePart>& reference, const ImageRecord& candidate,
                                   const std::string& instruction, const EngineContext& ctx);

/// Moves the first accepted verdict's entry (among the first `alpha`
/// entries) to the front. Evaluated entries get stage3_flag set.
RankedList promote(const RankedList& stage2, std::span<const EvaluatorVerdict> verdicts, std::size_t alpha);

/// Evaluates the leading entries one at a time and stops at the first
/// acceptance or after alpha_evaluate candidates.
RankedList run_stage3(const RankedList& stage2, const std::optional<ImagePart>& reference,
                      const std::string& instruction, const EmbeddingIndex& index, const EngineContext& ctx);

}  // namespace lgir
