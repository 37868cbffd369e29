#pragma once

#include <memory>
#include <optional>
#include <string>

#include "lgir/context.hpp"
#include "lgir/index.hpp"
#include "lgir/stage1.hpp"

namespace lgir {

/// The unified input every task reduces to.
struct PipelineInput {
    std::string instruction;
    std::string ref_desc;
    /// Attached to the evaluator prompt as the left image.
    std::optional<ImagePart> reference;
    /// Instruction shown to the evaluator; defaults to `instruction`.
    std::string evaluator_instruction;
};

struct PipelineOutput {
    RankedList ranking;
    Stage1Result stage1;
};

/// Stage 1, then optionally 2 and 3 (`last` is inclusive).
PipelineOutput run_pipeline(const PipelineInput& input, const EmbeddingIndex& index, const EngineContext& ctx,
                            Stage last = Stage::Stage3);

}  // namespace lgir
