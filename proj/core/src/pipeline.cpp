#include "lgir/pipeline.hpp"

#include "lgir/stage2.hpp"
#include "lgir/stage3.hpp"

namespace lgir {

PipelineOutput run_pipeline(const PipelineInput& input, const EmbeddingIndex& index, const EngineContext& ctx,
                            Stage last) {
    ctx.config.validate();
    if (index.empty()) throw Error(ErrorCode::InvalidArgument, "the index is empty", "stage1");
    PipelineOutput out;
    out.stage1 = run_stage1(input.instruction, input.ref_desc, index, ctx);
    out.ranking = out.stage1.ranking;
    if (last >= Stage::Stage2) out.ranking = run_stage2(out.ranking, input.instruction, index, ctx);
    if (last >= Stage::Stage3) {
        const auto& eval = input.evaluator_instruction.empty() ? input.instruction : input.evaluator_instruction;
        out.ranking = run_stage3(out.ranking, input.reference, eval, index, ctx);
    }
    return out;
}

}  // namespace lgir
