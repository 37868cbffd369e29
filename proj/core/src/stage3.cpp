#include "lgir/stage3.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "lgir/parsers.hpp"

namespace lgir {

EvaluatorVerdict evaluate_pairwise(const std::optional<ImagePart>& reference, const ImageRecord& candidate,
                                   const std::string& instruction, const EngineContext& ctx) {
    EvaluatorVerdict verdict;
    verdict.image_id = candidate.id;
    std::vector<ContentPart> parts{ContentPart::of_text(render_prompt3(instruction, ctx.prompts))};
    if (reference) parts.push_back(ContentPart::of_image(*reference));
    parts.push_back(ContentPart::of_image(image_part(candidate, ctx.images)));
    try {
        const auto reading =
            parse_evaluator_output(ctx.gateway.complete(BackendRole::Evaluator, make_chat_request(ctx.config, parts)).text);
        verdict.accepted = reading.answer == Answer::Yes;
        verdict.justification = reading.justification;
        if (reading.answer == Answer::Ambiguous) {
            spdlog::warn("evaluator answer for {} has no ANSWER line, treated as No", candidate.id);
            verdict.justification = "ambiguous evaluator output: " + reading.justification;
        }
    } catch (const Error& e) {
        if (!e.transient() && e.code() != ErrorCode::MalformedResponse) throw;
        spdlog::warn("evaluator call for {} failed ({}), treated as No", candidate.id, e.what());
        verdict.accepted = false;
        verdict.justification = std::string("evaluator unavailable: ") + e.what();
    }
    return verdict;
}

RankedList promote(const RankedList& stage2, std::span<const EvaluatorVerdict> verdicts, std::size_t alpha) {
    if (alpha < 1) throw Error(ErrorCode::InvalidArgument, "alpha must be at least 1");
    RankedList out = stage2;
    out.stage = Stage::Stage3;
    const auto n = std::min({verdicts.size(), alpha, out.entries.size()});
    for (std::size_t j = 0; j < n; ++j) {
        if (verdicts[j].image_id != out.entries[j].image_id) {
            throw Error(ErrorCode::InvalidArgument, "verdict " + std::to_string(j) + " is for another candidate");
        }
        out.entries[j].stage3_flag = verdicts[j].accepted;
        if (verdicts[j].accepted) {
            std::rotate(out.entries.begin(), out.entries.begin() + static_cast<std::ptrdiff_t>(j),
                        out.entries.begin() + static_cast<std::ptrdiff_t>(j) + 1);
            break;
        }
    }
    return out;
}

RankedList run_stage3(const RankedList& stage2, const std::optional<ImagePart>& reference,
                      const std::string& instruction, const EmbeddingIndex& index, const EngineContext& ctx) {
    const auto alpha = std::min<std::size_t>(static_cast<std::size_t>(ctx.config.alpha_evaluate),
                                             stage2.entries.size());
    std::vector<EvaluatorVerdict> verdicts;
    std::vector<std::string> notes = stage2.trace.notes;
    for (std::size_t j = 0; j < alpha; ++j) {
        const auto& candidate = index.record(stage2.entries[j].image_id);
        if (reference && !reference->bytes.empty() && sha256_hex(reference->bytes) == candidate.content_hash) {
            notes.push_back("stage3: candidate " + candidate.id + " is identical to the reference image");
        }
        verdicts.push_back(evaluate_pairwise(reference, candidate, instruction, ctx));
        if (verdicts.back().accepted) break;
    }
    auto out = promote(stage2, verdicts, std::max<std::size_t>(alpha, 1));
    out.trace.evaluator_verdicts = std::move(verdicts);
    out.trace.notes = std::move(notes);
    return out;
}

}  // namespace lgir
