#include "lgir/stage1.hpp"

#include "lgir/parallel.hpp"
#include "lgir/text.hpp"

namespace lgir {

Stage1Output synthesize(const std::string& instruction, const std::string& ref_desc,
                        const EngineContext& ctx, std::vector<std::string>* notes) {
    const auto prompt = render_prompt1(instruction, ref_desc, ctx.prompts);
    auto out = ask_reasoner<Stage1Output>(ctx, prompt, ctx.prompts.stage1_retry(), parse_stage1_output,
                                          "stage1", notes);

    auto fill = [&](std::string& field, const char* name) {
        if (!text::is_blank(field)) return;
        field = instruction;
        if (notes) notes->push_back(std::string("stage1: empty ") + name + ", using the instruction text");
    };
    fill(out.descriptions.core_elements, "core elements");
    fill(out.descriptions.enhanced_details, "enhanced details");
    fill(out.descriptions.comprehensive_synthesis, "comprehensive synthesis");

    if (out.atomic_instructions.empty()) {
        out.atomic_instructions.push_back({InstructionKind::Retention, instruction});
        if (notes) notes->push_back("stage1: no atomic instructions parsed, using one Retention instruction");
    }
    return out;
}

std::vector<double> fuse_embedded(std::span<const std::vector<float>> views, const EmbeddingIndex& index,
                                  double tau) {
    if (views.empty()) throw Error(ErrorCode::InvalidArgument, "no description vectors to fuse");
    if (tau < 0.0 || tau > 1.0) throw Error(ErrorCode::ConfigError, "tau must lie in [0, 1]");
    std::vector<double> fused(index.size(), 0.0);
    for (const auto& v : views) {
        const auto text_sims = cosine_scores(v, index.caption_matrix(), index.dim());
        const auto image_sims = cosine_scores(v, index.image_matrix(), index.dim());
        for (std::size_t j = 0; j < fused.size(); ++j) {
            fused[j] += tau * text_sims[j] + (1.0 - tau) * image_sims[j];
        }
    }
    for (auto& s : fused) s /= static_cast<double>(views.size());
    return fused;
}

std::vector<double> fuse_scores(const TargetDescriptions& descs, const EmbeddingIndex& index, double tau,
                                const EngineContext& ctx) {
    if (index.empty()) throw Error(ErrorCode::InvalidArgument, "index is empty", "stage1");
    const std::array<const std::string*, 3> texts = {&descs.core_elements, &descs.enhanced_details,
                                                     &descs.comprehensive_synthesis};
    std::vector<std::vector<float>> views(texts.size());
    parallel_for(texts.size(), texts.size(), [&](std::size_t g) {
        views[g] = cached_text_embedding(*texts[g], ctx.gateway, ctx.cache);
    });
    return fuse_embedded(views, index, tau);
}

RankedList rank_stage1(std::span<const double> scores, const std::vector<std::string>& ids) {
    if (scores.size() != ids.size()) throw Error(ErrorCode::InvalidArgument, "scores and ids differ in length");
    RankedList list;
    list.stage = Stage::Stage1;
    const auto order = argsort_desc(scores);
    list.entries.reserve(order.size());
    for (std::size_t r = 0; r < order.size(); ++r) {
        RankedEntry e;
        e.image_id = ids[order[r]];
        e.stage1_score = scores[order[r]];
        e.stage1_rank = static_cast<int>(r + 1);
        list.entries.push_back(std::move(e));
    }
    return list;
}

RankedList rank_stage1(std::span<const double> scores, const EmbeddingIndex& index) {
    std::vector<std::string> ids;
    ids.reserve(index.size());
    for (const auto& r : index.images()) ids.push_back(r.id);
    return rank_stage1(scores, ids);
}

Stage1Result run_stage1(const std::string& instruction, const std::string& ref_desc,
                        const EmbeddingIndex& index, const EngineContext& ctx) {
    Stage1Result result;
    std::vector<std::string> notes;
    auto synthesized = synthesize(instruction, ref_desc, ctx, &notes);
    result.atomic_instructions = std::move(synthesized.atomic_instructions);
    result.descriptions = std::move(synthesized.descriptions);
    try {
        result.scores = fuse_scores(result.descriptions, index, ctx.config.tau, ctx);
    } catch (const Error& e) {
        throw Error(e.code(), e.what(), "stage1");
    }
    result.ranking = rank_stage1(result.scores, index);
    result.ranking.trace.atomic_instructions = result.atomic_instructions;
    result.ranking.trace.descriptions = result.descriptions;
    result.ranking.trace.notes = std::move(notes);
    return result;
}

}  // namespace lgir
