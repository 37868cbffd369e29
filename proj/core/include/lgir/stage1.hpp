#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "lgir/context.hpp"
#include "lgir/index.hpp"
#include "lgir/parsers.hpp"

namespace lgir {

struct Stage1Result {
    std::vector<AtomicInstruction> atomic_instructions;
    TargetDescriptions descriptions;
    std::vector<double> scores;
    RankedList ranking;
};

/// Prompt1 through the reasoner. Empty descriptions fall back to the raw
/// instruction and an empty decomposition becomes a single Retention
/// instruction; both are recorded in `notes`.
Stage1Output synthesize(const std::string& instruction, const std::string& ref_desc,
                        const EngineContext& ctx, std::vector<std::string>* notes = nullptr);

/// Fused score per database image for pre-computed unit-norm description
/// vectors (CE, ED, CS order): mean over granularities of
/// tau * sim(v, caption row) + (1 - tau) * sim(v, image row).
std::vector<double> fuse_embedded(std::span<const std::vector<float>> views, const EmbeddingIndex& index,
                                  double tau);

/// Embeds the three descriptions with the text encoder and fuses.
std::vector<double> fuse_scores(const TargetDescriptions& descs, const EmbeddingIndex& index, double tau,
                                const EngineContext& ctx);

/// Stable descending sort of `scores`; stage1_rank runs 1..N.
RankedList rank_stage1(std::span<const double> scores, const std::vector<std::string>& ids);
RankedList rank_stage1(std::span<const double> scores, const EmbeddingIndex& index);

Stage1Result run_stage1(const std::string& instruction, const std::string& ref_desc,
                        const EmbeddingIndex& index, const EngineContext& ctx);

}  // namespace lgir
