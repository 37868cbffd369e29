#pragma once

#include <span>
#include <string>
#include <vector>

#include "lgir/context.hpp"
#include "lgir/index.hpp"
#include "lgir/parsers.hpp"

namespace lgir {

/// Prompt2 through the reasoner. Throws EmptyDecomposition for an empty list.
std::vector<Proposition> derive_propositions(const std::string& instruction,
                                             std::span<const AtomicInstruction> atomic,
                                             const EngineContext& ctx,
                                             std::vector<std::string>* notes = nullptr);

/// Number of propositions whose answer resolves to the expected truth value.
/// Ambiguous answers never count.
int count_satisfied(std::span<const Answer> answers, std::span<const Proposition> props);

/// One verifier question against one image, cached by image hash and question.
Answer ask_verifier(const ImageRecord& image, const ImagePart& part, const Proposition& prop,
                    const EngineContext& ctx);

/// Asks every question of every candidate (k x M calls, run concurrently) and
/// counts. A candidate with any failed call gets kVerificationFailed.
VerificationMatrix verify_candidates(std::span<const ImageRecord> candidates,
                                     std::span<const Proposition> props, const EngineContext& ctx,
                                     std::vector<std::string>* notes = nullptr);

/// Single-candidate form of verify_candidates.
int verify_candidate(const ImageRecord& image, std::span<const Proposition> props, const EngineContext& ctx);

/// Reorders the first k entries by count (descending; ties and failures keep
/// stage-1 order, failures last) and leaves the rest in stage-1 order.
RankedList rerank_stage2(const RankedList& stage1, std::span<const int> counts, std::size_t k);

/// Propositions, verification of the top k_verify and re-ranking.
RankedList run_stage2(const RankedList& stage1, const std::string& instruction, const EmbeddingIndex& index,
                      const EngineContext& ctx);

}  // namespace lgir
