#include "lgir/stage2.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "lgir/parallel.hpp"

namespace lgir {

std::vector<Proposition> derive_propositions(const std::string& instruction,
                                             std::span<const AtomicInstruction> atomic,
                                             const EngineContext& ctx, std::vector<std::string>* notes) {
    const auto prompt = render_prompt2(instruction, atomic, ctx.prompts);
    return ask_reasoner<std::vector<Proposition>>(ctx, prompt, ctx.prompts.stage2_retry(), parse_stage2_output,
                                                  "stage2", notes);
}

int count_satisfied(std::span<const Answer> answers, std::span<const Proposition> props) {
    if (answers.size() != props.size()) {
        throw Error(ErrorCode::InvalidArgument, "answers and propositions differ in length");
    }
    int c = 0;
    for (std::size_t i = 0; i < answers.size(); ++i) {
        if (answers[i] == Answer::Ambiguous) continue;
        c += (answers[i] == Answer::Yes) == props[i].truth_value ? 1 : 0;
    }
    return c;
}

Answer ask_verifier(const ImageRecord& image, const ImagePart& part, const Proposition& prop,
                    const EngineContext& ctx) {
    auto verifier = ctx.gateway.backend(BackendRole::Verifier);
    const auto key = (verifier ? verifier->id() : std::string("unbound")) + ":" + image.content_hash + ":" +
                     sha256_hex(prop.question);
    if (auto hit = ctx.cache.get("verifier", key)) return answer_from_string(hit->get<std::string>());
    const auto req = make_chat_request(
        ctx.config, {ContentPart::of_text(render_verifier_question(prop.question, ctx.prompts)),
                     ContentPart::of_image(part)});
    const auto answer = parse_yes_no(ctx.gateway.complete(BackendRole::Verifier, req).text);
    ctx.cache.put("verifier", key, std::string(to_string(answer)));
    return answer;
}

VerificationMatrix verify_candidates(std::span<const ImageRecord> candidates,
                                     std::span<const Proposition> props, const EngineContext& ctx,
                                     std::vector<std::string>* notes) {
    if (props.empty()) throw Error(ErrorCode::EmptyDecomposition, "no propositions to verify", "stage2");
    const auto k = candidates.size();
    const auto m = props.size();
    VerificationMatrix vm;
    vm.propositions.assign(props.begin(), props.end());
    vm.answers.assign(k, std::vector<Answer>(m, Answer::Ambiguous));
    vm.counts.assign(k, 0);
    for (const auto& c : candidates) vm.candidate_ids.push_back(c.id);

    std::vector<ImagePart> parts(k);
    std::vector<std::string> failure(k);
    std::vector<std::mutex> failure_mutex(k);
    parallel_for(k, ctx.workers, [&](std::size_t j) {
        try {
            parts[j] = image_part(candidates[j], ctx.images);
        } catch (const Error& e) {
            failure[j] = e.what();
        }
    });
    parallel_for(k * m, ctx.workers, [&](std::size_t cell) {
        const auto j = cell / m;
        const auto i = cell % m;
        {
            std::lock_guard lock(failure_mutex[j]);
            if (!failure[j].empty()) return;
        }
        try {
            vm.answers[j][i] = ask_verifier(candidates[j], parts[j], props[i], ctx);
        } catch (const Error& e) {
            if (!e.transient() && e.code() != ErrorCode::MalformedResponse) throw;
            std::lock_guard lock(failure_mutex[j]);
            if (failure[j].empty()) failure[j] = e.what();
        }
    });
    for (std::size_t j = 0; j < k; ++j) {
        if (!failure[j].empty()) {
            vm.counts[j] = kVerificationFailed;
            spdlog::warn("verification failed for {}: {}", candidates[j].id, failure[j]);
            if (notes) notes->push_back("stage2: verification failed for " + candidates[j].id + ": " + failure[j]);
        } else {
            vm.counts[j] = count_satisfied(vm.answers[j], props);
        }
    }
    return vm;
}

int verify_candidate(const ImageRecord& image, std::span<const Proposition> props, const EngineContext& ctx) {
    return verify_candidates(std::span(&image, 1), props, ctx).counts.front();
}

RankedList rerank_stage2(const RankedList& stage1, std::span<const int> counts, std::size_t k) {
    if (k > stage1.entries.size()) throw Error(ErrorCode::InvalidArgument, "k exceeds the ranking length");
    if (counts.size() != k) throw Error(ErrorCode::InvalidArgument, "counts must cover exactly the top k");
    RankedList out = stage1;
    out.stage = Stage::Stage2;
    for (std::size_t j = 0; j < k; ++j) out.entries[j].stage2_count = counts[j];
    std::stable_sort(out.entries.begin(), out.entries.begin() + static_cast<std::ptrdiff_t>(k),
                     [](const RankedEntry& a, const RankedEntry& b) {
                         if (*a.stage2_count != *b.stage2_count) return *a.stage2_count > *b.stage2_count;
                         return a.stage1_rank < b.stage1_rank;
                     });
    return out;
}

RankedList run_stage2(const RankedList& stage1, const std::string& instruction, const EmbeddingIndex& index,
                      const EngineContext& ctx) {
    auto local_notes = stage1.trace.notes;
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(ctx.config.k_verify), stage1.entries.size());
    const auto props = derive_propositions(instruction, stage1.trace.atomic_instructions, ctx, &local_notes);

    std::vector<ImageRecord> candidates;
    candidates.reserve(k);
    for (std::size_t j = 0; j < k; ++j) candidates.push_back(index.record(stage1.entries[j].image_id));
    auto vm = verify_candidates(candidates, props, ctx, &local_notes);

    auto out = rerank_stage2(stage1, vm.counts, k);
    out.trace.propositions = props;
    out.trace.verification = std::move(vm);
    out.trace.notes = std::move(local_notes);
    return out;
}

}  // namespace lgir
