#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lgir/cache.hpp"
#include "lgir/gateway.hpp"
#include "lgir/ingest.hpp"
#include "lgir/prompts.hpp"
#include "lgir/types.hpp"

namespace lgir {

/// Everything a stage needs besides its own inputs.
struct EngineContext {
    Gateway& gateway;
    ResultCache& cache;
    const ImageSource& images;
    PipelineConfig config;
    const PromptLibrary& prompts = PromptLibrary::builtin();
    /// Fan-out for verifier calls; the gateway's per-role cap still applies.
    std::size_t workers = 8;
};

/// An image as sent to a model: bytes when the source can read them,
/// otherwise the bare URI for the backend to resolve.
ImagePart image_part(const ImageRecord& image, const ImageSource& source);

ChatRequest make_chat_request(const PipelineConfig& config, std::vector<ContentPart> parts);

/// Sends `prompt` to the reasoner and parses the reply. On ParseError the
/// prompt is sent once more behind a system `nudge`; a second ParseError is
/// rethrown tagged with `stage`. Returns the parsed value.
template <typename T>
T ask_reasoner(const EngineContext& ctx, const std::string& prompt, const std::string& nudge,
               const std::function<T(std::string_view)>& parse, const std::string& stage,
               std::vector<std::string>* notes = nullptr);

std::string ask_reasoner_raw(const EngineContext& ctx, const std::string& prompt,
                             const std::optional<std::string>& nudge);

template <typename T>
T ask_reasoner(const EngineContext& ctx, const std::string& prompt, const std::string& nudge,
               const std::function<T(std::string_view)>& parse, const std::string& stage,
               std::vector<std::string>* notes) {
    try {
        return parse(ask_reasoner_raw(ctx, prompt, std::nullopt));
    } catch (const Error& first) {
        if (first.code() != ErrorCode::ParseError) throw Error(first.code(), first.what(), stage);
        if (notes) notes->push_back(stage + ": reasoner output unparseable, re-prompted (" + first.what() + ")");
    }
    try {
        return parse(ask_reasoner_raw(ctx, prompt, nudge));
    } catch (const Error& second) {
        throw Error(second.code(), second.what(), stage);
    }
}

}  // namespace lgir
