#include "lgir/context.hpp"

namespace lgir {

ImagePart image_part(const ImageRecord& image, const ImageSource& source) {
    try {
        auto bytes = source.read(image.uri);
        auto mime = sniff_mime_type(bytes);
        return {std::move(bytes), image.uri, std::move(mime)};
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NotFound) throw;
        return {{}, image.uri, {}};
    }
}

ChatRequest make_chat_request(const PipelineConfig& config, std::vector<ContentPart> parts) {
    ChatRequest req;
    req.temperature = config.temperature;
    req.top_p = config.top_p;
    req.max_tokens = config.max_tokens;
    req.messages.push_back({MessageRole::User, std::move(parts)});
    return req;
}

std::string ask_reasoner_raw(const EngineContext& ctx, const std::string& prompt,
                             const std::optional<std::string>& nudge) {
    auto req = make_chat_request(ctx.config, {ContentPart::of_text(prompt)});
    if (nudge) req.messages.insert(req.messages.begin(), {MessageRole::System, {ContentPart::of_text(*nudge)}});
    return ctx.gateway.complete(BackendRole::Reasoner, req).text;
}

}  // namespace lgir
