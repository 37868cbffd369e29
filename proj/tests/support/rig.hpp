#pragma once

// Small in-memory engine setup for unit tests: one MockBackend bound to every
// role, an empty cache and a memory image source.

#include <memory>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "lgir/context.hpp"
#include "lgir/index.hpp"
#include "lgir/mock_backend.hpp"

namespace synth {

struct Rig {
    std::shared_ptr<lgir::MockBackend> mock;
    lgir::Gateway gateway;
    lgir::ResultCache cache;
    lgir::MemoryImageSource source;
    lgir::PipelineConfig config;

    explicit Rig(std::shared_ptr<lgir::MockBackend> m = std::make_shared<lgir::MockBackend>("mock", 8))
        : mock(std::move(m)), gateway(fast_options()) {
        for (auto r : lgir::kAllRoles) gateway.bind(r, mock);
    }

    static lgir::GatewayOptions fast_options() {
        lgir::GatewayOptions o;
        o.backoff_base_ms = 1;
        return o;
    }

    lgir::EngineContext ctx() { return lgir::EngineContext{gateway, cache, source, config}; }
};

inline std::vector<float> random_unit(std::mt19937& rng, std::size_t d) {
    std::normal_distribution<double> g;
    std::vector<double> v(d);
    double sq = 0.0;
    for (auto& x : v) {
        x = g(rng);
        sq += x * x;
    }
    std::vector<float> out(d);
    for (std::size_t i = 0; i < d; ++i) out[i] = static_cast<float>(v[i] / std::sqrt(sq));
    return out;
}

/// Index over ids "img0".."img{n-1}" with the given rows; images are also
/// registered in `source` when provided.
inline lgir::EmbeddingIndex make_index(std::size_t n, std::size_t d, const std::vector<float>& image_rows,
                                       const std::vector<float>& caption_rows,
                                       lgir::MemoryImageSource* source = nullptr) {
    std::vector<lgir::ImageRecord> images;
    std::vector<lgir::CaptionRecord> captions;
    for (std::size_t i = 0; i < n; ++i) {
        const auto id = "img" + std::to_string(i);
        const auto bytes = lgir::to_bytes("image bytes " + id);
        images.push_back(lgir::make_image_record(id, "mem://" + id, bytes));
        captions.push_back({id, "caption " + id, "mock"});
        if (source) source->add("mem://" + id, bytes);
    }
    return lgir::EmbeddingIndex(images, captions, d, image_rows, caption_rows);
}

inline lgir::EmbeddingIndex random_index(std::mt19937& rng, std::size_t n, std::size_t d,
                                         lgir::MemoryImageSource* source = nullptr) {
    std::vector<float> im, cap;
    for (std::size_t i = 0; i < n; ++i) {
        const auto a = random_unit(rng, d);
        const auto b = random_unit(rng, d);
        im.insert(im.end(), a.begin(), a.end());
        cap.insert(cap.end(), b.begin(), b.end());
    }
    return make_index(n, d, im, cap, source);
}

/// Reasoner reply for Prompt1 in canonical JSON.
inline std::string stage1_reply(const std::vector<std::pair<std::string, std::string>>& atomic, const std::string& ce,
                                const std::string& ed, const std::string& cs) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& [kind, text] : atomic) list.push_back({{"Type", kind}, {"Instruction", text}});
    return "```json\n" +
           nlohmann::json{{"Atomic Instructions", list},
                          {"Core Elements", ce},
                          {"Enhanced Details", ed},
                          {"Comprehensive Synthesis", cs}}
               .dump() +
           "\n```";
}

}  // namespace synth
