#include "lgir/ingest.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "lgir/parallel.hpp"
#include "lgir/prompts.hpp"
#include "lgir/text.hpp"

namespace lgir {

using nlohmann::json;

namespace {

std::string backend_id(Gateway& gateway, BackendRole role) {
    auto b = gateway.backend(role);
    return b ? b->id() : std::string("unbound");
}

std::vector<float> embedding_from_cache(const json& j) { return j.get<std::vector<float>>(); }

}  // namespace

std::vector<ManifestEntry> parse_manifest(std::string_view jsonl) {
    std::vector<ManifestEntry> out;
    std::set<std::string> seen;
    std::size_t line_no = 0;
    for (auto line : text::split_lines(jsonl)) {
        ++line_no;
        if (text::is_blank(line)) continue;
        auto j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j.contains("uri") ||
            !j["id"].is_string() || !j["uri"].is_string()) {
            throw Error(ErrorCode::ParseError,
                        "manifest line " + std::to_string(line_no) + " is not {\"id\", \"uri\"}");
        }
        ManifestEntry e{j["id"].get<std::string>(), j["uri"].get<std::string>()};
        if (e.id.empty()) throw Error(ErrorCode::ParseError, "manifest line " + std::to_string(line_no) + ": empty id");
        if (!seen.insert(e.id).second) {
            throw Error(ErrorCode::ParseError, "manifest line " + std::to_string(line_no) + ": duplicate id " + e.id);
        }
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::NotFound, "manifest not found: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_manifest(ss.str());
}

std::vector<ManifestEntry> absolutize(std::vector<ManifestEntry> entries, const std::filesystem::path& base) {
    for (auto& e : entries) {
        std::string_view p = e.uri;
        if (p.starts_with("file://")) p.remove_prefix(7);
        else if (p.find("://") != std::string_view::npos) continue;
        std::filesystem::path path(p);
        if (path.is_relative()) path = std::filesystem::absolute(base / path);
        e.uri = path.lexically_normal().string();
    }
    return entries;
}

std::filesystem::path FileImageSource::resolve(const std::string& uri) const {
    std::string_view p = uri;
    if (p.starts_with("file://")) p.remove_prefix(7);
    std::filesystem::path path(p);
    if (path.is_relative() && !base_.empty()) path = base_ / path;
    return path;
}

Bytes FileImageSource::read(const std::string& uri) const {
    const auto path = resolve(uri);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::NotFound, "image not found: " + path.string());
    return Bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

Bytes MemoryImageSource::read(const std::string& uri) const {
    auto it = images_.find(uri);
    if (it == images_.end()) throw Error(ErrorCode::NotFound, "image not found: " + uri);
    return it->second;
}

Sampling sampling_from(const PipelineConfig& config) {
    return {config.temperature, config.top_p, config.max_tokens};
}

CaptionRecord caption_image(const ImageRecord& image, const Bytes& bytes, Gateway& gateway,
                            ResultCache& cache, const Sampling& sampling) {
    const auto captioner = backend_id(gateway, BackendRole::Captioner);
    const auto key = captioner + ":" + image.content_hash;
    if (auto hit = cache.get("caption", key)) return {image.id, hit->get<std::string>(), captioner};

    ChatRequest req;
    req.temperature = sampling.temperature;
    req.top_p = sampling.top_p;
    req.max_tokens = sampling.max_tokens;
    req.messages.push_back({MessageRole::User,
                            {ContentPart::of_text(PromptLibrary::builtin().captioner_prompt()),
                             ContentPart::of_image({bytes, image.uri, sniff_mime_type(bytes)})}});
    const auto resp = gateway.complete(BackendRole::Captioner, req);
    std::string caption(text::trim(resp.text));
    if (caption.empty()) {
        throw Error(ErrorCode::MalformedResponse, "captioner returned an empty caption for " + image.id);
    }
    cache.put("caption", key, caption);
    return {image.id, caption, resp.backend_id.empty() ? captioner : resp.backend_id};
}

std::vector<float> cached_image_embedding(const ImageRecord& image, const Bytes& bytes,
                                          Gateway& gateway, ResultCache& cache) {
    const auto key = backend_id(gateway, BackendRole::ImageEncoder) + ":" + image.content_hash;
    if (auto hit = cache.get("image_embedding", key)) return embedding_from_cache(*hit);
    auto e = gateway.embed_image({bytes, image.uri, sniff_mime_type(bytes)});
    cache.put("image_embedding", key, e.values);
    return e.values;
}

std::vector<float> cached_text_embedding(const std::string& text, Gateway& gateway, ResultCache& cache) {
    const auto key = backend_id(gateway, BackendRole::TextEncoder) + ":" + sha256_hex(text);
    if (auto hit = cache.get("text_embedding", key)) return embedding_from_cache(*hit);
    auto e = gateway.embed_text(text);
    cache.put("text_embedding", key, e.values);
    return e.values;
}

EmbeddingIndex ingest(const std::vector<ManifestEntry>& entries, const ImageSource& source,
                      Gateway& gateway, ResultCache& cache, const IngestOptions& options) {
    if (entries.empty()) throw Error(ErrorCode::InvalidArgument, "nothing to ingest");
    const auto n = entries.size();
    std::vector<ImageRecord> images(n);
    std::vector<CaptionRecord> captions(n);
    std::vector<std::vector<float>> image_rows(n), caption_rows(n);
    std::atomic<std::size_t> done{0};

    parallel_for(n, options.workers, [&](std::size_t i) {
        const auto& e = entries[i];
        const auto bytes = source.read(e.uri);
        images[i] = make_image_record(e.id, e.uri, bytes);
        captions[i] = caption_image(images[i], bytes, gateway, cache, options.sampling);
        caption_rows[i] = cached_text_embedding(captions[i].text, gateway, cache);
        image_rows[i] = cached_image_embedding(images[i], bytes, gateway, cache);
        const auto finished = done.fetch_add(1) + 1;
        if (options.progress) options.progress(finished, n);
    });

    const auto dim = image_rows.front().size();
    std::vector<float> image_matrix, caption_matrix;
    image_matrix.reserve(n * dim);
    caption_matrix.reserve(n * dim);
    for (std::size_t i = 0; i < n; ++i) {
        if (image_rows[i].size() != dim || caption_rows[i].size() != dim) {
            throw Error(ErrorCode::DimensionMismatch, "embedding dimension differs for " + images[i].id);
        }
        image_matrix.insert(image_matrix.end(), image_rows[i].begin(), image_rows[i].end());
        caption_matrix.insert(caption_matrix.end(), caption_rows[i].begin(), caption_rows[i].end());
    }
    spdlog::info("ingested {} images (d={}, cache hits {}, misses {})", n, dim, cache.hits(), cache.misses());
    return EmbeddingIndex(std::move(images), std::move(captions), dim, std::move(image_matrix),
                          std::move(caption_matrix));
}

}  // namespace lgir
