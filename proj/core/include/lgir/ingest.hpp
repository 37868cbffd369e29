#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "lgir/cache.hpp"
#include "lgir/gateway.hpp"
#include "lgir/index.hpp"

namespace lgir {

struct ManifestEntry {
    std::string id;
    std::string uri;

    bool operator==(const ManifestEntry&) const = default;
};

/// JSON lines, one {"id", "uri"} object per line; blank lines are skipped.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
std::vector<ManifestEntry> parse_manifest(std::string_view jsonl);
/// Rewrites relative local paths against `base` (absolute, normalized).
/// URIs with a scheme other than file:// are left alone.
std::vector<ManifestEntry> absolutize(std::vector<ManifestEntry> entries, const std::filesystem::path& base);

/// Resolves image URIs to bytes.
class ImageSource {
public:
    virtual ~ImageSource() = default;
    /// Throws NotFound.
    virtual Bytes read(const std::string& uri) const = 0;
};

/// Local paths and file:// URIs; relative paths resolve against `base`.
class FileImageSource : public ImageSource {
public:
    explicit FileImageSource(std::filesystem::path base = {}) : base_(std::move(base)) {}
    Bytes read(const std::string& uri) const override;
    std::filesystem::path resolve(const std::string& uri) const;

private:
    std::filesystem::path base_;
};

class MemoryImageSource : public ImageSource {
public:
    void add(std::string uri, Bytes bytes) { images_[std::move(uri)] = std::move(bytes); }
    Bytes read(const std::string& uri) const override;

private:
    std::map<std::string, Bytes> images_;
};

struct Sampling {
    double temperature = 0.0;
    double top_p = 1.0;
    int max_tokens = 1024;
};

Sampling sampling_from(const PipelineConfig& config);

/// Captions one image with the captioner role, cached by content hash.
/// Returns the caption text and the id of the backend that produced it.
CaptionRecord caption_image(const ImageRecord& image, const Bytes& bytes, Gateway& gateway,
                            ResultCache& cache, const Sampling& sampling);

struct IngestOptions {
    Sampling sampling;
    std::size_t workers = 8;
    /// Called after each image finishes, with (done, total).
    std::function<void(std::size_t, std::size_t)> progress;
};

/// Reads, captions and embeds every entry; output rows follow input order.
/// Results are cached by content hash, so re-ingesting unchanged images
/// makes no model calls.
EmbeddingIndex ingest(const std::vector<ManifestEntry>& entries, const ImageSource& source,
                      Gateway& gateway, ResultCache& cache, const IngestOptions& options = {});

/// Embedding of an image through the image encoder, cached by content hash.
std::vector<float> cached_image_embedding(const ImageRecord& image, const Bytes& bytes,
                                          Gateway& gateway, ResultCache& cache);
/// Embedding of a text through the text encoder, cached by its digest.
std::vector<float> cached_text_embedding(const std::string& text, Gateway& gateway, ResultCache& cache);

}  // namespace lgir
