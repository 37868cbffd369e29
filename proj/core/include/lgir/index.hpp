#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lgir/digest.hpp"
#include "lgir/types.hpp"

namespace lgir {

struct CaptionRecord {
    std::string image_id;
    std::string text;
    std::string captioner_id;

    bool operator==(const CaptionRecord&) const = default;
};

void to_json(nlohmann::json& j, const CaptionRecord& v);
void from_json(const nlohmann::json& j, CaptionRecord& v);

/// Paired N x d matrices over the image database: image embeddings and
/// caption embeddings, row-major f32, rows aligned with `images()`.
class EmbeddingIndex {
public:
    EmbeddingIndex() = default;
    /// Throws InvalidArgument when shapes disagree, ids repeat or a row is not unit norm.
    EmbeddingIndex(std::vector<ImageRecord> images, std::vector<CaptionRecord> captions, std::size_t dim,
                   std::vector<float> image_matrix, std::vector<float> caption_matrix);

    std::size_t size() const { return images_.size(); }
    bool empty() const { return images_.empty(); }
    std::size_t dim() const { return dim_; }

    const std::vector<ImageRecord>& images() const { return images_; }
    const std::vector<CaptionRecord>& captions() const { return captions_; }
    std::span<const float> image_matrix() const { return image_matrix_; }
    std::span<const float> caption_matrix() const { return caption_matrix_; }
    std::span<const float> image_row(std::size_t i) const;
    std::span<const float> caption_row(std::size_t i) const;

    std::optional<std::size_t> position(const std::string& image_id) const;
    /// Throws NotFound.
    const ImageRecord& record(const std::string& image_id) const;

    bool operator==(const EmbeddingIndex& other) const;

private:
    std::vector<ImageRecord> images_;
    std::vector<CaptionRecord> captions_;
    std::size_t dim_ = 0;
    std::vector<float> image_matrix_;
    std::vector<float> caption_matrix_;
    std::unordered_map<std::string, std::size_t> positions_;
};

/// Dot product of `v` with every row of a row-major matrix. With unit-norm
/// inputs this is cosine similarity. Accumulates in double.
/// Throws DimensionMismatch when v.size() != dim or the matrix is ragged.
std::vector<double> cosine_scores(std::span<const float> v, std::span<const float> matrix,
                                  std::size_t dim);

/// Stable descending order of `scores` as 0-based indices.
std::vector<std::size_t> argsort_desc(std::span<const double> scores);

inline constexpr std::uint32_t kIndexFormatVersion = 1;

/// Layout: "LGIRIDX\0" | u32 version | u32 header length | JSON header |
/// N*d f32 image rows | N*d f32 caption rows | SHA-256 of all preceding bytes.
/// Integers and floats are little-endian.
void save_index(const EmbeddingIndex& index, const std::filesystem::path& path);
/// Throws CorruptIndex on bad magic, version, checksum, truncation or shape.
EmbeddingIndex load_index(const std::filesystem::path& path);

Bytes serialize_index(const EmbeddingIndex& index);
EmbeddingIndex deserialize_index(std::span<const std::uint8_t> data);

}  // namespace lgir
