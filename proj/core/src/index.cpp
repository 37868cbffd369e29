#include "lgir/index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "lgir/digest.hpp"

namespace lgir {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'L', 'G', 'I', 'R', 'I', 'D', 'X', '\0'};
constexpr std::size_t kDigestSize = 32;

void check_rows(const std::vector<float>& m, std::size_t n, std::size_t dim, const char* which) {
    if (m.size() != n * dim) {
        throw Error(ErrorCode::InvalidArgument, std::string(which) + " matrix has wrong shape");
    }
    for (std::size_t i = 0; i < n; ++i) {
        double sq = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
            const double x = m[i * dim + k];
            if (!std::isfinite(x)) throw Error(ErrorCode::InvalidArgument, "non-finite embedding value");
            sq += x * x;
        }
        if (std::abs(std::sqrt(sq) - 1.0) > 1e-5) {
            throw Error(ErrorCode::InvalidArgument,
                        std::string(which) + " row " + std::to_string(i) + " is not unit norm");
        }
    }
}

void put_u32(Bytes& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> data, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data[at + i]) << (8 * i);
    return v;
}

void put_floats(Bytes& out, std::span<const float> values) {
    for (float f : values) put_u32(out, std::bit_cast<std::uint32_t>(f));
}

std::vector<float> get_floats(std::span<const std::uint8_t> data, std::size_t at, std::size_t count) {
    std::vector<float> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = std::bit_cast<float>(get_u32(data, at + 4 * i));
    return out;
}

[[noreturn]] void corrupt(const std::string& why) { throw Error(ErrorCode::CorruptIndex, why); }

}  // namespace

void to_json(json& j, const CaptionRecord& v) {
    j = json{{"image_id", v.image_id}, {"text", v.text}, {"captioner_id", v.captioner_id}};
}

void from_json(const json& j, CaptionRecord& v) {
    v.image_id = j.at("image_id").get<std::string>();
    v.text = j.at("text").get<std::string>();
    v.captioner_id = j.value("captioner_id", std::string{});
}

EmbeddingIndex::EmbeddingIndex(std::vector<ImageRecord> images, std::vector<CaptionRecord> captions,
                               std::size_t dim, std::vector<float> image_matrix,
                               std::vector<float> caption_matrix)
    : images_(std::move(images)),
      captions_(std::move(captions)),
      dim_(dim),
      image_matrix_(std::move(image_matrix)),
      caption_matrix_(std::move(caption_matrix)) {
    const auto n = images_.size();
    if (n > 0 && dim_ == 0) throw Error(ErrorCode::InvalidArgument, "index dimension must be positive");
    if (captions_.size() != n) throw Error(ErrorCode::InvalidArgument, "captions not aligned with images");
    check_rows(image_matrix_, n, dim_, "image");
    check_rows(caption_matrix_, n, dim_, "caption");
    for (std::size_t i = 0; i < n; ++i) {
        if (captions_[i].image_id != images_[i].id) {
            throw Error(ErrorCode::InvalidArgument, "caption " + std::to_string(i) + " belongs to another image");
        }
        if (captions_[i].text.empty()) {
            throw Error(ErrorCode::InvalidArgument, "empty caption for " + images_[i].id);
        }
        images_[i].caption = captions_[i].text;
        if (!positions_.emplace(images_[i].id, i).second) {
            throw Error(ErrorCode::InvalidArgument, "duplicate image id " + images_[i].id);
        }
    }
}

std::span<const float> EmbeddingIndex::image_row(std::size_t i) const {
    return std::span<const float>(image_matrix_).subspan(i * dim_, dim_);
}

std::span<const float> EmbeddingIndex::caption_row(std::size_t i) const {
    return std::span<const float>(caption_matrix_).subspan(i * dim_, dim_);
}

std::optional<std::size_t> EmbeddingIndex::position(const std::string& image_id) const {
    auto it = positions_.find(image_id);
    if (it == positions_.end()) return std::nullopt;
    return it->second;
}

const ImageRecord& EmbeddingIndex::record(const std::string& image_id) const {
    auto pos = position(image_id);
    if (!pos) throw Error(ErrorCode::NotFound, "no image with id " + image_id);
    return images_[*pos];
}

bool EmbeddingIndex::operator==(const EmbeddingIndex& o) const {
    auto bits_equal = [](const std::vector<float>& a, const std::vector<float>& b) {
        return a.size() == b.size() &&
               (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
    };
    return images_ == o.images_ && captions_ == o.captions_ && dim_ == o.dim_ &&
           bits_equal(image_matrix_, o.image_matrix_) && bits_equal(caption_matrix_, o.caption_matrix_);
}

std::vector<double> cosine_scores(std::span<const float> v, std::span<const float> matrix,
                                  std::size_t dim) {
    if (v.size() != dim) {
        throw Error(ErrorCode::DimensionMismatch, "query has dimension " + std::to_string(v.size()) +
                                                      ", index has " + std::to_string(dim));
    }
    if (dim == 0 || matrix.size() % dim != 0) {
        throw Error(ErrorCode::DimensionMismatch, "matrix size is not a multiple of the dimension");
    }
    const std::size_t n = matrix.size() / dim;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const float* row = matrix.data() + i * dim;
        double acc = 0.0;
        for (std::size_t k = 0; k < dim; ++k) acc += static_cast<double>(v[k]) * row[k];
        out[i] = std::clamp(acc, -1.0, 1.0);
    }
    return out;
}

std::vector<std::size_t> argsort_desc(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

Bytes serialize_index(const EmbeddingIndex& index) {
    json header{{"version", kIndexFormatVersion}, {"N", index.size()}, {"d", index.dim()}};
    json ids = json::array(), uris = json::array(), hashes = json::array(), captions = json::array();
    for (std::size_t i = 0; i < index.size(); ++i) {
        const auto& r = index.images()[i];
        ids.push_back(r.id);
        uris.push_back(r.uri);
        hashes.push_back(r.content_hash);
        captions.push_back(index.captions()[i]);
    }
    header["ids"] = std::move(ids);
    header["uris"] = std::move(uris);
    header["hashes"] = std::move(hashes);
    header["captions"] = std::move(captions);
    const auto header_text = header.dump();

    Bytes out(kMagic, kMagic + sizeof(kMagic));
    put_u32(out, kIndexFormatVersion);
    put_u32(out, static_cast<std::uint32_t>(header_text.size()));
    out.insert(out.end(), header_text.begin(), header_text.end());
    put_floats(out, index.image_matrix());
    put_floats(out, index.caption_matrix());
    const auto digest = sha256(out);
    out.insert(out.end(), digest.begin(), digest.end());
    return out;
}

EmbeddingIndex deserialize_index(std::span<const std::uint8_t> data) {
    if (data.size() < sizeof(kMagic) + 8 + kDigestSize) corrupt("index file is truncated");
    if (std::memcmp(data.data(), kMagic, sizeof(kMagic)) != 0) corrupt("bad index magic");
    const auto version = get_u32(data, 8);
    if (version != kIndexFormatVersion) corrupt("unsupported index version " + std::to_string(version));

    const auto body = data.subspan(0, data.size() - kDigestSize);
    const auto digest = sha256(body);
    if (std::memcmp(digest.data(), data.data() + body.size(), kDigestSize) != 0) {
        corrupt("index checksum mismatch");
    }

    const std::size_t header_len = get_u32(data, 12);
    const std::size_t header_at = 16;
    if (header_at + header_len > body.size()) corrupt("index header is truncated");
    const auto header = json::parse(body.begin() + header_at, body.begin() + header_at + header_len,
                                    nullptr, false);
    if (header.is_discarded() || !header.is_object()) corrupt("index header is not JSON");

    try {
        const auto n = header.at("N").get<std::size_t>();
        const auto d = header.at("d").get<std::size_t>();
        if (header.at("version").get<std::uint32_t>() != version) corrupt("header version disagrees");
        const auto& ids = header.at("ids");
        const auto& uris = header.at("uris");
        const auto& hashes = header.at("hashes");
        const auto& caps = header.at("captions");
        if (ids.size() != n || uris.size() != n || hashes.size() != n || caps.size() != n) {
            corrupt("header lists disagree with N");
        }
        const std::size_t payload = body.size() - header_at - header_len;
        if (payload != 2 * n * d * sizeof(float)) corrupt("payload size disagrees with N x d");

        std::vector<ImageRecord> images(n);
        std::vector<CaptionRecord> captions(n);
        for (std::size_t i = 0; i < n; ++i) {
            images[i].id = ids[i].get<std::string>();
            images[i].uri = uris[i].get<std::string>();
            images[i].content_hash = hashes[i].get<std::string>();
            captions[i] = caps[i].get<CaptionRecord>();
        }
        const std::size_t floats_at = header_at + header_len;
        auto image_matrix = get_floats(body, floats_at, n * d);
        auto caption_matrix = get_floats(body, floats_at + n * d * sizeof(float), n * d);
        return EmbeddingIndex(std::move(images), std::move(captions), d, std::move(image_matrix),
                              std::move(caption_matrix));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::CorruptIndex) throw;
        corrupt(std::string("inconsistent index: ") + e.what());
    } catch (const json::exception& e) {
        corrupt(std::string("malformed index header: ") + e.what());
    }
}

void save_index(const EmbeddingIndex& index, const std::filesystem::path& path) {
    const auto bytes = serialize_index(index);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + tmp);
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error(ErrorCode::InvalidArgument, "short write to " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

EmbeddingIndex load_index(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::NotFound, "index file not found: " + path.string());
    Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_index(data);
}

}  // namespace lgir
