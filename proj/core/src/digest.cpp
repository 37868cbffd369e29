#include "lgir/digest.hpp"

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <algorithm>
#include <cstring>

#include "lgir/error.hpp"

namespace lgir {

Bytes to_bytes(std::string_view text) { return Bytes(text.begin(), text.end()); }

std::string to_string(std::span<const std::uint8_t> bytes) {
    return std::string(bytes.begin(), bytes.end());
}

std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> data) {
    std::array<std::uint8_t, 32> out{};
    SHA256(data.data(), data.size(), out.data());
    return out;
}

std::string sha256_hex(std::span<const std::uint8_t> data) {
    static constexpr char kHex[] = "0123456789abcdef";
    const auto digest = sha256(data);
    std::string hex;
    hex.reserve(64);
    for (auto b : digest) {
        hex.push_back(kHex[b >> 4]);
        hex.push_back(kHex[b & 0x0f]);
    }
    return hex;
}

std::string sha256_hex(std::string_view text) {
    return sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string base64_encode(std::span<const std::uint8_t> data) {
    if (data.empty()) return {};
    std::string out(4 * ((data.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data.data(),
                                  static_cast<int>(data.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

Bytes base64_decode(std::string_view text) {
    std::string clean;
    clean.reserve(text.size());
    for (char c : text) {
        if (c != '\n' && c != '\r' && c != ' ' && c != '\t') clean.push_back(c);
    }
    if (clean.empty()) return {};
    if (clean.size() % 4 != 0) {
        throw Error(ErrorCode::InvalidArgument, "base64 input length is not a multiple of 4");
    }
    Bytes out(clean.size() / 4 * 3);
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(clean.data()),
                                  static_cast<int>(clean.size()));
    if (n < 0) throw Error(ErrorCode::InvalidArgument, "malformed base64 input");
    // EVP_DecodeBlock keeps the zero bytes produced by '=' padding.
    std::size_t pad = 0;
    if (clean.ends_with("==")) pad = 2;
    else if (clean.ends_with('=')) pad = 1;
    out.resize(static_cast<std::size_t>(n) - pad);
    return out;
}

std::string sniff_mime_type(std::span<const std::uint8_t> data) {
    auto starts = [&](std::initializer_list<std::uint8_t> magic, std::size_t offset = 0) {
        if (data.size() < offset + magic.size()) return false;
        return std::equal(magic.begin(), magic.end(), data.begin() + static_cast<std::ptrdiff_t>(offset));
    };
    if (starts({0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a})) return "image/png";
    if (starts({0xff, 0xd8, 0xff})) return "image/jpeg";
    if (starts({'G', 'I', 'F', '8'})) return "image/gif";
    if (starts({'R', 'I', 'F', 'F'}) && starts({'W', 'E', 'B', 'P'}, 8)) return "image/webp";
    if (starts({'B', 'M'})) return "image/bmp";
    return "application/octet-stream";
}

}  // namespace lgir
