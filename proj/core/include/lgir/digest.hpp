#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lgir {

using Bytes = std::vector<std::uint8_t>;

Bytes to_bytes(std::string_view text);
std::string to_string(std::span<const std::uint8_t> bytes);

/// Lowercase hex SHA-256 of the input.
std::string sha256_hex(std::span<const std::uint8_t> data);
std::string sha256_hex(std::string_view text);

/// Raw 32-byte SHA-256.
std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> data);

std::string base64_encode(std::span<const std::uint8_t> data);
/// Throws Error(InvalidArgument) on malformed input.
Bytes base64_decode(std::string_view text);

/// Best-effort MIME type from magic bytes; application/octet-stream otherwise.
std::string sniff_mime_type(std::span<const std::uint8_t> data);

}  // namespace lgir
