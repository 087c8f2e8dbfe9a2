#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ivg {

using Bytes = std::vector<std::uint8_t>;

// Lowercase hex SHA-256.
std::string sha256_hex(std::span<const std::uint8_t> data);
std::string sha256_hex(std::string_view text);

// Stable 64-bit seed derived from SHA-256; identical on every platform.
std::uint64_t stable_seed(std::string_view text);
std::uint64_t stable_seed(std::span<const std::uint8_t> data);

std::string base64_encode(std::span<const std::uint8_t> data);
// Throws std::invalid_argument on malformed input.
Bytes base64_decode(std::string_view text);

}  // namespace ivg
