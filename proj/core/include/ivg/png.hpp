#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "ivg/hashing.hpp"

namespace ivg {

// 8-bit RGB, row-major, width * height * 3 bytes. Throws std::runtime_error
// when libpng fails or the buffer size does not match.
Bytes encode_png_rgb(int width, int height, std::span<const std::uint8_t> rgb);

struct PngInfo {
  int width = 0;
  int height = 0;
};

// Reads the IHDR chunk; nullopt when the bytes are not a PNG.
std::optional<PngInfo> read_png_info(std::span<const std::uint8_t> bytes);

}  // namespace ivg
