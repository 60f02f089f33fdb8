#pragma once

#include <cstdint>
#include <filesystem>

#include "rmgd/common.hpp"

namespace rmgd {

/// Reads a grayscale image.  Supports PGM (P5/P2) and uncompressed BMP
/// (8-bit palettized, 24/32-bit truecolor reduced by integer luma).
Grid2D<std::uint8_t> read_gray_image(const std::filesystem::path& path);

void write_pgm(const std::filesystem::path& path, const Grid2D<std::uint8_t>& img);

}  // namespace rmgd
