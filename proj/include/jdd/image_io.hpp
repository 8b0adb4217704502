#pragma once

#include <filesystem>

#include "jdd/image.hpp"

namespace jdd {

/// Decodes an 8- or 16-bit lossless color image (PNG, TIFF, BMP, PPM) to a
/// 3-channel Image in [0,1]: 8-bit values are divided by 255 and 16-bit
/// values by 65535. Alpha channels are dropped. Throws IngestionError naming
/// the file for lossy formats, grayscale images and decoding failures.
[[nodiscard]] Image read_image(const std::filesystem::path& path);

/// True for extensions read_image accepts.
[[nodiscard]] bool is_lossless_image(const std::filesystem::path& path);

/// Writes a 1- or 3-channel image in [0,1] losslessly, quantized to the given
/// bit depth (8 or 16). The format follows the extension; it must be lossless.
void write_image(const std::filesystem::path& path, const Image& image, int bit_depth = 16);

}  // namespace jdd
