#pragma once

#include <filesystem>

#include "glips/imagery.hpp"

namespace glips {

/// Decodes an 8-bit PNG or JPEG into RGB [0,1] (value / 255). Alpha is
/// dropped. Throws FileNotFound, UnsupportedFormat or CorruptImage.
ImageTensor decode_image(const std::filesystem::path& path);

/// Writes a lossless 8-bit PNG, rounding value * 255. Throws IoError.
void encode_png(const ImageTensor& img, const std::filesystem::path& path);

/// Writes a single-channel 8-bit PNG from row-major values in [0,1].
void encode_gray_png(std::span<const double> values, std::size_t height, std::size_t width,
                     const std::filesystem::path& path);

}  // namespace glips
