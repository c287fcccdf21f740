#pragma once

#include <filesystem>

#include "image.hpp"

// 8-bit PNG decode/encode. Decode maps [0,255] -> [0,1] by division and
// converts RGB(A) input to BT.601 luma; encode clamps to [0,1] and rounds
// half-up to 8-bit grayscale.

namespace blr {

LuminanceImage read_png_luma(const std::filesystem::path& path);
void write_png_gray(const std::filesystem::path& path, const LuminanceImage& img);

// Encode-side quantizer, exposed so precompute can mirror on-disk values.
std::uint8_t quantize8(double v);

}  // namespace blr
