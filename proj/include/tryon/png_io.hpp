#pragma once

#include <string>

#include "tryon/tensor.hpp"

namespace tryon {

// 8-bit PNG I/O. Images are quantized with round(v * 255); loading divides
// by 255, so any image written by write_png round-trips exactly at the
// quantized values. Masks use {0, 255}.
void write_png(const std::string& path, const Image& img);
Image read_png(const std::string& path);

void write_mask_png(const std::string& path, const Mask& m);
Mask read_mask_png(const std::string& path);

}  // namespace tryon
