#pragma once

#include <string>

#include "core/frame.hpp"

namespace svr {

// Raw row-major f32 maps (no header; dimensions come from the caller).
void write_f32_map(const ImageF32& img, const std::string& path);
// channels < 0 infers the channel count from the file size.
ImageF32 read_f32_map(const std::string& path, int width, int height, int channels);

// 8-bit RGB PNG -> [0,1] floats.
ImageF32 read_png_rgb(const std::string& path);
// 16-bit grayscale PNG in millimeters -> meters (0 stays 0 = invalid).
ImageF32 read_png_depth_mm(const std::string& path);

bool file_exists(const std::string& path);

}  // namespace svr
