#pragma once

#include <string>

#include "fuseforge/image/image.hpp"

namespace fuseforge {

/// TUM-style 16-bit depth PNG: stored value = meters * depth_scale,
/// 0 = no measurement.
DepthImage read_depth_png(const std::string& path, double depth_scale = 5000.0);
void write_depth_png(const std::string& path, const DepthImage& depth,
                     double depth_scale = 5000.0);

/// 8-bit RGB (gray and RGBA inputs are expanded/flattened on read).
ColorImage read_color_png(const std::string& path);
void write_color_png(const std::string& path, const ColorImage& color);

}  // namespace fuseforge
