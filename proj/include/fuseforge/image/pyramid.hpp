#pragma once

#include <vector>

#include "fuseforge/core/intrinsics.hpp"
#include "fuseforge/image/image.hpp"

namespace fuseforge {

/// One resolution level of a preprocessed frame.
struct FrameLevel {
    DepthImage depth;
    IntensityImage intensity;
    NormalMap normals;
    PinholeIntrinsics intrinsics;
};

/// Coarse-to-fine stack; level 0 is full resolution.
struct FramePyramid {
    std::vector<FrameLevel> levels;
};

/// Builds the multi-resolution stack: intensity from color at level 0, each
/// coarser level smoothed then subsampled by dropping odd rows/columns,
/// normals recomputed per level from that level's depth.
FramePyramid build_pyramid(const DepthImage& depth, const ColorImage& color,
                           const PinholeIntrinsics& intr, int levels, int normal_step = 2);

/// Same, starting from a precomputed intensity image (no color available).
FramePyramid build_pyramid(const DepthImage& depth, const IntensityImage& intensity,
                           const PinholeIntrinsics& intr, int levels, int normal_step = 2);

}  // namespace fuseforge
