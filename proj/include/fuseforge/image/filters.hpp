#pragma once

#include <Eigen/Core>

#include "fuseforge/core/intrinsics.hpp"
#include "fuseforge/image/image.hpp"

namespace fuseforge {

/// Edge-preserving depth denoising. Invalid (0) pixels stay invalid and are
/// excluded from their neighbors' sums; kernel weights are renormalized over
/// the valid support.
DepthImage bilateral_filter(const DepthImage& depth, double sigma_spatial, double sigma_range,
                            int radius);

/// 5x5 binomial blur (kernel [1 4 6 4 1] x [1 4 6 4 1] / 256), clamp-to-edge
/// border. Image must be at least 5x5.
IntensityImage gaussian_blur(const IntensityImage& img);

/// Depth variant: invalid pixels are excluded and the kernel renormalized;
/// invalid pixels remain invalid in the output.
DepthImage gaussian_blur_depth(const DepthImage& depth);

/// Normals from cross products of backprojected pixel offsets, oriented
/// toward the camera. step must be in [1, 5].
NormalMap compute_normals(const DepthImage& depth, const PinholeIntrinsics& intr, int step);

/// Rec.601 luma scaled to [0, 1].
IntensityImage intensity_from_rgb(const ColorImage& color);

/// Central differences (interior), one-sided differences at the borders.
Image<Eigen::Vector2f> image_gradient(const IntensityImage& img);

}  // namespace fuseforge
