#include "fuseforge/image/pyramid.hpp"

#include "fuseforge/core/errors.hpp"
#include "fuseforge/image/filters.hpp"

namespace fuseforge {

namespace {

template <typename T>
Image<T> subsample(const Image<T>& img) {
    Image<T> out(img.width() / 2, img.height() / 2);
    for (int y = 0; y < out.height(); ++y) {
        for (int x = 0; x < out.width(); ++x) {
            out.at(x, y) = img.at(2 * x, 2 * y);
        }
    }
    return out;
}

}  // namespace

FramePyramid build_pyramid(const DepthImage& depth, const IntensityImage& intensity,
                           const PinholeIntrinsics& intr, int levels, int normal_step) {
    if (levels < 1) {
        throw Error("build_pyramid: levels must be >= 1");
    }
    FramePyramid pyr;
    pyr.levels.reserve(size_t(levels));

    FrameLevel base;
    base.depth = depth;
    base.intensity = intensity;
    base.intrinsics = intr;
    base.normals = compute_normals(base.depth, base.intrinsics, normal_step);
    pyr.levels.push_back(std::move(base));

    for (int l = 1; l < levels; ++l) {
        const FrameLevel& prev = pyr.levels.back();
        FrameLevel next;
        next.depth = subsample(gaussian_blur_depth(prev.depth));
        next.intensity = subsample(gaussian_blur(prev.intensity));
        next.intrinsics = intr.scaled(l);
        next.normals = compute_normals(next.depth, next.intrinsics, normal_step);
        pyr.levels.push_back(std::move(next));
    }
    return pyr;
}

FramePyramid build_pyramid(const DepthImage& depth, const ColorImage& color,
                           const PinholeIntrinsics& intr, int levels, int normal_step) {
    return build_pyramid(depth, intensity_from_rgb(color), intr, levels, normal_step);
}

}  // namespace fuseforge
