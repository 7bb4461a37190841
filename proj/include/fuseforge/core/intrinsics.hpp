#pragma once

#include <Eigen/Core>

#include "fuseforge/core/errors.hpp"

namespace fuseforge {

/// Pinhole camera intrinsics (no distortion terms).
struct PinholeIntrinsics {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;

    /// Intrinsics of pyramid level l: focal lengths and principal point
    /// scaled by 1/2^l, image size floor-divided.
    PinholeIntrinsics scaled(int level) const {
        const double s = 1.0 / double(1 << level);
        return {fx * s, fy * s, cx * s, cy * s, width >> level, height >> level};
    }

    Eigen::Matrix3d matrix() const {
        Eigen::Matrix3d k = Eigen::Matrix3d::Identity();
        k(0, 0) = fx;
        k(1, 1) = fy;
        k(0, 2) = cx;
        k(1, 2) = cy;
        return k;
    }
};

/// Projects a camera-frame point into the image plane. Throws for z <= 0.
inline Eigen::Vector2d project(const PinholeIntrinsics& intr, const Eigen::Vector3d& point) {
    if (point.z() <= 0.0) {
        throw NonProjectableError("project: point has non-positive depth");
    }
    return {intr.fx * point.x() / point.z() + intr.cx,
            intr.fy * point.y() / point.z() + intr.cy};
}

/// Inverse of project: lifts a pixel with a depth measurement back to the
/// camera frame. The returned z equals the given depth.
inline Eigen::Vector3d backproject(const PinholeIntrinsics& intr, const Eigen::Vector2d& pixel,
                                   double depth) {
    if (depth <= 0.0) {
        throw InvalidMeasurementError("backproject: non-positive depth");
    }
    return {(pixel.x() - intr.cx) * depth / intr.fx,
            (pixel.y() - intr.cy) * depth / intr.fy,
            depth};
}

}  // namespace fuseforge
