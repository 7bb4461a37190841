#pragma once

#include <cmath>

#include <Eigen/Core>

#include "fuseforge/core/rigid_transform.hpp"

namespace fuseforge {

/// Minimal rigid-motion increment (alpha, beta, gamma, x, y, z):
/// rotation angles in radians about x, y, z and a translation in meters.
using TwistVector = Eigen::Matrix<double, 6, 1>;

enum class TwistMode {
    SmallAngle,  // linearized rotation, re-orthonormalized
    Exact        // full SE(3) exponential
};

/// Converts a twist to a rigid transform.
///
/// SmallAngle uses the first-order rotation matrix
///   (1 -g  b; g 1 -a; -b a 1)
/// followed by polar re-orthonormalization, with the translation taken
/// verbatim. Exact evaluates the SE(3) matrix exponential.
inline RigidTransform twist_to_transform(const TwistVector& xi, TwistMode mode = TwistMode::Exact) {
    const Eigen::Vector3d r = xi.head<3>();
    const Eigen::Vector3d t = xi.tail<3>();

    if (mode == TwistMode::SmallAngle) {
        RigidTransform out;
        out.rotation << 1.0, -r.z(), r.y(),
                        r.z(), 1.0, -r.x(),
                       -r.y(), r.x(), 1.0;
        out.translation = t;
        out.reorthonormalize();
        return out;
    }

    const double theta = r.norm();
    const Eigen::Matrix3d rx = skew(r);
    RigidTransform out;
    if (theta < 1e-12) {
        out.rotation = Eigen::Matrix3d::Identity() + rx;
        out.translation = t;
        out.reorthonormalize();
        return out;
    }
    const double a = std::sin(theta) / theta;
    const double b = (1.0 - std::cos(theta)) / (theta * theta);
    const double c = (1.0 - a) / (theta * theta);
    out.rotation = Eigen::Matrix3d::Identity() + a * rx + b * rx * rx;
    // Left Jacobian of SO(3): couples the translation in exp([r]x t; 0 0).
    const Eigen::Matrix3d v = Eigen::Matrix3d::Identity() + b * rx + c * rx * rx;
    out.translation = v * t;
    return out;
}

}  // namespace fuseforge
