#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/SVD>

namespace fuseforge {

/// An SE(3) element stored as rotation matrix + translation vector.
struct RigidTransform {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    static RigidTransform identity() { return {}; }

    Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }

    RigidTransform compose(const RigidTransform& other) const {
        return {rotation * other.rotation, rotation * other.translation + translation};
    }

    RigidTransform inverse() const {
        Eigen::Matrix3d rt = rotation.transpose();
        return {rt, -(rt * translation)};
    }

    Eigen::Matrix4d matrix() const {
        Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
        m.topLeftCorner<3, 3>() = rotation;
        m.topRightCorner<3, 1>() = translation;
        return m;
    }

    /// Snaps the rotation block back to the nearest orthonormal matrix
    /// (polar decomposition via SVD).
    void reorthonormalize() {
        Eigen::JacobiSVD<Eigen::Matrix3d> svd(rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
        Eigen::Matrix3d u = svd.matrixU();
        Eigen::Matrix3d v = svd.matrixV();
        if ((u * v.transpose()).determinant() < 0.0) {
            u.col(2) *= -1.0;
        }
        rotation = u * v.transpose();
    }
};

inline Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
    Eigen::Matrix3d m;
    m << 0.0, -v.z(), v.y(),
         v.z(), 0.0, -v.x(),
        -v.y(), v.x(), 0.0;
    return m;
}

}  // namespace fuseforge
