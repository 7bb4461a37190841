#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "fuseforge/core/errors.hpp"
#include "fuseforge/core/rigid_transform.hpp"

namespace fuseforge {

/// Rigid transform encoded as real (rotation) + dual (translation) quaternion,
/// dq = q_r + eps * q_d with q_d = 1/2 * quat(0, t) * q_r.
struct DualQuaternion {
    Eigen::Quaterniond real = Eigen::Quaterniond::Identity();
    Eigen::Quaterniond dual{0.0, 0.0, 0.0, 0.0};

    static DualQuaternion identity() { return {}; }

    /// Renormalizes to a valid rigid motion: unit real part and dual part
    /// orthogonal to it.
    void normalize() {
        const double n = real.norm();
        real.coeffs() /= n;
        dual.coeffs() /= n;
        const double d = real.coeffs().dot(dual.coeffs());
        dual.coeffs() -= d * real.coeffs();
    }
};

inline DualQuaternion dq_from_transform(const RigidTransform& t) {
    DualQuaternion dq;
    dq.real = Eigen::Quaterniond(t.rotation);
    if (dq.real.w() < 0.0) {
        dq.real.coeffs() *= -1.0;
    }
    const Eigen::Quaterniond tq(0.0, t.translation.x(), t.translation.y(), t.translation.z());
    const Eigen::Quaterniond prod = tq * dq.real;
    dq.dual.coeffs() = 0.5 * prod.coeffs();
    return dq;
}

inline RigidTransform dq_to_transform(const DualQuaternion& dq) {
    DualQuaternion n = dq;
    n.normalize();
    RigidTransform out;
    out.rotation = n.real.toRotationMatrix();
    const Eigen::Quaterniond prod(2.0 * (n.dual * n.real.conjugate()).coeffs());
    out.translation = prod.vec();
    return out;
}

/// Dual-quaternion linear blending: normalized weighted sum. Inputs whose
/// real part points away from the first one are sign-flipped before summing
/// (quaternion double cover).
inline DualQuaternion dqlb(std::span<const double> weights, std::span<const DualQuaternion> dqs) {
    if (weights.empty() || weights.size() != dqs.size()) {
        throw Error("dqlb: weight/dq lists empty or mismatched");
    }
    Eigen::Vector4d real_sum = Eigen::Vector4d::Zero();
    Eigen::Vector4d dual_sum = Eigen::Vector4d::Zero();
    double weight_sum = 0.0;
    const Eigen::Vector4d ref = dqs[0].real.coeffs();
    for (size_t i = 0; i < dqs.size(); ++i) {
        double sign = (dqs[i].real.coeffs().dot(ref) < 0.0) ? -1.0 : 1.0;
        real_sum += sign * weights[i] * dqs[i].real.coeffs();
        dual_sum += sign * weights[i] * dqs[i].dual.coeffs();
        weight_sum += weights[i];
    }
    if (weight_sum <= 0.0 || real_sum.norm() < 1e-15) {
        throw Error("dqlb: degenerate blend (all-zero weights)");
    }
    DualQuaternion out;
    out.real.coeffs() = real_sum;
    out.dual.coeffs() = dual_sum;
    out.normalize();
    return out;
}

}  // namespace fuseforge
