#pragma once

#include <string>
#include <vector>

#include "fuseforge/core/rigid_transform.hpp"

namespace fuseforge {

struct TrajectorySample {
    double timestamp = 0.0;        // seconds
    RigidTransform pose;           // camera-to-world
};

using Trajectory = std::vector<TrajectorySample>;

/// TUM text format: "timestamp tx ty tz qx qy qz qw" per line, '#' comments.
/// Quaternions are normalized on read. Parse errors report line numbers.
Trajectory read_trajectory_tum(const std::string& path);
void write_trajectory_tum(const Trajectory& trajectory, const std::string& path);

/// Absolute trajectory error: pairs are associated by nearest timestamp
/// within assoc_tolerance; when align is true a closed-form rigid alignment
/// (no scaling) is applied to the estimate first. Returns the RMSE of the
/// translation differences in meters.
double evaluate_ate_rmse(const Trajectory& estimated, const Trajectory& reference,
                         bool align = true, double assoc_tolerance = 0.02);

struct RpeResult {
    std::vector<double> errors;  // translation magnitude per pair, meters
    double rmse = 0.0;
};

/// Relative pose error over a fixed frame delta on the associated pairs.
RpeResult evaluate_rpe(const Trajectory& estimated, const Trajectory& reference, int delta = 1,
                       double assoc_tolerance = 0.02);

}  // namespace fuseforge
