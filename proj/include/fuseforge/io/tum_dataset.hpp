#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fuseforge/core/rigid_transform.hpp"
#include "fuseforge/io/trajectory.hpp"

namespace fuseforge {

struct DatasetFrame {
    double timestamp = 0.0;  // depth timestamp, seconds
    std::string depth_path;
    std::string color_path;
    std::optional<RigidTransform> ground_truth;
};

struct TumDataset {
    std::vector<DatasetFrame> frames;
    Trajectory ground_truth;
};

/// Reads depth.txt / rgb.txt / optional groundtruth.txt under root. Depth and
/// color are matched by nearest timestamp within assoc_tolerance; unmatched
/// depth frames are dropped. Paths in the lists are resolved against root.
TumDataset load_tum_dataset(const std::string& root, double assoc_tolerance = 0.02);

}  // namespace fuseforge
