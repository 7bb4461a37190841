#include "fuseforge/io/tum_dataset.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "fuseforge/core/errors.hpp"

namespace fuseforge {

namespace {

struct TimedPath {
    double timestamp;
    std::string path;
};

std::vector<TimedPath> read_list_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<TimedPath> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        TimedPath entry;
        if (!(ls >> entry.timestamp >> entry.path)) {
            throw IoError(path + ":" + std::to_string(line_no) + ": malformed list line");
        }
        out.push_back(std::move(entry));
    }
    return out;
}

// Index of the entry with the nearest timestamp, in a time-sorted list.
size_t nearest(const std::vector<TimedPath>& list, double ts) {
    size_t lo = 0, hi = list.size();
    while (hi - lo > 1) {
        const size_t mid = (lo + hi) / 2;
        if (list[mid].timestamp <= ts) lo = mid;
        else hi = mid;
    }
    if (lo + 1 < list.size() &&
        std::abs(list[lo + 1].timestamp - ts) < std::abs(list[lo].timestamp - ts)) {
        return lo + 1;
    }
    return lo;
}

const TrajectorySample* nearest_pose(const Trajectory& traj, double ts, double tolerance) {
    if (traj.empty()) return nullptr;
    size_t lo = 0, hi = traj.size();
    while (hi - lo > 1) {
        const size_t mid = (lo + hi) / 2;
        if (traj[mid].timestamp <= ts) lo = mid;
        else hi = mid;
    }
    if (lo + 1 < traj.size() &&
        std::abs(traj[lo + 1].timestamp - ts) < std::abs(traj[lo].timestamp - ts)) {
        ++lo;
    }
    return std::abs(traj[lo].timestamp - ts) <= tolerance ? &traj[lo] : nullptr;
}

}  // namespace

TumDataset load_tum_dataset(const std::string& root, double assoc_tolerance) {
    const auto depth_list = read_list_file(root + "/depth.txt");
    const auto color_list = read_list_file(root + "/rgb.txt");
    if (color_list.empty()) throw IoError(root + "/rgb.txt is empty");

    TumDataset dataset;
    std::ifstream gt_probe(root + "/groundtruth.txt");
    if (gt_probe) {
        gt_probe.close();
        dataset.ground_truth = read_trajectory_tum(root + "/groundtruth.txt");
    }

    for (const TimedPath& d : depth_list) {
        const size_t c = nearest(color_list, d.timestamp);
        if (std::abs(color_list[c].timestamp - d.timestamp) > assoc_tolerance) continue;
        DatasetFrame frame;
        frame.timestamp = d.timestamp;
        frame.depth_path = root + "/" + d.path;
        frame.color_path = root + "/" + color_list[c].path;
        if (const TrajectorySample* gt =
                nearest_pose(dataset.ground_truth, d.timestamp, assoc_tolerance)) {
            frame.ground_truth = gt->pose;
        }
        dataset.frames.push_back(std::move(frame));
    }
    return dataset;
}

}  // namespace fuseforge
