#include "fuseforge/io/trajectory.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Geometry>

#include "fuseforge/core/errors.hpp"

namespace fuseforge {

Trajectory read_trajectory_tum(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);

    Trajectory out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        double ts, tx, ty, tz, qx, qy, qz, qw;
        if (!(ls >> ts >> tx >> ty >> tz >> qx >> qy >> qz >> qw)) {
            throw IoError(path + ":" + std::to_string(line_no) + ": malformed trajectory line");
        }
        Eigen::Quaterniond q(qw, qx, qy, qz);
        if (q.norm() < 1e-12) {
            throw IoError(path + ":" + std::to_string(line_no) + ": zero quaternion");
        }
        q.normalize();
        TrajectorySample s;
        s.timestamp = ts;
        s.pose.rotation = q.toRotationMatrix();
        s.pose.translation = {tx, ty, tz};
        out.push_back(s);
    }
    return out;
}

void write_trajectory_tum(const Trajectory& trajectory, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.precision(9);
    out << std::fixed;
    for (const TrajectorySample& s : trajectory) {
        const Eigen::Quaterniond q(s.pose.rotation);
        out << s.timestamp << " " << s.pose.translation.x() << " " << s.pose.translation.y()
            << " " << s.pose.translation.z() << " " << q.x() << " " << q.y() << " " << q.z()
            << " " << q.w() << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

namespace {

// Pairs of indices (estimated, reference) matched by nearest timestamp
// within tolerance; each reference sample is used at most once.
std::vector<std::pair<size_t, size_t>> associate(const Trajectory& est, const Trajectory& ref,
                                                 double tolerance) {
    std::vector<std::pair<size_t, size_t>> pairs;
    size_t r = 0;
    for (size_t e = 0; e < est.size(); ++e) {
        while (r + 1 < ref.size() && std::abs(ref[r + 1].timestamp - est[e].timestamp) <=
                                         std::abs(ref[r].timestamp - est[e].timestamp)) {
            ++r;
        }
        if (r < ref.size() && std::abs(ref[r].timestamp - est[e].timestamp) <= tolerance) {
            pairs.emplace_back(e, r);
            if (r + 1 < ref.size()) ++r;
            else break;
        }
    }
    return pairs;
}

}  // namespace

double evaluate_ate_rmse(const Trajectory& estimated, const Trajectory& reference, bool align,
                         double assoc_tolerance) {
    const auto pairs = associate(estimated, reference, assoc_tolerance);
    if (pairs.empty()) {
        throw Error("evaluate_ate_rmse: no associated pose pairs");
    }

    const long n = long(pairs.size());
    Eigen::Matrix3Xd est_pts(3, n), ref_pts(3, n);
    for (long i = 0; i < n; ++i) {
        est_pts.col(i) = estimated[pairs[size_t(i)].first].pose.translation;
        ref_pts.col(i) = reference[pairs[size_t(i)].second].pose.translation;
    }

    if (align && n >= 3) {
        const Eigen::Matrix4d t = Eigen::umeyama(est_pts, ref_pts, false);
        est_pts = (t.topLeftCorner<3, 3>() * est_pts).colwise() + t.topRightCorner<3, 1>().eval();
    }

    double sum = 0.0;
    for (long i = 0; i < n; ++i) {
        sum += (est_pts.col(i) - ref_pts.col(i)).squaredNorm();
    }
    return std::sqrt(sum / double(n));
}

RpeResult evaluate_rpe(const Trajectory& estimated, const Trajectory& reference, int delta,
                       double assoc_tolerance) {
    if (delta < 1) throw Error("evaluate_rpe: delta must be >= 1");
    const auto pairs = associate(estimated, reference, assoc_tolerance);
    if (pairs.size() < size_t(delta) + 1) {
        throw Error("evaluate_rpe: fewer than delta+1 associated samples");
    }

    RpeResult result;
    double sum = 0.0;
    for (size_t i = 0; i + size_t(delta) < pairs.size(); ++i) {
        const auto& [e0, r0] = pairs[i];
        const auto& [e1, r1] = pairs[i + size_t(delta)];
        const RigidTransform est_rel =
            estimated[e0].pose.inverse().compose(estimated[e1].pose);
        const RigidTransform ref_rel =
            reference[r0].pose.inverse().compose(reference[r1].pose);
        const RigidTransform err = est_rel.inverse().compose(ref_rel);
        const double mag = err.translation.norm();
        result.errors.push_back(mag);
        sum += mag * mag;
    }
    result.rmse = std::sqrt(sum / double(result.errors.size()));
    return result;
}

}  // namespace fuseforge
