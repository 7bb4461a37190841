#include "fuseforge/nonrigid/warp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include <Eigen/SparseCholesky>

#include "fuseforge/core/errors.hpp"
#include "fuseforge/core/twist.hpp"
#include "fuseforge/surface/raycast.hpp"

namespace fuseforge {

Eigen::MatrixXd SparseBlockMatrix::to_dense() const {
    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(long(rows.size()), long(cols()));
    for (size_t r = 0; r < rows.size(); ++r) {
        for (const Block& b : rows[r]) {
            dense.block<1, 6>(long(r), long(6 * b.node)) = b.values;
        }
    }
    return dense;
}

void SparseBlockMatrix::accumulate_normal_equations(
    const Eigen::VectorXd& residuals, std::vector<Eigen::Triplet<double>>* jtj_triplets,
    Eigen::VectorXd* jtr) const {
    if (residuals.size() != long(rows.size())) {
        throw Error("SparseBlockMatrix: residual count does not match row count");
    }
    for (size_t r = 0; r < rows.size(); ++r) {
        const double res = residuals[long(r)];
        for (const Block& bi : rows[r]) {
            jtr->segment<6>(long(6 * bi.node)) += bi.values.transpose() * res;
            for (const Block& bj : rows[r]) {
                const Eigen::Matrix<double, 6, 6> prod = bi.values.transpose() * bj.values;
                for (int a = 0; a < 6; ++a) {
                    for (int c = 0; c < 6; ++c) {
                        jtj_triplets->emplace_back(int(6 * bi.node) + a, int(6 * bj.node) + c,
                                                   prod(a, c));
                    }
                }
            }
        }
    }
}

std::vector<NodeCorrespondence> associate_by_index(const TriangleMesh& canonical,
                                                   const TriangleMesh& warped,
                                                   const TriangleMesh& target,
                                                   const DeformationGraph& graph,
                                                   const NonRigidConfig& cfg) {
    if (canonical.vertices.size() != target.vertices.size() ||
        canonical.vertices.size() != warped.vertices.size()) {
        throw Error("associate_by_index: meshes must share topology");
    }
    std::vector<NodeCorrespondence> corrs;
    corrs.reserve(canonical.vertices.size());
    for (size_t u = 0; u < canonical.vertices.size(); ++u) {
        NodeCorrespondence c;
        c.warped_point = warped.vertices[u];
        c.normal = u < warped.normals.size() ? warped.normals[u] : Eigen::Vector3d::UnitZ();
        c.target_point = target.vertices[u];
        NodeInfluence inf = influencing_nodes(graph, canonical.vertices[u]);
        c.node_indices = std::move(inf.indices);
        c.node_weights = std::move(inf.weights);
        const double residual = c.normal.dot(c.warped_point - c.target_point);
        c.robust_weight = robust_weight(RobustKernel::Tukey, residual, cfg.tukey_lambda);
        corrs.push_back(std::move(c));
    }
    if (corrs.empty()) {
        throw Error("associate_by_index: empty association set");
    }
    return corrs;
}

std::vector<NodeCorrespondence> associate_nonrigid(const TriangleMesh& canonical,
                                                   const DeformationGraph& graph,
                                                   const DepthImage& live_depth,
                                                   const NormalMap& live_normals,
                                                   const RigidTransform& pose,
                                                   const PinholeIntrinsics& intr,
                                                   const NonRigidConfig& cfg) {
    const TriangleMesh warped = warp_mesh(graph, canonical);
    const RenderedView predicted = raycast_mesh(warped, pose, intr);
    const RigidTransform world_to_cam = pose.inverse();
    const double cos_reject = std::cos(cfg.angle_reject_deg * std::numbers::pi / 180.0);

    std::vector<NodeCorrespondence> corrs;
    for (size_t u = 0; u < warped.vertices.size(); ++u) {
        const Eigen::Vector3d v_cam = world_to_cam.apply(warped.vertices[u]);
        if (v_cam.z() <= 0.0) continue;
        const Eigen::Vector2d px = project(intr, v_cam);
        const int x = int(std::lround(px.x()));
        const int y = int(std::lround(px.y()));
        if (!live_depth.in_bounds(x, y)) continue;

        // Occlusion check against the rendered warped surface.
        const float pred_z = predicted.depth.at(x, y);
        if (pred_z > 0.0f && v_cam.z() > double(pred_z) + cfg.dist_reject) continue;

        const float live_z = live_depth.at(x, y);
        if (live_z <= 0.0f) continue;
        const Eigen::Vector3f n_live = live_normals.at(x, y);
        if (!normal_valid(n_live)) continue;

        const Eigen::Vector3d target =
            pose.apply(backproject(intr, {double(x), double(y)}, live_z));
        if ((warped.vertices[u] - target).norm() > cfg.dist_reject) continue;
        const Eigen::Vector3d n_model =
            u < warped.normals.size() ? warped.normals[u] : Eigen::Vector3d::UnitZ();
        const Eigen::Vector3d n_live_world = pose.rotation * n_live.cast<double>();
        if (n_model.dot(n_live_world) < cos_reject) continue;

        NodeCorrespondence c;
        c.warped_point = warped.vertices[u];
        c.normal = n_model;
        c.target_point = target;
        NodeInfluence inf = influencing_nodes(graph, canonical.vertices[u]);
        c.node_indices = std::move(inf.indices);
        c.node_weights = std::move(inf.weights);
        const double residual = c.normal.dot(c.warped_point - c.target_point);
        c.robust_weight = robust_weight(RobustKernel::Tukey, residual, cfg.tukey_lambda);
        corrs.push_back(std::move(c));
    }
    if (corrs.empty()) {
        throw Error("associate_nonrigid: empty association set");
    }
    return corrs;
}

void build_data_term(const std::vector<NodeCorrespondence>& corrs, const DeformationGraph& graph,
                     SparseBlockMatrix* jacobian, Eigen::VectorXd* residuals) {
    if (corrs.empty()) {
        throw Error("build_data_term: empty correspondence list");
    }
    jacobian->node_count = graph.nodes.size();
    std::vector<double> res;
    res.reserve(corrs.size());
    for (const NodeCorrespondence& c : corrs) {
        if (c.robust_weight <= 0.0) continue;
        const double s = std::sqrt(c.robust_weight);
        const double r = c.normal.dot(c.warped_point - c.target_point);

        // d(exp(xi) v)/d(xi) = [-[v]x | I]; the row for node j is this
        // premultiplied by n^T and the node's normalized blend weight.
        Eigen::Matrix<double, 1, 6> base;
        base.leftCols<3>() = c.warped_point.cross(c.normal).transpose();
        base.rightCols<3>() = c.normal.transpose();

        std::vector<SparseBlockMatrix::Block> row;
        row.reserve(c.node_indices.size());
        for (size_t k = 0; k < c.node_indices.size(); ++k) {
            row.push_back({c.node_indices[k], s * c.node_weights[k] * base});
        }
        std::sort(row.begin(), row.end(),
                  [](const auto& a, const auto& b) { return a.node < b.node; });
        jacobian->rows.push_back(std::move(row));
        res.push_back(s * r);
    }
    residuals->resize(long(res.size()));
    for (size_t i = 0; i < res.size(); ++i) (*residuals)[long(i)] = res[i];
}

void build_reg_term(const DeformationGraph& graph, double phi, SparseBlockMatrix* jacobian,
                    Eigen::VectorXd* residuals) {
    jacobian->node_count = graph.nodes.size();
    const double s = std::sqrt(phi);
    std::vector<double> res;

    for (size_t i = 0; i < graph.edges.size(); ++i) {
        const RigidTransform ti = dq_to_transform(graph.nodes[i].dq);
        for (size_t j : graph.edges[i]) {
            const RigidTransform tj = dq_to_transform(graph.nodes[j].dq);
            const Eigen::Vector3d vj = graph.nodes[j].position;
            const Eigen::Vector3d a = ti.apply(vj);
            const Eigen::Vector3d b = tj.apply(vj);
            const double alpha = std::max(graph.nodes[i].radius, graph.nodes[j].radius);
            const Eigen::Vector3d r = alpha * (a - b);

            Eigen::Matrix<double, 3, 6> block_i;
            block_i.leftCols<3>() = -skew(a);
            block_i.rightCols<3>() = Eigen::Matrix3d::Identity();
            Eigen::Matrix<double, 3, 6> block_j;
            block_j.leftCols<3>() = skew(b);
            block_j.rightCols<3>() = -Eigen::Matrix3d::Identity();

            for (int row = 0; row < 3; ++row) {
                std::vector<SparseBlockMatrix::Block> blocks;
                blocks.push_back({i, s * alpha * block_i.row(row)});
                blocks.push_back({j, s * alpha * block_j.row(row)});
                if (blocks[0].node > blocks[1].node) std::swap(blocks[0], blocks[1]);
                jacobian->rows.push_back(std::move(blocks));
                res.push_back(s * r[row]);
            }
        }
    }
    residuals->resize(long(res.size()));
    for (size_t i = 0; i < res.size(); ++i) (*residuals)[long(i)] = res[i];
}

namespace {

struct AssembledSystem {
    Eigen::SparseMatrix<double> jtj;
    Eigen::VectorXd jtr;
    double e_data = 0.0;
    double e_reg = 0.0;
};

AssembledSystem assemble(const DeformationGraph& graph, const TriangleMesh& canonical,
                         const TriangleMesh& warped, const TriangleMesh& target,
                         const NonRigidConfig& cfg) {
    const auto corrs = associate_by_index(canonical, warped, target, graph, cfg);

    SparseBlockMatrix j_data, j_reg;
    Eigen::VectorXd r_data, r_reg;
    build_data_term(corrs, graph, &j_data, &r_data);
    build_reg_term(graph, cfg.phi, &j_reg, &r_reg);

    const long n = long(6 * graph.nodes.size());
    AssembledSystem sys;
    sys.jtr = Eigen::VectorXd::Zero(n);
    std::vector<Eigen::Triplet<double>> triplets;
    j_data.accumulate_normal_equations(r_data, &triplets, &sys.jtr);
    j_reg.accumulate_normal_equations(r_reg, &triplets, &sys.jtr);
    sys.jtj.resize(n, n);
    sys.jtj.setFromTriplets(triplets.begin(), triplets.end());
    sys.e_data = r_data.squaredNorm();
    sys.e_reg = r_reg.squaredNorm();
    return sys;
}

DeformationGraph apply_step(const DeformationGraph& graph, const Eigen::VectorXd& h) {
    DeformationGraph out = graph;
    for (size_t i = 0; i < out.nodes.size(); ++i) {
        const TwistVector xi = h.segment<6>(long(6 * i));
        const RigidTransform inc = twist_to_transform(xi, TwistMode::Exact);
        const RigidTransform cur = dq_to_transform(out.nodes[i].dq);
        out.nodes[i].dq = dq_from_transform(inc.compose(cur));
    }
    return out;
}

double energy_of(const DeformationGraph& graph, const TriangleMesh& canonical,
                 const TriangleMesh& target, const NonRigidConfig& cfg, double* e_data,
                 double* e_reg) {
    const TriangleMesh warped = warp_mesh(graph, canonical);
    const auto corrs = associate_by_index(canonical, warped, target, graph, cfg);
    double ed = 0.0;
    for (const NodeCorrespondence& c : corrs) {
        const double r = c.normal.dot(c.warped_point - c.target_point);
        ed += c.robust_weight * r * r;
    }
    double er = 0.0;
    for (size_t i = 0; i < graph.edges.size(); ++i) {
        const RigidTransform ti = dq_to_transform(graph.nodes[i].dq);
        for (size_t j : graph.edges[i]) {
            const RigidTransform tj = dq_to_transform(graph.nodes[j].dq);
            const Eigen::Vector3d vj = graph.nodes[j].position;
            const double alpha = std::max(graph.nodes[i].radius, graph.nodes[j].radius);
            er += (alpha * (ti.apply(vj) - tj.apply(vj))).squaredNorm();
        }
    }
    if (e_data) *e_data = ed;
    if (e_reg) *e_reg = cfg.phi * er;
    return ed + cfg.phi * er;
}

}  // namespace

WarpSolveResult solve_warp_field(const DeformationGraph& graph, const TriangleMesh& canonical,
                                 const TriangleMesh& target, const NonRigidConfig& cfg) {
    WarpSolveResult result;
    result.graph = graph;

    double e_data = 0.0, e_reg = 0.0;
    double energy = energy_of(result.graph, canonical, target, cfg, &e_data, &e_reg);
    int damped_failures = 0;

    for (int it = 0; it < cfg.max_iters; ++it) {
        const TriangleMesh warped = warp_mesh(result.graph, canonical);
        const AssembledSystem sys = assemble(result.graph, canonical, warped, target, cfg);

        const double diag_max = sys.jtj.diagonal().maxCoeff();
        // A whisper of Tikhonov keeps exact null directions (e.g. tangential
        // motion of a flat patch under point-to-plane) out of the step.
        double damping = 1e-8 * diag_max;
        Eigen::VectorXd h;
        DeformationGraph candidate;
        double cand_energy = 0.0, cand_ed = 0.0, cand_er = 0.0;

        // Gauss-Newton step first; escalate LM damping while the energy
        // increases.
        bool accepted = false;
        for (int attempt = 0; attempt < 12; ++attempt) {
            Eigen::SparseMatrix<double> a = sys.jtj;
            if (damping > 0.0) {
                Eigen::SparseMatrix<double> identity(a.rows(), a.cols());
                identity.setIdentity();
                a += damping * identity;
            }
            Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(a);
            if (ldlt.info() != Eigen::Success) {
                damping = std::max(cfg.lm_tau * diag_max, 10.0 * damping);
                continue;
            }
            h = ldlt.solve(-sys.jtr);
            if (ldlt.info() != Eigen::Success) {
                damping = std::max(cfg.lm_tau * diag_max, 10.0 * damping);
                continue;
            }
            candidate = apply_step(result.graph, h);
            cand_energy = energy_of(candidate, canonical, target, cfg, &cand_ed, &cand_er);
            if (cand_energy < energy) {
                accepted = true;
                break;
            }
            if (h.norm() < cfg.step_tol) {
                // Converged: a vanishing step that does not lower the energy
                // is discarded so the recorded trace stays monotone.
                result.trace.push_back({it, e_data, e_reg, energy, h.norm()});
                return result;
            }
            damping = std::max(cfg.lm_tau * diag_max, 10.0 * damping);
        }

        if (!accepted) {
            if (++damped_failures >= cfg.max_damped_failures) {
                throw SolverDivergenceError(
                    "solve_warp_field: energy increased on consecutive damped steps");
            }
            result.trace.push_back({it, e_data, e_reg, energy, 0.0});
            continue;
        }
        damped_failures = 0;

        result.graph = candidate;
        energy = cand_energy;
        e_data = cand_ed;
        e_reg = cand_er;
        const double step_norm = h.norm();
        result.trace.push_back({it, e_data, e_reg, energy, step_norm});
        if (step_norm < cfg.step_tol) break;
    }
    return result;
}

void write_energy_trace(const std::vector<EnergyRecord>& trace, std::ostream& out) {
    out << "iteration,e_data,e_reg,e_total,step_norm\n";
    out.precision(12);
    for (const EnergyRecord& rec : trace) {
        out << rec.iteration << "," << rec.e_data << "," << rec.e_reg << "," << rec.e_total << ","
            << rec.step_norm << "\n";
    }
}

}  // namespace fuseforge
