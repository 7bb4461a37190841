#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Sparse>

#include "fuseforge/core/intrinsics.hpp"
#include "fuseforge/core/rigid_transform.hpp"
#include "fuseforge/graph/deformation_graph.hpp"
#include "fuseforge/image/image.hpp"
#include "fuseforge/surface/mesh.hpp"
#include "fuseforge/tracking/tracker.hpp"

namespace fuseforge {

/// Row-compressed Jacobian with dense per-node blocks. Each scalar row holds
/// a list of (node index, 1x6 block); node indices strictly increase within
/// a row. Unknown ordering is node-major: node i owns columns [6i, 6i+6).
struct SparseBlockMatrix {
    struct Block {
        size_t node;
        Eigen::Matrix<double, 1, 6> values;
    };
    std::vector<std::vector<Block>> rows;
    size_t node_count = 0;

    size_t row_count() const { return rows.size(); }
    size_t cols() const { return 6 * node_count; }

    Eigen::MatrixXd to_dense() const;
    /// J^T J and J^T r of this block layout, accumulated into sparse/dense
    /// outputs.
    void accumulate_normal_equations(const Eigen::VectorXd& residuals,
                                     std::vector<Eigen::Triplet<double>>* jtj_triplets,
                                     Eigen::VectorXd* jtr) const;
};

struct NonRigidConfig {
    double phi = 0.2;          // regularization weight
    int max_iters = 30;
    double tukey_lambda = 0.05;  // meters, data residuals
    double step_tol = 1e-7;
    double lm_tau = 1e-3;        // damping seed alpha0 = tau * max(diag(JtJ))
    int max_damped_failures = 3;
    // projective association gates shared with the rigid tracker
    double dist_reject = 0.10;
    double angle_reject_deg = 20.0;
};

/// One data-term pairing: the warped model point and normal, the live target
/// point, and the K influencing nodes of the canonical surface point with
/// normalized weights.
struct NodeCorrespondence {
    Eigen::Vector3d warped_point;
    Eigen::Vector3d normal;        // unit, warped model normal
    Eigen::Vector3d target_point;
    std::vector<size_t> node_indices;
    std::vector<double> node_weights;  // normalized, sum 1
    double robust_weight = 1.0;        // Tukey
};

/// Pairs vertices of two same-topology meshes by index. The canonical mesh
/// supplies influences; the warped mesh supplies points/normals.
std::vector<NodeCorrespondence> associate_by_index(const TriangleMesh& canonical,
                                                   const TriangleMesh& warped,
                                                   const TriangleMesh& target,
                                                   const DeformationGraph& graph,
                                                   const NonRigidConfig& cfg);

/// Projective association: renders the warped mesh into the live depth's
/// camera and pairs as in the rigid tracker, with the same distance and
/// normal-angle gates.
std::vector<NodeCorrespondence> associate_nonrigid(const TriangleMesh& canonical,
                                                   const DeformationGraph& graph,
                                                   const DepthImage& live_depth,
                                                   const NormalMap& live_normals,
                                                   const RigidTransform& pose,
                                                   const PinholeIntrinsics& intr,
                                                   const NonRigidConfig& cfg);

/// Point-to-plane data rows: residual n^T (v - vl), one scalar row per
/// correspondence, K nonzero node blocks per row. Rows with zero Tukey
/// weight are dropped; surviving rows are scaled by sqrt of the weight.
void build_data_term(const std::vector<NodeCorrespondence>& corrs, const DeformationGraph& graph,
                     SparseBlockMatrix* jacobian, Eigen::VectorXd* residuals);

/// Edge consistency rows: for each directed edge (i,j), a 3-vector residual
/// alpha_ij (T_i v_j - T_j v_j) with alpha_ij = max(w_i, w_j), all rows
/// scaled by sqrt(phi). Emitted as 3 scalar rows per edge.
void build_reg_term(const DeformationGraph& graph, double phi, SparseBlockMatrix* jacobian,
                    Eigen::VectorXd* residuals);

struct EnergyRecord {
    int iteration = 0;
    double e_data = 0.0;
    double e_reg = 0.0;
    double e_total = 0.0;
    double step_norm = 0.0;
};

struct WarpSolveResult {
    DeformationGraph graph;
    std::vector<EnergyRecord> trace;
};

/// Gauss-Newton with LM fallback over all 6n node twists against an
/// index-associated target mesh (fixed association). Stops at max_iters or
/// step norm below step_tol; throws SolverDivergenceError after
/// max_damped_failures consecutive energy increases under damping.
WarpSolveResult solve_warp_field(const DeformationGraph& graph, const TriangleMesh& canonical,
                                 const TriangleMesh& target, const NonRigidConfig& cfg);

/// Writes the energy trace as CSV: iteration,e_data,e_reg,e_total,step_norm.
void write_energy_trace(const std::vector<EnergyRecord>& trace, std::ostream& out);

}  // namespace fuseforge
