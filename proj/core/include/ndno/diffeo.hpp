#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ndno/pointcloud.hpp"
#include "ndno/sinkhorn.hpp"
#include "ndno/tape.hpp"

namespace ndno::diffeo {

struct DiffeoArch {
    int edge_layers = 3;
    int width = 64;       // feature width d
    int heads = 4;
    int ffn_width = 128;
    int proj_hidden = 64;
    int k = 16;           // kNN neighbors
};

// All weights of the mapping network. The projection head's final layer is
// zero-initialized so the untrained network is the identity map.
struct DiffeoParams {
    DiffeoArch arch;
    std::vector<Mat> edge_w;  // layer l: (2*d_in) x d
    std::vector<Mat> edge_b;  // 1 x d
    Mat wq, bq, wk, bk, wv, bv, wo, bo;
    Mat ffn_w1, ffn_b1, ffn_w2, ffn_b2;
    Mat proj_w1, proj_b1, proj_w2, proj_b2;

    static DiffeoParams init(const DiffeoArch& arch, std::uint64_t seed);
};

// Named views over every parameter matrix, for optimizers and checkpoints.
struct ParamBlock {
    std::string name;
    Mat* value;
};
std::vector<ParamBlock> param_blocks(DiffeoParams& p);

struct MappingResult {
    Mat displacement;        // N x 3 (normalized units)
    PointMat mapped_points;  // source + displacement
    std::vector<Eigen::Matrix3d> jacobians;  // filled only when requested
};

struct DiffeoLossReport {
    double l_inv = 0.0, l_smooth = 0.0, l_sim = 0.0, total = 0.0;
    double beta1 = 0.0, beta2 = 0.0, beta3 = 0.0;
};

// DGCNN-style feature stack: per layer, feature_i = max_j tanh(W [f_i, f_j - f_i] + b)
// over the k nearest neighbors, the graph rebuilt in feature space after each
// layer. The passed graph seeds layer 1.
Mat edgeconv_features(const PointCloud& cloud, const KnnGraph& graph, const DiffeoParams& p);

// Multi-head cross-attention (queries from src, keys/values from tgt) with a
// residual add and feed-forward block.
Mat cross_attention_match(const Mat& feat_src, const Mat& feat_tgt, const DiffeoParams& p);

// The attention output alone (before the residual add), and the per-head
// softmax weight matrices; both mainly for inspection and tests.
Mat cross_attention_output(const Mat& feat_src, const Mat& feat_tgt, const DiffeoParams& p);
std::vector<Mat> attention_weights(const Mat& feat_src, const Mat& feat_tgt,
                                   const DiffeoParams& p);

Mat project_displacement(const Mat& matched, const DiffeoParams& p);

// Full mapping phi(x) = x + displacement(x). Coordinates are expected in
// normalized units.
MappingResult apply_mapping(const DiffeoParams& p, const PointCloud& src, const PointCloud& tgt);

// J(x_i) = d phi / d x_i: exact derivative of the forward computation with
// respect to source point i's coordinate (graphs and pooling selections held
// at their evaluated state, as finite differences see them almost everywhere).
std::vector<Eigen::Matrix3d> jacobian_at_points(const DiffeoParams& p, const PointCloud& src,
                                                const PointCloud& tgt,
                                                const std::vector<Eigen::Index>& at);

// (1/N) sum max(0, -det J)
double loss_inv(const std::vector<Eigen::Matrix3d>& jacobians);
// sum |J - I|_F^2
double loss_smooth(const std::vector<Eigen::Matrix3d>& jacobians);
DiffeoLossReport loss_total(const std::vector<Eigen::Matrix3d>& jacobians, double sim,
                            double beta1, double beta2, double beta3);

// Index-preserving transport: value at phi(x_i) equals value at x_i.
Mat pushforward_field(const Mat& values_on_src, const MappingResult& mapping);
Mat pullback_solution(const Mat& values_on_reference, const MappingResult& mapping);

// ---- training support (tape graphs) ----

struct DiffeoLeaves {
    std::vector<ad::NodePtr> nodes;  // same order as param_blocks
};
DiffeoLeaves make_leaves(const DiffeoParams& p);

struct DiffeoLossGraph {
    ad::NodePtr total, l_inv, l_smooth, l_sim;
    ot::TransportResult transport;  // converged plan behind l_sim
};

// Builds the Eq.-16-style loss on the tape: beta1 * L_inv + beta2 * L_smooth
// + beta3 * <P, C(mapped, tgt)> with P the converged Sinkhorn plan (held
// fixed; envelope gradient). Jacobian terms are evaluated at jac_roots and
// rescaled to full-set estimates of the loss definitions. A non-null
// fixed_plan replaces the solve, which is what finite-difference checks of
// the envelope gradient need.
DiffeoLossGraph build_loss_graph(const DiffeoParams& p, const DiffeoLeaves& leaves,
                                 const PointMat& src, const PointMat& tgt,
                                 const std::vector<Eigen::Index>& jac_roots, double beta1,
                                 double beta2, double beta3, const ot::SinkhornOptions& ot_opts,
                                 const Mat* fixed_plan = nullptr);

}  // namespace ndno::diffeo
