#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "ndno/pointcloud.hpp"
#include "ndno/tape.hpp"

namespace ndno::fno {

struct OperatorArch {
    std::array<int, 3> modes = {8, 8, 4};
    int width = 32;   // latent width d_v
    int layers = 4;   // Fourier layers T
    int c_in = 8;     // sigma_xx, sigma_yy, mapped xyz, original xyz
    int c_out = 1;    // 1 main direction, 3 multi direction
    int proj_hidden = 64;
};

// The retained frequency set is the full symmetric lattice
// [-m1..m1] x [-m2..m2] x [-m3..m3]; spectral weights are stored for the
// lexicographically positive half plus a real DC block, so conjugate symmetry
// (hence real output) holds by construction.
struct OperatorParams {
    OperatorArch arch;
    Mat lift_w, lift_b;  // c_in x d_v, 1 x d_v
    struct Layer {
        Mat w;            // d_v x d_v pointwise
        Mat b;            // 1 x d_v
        Mat r0;           // d_v x d_v, DC mixing (real)
        Mat r_re, r_im;   // (H*d_v) x d_v stacked per positive half-mode
    };
    std::vector<Layer> layers;
    Mat proj_w1, proj_b1, proj_w2, proj_b2;

    static OperatorParams init(const OperatorArch& arch, std::uint64_t seed);
};

struct ParamBlock {
    std::string name;
    Mat* value;
};
std::vector<ParamBlock> param_blocks(OperatorParams& p);

// Full symmetric mode set, fixed order (kx outer, then ky, kz).
std::vector<Eigen::Vector3i> mode_list(const std::array<int, 3>& modes);
// Lexicographically positive half (excluding 0).
std::vector<Eigen::Vector3i> half_mode_list(const std::array<int, 3>& modes);

struct SpectralCoeffs {
    std::array<int, 3> modes{};
    std::vector<Eigen::Vector3i> mode_triples;  // == mode_list(modes)
    Eigen::MatrixXcd coeffs;                    // |modes| x channels
};

// F[k] = (1/N) sum_i v_i exp(-2 pi i k.x_i) over the retained set.
SpectralCoeffs geo_dft(const Mat& values, const PointMat& coords, const std::array<int, 3>& modes);

// v(x_q) = sum_k F[k] exp(+2 pi i k.x_q); returns the real part, and the
// largest |imag| entry if requested.
Mat geo_idft(const SpectralCoeffs& coeffs, const PointMat& query_coords,
             double* max_imag = nullptr);

// Cosine/sine basis rows for the positive half modes: H x N, row h holds
// cos/sin(2 pi k_h . x_i). Shared by DFT and IDFT at the same points.
struct SpectralBasis {
    Mat cos_b, sin_b;
};
SpectralBasis make_basis(const PointMat& coords, const std::array<int, 3>& modes);

struct OperatorInput {
    Mat channels;            // N x c_in
    PointMat coords;         // transform coordinates (mapped reference coords)
    PointMat query_coords;   // empty -> evaluate at coords
};

// One Fourier layer: activation(W z + idft(R . dft(z)) + b), all at `coords`.
Mat fourier_layer(const Mat& latent, const PointMat& coords, const OperatorParams::Layer& layer,
                  const std::array<int, 3>& modes, bool identity_activation = false);

Mat lift(const Mat& channels, const OperatorParams& p);

// Q o layer_T o ... o layer_1 o P. With query coordinates differing from the
// input points, the output field is band-limit interpolated onto the queries
// through one extra DFT/IDFT pair.
Mat forward(const OperatorParams& p, const OperatorInput& input);

// |pred - label|_F / |label|_F over all channels jointly.
double relative_l2_loss(const Mat& pred, const Mat& label);

// Per-channel affine standardization fitted on the training split;
// zero-variance channels are left untouched and reported.
struct ChannelScaler {
    Vec mean, stdev;
    std::vector<int> skipped;

    Mat apply(const Mat& values) const;
    Mat invert(const Mat& values) const;
};
ChannelScaler fit_scaler(const std::vector<Mat>& train_blocks);

// ---- training support (tape graphs) ----

struct OperatorLeaves {
    std::vector<ad::NodePtr> nodes;  // param_blocks order
};
OperatorLeaves make_leaves(const OperatorParams& p);

// Cached constant basis for one sample (transform coords fixed during
// operator training).
struct BasisConst {
    ad::NodePtr cos_b, sin_b;      // H x N
    ad::NodePtr cos_bt, sin_bt;    // N x H (transposes)
    Eigen::Index n = 0;
};
BasisConst make_basis_const(const PointMat& coords, const std::array<int, 3>& modes);

// Relative-L2 loss graph of the operator output against a label matrix.
ad::NodePtr build_loss_graph(const OperatorParams& p, const OperatorLeaves& leaves,
                             const Mat& channels, const BasisConst& basis, const Mat& label);

}  // namespace ndno::fno
