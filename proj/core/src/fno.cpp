#include "ndno/fno.hpp"

#include <cmath>

#include "ndno/detail/backend.hpp"
#include "ndno/rng.hpp"

namespace ndno::fno {

namespace {

using detail::EigenBackend;
using detail::TapeBackend;

constexpr double kTwoPi = 2.0 * M_PI;

template <class B>
struct PView {
    OperatorArch arch;
    typename B::M lift_w, lift_b;
    struct Layer {
        typename B::M w, b, r0, r_re, r_im;
    };
    std::vector<Layer> layers;
    typename B::M proj_w1, proj_b1, proj_w2, proj_b2;
};

template <class B>
PView<B> view_from_vector(const OperatorArch& arch, const std::vector<typename B::M>& v) {
    const std::size_t T = static_cast<std::size_t>(arch.layers);
    if (v.size() != 5 * T + 6)
        throw ValidationError("fno: parameter vector has wrong block count");
    PView<B> pv;
    pv.arch = arch;
    std::size_t i = 0;
    pv.lift_w = v[i++];
    pv.lift_b = v[i++];
    for (std::size_t t = 0; t < T; ++t) {
        typename PView<B>::Layer l;
        l.w = v[i++];
        l.b = v[i++];
        l.r0 = v[i++];
        l.r_re = v[i++];
        l.r_im = v[i++];
        pv.layers.push_back(std::move(l));
    }
    pv.proj_w1 = v[i++];
    pv.proj_b1 = v[i++];
    pv.proj_w2 = v[i++];
    pv.proj_b2 = v[i++];
    return pv;
}

PView<EigenBackend> eigen_view(const OperatorParams& p) {
    std::vector<Mat> v;
    auto& mp = const_cast<OperatorParams&>(p);
    for (const auto& blk : param_blocks(mp)) v.push_back(*blk.value);
    return view_from_vector<EigenBackend>(p.arch, v);
}

template <class B>
struct Basis {
    typename B::M cos_b, sin_b, cos_bt, sin_bt;
    Eigen::Index n = 0;
};

// spectral path: idft(R . dft(z)) with the real-pair formulation
// F = A - iB, A = (1/N) Cos z, B = (1/N) Sin z, G = F R (per mode),
// out = 1 G0 + 2 (Cos^T G_re - Sin^T G_im)
template <class B>
typename B::M spectral_path(const typename B::M& z, const Basis<B>& basis,
                            const typename PView<B>::Layer& layer) {
    const double inv_n = 1.0 / static_cast<double>(basis.n);
    auto a = B::scale(B::matmul(basis.cos_b, z), inv_n);
    auto b = B::scale(B::matmul(basis.sin_b, z), inv_n);
    auto g_re = B::mode_mix(a, b, layer.r_re, layer.r_im, false);
    auto g_im = B::mode_mix(a, b, layer.r_re, layer.r_im, true);

    // DC term: F0 = (1/N) 1^T z (real), contribution 1 (F0 r0)
    const Mat ones_row = Mat::Ones(1, basis.n) * inv_n;
    const Mat ones_col = Mat::Ones(basis.n, 1);
    auto f0 = B::matmul(B::constant(ones_row), z);
    auto dc = B::matmul(B::constant(ones_col), B::matmul(f0, layer.r0));

    auto osc = B::sub(B::matmul(basis.cos_bt, g_re), B::matmul(basis.sin_bt, g_im));
    return B::add(dc, B::scale(osc, 2.0));
}

template <class B>
typename B::M layer_forward(const typename B::M& z, const Basis<B>& basis,
                            const typename PView<B>::Layer& layer, bool identity_activation) {
    auto pointwise = B::matmul(z, layer.w);
    auto mixed = B::add_rowvec(B::add(pointwise, spectral_path<B>(z, basis, layer)), layer.b);
    return identity_activation ? mixed : B::gelu(mixed);
}

template <class B>
typename B::M run_forward(const PView<B>& pv, const typename B::M& channels,
                          const Basis<B>& basis) {
    auto z = B::add_rowvec(B::matmul(channels, pv.lift_w), pv.lift_b);
    for (const auto& layer : pv.layers) z = layer_forward<B>(z, basis, layer, false);
    auto h = B::gelu(B::add_rowvec(B::matmul(z, pv.proj_w1), pv.proj_b1));
    return B::add_rowvec(B::matmul(h, pv.proj_w2), pv.proj_b2);
}

Basis<EigenBackend> eigen_basis(const PointMat& coords, const std::array<int, 3>& modes) {
    auto sb = make_basis(coords, modes);
    Basis<EigenBackend> b;
    b.cos_bt = sb.cos_b.transpose();
    b.sin_bt = sb.sin_b.transpose();
    b.cos_b = std::move(sb.cos_b);
    b.sin_b = std::move(sb.sin_b);
    b.n = coords.rows();
    return b;
}

}  // namespace

std::vector<Eigen::Vector3i> mode_list(const std::array<int, 3>& modes) {
    std::vector<Eigen::Vector3i> out;
    for (int kx = -modes[0]; kx <= modes[0]; ++kx)
        for (int ky = -modes[1]; ky <= modes[1]; ++ky)
            for (int kz = -modes[2]; kz <= modes[2]; ++kz) out.emplace_back(kx, ky, kz);
    return out;
}

std::vector<Eigen::Vector3i> half_mode_list(const std::array<int, 3>& modes) {
    std::vector<Eigen::Vector3i> out;
    for (const auto& k : mode_list(modes)) {
        if (k[0] > 0 || (k[0] == 0 && k[1] > 0) || (k[0] == 0 && k[1] == 0 && k[2] > 0))
            out.push_back(k);
    }
    return out;
}

SpectralBasis make_basis(const PointMat& coords, const std::array<int, 3>& modes) {
    const auto half = half_mode_list(modes);
    const Eigen::Index h = static_cast<Eigen::Index>(half.size()), n = coords.rows();
    SpectralBasis b;
    b.cos_b.resize(h, n);
    b.sin_b.resize(h, n);
    for (Eigen::Index r = 0; r < h; ++r) {
        const auto& k = half[static_cast<std::size_t>(r)];
        for (Eigen::Index i = 0; i < n; ++i) {
            const double phase =
                kTwoPi * (k[0] * coords(i, 0) + k[1] * coords(i, 1) + k[2] * coords(i, 2));
            b.cos_b(r, i) = std::cos(phase);
            b.sin_b(r, i) = std::sin(phase);
        }
    }
    return b;
}

SpectralCoeffs geo_dft(const Mat& values, const PointMat& coords,
                       const std::array<int, 3>& modes) {
    if (values.rows() != coords.rows())
        throw ValidationError("geo_dft: values and coords row counts differ");
    if (!values.allFinite()) throw NumericError("geo_dft: non-finite values");
    SpectralCoeffs sc;
    sc.modes = modes;
    sc.mode_triples = mode_list(modes);
    const Eigen::Index m = static_cast<Eigen::Index>(sc.mode_triples.size());
    const Eigen::Index n = coords.rows(), d = values.cols();
    sc.coeffs.resize(m, d);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (Eigen::Index r = 0; r < m; ++r) {
        const auto& k = sc.mode_triples[static_cast<std::size_t>(r)];
        Eigen::RowVectorXcd acc = Eigen::RowVectorXcd::Zero(d);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double phase =
                -kTwoPi * (k[0] * coords(i, 0) + k[1] * coords(i, 1) + k[2] * coords(i, 2));
            acc += std::complex<double>(std::cos(phase), std::sin(phase)) * values.row(i);
        }
        sc.coeffs.row(r) = acc * inv_n;
    }
    return sc;
}

Mat geo_idft(const SpectralCoeffs& coeffs, const PointMat& query_coords, double* max_imag) {
    if (!coeffs.coeffs.allFinite()) throw NumericError("geo_idft: non-finite coefficients");
    const Eigen::Index nq = query_coords.rows(), d = coeffs.coeffs.cols();
    Mat out(nq, d);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < nq; ++i) {
        Eigen::RowVectorXcd acc = Eigen::RowVectorXcd::Zero(d);
        for (std::size_t r = 0; r < coeffs.mode_triples.size(); ++r) {
            const auto& k = coeffs.mode_triples[r];
            const double phase = kTwoPi * (k[0] * query_coords(i, 0) + k[1] * query_coords(i, 1) +
                                           k[2] * query_coords(i, 2));
            acc += std::complex<double>(std::cos(phase), std::sin(phase)) *
                   coeffs.coeffs.row(static_cast<Eigen::Index>(r));
        }
        out.row(i) = acc.real();
        worst = std::max(worst, acc.imag().cwiseAbs().maxCoeff());
    }
    if (max_imag) *max_imag = worst;
    return out;
}

OperatorParams OperatorParams::init(const OperatorArch& arch, std::uint64_t seed) {
    if (arch.layers < 1) throw ValidationError("OperatorArch: layers must be >= 1");
    for (int m : arch.modes)
        if (m < 0) throw ValidationError("OperatorArch: modes must be >= 0");
    Rng rng(seed);
    auto glorot = [&rng](Eigen::Index in, Eigen::Index out) {
        const double s = std::sqrt(6.0 / static_cast<double>(in + out));
        Mat m(in, out);
        for (Eigen::Index i = 0; i < in; ++i)
            for (Eigen::Index j = 0; j < out; ++j) m(i, j) = rng.uniform(-s, s);
        return m;
    };
    const Eigen::Index h = static_cast<Eigen::Index>(half_mode_list(arch.modes).size());
    const int d = arch.width;
    const double rs = 1.0 / (d * std::sqrt(static_cast<double>(std::max<Eigen::Index>(h, 1))));

    OperatorParams p;
    p.arch = arch;
    p.lift_w = glorot(arch.c_in, d);
    p.lift_b = Mat::Zero(1, d);
    for (int t = 0; t < arch.layers; ++t) {
        Layer l;
        l.w = glorot(d, d);
        l.b = Mat::Zero(1, d);
        auto randmat = [&rng, rs](Eigen::Index r, Eigen::Index c) {
            Mat m(r, c);
            for (Eigen::Index i = 0; i < r; ++i)
                for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.uniform(-rs, rs);
            return m;
        };
        l.r0 = randmat(d, d);
        l.r_re = randmat(h * d, d);
        l.r_im = randmat(h * d, d);
        p.layers.push_back(std::move(l));
    }
    p.proj_w1 = glorot(d, arch.proj_hidden);
    p.proj_b1 = Mat::Zero(1, arch.proj_hidden);
    p.proj_w2 = glorot(arch.proj_hidden, arch.c_out);
    p.proj_b2 = Mat::Zero(1, arch.c_out);
    return p;
}

std::vector<ParamBlock> param_blocks(OperatorParams& p) {
    std::vector<ParamBlock> blocks;
    blocks.push_back({"lift_w", &p.lift_w});
    blocks.push_back({"lift_b", &p.lift_b});
    for (std::size_t t = 0; t < p.layers.size(); ++t) {
        const std::string tag = "layer" + std::to_string(t) + "_";
        blocks.push_back({tag + "w", &p.layers[t].w});
        blocks.push_back({tag + "b", &p.layers[t].b});
        blocks.push_back({tag + "r0", &p.layers[t].r0});
        blocks.push_back({tag + "r_re", &p.layers[t].r_re});
        blocks.push_back({tag + "r_im", &p.layers[t].r_im});
    }
    blocks.push_back({"proj_w1", &p.proj_w1});
    blocks.push_back({"proj_b1", &p.proj_b1});
    blocks.push_back({"proj_w2", &p.proj_w2});
    blocks.push_back({"proj_b2", &p.proj_b2});
    return blocks;
}

Mat lift(const Mat& channels, const OperatorParams& p) {
    if (channels.cols() != p.arch.c_in)
        throw ValidationError("lift: channel count " + std::to_string(channels.cols()) +
                              " != c_in " + std::to_string(p.arch.c_in));
    Mat out = channels * p.lift_w;
    out.rowwise() += p.lift_b.row(0);
    return out;
}

Mat fourier_layer(const Mat& latent, const PointMat& coords, const OperatorParams::Layer& layer,
                  const std::array<int, 3>& modes, bool identity_activation) {
    if (latent.rows() != coords.rows())
        throw ValidationError("fourier_layer: latent and coords row counts differ");
    if (layer.w.rows() != latent.cols())
        throw ValidationError("fourier_layer: latent width does not match layer weights");
    auto basis = eigen_basis(coords, modes);
    PView<EigenBackend>::Layer lv{layer.w, layer.b, layer.r0, layer.r_re, layer.r_im};
    return layer_forward<EigenBackend>(latent, basis, lv, identity_activation);
}

Mat forward(const OperatorParams& p, const OperatorInput& input) {
    if (input.channels.rows() != input.coords.rows())
        throw ValidationError("forward: channels and coords row counts differ");
    auto pv = eigen_view(p);
    auto basis = eigen_basis(input.coords, p.arch.modes);
    Mat out = run_forward<EigenBackend>(pv, input.channels, basis);
    if (input.query_coords.rows() == 0 || (input.query_coords.rows() == input.coords.rows() &&
                                           input.query_coords == input.coords))
        return out;
    // off-point queries: band-limited interpolation of the output field
    auto spectrum = geo_dft(out, input.coords, p.arch.modes);
    return geo_idft(spectrum, input.query_coords);
}

double relative_l2_loss(const Mat& pred, const Mat& label) {
    if (pred.rows() != label.rows() || pred.cols() != label.cols())
        throw ValidationError("relative_l2_loss: shape mismatch");
    const double denom = label.norm();
    if (denom == 0.0)
        throw ValidationError("relative_l2_loss: zero-norm label (degenerate sample)");
    return (pred - label).norm() / denom;
}

Mat ChannelScaler::apply(const Mat& values) const {
    Mat out = values;
    for (Eigen::Index c = 0; c < values.cols(); ++c)
        out.col(c) = (values.col(c).array() - mean[c]) / stdev[c];
    return out;
}

Mat ChannelScaler::invert(const Mat& values) const {
    Mat out = values;
    for (Eigen::Index c = 0; c < values.cols(); ++c)
        out.col(c) = values.col(c).array() * stdev[c] + mean[c];
    return out;
}

ChannelScaler fit_scaler(const std::vector<Mat>& train_blocks) {
    if (train_blocks.empty()) throw ValidationError("fit_scaler: empty training split");
    const Eigen::Index d = train_blocks.front().cols();
    Eigen::Index total = 0;
    Vec sum = Vec::Zero(d), sumsq = Vec::Zero(d);
    for (const auto& blk : train_blocks) {
        if (blk.cols() != d) throw ValidationError("fit_scaler: inconsistent channel counts");
        total += blk.rows();
        sum += blk.colwise().sum().transpose();
        sumsq += blk.array().square().colwise().sum().matrix().transpose();
    }
    ChannelScaler s;
    s.mean = sum / static_cast<double>(total);
    s.stdev.resize(d);
    for (Eigen::Index c = 0; c < d; ++c) {
        const double var =
            sumsq[c] / static_cast<double>(total) - s.mean[c] * s.mean[c];
        if (var <= 0.0) {
            s.skipped.push_back(static_cast<int>(c));
            s.mean[c] = 0.0;
            s.stdev[c] = 1.0;
        } else {
            s.stdev[c] = std::sqrt(var);
        }
    }
    return s;
}

OperatorLeaves make_leaves(const OperatorParams& p) {
    OperatorLeaves l;
    auto& mp = const_cast<OperatorParams&>(p);
    for (const auto& blk : param_blocks(mp)) l.nodes.push_back(ad::leaf(*blk.value));
    return l;
}

BasisConst make_basis_const(const PointMat& coords, const std::array<int, 3>& modes) {
    auto sb = make_basis(coords, modes);
    BasisConst b;
    b.cos_b = ad::constant(sb.cos_b);
    b.sin_b = ad::constant(sb.sin_b);
    b.cos_bt = ad::constant(sb.cos_b.transpose());
    b.sin_bt = ad::constant(sb.sin_b.transpose());
    b.n = coords.rows();
    return b;
}

ad::NodePtr build_loss_graph(const OperatorParams& p, const OperatorLeaves& leaves,
                             const Mat& channels, const BasisConst& basis, const Mat& label) {
    auto pv = view_from_vector<TapeBackend>(p.arch, leaves.nodes);
    Basis<TapeBackend> b{basis.cos_b, basis.sin_b, basis.cos_bt, basis.sin_bt, basis.n};
    auto pred = run_forward<TapeBackend>(pv, ad::constant(channels), b);

    const double denom = label.norm();
    if (denom == 0.0) throw ValidationError("build_loss_graph: zero-norm label");
    auto diff = ad::sub(pred, ad::constant(label));
    auto ss = ad::sum_all(ad::cwise_mul(diff, diff));
    return ad::scale(ad::sqrt_(ss), 1.0 / denom);
}

}  // namespace ndno::fno
