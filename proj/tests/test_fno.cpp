#include <doctest.h>

#include <cmath>
#include <complex>

#include "ndno/fno.hpp"
#include "ndno/rng.hpp"

using namespace ndno;
using namespace ndno::fno;

namespace {

PointMat regular_grid(int per_axis) {
    PointMat p(per_axis * per_axis * per_axis, 3);
    Eigen::Index r = 0;
    for (int i = 0; i < per_axis; ++i)
        for (int j = 0; j < per_axis; ++j)
            for (int k = 0; k < per_axis; ++k)
                p.row(r++) = Eigen::RowVector3d(-0.5 + double(i) / per_axis,
                                                -0.5 + double(j) / per_axis,
                                                -0.5 + double(k) / per_axis);
    return p;
}

PointMat random_coords(Eigen::Index n, std::uint64_t seed) {
    Rng rng(seed);
    PointMat p(n, 3);
    for (Eigen::Index i = 0; i < n; ++i)
        for (int d = 0; d < 3; ++d) p(i, d) = rng.uniform(-0.5, 0.5);
    return p;
}

Mat random_mat(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
    Rng rng(seed);
    Mat m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.gaussian();
    return m;
}

// independently written direct-summation DFT (std::polar accumulation)
Eigen::MatrixXcd oracle_dft(const Mat& values, const PointMat& coords,
                            const std::vector<Eigen::Vector3i>& modes) {
    Eigen::MatrixXcd out(static_cast<Eigen::Index>(modes.size()), values.cols());
    out.setZero();
    for (std::size_t m = 0; m < modes.size(); ++m) {
        for (Eigen::Index i = 0; i < coords.rows(); ++i) {
            const double phase = -2.0 * M_PI *
                                 (modes[m][0] * coords(i, 0) + modes[m][1] * coords(i, 1) +
                                  modes[m][2] * coords(i, 2));
            const auto w = std::polar(1.0, phase);
            for (Eigen::Index c = 0; c < values.cols(); ++c)
                out(static_cast<Eigen::Index>(m), c) += w * values(i, c);
        }
    }
    return out / static_cast<double>(coords.rows());
}

}  // namespace

TEST_CASE("mode lists: symmetric full set, conjugate-free half") {
    const std::array<int, 3> modes = {2, 1, 1};
    auto full = mode_list(modes);
    auto half = half_mode_list(modes);
    CHECK(full.size() == 5u * 3u * 3u);
    CHECK(half.size() == (full.size() - 1) / 2);
    for (const auto& k : half) {
        bool found_negation = false;
        for (const auto& k2 : half) found_negation |= (k2 == Eigen::Vector3i(-k));
        CHECK_FALSE(found_negation);
    }
}

TEST_CASE("geo_dft: constant field excites only the DC mode on a regular grid") {
    const auto grid = regular_grid(8);
    Mat v = Mat::Constant(grid.rows(), 1, 3.25);
    auto sc = geo_dft(v, grid, {3, 3, 3});
    for (std::size_t m = 0; m < sc.mode_triples.size(); ++m) {
        const auto& k = sc.mode_triples[m];
        const auto c = sc.coeffs(static_cast<Eigen::Index>(m), 0);
        if (k == Eigen::Vector3i::Zero()) {
            CHECK(c.real() == doctest::Approx(3.25).epsilon(1e-12));
            CHECK(std::abs(c.imag()) < 1e-12);
        } else {
            CHECK(std::abs(c) < 1e-12);
        }
    }
}

TEST_CASE("geo_dft: single point at the origin spreads the value to every mode") {
    PointMat p(1, 3);
    p.setZero();
    Mat v(1, 2);
    v << 1.5, -2.0;
    auto sc = geo_dft(v, p, {1, 1, 1});
    for (Eigen::Index m = 0; m < sc.coeffs.rows(); ++m) {
        CHECK(sc.coeffs(m, 0) == std::complex<double>(1.5, 0.0));
        CHECK(sc.coeffs(m, 1) == std::complex<double>(-2.0, 0.0));
    }
}

TEST_CASE("geo_dft matches the direct-summation oracle on an 8x8x8 grid") {
    const auto grid = regular_grid(8);
    const Mat v = random_mat(grid.rows(), 3, 5);
    auto sc = geo_dft(v, grid, {2, 2, 2});
    auto want = oracle_dft(v, grid, sc.mode_triples);
    const double scale = want.cwiseAbs().maxCoeff();
    CHECK((sc.coeffs - want).cwiseAbs().maxCoeff() <= 1e-10 * scale);
}

TEST_CASE("geo_dft matches the oracle on scattered points too") {
    const auto coords = random_coords(100, 7);
    const Mat v = random_mat(100, 2, 9);
    auto sc = geo_dft(v, coords, {2, 1, 2});
    auto want = oracle_dft(v, coords, sc.mode_triples);
    CHECK((sc.coeffs - want).cwiseAbs().maxCoeff() <= 1e-10 * want.cwiseAbs().maxCoeff());
}

TEST_CASE("band-limited grid round trip: idft(dft(f)) == f") {
    const auto grid = regular_grid(8);
    const std::array<int, 3> modes = {2, 2, 2};

    // synthesize a real band-limited signal from the retained modes
    Rng rng(11);
    Mat f = Mat::Zero(grid.rows(), 1);
    for (const auto& k : half_mode_list(modes)) {
        const double cr = rng.gaussian(), ci = rng.gaussian();
        for (Eigen::Index i = 0; i < grid.rows(); ++i) {
            const double phase =
                2.0 * M_PI * (k[0] * grid(i, 0) + k[1] * grid(i, 1) + k[2] * grid(i, 2));
            f(i, 0) += 2.0 * (cr * std::cos(phase) - ci * std::sin(phase));
        }
    }
    f.array() += 0.7;  // DC

    auto sc = geo_dft(f, grid, modes);
    double resid = 0.0;
    Mat back = geo_idft(sc, grid, &resid);
    CHECK((back - f).cwiseAbs().maxCoeff() <= 1e-10 * f.cwiseAbs().maxCoeff());
    CHECK(resid < 1e-9 * f.cwiseAbs().maxCoeff());
}

TEST_CASE("geo_idft: zero coefficients give zero values; off-grid queries allowed") {
    SpectralCoeffs sc;
    sc.modes = {1, 1, 1};
    sc.mode_triples = mode_list(sc.modes);
    sc.coeffs = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(sc.mode_triples.size()), 2);
    auto q = random_coords(13, 13);
    Mat out = geo_idft(sc, q);
    CHECK(out.rows() == 13);
    CHECK(out.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fourier_layer: zero spectral weights reduce to a pointwise affine map") {
    OperatorArch arch;
    arch.modes = {1, 1, 1};
    arch.width = 6;
    arch.layers = 1;
    auto p = OperatorParams::init(arch, 3);
    auto& layer = p.layers[0];
    layer.r0.setZero();
    layer.r_re.setZero();
    layer.r_im.setZero();

    const auto coords = random_coords(20, 15);
    const Mat z = random_mat(20, 6, 17);
    Mat got = fourier_layer(z, coords, layer, arch.modes, true);
    Mat want = z * layer.w;
    want.rowwise() += layer.b.row(0);
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);

    // identity configuration
    layer.w = Mat::Identity(6, 6);
    layer.b.setZero();
    Mat same = fourier_layer(z, coords, layer, arch.modes, true);
    CHECK((same - z).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fourier_layer: spectral path is linear in the latent") {
    OperatorArch arch;
    arch.modes = {2, 2, 1};
    arch.width = 4;
    arch.layers = 1;
    auto p = OperatorParams::init(arch, 5);
    auto layer = p.layers[0];
    layer.w.setZero();
    layer.b.setZero();

    const auto coords = random_coords(24, 19);
    const Mat z1 = random_mat(24, 4, 21), z2 = random_mat(24, 4, 23);
    Mat k1 = fourier_layer(z1, coords, layer, arch.modes, true);
    Mat k2 = fourier_layer(z2, coords, layer, arch.modes, true);
    Mat k12 = fourier_layer(2.0 * z1 - 0.5 * z2, coords, layer, arch.modes, true);
    const double scale = k12.cwiseAbs().maxCoeff();
    CHECK((k12 - (2.0 * k1 - 0.5 * k2)).cwiseAbs().maxCoeff() <= 1e-10 * scale);
}

TEST_CASE("fourier_layer agrees with an explicit complex spectral reference") {
    OperatorArch arch;
    arch.modes = {1, 1, 1};
    arch.width = 3;
    arch.layers = 1;
    auto p = OperatorParams::init(arch, 7);
    auto layer = p.layers[0];
    layer.w.setZero();
    layer.b.setZero();

    const auto coords = random_coords(15, 25);
    const Mat z = random_mat(15, 3, 27);

    // reference: full-set complex multiply with conjugate-tied weights
    auto sc = geo_dft(z, coords, arch.modes);
    const auto half = half_mode_list(arch.modes);
    Eigen::MatrixXcd mixed(sc.coeffs.rows(), sc.coeffs.cols());
    const int d = arch.width;
    for (std::size_t m = 0; m < sc.mode_triples.size(); ++m) {
        const auto& k = sc.mode_triples[m];
        Eigen::MatrixXcd r(d, d);
        if (k == Eigen::Vector3i::Zero()) {
            r = layer.r0.cast<std::complex<double>>();
        } else {
            // find k or -k in the half list
            bool conj = false;
            std::size_t h = 0;
            for (; h < half.size(); ++h) {
                if (half[h] == k) break;
                if (half[h] == Eigen::Vector3i(-k)) {
                    conj = true;
                    break;
                }
            }
            REQUIRE(h < half.size());
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) {
                    std::complex<double> w(layer.r_re(static_cast<Eigen::Index>(h) * d + i, j),
                                           layer.r_im(static_cast<Eigen::Index>(h) * d + i, j));
                    r(i, j) = conj ? std::conj(w) : w;
                }
        }
        mixed.row(static_cast<Eigen::Index>(m)) = sc.coeffs.row(static_cast<Eigen::Index>(m)) * r;
    }
    SpectralCoeffs mixed_sc;
    mixed_sc.modes = arch.modes;
    mixed_sc.mode_triples = sc.mode_triples;
    mixed_sc.coeffs = mixed;
    double resid = 0.0;
    Mat want = geo_idft(mixed_sc, coords, &resid);
    CHECK(resid < 1e-9);

    Mat got = fourier_layer(z, coords, layer, arch.modes, true);
    CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-10 * want.cwiseAbs().maxCoeff());
}

TEST_CASE("lift: zero inputs with zero bias give zero latents; rows permute") {
    OperatorArch arch;
    arch.width = 5;
    auto p = OperatorParams::init(arch, 9);
    Mat zero = Mat::Zero(7, arch.c_in);
    CHECK(lift(zero, p).cwiseAbs().maxCoeff() == 0.0);
    CHECK(lift(zero, p).cols() == 5);

    Mat x = random_mat(7, arch.c_in, 29);
    Mat lx = lift(x, p);
    Mat xp = x;
    xp.row(0).swap(xp.row(6));
    Mat lxp = lift(xp, p);
    CHECK((lx.row(0) - lxp.row(6)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK_THROWS_AS(lift(random_mat(7, 5, 31), p), ValidationError);
}

TEST_CASE("forward: query semantics, output arity, permutation equivariance") {
    OperatorArch arch;
    arch.modes = {2, 2, 1};
    arch.width = 8;
    arch.layers = 2;
    arch.c_out = 1;
    auto p = OperatorParams::init(arch, 11);

    OperatorInput in;
    in.coords = random_coords(30, 33);
    in.channels = random_mat(30, 8, 35);
    Mat out = forward(p, in);
    CHECK(out.rows() == 30);
    CHECK(out.cols() == 1);
    CHECK(forward(p, in) == out);  // deterministic

    in.query_coords = random_coords(12, 37);
    CHECK(forward(p, in).rows() == 12);

    arch.c_out = 3;
    auto p3 = OperatorParams::init(arch, 13);
    in.query_coords.resize(0, 3);
    CHECK(forward(p3, in).cols() == 3);

    // permuting the points permutes the outputs
    OperatorInput perm;
    perm.coords.resize(30, 3);
    perm.channels.resize(30, 8);
    for (Eigen::Index i = 0; i < 30; ++i) {
        perm.coords.row((i + 11) % 30) = in.coords.row(i);
        perm.channels.row((i + 11) % 30) = in.channels.row(i);
    }
    Mat outp = forward(p, perm);
    for (Eigen::Index i = 0; i < 30; ++i)
        CHECK(std::abs(out(i, 0) - outp((i + 11) % 30, 0)) <=
              1e-10 * std::max(1.0, std::abs(out(i, 0))));
}

TEST_CASE("relative_l2_loss: fixed points of the definition") {
    Mat label = random_mat(9, 2, 39);
    CHECK(relative_l2_loss(label, label) == 0.0);
    CHECK(relative_l2_loss(2.0 * label, label) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(relative_l2_loss(Mat::Zero(9, 2), label) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(relative_l2_loss(label, Mat::Zero(9, 2)), ValidationError);
    CHECK_THROWS_AS(relative_l2_loss(label, random_mat(4, 2, 41)), ValidationError);
}

TEST_CASE("standardize: train statistics, inverse round trip, zero-variance skip") {
    std::vector<Mat> blocks = {random_mat(40, 3, 43), random_mat(25, 3, 45)};
    auto scaler = fit_scaler(blocks);
    Mat all(65, 3);
    all << blocks[0], blocks[1];
    Mat std_all = scaler.apply(all);
    for (int c = 0; c < 3; ++c) {
        CHECK(std::abs(std_all.col(c).mean()) < 1e-9);
        const double sd = std::sqrt(std_all.col(c).squaredNorm() / 65.0 -
                                    std_all.col(c).mean() * std_all.col(c).mean());
        CHECK(sd == doctest::Approx(1.0).epsilon(1e-9));
    }
    Mat back = scaler.invert(std_all);
    CHECK((back - all).cwiseAbs().maxCoeff() < 1e-12 * all.cwiseAbs().maxCoeff());

    // a fresh scaler fitted on the test block must differ (no leakage check)
    Mat test_block = 5.0 * random_mat(30, 3, 47);
    auto test_scaler = fit_scaler({test_block});
    CHECK(test_scaler.mean != scaler.mean);

    Mat flat = Mat::Ones(10, 2);
    flat.col(1) = random_mat(10, 1, 49);
    auto s2 = fit_scaler({flat});
    CHECK(s2.skipped == std::vector<int>{0});
    CHECK(s2.apply(flat).col(0) == flat.col(0));
}

TEST_CASE("operator loss gradient matches finite differences (T=1, modes (2,2,2))") {
    OperatorArch arch;
    arch.modes = {2, 2, 2};
    arch.width = 6;
    arch.layers = 1;
    arch.c_out = 1;
    arch.proj_hidden = 8;
    auto p = OperatorParams::init(arch, 17);

    const auto coords = random_coords(48, 51);
    const Mat channels = random_mat(48, 8, 53);
    const Mat label = random_mat(48, 1, 55);

    auto leaves = make_leaves(p);
    auto basis = make_basis_const(coords, arch.modes);
    auto loss = build_loss_graph(p, leaves, channels, basis, label);
    ad::backward(loss);

    auto eval_loss = [&](const OperatorParams& pp) {
        auto ls = make_leaves(pp);
        auto bs = make_basis_const(coords, arch.modes);
        return build_loss_graph(pp, ls, channels, bs, label)->scalar();
    };

    auto blocks = param_blocks(p);
    Rng rng(777);
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
        const Mat grad = leaves.nodes[bi]->grad.size()
                             ? leaves.nodes[bi]->grad
                             : Mat::Zero(blocks[bi].value->rows(), blocks[bi].value->cols());
        for (int probe = 0; probe < 2; ++probe) {
            const Eigen::Index i = rng.uniform_int(0, blocks[bi].value->rows() - 1);
            const Eigen::Index j = rng.uniform_int(0, blocks[bi].value->cols() - 1);
            const double h = 1e-6;
            OperatorParams plus = p, minus = p;
            (*param_blocks(plus)[bi].value)(i, j) += h;
            (*param_blocks(minus)[bi].value)(i, j) -= h;
            const double fd = (eval_loss(plus) - eval_loss(minus)) / (2.0 * h);
            const double scale = std::max({std::abs(fd), std::abs(grad(i, j)), 1e-6});
            CHECK(std::abs(grad(i, j) - fd) / scale < 1e-4);
        }
    }
}
