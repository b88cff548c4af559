#include <doctest.h>

#include <cmath>
#include <functional>

#include "ndno/rng.hpp"
#include "ndno/tape.hpp"

using namespace ndno;
using namespace ndno::ad;

namespace {

Mat random_mat(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
    Rng rng(seed);
    Mat m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.gaussian();
    return m;
}

// central finite differences of a scalar function over every entry of the leaves
void check_grads(const std::vector<Mat>& inits,
                 const std::function<NodePtr(const std::vector<NodePtr>&)>& f,
                 double tol = 1e-6, double h = 1e-6) {
    std::vector<NodePtr> leaves;
    for (const auto& m : inits) leaves.push_back(leaf(m));
    auto root = f(leaves);
    backward(root);

    auto eval = [&](const std::vector<Mat>& vals) {
        std::vector<NodePtr> ls;
        for (const auto& m : vals) ls.push_back(leaf(m));
        return f(ls)->scalar();
    };
    for (std::size_t li = 0; li < inits.size(); ++li) {
        const Mat grad = leaves[li]->grad.size() ? leaves[li]->grad
                                                 : Mat::Zero(inits[li].rows(), inits[li].cols());
        for (Eigen::Index i = 0; i < inits[li].rows(); ++i) {
            for (Eigen::Index j = 0; j < inits[li].cols(); ++j) {
                auto plus = inits, minus = inits;
                plus[li](i, j) += h;
                minus[li](i, j) -= h;
                const double fd = (eval(plus) - eval(minus)) / (2.0 * h);
                CHECK(std::abs(grad(i, j) - fd) <=
                      tol * std::max({std::abs(fd), std::abs(grad(i, j)), 1.0}));
            }
        }
    }
}

}  // namespace

TEST_CASE("tape: matmul/add/tanh chain gradient matches finite differences") {
    check_grads({random_mat(3, 4, 1), random_mat(4, 2, 2), random_mat(1, 2, 3)},
                [](const std::vector<NodePtr>& l) {
                    auto h = tanh_(add_rowvec(matmul(l[0], l[1]), l[2]));
                    return sum_all(cwise_mul(h, h));
                });
}

TEST_CASE("tape: softmax/gather/slice/concat gradients") {
    check_grads({random_mat(4, 6, 4), random_mat(3, 6, 5)},
                [](const std::vector<NodePtr>& l) {
                    auto s = softmax_rows(matmul(slice_cols(l[0], 0, 3),
                                                 transpose(slice_cols(l[1], 0, 3))));
                    auto o = matmul(s, slice_cols(l[1], 3, 3));
                    IdxVec idx(2);
                    idx << 2, 0;
                    auto g = gather_rows(o, idx);
                    return sum_all(cwise_mul(g, g));
                });
}

TEST_CASE("tape: gelu, relu, sqrt, div_colvec, mul_colvec gradients") {
    Mat pos = random_mat(3, 3, 6);
    pos = pos.array().abs() + 0.5;
    check_grads({pos, random_mat(3, 1, 7)}, [](const std::vector<NodePtr>& l) {
        auto a = gelu(l[0]);
        auto b = relu(sub(a, constant(Mat::Constant(3, 3, 0.1))));
        auto c = div_colvec(b, add(cwise_mul(l[1], l[1]), constant(Mat::Constant(3, 1, 1.0))));
        auto d = mul_colvec(c, l[1]);
        return sqrt_(add(sum_all(cwise_mul(d, d)), constant(Mat::Constant(1, 1, 0.3))));
    });
}

TEST_CASE("tape: rowsum/colsum/scale/sub compound gradient") {
    check_grads({random_mat(5, 3, 8)}, [](const std::vector<NodePtr>& l) {
        auto r = rowsum(l[0]);                     // 5x1
        auto c = colsum(l[0]);                     // 1x3
        auto total = add(sum_all(cwise_mul(r, r)), sum_all(cwise_mul(c, c)));
        return scale(sub(total, constant(Mat::Zero(1, 1))), 0.5);
    });
}

TEST_CASE("tape: col_indexed_gather routes gradients to selected entries") {
    IdxMat idx(2, 3);
    idx << 0, 2, 1, 3, 1, 0;
    check_grads({random_mat(4, 3, 9)}, [idx](const std::vector<NodePtr>& l) {
        auto g = col_indexed_gather(l[0], idx);
        return sum_all(cwise_mul(g, g));
    });
}

TEST_CASE("tape: det3x3 value and gradient") {
    Mat j = random_mat(3, 3, 10);
    auto n = leaf(j);
    auto d = det3x3(n);
    CHECK(d->scalar() == doctest::Approx(j.determinant()).epsilon(1e-12));
    check_grads({j}, [](const std::vector<NodePtr>& l) { return det3x3(l[0]); });
}

TEST_CASE("tape: linear map jacobian assembles to 1.1 I with det 1.331") {
    // displacement(x) = 0.1 x  =>  J = 1.1 I
    Mat x = random_mat(1, 3, 11);
    auto xs = leaf(x);
    auto mapped = add(xs, scale(xs, 0.1));
    backward(sum_all(mapped));
    CHECK(mapped->value == Mat(1.1 * x));

    Mat jt(3, 3);
    jt.setZero();
    for (int b = 0; b < 3; ++b) jt(b, b) = 1.1;  // hand-differentiated tangent rows
    auto det = det3x3(constant(jt));
    CHECK(det->scalar() == doctest::Approx(1.331).epsilon(1e-15));
}

TEST_CASE("tape: mode_mix matches complex per-mode products") {
    const Eigen::Index h = 3, d = 2;
    Mat a = random_mat(h, d, 12), b = random_mat(h, d, 13);
    Mat rre = random_mat(h * d, d, 14), rim = random_mat(h * d, d, 15);

    auto re = mode_mix(constant(a), constant(b), constant(rre), constant(rim), false);
    auto im = mode_mix(constant(a), constant(b), constant(rre), constant(rim), true);
    for (Eigen::Index k = 0; k < h; ++k) {
        Eigen::RowVectorXcd f(d);
        for (Eigen::Index c = 0; c < d; ++c) f[c] = {a(k, c), -b(k, c)};
        Eigen::MatrixXcd r(d, d);
        for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index j = 0; j < d; ++j)
                r(i, j) = {rre(k * d + i, j), rim(k * d + i, j)};
        const Eigen::RowVectorXcd g = f * r;
        for (Eigen::Index c = 0; c < d; ++c) {
            CHECK(re->value(k, c) == doctest::Approx(g[c].real()).epsilon(1e-12));
            CHECK(im->value(k, c) == doctest::Approx(g[c].imag()).epsilon(1e-12));
        }
    }

    check_grads({a, b, rre, rim}, [](const std::vector<NodePtr>& l) {
        auto re = mode_mix(l[0], l[1], l[2], l[3], false);
        auto im = mode_mix(l[0], l[1], l[2], l[3], true);
        return add(sum_all(cwise_mul(re, re)), sum_all(cwise_mul(im, im)));
    });
}

TEST_CASE("tape: softmax rows sum to one") {
    auto s = softmax_rows(constant(random_mat(5, 7, 16)));
    for (Eigen::Index i = 0; i < 5; ++i)
        CHECK(s->value.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("tape: backward requires a scalar root and prunes constants") {
    auto c = constant(random_mat(2, 2, 17));
    auto l = leaf(random_mat(2, 2, 18));
    auto out = sum_all(cwise_mul(c, l));
    backward(out);
    CHECK(l->grad == c->value);
    CHECK(c->grad.size() == 0);
    CHECK_THROWS_AS(backward(cwise_mul(c, l)), ValidationError);
}
