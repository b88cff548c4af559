#pragma once

// Internal: the network forward passes are written once against one of these
// backends — plain Eigen matrices for evaluation, tape nodes for training.

#include <cmath>

#include "ndno/tape.hpp"

namespace ndno::detail {

using ad::IdxMat;
using ad::IdxVec;
using Mat = Eigen::MatrixXd;

struct EigenBackend {
    using M = Mat;
    static M constant(Mat v) { return v; }
    static const Mat& value(const M& m) { return m; }
    static M matmul(const M& a, const M& b) { return a * b; }
    static M add(const M& a, const M& b) { return a + b; }
    static M sub(const M& a, const M& b) { return a - b; }
    static M scale(const M& a, double c) { return c * a; }
    static M cwise_mul(const M& a, const M& b) { return a.cwiseProduct(b); }
    static M add_rowvec(const M& a, const M& r) {
        Mat v = a;
        v.rowwise() += r.row(0);
        return v;
    }
    static M tanh(const M& a) { return a.array().tanh(); }
    static M gelu(const M& a) {
        return a.unaryExpr([](double x) { return 0.5 * x * (1.0 + std::erf(x / M_SQRT2)); });
    }
    static M softmax_rows(const M& a) {
        Mat v(a.rows(), a.cols());
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            const double mx = a.row(i).maxCoeff();
            v.row(i) = (a.row(i).array() - mx).exp();
            v.row(i) /= v.row(i).sum();
        }
        return v;
    }
    static M gather_rows(const M& a, const IdxVec& idx) {
        Mat v(idx.size(), a.cols());
        for (Eigen::Index r = 0; r < idx.size(); ++r) v.row(r) = a.row(idx[r]);
        return v;
    }
    static M col_indexed_gather(const M& a, const IdxMat& idx) {
        Mat v(idx.rows(), idx.cols());
        for (Eigen::Index i = 0; i < idx.rows(); ++i)
            for (Eigen::Index c = 0; c < idx.cols(); ++c) v(i, c) = a(idx(i, c), c);
        return v;
    }
    static M concat_cols(const M& a, const M& b) {
        Mat v(a.rows(), a.cols() + b.cols());
        v << a, b;
        return v;
    }
    static M slice_cols(const M& a, Eigen::Index j0, Eigen::Index n) { return a.middleCols(j0, n); }
    static M rowsum(const M& a) { return a.rowwise().sum(); }
    static M mul_colvec(const M& a, const M& c) {
        return (a.array().colwise() * c.col(0).array()).matrix();
    }
    static M transpose(const M& a) { return a.transpose(); }
    static M mode_mix(const M& a, const M& b, const M& r_re, const M& r_im, bool im) {
        const Eigen::Index h = a.rows(), d = a.cols();
        Mat v(h, d);
        for (Eigen::Index k = 0; k < h; ++k) {
            const auto rre = r_re.middleRows(k * d, d);
            const auto rim = r_im.middleRows(k * d, d);
            if (!im)
                v.row(k) = a.row(k) * rre + b.row(k) * rim;
            else
                v.row(k) = a.row(k) * rim - b.row(k) * rre;
        }
        return v;
    }
};

struct TapeBackend {
    using M = ad::NodePtr;
    static M constant(Mat v) { return ad::constant(std::move(v)); }
    static const Mat& value(const M& m) { return m->value; }
    static M matmul(const M& a, const M& b) { return ad::matmul(a, b); }
    static M add(const M& a, const M& b) { return ad::add(a, b); }
    static M sub(const M& a, const M& b) { return ad::sub(a, b); }
    static M scale(const M& a, double c) { return ad::scale(a, c); }
    static M cwise_mul(const M& a, const M& b) { return ad::cwise_mul(a, b); }
    static M add_rowvec(const M& a, const M& r) { return ad::add_rowvec(a, r); }
    static M tanh(const M& a) { return ad::tanh_(a); }
    static M gelu(const M& a) { return ad::gelu(a); }
    static M softmax_rows(const M& a) { return ad::softmax_rows(a); }
    static M gather_rows(const M& a, const IdxVec& idx) { return ad::gather_rows(a, idx); }
    static M col_indexed_gather(const M& a, const IdxMat& idx) {
        return ad::col_indexed_gather(a, idx);
    }
    static M concat_cols(const M& a, const M& b) { return ad::concat_cols(a, b); }
    static M slice_cols(const M& a, Eigen::Index j0, Eigen::Index n) {
        return ad::slice_cols(a, j0, n);
    }
    static M rowsum(const M& a) { return ad::rowsum(a); }
    static M mul_colvec(const M& a, const M& c) { return ad::mul_colvec(a, c); }
    static M transpose(const M& a) { return ad::transpose(a); }
    static M mode_mix(const M& a, const M& b, const M& r_re, const M& r_im, bool im) {
        return ad::mode_mix(a, b, r_re, r_im, im);
    }
};

template <class B>
typename B::M one_minus_sq(const typename B::M& a) {
    const Mat& v = B::value(a);
    return B::sub(B::constant(Mat::Ones(v.rows(), v.cols())), B::cwise_mul(a, a));
}

}  // namespace ndno::detail
