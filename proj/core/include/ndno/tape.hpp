#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <vector>

#include "ndno/errors.hpp"

namespace ndno::ad {

using Mat = Eigen::MatrixXd;
using IdxMat = Eigen::Matrix<Eigen::Index, Eigen::Dynamic, Eigen::Dynamic>;
using IdxVec = Eigen::Matrix<Eigen::Index, Eigen::Dynamic, 1>;

// Reverse-mode autodiff over matrix-valued nodes. Graphs are built forward by
// the op functions below and torn down when the root goes out of scope; a
// node's backward closure pushes its cotangent into the parents' grad buffers.
struct Node {
    Mat value;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(const Mat&)> backward_fn;  // empty for leaves/constants
    Mat grad;  // valid after backward() has run over this graph

    Eigen::Index rows() const { return value.rows(); }
    Eigen::Index cols() const { return value.cols(); }
    double scalar() const { return value(0, 0); }
};

using NodePtr = std::shared_ptr<Node>;

NodePtr constant(Mat v);
NodePtr leaf(Mat v);  // participates in gradients

// elementwise / linear
NodePtr add(const NodePtr& a, const NodePtr& b);
NodePtr sub(const NodePtr& a, const NodePtr& b);
NodePtr scale(const NodePtr& a, double c);
NodePtr matmul(const NodePtr& a, const NodePtr& b);
NodePtr cwise_mul(const NodePtr& a, const NodePtr& b);
NodePtr transpose(const NodePtr& a);

// broadcasts
NodePtr add_rowvec(const NodePtr& a, const NodePtr& row);   // a + 1 * row
NodePtr mul_colvec(const NodePtr& a, const NodePtr& col);   // row i scaled by col[i]
NodePtr div_colvec(const NodePtr& a, const NodePtr& col);

// nonlinearities
NodePtr tanh_(const NodePtr& a);
NodePtr gelu(const NodePtr& a);
NodePtr relu(const NodePtr& a);
NodePtr sqrt_(const NodePtr& a);
NodePtr softmax_rows(const NodePtr& a);

// reductions / reshaping
NodePtr rowsum(const NodePtr& a);   // N x 1
NodePtr colsum(const NodePtr& a);   // 1 x d
NodePtr sum_all(const NodePtr& a);  // 1 x 1
NodePtr gather_rows(const NodePtr& a, IdxVec idx);
NodePtr col_indexed_gather(const NodePtr& a, IdxMat idx);  // out(i,c) = a(idx(i,c), c)
NodePtr concat_cols(const NodePtr& a, const NodePtr& b);
NodePtr concat_rows(const NodePtr& a, const NodePtr& b);
NodePtr slice_cols(const NodePtr& a, Eigen::Index j0, Eigen::Index n);

// 3x3 determinant of a single node
NodePtr det3x3(const NodePtr& a);

// Per-mode complex channel mixing used by the spectral layer. a, b are H x d
// (cosine/sine coefficients of a real signal, F = a - i b); r_re, r_im are H
// stacked d x d blocks. Returns the real (im = false) or imaginary part of
// F_k R_k per mode row.
NodePtr mode_mix(const NodePtr& a, const NodePtr& b, const NodePtr& r_re,
                 const NodePtr& r_im, bool im);

inline NodePtr operator+(const NodePtr& a, const NodePtr& b) { return add(a, b); }
inline NodePtr operator-(const NodePtr& a, const NodePtr& b) { return sub(a, b); }
inline NodePtr operator*(const NodePtr& a, const NodePtr& b) { return matmul(a, b); }
inline NodePtr operator*(double c, const NodePtr& a) { return scale(a, c); }

// Reverse pass from a scalar (1x1) root. Clears grads of the reachable
// subgraph first; afterwards every reachable node with requires_grad holds
// d(root)/d(node) in grad.
void backward(const NodePtr& root);

}  // namespace ndno::ad
