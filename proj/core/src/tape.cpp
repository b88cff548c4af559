#include "ndno/tape.hpp"

#include <cmath>
#include <unordered_set>

namespace ndno::ad {

namespace {

NodePtr make(Mat v, std::vector<NodePtr> parents, std::function<void(const Mat&)> bw) {
    auto n = std::make_shared<Node>();
    n->value = std::move(v);
    n->parents = std::move(parents);
    for (const auto& p : n->parents) n->requires_grad |= p->requires_grad;
    if (n->requires_grad) n->backward_fn = std::move(bw);
    return n;
}

void acc(const NodePtr& p, const Mat& g) {
    if (!p->requires_grad) return;
    if (p->grad.size() == 0)
        p->grad = g;
    else
        p->grad += g;
}

void check_same_shape(const NodePtr& a, const NodePtr& b, const char* op) {
    if (a->rows() != b->rows() || a->cols() != b->cols())
        throw ValidationError(std::string(op) + ": shape mismatch (" + std::to_string(a->rows()) +
                              "x" + std::to_string(a->cols()) + " vs " + std::to_string(b->rows()) +
                              "x" + std::to_string(b->cols()) + ")");
}

}  // namespace

NodePtr constant(Mat v) {
    auto n = std::make_shared<Node>();
    n->value = std::move(v);
    return n;
}

NodePtr leaf(Mat v) {
    auto n = std::make_shared<Node>();
    n->value = std::move(v);
    n->requires_grad = true;
    return n;
}

NodePtr add(const NodePtr& a, const NodePtr& b) {
    check_same_shape(a, b, "add");
    return make(a->value + b->value, {a, b}, [a, b](const Mat& g) {
        acc(a, g);
        acc(b, g);
    });
}

NodePtr sub(const NodePtr& a, const NodePtr& b) {
    check_same_shape(a, b, "sub");
    return make(a->value - b->value, {a, b}, [a, b](const Mat& g) {
        acc(a, g);
        acc(b, (-g).eval());
    });
}

NodePtr scale(const NodePtr& a, double c) {
    return make(c * a->value, {a}, [a, c](const Mat& g) { acc(a, (c * g).eval()); });
}

NodePtr matmul(const NodePtr& a, const NodePtr& b) {
    if (a->cols() != b->rows())
        throw ValidationError("matmul: inner dimensions disagree (" + std::to_string(a->cols()) +
                              " vs " + std::to_string(b->rows()) + ")");
    return make(a->value * b->value, {a, b}, [a, b](const Mat& g) {
        if (a->requires_grad) acc(a, g * b->value.transpose());
        if (b->requires_grad) acc(b, a->value.transpose() * g);
    });
}

NodePtr cwise_mul(const NodePtr& a, const NodePtr& b) {
    check_same_shape(a, b, "cwise_mul");
    return make(a->value.cwiseProduct(b->value), {a, b}, [a, b](const Mat& g) {
        if (a->requires_grad) acc(a, g.cwiseProduct(b->value));
        if (b->requires_grad) acc(b, g.cwiseProduct(a->value));
    });
}

NodePtr transpose(const NodePtr& a) {
    return make(a->value.transpose(), {a}, [a](const Mat& g) { acc(a, g.transpose()); });
}

NodePtr add_rowvec(const NodePtr& a, const NodePtr& row) {
    if (row->rows() != 1 || row->cols() != a->cols())
        throw ValidationError("add_rowvec: row must be 1 x cols(a)");
    Mat v = a->value;
    v.rowwise() += row->value.row(0);
    return make(std::move(v), {a, row}, [a, row](const Mat& g) {
        acc(a, g);
        if (row->requires_grad) acc(row, g.colwise().sum());
    });
}

NodePtr mul_colvec(const NodePtr& a, const NodePtr& col) {
    if (col->cols() != 1 || col->rows() != a->rows())
        throw ValidationError("mul_colvec: col must be rows(a) x 1");
    return make(a->value.array().colwise() * col->value.col(0).array(), {a, col},
                [a, col](const Mat& g) {
                    if (a->requires_grad)
                        acc(a, (g.array().colwise() * col->value.col(0).array()).matrix());
                    if (col->requires_grad)
                        acc(col, g.cwiseProduct(a->value).rowwise().sum());
                });
}

NodePtr div_colvec(const NodePtr& a, const NodePtr& col) {
    if (col->cols() != 1 || col->rows() != a->rows())
        throw ValidationError("div_colvec: col must be rows(a) x 1");
    Mat v = (a->value.array().colwise() / col->value.col(0).array()).matrix();
    return make(std::move(v), {a, col}, [a, col](const Mat& g) {
        const auto c = col->value.col(0).array();
        if (a->requires_grad) acc(a, (g.array().colwise() / c).matrix());
        if (col->requires_grad) {
            Mat num = g.cwiseProduct(a->value).rowwise().sum();
            acc(col, (-num.array().col(0) / (c * c)).matrix());
        }
    });
}

NodePtr tanh_(const NodePtr& a) {
    Mat v = a->value.array().tanh();
    auto out = make(std::move(v), {a}, nullptr);
    if (out->requires_grad) {
        // capture the output value to reuse 1 - tanh^2
        std::weak_ptr<Node> self = out;
        out->backward_fn = [a, self](const Mat& g) {
            auto s = self.lock();
            acc(a, (g.array() * (1.0 - s->value.array().square())).matrix());
        };
    }
    return out;
}

NodePtr gelu(const NodePtr& a) {
    Mat v = a->value.unaryExpr([](double x) { return 0.5 * x * (1.0 + std::erf(x / M_SQRT2)); });
    return make(std::move(v), {a}, [a](const Mat& g) {
        Mat d = a->value.unaryExpr([](double x) {
            const double cdf = 0.5 * (1.0 + std::erf(x / M_SQRT2));
            const double phi = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
            return cdf + x * phi;
        });
        acc(a, g.cwiseProduct(d));
    });
}

NodePtr relu(const NodePtr& a) {
    Mat v = a->value.cwiseMax(0.0);
    return make(std::move(v), {a}, [a](const Mat& g) {
        acc(a, (g.array() * (a->value.array() > 0.0).cast<double>()).matrix());
    });
}

NodePtr sqrt_(const NodePtr& a) {
    Mat v = a->value.array().sqrt();
    auto out = make(std::move(v), {a}, nullptr);
    if (out->requires_grad) {
        std::weak_ptr<Node> self = out;
        out->backward_fn = [a, self](const Mat& g) {
            auto s = self.lock();
            acc(a, (0.5 * g.array() / s->value.array()).matrix());
        };
    }
    return out;
}

NodePtr softmax_rows(const NodePtr& a) {
    Mat v(a->rows(), a->cols());
    for (Eigen::Index i = 0; i < a->rows(); ++i) {
        const double mx = a->value.row(i).maxCoeff();
        v.row(i) = (a->value.row(i).array() - mx).exp();
        v.row(i) /= v.row(i).sum();
    }
    auto out = make(std::move(v), {a}, nullptr);
    if (out->requires_grad) {
        std::weak_ptr<Node> self = out;
        out->backward_fn = [a, self](const Mat& g) {
            auto s = self.lock();
            // ds = s .* (g - rowsum(g .* s))
            Mat gs = g.cwiseProduct(s->value);
            Eigen::VectorXd rs = gs.rowwise().sum();
            acc(a, (gs.array() - s->value.array().colwise() * rs.array()).matrix());
        };
    }
    return out;
}

NodePtr rowsum(const NodePtr& a) {
    Mat v = a->value.rowwise().sum();
    const Eigen::Index cols = a->cols();
    return make(std::move(v), {a}, [a, cols](const Mat& g) {
        acc(a, g * Mat::Ones(1, cols));
    });
}

NodePtr colsum(const NodePtr& a) {
    Mat v = a->value.colwise().sum();
    const Eigen::Index rows = a->rows();
    return make(std::move(v), {a}, [a, rows](const Mat& g) {
        acc(a, Mat::Ones(rows, 1) * g);
    });
}

NodePtr sum_all(const NodePtr& a) {
    Mat v(1, 1);
    v(0, 0) = a->value.sum();
    return make(std::move(v), {a}, [a](const Mat& g) {
        acc(a, Mat::Constant(a->rows(), a->cols(), g(0, 0)));
    });
}

NodePtr gather_rows(const NodePtr& a, IdxVec idx) {
    Mat v(idx.size(), a->cols());
    for (Eigen::Index r = 0; r < idx.size(); ++r) v.row(r) = a->value.row(idx[r]);
    const Eigen::Index rows = a->rows();
    return make(std::move(v), {a}, [a, idx = std::move(idx), rows](const Mat& g) {
        Mat out = Mat::Zero(rows, g.cols());
        for (Eigen::Index r = 0; r < idx.size(); ++r) out.row(idx[r]) += g.row(r);
        acc(a, out);
    });
}

NodePtr col_indexed_gather(const NodePtr& a, IdxMat idx) {
    if (idx.cols() != a->cols())
        throw ValidationError("col_indexed_gather: index matrix must have cols(a) columns");
    Mat v(idx.rows(), idx.cols());
    for (Eigen::Index i = 0; i < idx.rows(); ++i)
        for (Eigen::Index c = 0; c < idx.cols(); ++c) v(i, c) = a->value(idx(i, c), c);
    const Eigen::Index rows = a->rows();
    return make(std::move(v), {a}, [a, idx = std::move(idx), rows](const Mat& g) {
        Mat out = Mat::Zero(rows, g.cols());
        for (Eigen::Index i = 0; i < idx.rows(); ++i)
            for (Eigen::Index c = 0; c < idx.cols(); ++c) out(idx(i, c), c) += g(i, c);
        acc(a, out);
    });
}

NodePtr concat_cols(const NodePtr& a, const NodePtr& b) {
    if (a->rows() != b->rows()) throw ValidationError("concat_cols: row counts differ");
    Mat v(a->rows(), a->cols() + b->cols());
    v << a->value, b->value;
    const Eigen::Index ca = a->cols();
    return make(std::move(v), {a, b}, [a, b, ca](const Mat& g) {
        acc(a, g.leftCols(ca));
        acc(b, g.rightCols(g.cols() - ca));
    });
}

NodePtr concat_rows(const NodePtr& a, const NodePtr& b) {
    if (a->cols() != b->cols()) throw ValidationError("concat_rows: column counts differ");
    Mat v(a->rows() + b->rows(), a->cols());
    v << a->value, b->value;
    const Eigen::Index ra = a->rows();
    return make(std::move(v), {a, b}, [a, b, ra](const Mat& g) {
        acc(a, g.topRows(ra));
        acc(b, g.bottomRows(g.rows() - ra));
    });
}

NodePtr slice_cols(const NodePtr& a, Eigen::Index j0, Eigen::Index n) {
    if (j0 < 0 || j0 + n > a->cols()) throw ValidationError("slice_cols: out of range");
    Mat v = a->value.middleCols(j0, n);
    return make(std::move(v), {a}, [a, j0, n](const Mat& g) {
        Mat out = Mat::Zero(a->rows(), a->cols());
        out.middleCols(j0, n) = g;
        acc(a, out);
    });
}

NodePtr det3x3(const NodePtr& a) {
    if (a->rows() != 3 || a->cols() != 3) throw ValidationError("det3x3: node must be 3x3");
    Mat v(1, 1);
    v(0, 0) = a->value.determinant();
    return make(std::move(v), {a}, [a](const Mat& g) {
        const Mat& j = a->value;
        Mat adj_t(3, 3);  // d det / d J_ij = cofactor_ij
        adj_t(0, 0) = j(1, 1) * j(2, 2) - j(1, 2) * j(2, 1);
        adj_t(0, 1) = -(j(1, 0) * j(2, 2) - j(1, 2) * j(2, 0));
        adj_t(0, 2) = j(1, 0) * j(2, 1) - j(1, 1) * j(2, 0);
        adj_t(1, 0) = -(j(0, 1) * j(2, 2) - j(0, 2) * j(2, 1));
        adj_t(1, 1) = j(0, 0) * j(2, 2) - j(0, 2) * j(2, 0);
        adj_t(1, 2) = -(j(0, 0) * j(2, 1) - j(0, 1) * j(2, 0));
        adj_t(2, 0) = j(0, 1) * j(1, 2) - j(0, 2) * j(1, 1);
        adj_t(2, 1) = -(j(0, 0) * j(1, 2) - j(0, 2) * j(1, 0));
        adj_t(2, 2) = j(0, 0) * j(1, 1) - j(0, 1) * j(1, 0);
        acc(a, (g(0, 0) * adj_t).eval());
    });
}

NodePtr mode_mix(const NodePtr& a, const NodePtr& b, const NodePtr& r_re, const NodePtr& r_im,
                 bool im) {
    check_same_shape(a, b, "mode_mix");
    const Eigen::Index h = a->rows(), d = a->cols();
    if (r_re->rows() != h * d || r_re->cols() != d || r_im->rows() != h * d || r_im->cols() != d)
        throw ValidationError("mode_mix: spectral weights must be (H*d) x d");

    Mat v(h, d);
    for (Eigen::Index k = 0; k < h; ++k) {
        const auto rre = r_re->value.middleRows(k * d, d);
        const auto rim = r_im->value.middleRows(k * d, d);
        if (!im)
            v.row(k) = a->value.row(k) * rre + b->value.row(k) * rim;
        else
            v.row(k) = a->value.row(k) * rim - b->value.row(k) * rre;
    }
    return make(std::move(v), {a, b, r_re, r_im}, [a, b, r_re, r_im, im, h, d](const Mat& g) {
        Mat ga = Mat::Zero(h, d), gb = Mat::Zero(h, d);
        Mat gre = Mat::Zero(h * d, d), gim = Mat::Zero(h * d, d);
        for (Eigen::Index k = 0; k < h; ++k) {
            const auto rre = r_re->value.middleRows(k * d, d);
            const auto rim = r_im->value.middleRows(k * d, d);
            const auto gr = g.row(k);
            if (!im) {
                ga.row(k) = gr * rre.transpose();
                gb.row(k) = gr * rim.transpose();
                gre.middleRows(k * d, d) = a->value.row(k).transpose() * gr;
                gim.middleRows(k * d, d) = b->value.row(k).transpose() * gr;
            } else {
                ga.row(k) = gr * rim.transpose();
                gb.row(k) = -(gr * rre.transpose());
                gre.middleRows(k * d, d) = -(b->value.row(k).transpose() * gr);
                gim.middleRows(k * d, d) = a->value.row(k).transpose() * gr;
            }
        }
        acc(a, ga);
        acc(b, gb);
        acc(r_re, gre);
        acc(r_im, gim);
    });
}

void backward(const NodePtr& root) {
    if (root->rows() != 1 || root->cols() != 1)
        throw ValidationError("backward: root must be a 1x1 scalar node");
    if (!root->requires_grad) return;

    // iterative DFS post-order; creation order is not tracked, so topological
    // order is recovered here
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root.get(), 0);
    seen.insert(root.get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->parents.size()) {
            Node* p = n->parents[next++].get();
            if (p->requires_grad && !seen.count(p)) {
                seen.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }
    for (Node* n : order) n->grad.resize(0, 0);

    root->grad = Mat::Ones(1, 1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->grad.size() == 0 || !n->backward_fn) continue;
        n->backward_fn(n->grad);
    }
}

}  // namespace ndno::ad
