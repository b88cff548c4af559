#include "ndno/diffeo.hpp"

#include <cmath>

#include "ndno/detail/backend.hpp"
#include "ndno/geomgen.hpp"
#include "ndno/rng.hpp"

namespace ndno::diffeo {

namespace {

using detail::EigenBackend;
using detail::TapeBackend;
using detail::one_minus_sq;

template <class B>
struct PView {
    DiffeoArch arch;
    std::vector<typename B::M> edge_w, edge_b;
    typename B::M wq, bq, wk, bk, wv, bv, wo, bo;
    typename B::M ffn_w1, ffn_b1, ffn_w2, ffn_b2;
    typename B::M proj_w1, proj_b1, proj_w2, proj_b2;
};

// Same ordering as param_blocks().
template <class B>
PView<B> view_from_vector(const DiffeoArch& arch, const std::vector<typename B::M>& v) {
    const std::size_t L = static_cast<std::size_t>(arch.edge_layers);
    if (v.size() != 2 * L + 16)
        throw ValidationError("diffeo: parameter vector has wrong block count");
    PView<B> pv;
    pv.arch = arch;
    std::size_t i = 0;
    for (std::size_t l = 0; l < L; ++l) {
        pv.edge_w.push_back(v[i++]);
        pv.edge_b.push_back(v[i++]);
    }
    pv.wq = v[i++]; pv.bq = v[i++];
    pv.wk = v[i++]; pv.bk = v[i++];
    pv.wv = v[i++]; pv.bv = v[i++];
    pv.wo = v[i++]; pv.bo = v[i++];
    pv.ffn_w1 = v[i++]; pv.ffn_b1 = v[i++];
    pv.ffn_w2 = v[i++]; pv.ffn_b2 = v[i++];
    pv.proj_w1 = v[i++]; pv.proj_b1 = v[i++];
    pv.proj_w2 = v[i++]; pv.proj_b2 = v[i++];
    return pv;
}

PView<EigenBackend> eigen_view(const DiffeoParams& p) {
    std::vector<Mat> v;
    auto& mp = const_cast<DiffeoParams&>(p);
    for (const auto& blk : param_blocks(mp)) v.push_back(*blk.value);
    return view_from_vector<EigenBackend>(p.arch, v);
}

template <class B>
struct EdgeLayerTrace {
    ad::IdxVec centers, neighbors;  // N*k
    ad::IdxMat argmax;              // N x d, row index into the edge array
    typename B::M act;              // N*k x d, tanh edge activations
};

template <class B>
struct Trace {
    std::vector<EdgeLayerTrace<B>> src_layers;
    typename B::M f_src, f_tgt;
    struct Head {
        typename B::M attn, k, v;
    };
    std::vector<Head> heads;
    typename B::M ffn_h, proj_g, disp, mapped;
    Eigen::Index n_src = 0;
};

// One DGCNN stack; graph for the first layer comes from `initial` (or is built
// on the coordinates), later layers rebuild it in feature space.
template <class B>
typename B::M edge_stack(const PView<B>& pv, const Mat& coords, const KnnGraph* initial,
                         std::vector<EdgeLayerTrace<B>>* trace) {
    const Eigen::Index n = coords.rows();
    const int k = initial ? initial->k : pv.arch.k;
    typename B::M f = B::constant(coords);
    for (int l = 0; l < pv.arch.edge_layers; ++l) {
        const Mat& fv = B::value(f);
        KnnGraph g = (l == 0 && initial) ? *initial : geom::knn_graph(fv, k);

        ad::IdxVec centers(n * k), neighbors(n * k);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (int c = 0; c < k; ++c) {
                centers[i * k + c] = i;
                neighbors[i * k + c] = g.neighbors(i, c);
            }
        }
        auto fc = B::gather_rows(f, centers);
        auto fn = B::gather_rows(f, neighbors);
        auto ef = B::concat_cols(fc, B::sub(fn, fc));
        const Eigen::Index want = 2 * fv.cols();
        if (B::value(pv.edge_w[static_cast<std::size_t>(l)]).rows() != want)
            throw ValidationError("edgeconv: layer " + std::to_string(l) + " weight expects " +
                                  std::to_string(B::value(pv.edge_w[static_cast<std::size_t>(l)]).rows()) +
                                  " inputs, features provide " + std::to_string(want));
        auto act = B::tanh(B::add_rowvec(B::matmul(ef, pv.edge_w[static_cast<std::size_t>(l)]),
                                         pv.edge_b[static_cast<std::size_t>(l)]));

        const Mat& av = B::value(act);
        const Eigen::Index d = av.cols();
        ad::IdxMat amax(n, d);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index c = 0; c < d; ++c) {
                Eigen::Index best = i * k;
                for (int e = 1; e < k; ++e)
                    if (av(i * k + e, c) > av(best, c)) best = i * k + e;
                amax(i, c) = best;
            }
        }
        if (trace) trace->push_back({centers, neighbors, amax, act});
        f = B::col_indexed_gather(act, amax);
    }
    return f;
}

template <class B>
typename B::M attention_ffn(const PView<B>& pv, const typename B::M& fs, const typename B::M& ft,
                            Trace<B>* trace, typename B::M* attn_out = nullptr) {
    const int d = pv.arch.width, h = pv.arch.heads;
    const int dh = d / h;
    auto q = B::add_rowvec(B::matmul(fs, pv.wq), pv.bq);
    auto kk = B::add_rowvec(B::matmul(ft, pv.wk), pv.bk);
    auto vv = B::add_rowvec(B::matmul(ft, pv.wv), pv.bv);

    typename B::M heads_out;
    for (int i = 0; i < h; ++i) {
        auto qi = B::slice_cols(q, i * dh, dh);
        auto ki = B::slice_cols(kk, i * dh, dh);
        auto vi = B::slice_cols(vv, i * dh, dh);
        auto attn = B::softmax_rows(B::scale(B::matmul(qi, B::transpose(ki)), 1.0 / std::sqrt(dh)));
        auto oi = B::matmul(attn, vi);
        heads_out = (i == 0) ? oi : B::concat_cols(heads_out, oi);
        if (trace) trace->heads.push_back({attn, ki, vi});
    }
    auto o2 = B::add_rowvec(B::matmul(heads_out, pv.wo), pv.bo);
    if (attn_out) *attn_out = o2;
    auto m1 = B::add(fs, o2);
    auto hh = B::tanh(B::add_rowvec(B::matmul(m1, pv.ffn_w1), pv.ffn_b1));
    auto m2 = B::add(m1, B::add_rowvec(B::matmul(hh, pv.ffn_w2), pv.ffn_b2));
    if (trace) trace->ffn_h = hh;
    return m2;
}

template <class B>
typename B::M project(const PView<B>& pv, const typename B::M& m2, Trace<B>* trace) {
    auto g = B::tanh(B::add_rowvec(B::matmul(m2, pv.proj_w1), pv.proj_b1));
    auto dsp = B::add_rowvec(B::matmul(g, pv.proj_w2), pv.proj_b2);
    if (trace) trace->proj_g = g;
    return dsp;
}

template <class B>
Trace<B> run_forward(const PView<B>& pv, const Mat& src, const Mat& tgt) {
    Trace<B> tr;
    tr.n_src = src.rows();
    tr.f_src = edge_stack<B>(pv, src, nullptr, &tr.src_layers);
    tr.f_tgt = edge_stack<B>(pv, tgt, nullptr, nullptr);
    auto m2 = attention_ffn<B>(pv, tr.f_src, tr.f_tgt, &tr);
    tr.disp = project<B>(pv, m2, &tr);
    tr.mapped = B::add(B::constant(src), tr.disp);
    return tr;
}

// Derivative of the whole forward pass along seed axis `axis` of source point
// `root`, propagated as an explicit tangent; returns the tangent of
// mapped.row(root), i.e. one column of J(x_root).
template <class B>
typename B::M tangent_column(const PView<B>& pv, const Trace<B>& tr, Eigen::Index root,
                             int axis) {
    const Eigen::Index n = tr.n_src;
    Mat seed = Mat::Zero(n, 3);
    seed(root, axis) = 1.0;
    typename B::M t = B::constant(seed);

    for (std::size_t l = 0; l < tr.src_layers.size(); ++l) {
        const auto& layer = tr.src_layers[l];
        auto tc = B::gather_rows(t, layer.centers);
        auto tn = B::gather_rows(t, layer.neighbors);
        auto te = B::concat_cols(tc, B::sub(tn, tc));
        auto tp = B::matmul(te, pv.edge_w[l]);
        auto ta = B::cwise_mul(one_minus_sq<B>(layer.act), tp);
        t = B::col_indexed_gather(ta, layer.argmax);
    }

    const int d = pv.arch.width, h = pv.arch.heads;
    const int dh = d / h;
    auto tq = B::matmul(t, pv.wq);  // keys/values are target-side: zero tangent
    typename B::M to;
    for (int i = 0; i < h; ++i) {
        const auto& head = tr.heads[static_cast<std::size_t>(i)];
        auto tqi = B::slice_cols(tq, i * dh, dh);
        auto tsi = B::scale(B::matmul(tqi, B::transpose(head.k)), 1.0 / std::sqrt(dh));
        auto as = B::cwise_mul(head.attn, tsi);
        auto tai = B::sub(as, B::mul_colvec(head.attn, B::rowsum(as)));
        auto toi = B::matmul(tai, head.v);
        to = (i == 0) ? toi : B::concat_cols(to, toi);
    }
    auto to2 = B::matmul(to, pv.wo);
    auto tm1 = B::add(t, to2);
    auto th = B::cwise_mul(one_minus_sq<B>(tr.ffn_h), B::matmul(tm1, pv.ffn_w1));
    auto tm2 = B::add(tm1, B::matmul(th, pv.ffn_w2));
    auto tg = B::cwise_mul(one_minus_sq<B>(tr.proj_g), B::matmul(tm2, pv.proj_w1));
    auto td = B::matmul(tg, pv.proj_w2);

    ad::IdxVec rootv(1);
    rootv[0] = root;
    auto tmapped = B::add(B::constant(seed), td);
    return B::gather_rows(tmapped, rootv);  // 1 x 3
}

void check_width(const Mat& f, int width, const char* who) {
    if (f.cols() != width)
        throw ValidationError(std::string(who) + ": feature width " + std::to_string(f.cols()) +
                              " != configured width " + std::to_string(width));
}

}  // namespace

DiffeoParams DiffeoParams::init(const DiffeoArch& arch, std::uint64_t seed) {
    if (arch.width % arch.heads != 0)
        throw ValidationError("DiffeoArch: width must be divisible by heads");
    if (arch.edge_layers < 1) throw ValidationError("DiffeoArch: edge_layers must be >= 1");
    Rng rng(seed);
    auto glorot = [&rng](Eigen::Index in, Eigen::Index out) {
        const double s = std::sqrt(6.0 / static_cast<double>(in + out));
        Mat m(in, out);
        for (Eigen::Index i = 0; i < in; ++i)
            for (Eigen::Index j = 0; j < out; ++j) m(i, j) = rng.uniform(-s, s);
        return m;
    };
    DiffeoParams p;
    p.arch = arch;
    for (int l = 0; l < arch.edge_layers; ++l) {
        const Eigen::Index din = (l == 0) ? 3 : arch.width;
        p.edge_w.push_back(glorot(2 * din, arch.width));
        p.edge_b.push_back(Mat::Zero(1, arch.width));
    }
    p.wq = glorot(arch.width, arch.width);
    p.wk = glorot(arch.width, arch.width);
    p.wv = glorot(arch.width, arch.width);
    p.wo = glorot(arch.width, arch.width);
    p.bq = Mat::Zero(1, arch.width);
    p.bk = Mat::Zero(1, arch.width);
    p.bv = Mat::Zero(1, arch.width);
    p.bo = Mat::Zero(1, arch.width);
    p.ffn_w1 = glorot(arch.width, arch.ffn_width);
    p.ffn_b1 = Mat::Zero(1, arch.ffn_width);
    p.ffn_w2 = glorot(arch.ffn_width, arch.width);
    p.ffn_b2 = Mat::Zero(1, arch.width);
    p.proj_w1 = glorot(arch.width, arch.proj_hidden);
    p.proj_b1 = Mat::Zero(1, arch.proj_hidden);
    // zero head: the initial mapping is the identity
    p.proj_w2 = Mat::Zero(arch.proj_hidden, 3);
    p.proj_b2 = Mat::Zero(1, 3);
    return p;
}

std::vector<ParamBlock> param_blocks(DiffeoParams& p) {
    std::vector<ParamBlock> blocks;
    for (std::size_t l = 0; l < p.edge_w.size(); ++l) {
        blocks.push_back({"edge" + std::to_string(l) + "_w", &p.edge_w[l]});
        blocks.push_back({"edge" + std::to_string(l) + "_b", &p.edge_b[l]});
    }
    blocks.push_back({"attn_wq", &p.wq});
    blocks.push_back({"attn_bq", &p.bq});
    blocks.push_back({"attn_wk", &p.wk});
    blocks.push_back({"attn_bk", &p.bk});
    blocks.push_back({"attn_wv", &p.wv});
    blocks.push_back({"attn_bv", &p.bv});
    blocks.push_back({"attn_wo", &p.wo});
    blocks.push_back({"attn_bo", &p.bo});
    blocks.push_back({"ffn_w1", &p.ffn_w1});
    blocks.push_back({"ffn_b1", &p.ffn_b1});
    blocks.push_back({"ffn_w2", &p.ffn_w2});
    blocks.push_back({"ffn_b2", &p.ffn_b2});
    blocks.push_back({"proj_w1", &p.proj_w1});
    blocks.push_back({"proj_b1", &p.proj_b1});
    blocks.push_back({"proj_w2", &p.proj_w2});
    blocks.push_back({"proj_b2", &p.proj_b2});
    return blocks;
}

Mat edgeconv_features(const PointCloud& cloud, const KnnGraph& graph, const DiffeoParams& p) {
    if (graph.neighbors.rows() != cloud.size())
        throw ValidationError("edgeconv_features: graph size does not match cloud");
    auto pv = eigen_view(p);
    return edge_stack<EigenBackend>(pv, cloud.points, &graph, nullptr);
}

Mat cross_attention_match(const Mat& feat_src, const Mat& feat_tgt, const DiffeoParams& p) {
    check_width(feat_src, p.arch.width, "cross_attention_match(src)");
    check_width(feat_tgt, p.arch.width, "cross_attention_match(tgt)");
    auto pv = eigen_view(p);
    return attention_ffn<EigenBackend>(pv, feat_src, feat_tgt, nullptr);
}

Mat cross_attention_output(const Mat& feat_src, const Mat& feat_tgt, const DiffeoParams& p) {
    check_width(feat_src, p.arch.width, "cross_attention_output(src)");
    check_width(feat_tgt, p.arch.width, "cross_attention_output(tgt)");
    auto pv = eigen_view(p);
    Mat out;
    attention_ffn<EigenBackend>(pv, feat_src, feat_tgt, nullptr, &out);
    return out;
}

std::vector<Mat> attention_weights(const Mat& feat_src, const Mat& feat_tgt,
                                   const DiffeoParams& p) {
    auto pv = eigen_view(p);
    Trace<EigenBackend> tr;
    tr.n_src = feat_src.rows();
    attention_ffn<EigenBackend>(pv, feat_src, feat_tgt, &tr);
    std::vector<Mat> out;
    for (const auto& h : tr.heads) out.push_back(h.attn);
    return out;
}

Mat project_displacement(const Mat& matched, const DiffeoParams& p) {
    check_width(matched, p.arch.width, "project_displacement");
    auto pv = eigen_view(p);
    return project<EigenBackend>(pv, matched, nullptr);
}

MappingResult apply_mapping(const DiffeoParams& p, const PointCloud& src, const PointCloud& tgt) {
    auto pv = eigen_view(p);
    auto tr = run_forward<EigenBackend>(pv, src.points, tgt.points);
    MappingResult r;
    r.mapped_points = tr.mapped;
    // recompute from the rounded sum so mapped - src == displacement holds exactly
    r.displacement = r.mapped_points - src.points;
    return r;
}

std::vector<Eigen::Matrix3d> jacobian_at_points(const DiffeoParams& p, const PointCloud& src,
                                                const PointCloud& tgt,
                                                const std::vector<Eigen::Index>& at) {
    auto pv = eigen_view(p);
    auto tr = run_forward<EigenBackend>(pv, src.points, tgt.points);
    std::vector<Eigen::Matrix3d> out;
    out.reserve(at.size());
    for (const auto idx : at) {
        if (idx < 0 || idx >= src.size())
            throw ValidationError("jacobian_at_points: index " + std::to_string(idx) +
                                  " out of range");
        Eigen::Matrix3d j;
        for (int b = 0; b < 3; ++b) {
            const Mat col = tangent_column<EigenBackend>(pv, tr, idx, b);
            for (int a = 0; a < 3; ++a) j(a, b) = col(0, a);
        }
        if (!j.allFinite())
            throw NumericError("jacobian_at_points: non-finite derivative at point " +
                               std::to_string(idx));
        out.push_back(j);
    }
    return out;
}

double loss_inv(const std::vector<Eigen::Matrix3d>& jacobians) {
    if (jacobians.empty()) throw ValidationError("loss_inv: need at least one Jacobian");
    double s = 0.0;
    for (const auto& j : jacobians) s += std::max(0.0, -j.determinant());
    return s / static_cast<double>(jacobians.size());
}

double loss_smooth(const std::vector<Eigen::Matrix3d>& jacobians) {
    if (jacobians.empty()) throw ValidationError("loss_smooth: need at least one Jacobian");
    double s = 0.0;
    for (const auto& j : jacobians) s += (j - Eigen::Matrix3d::Identity()).squaredNorm();
    return s;
}

DiffeoLossReport loss_total(const std::vector<Eigen::Matrix3d>& jacobians, double sim,
                            double beta1, double beta2, double beta3) {
    if (beta1 < 0.0 || beta2 < 0.0 || beta3 < 0.0)
        throw ValidationError("loss_total: coefficients must be >= 0");
    DiffeoLossReport r;
    r.beta1 = beta1;
    r.beta2 = beta2;
    r.beta3 = beta3;
    r.l_inv = loss_inv(jacobians);
    r.l_smooth = loss_smooth(jacobians);
    r.l_sim = sim;
    r.total = beta1 * r.l_inv + beta2 * r.l_smooth + beta3 * r.l_sim;
    return r;
}

Mat pushforward_field(const Mat& values_on_src, const MappingResult& mapping) {
    if (values_on_src.rows() != mapping.mapped_points.rows())
        throw ValidationError("pushforward_field: value rows != mapped point count");
    return values_on_src;  // component-wise transport along the shared index
}

Mat pullback_solution(const Mat& values_on_reference, const MappingResult& mapping) {
    if (values_on_reference.rows() != mapping.mapped_points.rows())
        throw ValidationError("pullback_solution: value rows != mapped point count");
    return values_on_reference;
}

DiffeoLeaves make_leaves(const DiffeoParams& p) {
    DiffeoLeaves l;
    auto& mp = const_cast<DiffeoParams&>(p);
    for (const auto& blk : param_blocks(mp)) l.nodes.push_back(ad::leaf(*blk.value));
    return l;
}

DiffeoLossGraph build_loss_graph(const DiffeoParams& p, const DiffeoLeaves& leaves,
                                 const PointMat& src, const PointMat& tgt,
                                 const std::vector<Eigen::Index>& jac_roots, double beta1,
                                 double beta2, double beta3, const ot::SinkhornOptions& ot_opts,
                                 const Mat* fixed_plan) {
    auto pv = view_from_vector<TapeBackend>(p.arch, leaves.nodes);
    auto tr = run_forward<TapeBackend>(pv, src, tgt);

    DiffeoLossGraph g;
    // similarity term: <P, C(mapped, tgt)> with the converged plan held fixed
    if (fixed_plan) {
        g.transport.plan = *fixed_plan;
        g.transport.converged = true;
    } else {
        g.transport = ot::sinkhorn(ot::pairwise_cost(tr.mapped->value, tgt), ot_opts);
    }
    const Eigen::Index n = src.rows(), m = tgt.rows();
    auto msq = ad::rowsum(ad::cwise_mul(tr.mapped, tr.mapped));
    auto cross = ad::matmul(tr.mapped, ad::constant(tgt.transpose()));
    Mat tsq = tgt.rowwise().squaredNorm().transpose();  // 1 x m
    auto cost = ad::add(ad::sub(ad::matmul(msq, ad::constant(Mat::Ones(1, m))),
                                ad::scale(cross, 2.0)),
                        ad::matmul(ad::constant(Mat::Ones(n, 1)), ad::constant(tsq)));
    g.l_sim = ad::sum_all(ad::cwise_mul(ad::constant(g.transport.plan), cost));

    // Jacobian terms at the sampled roots, rescaled to full-set estimates:
    // L_inv averages over points, L_smooth sums over them.
    ad::NodePtr inv_sum, smooth_sum;
    const Mat eye3 = Mat::Identity(3, 3);
    for (const auto root : jac_roots) {
        auto c0 = tangent_column<TapeBackend>(pv, tr, root, 0);
        auto c1 = tangent_column<TapeBackend>(pv, tr, root, 1);
        auto c2 = tangent_column<TapeBackend>(pv, tr, root, 2);
        auto jt = ad::concat_rows(ad::concat_rows(c0, c1), c2);  // J^T; same det and |.-I|
        auto pen = ad::relu(ad::scale(ad::det3x3(jt), -1.0));
        auto dev = ad::sub(jt, ad::constant(eye3));
        auto sm = ad::sum_all(ad::cwise_mul(dev, dev));
        inv_sum = inv_sum ? ad::add(inv_sum, pen) : pen;
        smooth_sum = smooth_sum ? ad::add(smooth_sum, sm) : sm;
    }
    if (jac_roots.empty()) {
        inv_sum = ad::constant(Mat::Zero(1, 1));
        smooth_sum = ad::constant(Mat::Zero(1, 1));
    }
    const double r = std::max<std::size_t>(jac_roots.size(), 1);
    g.l_inv = ad::scale(inv_sum, 1.0 / r);
    g.l_smooth = ad::scale(smooth_sum, static_cast<double>(n) / r);

    g.total = ad::add(ad::add(ad::scale(g.l_inv, beta1), ad::scale(g.l_smooth, beta2)),
                      ad::scale(g.l_sim, beta3));
    return g;
}

}  // namespace ndno::diffeo
