#include "ndno/train.hpp"

#include <algorithm>
#include <cmath>

#include "ndno/geomgen.hpp"
#include "ndno/parallel.hpp"
#include "ndno/rng.hpp"

namespace ndno::train {

namespace {

std::vector<int> shuffled_indices(int n, Rng& rng) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i)
        std::swap(idx[static_cast<std::size_t>(i)],
                  idx[static_cast<std::size_t>(rng.uniform_int(0, i))]);
    return idx;
}

PointMat subsample(const PointMat& pts, int n_points) {
    if (n_points <= 0 || n_points >= pts.rows()) return pts;
    const auto idx = geom::farthest_point_indices(pts, n_points);
    PointMat out(n_points, 3);
    for (int i = 0; i < n_points; ++i) out.row(i) = pts.row(idx[static_cast<std::size_t>(i)]);
    return out;
}

PointCloud cloud_of(const PointMat& pts) {
    PointCloud c;
    c.points = pts;
    return c;
}

}  // namespace

std::pair<std::vector<int>, std::vector<int>> random_split(int n, double test_fraction,
                                                           std::uint64_t seed) {
    Rng rng(seed);
    auto idx = shuffled_indices(n, rng);
    const int n_test = std::max(1, static_cast<int>(std::lround(test_fraction * n)));
    std::vector<int> test(idx.begin(), idx.begin() + std::min(n, n_test));
    std::vector<int> tr(idx.begin() + std::min(n, n_test), idx.end());
    std::sort(test.begin(), test.end());
    std::sort(tr.begin(), tr.end());
    return {tr, test};
}

DiffeoTrainResult train_diffeo(const std::vector<std::pair<PointMat, PointMat>>& pairs,
                               const TrainConfig& cfg, const DiffeoTrainOptions& opts) {
    cfg.validate();
    if (pairs.empty()) throw ValidationError("train_diffeo: empty dataset");

    std::vector<std::pair<PointMat, PointMat>> data;
    data.reserve(pairs.size());
    for (const auto& [src, tgt] : pairs)
        data.emplace_back(subsample(src, opts.n_points), subsample(tgt, opts.n_points));

    DiffeoTrainResult result;
    result.params = diffeo::DiffeoParams::init(opts.arch, cfg.seed);
    auto blocks = diffeo::param_blocks(result.params);
    std::vector<Mat*> values;
    std::vector<std::string> names;
    for (auto& b : blocks) {
        values.push_back(b.value);
        names.push_back(b.name);
    }

    Adam adam(cfg);
    Rng rng(cfg.seed ^ 0x517cc1b727220a95ull);
    const int n = static_cast<int>(data.size());
    const int jac_roots = std::max(1, opts.jac_points);

    result.history.terms = {"l_inv", "l_smooth", "l_sim", "total"};
    result.history.values = Mat::Zero(cfg.epochs, 4);

    diffeo::DiffeoParams last_good = result.params;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double rate = cosine_lr(epoch, cfg);
        auto order = shuffled_indices(n, rng);
        Eigen::Vector4d epoch_acc = Eigen::Vector4d::Zero();
        int epoch_terms = 0;

        for (int start = 0; start < n; start += cfg.batch_size) {
            const int bsz = std::min(cfg.batch_size, n - start);
            // per-sample randomness drawn before any parallel work
            std::vector<std::vector<Eigen::Index>> roots(static_cast<std::size_t>(bsz));
            for (int s = 0; s < bsz; ++s) {
                const auto& src = data[static_cast<std::size_t>(order[static_cast<std::size_t>(start + s)])].first;
                for (int r = 0; r < jac_roots; ++r)
                    roots[static_cast<std::size_t>(s)].push_back(
                        rng.uniform_int(0, src.rows() - 1));
            }

            std::vector<std::vector<Mat>> grads(static_cast<std::size_t>(bsz));
            std::vector<Eigen::Vector4d> terms(static_cast<std::size_t>(bsz));
            const auto& params = result.params;
            parallel_for(static_cast<std::size_t>(bsz), [&](std::size_t s) {
                const auto& pair = data[static_cast<std::size_t>(order[static_cast<std::size_t>(start + static_cast<int>(s))])];
                auto leaves = diffeo::make_leaves(params);
                auto g = diffeo::build_loss_graph(params, leaves, pair.first, pair.second,
                                                  roots[s], cfg.beta1, cfg.beta2, cfg.beta3,
                                                  opts.ot);
                ad::backward(g.total);
                terms[s] = {g.l_inv->scalar(), g.l_smooth->scalar(), g.l_sim->scalar(),
                            g.total->scalar()};
                grads[s].reserve(leaves.nodes.size());
                for (const auto& leaf : leaves.nodes)
                    grads[s].push_back(leaf->grad.size() ? leaf->grad
                                                         : Mat::Zero(leaf->rows(), leaf->cols()));
            });

            std::vector<Mat> acc(values.size());
            for (std::size_t i = 0; i < values.size(); ++i)
                acc[i] = Mat::Zero(values[i]->rows(), values[i]->cols());
            bool finite = true;
            for (int s = 0; s < bsz; ++s) {
                for (std::size_t i = 0; i < values.size(); ++i)
                    acc[i] += grads[static_cast<std::size_t>(s)][i] / bsz;
                if (!terms[static_cast<std::size_t>(s)].allFinite()) finite = false;
                epoch_acc += terms[static_cast<std::size_t>(s)];
                ++epoch_terms;
            }
            if (!finite) {
                result.params = last_good;
                result.diverged = true;
                result.history.values.conservativeResize(epoch, Eigen::NoChange);
                return result;
            }
            last_good = result.params;
            adam.step(values, acc, names, rate);
        }
        result.history.values.row(epoch) = (epoch_acc / std::max(epoch_terms, 1)).transpose();
    }

    // det-J check on the training pairs (subset for cost)
    const int check_pairs = std::min<int>(2, n);
    int positive = 0, total = 0;
    for (int pi = 0; pi < check_pairs; ++pi) {
        const auto& [src, tgt] = data[static_cast<std::size_t>(pi)];
        std::vector<Eigen::Index> at;
        for (Eigen::Index i = 0; i < src.rows(); ++i) at.push_back(i);
        auto js = diffeo::jacobian_at_points(result.params, cloud_of(src), cloud_of(tgt), at);
        for (const auto& j : js) {
            positive += j.determinant() > 0.0 ? 1 : 0;
            ++total;
        }
    }
    result.flagged = total > 0 && static_cast<double>(positive) / total < opts.det_threshold;
    return result;
}

DiffeoQuality diffeo_quality(const diffeo::DiffeoParams& params,
                             const std::vector<std::pair<PointMat, PointMat>>& pairs,
                             const ot::SinkhornOptions& ot_opts) {
    DiffeoQuality q;
    int positive = 0, total = 0;
    for (const auto& [src, tgt] : pairs) {
        auto mapping = diffeo::apply_mapping(params, cloud_of(src), cloud_of(tgt));
        q.sim_mapped += ot::sinkhorn_distance(mapping.mapped_points, tgt, ot_opts).cost_value;
        q.sim_unmapped += ot::sinkhorn_distance(src, tgt, ot_opts).cost_value;
        std::vector<Eigen::Index> at;
        for (Eigen::Index i = 0; i < src.rows(); ++i) at.push_back(i);
        auto js = diffeo::jacobian_at_points(params, cloud_of(src), cloud_of(tgt), at);
        for (const auto& j : js) {
            positive += j.determinant() > 0.0 ? 1 : 0;
            ++total;
        }
    }
    q.det_positive_fraction = total ? static_cast<double>(positive) / total : 0.0;
    return q;
}

OpTensors assemble_operator_input(const FittedModel& model, const stress::Sample& sample,
                                  bool with_label) {
    const Eigen::Index n = sample.points.rows();
    auto [norm_src, tf_src] = geom::normalize_coords(
        [&] {
            PointCloud c;
            c.points = sample.points;
            return c;
        }(),
        model.medians);

    PointMat mapped;
    if (model.ablate) {
        mapped = norm_src.points;
    } else {
        PointCloud blank = geom::reference_blank(sample.spec, n);
        auto [norm_blank, tf_blank] = geom::normalize_coords(blank, model.medians);
        mapped = diffeo::apply_mapping(model.mapping, norm_src, norm_blank).mapped_points;
    }

    OpTensors t;
    t.coords = mapped;
    t.channels.resize(n, 8);
    t.channels.leftCols(2) = model.stress_scaler.apply(sample.stress);
    t.channels.middleCols(2, 3) = mapped;
    t.channels.rightCols(3) = norm_src.points;
    if (with_label) {
        const Mat std_def = model.deform_scaler.apply(sample.deformation);
        t.label_std = model.multi ? std_def : Mat(std_def.col(2));
    }
    return t;
}

OperatorTrainResult train_operator(const std::vector<stress::Sample>& train_samples,
                                   FittedModel& model, const TrainConfig& cfg) {
    cfg.validate();
    if (train_samples.empty()) throw ValidationError("train_operator: empty dataset");
    const int want_out = model.multi ? 3 : 1;
    if (model.op.arch.c_out != want_out)
        throw ValidationError("train_operator: operator c_out does not match direction mode");

    // inputs are fixed while the mapping is frozen; assemble once
    std::vector<OpTensors> tensors;
    tensors.reserve(train_samples.size());
    for (const auto& s : train_samples)
        tensors.push_back(assemble_operator_input(model, s, true));

    OperatorTrainResult result;
    result.params = model.op;
    auto blocks = fno::param_blocks(result.params);
    std::vector<Mat*> values;
    std::vector<std::string> names;
    for (auto& b : blocks) {
        values.push_back(b.value);
        names.push_back(b.name);
    }

    Adam adam(cfg);
    Rng rng(cfg.seed ^ 0xd1b54a32d192ed03ull);
    const int n = static_cast<int>(tensors.size());
    result.history.terms = {"relative_l2"};
    result.history.values = Mat::Zero(cfg.epochs, 1);

    fno::OperatorParams last_good = result.params;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double rate = cosine_lr(epoch, cfg);
        auto order = shuffled_indices(n, rng);
        double epoch_loss = 0.0;
        int steps = 0;

        for (int start = 0; start < n; start += cfg.batch_size) {
            const int bsz = std::min(cfg.batch_size, n - start);
            std::vector<std::vector<Mat>> grads(static_cast<std::size_t>(bsz));
            std::vector<double> losses(static_cast<std::size_t>(bsz));
            const auto& params = result.params;
            parallel_for(static_cast<std::size_t>(bsz), [&](std::size_t s) {
                const auto& t = tensors[static_cast<std::size_t>(order[static_cast<std::size_t>(start + static_cast<int>(s))])];
                auto leaves = fno::make_leaves(params);
                auto basis = fno::make_basis_const(t.coords, params.arch.modes);
                auto loss = fno::build_loss_graph(params, leaves, t.channels, basis, t.label_std);
                ad::backward(loss);
                losses[s] = loss->scalar();
                grads[s].reserve(leaves.nodes.size());
                for (const auto& leaf : leaves.nodes)
                    grads[s].push_back(leaf->grad.size() ? leaf->grad
                                                         : Mat::Zero(leaf->rows(), leaf->cols()));
            });

            std::vector<Mat> acc(values.size());
            for (std::size_t i = 0; i < values.size(); ++i)
                acc[i] = Mat::Zero(values[i]->rows(), values[i]->cols());
            bool finite = true;
            for (int s = 0; s < bsz; ++s) {
                for (std::size_t i = 0; i < values.size(); ++i)
                    acc[i] += grads[static_cast<std::size_t>(s)][i] / bsz;
                if (!std::isfinite(losses[static_cast<std::size_t>(s)])) finite = false;
                epoch_loss += losses[static_cast<std::size_t>(s)];
                ++steps;
            }
            if (!finite) {
                result.params = last_good;
                result.diverged = true;
                result.history.values.conservativeResize(epoch, Eigen::NoChange);
                model.op = result.params;
                return result;
            }
            last_good = result.params;
            adam.step(values, acc, names, rate);
        }
        result.history.values(epoch, 0) = epoch_loss / std::max(steps, 1);
    }
    model.op = result.params;
    return result;
}

Mat predict_mm(const FittedModel& model, const stress::Sample& sample) {
    auto t = assemble_operator_input(model, sample, false);
    fno::OperatorInput in;
    in.channels = t.channels;
    in.coords = t.coords;
    Mat pred_std = fno::forward(model.op, in);

    // invert standardization back to mm; pullback is index-preserving
    Mat pred(pred_std.rows(), pred_std.cols());
    if (model.multi) {
        pred = model.deform_scaler.invert(pred_std);
    } else {
        pred.col(0) =
            pred_std.col(0).array() * model.deform_scaler.stdev[2] + model.deform_scaler.mean[2];
    }
    return pred;
}

Metrics compute_metrics(const std::vector<Mat>& preds_mm, const std::vector<Mat>& labels_mm) {
    if (preds_mm.empty() || preds_mm.size() != labels_mm.size())
        throw ValidationError("compute_metrics: prediction/label lists must be non-empty and equal");
    Metrics m;
    const Eigen::Index axes = preds_mm.front().cols();
    Vec sq_err = Vec::Zero(axes);
    Eigen::Index n_points = 0;
    double rel_sum = 0.0;
    for (std::size_t i = 0; i < preds_mm.size(); ++i) {
        const Mat err = preds_mm[i] - labels_mm[i];
        m.per_sample_max.push_back(err.cwiseAbs().maxCoeff());
        for (Eigen::Index a = 0; a < axes; ++a) sq_err[a] += err.col(a).squaredNorm();
        n_points += err.rows();
        rel_sum += (err.norm() == 0.0 && labels_mm[i].norm() == 0.0)
                       ? 0.0
                       : fno::relative_l2_loss(preds_mm[i], labels_mm[i]);
    }
    m.averaged_max_error = 0.0;
    for (double v : m.per_sample_max) m.averaged_max_error += v;
    m.averaged_max_error /= static_cast<double>(m.per_sample_max.size());
    m.rmse = (sq_err / static_cast<double>(n_points)).array().sqrt();
    m.relative_l2 = rel_sum / static_cast<double>(preds_mm.size());
    return m;
}

Metrics evaluate(const FittedModel& model, const std::vector<stress::Sample>& samples) {
    if (samples.empty()) throw ValidationError("evaluate: empty sample list");
    std::vector<Mat> preds(samples.size()), labels(samples.size());
    parallel_for(samples.size(), [&](std::size_t i) { preds[i] = predict_mm(model, samples[i]); });
    for (std::size_t i = 0; i < samples.size(); ++i)
        labels[i] = model.multi ? samples[i].deformation : Mat(samples[i].deformation.col(2));
    return compute_metrics(preds, labels);
}

PipelineResult run_pipeline(const std::vector<stress::Sample>& train,
                            const std::vector<stress::Sample>& test,
                            const PipelineConfig& cfg) {
    if (train.empty()) throw ValidationError("run_pipeline: empty training split");
    PipelineResult out;

    std::vector<ComponentSpec> specs;
    for (const auto& s : train) specs.push_back(s.spec);
    out.model.medians = geom::median_dims(specs);
    out.model.multi = cfg.multi;
    out.model.ablate = cfg.ablate;

    // channel scalers from the train split only
    std::vector<Mat> stress_blocks, deform_blocks;
    for (const auto& s : train) {
        stress_blocks.push_back(s.stress);
        deform_blocks.push_back(s.deformation);
    }
    out.model.stress_scaler = fno::fit_scaler(stress_blocks);
    out.model.deform_scaler = fno::fit_scaler(deform_blocks);

    // stage 1: mapping network on a subset of normalized (part, blank) pairs
    if (!cfg.ablate) {
        std::vector<std::pair<PointMat, PointMat>> pairs;
        const int subset = std::min<int>(cfg.diffeo_subset, static_cast<int>(train.size()));
        for (int i = 0; i < subset; ++i) {
            const auto& s = train[static_cast<std::size_t>(i)];
            PointCloud src;
            src.points = s.points;
            auto [norm_src, tf1] = geom::normalize_coords(src, out.model.medians);
            PointCloud blank = geom::reference_blank(s.spec, s.points.rows());
            auto [norm_blank, tf2] = geom::normalize_coords(blank, out.model.medians);
            pairs.emplace_back(norm_src.points, norm_blank.points);
        }
        auto dres = train_diffeo(pairs, cfg.diffeo_cfg, cfg.diffeo_opts);
        out.model.mapping = std::move(dres.params);
        out.diffeo_history = std::move(dres.history);
        out.diffeo_flagged = dres.flagged;
        out.diverged |= dres.diverged;
    } else {
        out.model.mapping = diffeo::DiffeoParams::init(cfg.diffeo_opts.arch, cfg.diffeo_cfg.seed);
    }

    // stage 2: operator on the full training split
    auto arch = cfg.op_arch;
    arch.c_out = cfg.multi ? 3 : 1;
    out.model.op = fno::OperatorParams::init(arch, cfg.op_cfg.seed);
    auto ores = train_operator(train, out.model, cfg.op_cfg);
    out.op_history = std::move(ores.history);
    out.diverged |= ores.diverged;

    if (!test.empty()) out.test_metrics = evaluate(out.model, test);
    return out;
}

AblationReport ablation_run(const std::vector<stress::Sample>& train,
                            const std::vector<stress::Sample>& test,
                            const PipelineConfig& cfg) {
    AblationReport r;
    PipelineConfig full = cfg;
    full.ablate = false;
    r.ndno = run_pipeline(train, test, full).test_metrics;
    PipelineConfig ablated = cfg;
    ablated.ablate = true;
    r.ablated = run_pipeline(train, test, ablated).test_metrics;
    return r;
}

std::string split_name(SplitMode m) {
    switch (m) {
        case SplitMode::random: return "random";
        case SplitMode::dimension: return "dimension";
        case SplitMode::cross_family: return "cross-family";
    }
    return "random";
}

GeneralizationReport generalization_run(const std::vector<stress::Sample>& samples,
                                        const std::vector<stress::Sample>& cross_test,
                                        const PipelineConfig& cfg, SplitMode mode,
                                        double test_fraction) {
    GeneralizationReport rep;
    rep.split = mode;
    std::vector<stress::Sample> train, test;
    switch (mode) {
        case SplitMode::dimension: {
            auto split = stress::generalization_split(samples);
            rep.warning_empty_side = split.warning_empty_side;
            if (split.test.empty())
                throw ValidationError("generalization_run: dimension split has empty test side");
            for (int i : split.train) train.push_back(samples[static_cast<std::size_t>(i)]);
            for (int i : split.test) test.push_back(samples[static_cast<std::size_t>(i)]);
            break;
        }
        case SplitMode::random: {
            auto [tr, te] = random_split(static_cast<int>(samples.size()), test_fraction,
                                         cfg.diffeo_cfg.seed ^ 0x5bf03635);
            for (int i : tr) train.push_back(samples[static_cast<std::size_t>(i)]);
            for (int i : te) test.push_back(samples[static_cast<std::size_t>(i)]);
            break;
        }
        case SplitMode::cross_family: {
            if (cross_test.empty())
                throw ValidationError("generalization_run: cross-family mode needs a test dataset");
            train = samples;
            test = cross_test;
            break;
        }
    }
    rep.n_train = static_cast<int>(train.size());
    rep.n_test = static_cast<int>(test.size());
    rep.test_metrics = run_pipeline(train, test, cfg).test_metrics;
    return rep;
}

}  // namespace ndno::train
