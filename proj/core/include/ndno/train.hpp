#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ndno/diffeo.hpp"
#include "ndno/fno.hpp"
#include "ndno/optim.hpp"
#include "ndno/stress.hpp"

namespace ndno::train {

// Per-epoch loss terms; rows = epochs, columns follow `terms`.
struct LossHistory {
    std::vector<std::string> terms;
    Mat values;  // epochs x terms

    int epochs() const { return static_cast<int>(values.rows()); }
};

struct Metrics {
    double averaged_max_error = 0.0;  // mm
    Vec rmse;                         // mm, per compared axis
    double relative_l2 = 0.0;
    std::vector<double> per_sample_max;  // mm, input order
};

struct DiffeoTrainOptions {
    diffeo::DiffeoArch arch;
    int n_points = 0;       // FPS-subsample each training pair (0 = full clouds)
    int jac_points = 2;     // Jacobian roots per sample per step
    ot::SinkhornOptions ot;
    double det_threshold = 0.999;  // train-set det-J fraction below this flags the run
};

struct DiffeoTrainResult {
    diffeo::DiffeoParams params;
    LossHistory history;  // l_inv, l_smooth, l_sim, total
    bool flagged = false;
    bool diverged = false;
};

// pairs: (normalized source coords, normalized reference coords)
DiffeoTrainResult train_diffeo(const std::vector<std::pair<PointMat, PointMat>>& pairs,
                               const TrainConfig& cfg, const DiffeoTrainOptions& opts);

// Everything needed to map a raw sample to operator inputs and back.
struct FittedModel {
    Vec3 medians = Vec3::Ones();
    diffeo::DiffeoParams mapping;
    fno::OperatorParams op;
    fno::ChannelScaler stress_scaler;  // 2 channels
    fno::ChannelScaler deform_scaler;  // 3 channels
    bool multi = false;   // 3 output channels instead of u_z only
    bool ablate = false;  // original coordinates replace mapped ones
};

struct OpTensors {
    Mat channels;    // N x 8
    PointMat coords; // transform coordinates
    Mat label_std;   // N x (1|3), standardized; empty when labels not requested
};
OpTensors assemble_operator_input(const FittedModel& model, const stress::Sample& sample,
                                  bool with_label);

struct OperatorTrainResult {
    fno::OperatorParams params;
    LossHistory history;  // relative_l2
    bool diverged = false;
};

// Trains G_theta on the reference domain with the mapping frozen. The model's
// op field provides the initial parameters; scalers/medians must be fitted.
OperatorTrainResult train_operator(const std::vector<stress::Sample>& train_samples,
                                   FittedModel& model, const TrainConfig& cfg);

// Physical-unit predictions at the sample's own points (pullback applied).
Mat predict_mm(const FittedModel& model, const stress::Sample& sample);

// Metric arithmetic on already-computed predictions (mm); evaluate() composes
// predict_mm with this.
Metrics compute_metrics(const std::vector<Mat>& preds_mm, const std::vector<Mat>& labels_mm);

Metrics evaluate(const FittedModel& model, const std::vector<stress::Sample>& samples);

struct PipelineConfig {
    TrainConfig diffeo_cfg;  // Table 1 defaults for both stages
    TrainConfig op_cfg;
    DiffeoTrainOptions diffeo_opts;
    fno::OperatorArch op_arch;
    bool multi = false;
    bool ablate = false;
    int diffeo_subset = 32;  // mapping network trains on this many pairs
};

struct PipelineResult {
    FittedModel model;
    LossHistory diffeo_history, op_history;
    Metrics test_metrics;
    bool diverged = false;
    bool diffeo_flagged = false;
};

// Two-stage run: mapping network on a train subset, operator on the full
// train split, metrics on the test split.
PipelineResult run_pipeline(const std::vector<stress::Sample>& train,
                            const std::vector<stress::Sample>& test, const PipelineConfig& cfg);

struct AblationReport {
    Metrics ndno, ablated;
};
// Two arms, identical data/seeds; only the coordinate channels differ.
AblationReport ablation_run(const std::vector<stress::Sample>& train,
                            const std::vector<stress::Sample>& test, const PipelineConfig& cfg);

enum class SplitMode { random, dimension, cross_family };
std::string split_name(SplitMode m);

struct GeneralizationReport {
    SplitMode split = SplitMode::random;
    Metrics test_metrics;
    int n_train = 0, n_test = 0;
    bool warning_empty_side = false;
};

// dimension: the Lx > 400 and Ly > 200 rule; random: seeded shuffle at the
// same test fraction; cross_family: train on `samples`, test on `cross_test`.
GeneralizationReport generalization_run(const std::vector<stress::Sample>& samples,
                                        const std::vector<stress::Sample>& cross_test,
                                        const PipelineConfig& cfg, SplitMode mode,
                                        double test_fraction = 0.2);

// Mapping quality on held-out pairs: fraction of points with det J > 0 and
// the Sinkhorn value of mapped vs target relative to unmapped vs target.
struct DiffeoQuality {
    double det_positive_fraction = 0.0;
    double sim_mapped = 0.0, sim_unmapped = 0.0;
    double reduction() const { return sim_unmapped > 0.0 ? sim_mapped / sim_unmapped : 0.0; }
};
DiffeoQuality diffeo_quality(const diffeo::DiffeoParams& params,
                             const std::vector<std::pair<PointMat, PointMat>>& pairs,
                             const ot::SinkhornOptions& ot_opts);

// Seeded shuffle split of [0, n) into train/test index sets.
std::pair<std::vector<int>, std::vector<int>> random_split(int n, double test_fraction,
                                                           std::uint64_t seed);

}  // namespace ndno::train
