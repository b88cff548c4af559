#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>

#include "ndno/geomgen.hpp"
#include "ndno/parallel.hpp"
#include "ndno/serialize.hpp"
#include "ndno/sha256.hpp"
#include "ndno/svg.hpp"
#include "ndno/train.hpp"
#include "ndno/version.hpp"

namespace fs = std::filesystem;
using ndno::io::json;

namespace {

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

// Config file: TrainConfig fields at the top level, optional "diffeo",
// "operator" and "data" sections for architecture and stage overrides.
struct RunSettings {
    json raw;
    ndno::train::TrainConfig base;
    ndno::train::PipelineConfig pipeline;
    ndno::stress::DatasetConfig data;
};

RunSettings load_settings(const std::string& config_path) {
    RunSettings s;
    s.raw = json::object();
    if (!config_path.empty()) s.raw = json::parse(ndno::io::read_text_file(config_path));
    s.base = ndno::io::config_from_json(s.raw);

    s.pipeline.diffeo_cfg = s.base;
    s.pipeline.op_cfg = s.base;

    if (s.raw.contains("diffeo")) {
        const auto& d = s.raw.at("diffeo");
        auto& arch = s.pipeline.diffeo_opts.arch;
        arch.edge_layers = d.value("edge_layers", arch.edge_layers);
        arch.width = d.value("width", arch.width);
        arch.heads = d.value("heads", arch.heads);
        arch.ffn_width = d.value("ffn_width", arch.ffn_width);
        arch.proj_hidden = d.value("proj_hidden", arch.proj_hidden);
        arch.k = d.value("k", arch.k);
        s.pipeline.diffeo_opts.n_points = d.value("n_points", s.pipeline.diffeo_opts.n_points);
        s.pipeline.diffeo_opts.jac_points =
            d.value("jac_points", s.pipeline.diffeo_opts.jac_points);
        s.pipeline.diffeo_subset = d.value("subset", s.pipeline.diffeo_subset);
        s.pipeline.diffeo_cfg.epochs = d.value("epochs", s.pipeline.diffeo_cfg.epochs);
        s.pipeline.diffeo_cfg.seed = d.value("seed", s.pipeline.diffeo_cfg.seed);
    }
    if (s.raw.contains("operator")) {
        const auto& o = s.raw.at("operator");
        auto& arch = s.pipeline.op_arch;
        if (o.contains("modes")) {
            const auto& m = o.at("modes");
            arch.modes = {m.at(0), m.at(1), m.at(2)};
        }
        arch.width = o.value("width", arch.width);
        arch.layers = o.value("layers", arch.layers);
        arch.proj_hidden = o.value("proj_hidden", arch.proj_hidden);
        s.pipeline.op_cfg.epochs = o.value("epochs", s.pipeline.op_cfg.epochs);
        s.pipeline.op_cfg.seed = o.value("seed", s.pipeline.op_cfg.seed);
    }
    if (s.raw.contains("data")) {
        const auto& d = s.raw.at("data");
        s.data.n_points = d.value("points", s.data.n_points);
        s.data.stress_order = d.value("stress_order", s.data.stress_order);
        s.data.stress_bound = d.value("stress_bound", s.data.stress_bound);
    }
    return s;
}

json scaler_to_json(const ndno::fno::ChannelScaler& s) {
    return {{"mean", std::vector<double>(s.mean.begin(), s.mean.end())},
            {"stdev", std::vector<double>(s.stdev.begin(), s.stdev.end())},
            {"skipped", s.skipped}};
}

ndno::fno::ChannelScaler scaler_from_json(const json& j) {
    ndno::fno::ChannelScaler s;
    const std::vector<double> mean = j.at("mean"), stdev = j.at("stdev");
    s.mean = Eigen::Map<const ndno::Vec>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    s.stdev = Eigen::Map<const ndno::Vec>(stdev.data(), static_cast<Eigen::Index>(stdev.size()));
    s.skipped = j.value("skipped", std::vector<int>{});
    return s;
}

void write_model_bundle(const std::string& dir, const ndno::train::FittedModel& model) {
    ndno::io::write_diffeo_checkpoint((fs::path(dir) / "diffeo.ckpt").string(), model.mapping);
    ndno::io::write_operator_checkpoint((fs::path(dir) / "op.ckpt").string(), model.op);
    json j = {{"medians", {model.medians[0], model.medians[1], model.medians[2]}},
              {"stress_scaler", scaler_to_json(model.stress_scaler)},
              {"deform_scaler", scaler_to_json(model.deform_scaler)},
              {"multi", model.multi},
              {"ablate", model.ablate},
              {"diffeo_checkpoint", "diffeo.ckpt"},
              {"operator_checkpoint", "op.ckpt"}};
    ndno::io::write_text_file((fs::path(dir) / "model.json").string(), j.dump(2) + "\n");
}

ndno::train::FittedModel read_model_bundle(const std::string& model_json_path) {
    const json j = json::parse(ndno::io::read_text_file(model_json_path));
    const fs::path dir = fs::path(model_json_path).parent_path();
    ndno::train::FittedModel m;
    m.medians = ndno::Vec3(j.at("medians").at(0), j.at("medians").at(1), j.at("medians").at(2));
    m.stress_scaler = scaler_from_json(j.at("stress_scaler"));
    m.deform_scaler = scaler_from_json(j.at("deform_scaler"));
    m.multi = j.at("multi");
    m.ablate = j.at("ablate");
    m.mapping = ndno::io::read_diffeo_checkpoint(
        (dir / j.at("diffeo_checkpoint").get<std::string>()).string());
    m.op = ndno::io::read_operator_checkpoint(
        (dir / j.at("operator_checkpoint").get<std::string>()).string());
    return m;
}

void emit_eval_outputs(const std::string& out_dir, const ndno::train::Metrics& metrics,
                       int bins) {
    ndno::io::write_metrics((fs::path(out_dir) / "metrics.json").string(),
                            (fs::path(out_dir) / "per_sample.csv").string(), metrics);
    if (!metrics.per_sample_max.empty()) {
        ndno::io::write_text_file(
            (fs::path(out_dir) / "max_error_hist.svg").string(),
            ndno::io::svg_histogram(metrics.per_sample_max, bins,
                                    "Per-sample max deformation error", "max error (mm)"));
    }
}

std::vector<ndno::stress::Sample> load_split(const std::string& dataset_dir,
                                             const std::string& which) {
    auto manifest = ndno::io::read_dataset_manifest(dataset_dir);
    std::vector<ndno::stress::Sample> out;
    for (const auto& e : manifest.files) {
        if (which != "all" && e.split != which) continue;
        out.push_back(ndno::io::read_sample((fs::path(dataset_dir) / e.path).string()));
    }
    if (out.empty())
        throw ndno::ValidationError("dataset '" + dataset_dir + "' has no samples tagged '" +
                                    which + "'");
    return out;
}

int cmd_gen(const std::string& out_dir, const std::string& family, int count, std::uint64_t seed,
            const RunSettings& settings) {
    Timer timer;
    auto cfg = settings.data;
    auto samples = ndno::stress::make_dataset(count, ndno::family_from_name(family), seed, cfg);
    ndno::io::DatasetManifest manifest;
    manifest.family = family;
    manifest.seed = seed;
    manifest.extra = {{"command", "gen"},
                      {"count", count},
                      {"points", cfg.n_points},
                      {"stress_order", cfg.stress_order},
                      {"stress_bound", cfg.stress_bound}};
    ndno::io::write_dataset(out_dir, samples, manifest);
    std::printf("gen: wrote %d %s samples to %s (sha256 %s) in %.1fs\n", count, family.c_str(),
                out_dir.c_str(), ndno::io::dataset_hash(out_dir).substr(0, 12).c_str(),
                timer.seconds());
    return 0;
}

int cmd_train_diffeo(const std::string& dataset_dir, const std::string& out_dir,
                     const RunSettings& settings) {
    Timer timer;
    auto samples = load_split(dataset_dir, "all");
    std::vector<ndno::ComponentSpec> specs;
    for (const auto& s : samples) specs.push_back(s.spec);
    const ndno::Vec3 medians = ndno::geom::median_dims(specs);

    std::vector<std::pair<ndno::PointMat, ndno::PointMat>> pairs;
    const int subset =
        std::min<int>(settings.pipeline.diffeo_subset, static_cast<int>(samples.size()));
    for (int i = 0; i < subset; ++i) {
        const auto& s = samples[static_cast<std::size_t>(i)];
        ndno::PointCloud src;
        src.points = s.points;
        auto blank = ndno::geom::reference_blank(s.spec, s.points.rows());
        pairs.emplace_back(ndno::geom::normalize_coords(src, medians).first.points,
                           ndno::geom::normalize_coords(blank, medians).first.points);
    }

    auto result = ndno::train::train_diffeo(pairs, settings.pipeline.diffeo_cfg,
                                            settings.pipeline.diffeo_opts);
    fs::create_directories(out_dir);
    ndno::io::write_diffeo_checkpoint((fs::path(out_dir) / "diffeo.ckpt").string(),
                                      result.params);
    ndno::io::write_loss_history_csv((fs::path(out_dir) / "loss_history.csv").string(),
                                     result.history);
    if (result.history.epochs() > 0)
        ndno::io::write_text_file(
            (fs::path(out_dir) / "loss_curves.svg").string(),
            ndno::io::svg_line_chart(result.history.terms, result.history.values,
                                     "Mapping network training loss", true));

    ndno::io::RunManifest manifest;
    manifest.command = "train-diffeo";
    manifest.config = settings.raw;
    manifest.config["resolved_train"] = ndno::io::config_to_json(settings.pipeline.diffeo_cfg);
    manifest.dataset_sha256 = ndno::io::dataset_hash(dataset_dir);
    manifest.artifacts = {"diffeo.ckpt", "loss_history.csv"};
    manifest.seed = settings.pipeline.diffeo_cfg.seed;
    manifest.wall_clock_seconds = timer.seconds();
    ndno::io::write_run_manifest(out_dir, manifest);

    if (result.diverged) {
        std::fprintf(stderr, "train-diffeo: loss diverged; last checkpoint retained\n");
        return 3;
    }
    std::printf("train-diffeo: %d epochs on %zu pairs in %.1fs%s\n", result.history.epochs(),
                pairs.size(), timer.seconds(),
                result.flagged ? " (flagged: det-J threshold unmet)" : "");
    return 0;
}

int cmd_train_op(const std::string& dataset_dir, const std::string& out_dir,
                 const std::string& diffeo_ckpt, const std::string& mode, bool ablate,
                 const RunSettings& settings) {
    Timer timer;
    auto samples = load_split(dataset_dir, "all");

    ndno::train::FittedModel model;
    model.multi = (mode == "multi");
    model.ablate = ablate;
    std::vector<ndno::ComponentSpec> specs;
    for (const auto& s : samples) specs.push_back(s.spec);
    model.medians = ndno::geom::median_dims(specs);
    std::vector<ndno::Mat> stress_blocks, deform_blocks;
    for (const auto& s : samples) {
        stress_blocks.push_back(s.stress);
        deform_blocks.push_back(s.deformation);
    }
    model.stress_scaler = ndno::fno::fit_scaler(stress_blocks);
    model.deform_scaler = ndno::fno::fit_scaler(deform_blocks);

    if (!ablate) {
        if (diffeo_ckpt.empty())
            throw ndno::ValidationError("train-op: --diffeo checkpoint required unless --ablate");
        model.mapping = ndno::io::read_diffeo_checkpoint(diffeo_ckpt);
    } else {
        model.mapping = ndno::diffeo::DiffeoParams::init(settings.pipeline.diffeo_opts.arch, 0);
    }

    auto arch = settings.pipeline.op_arch;
    arch.c_out = model.multi ? 3 : 1;
    model.op = ndno::fno::OperatorParams::init(arch, settings.pipeline.op_cfg.seed);

    auto result = ndno::train::train_operator(samples, model, settings.pipeline.op_cfg);
    fs::create_directories(out_dir);
    write_model_bundle(out_dir, model);
    ndno::io::write_loss_history_csv((fs::path(out_dir) / "loss_history.csv").string(),
                                     result.history);
    if (result.history.epochs() > 0)
        ndno::io::write_text_file(
            (fs::path(out_dir) / "loss_curves.svg").string(),
            ndno::io::svg_line_chart(result.history.terms, result.history.values,
                                     "Operator training loss", true));

    ndno::io::RunManifest manifest;
    manifest.command = "train-op";
    manifest.config = settings.raw;
    manifest.config["resolved_train"] = ndno::io::config_to_json(settings.pipeline.op_cfg);
    manifest.config["mode"] = mode;
    manifest.config["ablate"] = ablate;
    manifest.dataset_sha256 = ndno::io::dataset_hash(dataset_dir);
    manifest.artifacts = {"model.json", "op.ckpt", "diffeo.ckpt", "loss_history.csv"};
    manifest.seed = settings.pipeline.op_cfg.seed;
    manifest.wall_clock_seconds = timer.seconds();
    ndno::io::write_run_manifest(out_dir, manifest);

    if (result.diverged) {
        std::fprintf(stderr, "train-op: loss diverged; last checkpoint retained\n");
        return 3;
    }
    std::printf("train-op: %d epochs on %zu samples in %.1fs\n", result.history.epochs(),
                samples.size(), timer.seconds());
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& input_path,
                const std::string& out_path, const std::string& mode) {
    auto model = read_model_bundle(model_path);
    const bool want_multi = (mode == "multi");
    if (model.multi != want_multi)
        throw ndno::ValidationError("predict: checkpoint was trained for mode '" +
                                    std::string(model.multi ? "multi" : "main") +
                                    "', requested '" + mode + "'");
    auto sample = ndno::io::read_sample(input_path);
    const ndno::Mat pred = ndno::train::predict_mm(model, sample);

    ndno::stress::Sample out = sample;
    out.deformation.setZero();
    if (model.multi)
        out.deformation = pred;
    else
        out.deformation.col(2) = pred.col(0);
    ndno::io::write_sample(out_path, out);
    std::printf("predict: wrote %s (%lld points)\n", out_path.c_str(),
                static_cast<long long>(pred.rows()));
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& dataset_dir,
             const std::string& split, const std::string& out_dir, int bins) {
    Timer timer;
    auto model = read_model_bundle(model_path);
    auto samples = load_split(dataset_dir, split);
    auto metrics = ndno::train::evaluate(model, samples);
    fs::create_directories(out_dir);
    emit_eval_outputs(out_dir, metrics, bins);

    ndno::io::RunManifest manifest;
    manifest.command = "eval";
    manifest.config = {{"split", split}, {"bins", bins}};
    manifest.dataset_sha256 = ndno::io::dataset_hash(dataset_dir);
    manifest.artifacts = {"metrics.json", "per_sample.csv", "max_error_hist.svg"};
    manifest.wall_clock_seconds = timer.seconds();
    ndno::io::write_run_manifest(out_dir, manifest);
    std::printf("eval: %zu samples, relative_l2 %.4f, averaged max error %.4f mm\n",
                samples.size(), metrics.relative_l2, metrics.averaged_max_error);
    return 0;
}

int cmd_report(const std::string& run_dir, const std::string& out_dir, int bins) {
    fs::create_directories(out_dir);
    bool wrote = false;
    const fs::path loss_csv = fs::path(run_dir) / "loss_history.csv";
    if (fs::exists(loss_csv)) {
        // gather the (epoch, term, value) rows back into columns
        const std::string text = ndno::io::read_text_file(loss_csv.string());
        std::vector<std::string> terms;
        std::vector<std::vector<double>> columns;
        std::vector<std::tuple<std::size_t, std::string, double>> rows;
        std::size_t pos = text.find('\n') + 1;
        std::size_t max_epoch = 0;
        while (pos < text.size()) {
            const std::size_t eol = text.find('\n', pos);
            const std::string line = text.substr(pos, eol - pos);
            pos = eol == std::string::npos ? text.size() : eol + 1;
            const std::size_t c1 = line.find(','), c2 = line.find(',', c1 + 1);
            if (c1 == std::string::npos || c2 == std::string::npos) continue;
            const std::size_t epoch = std::stoull(line.substr(0, c1));
            rows.emplace_back(epoch, line.substr(c1 + 1, c2 - c1 - 1),
                              std::stod(line.substr(c2 + 1)));
            max_epoch = std::max(max_epoch, epoch);
        }
        for (const auto& [e, term, v] : rows) {
            auto it = std::find(terms.begin(), terms.end(), term);
            if (it == terms.end()) {
                terms.push_back(term);
                columns.emplace_back(max_epoch + 1, 0.0);
                it = terms.end() - 1;
            }
            columns[static_cast<std::size_t>(it - terms.begin())][e] = v;
        }
        if (!terms.empty()) {
            ndno::Mat values(static_cast<Eigen::Index>(max_epoch + 1),
                             static_cast<Eigen::Index>(terms.size()));
            for (std::size_t c = 0; c < terms.size(); ++c)
                for (std::size_t e = 0; e <= max_epoch; ++e)
                    values(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(c)) =
                        columns[c][e];
            ndno::io::write_text_file(
                (fs::path(out_dir) / "loss_curves.svg").string(),
                ndno::io::svg_line_chart(terms, values, "Training loss", true));
            wrote = true;
        }
    }
    const fs::path per_sample = fs::path(run_dir) / "per_sample.csv";
    if (fs::exists(per_sample)) {
        const std::string text = ndno::io::read_text_file(per_sample.string());
        std::vector<double> values;
        std::size_t pos = text.find('\n') + 1;
        while (pos < text.size()) {
            const std::size_t eol = text.find('\n', pos);
            const std::string line = text.substr(pos, eol - pos);
            pos = eol == std::string::npos ? text.size() : eol + 1;
            const std::size_t c1 = line.find(',');
            if (c1 != std::string::npos) values.push_back(std::stod(line.substr(c1 + 1)));
        }
        if (!values.empty()) {
            ndno::io::write_text_file(
                (fs::path(out_dir) / "max_error_hist.svg").string(),
                ndno::io::svg_histogram(values, bins, "Per-sample max deformation error",
                                        "max error (mm)"));
            wrote = true;
        }
    }
    if (!wrote)
        throw ndno::ValidationError("report: no loss_history.csv or per_sample.csv under " +
                                    run_dir);
    std::printf("report: plots written to %s\n", out_dir.c_str());
    return 0;
}

int cmd_ablate(const std::string& dataset_dir, const std::string& out_dir,
               const RunSettings& settings, double test_fraction) {
    Timer timer;
    auto samples = load_split(dataset_dir, "all");
    auto [tr, te] = ndno::train::random_split(static_cast<int>(samples.size()), test_fraction,
                                              settings.base.seed);
    std::vector<ndno::stress::Sample> train_s, test_s;
    for (int i : tr) train_s.push_back(samples[static_cast<std::size_t>(i)]);
    for (int i : te) test_s.push_back(samples[static_cast<std::size_t>(i)]);

    auto report = ndno::train::ablation_run(train_s, test_s, settings.pipeline);
    fs::create_directories(out_dir);
    json j = {{"ndno", ndno::io::metrics_to_json(report.ndno)},
              {"ablated", ndno::io::metrics_to_json(report.ablated)},
              {"n_train", train_s.size()},
              {"n_test", test_s.size()}};
    ndno::io::write_text_file((fs::path(out_dir) / "ablation.json").string(), j.dump(2) + "\n");

    ndno::io::RunManifest manifest;
    manifest.command = "ablate";
    manifest.config = settings.raw;
    manifest.dataset_sha256 = ndno::io::dataset_hash(dataset_dir);
    manifest.artifacts = {"ablation.json"};
    manifest.seed = settings.base.seed;
    manifest.wall_clock_seconds = timer.seconds();
    ndno::io::write_run_manifest(out_dir, manifest);
    std::printf("ablate: ndno rmse %.5f vs ablated %.5f (mm, first axis) in %.1fs\n",
                report.ndno.rmse[0], report.ablated.rmse[0], timer.seconds());
    return 0;
}

int cmd_generalize(const std::string& dataset_dir, const std::string& cross_dir,
                   const std::string& split, const std::string& out_dir,
                   const RunSettings& settings, double test_fraction) {
    Timer timer;
    auto samples = load_split(dataset_dir, "all");
    std::vector<ndno::stress::Sample> cross;
    if (!cross_dir.empty()) cross = load_split(cross_dir, "all");

    ndno::train::SplitMode mode;
    if (split == "random")
        mode = ndno::train::SplitMode::random;
    else if (split == "dimension")
        mode = ndno::train::SplitMode::dimension;
    else if (split == "cross-family")
        mode = ndno::train::SplitMode::cross_family;
    else
        throw ndno::ValidationError("generalize: unknown split '" + split + "'");

    auto report =
        ndno::train::generalization_run(samples, cross, settings.pipeline, mode, test_fraction);
    fs::create_directories(out_dir);
    json j = {{"split", ndno::train::split_name(report.split)},
              {"n_train", report.n_train},
              {"n_test", report.n_test},
              {"warning_empty_side", report.warning_empty_side},
              {"metrics", ndno::io::metrics_to_json(report.test_metrics)}};
    ndno::io::write_text_file((fs::path(out_dir) / "generalization.json").string(),
                              j.dump(2) + "\n");

    ndno::io::RunManifest manifest;
    manifest.command = "generalize";
    manifest.config = settings.raw;
    manifest.config["split"] = split;
    manifest.dataset_sha256 = ndno::io::dataset_hash(dataset_dir);
    manifest.artifacts = {"generalization.json"};
    manifest.seed = settings.base.seed;
    manifest.wall_clock_seconds = timer.seconds();
    ndno::io::write_run_manifest(out_dir, manifest);
    std::printf("generalize(%s): test rmse %.5f mm over %d samples in %.1fs\n", split.c_str(),
                report.test_metrics.rmse[0], report.n_test, timer.seconds());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"NDNO: diffeomorphic point-cloud mapping + geometric Fourier neural operator "
                 "for residual-stress deformation prediction"};
    app.set_version_flag("--version", ndno::kVersion);
    app.require_subcommand(1);

    std::string out, dataset, config, family = "frame", mode = "main", split = "dimension";
    std::string diffeo_ckpt, model_path, input_path, cross_dir, run_dir;
    std::uint64_t seed = 0;
    bool ablate_flag = false;
    int count = 8, epochs = 0, bins = 30, points = 0;
    double test_fraction = 0.2;

    bool seed_set = false, epochs_set = false;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config, "JSON run configuration");
        cmd->add_option_function<std::uint64_t>(
            "--seed",
            [&seed, &seed_set](const std::uint64_t& v) {
                seed = v;
                seed_set = true;
            },
            "override the config seed");
        cmd->add_option_function<int>(
            "--epochs",
            [&epochs, &epochs_set](const int& v) {
                epochs = v;
                epochs_set = true;
            },
            "override the config epoch count");
    };

    auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    gen->add_option("--out", out, "output dataset directory")->required();
    gen->add_option("--family", family, "frame|cbeam|blank")
        ->check(CLI::IsMember({"frame", "cbeam", "blank"}));
    gen->add_option("--count", count, "number of samples");
    gen->add_option("--points", points, "points per sample (overrides config)");
    add_common(gen);

    auto* td = app.add_subcommand("train-diffeo", "train the mapping network");
    td->add_option("--dataset", dataset, "dataset directory")->required();
    td->add_option("--out", out, "output directory")->required();
    add_common(td);

    auto* to = app.add_subcommand("train-op", "train the neural operator");
    to->add_option("--dataset", dataset, "dataset directory")->required();
    to->add_option("--out", out, "output directory")->required();
    to->add_option("--diffeo", diffeo_ckpt, "trained mapping checkpoint");
    to->add_option("--mode", mode, "main|multi")->check(CLI::IsMember({"main", "multi"}));
    to->add_flag("--ablate", ablate_flag, "replace mapped coordinates with original ones");
    add_common(to);

    auto* pr = app.add_subcommand("predict", "predict deformation for one sample file");
    pr->add_option("--model", model_path, "model.json from train-op")->required();
    pr->add_option("--input", input_path, "input sample file")->required();
    pr->add_option("--out", out, "output predictions file")->required();
    pr->add_option("--mode", mode, "main|multi")->check(CLI::IsMember({"main", "multi"}));

    auto* ev = app.add_subcommand("eval", "evaluate a trained model on a dataset");
    ev->add_option("--model", model_path, "model.json from train-op")->required();
    ev->add_option("--dataset", dataset, "dataset directory")->required();
    ev->add_option("--split", split, "all|train|test")->default_val("all");
    ev->add_option("--out", out, "output directory")->required();
    ev->add_option("--bins", bins, "histogram bins");

    auto* rp = app.add_subcommand("report", "render SVG plots from run outputs");
    rp->add_option("--run", run_dir, "directory with loss_history.csv / per_sample.csv")
        ->required();
    rp->add_option("--out", out, "output directory")->required();
    rp->add_option("--bins", bins, "histogram bins");

    auto* ab = app.add_subcommand("ablate", "paired NDNO-vs-ablated training run");
    ab->add_option("--dataset", dataset, "dataset directory")->required();
    ab->add_option("--out", out, "output directory")->required();
    ab->add_option("--test-fraction", test_fraction, "random test fraction");
    add_common(ab);

    auto* ge = app.add_subcommand("generalize", "generalization split run");
    ge->add_option("--dataset", dataset, "dataset directory")->required();
    ge->add_option("--cross-dataset", cross_dir, "test dataset for cross-family mode");
    ge->add_option("--split", split, "random|dimension|cross-family")
        ->check(CLI::IsMember({"random", "dimension", "cross-family"}));
    ge->add_option("--out", out, "output directory")->required();
    ge->add_option("--test-fraction", test_fraction, "random test fraction");
    add_common(ge);

    CLI11_PARSE(app, argc, argv);

    try {
        RunSettings settings = load_settings(config);
        if (seed_set) {
            settings.base.seed = seed;
            settings.pipeline.diffeo_cfg.seed = seed;
            settings.pipeline.op_cfg.seed = seed;
        }
        if (epochs_set) {
            settings.base.epochs = epochs;
            settings.pipeline.diffeo_cfg.epochs = epochs;
            settings.pipeline.op_cfg.epochs = epochs;
        }
        if (points > 0) settings.data.n_points = points;

        if (gen->parsed()) return cmd_gen(out, family, count, settings.base.seed, settings);
        if (td->parsed()) return cmd_train_diffeo(dataset, out, settings);
        if (to->parsed())
            return cmd_train_op(dataset, out, diffeo_ckpt, mode, ablate_flag, settings);
        if (pr->parsed()) return cmd_predict(model_path, input_path, out, mode);
        if (ev->parsed()) return cmd_eval(model_path, dataset, split, out, bins);
        if (rp->parsed()) return cmd_report(run_dir, out, bins);
        if (ab->parsed()) return cmd_ablate(dataset, out, settings, test_fraction);
        if (ge->parsed())
            return cmd_generalize(dataset, cross_dir, split, out, settings, test_fraction);
    } catch (const ndno::NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 3;
    } catch (const ndno::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
