#include "ndno/serialize.hpp"

#include <filesystem>
#include <fstream>

#include "ndno/sha256.hpp"
#include "ndno/version.hpp"

namespace ndno::io {

namespace fs = std::filesystem;

namespace {

void write_raw(std::ofstream& out, const double* data, std::size_t count) {
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(count * sizeof(double)));
}

void read_raw(std::ifstream& in, double* data, std::size_t count) {
    in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw ValidationError("read_raw: truncated file");
}

void write_header(std::ofstream& out, const char magic[8], const json& header) {
    out.write(magic, 8);
    const std::string h = header.dump();
    const std::uint64_t len = h.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
}

json read_header(std::ifstream& in, const char magic[8], const std::string& what) {
    char got[8];
    in.read(got, 8);
    if (!in || std::string(got, 8) != std::string(magic, 8))
        throw ValidationError(what + ": bad magic");
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    if (!in || len > (1ull << 30)) throw ValidationError(what + ": bad header length");
    std::string h(len, '\0');
    in.read(h.data(), static_cast<std::streamsize>(len));
    if (!in) throw ValidationError(what + ": truncated header");
    return json::parse(h);
}

// generic block checkpoint body
struct NamedBlock {
    std::string name;
    const Mat* value;
    bool complex_pair = false;  // stored interleaved with the next block (im part)
    const Mat* im = nullptr;
};

void write_blocks(std::ofstream& out, const char magic[8], json header,
                  const std::vector<NamedBlock>& blocks) {
    json list = json::array();
    for (const auto& b : blocks) {
        list.push_back({{"name", b.name},
                        {"rows", b.value->rows()},
                        {"cols", b.value->cols()},
                        {"kind", b.complex_pair ? "complex" : "real"}});
    }
    header["blocks"] = list;
    header["dtype"] = "f64le";
    write_header(out, magic, header);
    for (const auto& b : blocks) {
        if (!b.complex_pair) {
            // Eigen default storage is column-major; write column-major
            write_raw(out, b.value->data(), static_cast<std::size_t>(b.value->size()));
        } else {
            const Mat& re = *b.value;
            const Mat& im = *b.im;
            std::vector<double> inter(static_cast<std::size_t>(re.size()) * 2);
            const double* pr = re.data();
            const double* pi = im.data();
            for (Eigen::Index i = 0; i < re.size(); ++i) {
                inter[static_cast<std::size_t>(2 * i)] = pr[i];
                inter[static_cast<std::size_t>(2 * i + 1)] = pi[i];
            }
            write_raw(out, inter.data(), inter.size());
        }
    }
}

void read_block(std::ifstream& in, const json& meta, Mat& re, Mat* im) {
    const Eigen::Index rows = meta.at("rows"), cols = meta.at("cols");
    re.resize(rows, cols);
    if (meta.at("kind") == "real") {
        read_raw(in, re.data(), static_cast<std::size_t>(re.size()));
    } else {
        if (!im) throw ValidationError("checkpoint: unexpected complex block " +
                                       meta.at("name").get<std::string>());
        im->resize(rows, cols);
        std::vector<double> inter(static_cast<std::size_t>(re.size()) * 2);
        read_raw(in, inter.data(), inter.size());
        for (Eigen::Index i = 0; i < re.size(); ++i) {
            re.data()[i] = inter[static_cast<std::size_t>(2 * i)];
            im->data()[i] = inter[static_cast<std::size_t>(2 * i + 1)];
        }
    }
}

}  // namespace

json spec_to_json(const ComponentSpec& spec) {
    json feature = json::object();
    switch (spec.family) {
        case Family::frame:
            feature = {{"nx", spec.nx},
                       {"ny", spec.ny},
                       {"w_wall", spec.w_wall},
                       {"w_floor", spec.w_floor}};
            break;
        case Family::cbeam:
            feature = {{"w_flange", spec.w_flange}, {"w_web", spec.w_web}};
            break;
        case Family::blank:
            break;
    }
    return {{"family", family_name(spec.family)},
            {"dims", {spec.dims[0], spec.dims[1], spec.dims[2]}},
            {"feature_params", feature},
            {"seed", spec.seed}};
}

ComponentSpec spec_from_json(const json& j) {
    ComponentSpec s;
    s.family = family_from_name(j.at("family"));
    const auto& dims = j.at("dims");
    if (!dims.is_array() || dims.size() != 3)
        throw ValidationError("spec_from_json: dims must be a 3-element array");
    for (int c = 0; c < 3; ++c) s.dims[c] = dims[static_cast<std::size_t>(c)];
    s.seed = j.at("seed");
    const auto& f = j.at("feature_params");
    switch (s.family) {
        case Family::frame:
            s.nx = f.at("nx");
            s.ny = f.at("ny");
            s.w_wall = f.at("w_wall");
            s.w_floor = f.at("w_floor");
            break;
        case Family::cbeam:
            s.w_flange = f.at("w_flange");
            s.w_web = f.at("w_web");
            break;
        case Family::blank:
            break;
    }
    s.validate();
    return s;
}

void write_sample(const std::string& path, const stress::Sample& sample) {
    const Eigen::Index n = sample.points.rows();
    json header = {{"spec", spec_to_json(sample.spec)},
                   {"channels", {"points", "sigma_xx", "sigma_yy", "u_x", "u_y", "u_z"}},
                   {"n_points", n},
                   {"dtype", "f64le"},
                   {"stress_profile",
                    {{"a", std::vector<double>(sample.profile.a.begin(), sample.profile.a.end())},
                     {"b", std::vector<double>(sample.profile.b.begin(), sample.profile.b.end())},
                     {"seed", sample.profile.seed}}}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("write_sample: cannot open " + path);
    write_header(out, "NDNOSMP1", header);

    // points row-interleaved (x, y, z per point)
    std::vector<double> pts(static_cast<std::size_t>(3 * n));
    for (Eigen::Index i = 0; i < n; ++i)
        for (int c = 0; c < 3; ++c) pts[static_cast<std::size_t>(3 * i + c)] = sample.points(i, c);
    write_raw(out, pts.data(), pts.size());

    std::vector<double> col(static_cast<std::size_t>(n));
    auto write_col = [&](const auto& matcol) {
        for (Eigen::Index i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = matcol(i);
        write_raw(out, col.data(), col.size());
    };
    write_col(sample.stress.col(0));
    write_col(sample.stress.col(1));
    write_col(sample.deformation.col(0));
    write_col(sample.deformation.col(1));
    write_col(sample.deformation.col(2));
    if (!out) throw ValidationError("write_sample: write failed for " + path);
}

stress::Sample read_sample(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("read_sample: cannot open " + path);
    const json header = read_header(in, "NDNOSMP1", "read_sample");
    if (header.at("dtype") != "f64le") throw ValidationError("read_sample: unsupported dtype");

    stress::Sample s;
    s.spec = spec_from_json(header.at("spec"));
    const Eigen::Index n = header.at("n_points");
    if (n < 4) throw ValidationError("read_sample: invalid point count");
    const auto& prof = header.at("stress_profile");
    const std::vector<double> a = prof.at("a"), b = prof.at("b");
    s.profile.a = Eigen::Map<const Vec>(a.data(), static_cast<Eigen::Index>(a.size()));
    s.profile.b = Eigen::Map<const Vec>(b.data(), static_cast<Eigen::Index>(b.size()));
    s.profile.seed = prof.at("seed");

    std::vector<double> pts(static_cast<std::size_t>(3 * n));
    read_raw(in, pts.data(), pts.size());
    s.points.resize(n, 3);
    for (Eigen::Index i = 0; i < n; ++i)
        for (int c = 0; c < 3; ++c) s.points(i, c) = pts[static_cast<std::size_t>(3 * i + c)];

    std::vector<double> col(static_cast<std::size_t>(n));
    auto read_col = [&](auto&& assign) {
        read_raw(in, col.data(), col.size());
        for (Eigen::Index i = 0; i < n; ++i) assign(i, col[static_cast<std::size_t>(i)]);
    };
    s.stress.resize(n, 2);
    s.deformation.resize(n, 3);
    read_col([&](Eigen::Index i, double v) { s.stress(i, 0) = v; });
    read_col([&](Eigen::Index i, double v) { s.stress(i, 1) = v; });
    read_col([&](Eigen::Index i, double v) { s.deformation(i, 0) = v; });
    read_col([&](Eigen::Index i, double v) { s.deformation(i, 1) = v; });
    read_col([&](Eigen::Index i, double v) { s.deformation(i, 2) = v; });
    return s;
}

void write_dataset(const std::string& dir, const std::vector<stress::Sample>& samples,
                   DatasetManifest manifest) {
    fs::create_directories(dir);
    manifest.files.clear();
    char name[64];
    for (std::size_t i = 0; i < samples.size(); ++i) {
        std::snprintf(name, sizeof(name), "sample_%05zu.ndno", i);
        write_sample((fs::path(dir) / name).string(), samples[i]);
        const auto& d = samples[i].spec.dims;
        DatasetEntry e;
        e.path = name;
        if (samples[i].spec.family == Family::frame)
            e.split = (d[0] > 400.0 && d[1] > 200.0) ? "test" : "train";
        manifest.files.push_back(std::move(e));
    }
    json j;
    j["files"] = json::array();
    for (const auto& e : manifest.files)
        j["files"].push_back({{"path", e.path}, {"split", e.split}});
    j["family"] = manifest.family;
    j["seed"] = manifest.seed;
    j["version"] = kVersion;
    if (!manifest.extra.is_null()) j["run"] = manifest.extra;
    write_text_file((fs::path(dir) / "manifest.json").string(), j.dump(2) + "\n");
}

DatasetManifest read_dataset_manifest(const std::string& dir) {
    const json j = json::parse(read_text_file((fs::path(dir) / "manifest.json").string()));
    DatasetManifest m;
    for (const auto& e : j.at("files"))
        m.files.push_back({e.at("path"), e.value("split", std::string())});
    m.family = j.value("family", std::string());
    m.seed = j.value("seed", std::uint64_t(0));
    if (j.contains("run")) m.extra = j.at("run");
    return m;
}

std::vector<stress::Sample> read_dataset(const std::string& dir) {
    const auto manifest = read_dataset_manifest(dir);
    std::vector<stress::Sample> out;
    out.reserve(manifest.files.size());
    for (const auto& e : manifest.files)
        out.push_back(read_sample((fs::path(dir) / e.path).string()));
    return out;
}

std::string dataset_hash(const std::string& dir) {
    const auto manifest = read_dataset_manifest(dir);
    Sha256 h;
    for (const auto& e : manifest.files) {
        const std::string contents = read_text_file((fs::path(dir) / e.path).string());
        h.update(contents.data(), contents.size());
    }
    return h.hex_digest();
}

void write_diffeo_checkpoint(const std::string& path, const diffeo::DiffeoParams& params) {
    auto& mp = const_cast<diffeo::DiffeoParams&>(params);
    std::vector<NamedBlock> blocks;
    for (const auto& b : diffeo::param_blocks(mp)) blocks.push_back({b.name, b.value, false, nullptr});
    json header = {{"arch",
                    {{"edge_layers", params.arch.edge_layers},
                     {"width", params.arch.width},
                     {"heads", params.arch.heads},
                     {"ffn_width", params.arch.ffn_width},
                     {"proj_hidden", params.arch.proj_hidden},
                     {"k", params.arch.k}}}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("write_diffeo_checkpoint: cannot open " + path);
    write_blocks(out, "NDNODIF1", header, blocks);
}

diffeo::DiffeoParams read_diffeo_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("read_diffeo_checkpoint: cannot open " + path);
    const json header = read_header(in, "NDNODIF1", "read_diffeo_checkpoint");
    const auto& a = header.at("arch");
    diffeo::DiffeoArch arch;
    arch.edge_layers = a.at("edge_layers");
    arch.width = a.at("width");
    arch.heads = a.at("heads");
    arch.ffn_width = a.at("ffn_width");
    arch.proj_hidden = a.at("proj_hidden");
    arch.k = a.at("k");
    diffeo::DiffeoParams p = diffeo::DiffeoParams::init(arch, 0);
    auto blocks = diffeo::param_blocks(p);
    const auto& metas = header.at("blocks");
    if (metas.size() != blocks.size())
        throw ValidationError("read_diffeo_checkpoint: block count mismatch");
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (metas[i].at("name") != blocks[i].name)
            throw ValidationError("read_diffeo_checkpoint: unexpected block order");
        read_block(in, metas[i], *blocks[i].value, nullptr);
    }
    return p;
}

void write_operator_checkpoint(const std::string& path, const fno::OperatorParams& params) {
    std::vector<NamedBlock> blocks;
    auto& mp = const_cast<fno::OperatorParams&>(params);
    blocks.push_back({"lift_w", &mp.lift_w, false, nullptr});
    blocks.push_back({"lift_b", &mp.lift_b, false, nullptr});
    for (std::size_t t = 0; t < mp.layers.size(); ++t) {
        const std::string tag = "layer" + std::to_string(t) + "_";
        blocks.push_back({tag + "w", &mp.layers[t].w, false, nullptr});
        blocks.push_back({tag + "b", &mp.layers[t].b, false, nullptr});
        blocks.push_back({tag + "r0", &mp.layers[t].r0, false, nullptr});
        blocks.push_back({tag + "r", &mp.layers[t].r_re, true, &mp.layers[t].r_im});
    }
    blocks.push_back({"proj_w1", &mp.proj_w1, false, nullptr});
    blocks.push_back({"proj_b1", &mp.proj_b1, false, nullptr});
    blocks.push_back({"proj_w2", &mp.proj_w2, false, nullptr});
    blocks.push_back({"proj_b2", &mp.proj_b2, false, nullptr});

    json header = {{"modes", {params.arch.modes[0], params.arch.modes[1], params.arch.modes[2]}},
                   {"layers", params.arch.layers},
                   {"width", params.arch.width},
                   {"c_in", params.arch.c_in},
                   {"c_out", params.arch.c_out},
                   {"proj_hidden", params.arch.proj_hidden}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("write_operator_checkpoint: cannot open " + path);
    write_blocks(out, "NDNOOPR1", header, blocks);
}

fno::OperatorParams read_operator_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("read_operator_checkpoint: cannot open " + path);
    const json header = read_header(in, "NDNOOPR1", "read_operator_checkpoint");
    fno::OperatorArch arch;
    const auto& modes = header.at("modes");
    arch.modes = {modes[0], modes[1], modes[2]};
    arch.layers = header.at("layers");
    arch.width = header.at("width");
    arch.c_in = header.at("c_in");
    arch.c_out = header.at("c_out");
    arch.proj_hidden = header.at("proj_hidden");
    fno::OperatorParams p = fno::OperatorParams::init(arch, 0);

    const auto& metas = header.at("blocks");
    std::size_t mi = 0;
    auto next = [&](const std::string& name, Mat& re, Mat* im) {
        if (mi >= metas.size() || metas[mi].at("name") != name)
            throw ValidationError("read_operator_checkpoint: unexpected block order at " + name);
        read_block(in, metas[mi], re, im);
        ++mi;
    };
    next("lift_w", p.lift_w, nullptr);
    next("lift_b", p.lift_b, nullptr);
    for (std::size_t t = 0; t < p.layers.size(); ++t) {
        const std::string tag = "layer" + std::to_string(t) + "_";
        next(tag + "w", p.layers[t].w, nullptr);
        next(tag + "b", p.layers[t].b, nullptr);
        next(tag + "r0", p.layers[t].r0, nullptr);
        next(tag + "r", p.layers[t].r_re, &p.layers[t].r_im);
    }
    next("proj_w1", p.proj_w1, nullptr);
    next("proj_b1", p.proj_b1, nullptr);
    next("proj_w2", p.proj_w2, nullptr);
    next("proj_b2", p.proj_b2, nullptr);
    return p;
}

json config_to_json(const train::TrainConfig& cfg) {
    return {{"batch_size", cfg.batch_size},
            {"learning_rate", cfg.learning_rate},
            {"epochs", cfg.epochs},
            {"beta1", cfg.beta1},
            {"beta2", cfg.beta2},
            {"beta3", cfg.beta3},
            {"adam_beta_m", cfg.adam_beta_m},
            {"adam_beta_v", cfg.adam_beta_v},
            {"adam_eps", cfg.adam_eps},
            {"seed", cfg.seed},
            {"lr_min", cfg.lr_min}};
}

train::TrainConfig config_from_json(const json& j) {
    train::TrainConfig cfg;
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.beta1 = j.value("beta1", cfg.beta1);
    cfg.beta2 = j.value("beta2", cfg.beta2);
    cfg.beta3 = j.value("beta3", cfg.beta3);
    cfg.adam_beta_m = j.value("adam_beta_m", cfg.adam_beta_m);
    cfg.adam_beta_v = j.value("adam_beta_v", cfg.adam_beta_v);
    cfg.adam_eps = j.value("adam_eps", cfg.adam_eps);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.lr_min = j.value("lr_min", cfg.lr_min);
    cfg.validate();
    return cfg;
}

void write_loss_history_csv(const std::string& path, const train::LossHistory& history) {
    std::string out = "epoch,term,value\n";
    char line[128];
    for (Eigen::Index e = 0; e < history.values.rows(); ++e) {
        for (std::size_t t = 0; t < history.terms.size(); ++t) {
            std::snprintf(line, sizeof(line), "%lld,%s,%.17g\n", static_cast<long long>(e),
                          history.terms[t].c_str(),
                          history.values(e, static_cast<Eigen::Index>(t)));
            out += line;
        }
    }
    write_text_file(path, out);
}

json metrics_to_json(const train::Metrics& metrics) {
    std::vector<double> rmse(metrics.rmse.begin(), metrics.rmse.end());
    return {{"averaged_max_error_mm", metrics.averaged_max_error},
            {"rmse_mm", rmse},
            {"relative_l2", metrics.relative_l2},
            {"n_samples", metrics.per_sample_max.size()}};
}

void write_metrics(const std::string& json_path, const std::string& csv_path,
                   const train::Metrics& metrics) {
    write_text_file(json_path, metrics_to_json(metrics).dump(2) + "\n");
    std::string csv = "sample,max_error_mm\n";
    char line[64];
    for (std::size_t i = 0; i < metrics.per_sample_max.size(); ++i) {
        std::snprintf(line, sizeof(line), "%zu,%.17g\n", i, metrics.per_sample_max[i]);
        csv += line;
    }
    write_text_file(csv_path, csv);
}

void write_run_manifest(const std::string& dir, const RunManifest& manifest) {
    json j = {{"command", manifest.command},
              {"config", manifest.config},
              {"dataset_sha256", manifest.dataset_sha256},
              {"artifacts", manifest.artifacts},
              {"seed", manifest.seed},
              {"wall_clock_seconds", manifest.wall_clock_seconds},
              {"version", kVersion}};
    write_text_file((fs::path(dir) / "manifest.json").string(), j.dump(2) + "\n");
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("write_text_file: cannot open " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw ValidationError("write_text_file: write failed for " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("read_text_file: cannot open " + path);
    std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return s;
}

}  // namespace ndno::io
