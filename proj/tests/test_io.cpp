#include <doctest.h>

#include <chrono>
#include <filesystem>

#include "ndno/serialize.hpp"
#include "ndno/sha256.hpp"
#include "ndno/svg.hpp"
#include "ndno/version.hpp"

using namespace ndno;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("ndno_test_" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str(const std::string& name = "") const { return (path / name).string(); }
};

stress::Sample sample_fixture(std::uint64_t seed = 3) {
    stress::DatasetConfig cfg;
    cfg.n_points = 64;
    return stress::make_sample(stress::random_spec(Family::frame, seed, cfg), cfg);
}

}  // namespace

TEST_CASE("sha256 known vectors") {
    CHECK(Sha256::of_string("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(Sha256::of_string("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(Sha256::of_string("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
          "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST_CASE("component spec JSON round trip") {
    stress::DatasetConfig cfg;
    for (auto family : {Family::frame, Family::cbeam, Family::blank}) {
        auto spec = stress::random_spec(family, 17, cfg);
        auto j = io::spec_to_json(spec);
        CHECK(j.at("dims").size() == 3);
        CHECK(j.at("family") == family_name(family));
        auto back = io::spec_from_json(j);
        CHECK(back.family == spec.family);
        CHECK(back.dims == spec.dims);
        CHECK(back.seed == spec.seed);
        CHECK(back.nx == spec.nx);
        CHECK(back.w_wall == spec.w_wall);
        CHECK(back.w_flange == spec.w_flange);
    }
}

TEST_CASE("sample file round trip is bit exact") {
    TempDir tmp;
    auto s = sample_fixture();
    io::write_sample(tmp.str("s.ndno"), s);
    auto back = io::read_sample(tmp.str("s.ndno"));
    CHECK(back.points == s.points);
    CHECK(back.stress == s.stress);
    CHECK(back.deformation == s.deformation);
    CHECK(back.spec.dims == s.spec.dims);
    CHECK(back.profile.a == s.profile.a);
    CHECK(back.profile.b == s.profile.b);
    CHECK_THROWS_AS(io::read_sample(tmp.str("missing.ndno")), ValidationError);
}

TEST_CASE("dataset directory: manifest, split tags, stable hash") {
    TempDir tmp;
    std::vector<stress::Sample> samples;
    for (std::uint64_t i = 0; i < 4; ++i) samples.push_back(sample_fixture(i));
    samples[0].spec.dims = Vec3(612, 248, 40);  // lands in the dimension-test side
    for (int i = 1; i < 4; ++i) samples[static_cast<std::size_t>(i)].spec.dims = Vec3(300, 150, 30);

    io::DatasetManifest m;
    m.family = "frame";
    m.seed = 9;
    io::write_dataset(tmp.str(), samples, m);

    auto manifest = io::read_dataset_manifest(tmp.str());
    REQUIRE(manifest.files.size() == 4);
    CHECK(manifest.files[0].split == "test");
    CHECK(manifest.files[1].split == "train");
    CHECK(manifest.family == "frame");

    auto loaded = io::read_dataset(tmp.str());
    REQUIRE(loaded.size() == 4);
    CHECK(loaded[2].points == samples[2].points);

    const auto h1 = io::dataset_hash(tmp.str());
    CHECK(h1.size() == 64);

    TempDir tmp2;
    io::write_dataset(tmp2.str(), samples, m);
    CHECK(io::dataset_hash(tmp2.str()) == h1);
}

TEST_CASE("diffeo checkpoint round trip") {
    TempDir tmp;
    diffeo::DiffeoArch arch;
    arch.width = 16;
    arch.heads = 4;
    arch.ffn_width = 24;
    arch.proj_hidden = 12;
    arch.k = 5;
    auto p = diffeo::DiffeoParams::init(arch, 77);
    p.proj_w2.setConstant(0.25);
    io::write_diffeo_checkpoint(tmp.str("d.ckpt"), p);
    auto back = io::read_diffeo_checkpoint(tmp.str("d.ckpt"));
    CHECK(back.arch.width == 16);
    CHECK(back.arch.k == 5);
    auto b1 = diffeo::param_blocks(p);
    auto b2 = diffeo::param_blocks(back);
    for (std::size_t i = 0; i < b1.size(); ++i) CHECK(*b1[i].value == *b2[i].value);
}

TEST_CASE("operator checkpoint round trip with interleaved complex blocks") {
    TempDir tmp;
    fno::OperatorArch arch;
    arch.modes = {2, 1, 1};
    arch.width = 6;
    arch.layers = 2;
    arch.c_out = 3;
    auto p = fno::OperatorParams::init(arch, 5);
    io::write_operator_checkpoint(tmp.str("o.ckpt"), p);
    auto back = io::read_operator_checkpoint(tmp.str("o.ckpt"));
    CHECK(back.arch.modes == arch.modes);
    CHECK(back.arch.c_out == 3);
    auto b1 = fno::param_blocks(p);
    auto b2 = fno::param_blocks(back);
    for (std::size_t i = 0; i < b1.size(); ++i) CHECK(*b1[i].value == *b2[i].value);
}

TEST_CASE("train config JSON honors Table-1 defaults and overrides") {
    train::TrainConfig cfg;
    auto j = io::config_to_json(cfg);
    CHECK(j.at("batch_size") == 4);
    CHECK(j.at("learning_rate") == 1e-2);
    CHECK(j.at("epochs") == 500);
    CHECK(j.at("beta1") == 1e4);
    CHECK(j.at("beta2") == 1e-3);
    CHECK(j.at("beta3") == 1e5);

    io::json overrides = {{"epochs", 7}, {"seed", 42}};
    auto back = io::config_from_json(overrides);
    CHECK(back.epochs == 7);
    CHECK(back.seed == 42);
    CHECK(back.learning_rate == 1e-2);  // untouched defaults survive
    io::json bad = {{"epochs", 0}};
    CHECK_THROWS_AS(io::config_from_json(bad), ValidationError);
}

TEST_CASE("loss history CSV and metrics files") {
    TempDir tmp;
    train::LossHistory h;
    h.terms = {"l_sim", "total"};
    h.values.resize(2, 2);
    h.values << 1.0, 2.0, 0.5, 1.5;
    io::write_loss_history_csv(tmp.str("loss.csv"), h);
    const auto csv = io::read_text_file(tmp.str("loss.csv"));
    CHECK(csv.find("epoch,term,value") == 0);
    CHECK(csv.find("0,l_sim,1") != std::string::npos);
    CHECK(csv.find("1,total,1.5") != std::string::npos);

    train::Metrics m;
    m.averaged_max_error = 0.5;
    m.rmse = Vec::Ones(3) * 0.25;
    m.relative_l2 = 0.1;
    m.per_sample_max = {0.4, 0.6};
    io::write_metrics(tmp.str("m.json"), tmp.str("m.csv"), m);
    auto j = io::json::parse(io::read_text_file(tmp.str("m.json")));
    CHECK(j.at("averaged_max_error_mm") == 0.5);
    CHECK(j.at("rmse_mm").size() == 3);
    CHECK(j.at("relative_l2") == 0.1);
    const auto mcsv = io::read_text_file(tmp.str("m.csv"));
    CHECK(mcsv.find("sample,max_error_mm") == 0);
}

TEST_CASE("svg plots emit well-formed documents") {
    auto hist = io::svg_histogram({0.1, 0.2, 0.2, 0.3, 0.9}, 5, "max error", "mm");
    CHECK(hist.find("<svg") == 0);
    CHECK(hist.find("<rect") != std::string::npos);
    CHECK(hist.rfind("</svg>\n") == hist.size() - 7);

    Mat vals(4, 2);
    vals << 1.0, 2.0, 0.9, 1.8, 0.7, 1.5, 0.6, 1.2;
    auto chart = io::svg_line_chart({"a", "b"}, vals, "losses", true);
    CHECK(chart.find("<polyline") != std::string::npos);
    CHECK_THROWS_AS(io::svg_histogram({}, 5, "t", "x"), ValidationError);
    CHECK_THROWS_AS(io::svg_line_chart({"a"}, vals, "t", false), ValidationError);
}

TEST_CASE("run manifest records command, hash and version") {
    TempDir tmp;
    io::RunManifest m;
    m.command = "train-op";
    m.config = {{"epochs", 3}};
    m.dataset_sha256 = std::string(64, 'a');
    m.artifacts = {"op.ckpt", "loss.csv"};
    m.seed = 11;
    m.wall_clock_seconds = 1.5;
    io::write_run_manifest(tmp.str(), m);
    auto j = io::json::parse(io::read_text_file(tmp.str("manifest.json")));
    CHECK(j.at("command") == "train-op");
    CHECK(j.at("dataset_sha256") == std::string(64, 'a'));
    CHECK(j.at("artifacts").size() == 2);
    CHECK(j.at("version") == kVersion);
}
