#include <doctest.h>

#include <algorithm>
#include <set>

#include "ndno/geomgen.hpp"
#include "ndno/rng.hpp"

using namespace ndno;

namespace {

ComponentSpec blank_spec(double lx, double ly, double lz, std::uint64_t seed = 1) {
    ComponentSpec s;
    s.family = Family::blank;
    s.dims = Vec3(lx, ly, lz);
    s.seed = seed;
    return s;
}

ComponentSpec frame_spec(double lx = 400, double ly = 200, double lz = 40,
                         std::uint64_t seed = 1) {
    ComponentSpec s;
    s.family = Family::frame;
    s.dims = Vec3(lx, ly, lz);
    s.nx = 2;
    s.ny = 2;
    s.w_wall = 10.0;
    s.w_floor = 8.0;
    s.seed = seed;
    return s;
}

PointCloud random_cloud(Eigen::Index n, std::uint64_t seed) {
    Rng rng(seed);
    PointCloud c;
    c.points.resize(n, 3);
    for (Eigen::Index i = 0; i < n; ++i)
        for (int d = 0; d < 3; ++d) c.points(i, d) = rng.uniform(-0.5, 0.5);
    return c;
}

template <class F>
bool throws_mentioning(F&& f, const std::string& needle) {
    try {
        f();
    } catch (const ValidationError& e) {
        return std::string(e.what()).find(needle) != std::string::npos;
    }
    return false;
}

// independent O(N^2) nearest-neighbor oracle
KnnGraph brute_force_knn(const Mat& f, int k) {
    const Eigen::Index n = f.rows();
    KnnGraph g;
    g.k = k;
    g.neighbors.resize(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
        std::vector<std::pair<double, Eigen::Index>> all;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            all.emplace_back((f.row(i) - f.row(j)).squaredNorm(), j);
        }
        std::sort(all.begin(), all.end());
        for (int c = 0; c < k; ++c) g.neighbors(i, c) = all[static_cast<std::size_t>(c)].second;
    }
    return g;
}

}  // namespace

TEST_CASE("sample_component: blank box stays inside its dims") {
    auto cloud = geom::sample_component(blank_spec(100, 50, 20), 64);
    REQUIRE(cloud.size() == 64);
    for (Eigen::Index i = 0; i < cloud.size(); ++i) {
        CHECK(cloud.points(i, 0) >= 0.0);
        CHECK(cloud.points(i, 0) <= 100.0);
        CHECK(cloud.points(i, 1) >= 0.0);
        CHECK(cloud.points(i, 1) <= 50.0);
        CHECK(cloud.points(i, 2) >= 0.0);
        CHECK(cloud.points(i, 2) <= 20.0);
    }
    cloud.validate();
}

TEST_CASE("sample_component: no point lands in a pocket void") {
    auto spec = frame_spec();
    auto cloud = geom::sample_component(spec, 256);
    for (Eigen::Index i = 0; i < cloud.size(); ++i) {
        const Vec3 p = cloud.points.row(i).transpose();
        CHECK(spec.inside(p));
        // independent void re-check: above the floor and over a pocket cell is void
        if (p[2] > spec.w_floor) {
            const double px = spec.pocket_pitch_x(), py = spec.pocket_pitch_y();
            bool in_pocket_x = false, in_pocket_y = false;
            for (int c = 0; c < spec.nx; ++c) {
                const double lo = spec.w_wall + c * (spec.w_wall + px);
                if (p[0] > lo && p[0] < lo + px) in_pocket_x = true;
            }
            for (int c = 0; c < spec.ny; ++c) {
                const double lo = spec.w_wall + c * (spec.w_wall + py);
                if (p[1] > lo && p[1] < lo + py) in_pocket_y = true;
            }
            CHECK_FALSE((in_pocket_x && in_pocket_y));
        }
    }
}

TEST_CASE("sample_component: deterministic in (seed, n)") {
    auto a = geom::sample_component(frame_spec(), 128);
    auto b = geom::sample_component(frame_spec(), 128);
    CHECK(a.points == b.points);
    auto c = geom::sample_component(frame_spec(400, 200, 40, 2), 128);
    CHECK(a.points != c.points);
}

TEST_CASE("sample_component: rejects bad inputs naming the field") {
    CHECK_THROWS_AS(geom::sample_component(blank_spec(100, 50, 20), 32), ValidationError);
    auto bad = frame_spec();
    bad.w_floor = 50.0;  // thicker than Lz = 40
    CHECK(throws_mentioning([&] { geom::sample_component(bad, 128); }, "w_floor"));
    auto bad2 = frame_spec();
    bad2.w_wall = 200.0;  // walls consume the whole footprint
    CHECK(throws_mentioning([&] { geom::sample_component(bad2, 128); }, "w_wall"));
}

TEST_CASE("reference_blank matches the blank sampling of the same dims") {
    auto frame = frame_spec();
    auto ref = geom::reference_blank(frame, 128);
    auto direct = geom::sample_component(frame.blank_of_same_dims(), 128);
    CHECK(ref.points == direct.points);

    // blank maps to itself
    auto b = blank_spec(100, 50, 20, 9);
    CHECK(geom::reference_blank(b, 64).points == geom::sample_component(b, 64).points);

    // features do not matter, dims and seed do
    auto f2 = frame_spec();
    f2.nx = 3;
    f2.w_wall = 6.0;
    CHECK(geom::reference_blank(f2, 128).points == ref.points);
}

TEST_CASE("normalize_coords: box scales into [-0.5, 0.5]^3") {
    PointCloud c;
    c.points.resize(8, 3);
    int r = 0;
    for (double x : {0.0, 400.0})
        for (double y : {0.0, 200.0})
            for (double z : {0.0, 40.0}) c.points.row(r++) = Eigen::RowVector3d(x, y, z);
    auto [n, tf] = geom::normalize_coords(c, Vec3(400, 200, 40));
    CHECK(n.points.minCoeff() == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(n.points.maxCoeff() == doctest::Approx(0.5).epsilon(1e-15));

    // inverse restores the original to 1e-12 relative
    PointMat back = tf.invert(n.points);
    CHECK((back - c.points).cwiseAbs().maxCoeff() < 1e-12 * 400.0);
}

TEST_CASE("normalize_coords: unit medians on centered cloud is the identity") {
    auto c = random_cloud(32, 5);
    auto [n1, tf1] = geom::normalize_coords(c, Vec3(1, 1, 1));
    auto [n2, tf2] = geom::normalize_coords(n1, Vec3(1, 1, 1));
    CHECK((n2.points - n1.points).cwiseAbs().maxCoeff() < 1e-15);
    CHECK_THROWS_AS(geom::normalize_coords(c, Vec3(0, 1, 1)), ValidationError);
    CHECK_THROWS_AS(geom::normalize_coords(c, Vec3(1, -2, 1)), ValidationError);
}

TEST_CASE("normalize_coords leaves channels untouched") {
    auto c = random_cloud(16, 7);
    c.set_channel("sigma_xx", Vec::Ones(16) * 3.0);
    auto [n, tf] = geom::normalize_coords(c, Vec3(2, 2, 2));
    CHECK(n.channel("sigma_xx") == c.channel("sigma_xx"));
}

TEST_CASE("median_dims: lower median rule") {
    std::vector<ComponentSpec> specs = {blank_spec(200, 10, 10), blank_spec(300, 20, 30),
                                        blank_spec(400, 30, 20)};
    CHECK(geom::median_dims(specs)[0] == 300.0);
    CHECK(geom::median_dims({blank_spec(123, 45, 6)}) == Vec3(123, 45, 6));
    CHECK(geom::median_dims({blank_spec(200, 1, 1), blank_spec(400, 2, 2)})[0] == 200.0);
    std::vector<ComponentSpec> mixed = {blank_spec(1, 1, 1), frame_spec()};
    CHECK_THROWS_AS(geom::median_dims(mixed), ValidationError);
    CHECK_THROWS_AS(geom::median_dims({}), ValidationError);
}

TEST_CASE("knn_graph: collinear tie breaks to the lower index") {
    PointCloud c;
    c.points.resize(3, 3);
    c.points << 0, 0, 0, 1, 0, 0, 2, 0, 0;
    auto g = geom::knn_graph(c, 1);
    CHECK(g.neighbors(1, 0) == 0);  // p0 and p2 tie at distance 1
    CHECK(g.neighbors(0, 0) == 1);
    CHECK(g.neighbors(2, 0) == 1);
}

TEST_CASE("knn_graph: unit square picks edge-adjacent corners") {
    PointCloud c;
    c.points.resize(4, 3);
    c.points << 0, 0, 0, 1, 0, 0, 1, 1, 0, 0, 1, 0;
    auto g = geom::knn_graph(c, 2);
    for (Eigen::Index i = 0; i < 4; ++i) {
        std::set<Eigen::Index> got{g.neighbors(i, 0), g.neighbors(i, 1)};
        std::set<Eigen::Index> want{(i + 1) % 4, (i + 3) % 4};  // diagonal excluded
        CHECK(got == want);
    }
}

TEST_CASE("knn_graph equals the brute-force oracle") {
    auto c = random_cloud(257, 11);
    for (int k : {1, 5, 16}) {
        auto fast = geom::knn_graph(c, k);
        auto slow = brute_force_knn(c.points, k);
        CHECK(fast.neighbors == slow.neighbors);
    }
    CHECK_THROWS_AS(geom::knn_graph(c, 257), ValidationError);
    CHECK_THROWS_AS(geom::knn_graph(c, 0), ValidationError);
}

TEST_CASE("farthest_point_sample: full selection is a permutation") {
    auto c = random_cloud(50, 13);
    auto out = geom::farthest_point_sample(c, 50);
    std::set<double> seen;
    for (Eigen::Index i = 0; i < 50; ++i) seen.insert(out.points(i, 0));
    CHECK(seen.size() == 50);
}

TEST_CASE("farthest_point_sample: segment picks midpoint then an endpoint") {
    PointCloud c;
    c.points.resize(3, 3);
    c.points << 0, 0, 0, 2, 0, 0, 1, 0, 0;  // endpoints then midpoint
    auto out = geom::farthest_point_sample(c, 2);
    CHECK(out.points.row(0) == Eigen::RowVector3d(1, 0, 0));  // nearest the centroid
    CHECK(out.points(1, 0) == 0.0);                           // tie broken to lower index
    CHECK_THROWS_AS(geom::farthest_point_sample(c, 4), ValidationError);
}

TEST_CASE("farthest_point_sample spreads at least as well as random subsets") {
    auto c = random_cloud(120, 17);
    const Eigen::Index n = 12;
    auto fps = geom::farthest_point_sample(c, n);
    auto min_pair = [](const PointMat& p) {
        double best = 1e300;
        for (Eigen::Index i = 0; i < p.rows(); ++i)
            for (Eigen::Index j = i + 1; j < p.rows(); ++j)
                best = std::min(best, (p.row(i) - p.row(j)).norm());
        return best;
    };
    const double fps_dist = min_pair(fps.points);
    Rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        std::set<Eigen::Index> pick;
        while (static_cast<Eigen::Index>(pick.size()) < n)
            pick.insert(rng.uniform_int(0, c.size() - 1));
        PointMat sub(n, 3);
        Eigen::Index r = 0;
        for (auto i : pick) sub.row(r++) = c.points.row(i);
        CHECK(fps_dist >= min_pair(sub));
    }
}

TEST_CASE("PointCloud validation catches bad channel lengths and duplicates") {
    auto c = random_cloud(8, 3);
    c.validate();
    CHECK_THROWS_AS(c.set_channel("bad", Vec::Zero(5)), ValidationError);
    c.points.row(3) = c.points.row(6);
    CHECK_THROWS_AS(c.validate(), ValidationError);
    PointCloud tiny;
    tiny.points.resize(3, 3);
    tiny.points.setRandom();
    CHECK_THROWS_AS(tiny.validate(), ValidationError);
}

TEST_CASE("cbeam sampling respects the C profile") {
    ComponentSpec s;
    s.family = Family::cbeam;
    s.dims = Vec3(300, 120, 60);
    s.w_flange = 12.0;
    s.w_web = 15.0;
    s.seed = 3;
    auto cloud = geom::sample_component(s, 200);
    for (Eigen::Index i = 0; i < cloud.size(); ++i) {
        const Vec3 p = cloud.points.row(i).transpose();
        const bool in_web = p[1] <= s.w_web;
        const bool in_flange = p[2] <= s.w_flange || p[2] >= s.dims[2] - s.w_flange;
        CHECK((in_web || in_flange));
    }
}
