#include "ndno/geomgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ndno/rng.hpp"

namespace ndno::geom {

namespace {

// Jittered lattice candidates kept by the inside test. The lattice is refined
// until at least `target` candidates survive.
PointMat lattice_candidates(const ComponentSpec& spec, Eigen::Index target) {
    Rng rng(spec.seed ^ 0x9e3779b97f4a7c15ull);
    const Vec3 jitter(rng.uniform(), rng.uniform(), rng.uniform());

    // initial per-axis counts from an isotropic cell-volume guess
    const double volume = spec.dims.prod();
    double cell = std::cbrt(volume / static_cast<double>(std::max<Eigen::Index>(target, 8)));
    for (int refine = 0; refine < 24; ++refine) {
        Eigen::Vector3i counts;
        for (int c = 0; c < 3; ++c)
            counts[c] = std::max(2, static_cast<int>(std::ceil(spec.dims[c] / cell)));

        std::vector<Vec3> kept;
        kept.reserve(static_cast<std::size_t>(target) * 2);
        for (int i = 0; i < counts[0]; ++i) {
            for (int j = 0; j < counts[1]; ++j) {
                for (int k = 0; k < counts[2]; ++k) {
                    Vec3 p((i + jitter[0]) * spec.dims[0] / counts[0],
                           (j + jitter[1]) * spec.dims[1] / counts[1],
                           (k + jitter[2]) * spec.dims[2] / counts[2]);
                    if (spec.inside(p)) kept.push_back(p);
                }
            }
        }
        if (static_cast<Eigen::Index>(kept.size()) >= target) {
            PointMat out(static_cast<Eigen::Index>(kept.size()), 3);
            for (Eigen::Index r = 0; r < out.rows(); ++r)
                out.row(r) = kept[static_cast<std::size_t>(r)].transpose();
            return out;
        }
        cell /= 1.35;
    }
    throw ValidationError("sample_component: lattice refinement failed; spec volume degenerate");
}

}  // namespace

std::vector<Eigen::Index> farthest_point_indices(const PointMat& pts, Eigen::Index n) {
    const Eigen::Index N = pts.rows();
    if (n > N)
        throw ValidationError("farthest_point_sample: n (" + std::to_string(n) +
                              ") exceeds point count " + std::to_string(N));
    std::vector<Eigen::Index> selected;
    if (n == 0) return selected;
    selected.reserve(static_cast<std::size_t>(n));

    const Eigen::RowVector3d centroid = pts.colwise().mean();
    Eigen::Index start = 0;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < N; ++i) {
        const double d = (pts.row(i) - centroid).squaredNorm();
        if (d < best) {
            best = d;
            start = i;
        }
    }
    selected.push_back(start);

    Vec dist = (pts.rowwise() - pts.row(start)).rowwise().squaredNorm();
    while (static_cast<Eigen::Index>(selected.size()) < n) {
        Eigen::Index far = 0;
        double far_d = -1.0;
        for (Eigen::Index i = 0; i < N; ++i) {
            if (dist[i] > far_d) {
                far_d = dist[i];
                far = i;
            }
        }
        selected.push_back(far);
        dist = dist.cwiseMin((pts.rowwise() - pts.row(far)).rowwise().squaredNorm());
    }
    return selected;
}

PointCloud farthest_point_sample(const PointCloud& cloud, Eigen::Index n) {
    const auto idx = farthest_point_indices(cloud.points, n);
    PointCloud out;
    out.points.resize(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) out.points.row(i) = cloud.points.row(idx[static_cast<std::size_t>(i)]);
    for (const auto& [name, v] : cloud.channels) {
        Vec sel(n);
        for (Eigen::Index i = 0; i < n; ++i) sel[i] = v[idx[static_cast<std::size_t>(i)]];
        out.channels.emplace_back(name, std::move(sel));
    }
    return out;
}

PointCloud sample_component(const ComponentSpec& spec, Eigen::Index n_points) {
    spec.validate();
    if (n_points < 64)
        throw ValidationError("sample_component: n_points must be >= 64");
    const Eigen::Index target = std::max<Eigen::Index>(4 * n_points, n_points + 64);
    const PointMat candidates = lattice_candidates(spec, target);

    PointCloud cloud;
    cloud.points = candidates;
    return farthest_point_sample(cloud, n_points);
}

PointCloud reference_blank(const ComponentSpec& spec, Eigen::Index n_points) {
    spec.validate();
    return sample_component(spec.blank_of_same_dims(), n_points);
}

std::pair<PointCloud, CoordTransform> normalize_coords(const PointCloud& cloud,
                                                       const Vec3& median_dims) {
    for (int c = 0; c < 3; ++c)
        if (!(median_dims[c] > 0.0))
            throw ValidationError("normalize_coords: median_dims[" + std::to_string(c) +
                                  "] must be > 0");
    CoordTransform tf;
    tf.center = 0.5 * (cloud.points.colwise().minCoeff() + cloud.points.colwise().maxCoeff());
    tf.scale = median_dims;

    PointCloud out = cloud;
    out.points = tf.apply(cloud.points);
    return {std::move(out), tf};
}

Vec3 median_dims(const std::vector<ComponentSpec>& specs) {
    if (specs.empty()) throw ValidationError("median_dims: empty spec list");
    const Family fam = specs.front().family;
    for (const auto& s : specs)
        if (s.family != fam)
            throw ValidationError("median_dims: mixed families (" + family_name(fam) + " vs " +
                                  family_name(s.family) + ")");
    Vec3 out;
    std::vector<double> axis(specs.size());
    for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < specs.size(); ++i) axis[i] = specs[i].dims[c];
        std::sort(axis.begin(), axis.end());
        out[c] = axis[(axis.size() - 1) / 2];  // lower median on even counts
    }
    return out;
}

KnnGraph knn_graph(const Mat& features, int k) {
    const Eigen::Index N = features.rows();
    if (k < 1) throw ValidationError("knn_graph: k must be >= 1");
    if (k >= N)
        throw ValidationError("knn_graph: k (" + std::to_string(k) + ") must be < N (" +
                              std::to_string(N) + ")");
    KnnGraph g;
    g.k = k;
    g.neighbors.resize(N, k);

    std::vector<std::pair<double, Eigen::Index>> cand(static_cast<std::size_t>(N));
    for (Eigen::Index i = 0; i < N; ++i) {
        std::size_t m = 0;
        for (Eigen::Index j = 0; j < N; ++j) {
            if (j == i) continue;
            cand[m++] = {(features.row(i) - features.row(j)).squaredNorm(), j};
        }
        std::partial_sort(cand.begin(), cand.begin() + k, cand.begin() + static_cast<std::ptrdiff_t>(m),
                          [](const auto& a, const auto& b) {
                              if (a.first != b.first) return a.first < b.first;
                              return a.second < b.second;
                          });
        for (int c = 0; c < k; ++c) g.neighbors(i, c) = cand[static_cast<std::size_t>(c)].second;
    }
    return g;
}

KnnGraph knn_graph(const PointCloud& cloud, int k) {
    return knn_graph(Mat(cloud.points), k);
}

}  // namespace ndno::geom
