#pragma once

#include <utility>
#include <vector>

#include "ndno/component.hpp"
#include "ndno/pointcloud.hpp"

namespace ndno::geom {

// Volumetric point cloud of the part: seed-jittered uniform lattice filtered
// by the solid's inside test, then farthest-point subsampled to n_points.
// Deterministic in (spec.seed, n_points).
PointCloud sample_component(const ComponentSpec& spec, Eigen::Index n_points);

// Featureless blank with the same outer dims and seed as spec.
PointCloud reference_blank(const ComponentSpec& spec, Eigen::Index n_points);

// Bounding-box center to the origin, then per-axis division by median_dims.
// Returns the cloud and the transform that undoes it. Channels untouched.
std::pair<PointCloud, CoordTransform> normalize_coords(const PointCloud& cloud,
                                                       const Vec3& median_dims);

// Per-axis lower median of outer dims; all specs must share one family.
Vec3 median_dims(const std::vector<ComponentSpec>& specs);

// Exact Euclidean kNN, ties broken by lower point index. Requires k < N.
KnnGraph knn_graph(const PointCloud& cloud, int k);
KnnGraph knn_graph(const Mat& features, int k);  // rows = feature vectors

// Greedy max-min selection, started at the point nearest the centroid.
PointCloud farthest_point_sample(const PointCloud& cloud, Eigen::Index n);
std::vector<Eigen::Index> farthest_point_indices(const PointMat& pts, Eigen::Index n);

}  // namespace ndno::geom
