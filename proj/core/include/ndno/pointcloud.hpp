#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "ndno/errors.hpp"

namespace ndno {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Vec3 = Eigen::Vector3d;
using PointMat = Eigen::Matrix<double, Eigen::Dynamic, 3>;

// Ordered 3D point set (mm) with optional named per-point scalar channels.
struct PointCloud {
    PointMat points;                                        // N x 3
    std::vector<std::pair<std::string, Vec>> channels;      // each of length N

    Eigen::Index size() const { return points.rows(); }

    bool has_channel(const std::string& name) const {
        for (const auto& [n, v] : channels)
            if (n == name) return true;
        return false;
    }

    const Vec& channel(const std::string& name) const {
        for (const auto& [n, v] : channels)
            if (n == name) return v;
        throw ValidationError("PointCloud: no channel named '" + name + "'");
    }

    void set_channel(const std::string& name, Vec values) {
        if (values.size() != size())
            throw ValidationError("PointCloud: channel '" + name + "' length " +
                                  std::to_string(values.size()) + " != point count " +
                                  std::to_string(size()));
        for (auto& [n, v] : channels) {
            if (n == name) {
                v = std::move(values);
                return;
            }
        }
        channels.emplace_back(name, std::move(values));
    }

    // Enforces the documented invariants: N >= 4, channel lengths, distinct points.
    void validate() const;
};

// kNN graph: row i lists the k nearest point indices of i (self excluded),
// ascending by distance, distance ties broken by lower index.
struct KnnGraph {
    int k = 0;
    Eigen::Matrix<Eigen::Index, Eigen::Dynamic, Eigen::Dynamic> neighbors;  // N x k
};

// Invertible centering/scaling applied by normalize_coords.
struct CoordTransform {
    Vec3 center = Vec3::Zero();  // bounding-box center removed (mm)
    Vec3 scale = Vec3::Ones();   // per-axis divisor (mm)

    PointMat apply(const PointMat& p) const;
    PointMat invert(const PointMat& p) const;
};

}  // namespace ndno
