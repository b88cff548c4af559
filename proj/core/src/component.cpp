#include "ndno/component.hpp"

#include <cmath>
#include <set>

namespace ndno {

std::string family_name(Family f) {
    switch (f) {
        case Family::frame: return "frame";
        case Family::cbeam: return "cbeam";
        case Family::blank: return "blank";
    }
    return "blank";
}

Family family_from_name(const std::string& name) {
    if (name == "frame") return Family::frame;
    if (name == "cbeam") return Family::cbeam;
    if (name == "blank") return Family::blank;
    throw ValidationError("unknown family '" + name + "'");
}

void ComponentSpec::validate() const {
    auto positive = [](double v, const char* field) {
        if (!(v > 0.0))
            throw ValidationError(std::string("ComponentSpec.") + field + " must be > 0");
    };
    positive(dims[0], "dims[0] (Lx)");
    positive(dims[1], "dims[1] (Ly)");
    positive(dims[2], "dims[2] (Lz)");

    switch (family) {
        case Family::blank:
            break;
        case Family::frame: {
            if (nx < 1 || ny < 1)
                throw ValidationError("ComponentSpec.nx/ny: frame needs at least one pocket per axis");
            positive(w_wall, "w_wall");
            positive(w_floor, "w_floor");
            if (w_floor >= dims[2])
                throw ValidationError("ComponentSpec.w_floor must be < Lz");
            if (pocket_pitch_x() <= 0.0)
                throw ValidationError("ComponentSpec.w_wall: walls leave no pocket width along x");
            if (pocket_pitch_y() <= 0.0)
                throw ValidationError("ComponentSpec.w_wall: walls leave no pocket width along y");
            break;
        }
        case Family::cbeam: {
            positive(w_flange, "w_flange");
            positive(w_web, "w_web");
            if (2.0 * w_flange >= dims[2])
                throw ValidationError("ComponentSpec.w_flange: flanges must not meet (2*w_flange < Lz)");
            if (w_web >= dims[1])
                throw ValidationError("ComponentSpec.w_web must be < Ly");
            break;
        }
    }
}

double ComponentSpec::pocket_pitch_x() const {
    return (dims[0] - (nx + 1) * w_wall) / nx;
}

double ComponentSpec::pocket_pitch_y() const {
    return (dims[1] - (ny + 1) * w_wall) / ny;
}

namespace {

// Index of the pocket cell containing plan coordinate v, or -1 when over a wall.
int pocket_cell(double v, int n, double wall, double pitch) {
    for (int i = 0; i < n; ++i) {
        const double lo = wall + i * (wall + pitch);
        if (v > lo && v < lo + pitch) return i;
    }
    return -1;
}

}  // namespace

bool ComponentSpec::inside(const Vec3& p) const {
    if (p[0] < 0.0 || p[0] > dims[0] || p[1] < 0.0 || p[1] > dims[1] || p[2] < 0.0 ||
        p[2] > dims[2])
        return false;
    switch (family) {
        case Family::blank:
            return true;
        case Family::frame: {
            if (p[2] <= w_floor) return true;
            const bool over_pocket = pocket_cell(p[0], nx, w_wall, pocket_pitch_x()) >= 0 &&
                                     pocket_cell(p[1], ny, w_wall, pocket_pitch_y()) >= 0;
            return !over_pocket;
        }
        case Family::cbeam: {
            if (p[1] <= w_web) return true;                              // web
            return p[2] <= w_flange || p[2] >= dims[2] - w_flange;       // flanges
        }
    }
    return false;
}

double ComponentSpec::local_thickness(double x, double y) const {
    if (x < 0.0 || x > dims[0] || y < 0.0 || y > dims[1]) return 0.0;
    switch (family) {
        case Family::blank:
            return dims[2];
        case Family::frame: {
            const bool over_pocket = pocket_cell(x, nx, w_wall, pocket_pitch_x()) >= 0 &&
                                     pocket_cell(y, ny, w_wall, pocket_pitch_y()) >= 0;
            return over_pocket ? w_floor : dims[2];
        }
        case Family::cbeam:
            return y <= w_web ? dims[2] : 2.0 * w_flange;
    }
    return dims[2];
}

ComponentSpec ComponentSpec::blank_of_same_dims() const {
    ComponentSpec b;
    b.family = Family::blank;
    b.dims = dims;
    b.seed = seed;
    return b;
}

void PointCloud::validate() const {
    const auto n = size();
    if (n < 4) throw ValidationError("PointCloud: need at least 4 points");
    for (const auto& [name, v] : channels) {
        if (v.size() != n)
            throw ValidationError("PointCloud: channel '" + name + "' length " +
                                  std::to_string(v.size()) + " != " + std::to_string(n));
    }
    // duplicate detection via lexicographic sort of rows
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        for (int c = 0; c < 3; ++c) {
            if (points(a, c) != points(b, c)) return points(a, c) < points(b, c);
        }
        return false;
    });
    for (std::size_t i = 1; i < order.size(); ++i) {
        if ((points.row(order[i]) - points.row(order[i - 1])).norm() == 0.0)
            throw ValidationError("PointCloud: duplicate points at indices " +
                                  std::to_string(order[i - 1]) + " and " +
                                  std::to_string(order[i]));
    }
}

PointMat CoordTransform::apply(const PointMat& p) const {
    PointMat out = p;
    for (int c = 0; c < 3; ++c)
        out.col(c) = (out.col(c).array() - center[c]) / scale[c];
    return out;
}

PointMat CoordTransform::invert(const PointMat& p) const {
    PointMat out = p;
    for (int c = 0; c < 3; ++c)
        out.col(c) = out.col(c).array() * scale[c] + center[c];
    return out;
}

}  // namespace ndno
