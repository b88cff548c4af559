#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ndno/component.hpp"
#include "ndno/pointcloud.hpp"

namespace ndno::stress {

// Truncated cosine series through the thickness:
//   sigma_xx(zt) = sum_k a[k] cos(k pi zt),  sigma_yy likewise with b,
// for a normalized through-thickness coordinate zt in [0, 1].
struct StressProfile {
    Vec a;  // MPa, length K+1
    Vec b;  // MPa, length K+1
    std::uint64_t seed = 0;

    int order() const { return static_cast<int>(a.size()) - 1; }
    double sigma_xx(double zt) const;
    double sigma_yy(double zt) const;
};

struct MaterialConsts {
    double youngs_modulus = 70e9;  // Pa
    double poisson = 0.33;

    void validate() const;
};

struct Sample {
    ComponentSpec spec;
    PointMat points;   // N x 3, mm
    Mat stress;        // N x 2, MPa: (sigma_xx, sigma_yy)
    Mat deformation;   // N x 3, mm:  (u_x, u_y, u_z)
    StressProfile profile;
};

struct DatasetConfig {
    Eigen::Index n_points = 512;
    int stress_order = 3;           // K
    double stress_bound = 100.0;    // MPa
    MaterialConsts material;
    // dim ranges are per family; frame x/y follow the published range
    Vec3 dims_lo = Vec3(208.0, 128.0, 20.0);
    Vec3 dims_hi = Vec3(612.0, 248.0, 60.0);
};

// Coefficients uniform in [-bound, bound], deterministic in seed.
StressProfile gen_stress_profile(std::uint64_t seed, int order, double bound);

// Evaluates the series at each point's zt = z / Lz. Points must lie within
// [0, Lz] in z.
Mat eval_stress_at_points(const StressProfile& profile, const PointCloud& cloud,
                          const ComponentSpec& spec);

// Closed-form section moments of the series over a retained thickness t, the
// series argument rescaled to zt = z / t:
//   M = integral_0^t sigma(z) (z - t/2) dz = -2 t^2 sum_{k odd} c_k / (k pi)^2.
// Units: N mm / mm (per unit width).
std::pair<double, double> bending_moments(const StressProfile& profile, double t);

// Kirchhoff-plate ground truth: local thickness t(x,y) from the spec, local
// curvatures kx = (Mx - nu My) / (D (1 - nu^2)) with D = E t^3 / (12 (1-nu^2)),
// deflection u_z = (kx xt^2 + ky yt^2) / 2 and in-plane u_x = -zt kx xt,
// u_y = -zt ky yt, with (xt, yt, zt) centroid-relative coordinates in mm.
Mat plate_deflection_oracle(const StressProfile& profile, const ComponentSpec& spec,
                            const MaterialConsts& consts, const PointCloud& cloud);

// Random specs (dims uniform in family ranges) + stress profiles; per-sample
// seed = seed + index.
std::vector<Sample> make_dataset(int n, Family family, std::uint64_t seed,
                                 const DatasetConfig& config);

ComponentSpec random_spec(Family family, std::uint64_t seed, const DatasetConfig& config);
Sample make_sample(const ComponentSpec& spec, const DatasetConfig& config);

// Dimension-generalization split: test iff Lx > 400 AND Ly > 200 (set
// union_rule to split on either condition instead).
struct SplitResult {
    std::vector<int> train;  // indices into the input list
    std::vector<int> test;
    bool warning_empty_side = false;
};
SplitResult generalization_split(const std::vector<Sample>& samples, bool union_rule = false);

}  // namespace ndno::stress
