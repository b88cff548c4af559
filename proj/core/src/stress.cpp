#include "ndno/stress.hpp"

#include <cmath>

#include "ndno/geomgen.hpp"
#include "ndno/rng.hpp"

namespace ndno::stress {

double StressProfile::sigma_xx(double zt) const {
    double s = 0.0;
    for (int k = 0; k <= order(); ++k) s += a[k] * std::cos(k * M_PI * zt);
    return s;
}

double StressProfile::sigma_yy(double zt) const {
    double s = 0.0;
    for (int k = 0; k <= order(); ++k) s += b[k] * std::cos(k * M_PI * zt);
    return s;
}

void MaterialConsts::validate() const {
    if (!(youngs_modulus > 0.0)) throw ValidationError("MaterialConsts.youngs_modulus must be > 0");
    if (poisson < 0.0 || poisson >= 0.5)
        throw ValidationError("MaterialConsts.poisson must lie in [0, 0.5)");
}

StressProfile gen_stress_profile(std::uint64_t seed, int order, double bound) {
    if (order < 1) throw ValidationError("gen_stress_profile: order must be >= 1");
    if (bound < 0.0) throw ValidationError("gen_stress_profile: bound must be >= 0");
    Rng rng(seed);
    StressProfile p;
    p.seed = seed;
    p.a.resize(order + 1);
    p.b.resize(order + 1);
    for (int k = 0; k <= order; ++k) p.a[k] = rng.uniform(-bound, bound);
    for (int k = 0; k <= order; ++k) p.b[k] = rng.uniform(-bound, bound);
    return p;
}

Mat eval_stress_at_points(const StressProfile& profile, const PointCloud& cloud,
                          const ComponentSpec& spec) {
    const double lz = spec.dims[2];
    Mat out(cloud.size(), 2);
    for (Eigen::Index i = 0; i < cloud.size(); ++i) {
        const double z = cloud.points(i, 2);
        if (z < 0.0 || z > lz)
            throw ValidationError("eval_stress_at_points: point " + std::to_string(i) +
                                  " outside [0, Lz] in z");
        const double zt = z / lz;
        out(i, 0) = profile.sigma_xx(zt);
        out(i, 1) = profile.sigma_yy(zt);
    }
    return out;
}

std::pair<double, double> bending_moments(const StressProfile& profile, double t) {
    if (!(t > 0.0)) throw ValidationError("bending_moments: thickness t must be > 0");
    // integral_0^1 cos(k pi w)(w - 1/2) dw = ((-1)^k - 1) / (k pi)^2; zero for
    // k = 0 and even k, so only odd terms survive.
    double mx = 0.0, my = 0.0;
    for (int k = 1; k <= profile.order(); k += 2) {
        const double coef = -2.0 / ((k * M_PI) * (k * M_PI));
        mx += profile.a[k] * coef;
        my += profile.b[k] * coef;
    }
    return {t * t * mx, t * t * my};
}

Mat plate_deflection_oracle(const StressProfile& profile, const ComponentSpec& spec,
                            const MaterialConsts& consts, const PointCloud& cloud) {
    spec.validate();
    consts.validate();
    const double e_mpa = consts.youngs_modulus * 1e-6;  // Pa -> N/mm^2
    const double nu = consts.poisson;

    const Eigen::RowVector3d centroid = cloud.points.colwise().mean();
    Mat out(cloud.size(), 3);
    for (Eigen::Index i = 0; i < cloud.size(); ++i) {
        const double x = cloud.points(i, 0), y = cloud.points(i, 1), z = cloud.points(i, 2);
        const double t = spec.local_thickness(x, y);
        if (!(t > 0.0))
            throw ValidationError("plate_deflection_oracle: nonpositive thickness at point " +
                                  std::to_string(i));
        const auto [mx, my] = bending_moments(profile, t);
        const double d_rigidity = e_mpa * t * t * t / (12.0 * (1.0 - nu * nu));
        const double kx = (mx - nu * my) / (d_rigidity * (1.0 - nu * nu));
        const double ky = (my - nu * mx) / (d_rigidity * (1.0 - nu * nu));

        const double xt = x - centroid[0], yt = y - centroid[1], zt = z - centroid[2];
        out(i, 0) = -zt * kx * xt;
        out(i, 1) = -zt * ky * yt;
        out(i, 2) = 0.5 * (kx * xt * xt + ky * yt * yt);
    }
    return out;
}

ComponentSpec random_spec(Family family, std::uint64_t seed, const DatasetConfig& config) {
    Rng rng(seed);
    ComponentSpec s;
    s.family = family;
    s.seed = seed;
    for (int c = 0; c < 3; ++c) s.dims[c] = rng.uniform(config.dims_lo[c], config.dims_hi[c]);
    switch (family) {
        case Family::blank:
            break;
        case Family::frame: {
            s.nx = static_cast<int>(rng.uniform_int(2, 4));
            s.ny = static_cast<int>(rng.uniform_int(1, 3));
            s.w_wall = rng.uniform(5.0, 12.0);
            s.w_floor = rng.uniform(0.15, 0.3) * s.dims[2];
            break;
        }
        case Family::cbeam: {
            s.w_flange = rng.uniform(0.12, 0.25) * s.dims[2];
            s.w_web = rng.uniform(0.1, 0.25) * s.dims[1];
            break;
        }
    }
    s.validate();
    return s;
}

Sample make_sample(const ComponentSpec& spec, const DatasetConfig& config) {
    Sample sample;
    sample.spec = spec;
    PointCloud cloud = geom::sample_component(spec, config.n_points);
    sample.profile = gen_stress_profile(spec.seed ^ 0xa5a5a5a5deadbeefull, config.stress_order,
                                        config.stress_bound);
    sample.stress = eval_stress_at_points(sample.profile, cloud, spec);
    sample.deformation = plate_deflection_oracle(sample.profile, spec, config.material, cloud);
    sample.points = std::move(cloud.points);
    return sample;
}

std::vector<Sample> make_dataset(int n, Family family, std::uint64_t seed,
                                 const DatasetConfig& config) {
    if (n < 1) throw ValidationError("make_dataset: n must be >= 1");
    std::vector<Sample> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto spec = random_spec(family, seed + static_cast<std::uint64_t>(i), config);
        out.push_back(make_sample(spec, config));
    }
    return out;
}

SplitResult generalization_split(const std::vector<Sample>& samples, bool union_rule) {
    SplitResult r;
    for (int i = 0; i < static_cast<int>(samples.size()); ++i) {
        const auto& d = samples[static_cast<std::size_t>(i)].spec.dims;
        const bool big_x = d[0] > 400.0, big_y = d[1] > 200.0;
        const bool is_test = union_rule ? (big_x || big_y) : (big_x && big_y);
        (is_test ? r.test : r.train).push_back(i);
    }
    r.warning_empty_side = r.train.empty() || r.test.empty();
    return r;
}

}  // namespace ndno::stress
