#include "treekit/augment.hpp"

#include <cmath>

#include "treekit/errors.hpp"
#include "treekit/rng.hpp"

namespace treekit {

void AugmentConfig::check() const {
    if (noise_sigma < 0.0) throw ValidationError("augment: noise_sigma must be >= 0");
    if (rotation_max_degrees < 0.0 || rotation_max_degrees > 180.0) {
        throw ValidationError("augment: rotation_max_degrees must be in [0, 180]");
    }
    if (!(scale_range[0] > 0.0) || scale_range[0] > scale_range[1]) {
        throw ValidationError("augment: scale range must satisfy 0 < low <= high");
    }
    for (double p : {symmetry_prob_x, symmetry_prob_y}) {
        if (p < 0.0 || p > 1.0) {
            throw ValidationError("augment: symmetry probability outside [0,1]");
        }
    }
}

LabeledPointCloud rotate_z_by(const LabeledPointCloud& cloud, double radians) {
    double cx, cy;
    centroid_xy(cloud, cx, cy);
    const double c = std::cos(radians), s = std::sin(radians);
    LabeledPointCloud out = cloud;
    for (PointRecord& p : out.points) {
        double dx = p.x - cx, dy = p.y - cy;
        p.x = cx + c * dx - s * dy;
        p.y = cy + s * dx + c * dy;
    }
    return out;
}

LabeledPointCloud scale_by(const LabeledPointCloud& cloud, double sx, double sy, double sz) {
    double cx, cy, cz;
    centroid_xyz(cloud, cx, cy, cz);
    LabeledPointCloud out = cloud;
    // untouched axes stay bit-identical (factor-1 round trips through the
    // centroid would perturb them)
    for (PointRecord& p : out.points) {
        if (sx != 1.0) p.x = cx + sx * (p.x - cx);
        if (sy != 1.0) p.y = cy + sy * (p.y - cy);
        if (sz != 1.0) p.z = cz + sz * (p.z - cz);
    }
    return out;
}

LabeledPointCloud reflect_axes(const LabeledPointCloud& cloud, bool flip_x, bool flip_y) {
    if (!flip_x && !flip_y) return cloud;
    double cx, cy;
    centroid_xy(cloud, cx, cy);
    LabeledPointCloud out = cloud;
    for (PointRecord& p : out.points) {
        if (flip_x) p.x = 2.0 * cx - p.x;
        if (flip_y) p.y = 2.0 * cy - p.y;
    }
    return out;
}

LabeledPointCloud jitter(const LabeledPointCloud& cloud, double sigma, uint64_t seed) {
    if (sigma < 0.0) throw ValidationError("jitter: sigma must be >= 0");
    if (sigma == 0.0) return cloud;
    Rng rng(seed);
    LabeledPointCloud out = cloud;
    for (PointRecord& p : out.points) {
        p.x += rng.gaussian(sigma);
        p.y += rng.gaussian(sigma);
        p.z += rng.gaussian(sigma);
    }
    return out;
}

LabeledPointCloud rotate_z(const LabeledPointCloud& cloud, double max_degrees, uint64_t seed) {
    if (max_degrees < 0.0 || max_degrees > 180.0) {
        throw ValidationError("rotate_z: max_degrees must be in [0, 180]");
    }
    if (max_degrees == 0.0) return cloud;
    Rng rng(seed);
    double degrees = rng.uniform(-max_degrees, max_degrees);
    return rotate_z_by(cloud, degrees * M_PI / 180.0);
}

LabeledPointCloud scale_aniso(const LabeledPointCloud& cloud,
                              const std::array<double, 2>& scale_range, uint64_t seed) {
    if (!(scale_range[0] > 0.0) || scale_range[0] > scale_range[1]) {
        throw ValidationError("scale_aniso: range must satisfy 0 < low <= high");
    }
    Rng rng(seed);
    double sx = rng.uniform(scale_range[0], scale_range[1]);
    double sy = rng.uniform(scale_range[0], scale_range[1]);
    double sz = rng.uniform(scale_range[0], scale_range[1]);
    return scale_by(cloud, sx, sy, sz);
}

LabeledPointCloud reflect(const LabeledPointCloud& cloud, double prob_x, double prob_y,
                          uint64_t seed) {
    for (double p : {prob_x, prob_y}) {
        if (p < 0.0 || p > 1.0) {
            throw ValidationError("reflect: probability outside [0,1]");
        }
    }
    Rng rng(seed);
    bool flip_x = rng.bernoulli(prob_x);
    bool flip_y = rng.bernoulli(prob_y);
    return reflect_axes(cloud, flip_x, flip_y);
}

LabeledPointCloud augment(const LabeledPointCloud& cloud, const AugmentConfig& config) {
    config.check();
    LabeledPointCloud out =
        reflect(cloud, config.symmetry_prob_x, config.symmetry_prob_y,
                derive_seed(config.seed, 0));
    out = scale_aniso(out, config.scale_range, derive_seed(config.seed, 1));
    out = rotate_z(out, config.rotation_max_degrees, derive_seed(config.seed, 2));
    out = jitter(out, config.noise_sigma, derive_seed(config.seed, 3));
    return out;
}

}  // namespace treekit
