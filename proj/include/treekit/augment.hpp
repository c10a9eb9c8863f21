#pragma once

#include <array>
#include <cstdint>

#include "treekit/cloud.hpp"

namespace treekit {

/// Training-time geometric augmentations as deterministic, seedable
/// transforms. Labels are never touched; point count and order are preserved.
struct AugmentConfig {
    double noise_sigma = 0.01;              // meters
    double rotation_max_degrees = 180.0;    // about Z
    std::array<double, 2> scale_range = {0.9, 1.1};  // per-axis, uniform
    double symmetry_prob_x = 0.5;           // reflection probability, X
    double symmetry_prob_y = 0.5;           // reflection probability, Y
    uint64_t seed = 0;

    /// Throws ValidationError on out-of-range values.
    void check() const;
};

// Fixed-parameter cores. The seeded operations below draw their parameters
// and delegate here; tests can force exact values.

/// Rotation about the Z axis through the cloud's XY centroid; z untouched.
LabeledPointCloud rotate_z_by(const LabeledPointCloud& cloud, double radians);

/// Per-axis scaling about the cloud's 3-D centroid.
LabeledPointCloud scale_by(const LabeledPointCloud& cloud, double sx, double sy, double sz);

/// Mirror X and/or Y about the cloud centroid. Z is never reflected.
LabeledPointCloud reflect_axes(const LabeledPointCloud& cloud, bool flip_x, bool flip_y);

/// Independent zero-mean Gaussian noise, std sigma, on every coordinate.
LabeledPointCloud jitter(const LabeledPointCloud& cloud, double sigma, uint64_t seed);

/// One angle drawn uniformly from [-max_degrees, +max_degrees].
LabeledPointCloud rotate_z(const LabeledPointCloud& cloud, double max_degrees, uint64_t seed);

/// Independent per-axis factors drawn uniformly from [low, high].
LabeledPointCloud scale_aniso(const LabeledPointCloud& cloud,
                              const std::array<double, 2>& scale_range, uint64_t seed);

/// Coin-flips X and Y reflections with the given probabilities.
LabeledPointCloud reflect(const LabeledPointCloud& cloud, double prob_x, double prob_y,
                          uint64_t seed);

/// reflect -> scale_aniso -> rotate_z -> jitter, with per-stage seeds
/// derive_seed(config.seed, 0..3), so noise lands in final coordinates.
LabeledPointCloud augment(const LabeledPointCloud& cloud, const AugmentConfig& config);

}  // namespace treekit
