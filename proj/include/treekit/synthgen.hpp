#pragma once

#include <array>
#include <cstdint>

#include "treekit/cloud.hpp"
#include "treekit/grouping.hpp"

namespace treekit {

/// Synthetic forest plots with exact ground truth: verification scaffolding
/// for the whole pipeline, not a realism effort. Trees are a thin vertical
/// stem plus an ellipsoidal crown.
struct ForestConfig {
    double plot_size = 30.0;    // square side, meters
    size_t n_trees = 10;
    double min_spacing = 5.0;   // between stem centers, XY
    std::array<double, 2> height_range = {8.0, 20.0};
    std::array<double, 2> crown_radius_range = {1.0, 2.0};
    size_t points_per_tree = 500;
    size_t ground_points = 1000;
    uint64_t seed = 0;

    void check() const;
};

/// Prediction-degradation knobs for the oracle.
struct OracleNoise {
    double offset_sigma = 0.0;        // meters, added to the ideal offsets
    double embedding_sigma = 0.0;     // added per embedding component
    double semantic_flip_prob = 0.0;  // chance a point's probability flips

    void check() const;
};

/// Trees placed by rejection sampling (min_spacing apart, capped attempts),
/// instance ids 1..n_trees; ground points at z ~ 0 with instance 0.
/// Deterministic per seed. Throws ValidationError when placement is
/// infeasible.
LabeledPointCloud generate_forest(const ForestConfig& config, uint64_t seed);
LabeledPointCloud generate_forest(const ForestConfig& config);  // uses config.seed

/// Fixed per-instance 5-D code on a sphere of radius 10, a pure function of
/// the id. Separation between distinct ids dwarfs the default mean-shift
/// bandwidth.
std::array<double, 5> instance_embedding_code(uint32_t instance_id);

/// Ideal per-point predictions from the labels: probability 1/0 (flipped
/// with semantic_flip_prob), offset = instance centroid - point, embedding =
/// instance code; Gaussian noise per OracleNoise. Non-tree points keep zero
/// offset and embedding even when their probability is flipped.
PointPredictions oracle_predictions(const LabeledPointCloud& cloud, const OracleNoise& noise,
                                    uint64_t seed);

}  // namespace treekit
