#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "treekit/cloud.hpp"

namespace treekit {

struct SparsifyConfig {
    std::vector<double> target_densities;  // points per m², each > 0
    uint64_t seed = 0;
};

/// Indices (ascending) of the points kept when thinning to target_density
/// points/m². The kept count is round(target_density * hull_area), clamped to
/// [1, n]; the reference area is always the source cloud's hull. Sampling is
/// uniform without replacement via a seeded shuffle prefix. When the target
/// count reaches n the whole cloud is kept.
std::vector<size_t> sparsify_indices(const LabeledPointCloud& cloud, double target_density,
                                     uint64_t seed);

/// Subset of `cloud` at the kept indices; records are carried over untouched
/// and keep their relative order.
LabeledPointCloud subset_cloud(const LabeledPointCloud& cloud,
                               const std::vector<size_t>& indices);

/// Random subsampling to a target density. Deterministic per seed.
LabeledPointCloud sparsify(const LabeledPointCloud& cloud, double target_density,
                           uint64_t seed);

/// One output per requested density, in config order, each drawn
/// independently with per-item seed = config.seed XOR item index
/// (see derive_seed).
std::vector<std::pair<double, LabeledPointCloud>> sparsify_series(
    const LabeledPointCloud& cloud, const SparsifyConfig& config);

}  // namespace treekit
