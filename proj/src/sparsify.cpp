#include "treekit/sparsify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "treekit/errors.hpp"
#include "treekit/rng.hpp"

namespace treekit {

std::vector<size_t> sparsify_indices(const LabeledPointCloud& cloud, double target_density,
                                     uint64_t seed) {
    if (target_density <= 0.0) {
        throw ValidationError("sparsify: target density must be > 0");
    }
    double area = hull_area_xy(cloud);
    if (area <= 0.0) {
        throw ValidationError("sparsify: degenerate hull, density undefined");
    }
    const size_t n = cloud.size();
    std::vector<size_t> indices(n);
    std::iota(indices.begin(), indices.end(), size_t{0});

    double want = target_density * area;  // may exceed any integer type
    if (want >= static_cast<double>(n) - 0.5) return indices;
    size_t count = static_cast<size_t>(std::max<long long>(1, std::llround(want)));
    if (count >= n) return indices;

    // Partial Fisher-Yates: the first `count` slots end up holding a uniform
    // sample without replacement.
    Rng rng(seed);
    for (size_t i = 0; i < count; ++i) {
        size_t j = i + rng.index(n - i);
        std::swap(indices[i], indices[j]);
    }
    indices.resize(count);
    std::sort(indices.begin(), indices.end());
    return indices;
}

LabeledPointCloud subset_cloud(const LabeledPointCloud& cloud,
                               const std::vector<size_t>& indices) {
    LabeledPointCloud out;
    out.source_tag = cloud.source_tag;
    out.crs_note = cloud.crs_note;
    out.points.reserve(indices.size());
    for (size_t i : indices) out.points.push_back(cloud.points[i]);
    return out;
}

LabeledPointCloud sparsify(const LabeledPointCloud& cloud, double target_density,
                           uint64_t seed) {
    return subset_cloud(cloud, sparsify_indices(cloud, target_density, seed));
}

std::vector<std::pair<double, LabeledPointCloud>> sparsify_series(
    const LabeledPointCloud& cloud, const SparsifyConfig& config) {
    if (config.target_densities.empty()) {
        throw ValidationError("sparsify_series: empty density list");
    }
    std::vector<std::pair<double, LabeledPointCloud>> out;
    out.reserve(config.target_densities.size());
    for (size_t i = 0; i < config.target_densities.size(); ++i) {
        double d = config.target_densities[i];
        out.emplace_back(d, sparsify(cloud, d, derive_seed(config.seed, i)));
    }
    return out;
}

}  // namespace treekit
