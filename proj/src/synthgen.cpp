#include "treekit/synthgen.hpp"

#include <cmath>
#include <unordered_map>

#include "treekit/errors.hpp"
#include "treekit/rng.hpp"

namespace treekit {

namespace {

constexpr size_t kPlacementAttempts = 10000;

// Chosen so that codes for sequential ids (the ids synthetic forests use)
// stay far apart on the sphere; see the separation tests.
constexpr uint64_t kEmbeddingSalt = 0xf1820d229e89ef2aull;

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace

void ForestConfig::check() const {
    if (plot_size <= 0.0) throw ValidationError("forest: plot_size must be > 0");
    if (n_trees == 0) throw ValidationError("forest: n_trees must be > 0");
    if (min_spacing <= 0.0) throw ValidationError("forest: min_spacing must be > 0");
    if (height_range[0] <= 0.0 || height_range[0] > height_range[1]) {
        throw ValidationError("forest: height range must satisfy 0 < min <= max");
    }
    if (crown_radius_range[0] <= 0.0 || crown_radius_range[0] > crown_radius_range[1]) {
        throw ValidationError("forest: crown radius range must satisfy 0 < min <= max");
    }
    if (points_per_tree == 0) throw ValidationError("forest: points_per_tree must be > 0");
}

void OracleNoise::check() const {
    if (offset_sigma < 0.0 || embedding_sigma < 0.0) {
        throw ValidationError("oracle: sigmas must be >= 0");
    }
    if (semantic_flip_prob < 0.0 || semantic_flip_prob > 1.0) {
        throw ValidationError("oracle: flip probability outside [0,1]");
    }
}

LabeledPointCloud generate_forest(const ForestConfig& config, uint64_t seed) {
    config.check();
    Rng rng(seed);

    struct Tree {
        double cx, cy, height, crown_r;
    };
    std::vector<Tree> trees;
    trees.reserve(config.n_trees);

    for (size_t t = 0; t < config.n_trees; ++t) {
        double crown_r = rng.uniform(config.crown_radius_range[0], config.crown_radius_range[1]);
        double height = rng.uniform(config.height_range[0], config.height_range[1]);
        double margin = crown_r;
        if (2.0 * margin >= config.plot_size) {
            throw ValidationError("forest: crowns larger than the plot");
        }
        bool placed = false;
        for (size_t attempt = 0; attempt < kPlacementAttempts; ++attempt) {
            double cx = rng.uniform(margin, config.plot_size - margin);
            double cy = rng.uniform(margin, config.plot_size - margin);
            bool ok = true;
            for (const Tree& other : trees) {
                double dx = cx - other.cx, dy = cy - other.cy;
                if (dx * dx + dy * dy < config.min_spacing * config.min_spacing) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                trees.push_back({cx, cy, height, crown_r});
                placed = true;
                break;
            }
        }
        if (!placed) {
            throw ValidationError("forest: placement infeasible after " +
                                  std::to_string(kPlacementAttempts) + " attempts (tree " +
                                  std::to_string(t + 1) + ")");
        }
    }

    LabeledPointCloud cloud;
    cloud.source_tag = "synthetic";
    cloud.points.reserve(config.n_trees * config.points_per_tree + config.ground_points);

    for (size_t t = 0; t < trees.size(); ++t) {
        const Tree& tree = trees[t];
        auto id = static_cast<uint32_t>(t + 1);
        // Crown: ellipsoid over the top 70% of the tree; stem: the bottom 30%.
        double crown_semi_z = 0.35 * tree.height;
        double crown_center_z = tree.height - crown_semi_z;
        double stem_top = tree.height - 2.0 * crown_semi_z;
        size_t stem_points = config.points_per_tree / 5;

        for (size_t k = 0; k < config.points_per_tree; ++k) {
            PointRecord p;
            p.semantic = Semantic::tree;
            p.instance = id;
            if (k < stem_points) {
                p.x = tree.cx + rng.gaussian(0.05);
                p.y = tree.cy + rng.gaussian(0.05);
                p.z = rng.uniform(0.0, stem_top);
            } else {
                // Uniform in the unit ball by rejection, then stretched.
                double ux, uy, uz;
                do {
                    ux = rng.uniform(-1.0, 1.0);
                    uy = rng.uniform(-1.0, 1.0);
                    uz = rng.uniform(-1.0, 1.0);
                } while (ux * ux + uy * uy + uz * uz > 1.0);
                p.x = tree.cx + tree.crown_r * ux;
                p.y = tree.cy + tree.crown_r * uy;
                p.z = crown_center_z + crown_semi_z * uz;
            }
            cloud.points.push_back(p);
        }
    }

    for (size_t k = 0; k < config.ground_points; ++k) {
        PointRecord p;
        p.x = rng.uniform(0.0, config.plot_size);
        p.y = rng.uniform(0.0, config.plot_size);
        p.z = rng.uniform(0.0, 0.05);
        p.semantic = Semantic::non_tree;
        p.instance = 0;
        cloud.points.push_back(p);
    }
    return cloud;
}

LabeledPointCloud generate_forest(const ForestConfig& config) {
    return generate_forest(config, config.seed);
}

std::array<double, 5> instance_embedding_code(uint32_t instance_id) {
    // Box-Muller over a splitmix stream keyed by the id; normalized to the
    // radius-10 sphere. Redraw on a (practically impossible) tiny norm.
    uint64_t state = splitmix64(static_cast<uint64_t>(instance_id) ^ kEmbeddingSalt);
    auto next_unit = [&state]() {
        state = splitmix64(state);
        return static_cast<double>(state >> 11) * 0x1.0p-53;
    };
    std::array<double, 5> code{};
    while (true) {
        for (int i = 0; i < 5; i += 2) {
            double u1 = 1.0 - next_unit();
            double u2 = next_unit();
            double r = std::sqrt(-2.0 * std::log(u1));
            code[i] = r * std::cos(2.0 * M_PI * u2);
            if (i + 1 < 5) code[i + 1] = r * std::sin(2.0 * M_PI * u2);
        }
        double norm2 = 0.0;
        for (double v : code) norm2 += v * v;
        if (norm2 > 1e-18) {
            double scale = 10.0 / std::sqrt(norm2);
            for (double& v : code) v *= scale;
            return code;
        }
    }
}

PointPredictions oracle_predictions(const LabeledPointCloud& cloud, const OracleNoise& noise,
                                    uint64_t seed) {
    noise.check();
    Rng rng(seed);

    // Instance centroids for the ideal offsets.
    std::unordered_map<uint32_t, std::array<double, 4>> acc;  // sx, sy, sz, count
    for (const PointRecord& p : cloud.points) {
        if (p.instance == 0) continue;
        std::array<double, 4>& a = acc[p.instance];
        a[0] += p.x;
        a[1] += p.y;
        a[2] += p.z;
        a[3] += 1.0;
    }
    std::unordered_map<uint32_t, std::array<double, 3>> centroid;
    centroid.reserve(acc.size());
    for (const auto& [id, a] : acc) {
        centroid[id] = {a[0] / a[3], a[1] / a[3], a[2] / a[3]};
    }

    PointPredictions preds;
    preds.semantic_prob.reserve(cloud.size());
    preds.offset.reserve(cloud.size());
    preds.embedding.reserve(cloud.size());

    for (const PointRecord& p : cloud.points) {
        bool flip = rng.bernoulli(noise.semantic_flip_prob);
        bool is_tree = p.semantic == Semantic::tree && p.instance > 0;
        if (is_tree) {
            preds.semantic_prob.push_back(flip ? 0.0 : 1.0);
            const std::array<double, 3>& c = centroid.at(p.instance);
            preds.offset.push_back({c[0] - p.x + rng.gaussian(noise.offset_sigma),
                                    c[1] - p.y + rng.gaussian(noise.offset_sigma),
                                    c[2] - p.z + rng.gaussian(noise.offset_sigma)});
            std::array<double, 5> e = instance_embedding_code(p.instance);
            for (double& v : e) v += rng.gaussian(noise.embedding_sigma);
            preds.embedding.push_back(e);
        } else {
            preds.semantic_prob.push_back(flip ? 1.0 : 0.0);
            preds.offset.push_back({0.0, 0.0, 0.0});
            preds.embedding.push_back({0.0, 0.0, 0.0, 0.0, 0.0});
        }
    }
    return preds;
}

}  // namespace treekit
