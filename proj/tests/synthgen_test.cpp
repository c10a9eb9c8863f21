#include <doctest.h>

#include <cmath>
#include <map>

#include "treekit/errors.hpp"
#include "treekit/evaluate.hpp"
#include "treekit/grouping.hpp"
#include "treekit/rng.hpp"
#include "treekit/sparsify.hpp"
#include "treekit/synthgen.hpp"

#include "helpers.hpp"

using namespace treekit;
using namespace treekit::test;

namespace {

std::map<uint32_t, std::array<double, 2>> instance_centroids_xy(const LabeledPointCloud& c) {
    std::map<uint32_t, std::array<double, 3>> acc;  // sx, sy, n
    for (const PointRecord& p : c.points) {
        if (p.instance == 0) continue;
        auto& a = acc[p.instance];
        a[0] += p.x;
        a[1] += p.y;
        a[2] += 1;
    }
    std::map<uint32_t, std::array<double, 2>> out;
    for (const auto& [id, a] : acc) out[id] = {a[0] / a[2], a[1] / a[2]};
    return out;
}

double code_distance(uint32_t a, uint32_t b) {
    auto ca = instance_embedding_code(a), cb = instance_embedding_code(b);
    double s = 0;
    for (int i = 0; i < 5; ++i) s += (ca[i] - cb[i]) * (ca[i] - cb[i]);
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("generate_forest: spacing constraint, labels, determinism") {
    ForestConfig fc;
    fc.plot_size = 20;
    fc.n_trees = 2;
    fc.min_spacing = 5;
    fc.points_per_tree = 400;
    fc.ground_points = 300;

    LabeledPointCloud c = generate_forest(fc, 1);
    InstanceSegmentation gt = InstanceSegmentation::from_cloud(c);
    CHECK(gt.instance_count() == 2);

    auto centroids = instance_centroids_xy(c);
    double dx = centroids[1][0] - centroids[2][0];
    double dy = centroids[1][1] - centroids[2][1];
    // centroids track the stem centers up to crown-sampling wobble
    CHECK(std::sqrt(dx * dx + dy * dy) > fc.min_spacing - 0.5);

    size_t ground = 0;
    for (const PointRecord& p : c.points) {
        if (p.instance == 0) {
            CHECK(p.semantic == Semantic::non_tree);
            CHECK(p.z <= 0.05);
            ++ground;
        } else {
            CHECK(p.semantic == Semantic::tree);
        }
    }
    CHECK(ground == fc.ground_points);

    CHECK(generate_forest(fc, 1) == c);
    CHECK(generate_forest(fc, 2) != c);
    CHECK(validate(c).empty());
}

TEST_CASE("generate_forest: infeasible placement fails, bad configs rejected") {
    ForestConfig fc;
    fc.plot_size = 6;
    fc.n_trees = 30;
    fc.min_spacing = 5;
    fc.points_per_tree = 10;
    fc.ground_points = 10;
    CHECK_THROWS_AS(generate_forest(fc, 1), ValidationError);

    ForestConfig bad;
    bad.n_trees = 0;
    CHECK_THROWS_AS(generate_forest(bad, 1), ValidationError);
}

TEST_CASE("instance_embedding_code: on the sphere, well separated") {
    for (uint32_t id : {1u, 7u, 12345u}) {
        auto c = instance_embedding_code(id);
        double n2 = 0;
        for (double v : c) n2 += v * v;
        CHECK(std::sqrt(n2) == doctest::Approx(10.0));
        CHECK(c == instance_embedding_code(id));  // pure function
    }

    // sequential ids (what generated forests use) keep a wide margin
    double min_seq = 1e9;
    for (uint32_t a = 1; a <= 200; ++a) {
        for (uint32_t b = a + 1; b <= 200; ++b) min_seq = std::min(min_seq, code_distance(a, b));
    }
    CHECK(min_seq >= 2.0);

    // random id pairs stay at least 1 apart
    Rng rng(42);
    double min_rand = 1e9;
    for (int k = 0; k < 1000; ++k) {
        auto a = static_cast<uint32_t>(rng.next_u64());
        auto b = static_cast<uint32_t>(rng.next_u64());
        if (a == b) continue;
        min_rand = std::min(min_rand, code_distance(a, b));
    }
    CHECK(min_rand >= 1.0);
}

TEST_CASE("oracle_predictions: zero noise shifts every tree point onto its centroid") {
    ForestConfig fc;
    fc.n_trees = 4;
    fc.min_spacing = 6;
    fc.points_per_tree = 200;
    fc.ground_points = 200;
    LabeledPointCloud c = generate_forest(fc, 9);
    PointPredictions preds = oracle_predictions(c, OracleNoise{}, 10);

    std::map<uint32_t, std::array<double, 4>> acc;
    for (const PointRecord& p : c.points) {
        if (p.instance == 0) continue;
        auto& a = acc[p.instance];
        a[0] += p.x;
        a[1] += p.y;
        a[2] += p.z;
        a[3] += 1;
    }
    for (size_t i = 0; i < c.size(); ++i) {
        const PointRecord& p = c.points[i];
        if (p.instance == 0) {
            CHECK(preds.semantic_prob[i] == 0.0);
            CHECK(preds.offset[i] == std::array<double, 3>{0, 0, 0});
            CHECK(preds.embedding[i] == std::array<double, 5>{0, 0, 0, 0, 0});
            continue;
        }
        CHECK(preds.semantic_prob[i] == 1.0);
        const auto& a = acc[p.instance];
        CHECK(p.x + preds.offset[i][0] == doctest::Approx(a[0] / a[3]).epsilon(1e-12));
        CHECK(p.y + preds.offset[i][1] == doctest::Approx(a[1] / a[3]).epsilon(1e-12));
        CHECK(p.z + preds.offset[i][2] == doctest::Approx(a[2] / a[3]).epsilon(1e-12));
        CHECK(preds.embedding[i] == instance_embedding_code(p.instance));
    }

    CHECK(oracle_predictions(c, OracleNoise{}, 10) == preds);  // deterministic
}

TEST_CASE("oracle_predictions: flip probability flips both classes") {
    ForestConfig fc;
    fc.n_trees = 3;
    fc.min_spacing = 6;
    fc.points_per_tree = 2000;
    fc.ground_points = 2000;
    LabeledPointCloud c = generate_forest(fc, 20);
    OracleNoise noise;
    noise.semantic_flip_prob = 0.1;
    PointPredictions preds = oracle_predictions(c, noise, 21);

    size_t tree_flipped = 0, tree_total = 0, ground_flipped = 0, ground_total = 0;
    for (size_t i = 0; i < c.size(); ++i) {
        if (c.points[i].instance > 0) {
            ++tree_total;
            if (preds.semantic_prob[i] == 0.0) ++tree_flipped;
        } else {
            ++ground_total;
            if (preds.semantic_prob[i] == 1.0) ++ground_flipped;
        }
    }
    CHECK(static_cast<double>(tree_flipped) / tree_total == doctest::Approx(0.1).epsilon(0.35));
    CHECK(static_cast<double>(ground_flipped) / ground_total ==
          doctest::Approx(0.1).epsilon(0.35));

    OracleNoise bad;
    bad.semantic_flip_prob = 1.5;
    CHECK_THROWS_AS(oracle_predictions(c, bad, 1), ValidationError);
}

TEST_CASE("pipeline: zero noise gives a perfect scorecard") {
    ForestConfig fc;
    fc.plot_size = 40;
    fc.n_trees = 12;
    fc.min_spacing = 6;
    fc.crown_radius_range = {1.0, 2.0};
    fc.height_range = {6.0, 25.0};
    fc.points_per_tree = 300;
    fc.ground_points = 1500;
    LabeledPointCloud c = generate_forest(fc, 31);
    PointPredictions preds = oracle_predictions(c, OracleNoise{}, 32);

    InstanceSegmentation seg = segment(c, preds, GroupingConfig{});
    InstanceSegmentation gt = InstanceSegmentation::from_cloud(c);
    MetricsReport r = evaluate_pair(c, gt, seg);

    CHECK(r.detection_rate == 1.0);
    CHECK(r.omission_rate == 0.0);
    CHECK(r.commission_rate == 0.0);
    CHECK(r.f1_tree == 1.0);
    REQUIRE(r.rmse_h.has_value());
    CHECK(*r.rmse_h == 0.0);
}

TEST_CASE("pipeline: detection degrades as offset noise grows") {
    ForestConfig fc;
    fc.plot_size = 30;
    fc.n_trees = 15;
    fc.min_spacing = 5;
    fc.crown_radius_range = {1.0, 1.8};
    fc.points_per_tree = 300;
    fc.ground_points = 2000;

    GroupingConfig cfg;
    std::array<double, 3> sigmas{0.0, 0.5, 2.0};
    std::array<double, 3> mean_detection{};
    const int n_seeds = 10;
    for (int s = 0; s < n_seeds; ++s) {
        LabeledPointCloud c = generate_forest(fc, 100 + s);
        InstanceSegmentation gt = InstanceSegmentation::from_cloud(c);
        for (size_t k = 0; k < sigmas.size(); ++k) {
            OracleNoise noise;
            noise.offset_sigma = sigmas[k];
            noise.embedding_sigma = 2.5;  // embedding route degrades alongside
            PointPredictions preds = oracle_predictions(c, noise, 200 + s);
            InstanceSegmentation seg = segment(c, preds, cfg);
            mean_detection[k] += evaluate_pair(c, gt, seg).detection_rate;
        }
    }
    for (double& d : mean_detection) d /= n_seeds;
    CHECK(mean_detection[0] >= mean_detection[1]);
    CHECK(mean_detection[1] >= mean_detection[2]);
    CHECK(mean_detection[0] > mean_detection[2]);  // the degradation is real
}

TEST_CASE("pipeline: sparsifying to 10 pts/m2 does not beat 100 pts/m2") {
    ForestConfig fc;
    fc.plot_size = 16;
    fc.n_trees = 8;
    fc.min_spacing = 4.5;
    fc.crown_radius_range = {1.0, 1.6};
    fc.points_per_tree = 450;
    fc.ground_points = 4000;

    GroupingConfig cfg;
    OracleNoise noise;
    noise.offset_sigma = 0.5;
    noise.semantic_flip_prob = 0.05;
    noise.embedding_sigma = 2.5;

    double det_100 = 0, det_10 = 0;
    const int n_seeds = 6;
    for (int s = 0; s < n_seeds; ++s) {
        LabeledPointCloud c = generate_forest(fc, 300 + s);
        for (double density : {100.0, 10.0}) {
            LabeledPointCloud thin = sparsify(c, density, 400 + s);
            PointPredictions preds = oracle_predictions(thin, noise, 500 + s);
            InstanceSegmentation seg = segment(thin, preds, cfg);
            InstanceSegmentation gt = InstanceSegmentation::from_cloud(thin);
            double det = evaluate_pair(thin, gt, seg).detection_rate;
            (density == 100.0 ? det_100 : det_10) += det;
        }
    }
    CHECK(det_10 / n_seeds <= det_100 / n_seeds);
}
