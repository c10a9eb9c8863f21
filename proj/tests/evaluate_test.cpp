#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "treekit/augment.hpp"
#include "treekit/errors.hpp"
#include "treekit/evaluate.hpp"
#include "treekit/rng.hpp"

#include "helpers.hpp"

using namespace treekit;
using namespace treekit::test;

namespace {

InstanceSegmentation seg_of(std::vector<uint32_t> ids) {
    InstanceSegmentation s;
    s.ids = std::move(ids);
    return s;
}

// All-pairs IoU scan over explicit point sets: the oracle match_instances
// must reproduce.
std::vector<std::pair<uint32_t, uint32_t>> brute_matches(const InstanceSegmentation& gt,
                                                         const InstanceSegmentation& pred) {
    std::map<uint32_t, std::set<uint32_t>> gt_sets, pred_sets;
    for (size_t i = 0; i < gt.ids.size(); ++i) {
        if (gt.ids[i] > 0) gt_sets[gt.ids[i]].insert(static_cast<uint32_t>(i));
        if (pred.ids[i] > 0) pred_sets[pred.ids[i]].insert(static_cast<uint32_t>(i));
    }
    std::vector<std::pair<uint32_t, uint32_t>> out;
    for (const auto& [g, gs] : gt_sets) {
        for (const auto& [p, ps] : pred_sets) {
            std::vector<uint32_t> inter;
            std::set_intersection(gs.begin(), gs.end(), ps.begin(), ps.end(),
                                  std::back_inserter(inter));
            double uni = static_cast<double>(gs.size() + ps.size() - inter.size());
            if (static_cast<double>(inter.size()) / uni > 0.5) out.push_back({g, p});
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

InstanceSegmentation random_map(Rng& rng, size_t n, uint32_t max_id) {
    InstanceSegmentation s;
    s.ids.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        s.ids.push_back(static_cast<uint32_t>(rng.index(max_id + 1)));
    }
    return s;
}

}  // namespace

TEST_CASE("instance_iou: identical, disjoint, hand-computed overlap") {
    std::vector<uint32_t> a{1, 2, 3, 4, 5, 6, 7, 11};
    std::vector<uint32_t> b{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    CHECK(instance_iou(a, a) == 1.0);
    CHECK(instance_iou(a, {20, 21}) == 0.0);
    CHECK(instance_iou(a, b) == doctest::Approx(7.0 / 11.0));
    CHECK_THROWS_AS(instance_iou({}, {}), ValidationError);
}

TEST_CASE("match_instances: perfect prediction, merged-trees boundary, partial overlap") {
    InstanceSegmentation gt = seg_of({1, 1, 1, 2, 2, 2, 0, 0});
    auto matches = match_instances(gt, gt);
    REQUIRE(matches.size() == 2);
    CHECK(matches[0].iou == 1.0);
    CHECK(matches[1].iou == 1.0);

    // two 10-point gt trees merged into one 20-point prediction: IoU exactly
    // 0.5 each -> no matches
    std::vector<uint32_t> gt_ids(20), pred_ids(20, 7);
    for (size_t i = 0; i < 20; ++i) gt_ids[i] = i < 10 ? 1 : 2;
    CHECK(match_instances(seg_of(gt_ids), seg_of(pred_ids)).empty());

    // gt {1..10}, pred {1..7, 11}: IoU 7/11 > 0.5
    std::vector<uint32_t> g(12, 0), p(12, 0);
    for (size_t i = 1; i <= 10; ++i) g[i] = 1;
    for (size_t i = 1; i <= 7; ++i) p[i] = 3;
    p[11] = 3;
    auto m = match_instances(seg_of(g), seg_of(p));
    REQUIRE(m.size() == 1);
    CHECK(m[0].gt_id == 1);
    CHECK(m[0].pred_id == 3);
    CHECK(m[0].iou == doctest::Approx(7.0 / 11.0));

    CHECK_THROWS_AS(match_instances(seg_of({1, 1}), seg_of({1})), AlignmentError);
}

TEST_CASE("match_instances: equals the brute-force scan, ids matched at most once") {
    Rng rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        size_t n = 20 + rng.index(400);
        InstanceSegmentation gt = random_map(rng, n, 1 + rng.index(12));
        InstanceSegmentation pred = random_map(rng, n, 1 + rng.index(12));
        if (gt.instance_count() == 0) continue;

        auto matches = match_instances(gt, pred);
        std::vector<std::pair<uint32_t, uint32_t>> pairs;
        std::set<uint32_t> gt_seen, pred_seen;
        for (const MatchRecord& m : matches) {
            pairs.push_back({m.gt_id, m.pred_id});
            CHECK(gt_seen.insert(m.gt_id).second);
            CHECK(pred_seen.insert(m.pred_id).second);
        }
        std::sort(pairs.begin(), pairs.end());
        CHECK(pairs == brute_matches(gt, pred));
    }
}

TEST_CASE("tree_metrics: worked example and degenerate conventions") {
    // gt_count 4, tp 3, pt_count 5
    InstanceSegmentation gt = seg_of({1, 1, 2, 2, 3, 3, 4, 4, 0, 0, 0, 0});
    InstanceSegmentation pred = seg_of({5, 5, 6, 6, 7, 7, 0, 0, 8, 8, 9, 9});
    auto matches = match_instances(gt, pred);
    REQUIRE(matches.size() == 3);
    MetricsReport r = tree_metrics(matches, gt, pred);
    CHECK(r.tp == 3);
    CHECK(r.fn == 1);
    CHECK(r.fp == 2);
    CHECK(r.detection_rate == doctest::Approx(0.75));
    CHECK(r.omission_rate == doctest::Approx(0.25));
    CHECK(r.commission_rate == doctest::Approx(0.40));
    CHECK(r.precision == doctest::Approx(0.60));
    CHECK(r.recall == doctest::Approx(0.75));
    CHECK(r.f1_tree == doctest::Approx(0.9 / 1.35));

    // perfect prediction
    MetricsReport perfect = tree_metrics(match_instances(gt, gt), gt, gt);
    CHECK(perfect.detection_rate == 1.0);
    CHECK(perfect.omission_rate == 0.0);
    CHECK(perfect.commission_rate == 0.0);
    CHECK(perfect.f1_tree == 1.0);

    // zero predictions: commission 0 by convention, f1 0
    InstanceSegmentation none = seg_of(std::vector<uint32_t>(12, 0));
    MetricsReport empty = tree_metrics({}, gt, none);
    CHECK(empty.detection_rate == 0.0);
    CHECK(empty.omission_rate == 1.0);
    CHECK(empty.commission_rate == 0.0);
    CHECK(empty.f1_tree == 0.0);

    CHECK_THROWS_AS(tree_metrics({}, none, gt), ValidationError);
}

TEST_CASE("tree_metrics: identities hold bitwise for random maps") {
    Rng rng(2);
    for (int trial = 0; trial < 1000; ++trial) {
        size_t n = 10 + rng.index(200);
        InstanceSegmentation gt = random_map(rng, n, 1 + rng.index(10));
        InstanceSegmentation pred = random_map(rng, n, 1 + rng.index(10));
        if (gt.instance_count() == 0) continue;
        MetricsReport r = tree_metrics(match_instances(gt, pred), gt, pred);
        CHECK(r.recall == r.detection_rate);
        CHECK(r.commission_rate == 1.0 - r.precision);
        CHECK(r.tp + r.fn == r.gt_count);
        CHECK(r.tp + r.fp == r.pt_count);
    }
}

TEST_CASE("rmse_height: zero for identical, hand-computed pairs") {
    // one tree spans z in [2,22] (H=20); prediction covers z in [5,22] (H=17)
    LabeledPointCloud c;
    c.points = {pt(0, 0, 2, 1, 1), pt(0, 1, 10, 1, 1), pt(1, 0, 22, 1, 1), pt(1, 1, 5, 1, 1)};
    InstanceSegmentation gt = seg_of({1, 1, 1, 1});
    InstanceSegmentation pred = seg_of({0, 9, 9, 9});  // drops the z=2 point
    auto matches = match_instances(gt, pred);
    REQUIRE(matches.size() == 1);  // IoU 3/4
    auto rmse = rmse_height(matches, c, gt, pred);
    REQUIRE(rmse.has_value());
    CHECK(*rmse == doctest::Approx(3.0));

    auto zero = rmse_height(match_instances(gt, gt), c, gt, gt);
    CHECK(*zero == 0.0);

    CHECK(!rmse_height({}, c, gt, pred).has_value());
}

TEST_CASE("rmse_height: two matches with errors 3 and 4") {
    LabeledPointCloud c;
    // tree 1: gt spans [0,20] (H 20), pred keeps [3,20] (H 17) -> error 3
    // tree 2: gt spans [5,15] (H 10), pred keeps [9,15] (H 6)  -> error 4
    c.points = {pt(0, 0, 0, 1, 1),  pt(0, 0, 20, 1, 1), pt(0, 0, 3, 1, 1),
                pt(0, 0, 19, 1, 1), pt(9, 9, 5, 1, 2),  pt(9, 9, 15, 1, 2),
                pt(9, 9, 9, 1, 2),  pt(9, 9, 14, 1, 2)};
    InstanceSegmentation gt = seg_of({1, 1, 1, 1, 2, 2, 2, 2});
    InstanceSegmentation pred = seg_of({0, 5, 5, 5, 0, 6, 6, 6});
    auto matches = match_instances(gt, pred);  // IoU 3/4 each
    REQUIRE(matches.size() == 2);
    auto rmse = rmse_height(matches, c, gt, pred);
    REQUIRE(rmse.has_value());
    CHECK(*rmse == doctest::Approx(std::sqrt((3.0 * 3.0 + 4.0 * 4.0) / 2.0)));
    CHECK(*rmse == doctest::Approx(3.5355339059));
}

TEST_CASE("local_f1: per-pair point-level F1, averaged over matches") {
    // single match: gt {1..10}, pred {1..7, 11}
    std::vector<uint32_t> g(12, 0), p(12, 0);
    for (size_t i = 1; i <= 10; ++i) g[i] = 1;
    for (size_t i = 1; i <= 7; ++i) p[i] = 2;
    p[11] = 2;
    InstanceSegmentation gt = seg_of(g), pred = seg_of(p);
    auto matches = match_instances(gt, pred);
    REQUIRE(matches.size() == 1);
    // precision 7/8, recall 7/10 -> F1 = 2*0.875*0.7 / 1.575
    CHECK(local_f1(matches, gt, pred) == doctest::Approx(1.225 / 1.575));

    CHECK(local_f1(match_instances(gt, gt), gt, gt) == doctest::Approx(1.0));
    CHECK_THROWS_AS(local_f1({}, gt, pred), ValidationError);

    // two matched pairs with per-pair F1 of 1.0 and 0.5 average to 0.75:
    // tree 2 has 6 points, prediction covers 2 of them and 2 outside
    // precision 2/4, recall 2/6 -> F1 = 2*(0.5*0.3333)/(0.8333) = 0.4 .. adjust
    // build exact 0.5: precision 0.5, recall 0.5: 4-point tree, pred has 2 of
    // its points plus 2 foreign -> but IoU = 2/6 = 0.33 < 0.5, unmatched.
    // Use gt 3 points, pred 2+1: IoU = 2/4 = 0.5, still unmatched.
    // A matched pair with F1 = 0.5 needs IoU > 0.5: impossible? F1 = 2I/(|g|+|p|),
    // IoU = I/(|g|+|p|-I) > 0.5 forces F1 > 2/3. Use F1 = 1 and 6/7 instead.
    std::vector<uint32_t> g2(16, 0), p2(16, 0);
    for (size_t i = 0; i < 4; ++i) g2[i] = 1;
    for (size_t i = 0; i < 4; ++i) p2[i] = 1;  // exact: F1 1.0
    for (size_t i = 8; i <= 10; ++i) g2[i] = 2;
    for (size_t i = 8; i <= 11; ++i) p2[i] = 2;  // I=3,|g|=3,|p|=4: F1 = 6/7
    auto m2 = match_instances(seg_of(g2), seg_of(p2));
    REQUIRE(m2.size() == 2);
    CHECK(local_f1(m2, seg_of(g2), seg_of(p2)) ==
          doctest::Approx(0.5 * (1.0 + 6.0 / 7.0)));
}

TEST_CASE("height_bin_report: bin assignment and boundary convention") {
    LabeledPointCloud c;
    auto add_tree = [&c](uint32_t id, double height) {
        c.points.push_back(pt(id, 0, 0, 1, id));
        c.points.push_back(pt(id, 0, height, 1, id));
    };
    add_tree(1, 3.0);
    add_tree(2, 7.0);
    add_tree(3, 12.0);
    InstanceSegmentation gt = InstanceSegmentation::from_cloud(c);
    auto matches = match_instances(gt, gt);
    auto bins = height_bin_report(c, gt, matches);
    REQUIRE(bins.size() == 3);
    for (const BinRow& b : bins) {
        CHECK(b.n_gt == 1);
        CHECK(b.detection_rate == 1.0);
    }
    CHECK(bins[0].bin_low == 0.0);
    CHECK(bins[1].bin_low == 5.0);
    CHECK(bins[2].bin_low == 10.0);

    // height exactly 5.0 lands in [5,10)
    LabeledPointCloud c5;
    c5.points = {pt(0, 0, 0, 1, 1), pt(0, 0, 5.0, 1, 1)};
    InstanceSegmentation gt5 = InstanceSegmentation::from_cloud(c5);
    auto bins5 = height_bin_report(c5, gt5, match_instances(gt5, gt5));
    REQUIRE(bins5.size() == 1);
    CHECK(bins5[0].bin_low == 5.0);
    CHECK(bins5[0].bin_high == 10.0);

    // heights {3, 4}, only the 4 m tree matched -> bin [0,5): n_gt 2, rate 0.5
    LabeledPointCloud c2;
    c2.points = {pt(0, 0, 0, 1, 1), pt(0, 0, 3, 1, 1), pt(5, 5, 0, 1, 2), pt(5, 5, 4, 1, 2)};
    InstanceSegmentation gt2 = InstanceSegmentation::from_cloud(c2);
    InstanceSegmentation pred2 = seg_of({0, 0, 1, 1});  // only tree 2 predicted
    auto bins2 = height_bin_report(c2, gt2, match_instances(gt2, pred2));
    REQUIRE(bins2.size() == 1);
    CHECK(bins2[0].n_gt == 2);
    CHECK(bins2[0].n_tp == 1);
    CHECK(bins2[0].detection_rate == 0.5);
}

TEST_CASE("compute_ce: published throughput values") {
    CHECK(std::abs(compute_ce({11264, 64, 403.12}) - 0.44) <= 0.005);
    CHECK(std::abs(compute_ce({300, 200, 101}) - 0.015) <= 0.0005);
    CHECK(std::abs(compute_ce({1638, 64, 49.13}) - 0.52) <= 0.005);
    CHECK_THROWS_AS(compute_ce({0, 64, 10}), ValidationError);
    CHECK_THROWS_AS(compute_ce({10, -1, 10}), ValidationError);
}

TEST_CASE("evaluate_pair: permutation of predicted ids changes nothing") {
    Rng rng(3);
    LabeledPointCloud c = random_cloud(rng, 300, 20.0, 8);
    InstanceSegmentation gt = InstanceSegmentation::from_cloud(c);
    if (gt.instance_count() == 0) return;
    InstanceSegmentation pred = random_map(rng, c.size(), 8);

    MetricsReport a = evaluate_pair(c, gt, pred);

    // relabel predictions through a random permutation of 1..8
    std::vector<uint32_t> perm{0, 1, 2, 3, 4, 5, 6, 7, 8};
    for (size_t i = 8; i > 1; --i) std::swap(perm[i], perm[1 + rng.index(i)]);
    InstanceSegmentation relabeled = pred;
    for (uint32_t& id : relabeled.ids) id = perm[id];

    MetricsReport b = evaluate_pair(c, gt, relabeled);
    CHECK(a.tp == b.tp);
    CHECK(a.fp == b.fp);
    CHECK(a.fn == b.fn);
    CHECK(a.detection_rate == b.detection_rate);
    CHECK(a.commission_rate == b.commission_rate);
    CHECK(a.f1_tree == b.f1_tree);
    CHECK(a.f1_local == doctest::Approx(b.f1_local));
    CHECK(a.rmse_h.has_value() == b.rmse_h.has_value());
    if (a.rmse_h) CHECK(*a.rmse_h == doctest::Approx(*b.rmse_h));
    REQUIRE(a.per_bin.size() == b.per_bin.size());
    for (size_t i = 0; i < a.per_bin.size(); ++i) {
        CHECK(a.per_bin[i].n_tp == b.per_bin[i].n_tp);
    }
}

TEST_CASE("evaluate_pair: per-bin counts sum to the global counts") {
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        LabeledPointCloud c = random_cloud(rng, 200, 15.0, 6);
        InstanceSegmentation gt = InstanceSegmentation::from_cloud(c);
        if (gt.instance_count() == 0) continue;
        InstanceSegmentation pred = random_map(rng, c.size(), 6);
        MetricsReport r = evaluate_pair(c, gt, pred);
        size_t bin_gt = 0, bin_tp = 0;
        for (const BinRow& b : r.per_bin) {
            bin_gt += b.n_gt;
            bin_tp += b.n_tp;
        }
        CHECK(bin_gt == r.gt_count);
        CHECK(bin_tp == r.tp);
    }
}

TEST_CASE("rmse_height: invariant under z-rotation of the cloud") {
    Rng rng(5);
    LabeledPointCloud c = random_cloud(rng, 150, 12.0, 5);
    InstanceSegmentation gt = InstanceSegmentation::from_cloud(c);
    if (gt.instance_count() == 0) return;
    InstanceSegmentation pred = random_map(rng, c.size(), 5);
    auto matches = match_instances(gt, pred);
    if (matches.empty()) return;

    auto r0 = rmse_height(matches, c, gt, pred);
    LabeledPointCloud spun = rotate_z_by(c, 1.234);
    auto r1 = rmse_height(matches, spun, gt, pred);
    CHECK(*r0 == doctest::Approx(*r1).epsilon(1e-12));
}

TEST_CASE("report_to_json: exact schema keys") {
    LabeledPointCloud c;
    c.points = {pt(0, 0, 0, 1, 1), pt(0, 0, 8, 1, 1), pt(3, 3, 0), pt(4, 4, 0)};
    InstanceSegmentation gt = InstanceSegmentation::from_cloud(c);
    MetricsReport r = evaluate_pair(c, gt, gt);
    nlohmann::json j = report_to_json(r);

    for (const char* key :
         {"counts", "detection_rate", "omission_rate", "commission_rate", "precision",
          "recall", "f1_tree", "f1_local", "rmse_h_m", "per_bin"}) {
        CHECK(j.contains(key));
    }
    for (const char* key : {"tp", "fp", "fn", "gt", "pt"}) CHECK(j["counts"].contains(key));
    CHECK(j["rmse_h_m"].get<double>() == 0.0);
    REQUIRE(j["per_bin"].size() == 1);
    for (const char* key : {"bin_low", "bin_high", "n_gt", "n_tp", "detection_rate"}) {
        CHECK(j["per_bin"][0].contains(key));
    }

    // no matches -> rmse is null
    InstanceSegmentation none = seg_of({0, 0, 0, 0});
    nlohmann::json j2 = report_to_json(evaluate_pair(c, gt, none));
    CHECK(j2["rmse_h_m"].is_null());
    CHECK(j2["f1_local"].get<double>() == 0.0);
}
