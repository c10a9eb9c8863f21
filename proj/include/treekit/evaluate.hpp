#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "treekit/cloud.hpp"
#include "treekit/grouping.hpp"

#include <json.hpp>

namespace treekit {

/// One matched (ground truth, prediction) instance pair. Matches require
/// point-level IoU strictly above 0.5, which also forces each id to appear
/// in at most one match. Heights are z-extents, filled when a cloud is
/// available.
struct MatchRecord {
    uint32_t gt_id = 0;
    uint32_t pred_id = 0;
    double iou = 0.0;
    double gt_height = 0.0;
    double pred_height = 0.0;
};

struct BinRow {
    double bin_low = 0.0;
    double bin_high = 0.0;
    size_t n_gt = 0;
    size_t n_tp = 0;
    double detection_rate = 0.0;
};

struct MetricsReport {
    size_t tp = 0, fp = 0, fn = 0, gt_count = 0, pt_count = 0;
    double detection_rate = 0.0;   // TP / GT
    double omission_rate = 0.0;    // FN / GT
    double commission_rate = 0.0;  // FP / PT (0 when PT = 0)
    double precision = 0.0;        // TP / (TP + FP)
    double recall = 0.0;           // TP / (TP + FN)
    double f1_tree = 0.0;          // harmonic mean of precision and recall
    double f1_local = 0.0;         // mean per-matched-pair point-level F1
    std::optional<double> rmse_h;  // over matched pairs; absent when none
    std::vector<BinRow> per_bin;
};

/// Amount of data pushed through a system, for the throughput metric below.
struct CEInput {
    double data_mb = 0.0;
    double cores = 0.0;
    double minutes = 0.0;
};

/// Point-set IoU of two sorted index sets over the same cloud. Throws when
/// both sets are empty (undefined).
double instance_iou(const std::vector<uint32_t>& a, const std::vector<uint32_t>& b);

/// All (gt_id, pred_id) pairs with IoU > 0.5, sorted by gt id. Built from a
/// single-pass contingency table, O(n). Throws AlignmentError on length
/// mismatch. Heights are left at 0; fill_match_heights adds them.
std::vector<MatchRecord> match_instances(const InstanceSegmentation& gt,
                                         const InstanceSegmentation& pred);

/// Fills gt_height/pred_height (max z - min z of each instance's points).
void fill_match_heights(std::vector<MatchRecord>& matches, const LabeledPointCloud& cloud,
                        const InstanceSegmentation& gt, const InstanceSegmentation& pred);

/// Counts and the rate/precision/recall/F1 block. recall and detection_rate
/// are the same division, and commission_rate is computed as 1 - precision,
/// so the algebraic identities hold bitwise. Throws when gt has no instances.
MetricsReport tree_metrics(const std::vector<MatchRecord>& matches,
                           const InstanceSegmentation& gt, const InstanceSegmentation& pred);

/// RMSE of instance height over matched pairs; nullopt when there are none.
std::optional<double> rmse_height(const std::vector<MatchRecord>& matches,
                                  const LabeledPointCloud& cloud,
                                  const InstanceSegmentation& gt,
                                  const InstanceSegmentation& pred);

/// Mean per-matched-pair point-level F1 (precision against the predicted
/// set, recall against the ground-truth set). Throws when matches is empty.
double local_f1(const std::vector<MatchRecord>& matches, const InstanceSegmentation& gt,
                const InstanceSegmentation& pred);

/// Ground-truth trees bucketed into [k*bin, (k+1)*bin) by height; per-bin
/// detection rates. Empty bins are omitted; rows sorted by bin_low.
std::vector<BinRow> height_bin_report(const LabeledPointCloud& cloud,
                                      const InstanceSegmentation& gt,
                                      const std::vector<MatchRecord>& matches,
                                      double bin_height = 5.0);

/// Data processed per core per minute. Throws on non-positive input.
double compute_ce(const CEInput& input);

/// Full report for one (cloud, gt, pred) triple.
MetricsReport evaluate_pair(const LabeledPointCloud& cloud, const InstanceSegmentation& gt,
                            const InstanceSegmentation& pred, double bin_height = 5.0);

/// Report JSON, schema-stable:
///   counts{tp,fp,fn,gt,pt}, detection_rate, omission_rate, commission_rate,
///   precision, recall, f1_tree, f1_local, rmse_h_m (nullable),
///   per_bin[{bin_low,bin_high,n_gt,n_tp,detection_rate}]
nlohmann::json report_to_json(const MetricsReport& report);

}  // namespace treekit
