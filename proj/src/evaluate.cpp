#include "treekit/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

#include "treekit/errors.hpp"

namespace treekit {

namespace {

void check_aligned(const InstanceSegmentation& gt, const InstanceSegmentation& pred) {
    if (gt.ids.size() != pred.ids.size()) {
        throw AlignmentError("gt length " + std::to_string(gt.ids.size()) +
                             " vs pred length " + std::to_string(pred.ids.size()));
    }
}

struct PairCounts {
    std::unordered_map<uint32_t, size_t> gt_size;
    std::unordered_map<uint32_t, size_t> pred_size;
    std::map<std::pair<uint32_t, uint32_t>, size_t> inter;  // ordered for stable output
};

PairCounts contingency(const InstanceSegmentation& gt, const InstanceSegmentation& pred) {
    PairCounts pc;
    for (size_t i = 0; i < gt.ids.size(); ++i) {
        uint32_t g = gt.ids[i], p = pred.ids[i];
        if (g > 0) ++pc.gt_size[g];
        if (p > 0) ++pc.pred_size[p];
        if (g > 0 && p > 0) ++pc.inter[{g, p}];
    }
    return pc;
}

/// max z - min z per instance id.
std::unordered_map<uint32_t, double> instance_heights(const LabeledPointCloud& cloud,
                                                      const InstanceSegmentation& seg) {
    std::unordered_map<uint32_t, std::pair<double, double>> extent;
    for (size_t i = 0; i < seg.ids.size(); ++i) {
        uint32_t id = seg.ids[i];
        if (id == 0) continue;
        double z = cloud.points[i].z;
        auto [it, fresh] = extent.try_emplace(id, std::pair<double, double>{z, z});
        if (!fresh) {
            it->second.first = std::min(it->second.first, z);
            it->second.second = std::max(it->second.second, z);
        }
    }
    std::unordered_map<uint32_t, double> heights;
    heights.reserve(extent.size());
    for (const auto& [id, mm] : extent) heights[id] = mm.second - mm.first;
    return heights;
}

}  // namespace

double instance_iou(const std::vector<uint32_t>& a, const std::vector<uint32_t>& b) {
    return candidate_iou(a, b);  // throws when both empty
}

std::vector<MatchRecord> match_instances(const InstanceSegmentation& gt,
                                         const InstanceSegmentation& pred) {
    check_aligned(gt, pred);
    PairCounts pc = contingency(gt, pred);
    std::vector<MatchRecord> matches;
    for (const auto& [pair, inter] : pc.inter) {
        auto [g, p] = pair;
        size_t uni = pc.gt_size[g] + pc.pred_size[p] - inter;
        double iou = static_cast<double>(inter) / static_cast<double>(uni);
        if (iou > 0.5) {
            MatchRecord m;
            m.gt_id = g;
            m.pred_id = p;
            m.iou = iou;
            matches.push_back(m);
        }
    }
    return matches;
}

void fill_match_heights(std::vector<MatchRecord>& matches, const LabeledPointCloud& cloud,
                        const InstanceSegmentation& gt, const InstanceSegmentation& pred) {
    std::unordered_map<uint32_t, double> gt_h = instance_heights(cloud, gt);
    std::unordered_map<uint32_t, double> pred_h = instance_heights(cloud, pred);
    for (MatchRecord& m : matches) {
        m.gt_height = gt_h.at(m.gt_id);
        m.pred_height = pred_h.at(m.pred_id);
    }
}

MetricsReport tree_metrics(const std::vector<MatchRecord>& matches,
                           const InstanceSegmentation& gt, const InstanceSegmentation& pred) {
    check_aligned(gt, pred);
    MetricsReport r;
    r.gt_count = gt.instance_count();
    r.pt_count = pred.instance_count();
    if (r.gt_count == 0) throw ValidationError("tree_metrics: no ground-truth instances");
    r.tp = matches.size();
    r.fn = r.gt_count - r.tp;
    r.fp = r.pt_count - r.tp;

    double gt_d = static_cast<double>(r.gt_count);
    r.detection_rate = static_cast<double>(r.tp) / gt_d;
    r.omission_rate = static_cast<double>(r.fn) / gt_d;
    r.recall = static_cast<double>(r.tp) / gt_d;  // same division as detection_rate
    if (r.pt_count > 0) {
        r.precision = static_cast<double>(r.tp) / static_cast<double>(r.pt_count);
        // FP/PT, written as 1 - precision so the identity holds bitwise.
        r.commission_rate = 1.0 - r.precision;
    } else {
        r.precision = 0.0;
        r.commission_rate = 0.0;
    }
    double pr = r.precision + r.recall;
    r.f1_tree = pr > 0.0 ? 2.0 * r.precision * r.recall / pr : 0.0;
    return r;
}

std::optional<double> rmse_height(const std::vector<MatchRecord>& matches,
                                  const LabeledPointCloud& cloud,
                                  const InstanceSegmentation& gt,
                                  const InstanceSegmentation& pred) {
    if (matches.empty()) return std::nullopt;
    std::unordered_map<uint32_t, double> gt_h = instance_heights(cloud, gt);
    std::unordered_map<uint32_t, double> pred_h = instance_heights(cloud, pred);
    double acc = 0.0;
    for (const MatchRecord& m : matches) {
        double d = gt_h.at(m.gt_id) - pred_h.at(m.pred_id);
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(matches.size()));
}

double local_f1(const std::vector<MatchRecord>& matches, const InstanceSegmentation& gt,
                const InstanceSegmentation& pred) {
    if (matches.empty()) throw ValidationError("local_f1: no matches");
    check_aligned(gt, pred);
    PairCounts pc = contingency(gt, pred);
    double acc = 0.0;
    for (const MatchRecord& m : matches) {
        double inter = static_cast<double>(pc.inter.at({m.gt_id, m.pred_id}));
        double prec = inter / static_cast<double>(pc.pred_size.at(m.pred_id));
        double rec = inter / static_cast<double>(pc.gt_size.at(m.gt_id));
        acc += 2.0 * prec * rec / (prec + rec);
    }
    return acc / static_cast<double>(matches.size());
}

std::vector<BinRow> height_bin_report(const LabeledPointCloud& cloud,
                                      const InstanceSegmentation& gt,
                                      const std::vector<MatchRecord>& matches,
                                      double bin_height) {
    if (bin_height <= 0.0) throw ValidationError("height_bin_report: bin height must be > 0");
    std::unordered_map<uint32_t, double> gt_h = instance_heights(cloud, gt);
    std::unordered_map<uint32_t, bool> matched;
    for (const MatchRecord& m : matches) matched[m.gt_id] = true;

    std::map<int64_t, BinRow> bins;  // keyed by bin index, left-closed bins
    for (const auto& [id, h] : gt_h) {
        auto k = static_cast<int64_t>(std::floor(h / bin_height));
        BinRow& row = bins[k];
        row.bin_low = static_cast<double>(k) * bin_height;
        row.bin_high = static_cast<double>(k + 1) * bin_height;
        ++row.n_gt;
        if (matched.count(id)) ++row.n_tp;
    }
    std::vector<BinRow> out;
    out.reserve(bins.size());
    for (auto& [k, row] : bins) {
        row.detection_rate = static_cast<double>(row.n_tp) / static_cast<double>(row.n_gt);
        out.push_back(row);
    }
    return out;
}

double compute_ce(const CEInput& input) {
    if (input.data_mb <= 0.0 || input.cores <= 0.0 || input.minutes <= 0.0) {
        throw ValidationError("compute_ce: all fields must be > 0");
    }
    return input.data_mb / (input.cores * input.minutes);
}

MetricsReport evaluate_pair(const LabeledPointCloud& cloud, const InstanceSegmentation& gt,
                            const InstanceSegmentation& pred, double bin_height) {
    if (gt.ids.size() != cloud.size()) {
        throw AlignmentError("gt length " + std::to_string(gt.ids.size()) +
                             " vs cloud length " + std::to_string(cloud.size()));
    }
    check_aligned(gt, pred);
    std::vector<MatchRecord> matches = match_instances(gt, pred);
    fill_match_heights(matches, cloud, gt, pred);
    MetricsReport r = tree_metrics(matches, gt, pred);
    r.rmse_h = rmse_height(matches, cloud, gt, pred);
    r.f1_local = matches.empty() ? 0.0 : local_f1(matches, gt, pred);
    r.per_bin = height_bin_report(cloud, gt, matches, bin_height);
    return r;
}

nlohmann::json report_to_json(const MetricsReport& r) {
    nlohmann::json j;
    j["counts"] = {{"tp", r.tp}, {"fp", r.fp}, {"fn", r.fn}, {"gt", r.gt_count}, {"pt", r.pt_count}};
    j["detection_rate"] = r.detection_rate;
    j["omission_rate"] = r.omission_rate;
    j["commission_rate"] = r.commission_rate;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["f1_tree"] = r.f1_tree;
    j["f1_local"] = r.f1_local;
    if (r.rmse_h.has_value()) {
        j["rmse_h_m"] = *r.rmse_h;
    } else {
        j["rmse_h_m"] = nullptr;
    }
    j["per_bin"] = nlohmann::json::array();
    for (const BinRow& b : r.per_bin) {
        j["per_bin"].push_back({{"bin_low", b.bin_low},
                                {"bin_high", b.bin_high},
                                {"n_gt", b.n_gt},
                                {"n_tp", b.n_tp},
                                {"detection_rate", b.detection_rate}});
    }
    return j;
}

}  // namespace treekit
