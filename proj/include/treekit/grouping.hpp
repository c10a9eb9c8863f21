#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "treekit/cloud.hpp"

namespace treekit {

/// Per-point predictions, aligned with cloud order. This is the seam where a
/// learned model plugs in: any provider that fills these three arrays drives
/// the grouping stack.
struct PointPredictions {
    std::vector<double> semantic_prob;             // P(tree), in [0,1]
    std::vector<std::array<double, 3>> offset;     // meters, toward tree center
    std::vector<std::array<double, 5>> embedding;  // unitless instance features

    size_t size() const { return semantic_prob.size(); }

    /// Throws ValidationError if the three arrays disagree in length, a
    /// probability leaves [0,1], or any component is non-finite.
    void check() const;

    bool operator==(const PointPredictions&) const = default;
};

enum class CandidateSource : uint8_t { offset_rg = 0, embedding_ms = 1 };

/// A proposed tree instance: a set of point indices plus a confidence score.
/// Members are kept sorted ascending.
struct ClusterCandidate {
    std::vector<uint32_t> members;
    double score = 0.0;
    CandidateSource source = CandidateSource::offset_rg;
};

struct GroupingConfig {
    double semantic_threshold = 0.5;  // strict: keep prob > threshold
    double rg_radius = 0.5;           // meters, region-growing link distance
    size_t rg_min_points = 10;        // discard smaller components
    double ms_bandwidth = 0.6;        // Gaussian kernel bandwidth
    size_t ms_max_iter = 100;
    double ms_tol = 1e-4;             // stop when a shift falls below this
    size_t ms_seed_stride = 1;        // every k-th masked point seeds a mode
    double nms_iou = 0.3;             // accept while IoU <= this

    /// Throws ValidationError on out-of-range values.
    void check() const;
};

/// Per-point predicted instance ids, aligned with cloud order. 0 = unassigned.
struct InstanceSegmentation {
    std::vector<uint32_t> ids;

    size_t size() const { return ids.size(); }
    /// Ground-truth view of a labeled cloud.
    static InstanceSegmentation from_cloud(const LabeledPointCloud& cloud);
    /// Number of distinct nonzero ids.
    size_t instance_count() const;

    bool operator==(const InstanceSegmentation&) const = default;
};

/// Indices whose semantic probability is strictly above the threshold,
/// ascending.
std::vector<uint32_t> semantic_mask(const PointPredictions& preds, double threshold);

/// coordinate + offset for each masked point, in mask order.
std::vector<std::array<double, 3>> shift_points(const LabeledPointCloud& cloud,
                                                const PointPredictions& preds,
                                                std::span<const uint32_t> mask);

/// Connected components of the "within radius" graph, via a uniform grid with
/// cell size = radius (expected O(n·k), k = mean neighbor count). Members are
/// indices into `coords`. Components smaller than min_points are dropped.
/// Candidates are ordered by smallest member.
std::vector<ClusterCandidate> region_grow(std::span<const std::array<double, 3>> coords,
                                          double radius, size_t min_points);

/// Gaussian-kernel mean shift over 5-D embeddings. Every ms_seed_stride-th
/// point seeds an ascent; modes closer than bandwidth/2 merge (first one
/// wins); every point then joins its nearest mode. Members are indices into
/// `embeddings`. Empty member sets are dropped. When modes_out is given it
/// receives the surviving mode positions, aligned with the candidates.
std::vector<ClusterCandidate> mean_shift(std::span<const std::array<double, 5>> embeddings,
                                         const GroupingConfig& config,
                                         std::vector<std::array<double, 5>>* modes_out = nullptr);

using CandidateScorer =
    std::function<double(const ClusterCandidate&, const PointPredictions&)>;

/// Default scorer: mean semantic probability over the members.
double mean_prob_scorer(const ClusterCandidate& candidate, const PointPredictions& preds);

/// Scores candidates in place. Candidate members must be cloud indices.
void score_candidates(std::vector<ClusterCandidate>& candidates,
                      const PointPredictions& preds,
                      const CandidateScorer& scorer = mean_prob_scorer);

/// Point-set IoU of two sorted index sets.
double candidate_iou(const std::vector<uint32_t>& a, const std::vector<uint32_t>& b);

/// Greedy non-maximum suppression. Order: score desc, member count desc,
/// first member asc, members lexicographic, source — a total order, so the
/// result is deterministic. A candidate is accepted iff its IoU with every
/// accepted one is <= nms_iou. Points in several accepted candidates go to
/// the earliest-accepted (highest-score) one; accepted candidates that end up
/// owning at least one point are numbered 1..k in acceptance order.
InstanceSegmentation nms(std::vector<ClusterCandidate> candidates, double nms_iou,
                         size_t n_points);

/// The full grouping stack: mask -> offset-shift region growing, plus mean
/// shift over the same mask's embeddings; pooled candidates are scored and
/// reduced by NMS. Points at or below the semantic threshold always keep id 0.
InstanceSegmentation segment(const LabeledPointCloud& cloud, const PointPredictions& preds,
                             const GroupingConfig& config,
                             const CandidateScorer& scorer = mean_prob_scorer);

}  // namespace treekit
