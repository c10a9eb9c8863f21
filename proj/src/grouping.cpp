#include "treekit/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "treekit/errors.hpp"

namespace treekit {

void PointPredictions::check() const {
    if (offset.size() != semantic_prob.size() || embedding.size() != semantic_prob.size()) {
        throw ValidationError("predictions: field arrays disagree in length");
    }
    for (size_t i = 0; i < semantic_prob.size(); ++i) {
        double p = semantic_prob[i];
        if (!(p >= 0.0 && p <= 1.0)) {
            throw ValidationError("predictions: probability outside [0,1] at point " +
                                  std::to_string(i));
        }
        for (double v : offset[i]) {
            if (!std::isfinite(v)) {
                throw ValidationError("predictions: non-finite offset at point " +
                                      std::to_string(i));
            }
        }
        for (double v : embedding[i]) {
            if (!std::isfinite(v)) {
                throw ValidationError("predictions: non-finite embedding at point " +
                                      std::to_string(i));
            }
        }
    }
}

void GroupingConfig::check() const {
    if (semantic_threshold < 0.0 || semantic_threshold >= 1.0) {
        throw ValidationError("grouping: semantic_threshold must be in [0,1)");
    }
    if (rg_radius <= 0.0) throw ValidationError("grouping: rg_radius must be > 0");
    if (rg_min_points == 0) throw ValidationError("grouping: rg_min_points must be > 0");
    if (ms_bandwidth <= 0.0) throw ValidationError("grouping: ms_bandwidth must be > 0");
    if (ms_max_iter == 0) throw ValidationError("grouping: ms_max_iter must be > 0");
    if (ms_tol <= 0.0) throw ValidationError("grouping: ms_tol must be > 0");
    if (ms_seed_stride == 0) throw ValidationError("grouping: ms_seed_stride must be > 0");
    if (nms_iou <= 0.0) throw ValidationError("grouping: nms_iou must be > 0");
}

InstanceSegmentation InstanceSegmentation::from_cloud(const LabeledPointCloud& cloud) {
    InstanceSegmentation seg;
    seg.ids.reserve(cloud.size());
    for (const PointRecord& p : cloud.points) seg.ids.push_back(p.instance);
    return seg;
}

size_t InstanceSegmentation::instance_count() const {
    std::unordered_set<uint32_t> distinct;
    for (uint32_t id : ids) {
        if (id > 0) distinct.insert(id);
    }
    return distinct.size();
}

std::vector<uint32_t> semantic_mask(const PointPredictions& preds, double threshold) {
    std::vector<uint32_t> mask;
    for (size_t i = 0; i < preds.semantic_prob.size(); ++i) {
        if (preds.semantic_prob[i] > threshold) mask.push_back(static_cast<uint32_t>(i));
    }
    return mask;
}

std::vector<std::array<double, 3>> shift_points(const LabeledPointCloud& cloud,
                                                const PointPredictions& preds,
                                                std::span<const uint32_t> mask) {
    std::vector<std::array<double, 3>> out;
    out.reserve(mask.size());
    for (uint32_t i : mask) {
        const PointRecord& p = cloud.points[i];
        const std::array<double, 3>& o = preds.offset[i];
        out.push_back({p.x + o[0], p.y + o[1], p.z + o[2]});
    }
    return out;
}

namespace {

// ---------------------------------------------------------------------------
// uniform grids
// ---------------------------------------------------------------------------

struct Cell3 {
    int64_t a, b, c;
    bool operator==(const Cell3&) const = default;
};

struct Cell3Hash {
    size_t operator()(const Cell3& k) const {
        uint64_t h = 0xcbf29ce484222325ull;
        for (uint64_t v : {static_cast<uint64_t>(k.a), static_cast<uint64_t>(k.b),
                           static_cast<uint64_t>(k.c)}) {
            h = (h ^ v) * 0x100000001b3ull;
        }
        return static_cast<size_t>(h);
    }
};

int64_t cell_of(double v, double size) { return static_cast<int64_t>(std::floor(v / size)); }

struct Cell5 {
    std::array<int64_t, 5> c;
    bool operator==(const Cell5&) const = default;
};

struct Cell5Hash {
    size_t operator()(const Cell5& k) const {
        uint64_t h = 0xcbf29ce484222325ull;
        for (int64_t v : k.c) h = (h ^ static_cast<uint64_t>(v)) * 0x100000001b3ull;
        return static_cast<size_t>(h);
    }
};

// ---------------------------------------------------------------------------
// union-find
// ---------------------------------------------------------------------------

class UnionFind {
public:
    explicit UnionFind(size_t n) : parent_(n) {
        for (size_t i = 0; i < n; ++i) parent_[i] = static_cast<uint32_t>(i);
    }
    uint32_t find(uint32_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void unite(uint32_t a, uint32_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (a > b) std::swap(a, b);  // smaller index wins: order-independent labels
        parent_[b] = a;
    }

private:
    std::vector<uint32_t> parent_;
};

double dist2_3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    double s = 0;
    for (int i = 0; i < 3; ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double dist2_5(const std::array<double, 5>& a, const std::array<double, 5>& b) {
    double s = 0;
    for (int i = 0; i < 5; ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace

std::vector<ClusterCandidate> region_grow(std::span<const std::array<double, 3>> coords,
                                          double radius, size_t min_points) {
    if (radius <= 0.0) throw ValidationError("region_grow: radius must be > 0");
    const size_t n = coords.size();
    std::vector<ClusterCandidate> out;
    if (n == 0) return out;

    std::unordered_map<Cell3, std::vector<uint32_t>, Cell3Hash> grid;
    grid.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        grid[{cell_of(coords[i][0], radius), cell_of(coords[i][1], radius),
              cell_of(coords[i][2], radius)}]
            .push_back(static_cast<uint32_t>(i));
    }

    const double r2 = radius * radius;
    UnionFind uf(n);
    for (size_t i = 0; i < n; ++i) {
        Cell3 base{cell_of(coords[i][0], radius), cell_of(coords[i][1], radius),
                   cell_of(coords[i][2], radius)};
        for (int64_t da = -1; da <= 1; ++da) {
            for (int64_t db = -1; db <= 1; ++db) {
                for (int64_t dc = -1; dc <= 1; ++dc) {
                    auto it = grid.find({base.a + da, base.b + db, base.c + dc});
                    if (it == grid.end()) continue;
                    for (uint32_t j : it->second) {
                        if (j <= i) continue;
                        if (dist2_3(coords[i], coords[j]) <= r2) {
                            uf.unite(static_cast<uint32_t>(i), j);
                        }
                    }
                }
            }
        }
    }

    std::unordered_map<uint32_t, std::vector<uint32_t>> components;
    for (size_t i = 0; i < n; ++i) {
        components[uf.find(static_cast<uint32_t>(i))].push_back(static_cast<uint32_t>(i));
    }
    for (auto& [root, members] : components) {
        if (members.size() < min_points) continue;
        ClusterCandidate c;
        c.members = std::move(members);  // ascending: points were visited in order
        c.source = CandidateSource::offset_rg;
        out.push_back(std::move(c));
    }
    std::sort(out.begin(), out.end(), [](const ClusterCandidate& a, const ClusterCandidate& b) {
        return a.members.front() < b.members.front();
    });
    return out;
}

std::vector<ClusterCandidate> mean_shift(std::span<const std::array<double, 5>> embeddings,
                                         const GroupingConfig& config,
                                         std::vector<std::array<double, 5>>* modes_out) {
    if (config.ms_bandwidth <= 0.0 || config.ms_seed_stride == 0) {
        throw ValidationError("mean_shift: invalid bandwidth or seed stride");
    }
    const size_t n = embeddings.size();
    std::vector<ClusterCandidate> out;
    if (modes_out) modes_out->clear();
    if (n == 0) return out;

    const double b = config.ms_bandwidth;
    const double inv_2b2 = 1.0 / (2.0 * b * b);
    // Kernel support cutoff: contributions beyond 5 bandwidths carry weight
    // < exp(-12.5) ~ 4e-6 and are skipped.
    const double support = 5.0 * b;
    const double support2 = support * support;

    std::unordered_map<Cell5, std::vector<uint32_t>, Cell5Hash> grid;
    grid.reserve(n);
    auto key_of = [&](const std::array<double, 5>& e) {
        Cell5 k;
        for (int d = 0; d < 5; ++d) k.c[d] = cell_of(e[d], support);
        return k;
    };
    for (size_t i = 0; i < n; ++i) grid[key_of(embeddings[i])].push_back(static_cast<uint32_t>(i));

    auto shift_once = [&](const std::array<double, 5>& pos, std::array<double, 5>& next) {
        double wsum = 0.0;
        next.fill(0.0);
        Cell5 base = key_of(pos);
        std::array<int64_t, 5> d;
        for (d[0] = -1; d[0] <= 1; ++d[0])
            for (d[1] = -1; d[1] <= 1; ++d[1])
                for (d[2] = -1; d[2] <= 1; ++d[2])
                    for (d[3] = -1; d[3] <= 1; ++d[3])
                        for (d[4] = -1; d[4] <= 1; ++d[4]) {
                            Cell5 k;
                            for (int t = 0; t < 5; ++t) k.c[t] = base.c[t] + d[t];
                            auto it = grid.find(k);
                            if (it == grid.end()) continue;
                            for (uint32_t j : it->second) {
                                double d2 = dist2_5(pos, embeddings[j]);
                                if (d2 > support2) continue;
                                double w = std::exp(-d2 * inv_2b2);
                                wsum += w;
                                for (int t = 0; t < 5; ++t) next[t] += w * embeddings[j][t];
                            }
                        }
        if (wsum <= 0.0) return false;
        for (int t = 0; t < 5; ++t) next[t] /= wsum;
        return true;
    };

    // Seed ascent.
    std::vector<std::array<double, 5>> seed_modes;
    for (size_t s = 0; s < n; s += config.ms_seed_stride) {
        std::array<double, 5> pos = embeddings[s];
        for (size_t it = 0; it < config.ms_max_iter; ++it) {
            std::array<double, 5> next;
            if (!shift_once(pos, next)) break;
            double move2 = dist2_5(pos, next);
            pos = next;
            if (move2 < config.ms_tol * config.ms_tol) break;
        }
        seed_modes.push_back(pos);
    }

    // Merge modes closer than b/2; the earliest mode represents the group.
    const double merge2 = (b * 0.5) * (b * 0.5);
    std::vector<std::array<double, 5>> reps;
    for (const std::array<double, 5>& m : seed_modes) {
        bool merged = false;
        for (const std::array<double, 5>& r : reps) {
            if (dist2_5(m, r) <= merge2) {
                merged = true;
                break;
            }
        }
        if (!merged) reps.push_back(m);
    }

    // Every point joins its nearest mode (ties: lowest mode index).
    std::vector<std::vector<uint32_t>> members(reps.size());
    for (size_t i = 0; i < n; ++i) {
        size_t best = 0;
        double best_d2 = dist2_5(embeddings[i], reps[0]);
        for (size_t r = 1; r < reps.size(); ++r) {
            double d2 = dist2_5(embeddings[i], reps[r]);
            if (d2 < best_d2) {
                best_d2 = d2;
                best = r;
            }
        }
        members[best].push_back(static_cast<uint32_t>(i));
    }

    for (size_t r = 0; r < members.size(); ++r) {
        if (members[r].empty()) continue;
        ClusterCandidate c;
        c.members = std::move(members[r]);
        c.source = CandidateSource::embedding_ms;
        out.push_back(std::move(c));
        if (modes_out) modes_out->push_back(reps[r]);
    }
    return out;
}

double mean_prob_scorer(const ClusterCandidate& candidate, const PointPredictions& preds) {
    double sum = 0.0;
    for (uint32_t i : candidate.members) sum += preds.semantic_prob[i];
    return sum / static_cast<double>(candidate.members.size());
}

void score_candidates(std::vector<ClusterCandidate>& candidates, const PointPredictions& preds,
                      const CandidateScorer& scorer) {
    for (ClusterCandidate& c : candidates) {
        if (c.members.empty()) throw ValidationError("score_candidates: empty candidate");
        c.score = scorer(c, preds);
    }
}

double candidate_iou(const std::vector<uint32_t>& a, const std::vector<uint32_t>& b) {
    size_t inter = 0;
    size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) {
            ++i;
        } else if (b[j] < a[i]) {
            ++j;
        } else {
            ++inter;
            ++i;
            ++j;
        }
    }
    size_t uni = a.size() + b.size() - inter;
    if (uni == 0) throw ValidationError("iou: both sets empty");
    return static_cast<double>(inter) / static_cast<double>(uni);
}

InstanceSegmentation nms(std::vector<ClusterCandidate> candidates, double nms_iou,
                         size_t n_points) {
    // Total order: score desc, size desc, first member asc, members
    // lexicographic, source. Determinism hinges on this covering all ties.
    std::sort(candidates.begin(), candidates.end(),
              [](const ClusterCandidate& a, const ClusterCandidate& b) {
                  if (a.score != b.score) return a.score > b.score;
                  if (a.members.size() != b.members.size()) {
                      return a.members.size() > b.members.size();
                  }
                  if (a.members.front() != b.members.front()) {
                      return a.members.front() < b.members.front();
                  }
                  if (a.members != b.members) return a.members < b.members;
                  return a.source < b.source;
              });

    std::vector<const ClusterCandidate*> accepted;
    for (const ClusterCandidate& c : candidates) {
        bool keep = true;
        for (const ClusterCandidate* acc : accepted) {
            if (candidate_iou(c.members, acc->members) > nms_iou) {
                keep = false;
                break;
            }
        }
        if (keep) accepted.push_back(&c);
    }

    InstanceSegmentation seg;
    seg.ids.assign(n_points, 0);
    uint32_t next_id = 0;
    for (const ClusterCandidate* acc : accepted) {
        bool owns_any = false;
        for (uint32_t m : acc->members) {
            if (seg.ids[m] == 0) {
                owns_any = true;
                break;
            }
        }
        if (!owns_any) continue;  // fully claimed by higher-score candidates
        ++next_id;
        for (uint32_t m : acc->members) {
            if (seg.ids[m] == 0) seg.ids[m] = next_id;
        }
    }
    return seg;
}

InstanceSegmentation segment(const LabeledPointCloud& cloud, const PointPredictions& preds,
                             const GroupingConfig& config, const CandidateScorer& scorer) {
    config.check();
    preds.check();
    if (preds.size() != cloud.size()) {
        throw AlignmentError("predictions length " + std::to_string(preds.size()) +
                             " vs cloud length " + std::to_string(cloud.size()));
    }

    std::vector<uint32_t> mask = semantic_mask(preds, config.semantic_threshold);

    std::vector<std::array<double, 3>> shifted = shift_points(cloud, preds, mask);
    std::vector<ClusterCandidate> pool =
        region_grow(shifted, config.rg_radius, config.rg_min_points);

    std::vector<std::array<double, 5>> masked_emb;
    masked_emb.reserve(mask.size());
    for (uint32_t i : mask) masked_emb.push_back(preds.embedding[i]);
    std::vector<ClusterCandidate> ms = mean_shift(masked_emb, config);
    pool.insert(pool.end(), std::make_move_iterator(ms.begin()),
                std::make_move_iterator(ms.end()));

    // Candidates index into the mask; rewrite to cloud indices.
    for (ClusterCandidate& c : pool) {
        for (uint32_t& m : c.members) m = mask[m];
    }

    score_candidates(pool, preds, scorer);
    return nms(std::move(pool), config.nms_iou, cloud.size());
}

}  // namespace treekit
