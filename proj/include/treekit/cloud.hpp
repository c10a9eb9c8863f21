#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace treekit {

/// Binary semantic label: everything is either part of a tree or not.
enum class Semantic : uint8_t { non_tree = 0, tree = 1 };

/// One point of a labeled cloud. Instance id 0 means "unassigned"; any
/// nonzero id implies the point is semantically a tree. Ids need not be
/// contiguous.
struct PointRecord {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    Semantic semantic = Semantic::non_tree;
    uint32_t instance = 0;

    bool operator==(const PointRecord&) const = default;
};

/// Ordered point collection. Point order is stable and serves as the
/// identity for every index-set operation downstream (masks, clusters,
/// instance membership). Clouds are treated as immutable after load; all
/// operations return new clouds.
struct LabeledPointCloud {
    std::vector<PointRecord> points;
    std::string source_tag;  // free-text provenance (platform/dataset)
    std::string crs_note;    // free-text CRS description

    size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }

    bool operator==(const LabeledPointCloud&) const = default;
};

struct DensityStats {
    size_t n_points = 0;
    double hull_area_m2 = 0.0;
    double density_pts_m2 = 0.0;
};

/// Reference area used for points/m². The convex hull is the default; the
/// axis-aligned bounding box is available for callers that want it.
enum class AreaMethod { convex_hull, bbox };

struct Violation {
    size_t point_index;
    std::string message;
};

/// Checks every type invariant (finite coordinates, instance-implies-tree).
/// Violations are data, not errors: an empty report means the cloud is valid.
std::vector<Violation> validate(const LabeledPointCloud& cloud);

/// Area of the 2-D convex hull of the XY projections, in m². Monotone-chain
/// hull, shoelace area. Degenerate inputs (< 3 non-collinear points) give 0.
/// Throws ValidationError on an empty cloud.
double hull_area_xy(const LabeledPointCloud& cloud);

/// Axis-aligned XY bounding-box area.
double bbox_area_xy(const LabeledPointCloud& cloud);

/// Point density over the reference area. Throws ValidationError when the
/// area is degenerate (zero).
DensityStats point_density(const LabeledPointCloud& cloud,
                           AreaMethod method = AreaMethod::convex_hull);

/// XY centroid (mean of x and y).
void centroid_xy(const LabeledPointCloud& cloud, double& cx, double& cy);

/// Full 3-D centroid.
void centroid_xyz(const LabeledPointCloud& cloud, double& cx, double& cy, double& cz);

}  // namespace treekit
