#include "treekit/cloud.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "treekit/errors.hpp"

namespace treekit {

std::vector<Violation> validate(const LabeledPointCloud& cloud) {
    std::vector<Violation> out;
    for (size_t i = 0; i < cloud.points.size(); ++i) {
        const PointRecord& p = cloud.points[i];
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
            out.push_back({i, "non-finite coordinate"});
        }
        if (p.instance > 0 && p.semantic != Semantic::tree) {
            out.push_back({i, "instance id " + std::to_string(p.instance) +
                                  " on a non-tree point"});
        }
    }
    return out;
}

namespace {

struct Pt2 {
    double x, y;
};

double cross(const Pt2& o, const Pt2& a, const Pt2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Monotone chain. Returns the hull in counter-clockwise order; collinear
// inputs collapse to fewer than 3 vertices.
std::vector<Pt2> convex_hull(std::vector<Pt2> pts) {
    std::sort(pts.begin(), pts.end(), [](const Pt2& a, const Pt2& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Pt2& a, const Pt2& b) {
                              return a.x == b.x && a.y == b.y;
                          }),
              pts.end());
    size_t n = pts.size();
    if (n < 3) return pts;

    std::vector<Pt2> hull(2 * n);
    size_t k = 0;
    for (size_t i = 0; i < n; ++i) {  // lower
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    for (size_t i = n - 1, t = k + 1; i-- > 0;) {  // upper
        while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

double shoelace_area(const std::vector<Pt2>& poly) {
    if (poly.size() < 3) return 0.0;
    double acc = 0.0;
    for (size_t i = 0, n = poly.size(); i < n; ++i) {
        const Pt2& a = poly[i];
        const Pt2& b = poly[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    return 0.5 * std::abs(acc);
}

}  // namespace

double hull_area_xy(const LabeledPointCloud& cloud) {
    if (cloud.empty()) throw ValidationError("hull_area_xy: empty cloud");
    std::vector<Pt2> pts;
    pts.reserve(cloud.size());
    for (const PointRecord& p : cloud.points) pts.push_back({p.x, p.y});
    return shoelace_area(convex_hull(std::move(pts)));
}

double bbox_area_xy(const LabeledPointCloud& cloud) {
    if (cloud.empty()) throw ValidationError("bbox_area_xy: empty cloud");
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const PointRecord& p : cloud.points) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    return (xmax - xmin) * (ymax - ymin);
}

DensityStats point_density(const LabeledPointCloud& cloud, AreaMethod method) {
    double area = method == AreaMethod::convex_hull ? hull_area_xy(cloud)
                                                    : bbox_area_xy(cloud);
    if (area <= 0.0) {
        throw ValidationError("point_density: degenerate reference area");
    }
    DensityStats stats;
    stats.n_points = cloud.size();
    stats.hull_area_m2 = area;
    stats.density_pts_m2 = static_cast<double>(stats.n_points) / area;
    return stats;
}

void centroid_xy(const LabeledPointCloud& cloud, double& cx, double& cy) {
    cx = cy = 0.0;
    if (cloud.empty()) return;
    for (const PointRecord& p : cloud.points) {
        cx += p.x;
        cy += p.y;
    }
    cx /= static_cast<double>(cloud.size());
    cy /= static_cast<double>(cloud.size());
}

void centroid_xyz(const LabeledPointCloud& cloud, double& cx, double& cy, double& cz) {
    cx = cy = cz = 0.0;
    if (cloud.empty()) return;
    for (const PointRecord& p : cloud.points) {
        cx += p.x;
        cy += p.y;
        cz += p.z;
    }
    cx /= static_cast<double>(cloud.size());
    cy /= static_cast<double>(cloud.size());
    cz /= static_cast<double>(cloud.size());
}

}  // namespace treekit
