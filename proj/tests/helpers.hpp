#pragma once

#include <filesystem>
#include <string>
#include <unistd.h>
#include <vector>

#include "treekit/cloud.hpp"
#include "treekit/rng.hpp"

namespace treekit::test {

inline PointRecord pt(double x, double y, double z, int semantic = 0, uint32_t instance = 0) {
    return {x, y, z, static_cast<Semantic>(semantic), instance};
}

inline LabeledPointCloud make_cloud(std::vector<PointRecord> points) {
    LabeledPointCloud c;
    c.points = std::move(points);
    return c;
}

/// Random valid cloud with a non-degenerate hull: four spread corners plus
/// uniform interior points, mixed labels.
inline LabeledPointCloud random_cloud(Rng& rng, size_t n_interior, double side = 10.0,
                                      uint32_t max_instance = 5) {
    LabeledPointCloud c;
    c.points.push_back(pt(0, 0, 0));
    c.points.push_back(pt(side, 0, 0));
    c.points.push_back(pt(side, side, 0));
    c.points.push_back(pt(0, side, 0));
    for (size_t i = 0; i < n_interior; ++i) {
        PointRecord p;
        p.x = rng.uniform(0.001, side - 0.001);
        p.y = rng.uniform(0.001, side - 0.001);
        p.z = rng.uniform(0.0, 30.0);
        uint32_t inst = static_cast<uint32_t>(rng.index(max_instance + 1));
        p.instance = inst;
        p.semantic = inst > 0 ? Semantic::tree : Semantic::non_tree;
        c.points.push_back(p);
    }
    return c;
}

/// Fresh scratch directory under the system temp dir.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("treekit_" + tag + "_" + std::to_string(++counter) + "_" +
                 std::to_string(::getpid()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path file(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace treekit::test
