#pragma once

#include <filesystem>
#include <string>

#include "treekit/cloud.hpp"
#include "treekit/grouping.hpp"

namespace treekit {

// Canonical text formats.
//
// PTC v1 (UTF-8):
//   line 1: `#PTC 1`
//   line 2: `#fields x y z semantic instance`
//   then one point per line: `x y z semantic instance`, space-separated,
//   semantic in {0,1}, instance >= 0. Lines starting with `#` are comments;
//   `#source ...` and `#crs ...` comments carry the provenance strings.
//
// xyz_csv: headerless `x,y,z,semantic,instance` rows.
//
// PRD v1 (prediction sidecar, aligned with its PTC row-for-row):
//   line 1: `#PRD 1`
//   then per point: `p ox oy oz e1 e2 e3 e4 e5`
//   (probability, 3-D offset, 5-D embedding).
//
// Coordinates are written with 17 significant digits, so save -> load
// round-trips are bit-exact.

enum class CloudFormat { ptc, xyz_csv };

/// Picks the format from the file extension: `.csv` -> xyz_csv, else PTC.
CloudFormat format_from_path(const std::filesystem::path& path);

/// Throws IoError when the file cannot be read, ParseError (with line number)
/// on malformed rows or rows violating point invariants.
LabeledPointCloud load_cloud(const std::filesystem::path& path, CloudFormat format);

/// Throws ValidationError if the cloud fails validate(), IoError on write
/// failure.
void save_cloud(const LabeledPointCloud& cloud, const std::filesystem::path& path,
                CloudFormat format);

/// Prediction sidecar. Length alignment against a cloud is the caller's
/// check (AlignmentError); the loader validates per-row invariants.
PointPredictions load_predictions(const std::filesystem::path& path);
void save_predictions(const PointPredictions& preds, const std::filesystem::path& path);

/// Cloud with the instance column replaced by predicted ids. The semantic
/// column is set to tree wherever an id was assigned or the point passed the
/// semantic gate, keeping the written file a valid PTC.
LabeledPointCloud with_predicted_instances(const LabeledPointCloud& cloud,
                                           const InstanceSegmentation& seg,
                                           std::span<const uint32_t> mask);

}  // namespace treekit
