#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "treekit/augment.hpp"
#include "treekit/cloud.hpp"
#include "treekit/evaluate.hpp"
#include "treekit/grouping.hpp"
#include "treekit/sparsify.hpp"
#include "treekit/synthgen.hpp"

#include <json.hpp>

namespace treekit {

inline constexpr const char* kToolVersion = "1.0.0";

// ---------------------------------------------------------------------------
// scenario composition
// ---------------------------------------------------------------------------

struct ScenarioSource {
    std::string path;
    std::string platform;  // "ULS" or "MLS"
};

/// Declarative dataset composition. The named presets fix the source filter
/// and density list:
///   scenario1: ULS sources only, no sparsification
///   scenario2: MLS sources only, no sparsification
///   scenario3: all sources, no sparsification
///   scenario4: all sources + densities [1000]
///   scenario5: all sources + densities [1000, 500, 100, 75, 50, 25, 10]
/// Any other name is custom and taken as-is.
struct ScenarioConfig {
    std::string name = "custom";
    std::vector<ScenarioSource> sources;
    std::vector<double> densities;
    std::optional<AugmentConfig> augment;
    uint64_t seed = 0;
};

/// Applies the preset named in config.name (source filter + density list).
ScenarioConfig expand_scenario(ScenarioConfig config);

struct ManifestEntry {
    std::string input;
    std::vector<std::string> chain;  // transform descriptions, applied in order
    std::string output;
    uint64_t seed = 0;
    std::optional<double> achieved_density;
};

struct RunManifest {
    std::string tool_version;
    std::string timestamp;  // ISO 8601 UTC
    std::vector<ManifestEntry> entries;
};

/// Emits each selected source as-is plus one sparsified cloud per density;
/// when an augment config is present, an augmented variant of every emitted
/// cloud is written alongside it. Per-entry seeds are derive_seed(seed,
/// entry ordinal). Returns the manifest; also writes manifest.json into
/// out_dir.
RunManifest prepare_scenario(const ScenarioConfig& config,
                             const std::filesystem::path& out_dir);

// ---------------------------------------------------------------------------
// pipeline runs
// ---------------------------------------------------------------------------

/// segment -> evaluate. Writes the predicted-instance PTC and the report
/// JSON (when paths are given) and returns the report. The ground-truth
/// cloud provides labels and heights; it must align with the input cloud.
MetricsReport run_pipeline(const std::filesystem::path& cloud_path,
                           const std::filesystem::path& preds_path,
                           const GroupingConfig& config,
                           const std::filesystem::path& gt_path,
                           const std::filesystem::path& out_instances = {},
                           const std::filesystem::path& out_report = {},
                           double bin_height = 5.0);

// ---------------------------------------------------------------------------
// density sweeps
// ---------------------------------------------------------------------------

/// Supplies predictions for a (possibly sparsified) cloud. kept_indices maps
/// the subcloud's rows back to the source cloud; level_seed is unique per
/// sweep level.
using PredictionProvider = std::function<PointPredictions(
    const LabeledPointCloud& subcloud, const std::vector<size_t>& kept_indices,
    uint64_t level_seed)>;

/// Rows of a full-resolution predictions file, subset to the kept indices.
PredictionProvider file_prediction_provider(PointPredictions full_preds);

/// Label-derived oracle predictions on the subcloud, seeded per level.
PredictionProvider oracle_prediction_provider(OracleNoise noise);

/// One sweep level: nullopt density means the cloud at full resolution.
struct SweepLevel {
    std::optional<double> density;
};

struct SweepRow {
    SweepLevel level;
    bool ok = false;
    std::string error;
    MetricsReport report;
};

/// Runs segment -> evaluate per level against the labeled cloud's own
/// instances. Levels are independent (per-level seed = derive_seed(seed,
/// level index)); a failing level is recorded and the sweep continues.
/// threads > 1 fans the levels out to a pool; row order follows the input.
std::vector<SweepRow> sweep_densities(const LabeledPointCloud& cloud,
                                      const PredictionProvider& provider,
                                      const std::vector<SweepLevel>& levels,
                                      const GroupingConfig& config, uint64_t seed,
                                      double bin_height = 5.0, size_t threads = 1);

/// Plot-ready CSV: one row per level, all scalar report fields.
std::string sweep_to_csv(const std::vector<SweepRow>& rows);

// ---------------------------------------------------------------------------
// JSON bindings for the typed configs
// ---------------------------------------------------------------------------

AugmentConfig augment_config_from_json(const nlohmann::json& j);
GroupingConfig grouping_config_from_json(const nlohmann::json& j);
ForestConfig forest_config_from_json(const nlohmann::json& j);
OracleNoise oracle_noise_from_json(const nlohmann::json& j);
ScenarioConfig scenario_config_from_json(const nlohmann::json& j);
nlohmann::json manifest_to_json(const RunManifest& manifest);

/// Parses a JSON document from disk. Throws IoError / ValidationError.
nlohmann::json load_json(const std::filesystem::path& path);

}  // namespace treekit
