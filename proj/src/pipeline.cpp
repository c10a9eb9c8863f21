#include "treekit/pipeline.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <future>
#include <numeric>
#include <sstream>

#include "treekit/errors.hpp"
#include "treekit/io.hpp"
#include "treekit/rng.hpp"

namespace treekit {

namespace {

std::string iso_timestamp_utc() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string trim_number(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

std::optional<double> density_of(const LabeledPointCloud& cloud) {
    try {
        return point_density(cloud).density_pts_m2;
    } catch (const ValidationError&) {
        return std::nullopt;
    }
}

}  // namespace

ScenarioConfig expand_scenario(ScenarioConfig config) {
    auto keep_platform = [&config](const std::string& platform) {
        std::vector<ScenarioSource> kept;
        for (const ScenarioSource& s : config.sources) {
            if (s.platform == platform) kept.push_back(s);
        }
        config.sources = std::move(kept);
    };
    if (config.name == "scenario1") {
        keep_platform("ULS");
        config.densities.clear();
    } else if (config.name == "scenario2") {
        keep_platform("MLS");
        config.densities.clear();
    } else if (config.name == "scenario3") {
        config.densities.clear();
    } else if (config.name == "scenario4") {
        config.densities = {1000.0};
    } else if (config.name == "scenario5") {
        config.densities = {1000.0, 500.0, 100.0, 75.0, 50.0, 25.0, 10.0};
    }
    return config;
}

RunManifest prepare_scenario(const ScenarioConfig& raw, const std::filesystem::path& out_dir) {
    ScenarioConfig config = expand_scenario(raw);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

    RunManifest manifest;
    manifest.tool_version = kToolVersion;
    manifest.timestamp = iso_timestamp_utc();

    uint64_t ordinal = 0;
    auto emit = [&](const LabeledPointCloud& cloud, const std::string& input,
                    std::vector<std::string> chain, const std::string& stem) {
        uint64_t entry_seed = derive_seed(config.seed, ordinal++);
        LabeledPointCloud final_cloud = cloud;
        std::string final_stem = stem;
        std::vector<std::string> final_chain = chain;

        auto write_entry = [&](const LabeledPointCloud& c, const std::string& s,
                               std::vector<std::string> ch, uint64_t sd) {
            std::filesystem::path out_path = out_dir / (s + ".ptc");
            save_cloud(c, out_path, CloudFormat::ptc);
            ManifestEntry entry;
            entry.input = input;
            entry.chain = std::move(ch);
            entry.output = out_path.string();
            entry.seed = sd;
            entry.achieved_density = density_of(c);
            manifest.entries.push_back(std::move(entry));
        };

        write_entry(final_cloud, final_stem, final_chain, entry_seed);
        if (config.augment.has_value()) {
            AugmentConfig aug = *config.augment;
            aug.seed = derive_seed(config.seed, 0x100000u + ordinal);
            LabeledPointCloud augmented = augment(final_cloud, aug);
            std::vector<std::string> aug_chain = final_chain;
            aug_chain.push_back("augment(seed=" + std::to_string(aug.seed) + ")");
            write_entry(augmented, final_stem + "_aug", std::move(aug_chain), aug.seed);
        }
    };

    for (const ScenarioSource& source : config.sources) {
        std::filesystem::path in_path(source.path);
        LabeledPointCloud cloud = load_cloud(in_path, format_from_path(in_path));
        std::string stem = in_path.stem().string();

        emit(cloud, source.path, {"original"}, stem);
        for (size_t di = 0; di < config.densities.size(); ++di) {
            double d = config.densities[di];
            uint64_t sp_seed = derive_seed(config.seed, ordinal);
            LabeledPointCloud sparse = sparsify(cloud, d, sp_seed);
            emit(sparse, source.path,
                 {"sparsify(density=" + trim_number(d) + ")"},
                 stem + "_d" + trim_number(d));
        }
    }

    std::ofstream out(out_dir / "manifest.json");
    if (!out) throw IoError("cannot write manifest.json");
    out << manifest_to_json(manifest).dump(2) << '\n';
    return manifest;
}

MetricsReport run_pipeline(const std::filesystem::path& cloud_path,
                           const std::filesystem::path& preds_path,
                           const GroupingConfig& config,
                           const std::filesystem::path& gt_path,
                           const std::filesystem::path& out_instances,
                           const std::filesystem::path& out_report, double bin_height) {
    LabeledPointCloud cloud = load_cloud(cloud_path, format_from_path(cloud_path));
    PointPredictions preds = load_predictions(preds_path);
    if (preds.size() != cloud.size()) {
        throw AlignmentError("predictions length " + std::to_string(preds.size()) +
                             " vs cloud length " + std::to_string(cloud.size()));
    }
    InstanceSegmentation seg = segment(cloud, preds, config);

    if (!out_instances.empty()) {
        std::vector<uint32_t> mask = semantic_mask(preds, config.semantic_threshold);
        save_cloud(with_predicted_instances(cloud, seg, mask), out_instances,
                   CloudFormat::ptc);
    }

    LabeledPointCloud gt_cloud = load_cloud(gt_path, format_from_path(gt_path));
    if (gt_cloud.size() != cloud.size()) {
        throw AlignmentError("gt length " + std::to_string(gt_cloud.size()) +
                             " vs cloud length " + std::to_string(cloud.size()));
    }
    InstanceSegmentation gt = InstanceSegmentation::from_cloud(gt_cloud);
    MetricsReport report = evaluate_pair(cloud, gt, seg, bin_height);

    if (!out_report.empty()) {
        std::ofstream out(out_report);
        if (!out) throw IoError("cannot write " + out_report.string());
        out << report_to_json(report).dump(2) << '\n';
    }
    return report;
}

PredictionProvider file_prediction_provider(PointPredictions full_preds) {
    return [full = std::move(full_preds)](const LabeledPointCloud&,
                                          const std::vector<size_t>& kept,
                                          uint64_t) {
        PointPredictions sub;
        sub.semantic_prob.reserve(kept.size());
        sub.offset.reserve(kept.size());
        sub.embedding.reserve(kept.size());
        for (size_t i : kept) {
            sub.semantic_prob.push_back(full.semantic_prob.at(i));
            sub.offset.push_back(full.offset.at(i));
            sub.embedding.push_back(full.embedding.at(i));
        }
        return sub;
    };
}

PredictionProvider oracle_prediction_provider(OracleNoise noise) {
    return [noise](const LabeledPointCloud& subcloud, const std::vector<size_t>&,
                   uint64_t level_seed) {
        return oracle_predictions(subcloud, noise, level_seed);
    };
}

std::vector<SweepRow> sweep_densities(const LabeledPointCloud& cloud,
                                      const PredictionProvider& provider,
                                      const std::vector<SweepLevel>& levels,
                                      const GroupingConfig& config, uint64_t seed,
                                      double bin_height, size_t threads) {
    if (levels.empty()) throw ValidationError("sweep: empty level list");
    config.check();

    auto run_level = [&](size_t i) {
        SweepRow row;
        row.level = levels[i];
        uint64_t level_seed = derive_seed(seed, i);
        try {
            std::vector<size_t> kept;
            LabeledPointCloud sub;
            if (levels[i].density.has_value()) {
                kept = sparsify_indices(cloud, *levels[i].density, level_seed);
                sub = subset_cloud(cloud, kept);
            } else {
                kept.resize(cloud.size());
                std::iota(kept.begin(), kept.end(), size_t{0});
                sub = cloud;
            }
            PointPredictions preds = provider(sub, kept, level_seed);
            if (preds.size() != sub.size()) {
                throw AlignmentError("provider returned " + std::to_string(preds.size()) +
                                     " predictions for " + std::to_string(sub.size()) +
                                     " points");
            }
            InstanceSegmentation seg = segment(sub, preds, config);
            InstanceSegmentation gt = InstanceSegmentation::from_cloud(sub);
            row.report = evaluate_pair(sub, gt, seg, bin_height);
            row.ok = true;
        } catch (const std::exception& e) {
            row.ok = false;
            row.error = e.what();
        }
        return row;
    };

    std::vector<SweepRow> rows(levels.size());
    if (threads <= 1) {
        for (size_t i = 0; i < levels.size(); ++i) rows[i] = run_level(i);
    } else {
        std::vector<std::future<SweepRow>> futures;
        futures.reserve(levels.size());
        for (size_t i = 0; i < levels.size(); ++i) {
            futures.push_back(std::async(std::launch::async, run_level, i));
        }
        for (size_t i = 0; i < levels.size(); ++i) rows[i] = futures[i].get();
    }
    return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    os.precision(17);
    os << "density,status,tp,fp,fn,gt,pt,detection_rate,omission_rate,commission_rate,"
          "precision,recall,f1_tree,f1_local,rmse_h_m\n";
    for (const SweepRow& row : rows) {
        if (row.level.density.has_value()) {
            os << *row.level.density;
        } else {
            os << "full";
        }
        if (!row.ok) {
            os << ",failed,,,,,,,,,,,,,\n";
            continue;
        }
        const MetricsReport& r = row.report;
        os << ",ok," << r.tp << ',' << r.fp << ',' << r.fn << ',' << r.gt_count << ','
           << r.pt_count << ',' << r.detection_rate << ',' << r.omission_rate << ','
           << r.commission_rate << ',' << r.precision << ',' << r.recall << ','
           << r.f1_tree << ',' << r.f1_local << ',';
        if (r.rmse_h.has_value()) os << *r.rmse_h;
        os << '\n';
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// JSON bindings
// ---------------------------------------------------------------------------

namespace {

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    return it->get<T>();
}

std::array<double, 2> get_range(const nlohmann::json& j, const char* key,
                                std::array<double, 2> fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_array() || it->size() != 2) {
        throw ValidationError(std::string(key) + " must be a [low, high] pair");
    }
    return {(*it)[0].get<double>(), (*it)[1].get<double>()};
}

}  // namespace

AugmentConfig augment_config_from_json(const nlohmann::json& j) {
    AugmentConfig c;
    c.noise_sigma = get_or(j, "noise_sigma", c.noise_sigma);
    c.rotation_max_degrees = get_or(j, "rotation_max_degrees", c.rotation_max_degrees);
    c.scale_range = get_range(j, "scale_range", c.scale_range);
    c.symmetry_prob_x = get_or(j, "symmetry_prob_x", c.symmetry_prob_x);
    c.symmetry_prob_y = get_or(j, "symmetry_prob_y", c.symmetry_prob_y);
    c.seed = get_or(j, "seed", c.seed);
    c.check();
    return c;
}

GroupingConfig grouping_config_from_json(const nlohmann::json& j) {
    GroupingConfig c;
    c.semantic_threshold = get_or(j, "semantic_threshold", c.semantic_threshold);
    c.rg_radius = get_or(j, "rg_radius", c.rg_radius);
    c.rg_min_points = get_or(j, "rg_min_points", c.rg_min_points);
    c.ms_bandwidth = get_or(j, "ms_bandwidth", c.ms_bandwidth);
    c.ms_max_iter = get_or(j, "ms_max_iter", c.ms_max_iter);
    c.ms_tol = get_or(j, "ms_tol", c.ms_tol);
    c.ms_seed_stride = get_or(j, "ms_seed_stride", c.ms_seed_stride);
    c.nms_iou = get_or(j, "nms_iou", c.nms_iou);
    c.check();
    return c;
}

ForestConfig forest_config_from_json(const nlohmann::json& j) {
    ForestConfig c;
    c.plot_size = get_or(j, "plot_size", c.plot_size);
    c.n_trees = get_or(j, "n_trees", c.n_trees);
    c.min_spacing = get_or(j, "min_spacing", c.min_spacing);
    c.height_range = get_range(j, "height_range", c.height_range);
    c.crown_radius_range = get_range(j, "crown_radius_range", c.crown_radius_range);
    c.points_per_tree = get_or(j, "points_per_tree", c.points_per_tree);
    c.ground_points = get_or(j, "ground_points", c.ground_points);
    c.seed = get_or(j, "seed", c.seed);
    c.check();
    return c;
}

OracleNoise oracle_noise_from_json(const nlohmann::json& j) {
    OracleNoise n;
    n.offset_sigma = get_or(j, "offset_sigma", n.offset_sigma);
    n.embedding_sigma = get_or(j, "embedding_sigma", n.embedding_sigma);
    n.semantic_flip_prob = get_or(j, "semantic_flip_prob", n.semantic_flip_prob);
    n.check();
    return n;
}

ScenarioConfig scenario_config_from_json(const nlohmann::json& j) {
    ScenarioConfig c;
    c.name = get_or<std::string>(j, "name", c.name);
    if (j.contains("sources")) {
        for (const nlohmann::json& s : j.at("sources")) {
            ScenarioSource src;
            src.path = s.at("path").get<std::string>();
            src.platform = get_or<std::string>(s, "platform", "ULS");
            if (src.platform != "ULS" && src.platform != "MLS") {
                throw ValidationError("source platform must be ULS or MLS");
            }
            c.sources.push_back(std::move(src));
        }
    }
    if (j.contains("densities")) {
        for (const nlohmann::json& d : j.at("densities")) {
            c.densities.push_back(d.get<double>());
        }
    }
    if (j.contains("augment") && !j.at("augment").is_null()) {
        c.augment = augment_config_from_json(j.at("augment"));
    }
    c.seed = get_or(j, "seed", c.seed);
    return c;
}

nlohmann::json manifest_to_json(const RunManifest& manifest) {
    nlohmann::json j;
    j["tool_version"] = manifest.tool_version;
    j["timestamp"] = manifest.timestamp;
    j["entries"] = nlohmann::json::array();
    for (const ManifestEntry& e : manifest.entries) {
        nlohmann::json je;
        je["input"] = e.input;
        je["chain"] = e.chain;
        je["output"] = e.output;
        je["seed"] = e.seed;
        if (e.achieved_density.has_value()) {
            je["achieved_density"] = *e.achieved_density;
        } else {
            je["achieved_density"] = nullptr;
        }
        j["entries"].push_back(std::move(je));
    }
    return j;
}

nlohmann::json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

}  // namespace treekit
