// treekit: synthetic forests, sparsification, augmentation, instance
// grouping and evaluation for labeled point clouds, over the PTC/PRD text
// formats.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "treekit/augment.hpp"
#include "treekit/errors.hpp"
#include "treekit/evaluate.hpp"
#include "treekit/grouping.hpp"
#include "treekit/io.hpp"
#include "treekit/pipeline.hpp"
#include "treekit/rng.hpp"
#include "treekit/sparsify.hpp"
#include "treekit/synthgen.hpp"

namespace {

using namespace treekit;

std::vector<double> parse_density_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stod(tok));
    }
    if (out.empty()) throw ValidationError("empty density list");
    return out;
}

std::vector<SweepLevel> parse_sweep_levels(const std::string& csv) {
    std::vector<SweepLevel> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        if (tok == "full") {
            out.push_back({std::nullopt});
        } else {
            out.push_back({std::stod(tok)});
        }
    }
    if (out.empty()) throw ValidationError("empty density list");
    return out;
}

std::string density_label(double d) {
    std::ostringstream os;
    os << d;
    return os.str();
}

GroupingConfig load_grouping_config(const std::string& path) {
    if (path.empty()) return GroupingConfig{};
    return grouping_config_from_json(load_json(path));
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out.flush()) throw IoError("write failed for " + path.string());
}

void print_report_summary(const MetricsReport& r) {
    std::printf("gt=%zu pt=%zu tp=%zu fp=%zu fn=%zu\n", r.gt_count, r.pt_count, r.tp, r.fp,
                r.fn);
    std::printf("detection=%.4f omission=%.4f commission=%.4f f1_tree=%.4f f1_local=%.4f",
                r.detection_rate, r.omission_rate, r.commission_rate, r.f1_tree, r.f1_local);
    if (r.rmse_h.has_value()) {
        std::printf(" rmse_h=%.4f m", *r.rmse_h);
    }
    std::printf("\n");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"treekit: tree-instance segmentation toolkit for labeled point clouds"};
    app.set_version_flag("--version", std::string("treekit ") + kToolVersion);
    app.require_subcommand(1);
    app.fallthrough();

    size_t threads = 1;
    app.add_option("--threads", threads, "worker threads for sweeps")->capture_default_str();

    // ---- synth -----------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "generate a synthetic forest + oracle predictions");
    std::string synth_config, synth_out;
    uint64_t synth_seed = 0;
    bool synth_seed_set = false;
    double synth_offset_sigma = 0.0, synth_embedding_sigma = 0.0, synth_flip = 0.0;
    synth->add_option("--config", synth_config, "forest config JSON");
    synth->add_option("--seed", synth_seed, "seed override")
        ->each([&](const std::string&) { synth_seed_set = true; });
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--offset-sigma", synth_offset_sigma, "oracle offset noise, m");
    synth->add_option("--embedding-sigma", synth_embedding_sigma, "oracle embedding noise");
    synth->add_option("--flip-prob", synth_flip, "oracle semantic flip probability");
    synth->callback([&] {
        ForestConfig fc;
        if (!synth_config.empty()) fc = forest_config_from_json(load_json(synth_config));
        uint64_t seed = synth_seed_set ? synth_seed : fc.seed;
        LabeledPointCloud cloud = generate_forest(fc, seed);
        OracleNoise noise{synth_offset_sigma, synth_embedding_sigma, synth_flip};
        PointPredictions preds = oracle_predictions(cloud, noise, derive_seed(seed, 1));

        std::filesystem::create_directories(synth_out);
        save_cloud(cloud, std::filesystem::path(synth_out) / "cloud.ptc", CloudFormat::ptc);
        save_predictions(preds, std::filesystem::path(synth_out) / "oracle.prd");
        std::printf("wrote %s/cloud.ptc (%zu points, %zu trees) and %s/oracle.prd\n",
                    synth_out.c_str(), cloud.size(),
                    InstanceSegmentation::from_cloud(cloud).instance_count(),
                    synth_out.c_str());
    });

    // ---- sparsify --------------------------------------------------------
    auto* spars = app.add_subcommand("sparsify", "random subsampling to a target density");
    double spars_density = 0.0;
    uint64_t spars_seed = 0;
    std::string spars_in, spars_out;
    spars->add_option("--density", spars_density, "target points per m^2")->required();
    spars->add_option("--seed", spars_seed, "sampling seed")->capture_default_str();
    spars->add_option("input", spars_in, "input cloud")->required();
    spars->add_option("output", spars_out, "output cloud")->required();
    spars->callback([&] {
        LabeledPointCloud cloud = load_cloud(spars_in, format_from_path(spars_in));
        LabeledPointCloud thin = sparsify(cloud, spars_density, spars_seed);
        save_cloud(thin, spars_out, format_from_path(spars_out));
        std::printf("%zu -> %zu points\n", cloud.size(), thin.size());
    });

    // ---- sparsify-series -------------------------------------------------
    auto* series = app.add_subcommand("sparsify-series", "one output per target density");
    std::string series_densities, series_in, series_dir;
    uint64_t series_seed = 0;
    series->add_option("--densities", series_densities, "comma-separated densities")->required();
    series->add_option("--seed", series_seed, "base seed")->capture_default_str();
    series->add_option("input", series_in, "input cloud")->required();
    series->add_option("out_dir", series_dir, "output directory")->required();
    series->callback([&] {
        LabeledPointCloud cloud = load_cloud(series_in, format_from_path(series_in));
        SparsifyConfig cfg;
        cfg.target_densities = parse_density_list(series_densities);
        cfg.seed = series_seed;
        auto outputs = sparsify_series(cloud, cfg);
        std::filesystem::create_directories(series_dir);
        std::string stem = std::filesystem::path(series_in).stem().string();
        for (const auto& [density, thin] : outputs) {
            std::filesystem::path path = std::filesystem::path(series_dir) /
                                         (stem + "_d" + density_label(density) + ".ptc");
            save_cloud(thin, path, CloudFormat::ptc);
            std::printf("%s: %zu points\n", path.c_str(), thin.size());
        }
    });

    // ---- augment ---------------------------------------------------------
    auto* aug = app.add_subcommand("augment", "seeded geometric augmentation");
    std::string aug_config, aug_in, aug_out;
    uint64_t aug_seed = 0;
    bool aug_seed_set = false;
    aug->add_option("--config", aug_config, "augment config JSON");
    aug->add_option("--seed", aug_seed, "seed override")
        ->each([&](const std::string&) { aug_seed_set = true; });
    aug->add_option("input", aug_in, "input cloud")->required();
    aug->add_option("output", aug_out, "output cloud")->required();
    aug->callback([&] {
        AugmentConfig cfg;
        if (!aug_config.empty()) cfg = augment_config_from_json(load_json(aug_config));
        if (aug_seed_set) cfg.seed = aug_seed;
        LabeledPointCloud cloud = load_cloud(aug_in, format_from_path(aug_in));
        save_cloud(augment(cloud, cfg), aug_out, format_from_path(aug_out));
    });

    // ---- segment ----------------------------------------------------------
    auto* seg = app.add_subcommand("segment", "instance grouping from per-point predictions");
    std::string seg_config, seg_cloud, seg_preds, seg_out;
    seg->add_option("--config", seg_config, "grouping config JSON");
    seg->add_option("cloud", seg_cloud, "input cloud (.ptc)")->required();
    seg->add_option("predictions", seg_preds, "prediction sidecar (.prd)")->required();
    seg->add_option("output", seg_out, "predicted-instance cloud (.ptc)")->required();
    seg->callback([&] {
        GroupingConfig cfg = load_grouping_config(seg_config);
        LabeledPointCloud cloud = load_cloud(seg_cloud, format_from_path(seg_cloud));
        PointPredictions preds = load_predictions(seg_preds);
        if (preds.size() != cloud.size()) {
            throw AlignmentError("predictions length " + std::to_string(preds.size()) +
                                 " vs cloud length " + std::to_string(cloud.size()));
        }
        InstanceSegmentation result = segment(cloud, preds, cfg);
        std::vector<uint32_t> mask = semantic_mask(preds, cfg.semantic_threshold);
        save_cloud(with_predicted_instances(cloud, result, mask), seg_out, CloudFormat::ptc);
        std::printf("%zu instances\n", result.instance_count());
    });

    // ---- evaluate ----------------------------------------------------------
    auto* eval = app.add_subcommand("evaluate", "match instances and report all metrics");
    std::string eval_gt, eval_pred, eval_out;
    double eval_bins = 5.0;
    eval->add_option("gt", eval_gt, "ground-truth cloud (.ptc)")->required();
    eval->add_option("pred", eval_pred, "predicted-instance cloud (.ptc)")->required();
    eval->add_option("--bins", eval_bins, "height bin size, m")->capture_default_str();
    eval->add_option("--out", eval_out, "report JSON path (default: stdout)");
    eval->callback([&] {
        LabeledPointCloud gt_cloud = load_cloud(eval_gt, format_from_path(eval_gt));
        LabeledPointCloud pred_cloud = load_cloud(eval_pred, format_from_path(eval_pred));
        if (gt_cloud.size() != pred_cloud.size()) {
            throw AlignmentError("gt length " + std::to_string(gt_cloud.size()) +
                                 " vs pred length " + std::to_string(pred_cloud.size()));
        }
        MetricsReport r = evaluate_pair(gt_cloud, InstanceSegmentation::from_cloud(gt_cloud),
                                        InstanceSegmentation::from_cloud(pred_cloud), eval_bins);
        std::string json = report_to_json(r).dump(2) + "\n";
        if (eval_out.empty()) {
            std::fputs(json.c_str(), stdout);
        } else {
            write_text(eval_out, json);
            print_report_summary(r);
        }
    });

    // ---- ce -----------------------------------------------------------------
    auto* ce = app.add_subcommand("ce", "data processed per core per minute");
    CEInput ce_in;
    ce->add_option("--mb", ce_in.data_mb, "data processed, MB")->required();
    ce->add_option("--cores", ce_in.cores, "number of cores")->required();
    ce->add_option("--minutes", ce_in.minutes, "processing time, minutes")->required();
    ce->callback([&] { std::printf("%.6g\n", compute_ce(ce_in)); });

    // ---- prepare -------------------------------------------------------------
    auto* prep = app.add_subcommand("prepare", "compose a scenario dataset");
    std::string prep_config, prep_out;
    uint64_t prep_seed = 0;
    bool prep_seed_set = false;
    prep->add_option("--config", prep_config, "scenario config JSON")->required();
    prep->add_option("--seed", prep_seed, "seed override")
        ->each([&](const std::string&) { prep_seed_set = true; });
    prep->add_option("--out", prep_out, "output directory")->required();
    prep->callback([&] {
        ScenarioConfig cfg = scenario_config_from_json(load_json(prep_config));
        if (prep_seed_set) cfg.seed = prep_seed;
        RunManifest manifest = prepare_scenario(cfg, prep_out);
        std::printf("%zu outputs, manifest at %s/manifest.json\n", manifest.entries.size(),
                    prep_out.c_str());
    });

    // ---- sweep -----------------------------------------------------------------
    auto* sweep = app.add_subcommand("sweep", "per-density segment + evaluate sweep");
    std::string sweep_cloud, sweep_levels_csv = std::string("full"), sweep_preds, sweep_config, sweep_out;
    uint64_t sweep_seed = 0;
    bool sweep_oracle = false;
    double sweep_offset_sigma = 0.0, sweep_embedding_sigma = 0.0, sweep_flip = 0.0;
    double sweep_bins = 5.0;
    sweep->add_option("cloud", sweep_cloud, "labeled cloud (.ptc), also the ground truth")
        ->required();
    sweep->add_option("--densities", sweep_levels_csv,
                      "comma-separated densities; 'full' keeps the source resolution")
        ->capture_default_str();
    sweep->add_option("--seed", sweep_seed, "base seed")->capture_default_str();
    sweep->add_option("--preds", sweep_preds, "full-resolution predictions (.prd) to subset");
    sweep->add_flag("--oracle", sweep_oracle, "derive predictions from the labels");
    sweep->add_option("--offset-sigma", sweep_offset_sigma, "oracle offset noise, m");
    sweep->add_option("--embedding-sigma", sweep_embedding_sigma, "oracle embedding noise");
    sweep->add_option("--flip-prob", sweep_flip, "oracle semantic flip probability");
    sweep->add_option("--config", sweep_config, "grouping config JSON");
    sweep->add_option("--bins", sweep_bins, "height bin size, m")->capture_default_str();
    sweep->add_option("--out", sweep_out, "CSV path (default: stdout)");
    sweep->callback([&] {
        if (sweep_oracle == !sweep_preds.empty()) {
            throw ValidationError("pass exactly one of --preds or --oracle");
        }
        LabeledPointCloud cloud = load_cloud(sweep_cloud, format_from_path(sweep_cloud));
        PredictionProvider provider;
        if (sweep_oracle) {
            provider = oracle_prediction_provider(
                OracleNoise{sweep_offset_sigma, sweep_embedding_sigma, sweep_flip});
        } else {
            PointPredictions full = load_predictions(sweep_preds);
            if (full.size() != cloud.size()) {
                throw AlignmentError("predictions length " + std::to_string(full.size()) +
                                     " vs cloud length " + std::to_string(cloud.size()));
            }
            provider = file_prediction_provider(std::move(full));
        }
        auto rows = sweep_densities(cloud, provider, parse_sweep_levels(sweep_levels_csv),
                                    load_grouping_config(sweep_config), sweep_seed, sweep_bins,
                                    threads);
        std::string csv = sweep_to_csv(rows);
        if (sweep_out.empty()) {
            std::fputs(csv.c_str(), stdout);
        } else {
            write_text(sweep_out, csv);
        }
        for (const SweepRow& row : rows) {
            if (!row.ok) std::fprintf(stderr, "level failed: %s\n", row.error.c_str());
        }
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const AlignmentError& e) {
        std::fprintf(stderr, "alignment error: %s\n", e.what());
        return 3;
    } catch (const IoError& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return 4;
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return 4;
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
