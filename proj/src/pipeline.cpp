#include "pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>

#include "errors.hpp"
#include "features.hpp"
#include "ragmerge.hpp"
#include "rng.hpp"
#include "segmentation.hpp"
#include "synth.hpp"

namespace quakeseg {

GridSpec parse_grid_spec(const Config& cfg) {
    GridSpec grid;
    for (const auto& [name, value] : cfg.entries()) {
        (void)value;
        std::vector<double> candidates = cfg.get_list(name);
        grid.params.emplace_back(name, std::move(candidates));
    }
    if (grid.params.empty()) throw ConfigError("grid: no parameters defined");
    return grid;
}

std::vector<int> assign_region_classes(const LabelMap& regions, const LabelMap& truth,
                                       const std::vector<int>& truth_classes) {
    if (regions.width() != truth.width() || regions.height() != truth.height())
        throw ArgumentError("assign_region_classes: label map sizes differ");
    const int n_regions = regions.region_count();
    // votes[region][class] = pixel count
    std::vector<std::map<int, long long>> votes(static_cast<std::size_t>(n_regions));
    for (int i = 0; i < regions.height(); ++i)
        for (int j = 0; j < regions.width(); ++j) {
            const int t = truth.at(i, j);
            if (t < 0 || t >= static_cast<int>(truth_classes.size()))
                throw ArgumentError("assign_region_classes: truth label without a class entry");
            votes[static_cast<std::size_t>(regions.at(i, j))][truth_classes[t]] += 1;
        }
    std::vector<int> out(static_cast<std::size_t>(n_regions), 0);
    for (int r = 0; r < n_regions; ++r) {
        long long best = -1;
        int best_class = 0;
        for (const auto& [cls, count] : votes[static_cast<std::size_t>(r)])
            if (count > best) { // map order means ties keep the smaller class id
                best = count;
                best_class = cls;
            }
        out[static_cast<std::size_t>(r)] = best_class;
    }
    return out;
}

Rgb class_color(int class_id) {
    static const Rgb palette[] = {
        {255, 255, 0},   // intact: yellow
        {255, 0, 0},     // damaged: red
        {64, 160, 64},   // vegetation: green
        {128, 128, 128}, // road: gray
        {0, 128, 255},  {255, 128, 0}, {160, 64, 160}, {0, 160, 160},
    };
    constexpr int n = static_cast<int>(sizeof(palette) / sizeof(palette[0]));
    return palette[((class_id % n) + n) % n];
}

void save_overlay(const LabelMap& regions, const std::vector<int>& region_classes,
                  const std::string& path) {
    if (static_cast<int>(region_classes.size()) < regions.region_count())
        throw ArgumentError("save_overlay: class list shorter than region count");
    std::vector<Rgb> pixels(static_cast<std::size_t>(regions.width()) * regions.height());
    for (int i = 0; i < regions.height(); ++i)
        for (int j = 0; j < regions.width(); ++j)
            pixels[static_cast<std::size_t>(i) * regions.width() + j] =
                class_color(region_classes[static_cast<std::size_t>(regions.at(i, j))]);
    save_ppm(regions.width(), regions.height(), pixels, path);
}

namespace {

const std::vector<std::string> kPipelineKeys = {
    "synth_spec",      "input_raster",    "truth_labels", "truth_classes", "out_dir",
    "threshold",       "min_size",        "scale",        "w_spec",        "w_texture",
    "w_shape",         "w_compact",       "w_smooth",     "glcm_levels",   "nir_band",
    "red_band",        "model",           "widths",       "sdae_depth",    "elm_ridge",
    "pretrain_epochs", "finetune_epochs", "batch_size",   "learning_rate", "corruption",
    "k",               "seed",            "positive_class",
};

// Runs one stage, tagging any failure with the stage name so a long run
// reports where it died.
template <typename Fn>
void stage(const std::string& name, Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        throw Error(e.status(), "stage " + name + ": " + e.what());
    } catch (const std::exception& e) {
        throw Error(Status::DataError, "stage " + name + ": " + e.what());
    }
}

} // namespace

PipelineResult run_pipeline(const Config& cfg, std::optional<std::uint64_t> seed_override) {
    cfg.require_known(kPipelineKeys);

    // Everything that could reject the configuration happens before any
    // artifact is written.
    const bool synth_input = cfg.has("synth_spec");
    if (synth_input == cfg.has("input_raster"))
        throw ConfigError("config: provide exactly one of synth_spec or input_raster");
    if (cfg.has("truth_labels") != cfg.has("truth_classes"))
        throw ConfigError("config: truth_labels and truth_classes go together");
    const std::string out_dir = cfg.get_string("out_dir");

    const double threshold = cfg.get_double("threshold", 0.08);
    const int min_size = cfg.get_int("min_size", 16);
    const double scale = cfg.get_double("scale", 20.0);
    HeterogeneityWeights weights;
    weights.w_spec = cfg.get_double("w_spec", weights.w_spec);
    weights.w_texture = cfg.get_double("w_texture", weights.w_texture);
    weights.w_shape = cfg.get_double("w_shape", weights.w_shape);
    weights.w_compact = cfg.get_double("w_compact", weights.w_compact);
    weights.w_smooth = cfg.get_double("w_smooth", weights.w_smooth);
    weights.validate();
    if (scale < 0.0) throw ConfigError("scale: must be >= 0");
    if (threshold <= 0.0) throw ConfigError("threshold: must be > 0");
    if (min_size < 1) throw ConfigError("min_size: must be >= 1");

    const int glcm_levels = cfg.get_int("glcm_levels", 32);
    if (glcm_levels < 2) throw ConfigError("glcm_levels: must be >= 2");

    const ModelKind model = parse_model_kind(cfg.get_string("model", "sdae"));
    GridSpec grid;
    grid.params.emplace_back("width", cfg.get_list("widths", {20.0, 50.0, 200.0, 800.0}));
    for (double w : grid.params[0].second)
        if (w < 1.0 || w != std::floor(w)) throw ConfigError("widths: entries must be positive integers");
    const int sdae_depth = cfg.get_int("sdae_depth", 5);
    if (sdae_depth < 1) throw ConfigError("sdae_depth: must be >= 1");
    const double elm_ridge = cfg.get_double("elm_ridge", 1e-6);

    TrainConfig train;
    train.pretrain_epochs = cfg.get_int("pretrain_epochs", train.pretrain_epochs);
    train.finetune_epochs = cfg.get_int("finetune_epochs", train.finetune_epochs);
    train.batch_size = cfg.get_int("batch_size", train.batch_size);
    train.learning_rate = cfg.get_double("learning_rate", train.learning_rate);
    train.corruption = cfg.get_double("corruption", train.corruption);
    train.validate();

    const int k = cfg.get_int("k", 5);
    if (k < 2) throw ConfigError("k: must be >= 2");
    const std::uint64_t seed = seed_override ? *seed_override : cfg.get_u64("seed", 0);
    train.seed = seed;
    const int positive_class = cfg.get_int("positive_class", 1);
    if (positive_class < 0) throw ConfigError("positive_class: must be >= 0");

    PipelineResult result;
    auto track = [&result](const std::string& path) { result.artifacts.push_back(path); };

    try {
        std::filesystem::create_directories(out_dir);
        auto path_of = [&out_dir](const char* name) {
            return (std::filesystem::path(out_dir) / name).string();
        };

        std::optional<MultiBandRaster> raster;
        std::optional<LabelMap> truth;
        std::vector<int> truth_classes;

        if (synth_input) {
            stage("synth", [&] {
                const SceneSpec spec = SceneSpec::parse_file(cfg.get_string("synth_spec"));
                Scene scene = generate_scene(spec);
                save_raster(scene.raster, path_of("scene.qras"));
                track(path_of("scene.qras"));
                save_labels_pgm(scene.truth, path_of("truth.pgm"));
                track(path_of("truth.pgm"));
                save_classes_csv(scene.classes, path_of("classes.csv"));
                track(path_of("classes.csv"));
                raster.emplace(std::move(scene.raster));
                truth.emplace(std::move(scene.truth));
                truth_classes = std::move(scene.classes);
            });
        } else {
            stage("load", [&] {
                raster.emplace(load_raster(cfg.get_string("input_raster")));
                if (cfg.has("truth_labels")) {
                    truth.emplace(load_labels_pgm(cfg.get_string("truth_labels")));
                    truth_classes = load_classes_csv(cfg.get_string("truth_classes"));
                    validate_label_map(*truth);
                    if (truth->width() != raster->width() || truth->height() != raster->height())
                        throw DataError("truth label map size does not match the raster");
                    if (static_cast<int>(truth_classes.size()) != truth->region_count())
                        throw DataError("truth class table does not cover every region");
                }
            });
        }

        std::optional<LabelMap> initial;
        stage("segment", [&] {
            LabelMap fine = fast_scan_partition(*raster, threshold);
            initial.emplace(adaptive_merge_small(fine, *raster, min_size));
            save_labels_pgm(*initial, path_of("initial_labels.pgm"));
            track(path_of("initial_labels.pgm"));
            result.initial_regions = initial->region_count();
        });

        std::optional<LabelMap> merged;
        stage("merge", [&] {
            merged.emplace(merge_regions(*initial, *raster, weights, scale));
            save_labels_pgm(*merged, path_of("merged_labels.pgm"));
            track(path_of("merged_labels.pgm"));
            result.merged_regions = merged->region_count();
        });

        const int nir_band = cfg.get_int("nir_band", raster->bands() - 1);
        const int red_band = cfg.get_int("red_band", std::max(0, raster->bands() - 2));
        if (nir_band < 0 || nir_band >= raster->bands() || red_band < 0 || red_band >= raster->bands())
            throw ConfigError("nir_band/red_band: out of range");

        std::optional<FeatureMatrix> features;
        stage("features", [&] {
            const BandGrid ndvi = compute_ndvi(*raster, nir_band, red_band);
            std::optional<std::vector<int>> region_classes;
            if (truth) region_classes = assign_region_classes(*merged, *truth, truth_classes);
            features.emplace(build_feature_matrix(*raster, *merged, ndvi, region_classes, nir_band,
                                                  glcm_levels));
            save_features_csv(*features, path_of("features.csv"));
            track(path_of("features.csv"));
        });

        if (!truth) return result; // nothing to learn from; segmentation artifacts stand

        stage("eval", [&] {
            result.eval = evaluate_model(model, train, grid, *features, k, seed, positive_class,
                                         sdae_depth, elm_ridge);
            save_report_csv(result.eval.grid, result.eval.final_cv, result.eval.best_params, k,
                            path_of("report.csv"));
            track(path_of("report.csv"));
            result.evaluated = true;
        });

        std::optional<SdaeModel> fitted;
        Eigen::MatrixXd x;
        stage("train", [&] {
            // Final model: best grid cell, fit on all labeled rows.
            const NormBounds bounds = fit_bounds(*features);
            x.resize(static_cast<Eigen::Index>(features->rows.size()),
                     static_cast<Eigen::Index>(features->feature_count()));
            for (std::size_t r = 0; r < features->rows.size(); ++r) {
                const std::vector<double> n = apply_bounds(features->rows[r], bounds);
                for (std::size_t c = 0; c < n.size(); ++c)
                    x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = n[c];
            }

            int width = 0;
            for (const auto& [name, value] : result.eval.best_params)
                if (name == "width") width = static_cast<int>(value);
            const std::uint64_t fit_seed = Rng::derive(seed, kFinalFitStream);

            switch (model) {
                case ModelKind::Sdae: {
                    TrainConfig c = train;
                    c.seed = fit_seed;
                    const std::vector<int> widths_vec(static_cast<std::size_t>(sdae_depth), width);
                    fitted = train_sdae(x, features->labels, widths_vec, c).model;
                    break;
                }
                case ModelKind::Mlp: {
                    TrainConfig c = train;
                    c.seed = fit_seed;
                    fitted = mlp_train(x, features->labels, width, c).model;
                    break;
                }
                case ModelKind::Elm:
                    fitted = elm_train(x, features->labels, width, fit_seed, elm_ridge);
                    break;
            }
            fitted->bounds = bounds;
            save_model(*fitted, path_of("model.txt"));
            track(path_of("model.txt"));
        });

        stage("overlay", [&] {
            const std::vector<int> predicted = predict_labels(*fitted, x);
            save_overlay(*merged, predicted, path_of("overlay.ppm"));
            track(path_of("overlay.ppm"));
        });
    } catch (...) {
        for (const std::string& path : result.artifacts) std::remove(path.c_str());
        throw;
    }

    return result;
}

PipelineResult run_pipeline_file(const std::string& config_path,
                                 std::optional<std::uint64_t> seed_override) {
    return run_pipeline(Config::parse_file(config_path), seed_override);
}

} // namespace quakeseg
