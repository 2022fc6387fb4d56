#include "quakeseg/quakeseg.h"

#include <algorithm>
#include <optional>
#include <string>

#include "errors.hpp"
#include "eval.hpp"
#include "features.hpp"
#include "pipeline.hpp"
#include "ragmerge.hpp"
#include "raster.hpp"
#include "segmentation.hpp"
#include "synth.hpp"

struct qks_raster {
    quakeseg::MultiBandRaster impl;
};

struct qks_labels {
    quakeseg::LabelMap impl;
};

namespace {

thread_local std::string g_last_error;

qks_status map_status(quakeseg::Status s) {
    return static_cast<qks_status>(static_cast<int>(s));
}

template <typename Fn>
qks_status guarded(Fn&& fn) noexcept {
    try {
        fn();
        return QKS_OK;
    } catch (const quakeseg::Error& e) {
        g_last_error = e.what();
        return map_status(e.status());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return QKS_DATA_ERROR;
    } catch (...) {
        g_last_error = "unknown error";
        return QKS_DATA_ERROR;
    }
}

qks_status fail_argument(const char* msg) {
    g_last_error = msg;
    return QKS_ARGUMENT_ERROR;
}

} // namespace

extern "C" {

const char* qks_version(void) { return "1.0.0"; }

const char* qks_last_error(void) { return g_last_error.c_str(); }

qks_status qks_raster_create(int width, int height, int bands, const float* values,
                             qks_raster** out) {
    if (!values || !out) return fail_argument("qks_raster_create: null pointer");
    return guarded([&] {
        if (width <= 0 || height <= 0 || bands <= 0)
            throw quakeseg::ArgumentError("qks_raster_create: non-positive dimensions");
        const std::size_t n = static_cast<std::size_t>(width) * height * bands;
        *out = new qks_raster{
            quakeseg::MultiBandRaster(width, height, bands, std::vector<float>(values, values + n))};
    });
}

qks_status qks_raster_load(const char* path, qks_raster** out) {
    if (!path || !out) return fail_argument("qks_raster_load: null pointer");
    return guarded([&] { *out = new qks_raster{quakeseg::load_raster(path)}; });
}

qks_status qks_raster_save(const qks_raster* raster, const char* path) {
    if (!raster || !path) return fail_argument("qks_raster_save: null pointer");
    return guarded([&] { quakeseg::save_raster(raster->impl, path); });
}

void qks_raster_free(qks_raster* raster) { delete raster; }

int qks_raster_width(const qks_raster* raster) { return raster ? raster->impl.width() : 0; }
int qks_raster_height(const qks_raster* raster) { return raster ? raster->impl.height() : 0; }
int qks_raster_bands(const qks_raster* raster) { return raster ? raster->impl.bands() : 0; }

const float* qks_raster_values(const qks_raster* raster) {
    return raster ? raster->impl.values().data() : nullptr;
}

qks_status qks_labels_create(int width, int height, const int32_t* values, qks_labels** out) {
    if (!values || !out) return fail_argument("qks_labels_create: null pointer");
    return guarded([&] {
        if (width <= 0 || height <= 0)
            throw quakeseg::ArgumentError("qks_labels_create: non-positive dimensions");
        const std::size_t n = static_cast<std::size_t>(width) * height;
        quakeseg::LabelMap labels(width, height, std::vector<int>(values, values + n));
        quakeseg::validate_label_map(labels);
        *out = new qks_labels{std::move(labels)};
    });
}

qks_status qks_labels_load(const char* path, qks_labels** out) {
    if (!path || !out) return fail_argument("qks_labels_load: null pointer");
    return guarded([&] { *out = new qks_labels{quakeseg::load_labels_pgm(path)}; });
}

qks_status qks_labels_save(const qks_labels* labels, const char* path) {
    if (!labels || !path) return fail_argument("qks_labels_save: null pointer");
    return guarded([&] { quakeseg::save_labels_pgm(labels->impl, path); });
}

void qks_labels_free(qks_labels* labels) { delete labels; }

int qks_labels_width(const qks_labels* labels) { return labels ? labels->impl.width() : 0; }
int qks_labels_height(const qks_labels* labels) { return labels ? labels->impl.height() : 0; }

int qks_labels_region_count(const qks_labels* labels) {
    return labels ? labels->impl.region_count() : 0;
}

const int32_t* qks_labels_values(const qks_labels* labels) {
    static_assert(sizeof(int) == sizeof(int32_t));
    return labels ? reinterpret_cast<const int32_t*>(labels->impl.labels().data()) : nullptr;
}

qks_status qks_segment(const qks_raster* raster, double threshold, int min_size,
                       qks_labels** out) {
    if (!raster || !out) return fail_argument("qks_segment: null pointer");
    return guarded([&] {
        quakeseg::LabelMap fine = quakeseg::fast_scan_partition(raster->impl, threshold);
        *out = new qks_labels{quakeseg::adaptive_merge_small(fine, raster->impl, min_size)};
    });
}

qks_status qks_merge(const qks_raster* raster, const qks_labels* initial, double scale,
                     double w_spec, double w_texture, double w_shape, qks_labels** out) {
    if (!raster || !initial || !out) return fail_argument("qks_merge: null pointer");
    return guarded([&] {
        quakeseg::HeterogeneityWeights w;
        w.w_spec = w_spec;
        w.w_texture = w_texture;
        w.w_shape = w_shape;
        *out = new qks_labels{quakeseg::merge_regions(initial->impl, raster->impl, w, scale)};
    });
}

qks_status qks_features(const qks_raster* raster, const qks_labels* labels,
                        const char* truth_csv, int nir_band, int glcm_levels,
                        const char* out_csv) {
    if (!raster || !labels || !out_csv) return fail_argument("qks_features: null pointer");
    return guarded([&] {
        std::optional<std::vector<int>> truth;
        if (truth_csv) {
            truth = quakeseg::load_classes_csv(truth_csv);
            if (static_cast<int>(truth->size()) != labels->impl.region_count())
                throw quakeseg::DataError("truth class table does not cover every region");
        }
        const int bands = raster->impl.bands();
        const int nir = nir_band < 0 ? bands - 1 : nir_band;
        const int red = std::max(0, bands - 2);
        if (nir >= bands) throw quakeseg::ArgumentError("qks_features: nir_band out of range");
        const quakeseg::BandGrid ndvi = quakeseg::compute_ndvi(raster->impl, nir, red);
        const quakeseg::FeatureMatrix table = quakeseg::build_feature_matrix(
            raster->impl, labels->impl, ndvi, truth, nir, glcm_levels > 0 ? glcm_levels : 32);
        quakeseg::save_features_csv(table, out_csv);
    });
}

qks_status qks_synth(const char* spec_cfg, const char* out_raster, const char* out_truth,
                     const char* out_classes) {
    if (!spec_cfg || !out_raster || !out_truth || !out_classes)
        return fail_argument("qks_synth: null pointer");
    return guarded([&] {
        const quakeseg::Scene scene =
            quakeseg::generate_scene(quakeseg::SceneSpec::parse_file(spec_cfg));
        quakeseg::save_raster(scene.raster, out_raster);
        quakeseg::save_labels_pgm(scene.truth, out_truth);
        quakeseg::save_classes_csv(scene.classes, out_classes);
    });
}

void qks_train_config_init(qks_train_config* cfg) {
    if (!cfg) return;
    const quakeseg::TrainConfig d;
    cfg->pretrain_epochs = d.pretrain_epochs;
    cfg->finetune_epochs = d.finetune_epochs;
    cfg->batch_size = d.batch_size;
    cfg->learning_rate = d.learning_rate;
    cfg->corruption = d.corruption;
    cfg->sdae_depth = 5;
    cfg->elm_ridge = 1e-6;
    cfg->positive_class = 1;
}

qks_status qks_eval(const char* features_csv, const char* model, const char* grid_cfg, int k,
                    uint64_t seed, const qks_train_config* train, const char* report_csv) {
    if (!features_csv || !model || !grid_cfg || !report_csv)
        return fail_argument("qks_eval: null pointer");
    return guarded([&] {
        qks_train_config c;
        qks_train_config_init(&c);
        if (train) c = *train;

        quakeseg::TrainConfig base;
        if (c.pretrain_epochs >= 0) base.pretrain_epochs = c.pretrain_epochs;
        if (c.finetune_epochs >= 0) base.finetune_epochs = c.finetune_epochs;
        if (c.batch_size > 0) base.batch_size = c.batch_size;
        if (c.learning_rate > 0.0) base.learning_rate = c.learning_rate;
        if (c.corruption >= 0.0) base.corruption = c.corruption;
        base.seed = seed;
        const int depth = c.sdae_depth > 0 ? c.sdae_depth : 5;
        const double ridge = c.elm_ridge >= 0.0 ? c.elm_ridge : 1e-6;
        const int positive = c.positive_class >= 0 ? c.positive_class : 1;

        const quakeseg::FeatureMatrix features = quakeseg::load_features_csv(features_csv);
        const quakeseg::GridSpec grid =
            quakeseg::parse_grid_spec(quakeseg::Config::parse_file(grid_cfg));
        const quakeseg::EvalResult result =
            quakeseg::evaluate_model(quakeseg::parse_model_kind(model), base, grid, features, k,
                                     seed, positive, depth, ridge);
        quakeseg::save_report_csv(result.grid, result.final_cv, result.best_params, k, report_csv);
    });
}

qks_status qks_run(const char* config_path, const uint64_t* seed_override,
                   qks_run_summary* summary) {
    if (!config_path) return fail_argument("qks_run: null pointer");
    return guarded([&] {
        std::optional<std::uint64_t> seed;
        if (seed_override) seed = *seed_override;
        const quakeseg::PipelineResult result = quakeseg::run_pipeline_file(config_path, seed);
        if (summary) {
            summary->initial_regions = result.initial_regions;
            summary->merged_regions = result.merged_regions;
            summary->evaluated = result.evaluated ? 1 : 0;
            summary->final_accuracy = result.evaluated ? result.eval.final_cv.accuracy : 0.0;
            summary->final_f1 = result.evaluated ? result.eval.final_cv.f1 : 0.0;
        }
    });
}

} // extern "C"
