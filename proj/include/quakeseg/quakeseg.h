#ifndef QUAKESEG_H
#define QUAKESEG_H

/* C interface to the quakeseg core. Objects are opaque handles; every
 * fallible call returns a qks_status and leaves a message for the calling
 * thread in qks_last_error() on failure. Out-parameters are written only on
 * QKS_OK. */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qks_status {
    QKS_OK = 0,
    QKS_CONFIG_ERROR = 2,
    QKS_DATA_ERROR = 3,
    QKS_NUMERIC_ERROR = 4,
    QKS_ARGUMENT_ERROR = 5
} qks_status;

const char* qks_version(void);

/* Message from this thread's most recent failing call; never NULL. */
const char* qks_last_error(void);

/* Multi-band raster (band-sequential float32). */
typedef struct qks_raster qks_raster;

qks_status qks_raster_create(int width, int height, int bands, const float* values,
                             qks_raster** out);
qks_status qks_raster_load(const char* path, qks_raster** out);
qks_status qks_raster_save(const qks_raster* raster, const char* path);
void qks_raster_free(qks_raster* raster);
int qks_raster_width(const qks_raster* raster);
int qks_raster_height(const qks_raster* raster);
int qks_raster_bands(const qks_raster* raster);
/* Borrowed pointer to width*height*bands values, valid until the handle is freed. */
const float* qks_raster_values(const qks_raster* raster);

/* Region label map (dense ids, row-major int32). */
typedef struct qks_labels qks_labels;

qks_status qks_labels_create(int width, int height, const int32_t* values, qks_labels** out);
qks_status qks_labels_load(const char* path, qks_labels** out);
qks_status qks_labels_save(const qks_labels* labels, const char* path);
void qks_labels_free(qks_labels* labels);
int qks_labels_width(const qks_labels* labels);
int qks_labels_height(const qks_labels* labels);
int qks_labels_region_count(const qks_labels* labels);
const int32_t* qks_labels_values(const qks_labels* labels);

/* Initial segmentation: spectral-angle fast scan, then regions below
 * min_size pixels are absorbed into their most similar neighbor. */
qks_status qks_segment(const qks_raster* raster, double threshold, int min_size,
                       qks_labels** out);

/* Region merging on the adjacency graph until the cheapest merge exceeds
 * scale. w_spec + w_texture + w_shape must sum to 1. */
qks_status qks_merge(const qks_raster* raster, const qks_labels* initial, double scale,
                     double w_spec, double w_texture, double w_shape, qks_labels** out);

/* Per-region feature table written as CSV. truth_csv (region,class rows
 * aligned with the label map) may be NULL for an unlabeled table. nir_band
 * -1 means the last band; glcm_levels 0 means the default of 32. */
qks_status qks_features(const qks_raster* raster, const qks_labels* labels,
                        const char* truth_csv, int nir_band, int glcm_levels,
                        const char* out_csv);

/* Synthetic scene from a key = value spec file. */
qks_status qks_synth(const char* spec_cfg, const char* out_raster, const char* out_truth,
                     const char* out_classes);

/* Training hyperparameters for qks_eval. Negative fields (and batch_size /
 * positive_class of 0 or less) fall back to defaults. */
typedef struct qks_train_config {
    int pretrain_epochs;
    int finetune_epochs;
    int batch_size;
    double learning_rate;
    double corruption;
    int sdae_depth;
    double elm_ridge;
    int positive_class;
} qks_train_config;

/* Fills cfg with the library defaults. */
void qks_train_config_init(qks_train_config* cfg);

/* Grid search + stratified k-fold CV over a labeled feature CSV; writes the
 * per-cell report. model is "sdae", "mlp", or "elm". train may be NULL. */
qks_status qks_eval(const char* features_csv, const char* model, const char* grid_cfg, int k,
                    uint64_t seed, const qks_train_config* train, const char* report_csv);

typedef struct qks_run_summary {
    int initial_regions;
    int merged_regions;
    int evaluated; /* 1 when ground truth was present and a model was trained */
    double final_accuracy;
    double final_f1;
} qks_run_summary;

/* Full pipeline from a config file. seed_override may be NULL; summary may
 * be NULL. */
qks_status qks_run(const char* config_path, const uint64_t* seed_override,
                   qks_run_summary* summary);

#ifdef __cplusplus
}
#endif

#endif
