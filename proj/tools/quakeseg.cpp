#include <cstdint>
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "quakeseg/quakeseg.h"

namespace {

// Exit codes follow qks_status; contract-misuse errors surface as config
// errors on the command line.
int finish(qks_status status) {
    if (status == QKS_OK) return 0;
    std::fprintf(stderr, "quakeseg: %s\n", qks_last_error());
    const int code = static_cast<int>(status);
    return status == QKS_ARGUMENT_ERROR ? 2 : code;
}

struct SegmentArgs {
    std::string input, output;
    double threshold = 0.08;
    int min_size = 16;
};

int run_segment(const SegmentArgs& a) {
    qks_raster* raster = nullptr;
    qks_status s = qks_raster_load(a.input.c_str(), &raster);
    if (s != QKS_OK) return finish(s);
    qks_labels* labels = nullptr;
    s = qks_segment(raster, a.threshold, a.min_size, &labels);
    if (s == QKS_OK) {
        s = qks_labels_save(labels, a.output.c_str());
        if (s == QKS_OK)
            std::printf("segment: %d regions -> %s\n", qks_labels_region_count(labels),
                        a.output.c_str());
    }
    qks_labels_free(labels);
    qks_raster_free(raster);
    return finish(s);
}

struct MergeArgs {
    std::string input, labels, output;
    double scale = 20.0;
    double w_spec = 0.7, w_tex = 0.2, w_shape = 0.1;
};

int run_merge(const MergeArgs& a) {
    qks_raster* raster = nullptr;
    qks_status s = qks_raster_load(a.input.c_str(), &raster);
    if (s != QKS_OK) return finish(s);
    qks_labels* initial = nullptr;
    s = qks_labels_load(a.labels.c_str(), &initial);
    qks_labels* merged = nullptr;
    if (s == QKS_OK) s = qks_merge(raster, initial, a.scale, a.w_spec, a.w_tex, a.w_shape, &merged);
    if (s == QKS_OK) {
        s = qks_labels_save(merged, a.output.c_str());
        if (s == QKS_OK)
            std::printf("merge: %d -> %d regions -> %s\n", qks_labels_region_count(initial),
                        qks_labels_region_count(merged), a.output.c_str());
    }
    qks_labels_free(merged);
    qks_labels_free(initial);
    qks_raster_free(raster);
    return finish(s);
}

struct FeatureArgs {
    std::string input, labels, truth, output;
    int nir_band = -1;
    int glcm_levels = 32;
};

int run_features(const FeatureArgs& a) {
    qks_raster* raster = nullptr;
    qks_status s = qks_raster_load(a.input.c_str(), &raster);
    if (s != QKS_OK) return finish(s);
    qks_labels* labels = nullptr;
    s = qks_labels_load(a.labels.c_str(), &labels);
    if (s == QKS_OK) {
        s = qks_features(raster, labels, a.truth.empty() ? nullptr : a.truth.c_str(), a.nir_band,
                         a.glcm_levels, a.output.c_str());
        if (s == QKS_OK)
            std::printf("features: %d regions -> %s\n", qks_labels_region_count(labels),
                        a.output.c_str());
    }
    qks_labels_free(labels);
    qks_raster_free(raster);
    return finish(s);
}

struct EvalArgs {
    std::string features, model = "sdae", grid, report;
    int k = 5;
    std::uint64_t seed = 0;
    qks_train_config train;
};

int run_eval(const EvalArgs& a) {
    const qks_status s = qks_eval(a.features.c_str(), a.model.c_str(), a.grid.c_str(), a.k,
                                  a.seed, &a.train, a.report.c_str());
    if (s == QKS_OK) std::printf("eval: report -> %s\n", a.report.c_str());
    return finish(s);
}

struct SynthArgs {
    std::string spec, out_raster, out_truth, out_classes;
};

int run_synth(const SynthArgs& a) {
    const qks_status s = qks_synth(a.spec.c_str(), a.out_raster.c_str(), a.out_truth.c_str(),
                                   a.out_classes.c_str());
    if (s == QKS_OK)
        std::printf("synth: %s, %s, %s\n", a.out_raster.c_str(), a.out_truth.c_str(),
                    a.out_classes.c_str());
    return finish(s);
}

struct RunArgs {
    std::string config;
    std::uint64_t seed = 0;
    bool has_seed = false;
};

int run_pipeline_cmd(const RunArgs& a) {
    qks_run_summary summary{};
    const qks_status s =
        qks_run(a.config.c_str(), a.has_seed ? &a.seed : nullptr, &summary);
    if (s == QKS_OK) {
        std::printf("run: %d initial regions, %d after merging\n", summary.initial_regions,
                    summary.merged_regions);
        if (summary.evaluated)
            std::printf("run: final CV accuracy %.4f, positive-class F1 %.4f\n",
                        summary.final_accuracy, summary.final_f1);
    }
    return finish(s);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"quakeseg: superpixel building-damage mapping"};
    app.set_version_flag("--version", std::string("quakeseg ") + qks_version());
    app.require_subcommand(1);

    SegmentArgs seg;
    CLI::App* c_seg = app.add_subcommand("segment", "Fast-scan initial segmentation");
    c_seg->add_option("--input", seg.input, "Input raster (.qras)")->required();
    c_seg->add_option("--threshold", seg.threshold, "Spectral angle threshold in radians");
    c_seg->add_option("--min-size", seg.min_size, "Minimum region size in pixels");
    c_seg->add_option("--output", seg.output, "Output label map (.pgm)")->required();

    MergeArgs mrg;
    CLI::App* c_mrg = app.add_subcommand("merge", "Region merging on the adjacency graph");
    c_mrg->add_option("--input", mrg.input, "Input raster (.qras)")->required();
    c_mrg->add_option("--labels", mrg.labels, "Initial label map (.pgm)")->required();
    c_mrg->add_option("--scale", mrg.scale, "Merge stops when the cheapest cost exceeds this");
    c_mrg->add_option("--wspec", mrg.w_spec, "Spectral weight");
    c_mrg->add_option("--wtex", mrg.w_tex, "Texture weight");
    c_mrg->add_option("--wshape", mrg.w_shape, "Shape weight");
    c_mrg->add_option("--output", mrg.output, "Output label map (.pgm)")->required();

    FeatureArgs fea;
    CLI::App* c_fea = app.add_subcommand("features", "Per-region feature table");
    c_fea->add_option("--input", fea.input, "Input raster (.qras)")->required();
    c_fea->add_option("--labels", fea.labels, "Label map (.pgm)")->required();
    c_fea->add_option("--truth", fea.truth, "Region class CSV; adds a class column");
    c_fea->add_option("--nir-band", fea.nir_band, "NIR band index (-1: last band)");
    c_fea->add_option("--glcm-levels", fea.glcm_levels, "GLCM quantization levels");
    c_fea->add_option("--output", fea.output, "Output CSV")->required();

    EvalArgs evl;
    qks_train_config_init(&evl.train);
    CLI::App* c_evl = app.add_subcommand("eval", "Grid search + cross-validated metrics");
    c_evl->add_option("--features", evl.features, "Labeled feature CSV")->required();
    c_evl->add_option("--model", evl.model, "sdae, mlp, or elm");
    c_evl->add_option("--grid", evl.grid, "Grid file: name = v1, v2, ... per line")->required();
    c_evl->add_option("--k", evl.k, "Cross-validation folds");
    c_evl->add_option("--seed", evl.seed, "Random seed");
    c_evl->add_option("--report", evl.report, "Output report CSV")->required();
    c_evl->add_option("--pretrain-epochs", evl.train.pretrain_epochs, "Layer-wise pretraining epochs");
    c_evl->add_option("--finetune-epochs", evl.train.finetune_epochs, "Supervised epochs");
    c_evl->add_option("--batch-size", evl.train.batch_size, "Mini-batch size");
    c_evl->add_option("--learning-rate", evl.train.learning_rate, "SGD learning rate");
    c_evl->add_option("--corruption", evl.train.corruption, "Denoising corruption fraction");
    c_evl->add_option("--depth", evl.train.sdae_depth, "Hidden layers in the stacked model");
    c_evl->add_option("--ridge", evl.train.elm_ridge, "ELM ridge term");
    c_evl->add_option("--positive-class", evl.train.positive_class, "Class reported as P/R/F1");

    SynthArgs syn;
    CLI::App* c_syn = app.add_subcommand("synth", "Synthetic scene with ground truth");
    c_syn->add_option("--spec", syn.spec, "Scene spec file")->required();
    c_syn->add_option("--out-raster", syn.out_raster, "Output raster (.qras)")->required();
    c_syn->add_option("--out-truth", syn.out_truth, "Output truth label map (.pgm)")->required();
    c_syn->add_option("--out-classes", syn.out_classes, "Output region class CSV")->required();

    RunArgs run;
    CLI::App* c_run = app.add_subcommand("run", "Full pipeline from a config file");
    c_run->add_option("--config", run.config, "Pipeline config file")->required();
    CLI::Option* seed_opt = c_run->add_option("--seed", run.seed, "Overrides the config seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (*c_seg) return run_segment(seg);
    if (*c_mrg) return run_merge(mrg);
    if (*c_fea) return run_features(fea);
    if (*c_evl) return run_eval(evl);
    if (*c_syn) return run_synth(syn);
    if (*c_run) {
        run.has_seed = seed_opt->count() > 0;
        return run_pipeline_cmd(run);
    }
    return 2;
}
