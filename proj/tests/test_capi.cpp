#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "quakeseg/quakeseg.h"

TEST_SUITE_BEGIN("capi");

namespace {

// Scratch path cleaned up on destruction. The C API suite sees only the
// public header, so it carries its own helper.
class Scratch {
public:
    explicit Scratch(const std::string& tag) {
        static int counter = 0;
        path_ = (std::filesystem::temp_directory_path() /
                 ("qks_capi_" + tag + "_" + std::to_string(++counter)))
                    .string();
    }
    ~Scratch() { std::remove(path_.c_str()); }
    Scratch(const Scratch&) = delete;
    Scratch& operator=(const Scratch&) = delete;

    const char* c_str() const { return path_.c_str(); }
    const std::string& str() const { return path_; }

private:
    std::string path_;
};

void write_text(const std::string& path, const std::string& text) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    REQUIRE(f != nullptr);
    std::fputs(text.c_str(), f);
    std::fclose(f);
}

const char* kScene = R"(width = 32
height = 32
bands = 2
seed = 9
classes = 2
class_0_means = 100, 20
class_0_noise_std = 1
class_1_means = 30, 90
class_1_texture = speckle
class_1_amplitude = 4
class_1_noise_std = 1
grid_rows = 2
grid_cols = 2
)";

} // namespace

TEST_CASE("version and error channel are always readable") {
    REQUIRE(qks_version() != nullptr);
    CHECK(std::strcmp(qks_version(), "1.0.0") == 0);
    CHECK(qks_last_error() != nullptr); // empty string before any failure is fine
}

TEST_CASE("rasters round-trip through handles and files") {
    std::vector<float> values(4 * 2 * 2);
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<float>(i) * 0.5f;

    qks_raster* raster = nullptr;
    REQUIRE(qks_raster_create(4, 2, 2, values.data(), &raster) == QKS_OK);
    REQUIRE(raster != nullptr);
    CHECK(qks_raster_width(raster) == 4);
    CHECK(qks_raster_height(raster) == 2);
    CHECK(qks_raster_bands(raster) == 2);
    const float* stored = qks_raster_values(raster);
    REQUIRE(stored != nullptr);
    for (std::size_t i = 0; i < values.size(); ++i) CHECK(stored[i] == values[i]);

    Scratch file("raster");
    REQUIRE(qks_raster_save(raster, file.c_str()) == QKS_OK);
    qks_raster* loaded = nullptr;
    REQUIRE(qks_raster_load(file.c_str(), &loaded) == QKS_OK);
    CHECK(qks_raster_width(loaded) == 4);
    const float* back = qks_raster_values(loaded);
    for (std::size_t i = 0; i < values.size(); ++i) CHECK(back[i] == values[i]);

    qks_raster_free(loaded);
    qks_raster_free(raster);
    qks_raster_free(nullptr); // no-op
}

TEST_CASE("raster calls reject bad arguments with messages") {
    qks_raster* out = nullptr;
    CHECK(qks_raster_create(4, 2, 1, nullptr, &out) == QKS_ARGUMENT_ERROR);
    CHECK(qks_last_error()[0] != '\0');
    float v = 1.0f;
    CHECK(qks_raster_create(0, 2, 1, &v, &out) == QKS_ARGUMENT_ERROR);
    CHECK(qks_raster_create(1, 1, 1, &v, nullptr) == QKS_ARGUMENT_ERROR);
    CHECK(qks_raster_load("/nonexistent/file.qras", &out) == QKS_DATA_ERROR);
    CHECK(qks_last_error()[0] != '\0');
    CHECK(out == nullptr); // out-parameters stay untouched on failure
    CHECK(qks_raster_width(nullptr) == 0);
    CHECK(qks_raster_values(nullptr) == nullptr);
}

TEST_CASE("label maps validate on entry and round-trip through pgm") {
    const int32_t good[] = {0, 1, 0, 1};
    qks_labels* labels = nullptr;
    REQUIRE(qks_labels_create(2, 2, good, &labels) == QKS_OK);
    CHECK(qks_labels_width(labels) == 2);
    CHECK(qks_labels_height(labels) == 2);
    CHECK(qks_labels_region_count(labels) == 2);
    const int32_t* stored = qks_labels_values(labels);
    REQUIRE(stored != nullptr);
    for (int i = 0; i < 4; ++i) CHECK(stored[i] == good[i]);

    Scratch file("labels");
    REQUIRE(qks_labels_save(labels, file.c_str()) == QKS_OK);
    qks_labels* loaded = nullptr;
    REQUIRE(qks_labels_load(file.c_str(), &loaded) == QKS_OK);
    CHECK(qks_labels_region_count(loaded) == 2);
    const int32_t* back = qks_labels_values(loaded);
    for (int i = 0; i < 4; ++i) CHECK(back[i] == good[i]);
    qks_labels_free(loaded);
    qks_labels_free(labels);
    qks_labels_free(nullptr);

    const int32_t gappy[] = {0, 2, 0, 2}; // label 1 missing
    qks_labels* bad = nullptr;
    CHECK(qks_labels_create(2, 2, gappy, &bad) == QKS_DATA_ERROR);
    CHECK(bad == nullptr);
    const int32_t split[] = {0, 1, 1, 0}; // label 0 in two diagonal pieces
    CHECK(qks_labels_create(2, 2, split, &bad) == QKS_DATA_ERROR);
    CHECK(qks_labels_create(2, 2, nullptr, &bad) == QKS_ARGUMENT_ERROR);
    CHECK(qks_labels_load("/nonexistent/file.pgm", &bad) == QKS_DATA_ERROR);
}

TEST_CASE("the segmentation chain runs end to end over the c api") {
    Scratch spec("scene_cfg");
    write_text(spec.str(), kScene);
    Scratch raster_path("scene_qras");
    Scratch truth_path("truth_pgm");
    Scratch classes_path("classes_csv");
    REQUIRE(qks_synth(spec.c_str(), raster_path.c_str(), truth_path.c_str(),
                      classes_path.c_str()) == QKS_OK);

    qks_raster* raster = nullptr;
    REQUIRE(qks_raster_load(raster_path.c_str(), &raster) == QKS_OK);
    CHECK(qks_raster_width(raster) == 32);
    CHECK(qks_raster_bands(raster) == 2);

    qks_labels* initial = nullptr;
    REQUIRE(qks_segment(raster, 0.1, 8, &initial) == QKS_OK);
    const int fine = qks_labels_region_count(initial);
    CHECK(fine >= 2);

    qks_labels* merged = nullptr;
    REQUIRE(qks_merge(raster, initial, 0.05, 0.7, 0.2, 0.1, &merged) == QKS_OK);
    CHECK(qks_labels_region_count(merged) <= fine);
    CHECK(qks_labels_region_count(merged) >= 2);

    // weights must sum to one
    qks_labels* rejected = nullptr;
    CHECK(qks_merge(raster, initial, 0.05, 0.5, 0.2, 0.1, &rejected) == QKS_CONFIG_ERROR);
    CHECK(rejected == nullptr);

    Scratch features_path("features_csv");
    REQUIRE(qks_features(raster, merged, nullptr, -1, 0, features_path.c_str()) == QKS_OK);
    std::ifstream check_unlabeled(features_path.str());
    std::string header;
    std::getline(check_unlabeled, header);
    CHECK(header.rfind("mean_0,", 0) == 0);
    CHECK(header.find("class") == std::string::npos);
    check_unlabeled.close();

    CHECK(qks_features(raster, merged, nullptr, 7, 0, features_path.c_str()) ==
          QKS_ARGUMENT_ERROR); // nir band out of range
    CHECK(qks_features(nullptr, merged, nullptr, -1, 0, features_path.c_str()) ==
          QKS_ARGUMENT_ERROR);

    qks_labels_free(merged);
    qks_labels_free(initial);
    qks_raster_free(raster);
}

TEST_CASE("labeled features feed the evaluation protocol") {
    Scratch spec("scene_cfg");
    write_text(spec.str(), kScene);
    Scratch raster_path("scene_qras");
    Scratch truth_path("truth_pgm");
    Scratch classes_path("classes_csv");
    REQUIRE(qks_synth(spec.c_str(), raster_path.c_str(), truth_path.c_str(),
                      classes_path.c_str()) == QKS_OK);

    qks_raster* raster = nullptr;
    REQUIRE(qks_raster_load(raster_path.c_str(), &raster) == QKS_OK);
    qks_labels* truth = nullptr;
    REQUIRE(qks_labels_load(truth_path.c_str(), &truth) == QKS_OK);
    CHECK(qks_labels_region_count(truth) == 4);

    // ground-truth regions with the ground-truth class table
    Scratch features_path("features_csv");
    REQUIRE(qks_features(raster, truth, classes_path.c_str(), -1, 0, features_path.c_str()) ==
            QKS_OK);

    Scratch grid_path("grid_cfg");
    write_text(grid_path.str(), "width = 4\n");
    Scratch report_path("report_csv");
    qks_train_config train;
    qks_train_config_init(&train);
    CHECK(train.pretrain_epochs == 50);
    CHECK(train.finetune_epochs == 200);
    CHECK(train.batch_size == 32);
    CHECK(train.learning_rate == 0.001);
    CHECK(train.corruption == 0.3);
    CHECK(train.sdae_depth == 5);
    CHECK(train.elm_ridge == 1e-6);
    CHECK(train.positive_class == 1);
    train.elm_ridge = 0.01;

    REQUIRE(qks_eval(features_path.c_str(), "elm", grid_path.c_str(), 2, 3, &train,
                     report_path.c_str()) == QKS_OK);
    std::ifstream report(report_path.str());
    std::string header;
    std::getline(report, header);
    CHECK(header == "cell,width,fold_0,fold_1,accuracy,precision,recall,f1,kappa,selected");

    CHECK(qks_eval(features_path.c_str(), "forest", grid_path.c_str(), 2, 3, nullptr,
                   report_path.c_str()) == QKS_CONFIG_ERROR);
    CHECK(qks_eval(nullptr, "elm", grid_path.c_str(), 2, 3, nullptr, report_path.c_str()) ==
          QKS_ARGUMENT_ERROR);
    CHECK(qks_eval("/nonexistent/features.csv", "elm", grid_path.c_str(), 2, 3, nullptr,
                   report_path.c_str()) == QKS_DATA_ERROR);

    qks_labels_free(truth);
    qks_raster_free(raster);
}

TEST_CASE("the full pipeline runs from a config file with a summary") {
    Scratch spec("scene_cfg");
    write_text(spec.str(), kScene);
    const std::string out_dir =
        (std::filesystem::temp_directory_path() / "qks_capi_run_out").string();
    std::filesystem::remove_all(out_dir);
    Scratch cfg("pipe_cfg");
    write_text(cfg.str(), "synth_spec = " + spec.str() + "\nout_dir = " + out_dir +
                              "\nthreshold = 0.1\nmin_size = 8\nscale = 0.05\nmodel = elm\n"
                              "widths = 8\nelm_ridge = 0.01\nk = 2\nseed = 5\n");

    qks_run_summary summary;
    std::memset(&summary, 0xAA, sizeof summary);
    REQUIRE(qks_run(cfg.c_str(), nullptr, &summary) == QKS_OK);
    CHECK(summary.evaluated == 1);
    CHECK(summary.initial_regions >= summary.merged_regions);
    CHECK(summary.merged_regions >= 2);
    CHECK(summary.final_accuracy >= 0.0);
    CHECK(summary.final_accuracy <= 1.0);
    CHECK(summary.final_f1 >= 0.0);
    CHECK(summary.final_f1 <= 1.0);

    // a seed override reruns the same scene deterministically
    const uint64_t seed = 5;
    qks_run_summary again;
    REQUIRE(qks_run(cfg.c_str(), &seed, &again) == QKS_OK);
    CHECK(again.final_accuracy == summary.final_accuracy);
    CHECK(again.final_f1 == summary.final_f1);

    CHECK(qks_run(nullptr, nullptr, nullptr) == QKS_ARGUMENT_ERROR);
    CHECK(qks_run("/nonexistent/pipeline.cfg", nullptr, nullptr) == QKS_CONFIG_ERROR);
    CHECK(qks_last_error()[0] != '\0');
    std::filesystem::remove_all(out_dir);
}

TEST_SUITE_END();
