#ifndef QUAKESEG_EVAL_HPP
#define QUAKESEG_EVAL_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "features.hpp"
#include "models.hpp"

namespace quakeseg {

// rows = truth, cols = prediction.
struct ConfusionMatrix {
    explicit ConfusionMatrix(int n_classes = 0)
        : counts(static_cast<std::size_t>(n_classes),
                 std::vector<long long>(static_cast<std::size_t>(n_classes), 0)) {}

    std::vector<std::vector<long long>> counts;

    int size() const noexcept { return static_cast<int>(counts.size()); }
    long long total() const;
    void add(const ConfusionMatrix& other);
};

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct MetricReport {
    double precision = 0.0; // positive class
    double recall = 0.0;
    double f1 = 0.0;
    double kappa = 0.0;
    double accuracy = 0.0; // mean of fold accuracies in CV reports
    std::vector<double> fold_accuracies;
    std::vector<ClassMetrics> per_class;
    ConfusionMatrix confusion;
};

ConfusionMatrix confusion(const std::vector<int>& pred, const std::vector<int>& truth,
                          int n_classes);

// Precision/recall/F1 against `positive_class`, overall accuracy, Cohen's
// kappa from the full matrix. Zero denominators yield 0; kappa is 1 when the
// expected agreement is 1.
MetricReport metrics(const ConfusionMatrix& cm, int positive_class);

// Disjoint covering folds; per-class counts across folds differ by at most 1.
// Throws DataError when a class has fewer than k members.
std::vector<std::vector<std::size_t>> stratified_kfold(const std::vector<int>& labels, int k,
                                                       std::uint64_t seed);

// A trained classifier: normalized feature rows in, labels out.
using Predictor = std::function<std::vector<int>(const Eigen::MatrixXd&)>;
// Fits on normalized rows + labels with the given seed.
using Trainer =
    std::function<Predictor(const Eigen::MatrixXd&, const std::vector<int>&, std::uint64_t)>;

// k-fold protocol: per fold, normalization bounds and the model are fit on
// the k-1 training folds only. accuracy = mean fold accuracy; the other
// metrics come from the confusion matrix pooled over folds.
MetricReport cross_validate(const Trainer& trainer, const FeatureMatrix& features, int k,
                            std::uint64_t seed, int positive_class);

struct GridSpec {
    // name -> candidates, in declaration order (first parameter is the
    // outermost loop of the Cartesian product).
    std::vector<std::pair<std::string, std::vector<double>>> params;
};

using Cell = std::vector<std::pair<std::string, double>>;
using TrainerFactory = std::function<Trainer(const Cell&)>;

struct GridCell {
    Cell params;
    MetricReport report;
};

struct GridResult {
    std::size_t best_index = 0;
    std::vector<GridCell> table;
};

// Exhaustive Cartesian sweep; each cell scored by cross_validate mean
// accuracy under a seed derived from the cell's parameter values (so scores
// do not depend on enumeration order). Ties keep the earlier cell.
GridResult grid_search(const TrainerFactory& factory, const GridSpec& grid,
                       const FeatureMatrix& features, int k, std::uint64_t seed,
                       int positive_class);

enum class ModelKind { Sdae, Mlp, Elm };
ModelKind parse_model_kind(const std::string& name); // "sdae" | "mlp" | "elm"

// Trainers for the three classifier families. Cells carry a "width" entry;
// SDAE uses `sdae_depth` hidden layers of that width.
TrainerFactory model_trainer_factory(ModelKind kind, const TrainConfig& base, int sdae_depth = 5,
                                     double elm_ridge = 1e-6);

// Grid table plus a final CV row, one grid cell per line:
// cell,<params>,fold_i...,accuracy,precision,recall,f1,kappa,selected.
void save_report_csv(const GridResult& grid, const MetricReport& final_cv,
                     const Cell& final_params, int k, const std::string& path);

// Seed stream for the post-grid confirmation CV ("another five-fold").
inline constexpr std::uint64_t kFinalCvStream = 999983;

struct EvalResult {
    GridResult grid;
    MetricReport final_cv;
    Cell best_params;
};

// Full protocol: grid search, then an independent CV at the best cell using
// Rng::derive(seed, kFinalCvStream).
EvalResult evaluate_model(ModelKind kind, const TrainConfig& base, const GridSpec& grid,
                          const FeatureMatrix& features, int k, std::uint64_t seed,
                          int positive_class, int sdae_depth = 5, double elm_ridge = 1e-6);

} // namespace quakeseg

#endif
