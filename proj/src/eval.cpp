#include "eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "errors.hpp"
#include "rng.hpp"

namespace quakeseg {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const noexcept {
        if (f)
            std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

// Seed stream tied to the cell's values, not its position in the grid.
std::uint64_t cell_stream(const Cell& cell) {
    std::string key;
    char buf[64];
    for (const auto& [name, value] : cell) {
        std::snprintf(buf, sizeof buf, "%.17g", value);
        key += name;
        key += '=';
        key += buf;
        key += ';';
    }
    return fnv1a(key);
}

Eigen::MatrixXd normalized_rows(const FeatureMatrix& m, const std::vector<std::size_t>& idx,
                                const NormBounds& bounds) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()),
                        static_cast<Eigen::Index>(m.feature_count()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const std::vector<double> row = apply_bounds(m.rows[idx[i]], bounds);
        for (std::size_t k = 0; k < row.size(); ++k)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[k];
    }
    return out;
}

} // namespace

long long ConfusionMatrix::total() const {
    long long t = 0;
    for (const auto& row : counts)
        for (long long v : row)
            t += v;
    return t;
}

void ConfusionMatrix::add(const ConfusionMatrix& other) {
    if (other.size() != size())
        throw ArgumentError("ConfusionMatrix::add: size mismatch");
    for (std::size_t i = 0; i < counts.size(); ++i)
        for (std::size_t j = 0; j < counts.size(); ++j)
            counts[i][j] += other.counts[i][j];
}

ConfusionMatrix confusion(const std::vector<int>& pred, const std::vector<int>& truth,
                          int n_classes) {
    if (pred.size() != truth.size())
        throw ArgumentError("confusion: prediction/truth lengths differ");
    if (n_classes < 1)
        throw ArgumentError("confusion: need at least one class");
    ConfusionMatrix cm(n_classes);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const int t = truth[i];
        const int p = pred[i];
        if (t < 0 || t >= n_classes || p < 0 || p >= n_classes)
            throw ArgumentError("confusion: label out of range");
        cm.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)] += 1;
    }
    return cm;
}

MetricReport metrics(const ConfusionMatrix& cm, int positive_class) {
    const int k = cm.size();
    if (k < 1)
        throw ArgumentError("metrics: empty confusion matrix");
    if (positive_class < 0 || positive_class >= k)
        throw ArgumentError("metrics: positive class out of range");

    const double total = static_cast<double>(cm.total());
    MetricReport r;
    r.confusion = cm;

    std::vector<double> row_sum(static_cast<std::size_t>(k), 0.0);
    std::vector<double> col_sum(static_cast<std::size_t>(k), 0.0);
    double diag = 0.0;
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            const double v = static_cast<double>(cm.counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
            row_sum[static_cast<std::size_t>(i)] += v;
            col_sum[static_cast<std::size_t>(j)] += v;
            if (i == j)
                diag += v;
        }

    r.per_class.resize(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
        const double tp = static_cast<double>(cm.counts[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)]);
        const double pred_c = col_sum[static_cast<std::size_t>(c)];
        const double truth_c = row_sum[static_cast<std::size_t>(c)];
        ClassMetrics& m = r.per_class[static_cast<std::size_t>(c)];
        m.precision = pred_c > 0.0 ? tp / pred_c : 0.0;
        m.recall = truth_c > 0.0 ? tp / truth_c : 0.0;
        m.f1 = (m.precision + m.recall) > 0.0
                   ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                   : 0.0;
    }
    r.precision = r.per_class[static_cast<std::size_t>(positive_class)].precision;
    r.recall = r.per_class[static_cast<std::size_t>(positive_class)].recall;
    r.f1 = r.per_class[static_cast<std::size_t>(positive_class)].f1;

    if (total > 0.0) {
        r.accuracy = diag / total;
        double pe = 0.0;
        for (int c = 0; c < k; ++c)
            pe += row_sum[static_cast<std::size_t>(c)] * col_sum[static_cast<std::size_t>(c)];
        pe /= total * total;
        r.kappa = pe == 1.0 ? 1.0 : (r.accuracy - pe) / (1.0 - pe);
    }
    return r;
}

std::vector<std::vector<std::size_t>> stratified_kfold(const std::vector<int>& labels, int k,
                                                       std::uint64_t seed) {
    if (k < 2)
        throw ArgumentError("stratified_kfold: k must be >= 2");
    if (labels.empty())
        throw ArgumentError("stratified_kfold: no samples");

    int n_classes = 0;
    for (int v : labels) {
        if (v < 0)
            throw ArgumentError("stratified_kfold: negative class label");
        n_classes = std::max(n_classes, v + 1);
    }

    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(n_classes));
    for (std::size_t i = 0; i < labels.size(); ++i)
        by_class[static_cast<std::size_t>(labels[i])].push_back(i);
    for (int c = 0; c < n_classes; ++c)
        if (!by_class[static_cast<std::size_t>(c)].empty() &&
            by_class[static_cast<std::size_t>(c)].size() < static_cast<std::size_t>(k))
            throw DataError("stratified_kfold: class " + std::to_string(c) + " has only " +
                            std::to_string(by_class[static_cast<std::size_t>(c)].size()) +
                            " members, need " + std::to_string(k));

    Rng rng(seed);
    std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
    for (auto& members : by_class) {
        rng.shuffle(members);
        for (std::size_t i = 0; i < members.size(); ++i)
            folds[i % static_cast<std::size_t>(k)].push_back(members[i]);
    }
    for (auto& fold : folds)
        std::sort(fold.begin(), fold.end());
    return folds;
}

MetricReport cross_validate(const Trainer& trainer, const FeatureMatrix& features, int k,
                            std::uint64_t seed, int positive_class) {
    if (!features.labeled())
        throw ArgumentError("cross_validate: features carry no class labels");
    if (features.labels.size() != features.rows.size())
        throw ArgumentError("cross_validate: label/row count mismatch");

    int n_classes = 0;
    for (int v : features.labels)
        n_classes = std::max(n_classes, v + 1);

    const auto folds = stratified_kfold(features.labels, k, seed);
    ConfusionMatrix pooled(n_classes);
    std::vector<double> fold_acc;
    fold_acc.reserve(folds.size());

    for (std::size_t f = 0; f < folds.size(); ++f) {
        std::vector<std::size_t> train_idx;
        for (std::size_t g = 0; g < folds.size(); ++g)
            if (g != f)
                train_idx.insert(train_idx.end(), folds[g].begin(), folds[g].end());
        const std::vector<std::size_t>& test_idx = folds[f];

        const NormBounds bounds = fit_bounds(features, train_idx);
        const Eigen::MatrixXd x_train = normalized_rows(features, train_idx, bounds);
        const Eigen::MatrixXd x_test = normalized_rows(features, test_idx, bounds);
        std::vector<int> y_train, y_test;
        y_train.reserve(train_idx.size());
        y_test.reserve(test_idx.size());
        for (std::size_t i : train_idx)
            y_train.push_back(features.labels[i]);
        for (std::size_t i : test_idx)
            y_test.push_back(features.labels[i]);

        const Predictor predictor = trainer(x_train, y_train, Rng::derive(seed, f));
        const std::vector<int> pred = predictor(x_test);
        const ConfusionMatrix cm = confusion(pred, y_test, n_classes);
        pooled.add(cm);

        long long hits = 0;
        for (std::size_t i = 0; i < pred.size(); ++i)
            hits += pred[i] == y_test[i];
        fold_acc.push_back(static_cast<double>(hits) / static_cast<double>(pred.size()));
    }

    MetricReport r = metrics(pooled, std::min(positive_class, n_classes - 1));
    r.fold_accuracies = fold_acc;
    double mean = 0.0;
    for (double a : fold_acc)
        mean += a;
    r.accuracy = mean / static_cast<double>(fold_acc.size());
    return r;
}

GridResult grid_search(const TrainerFactory& factory, const GridSpec& grid,
                       const FeatureMatrix& features, int k, std::uint64_t seed,
                       int positive_class) {
    if (grid.params.empty())
        throw ArgumentError("grid_search: empty grid");
    for (const auto& [name, values] : grid.params)
        if (values.empty())
            throw ArgumentError("grid_search: parameter '" + name + "' has no candidates");

    GridResult result;
    std::vector<std::size_t> cursor(grid.params.size(), 0);
    bool done = false;
    while (!done) {
        Cell cell;
        cell.reserve(grid.params.size());
        for (std::size_t p = 0; p < grid.params.size(); ++p)
            cell.emplace_back(grid.params[p].first, grid.params[p].second[cursor[p]]);

        GridCell scored;
        scored.params = cell;
        scored.report = cross_validate(factory(cell), features, k,
                                       Rng::derive(seed, cell_stream(cell)), positive_class);
        result.table.push_back(std::move(scored));

        // Advance the Cartesian cursor, last parameter fastest.
        for (std::size_t p = grid.params.size(); p-- > 0;) {
            if (++cursor[p] < grid.params[p].second.size())
                break;
            cursor[p] = 0;
            if (p == 0)
                done = true;
        }
    }

    result.best_index = 0;
    for (std::size_t i = 1; i < result.table.size(); ++i)
        if (result.table[i].report.accuracy > result.table[result.best_index].report.accuracy)
            result.best_index = i;
    return result;
}

ModelKind parse_model_kind(const std::string& name) {
    if (name == "sdae")
        return ModelKind::Sdae;
    if (name == "mlp")
        return ModelKind::Mlp;
    if (name == "elm")
        return ModelKind::Elm;
    throw ConfigError("unknown model '" + name + "' (expected sdae, mlp, or elm)");
}

TrainerFactory model_trainer_factory(ModelKind kind, const TrainConfig& base, int sdae_depth,
                                     double elm_ridge) {
    if (sdae_depth < 1)
        throw ArgumentError("model_trainer_factory: depth must be >= 1");
    return [kind, base, sdae_depth, elm_ridge](const Cell& cell) -> Trainer {
        int width = 0;
        for (const auto& [name, value] : cell)
            if (name == "width")
                width = static_cast<int>(value);
        if (width < 1)
            throw ConfigError("grid cell is missing a positive 'width' parameter");

        return [kind, base, sdae_depth, elm_ridge, width](const Eigen::MatrixXd& x,
                                                          const std::vector<int>& y,
                                                          std::uint64_t seed) -> Predictor {
            TrainConfig cfg = base;
            cfg.seed = seed;
            SdaeModel model;
            switch (kind) {
            case ModelKind::Sdae: {
                const std::vector<int> widths(static_cast<std::size_t>(sdae_depth), width);
                model = train_sdae(x, y, widths, cfg).model;
                break;
            }
            case ModelKind::Mlp:
                model = mlp_train(x, y, width, cfg).model;
                break;
            case ModelKind::Elm:
                model = elm_train(x, y, width, seed, elm_ridge);
                break;
            }
            return [model = std::move(model)](const Eigen::MatrixXd& rows) {
                return predict_labels(model, rows);
            };
        };
    };
}

void save_report_csv(const GridResult& grid, const MetricReport& final_cv,
                     const Cell& final_params, int k, const std::string& path) {
    if (grid.table.empty())
        throw ArgumentError("save_report_csv: empty grid table");
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f)
        throw DataError("cannot open for writing: " + path);

    std::fputs("cell", f.get());
    for (const auto& [name, value] : grid.table.front().params)
        std::fprintf(f.get(), ",%s", name.c_str());
    for (int i = 0; i < k; ++i)
        std::fprintf(f.get(), ",fold_%d", i);
    std::fputs(",accuracy,precision,recall,f1,kappa,selected\n", f.get());

    char buf[64];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        std::fprintf(f.get(), ",%s", buf);
    };
    auto put_row = [&](const std::string& id, const Cell& params, const MetricReport& r,
                       bool selected) {
        std::fprintf(f.get(), "%s", id.c_str());
        for (const auto& [name, value] : params)
            put(value);
        for (int i = 0; i < k; ++i)
            put(i < static_cast<int>(r.fold_accuracies.size())
                    ? r.fold_accuracies[static_cast<std::size_t>(i)]
                    : 0.0);
        put(r.accuracy);
        put(r.precision);
        put(r.recall);
        put(r.f1);
        put(r.kappa);
        std::fprintf(f.get(), ",%d\n", selected ? 1 : 0);
    };

    for (std::size_t i = 0; i < grid.table.size(); ++i)
        put_row(std::to_string(i), grid.table[i].params, grid.table[i].report,
                i == grid.best_index);
    put_row("final", final_params, final_cv, true);

    if (std::ferror(f.get()))
        throw DataError("write failed: " + path);
}

EvalResult evaluate_model(ModelKind kind, const TrainConfig& base, const GridSpec& grid,
                          const FeatureMatrix& features, int k, std::uint64_t seed,
                          int positive_class, int sdae_depth, double elm_ridge) {
    const TrainerFactory factory = model_trainer_factory(kind, base, sdae_depth, elm_ridge);
    EvalResult result;
    result.grid = grid_search(factory, grid, features, k, seed, positive_class);
    result.best_params = result.grid.table[result.grid.best_index].params;
    result.final_cv = cross_validate(factory(result.best_params), features, k,
                                     Rng::derive(seed, kFinalCvStream), positive_class);
    return result;
}

} // namespace quakeseg
