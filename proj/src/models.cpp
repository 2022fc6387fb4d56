#include "models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <sstream>

#include "errors.hpp"

namespace quakeseg {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct FileCloser {
    void operator()(std::FILE* f) const noexcept {
        if (f)
            std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

double glorot_bound(int fan_in, int fan_out) {
    return std::sqrt(6.0 / (fan_in + fan_out));
}

// Row-major fill so the draw order is independent of Eigen's storage layout.
MatrixXd draw_matrix(int rows, int cols, double bound, Rng& rng) {
    MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            m(i, j) = rng.uniform(-bound, bound);
    return m;
}

MatrixXd sigmoid(const MatrixXd& t) {
    return (1.0 / (1.0 + (-t.array()).exp())).matrix();
}

MatrixXd tanh_m(const MatrixXd& t) {
    return t.array().tanh().matrix();
}

// Columns are samples throughout the training internals.
MatrixXd affine(const MatrixXd& w, const VectorXd& b, const MatrixXd& a) {
    return (w * a).colwise() + b;
}

int class_count(const std::vector<int>& y) {
    if (y.empty())
        throw ArgumentError("labeled rows required");
    int c = 0;
    for (int v : y) {
        if (v < 0)
            throw ArgumentError("class labels must be non-negative");
        c = std::max(c, v + 1);
    }
    return c;
}

void check_xy(const MatrixXd& x, const std::vector<int>& y) {
    if (static_cast<std::size_t>(x.rows()) != y.size())
        throw ArgumentError("row/label count mismatch");
}

// Mean reconstruction cross-entropy of the layer on uncorrupted inputs.
double reconstruction_loss(const DaeLayer& layer, const MatrixXd& xcols) {
    const MatrixXd y = tanh_m(affine(layer.W, layer.b, xcols));
    const MatrixXd z = sigmoid(affine(layer.Wd, layer.bd, y));
    const auto xa = xcols.array();
    const auto za = z.array();
    const double total = -(xa * za.log() + (1.0 - xa) * (1.0 - za).log()).sum();
    return total / static_cast<double>(xcols.cols());
}

MatrixXd softmax_cols(const MatrixXd& logits) {
    MatrixXd p = (logits.rowwise() - logits.colwise().maxCoeff()).array().exp().matrix();
    const Eigen::RowVectorXd sums = p.colwise().sum();
    return p.array().rowwise() / sums.array();
}

// Hidden activations a_L for column-sample input.
MatrixXd encode_cols(const SdaeModel& model, const MatrixXd& xcols) {
    MatrixXd a = xcols;
    for (const DaeLayer& layer : model.layers)
        a = ((tanh_m(affine(layer.W, layer.b, a)).array() + 1.0) / 2.0).matrix();
    return a;
}

double supervised_loss(const SdaeModel& model, const MatrixXd& xcols, const std::vector<int>& y) {
    const MatrixXd p = softmax_cols(affine(model.top_W, model.top_b, encode_cols(model, xcols)));
    double total = 0.0;
    for (Eigen::Index i = 0; i < p.cols(); ++i)
        total -= std::log(p(y[static_cast<std::size_t>(i)], i));
    return total / static_cast<double>(p.cols());
}

MatrixXd gather_cols(const MatrixXd& x_rows, const std::vector<std::size_t>& idx, std::size_t begin,
                     std::size_t end) {
    MatrixXd out(x_rows.cols(), static_cast<Eigen::Index>(end - begin));
    for (std::size_t t = begin; t < end; ++t)
        out.col(static_cast<Eigen::Index>(t - begin)) = x_rows.row(static_cast<Eigen::Index>(idx[t])).transpose();
    return out;
}

} // namespace

void TrainConfig::validate() const {
    if (pretrain_epochs < 0 || finetune_epochs < 0)
        throw ConfigError("epoch counts must be >= 0");
    if (batch_size < 1)
        throw ConfigError("batch_size must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw ConfigError("learning_rate must be positive");
    if (!(corruption >= 0.0 && corruption < 1.0))
        throw ConfigError("corruption rate must lie in [0,1)");
}

int SdaeModel::input_width() const {
    if (!layers.empty())
        return layers.front().in_width();
    return static_cast<int>(top_W.cols());
}

Eigen::VectorXd corrupt(const Eigen::VectorXd& x, double gamma, Rng& rng) {
    if (!(gamma >= 0.0 && gamma < 1.0))
        throw ArgumentError("corrupt: rate must lie in [0,1)");
    const std::size_t n = static_cast<std::size_t>(x.size());
    const std::size_t m = static_cast<std::size_t>(std::floor(gamma * static_cast<double>(n)));
    VectorXd out = x;
    if (m == 0)
        return out;
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i)
        idx[i] = i;
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.uniform_int(n - i));
        std::swap(idx[i], idx[j]);
        out[static_cast<Eigen::Index>(idx[i])] = 0.0;
    }
    return out;
}

double dae_loss(const Eigen::VectorXd& x, const Eigen::VectorXd& z) {
    if (x.size() != z.size())
        throw ArgumentError("dae_loss: size mismatch");
    double total = 0.0;
    for (Eigen::Index k = 0; k < x.size(); ++k)
        total -= x[k] * std::log(z[k]) + (1.0 - x[k]) * std::log(1.0 - z[k]);
    return total;
}

std::vector<double> dae_train(DaeLayer& layer, const Eigen::MatrixXd& X, const TrainConfig& cfg,
                              Rng& rng) {
    cfg.validate();
    if (X.rows() < 1)
        throw ArgumentError("dae_train: no training rows");
    if (static_cast<int>(X.cols()) != layer.in_width())
        throw ArgumentError("dae_train: data width does not match layer input");

    const std::size_t n = static_cast<std::size_t>(X.rows());
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i)
        idx[i] = i;

    std::vector<double> trace;
    trace.reserve(static_cast<std::size_t>(cfg.pretrain_epochs));
    for (int epoch = 1; epoch <= cfg.pretrain_epochs; ++epoch) {
        rng.shuffle(idx);
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
            const Eigen::Index m = static_cast<Eigen::Index>(end - start);
            MatrixXd xb = gather_cols(X, idx, start, end);
            MatrixXd xc(xb.rows(), m);
            for (Eigen::Index t = 0; t < m; ++t)
                xc.col(t) = corrupt(xb.col(t), cfg.corruption, rng);

            const MatrixXd y = tanh_m(affine(layer.W, layer.b, xc));
            const MatrixXd z = sigmoid(affine(layer.Wd, layer.bd, y));
            const MatrixXd dz = (z - xb) / static_cast<double>(m);
            const MatrixXd dy =
                ((layer.Wd.transpose() * dz).array() * (1.0 - y.array().square())).matrix();

            layer.Wd -= cfg.learning_rate * (dz * y.transpose());
            layer.bd -= cfg.learning_rate * dz.rowwise().sum();
            layer.W -= cfg.learning_rate * (dy * xc.transpose());
            layer.b -= cfg.learning_rate * dy.rowwise().sum();
        }
        const double loss = reconstruction_loss(layer, X.transpose());
        if (!std::isfinite(loss))
            throw NumericError("dae_train: loss diverged at epoch " + std::to_string(epoch));
        trace.push_back(loss);
    }
    return trace;
}

SdaeModel sdae_init(int input_width, std::span<const int> hidden_widths, int n_classes, Rng& rng) {
    if (input_width < 1)
        throw ArgumentError("sdae_init: input width must be >= 1");
    if (n_classes < 1)
        throw ArgumentError("sdae_init: class count must be >= 1");
    for (int w : hidden_widths)
        if (w < 1)
            throw ArgumentError("sdae_init: hidden widths must be >= 1");

    SdaeModel model;
    int in = input_width;
    for (int w : hidden_widths) {
        DaeLayer layer;
        const double bound = glorot_bound(in, w);
        layer.W = draw_matrix(w, in, bound, rng);
        layer.b = VectorXd::Zero(w);
        layer.Wd = draw_matrix(in, w, bound, rng);
        layer.bd = VectorXd::Zero(in);
        model.layers.push_back(std::move(layer));
        in = w;
    }
    model.top_W = draw_matrix(n_classes, in, glorot_bound(in, n_classes), rng);
    model.top_b = VectorXd::Zero(n_classes);
    return model;
}

std::vector<std::vector<double>> pretrain_stack(SdaeModel& model, const Eigen::MatrixXd& X,
                                                const TrainConfig& cfg, Rng& rng) {
    cfg.validate();
    if (model.layers.empty())
        throw ArgumentError("pretrain_stack: model has no hidden layers");
    if (static_cast<int>(X.cols()) != model.input_width())
        throw ArgumentError("pretrain_stack: data width does not match model input");

    std::vector<std::vector<double>> traces;
    if (cfg.pretrain_epochs == 0) {
        traces.resize(model.layers.size());
        return traces;
    }

    MatrixXd data = X;
    for (std::size_t k = 0; k < model.layers.size(); ++k) {
        traces.push_back(dae_train(model.layers[k], data, cfg, rng));
        if (k + 1 < model.layers.size()) {
            const DaeLayer& layer = model.layers[k];
            data = ((tanh_m(affine(layer.W, layer.b, data.transpose())).array() + 1.0) / 2.0)
                       .matrix()
                       .transpose();
        }
    }
    return traces;
}

std::vector<double> fine_tune(SdaeModel& model, const Eigen::MatrixXd& X, const std::vector<int>& y,
                              const TrainConfig& cfg, Rng& rng) {
    cfg.validate();
    check_xy(X, y);
    if (X.rows() < 1)
        throw ArgumentError("fine_tune: no training rows");
    if (static_cast<int>(X.cols()) != model.input_width())
        throw ArgumentError("fine_tune: data width does not match model input");
    for (int v : y)
        if (v < 0 || v >= model.n_classes())
            throw ArgumentError("fine_tune: class label out of range");

    const std::size_t n = static_cast<std::size_t>(X.rows());
    const std::size_t n_layers = model.layers.size();
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i)
        idx[i] = i;

    std::vector<double> trace;
    trace.reserve(static_cast<std::size_t>(cfg.finetune_epochs));
    for (int epoch = 1; epoch <= cfg.finetune_epochs; ++epoch) {
        rng.shuffle(idx);
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
            const Eigen::Index m = static_cast<Eigen::Index>(end - start);

            // Forward with caches: a[0] = input, y[k] = tanh output of layer k.
            std::vector<MatrixXd> a(n_layers + 1);
            std::vector<MatrixXd> yk(n_layers);
            a[0] = gather_cols(X, idx, start, end);
            for (std::size_t k = 0; k < n_layers; ++k) {
                yk[k] = tanh_m(affine(model.layers[k].W, model.layers[k].b, a[k]));
                a[k + 1] = ((yk[k].array() + 1.0) / 2.0).matrix();
            }
            const MatrixXd probs = softmax_cols(affine(model.top_W, model.top_b, a[n_layers]));

            MatrixXd dlogits = probs;
            for (Eigen::Index t = 0; t < m; ++t)
                dlogits(y[idx[start + static_cast<std::size_t>(t)]], t) -= 1.0;
            dlogits /= static_cast<double>(m);

            MatrixXd da = model.top_W.transpose() * dlogits;
            model.top_W -= cfg.learning_rate * (dlogits * a[n_layers].transpose());
            model.top_b -= cfg.learning_rate * dlogits.rowwise().sum();
            for (std::size_t k = n_layers; k-- > 0;) {
                const MatrixXd dypre =
                    ((da.array() * 0.5) * (1.0 - yk[k].array().square())).matrix();
                da = model.layers[k].W.transpose() * dypre;
                model.layers[k].W -= cfg.learning_rate * (dypre * a[k].transpose());
                model.layers[k].b -= cfg.learning_rate * dypre.rowwise().sum();
            }
        }
        const double loss = supervised_loss(model, X.transpose(), y);
        if (!std::isfinite(loss))
            throw NumericError("fine_tune: loss diverged at epoch " + std::to_string(epoch));
        trace.push_back(loss);
    }
    return trace;
}

Eigen::MatrixXd predict_proba(const SdaeModel& model, const Eigen::MatrixXd& X) {
    if (static_cast<int>(X.cols()) != model.input_width())
        throw ArgumentError("predict: feature width does not match model input");
    const MatrixXd probs =
        softmax_cols(affine(model.top_W, model.top_b, encode_cols(model, X.transpose())));
    return probs.transpose();
}

std::vector<int> predict_labels(const SdaeModel& model, const Eigen::MatrixXd& X) {
    const MatrixXd p = predict_proba(model, X);
    std::vector<int> labels(static_cast<std::size_t>(p.rows()));
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        int best = 0;
        for (Eigen::Index c = 1; c < p.cols(); ++c)
            if (p(i, c) > p(i, best))
                best = static_cast<int>(c);
        labels[static_cast<std::size_t>(i)] = best;
    }
    return labels;
}

TrainResult train_sdae(const Eigen::MatrixXd& X, const std::vector<int>& y,
                       std::span<const int> hidden_widths, const TrainConfig& cfg) {
    cfg.validate();
    check_xy(X, y);
    const int n_classes = class_count(y);

    Rng rng(cfg.seed);
    TrainResult result;
    result.model = sdae_init(static_cast<int>(X.cols()), hidden_widths, n_classes, rng);
    result.model.corruption = cfg.corruption;
    result.model.learning_rate = cfg.learning_rate;
    result.model.seed = cfg.seed;
    result.pretrain_traces = pretrain_stack(result.model, X, cfg, rng);
    result.finetune_trace = fine_tune(result.model, X, y, cfg, rng);
    return result;
}

TrainResult mlp_train(const Eigen::MatrixXd& X, const std::vector<int>& y, int hidden_width,
                      const TrainConfig& cfg) {
    TrainConfig mlp_cfg = cfg;
    mlp_cfg.pretrain_epochs = 0;
    const int widths[1] = {hidden_width};
    return train_sdae(X, y, widths, mlp_cfg);
}

SdaeModel elm_train(const Eigen::MatrixXd& X, const std::vector<int>& y, int hidden_width,
                    std::uint64_t seed, double ridge) {
    check_xy(X, y);
    if (X.rows() < 1)
        throw ArgumentError("elm_train: no training rows");
    if (hidden_width < 1)
        throw ArgumentError("elm_train: hidden width must be >= 1");
    if (ridge < 0.0)
        throw ArgumentError("elm_train: ridge must be >= 0");
    const int n_classes = class_count(y);
    const int d = static_cast<int>(X.cols());

    Rng rng(seed);
    const double bound = glorot_bound(d, hidden_width);
    DaeLayer layer;
    layer.W = draw_matrix(hidden_width, d, bound, rng);
    layer.b = draw_matrix(hidden_width, 1, bound, rng).col(0);

    const Eigen::Index n = X.rows();
    MatrixXd h(n, hidden_width + 1);
    h.leftCols(hidden_width) =
        ((tanh_m(affine(layer.W, layer.b, X.transpose())).array() + 1.0) / 2.0).matrix().transpose();
    h.col(hidden_width).setOnes();

    MatrixXd targets = MatrixXd::Zero(n, n_classes);
    for (Eigen::Index i = 0; i < n; ++i)
        targets(i, y[static_cast<std::size_t>(i)]) = 1.0;

    const MatrixXd normal =
        h.transpose() * h + ridge * MatrixXd::Identity(hidden_width + 1, hidden_width + 1);
    const MatrixXd rhs = h.transpose() * targets;
    MatrixXd beta;
    if (ridge == 0.0) {
        const Eigen::FullPivLU<MatrixXd> lu(normal);
        if (!lu.isInvertible())
            throw NumericError("elm_train: singular normal matrix (ridge = 0)");
        beta = lu.solve(rhs);
    } else {
        beta = normal.ldlt().solve(rhs);
    }
    if (!beta.allFinite())
        throw NumericError("elm_train: least-squares solve failed");

    SdaeModel model;
    model.layers.push_back(std::move(layer));
    model.top_W = beta.topRows(hidden_width).transpose();
    model.top_b = beta.row(hidden_width).transpose();
    model.seed = seed;
    return model;
}

void save_model(const SdaeModel& model, const std::string& path) {
    if (model.top_W.rows() < 1)
        throw ArgumentError("save_model: model has no logistic layer");
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f)
        throw DataError("cannot open for writing: " + path);

    std::fprintf(f.get(), "SDAE1 %zu %d %d\n", model.layers.size(), model.n_classes(),
                 model.input_width());

    const std::size_t d = model.bounds.min.size();
    if (d != model.bounds.max.size())
        throw ArgumentError("save_model: malformed normalization bounds");
    std::fprintf(f.get(), "NORM %zu\n", d);
    for (const auto& vals : {model.bounds.min, model.bounds.max}) {
        for (std::size_t k = 0; k < vals.size(); ++k)
            std::fprintf(f.get(), "%s%.17g", k ? " " : "", vals[k]);
        if (!vals.empty())
            std::fputc('\n', f.get());
    }

    auto write_layer = [&](const MatrixXd& w, const VectorXd& b) {
        std::fprintf(f.get(), "LAYER %d %d\n", static_cast<int>(w.cols()), static_cast<int>(w.rows()));
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            for (Eigen::Index j = 0; j < w.cols(); ++j)
                std::fprintf(f.get(), "%s%.17g", j ? " " : "", w(i, j));
            std::fputc('\n', f.get());
        }
        for (Eigen::Index i = 0; i < b.size(); ++i)
            std::fprintf(f.get(), "%s%.17g", i ? " " : "", b[i]);
        std::fputc('\n', f.get());
    };
    for (const DaeLayer& layer : model.layers)
        write_layer(layer.W, layer.b);
    write_layer(model.top_W, model.top_b);

    if (std::ferror(f.get()))
        throw DataError("write failed: " + path);
}

SdaeModel load_model(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f)
        throw DataError("cannot open: " + path);
    std::string content;
    char chunk[8192];
    std::size_t got;
    while ((got = std::fread(chunk, 1, sizeof chunk, f.get())) > 0)
        content.append(chunk, got);
    if (std::ferror(f.get()))
        throw DataError("read failed: " + path);

    std::istringstream in(content);
    auto fail = [&](const std::string& what) -> void {
        throw DataError("model file " + path + ": " + what);
    };

    std::string magic;
    long n_layers = 0, n_classes = 0, input_width = 0;
    if (!(in >> magic >> n_layers >> n_classes >> input_width))
        fail("truncated header");
    if (magic != "SDAE1")
        fail("unknown format '" + magic + "'");
    if (n_layers < 0 || n_classes < 1 || input_width < 1)
        fail("invalid header dimensions");

    SdaeModel model;
    std::string tag;
    long d = 0;
    if (!(in >> tag >> d) || tag != "NORM" || d < 0)
        fail("missing NORM section");
    if (d > 0) {
        if (d != input_width)
            fail("normalization width does not match input width");
        model.bounds.min.resize(static_cast<std::size_t>(d));
        model.bounds.max.resize(static_cast<std::size_t>(d));
        for (auto* vals : {&model.bounds.min, &model.bounds.max})
            for (auto& v : *vals)
                if (!(in >> v))
                    fail("truncated NORM section");
    }

    int prev_out = static_cast<int>(input_width);
    for (long k = 0; k <= n_layers; ++k) {
        long in_w = 0, out_w = 0;
        if (!(in >> tag >> in_w >> out_w) || tag != "LAYER")
            fail("missing LAYER header");
        if (in_w != prev_out)
            fail("layer input width does not chain");
        if (out_w < 1)
            fail("invalid layer width");
        MatrixXd w(out_w, in_w);
        VectorXd b(out_w);
        for (Eigen::Index i = 0; i < w.rows(); ++i)
            for (Eigen::Index j = 0; j < w.cols(); ++j)
                if (!(in >> w(i, j)))
                    fail("truncated weights");
        for (Eigen::Index i = 0; i < b.size(); ++i)
            if (!(in >> b[i]))
                fail("truncated biases");
        if (!w.allFinite() || !b.allFinite())
            fail("non-finite parameters");
        if (k < n_layers) {
            DaeLayer layer;
            layer.W = std::move(w);
            layer.b = std::move(b);
            model.layers.push_back(std::move(layer));
        } else {
            if (out_w != n_classes)
                fail("logistic layer width does not match class count");
            model.top_W = std::move(w);
            model.top_b = std::move(b);
        }
        prev_out = static_cast<int>(out_w);
    }
    std::string extra;
    if (in >> extra)
        fail("trailing content");
    return model;
}

} // namespace quakeseg
