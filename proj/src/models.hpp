#ifndef QUAKESEG_MODELS_HPP
#define QUAKESEG_MODELS_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "features.hpp"
#include "rng.hpp"

namespace quakeseg {

struct TrainConfig {
    int pretrain_epochs = 50;
    int finetune_epochs = 200;
    int batch_size = 32;
    double learning_rate = 0.001;
    double corruption = 0.3;
    std::uint64_t seed = 0;

    void validate() const; // throws ConfigError
};

// One denoising autoencoder: tanh encoder y = tanh(Wx + b), untied sigmoid
// decoder z = sigmoid(W'y + b') so the cross-entropy reconstruction loss is
// defined. Decoder matrices are empty once a model leaves pretraining.
struct DaeLayer {
    Eigen::MatrixXd W;  // n_hidden x n_in
    Eigen::VectorXd b;  // n_hidden
    Eigen::MatrixXd Wd; // n_in x n_hidden
    Eigen::VectorXd bd; // n_in

    int in_width() const noexcept { return static_cast<int>(W.cols()); }
    int out_width() const noexcept { return static_cast<int>(W.rows()); }
};

// Encoder stack plus softmax logistic layer. Forward convention: a_0 = x,
// y_k = tanh(W_k a_{k-1} + b_k), a_k = (y_k + 1)/2 (keeps every layer's input
// in [0,1], the domain the reconstruction loss assumes), logits = W a_L + b.
// `bounds` carries the feature normalization so a saved model is
// self-contained for prediction on raw features.
struct SdaeModel {
    std::vector<DaeLayer> layers;
    Eigen::MatrixXd top_W; // n_classes x last_width
    Eigen::VectorXd top_b; // n_classes
    NormBounds bounds;

    double corruption = 0.3;
    double learning_rate = 0.001;
    std::uint64_t seed = 0;

    int input_width() const;
    int n_classes() const noexcept { return static_cast<int>(top_W.rows()); }
};

// Zero exactly floor(gamma * n) distinct coordinates, chosen uniformly from
// the generator; all other coordinates are untouched.
Eigen::VectorXd corrupt(const Eigen::VectorXd& x, double gamma, Rng& rng);

// Reconstruction cross-entropy -sum_k [x ln z + (1-x) ln(1-z)].
double dae_loss(const Eigen::VectorXd& x, const Eigen::VectorXd& z);

// Mini-batch SGD on the denoising reconstruction objective. X rows are
// samples in [0,1]. Returns the per-epoch mean loss measured on uncorrupted
// inputs after each epoch's updates. Throws NumericError naming the epoch if
// the loss stops being finite.
std::vector<double> dae_train(DaeLayer& layer, const Eigen::MatrixXd& X, const TrainConfig& cfg,
                              Rng& rng);

// Fresh stack with uniform +-sqrt(6/(fan_in+fan_out)) weights and zero
// biases, decoders included, drawn from `rng` in a fixed order.
SdaeModel sdae_init(int input_width, std::span<const int> hidden_widths, int n_classes, Rng& rng);

// Layer-wise pretraining: layer k trains on the [0,1]-mapped activations of
// the stack below it. Returns one loss trace per layer.
std::vector<std::vector<double>> pretrain_stack(SdaeModel& model, const Eigen::MatrixXd& X,
                                                const TrainConfig& cfg, Rng& rng);

// Supervised softmax cross-entropy backprop through the whole encoder stack;
// decoders are discarded. Returns the per-epoch mean training loss.
std::vector<double> fine_tune(SdaeModel& model, const Eigen::MatrixXd& X, const std::vector<int>& y,
                              const TrainConfig& cfg, Rng& rng);

// Rows of class probabilities (softmax, each row sums to 1).
Eigen::MatrixXd predict_proba(const SdaeModel& model, const Eigen::MatrixXd& X);
// Argmax of predict_proba, smallest index on ties.
std::vector<int> predict_labels(const SdaeModel& model, const Eigen::MatrixXd& X);

struct TrainResult {
    SdaeModel model;
    std::vector<std::vector<double>> pretrain_traces;
    std::vector<double> finetune_trace;
};

// init -> pretrain -> fine-tune on one generator stream seeded with cfg.seed.
TrainResult train_sdae(const Eigen::MatrixXd& X, const std::vector<int>& y,
                       std::span<const int> hidden_widths, const TrainConfig& cfg);

// A one-hidden-layer network trained by backprop alone: exactly train_sdae
// with a single width and zero pretraining epochs.
TrainResult mlp_train(const Eigen::MatrixXd& X, const std::vector<int>& y, int hidden_width,
                      const TrainConfig& cfg);

// Extreme learning machine: seeded random input weights, tanh hidden layer,
// output weights by ridge least squares against one-hot targets (closed
// form). Stored in the same container, so predict_proba softmaxes the linear
// scores; the argmax is unaffected. ridge = 0 requires an invertible normal
// matrix, otherwise NumericError.
SdaeModel elm_train(const Eigen::MatrixXd& X, const std::vector<int>& y, int hidden_width,
                    std::uint64_t seed, double ridge = 1e-6);

// Versioned text format: "SDAE1 <n_layers> <n_classes> <input_width>", a NORM
// section with the normalization bounds, then per layer "LAYER <in> <out>"
// with row-major weights and the bias vector, logistic layer last. %.17g, so
// values round-trip exactly.
void save_model(const SdaeModel& model, const std::string& path);
SdaeModel load_model(const std::string& path);

} // namespace quakeseg

#endif
