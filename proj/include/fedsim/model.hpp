#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedsim/matrix.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

// Feed-forward network: ReLU on every layer but the last, inverted dropout
// after each hidden activation.
struct MlpConfig {
    std::vector<int> layer_sizes; // input, hidden..., output
    double dropout_rate = 0.2;

    std::size_t num_layers() const { return layer_sizes.size() - 1; }
    void validate() const; // >= 1 hidden layer, positive sizes, rate in [0,1)
};

struct LayerShape {
    int out = 0;
    int in = 0;
};

// All weights and biases in one flat vector. Layer l occupies
// [offset_l, offset_l + out*in + out): the row-major [out x in] weight
// matrix followed by the bias.
struct ModelParams {
    std::vector<double> flat;
    std::vector<LayerShape> shapes;

    std::size_t layer_offset(std::size_t l) const;
    std::span<const double> weights(std::size_t l) const;
    std::span<const double> bias(std::size_t l) const;
    std::span<const double> block(std::size_t l) const; // weights + bias
    std::span<double> block(std::size_t l);

    bool all_finite() const;
};

ModelParams init_params(const MlpConfig& cfg, std::uint64_t seed);

struct ForwardResult {
    Matrix logits;
    std::vector<Matrix> dropout_masks; // one per hidden layer in train mode
};

// Eval mode applies no dropout and no rescaling. Train mode needs an rng and
// applies inverted dropout (kept units scaled by 1/(1-rate)) after each
// hidden ReLU.
ForwardResult forward(const ModelParams& params, const MlpConfig& cfg, const Matrix& batch,
                      bool train_mode, Rng* rng);

struct ProxTerm {
    double mu = 0.0;
    const ModelParams* anchor = nullptr;
};

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad; // same layout as ModelParams::flat
};

// Mean softmax cross-entropy over the batch, plus (mu/2)*|w - anchor|^2 when
// a proximal term is given; the gradient is exact for that total. Dropout is
// applied only when dropout_rng is non-null.
LossGrad loss_and_grad(const ModelParams& params, const MlpConfig& cfg, const Matrix& batch,
                       std::span<const int> labels, const ProxTerm* prox = nullptr,
                       Rng* dropout_rng = nullptr);

// w <- w - eta * g. Throws divergence_error when the result is not finite.
void sgd_step(ModelParams& params, std::span<const double> grad, double eta);

// Argmax over eval-mode logits, ties to the lowest class index.
std::vector<int> predict(const ModelParams& params, const MlpConfig& cfg, const Matrix& features);

Matrix softmax_rows(const Matrix& logits);

// Checkpoint format: "FSPM", u32 layer count, per layer u32 out/in, then the
// flat vector as little-endian doubles.
void save_params(const ModelParams& params, const std::string& path);
ModelParams load_params(const std::string& path);

} // namespace fedsim
