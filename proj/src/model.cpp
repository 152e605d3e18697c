#include "fedsim/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "fedsim/errors.hpp"

namespace fedsim {

void MlpConfig::validate() const {
    if (layer_sizes.size() < 3) throw config_error("MLP needs at least one hidden layer");
    for (int s : layer_sizes)
        if (s < 1) throw config_error("MLP layer sizes must be positive");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
        throw config_error("dropout rate must be in [0,1)");
}

std::size_t ModelParams::layer_offset(std::size_t l) const {
    std::size_t off = 0;
    for (std::size_t i = 0; i < l; ++i)
        off += std::size_t(shapes[i].out) * shapes[i].in + shapes[i].out;
    return off;
}

std::span<const double> ModelParams::weights(std::size_t l) const {
    return {flat.data() + layer_offset(l), std::size_t(shapes[l].out) * shapes[l].in};
}

std::span<const double> ModelParams::bias(std::size_t l) const {
    return {flat.data() + layer_offset(l) + std::size_t(shapes[l].out) * shapes[l].in,
            std::size_t(shapes[l].out)};
}

std::span<const double> ModelParams::block(std::size_t l) const {
    return {flat.data() + layer_offset(l),
            std::size_t(shapes[l].out) * shapes[l].in + shapes[l].out};
}

std::span<double> ModelParams::block(std::size_t l) {
    return {flat.data() + layer_offset(l),
            std::size_t(shapes[l].out) * shapes[l].in + shapes[l].out};
}

bool ModelParams::all_finite() const {
    return std::all_of(flat.begin(), flat.end(), [](double v) { return std::isfinite(v); });
}

ModelParams init_params(const MlpConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    ModelParams p;
    for (std::size_t l = 0; l + 1 < cfg.layer_sizes.size(); ++l)
        p.shapes.push_back({cfg.layer_sizes[l + 1], cfg.layer_sizes[l]});

    Rng rng(seed);
    for (const auto& shape : p.shapes) {
        // He-style: zero-mean normal scaled by fan-in, biases zero.
        std::normal_distribution<double> init(0.0, std::sqrt(2.0 / shape.in));
        for (int i = 0; i < shape.out * shape.in; ++i) p.flat.push_back(init(rng));
        for (int i = 0; i < shape.out; ++i) p.flat.push_back(0.0);
    }
    return p;
}

namespace {

// Weight matrix of layer l as a [out x in] view.
Matrix weight_matrix(const ModelParams& p, std::size_t l) {
    Matrix w(std::size_t(p.shapes[l].out), std::size_t(p.shapes[l].in));
    const auto src = p.weights(l);
    std::copy(src.begin(), src.end(), w.data.begin());
    return w;
}

struct ForwardTrace {
    std::vector<Matrix> inputs;  // activation fed into each layer (post-dropout)
    std::vector<Matrix> pre_act; // linear outputs per layer
    std::vector<Matrix> masks;   // dropout masks per hidden layer (empty in eval)
    Matrix logits;
};

ForwardTrace forward_trace(const ModelParams& params, const MlpConfig& cfg, const Matrix& batch,
                           bool train_mode, Rng* rng) {
    if (batch.cols != std::size_t(cfg.layer_sizes.front()))
        throw data_error("batch feature dimension " + std::to_string(batch.cols) +
                         " does not match model input " + std::to_string(cfg.layer_sizes.front()));
    if (train_mode && cfg.dropout_rate > 0.0 && rng == nullptr)
        throw config_error("train-mode forward needs an rng for dropout");

    const std::size_t layers = params.shapes.size();
    ForwardTrace t;
    Matrix a = batch;
    for (std::size_t l = 0; l < layers; ++l) {
        t.inputs.push_back(a);
        Matrix w = weight_matrix(params, l);
        Matrix z = matmul_nt(a, w);
        const auto b = params.bias(l);
        for (std::size_t i = 0; i < z.rows; ++i) {
            double* zi = z.row(i);
            for (std::size_t j = 0; j < z.cols; ++j) zi[j] += b[j];
        }
        t.pre_act.push_back(z);
        if (l + 1 == layers) {
            t.logits = std::move(z);
            break;
        }
        for (double& v : z.data) v = v > 0.0 ? v : 0.0;
        if (train_mode && cfg.dropout_rate > 0.0) {
            Matrix mask(z.rows, z.cols);
            std::uniform_real_distribution<double> u(0.0, 1.0);
            const double keep_scale = 1.0 / (1.0 - cfg.dropout_rate);
            for (double& m : mask.data) m = u(*rng) < cfg.dropout_rate ? 0.0 : keep_scale;
            for (std::size_t i = 0; i < z.data.size(); ++i) z.data[i] *= mask.data[i];
            t.masks.push_back(std::move(mask));
        }
        a = std::move(z);
    }
    return t;
}

} // namespace

ForwardResult forward(const ModelParams& params, const MlpConfig& cfg, const Matrix& batch,
                      bool train_mode, Rng* rng) {
    ForwardTrace t = forward_trace(params, cfg, batch, train_mode, rng);
    return {std::move(t.logits), std::move(t.masks)};
}

Matrix softmax_rows(const Matrix& logits) {
    Matrix p(logits.rows, logits.cols);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        const double* zi = logits.row(i);
        double* pi = p.row(i);
        double zmax = zi[0];
        for (std::size_t j = 1; j < logits.cols; ++j) zmax = std::max(zmax, zi[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < logits.cols; ++j) {
            pi[j] = std::exp(zi[j] - zmax);
            sum += pi[j];
        }
        for (std::size_t j = 0; j < logits.cols; ++j) pi[j] /= sum;
    }
    return p;
}

LossGrad loss_and_grad(const ModelParams& params, const MlpConfig& cfg, const Matrix& batch,
                       std::span<const int> labels, const ProxTerm* prox, Rng* dropout_rng) {
    if (batch.rows == 0) throw data_error("loss on an empty batch");
    if (labels.size() != batch.rows) throw data_error("label count does not match batch size");

    const bool train_mode = dropout_rng != nullptr;
    ForwardTrace t = forward_trace(params, cfg, batch, train_mode, dropout_rng);
    const std::size_t n = batch.rows;
    const std::size_t layers = params.shapes.size();

    Matrix probs = softmax_rows(t.logits);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        loss -= std::log(std::max(probs(i, labels[i]), 1e-300));
    loss /= double(n);

    LossGrad out;
    out.grad.assign(params.flat.size(), 0.0);

    // delta at the output: (softmax - onehot) / n
    Matrix delta = std::move(probs);
    for (std::size_t i = 0; i < n; ++i) delta(i, labels[i]) -= 1.0;
    for (double& v : delta.data) v /= double(n);

    for (std::size_t l = layers; l-- > 0;) {
        const Matrix dw = matmul_tn(delta, t.inputs[l]); // [out x in]
        const std::size_t off = params.layer_offset(l);
        const std::size_t wsize = std::size_t(params.shapes[l].out) * params.shapes[l].in;
        std::copy(dw.data.begin(), dw.data.end(), out.grad.begin() + std::ptrdiff_t(off));
        for (std::size_t i = 0; i < delta.rows; ++i) {
            const double* di = delta.row(i);
            for (std::size_t j = 0; j < delta.cols; ++j) out.grad[off + wsize + j] += di[j];
        }
        if (l == 0) break;
        Matrix w = weight_matrix(params, l);
        Matrix prev = matmul_nn(delta, w); // [n x in_l]
        // Gradient flows through the same ReLU and dropout mask as forward.
        const Matrix& z_prev = t.pre_act[l - 1];
        for (std::size_t i = 0; i < prev.data.size(); ++i)
            prev.data[i] = z_prev.data[i] > 0.0 ? prev.data[i] : 0.0;
        if (!t.masks.empty())
            for (std::size_t i = 0; i < prev.data.size(); ++i)
                prev.data[i] *= t.masks[l - 1].data[i];
        delta = std::move(prev);
    }

    if (prox && prox->mu != 0.0) {
        if (!prox->anchor || prox->anchor->flat.size() != params.flat.size())
            throw config_error("proximal anchor shape does not match parameters");
        double sq = 0.0;
        for (std::size_t i = 0; i < params.flat.size(); ++i) {
            const double d = params.flat[i] - prox->anchor->flat[i];
            sq += d * d;
            out.grad[i] += prox->mu * d;
        }
        loss += 0.5 * prox->mu * sq;
    }

    out.loss = loss;
    return out;
}

void sgd_step(ModelParams& params, std::span<const double> grad, double eta) {
    if (grad.size() != params.flat.size()) throw data_error("gradient shape mismatch");
    if (!(eta > 0.0)) throw config_error("learning rate must be positive");
    for (std::size_t i = 0; i < grad.size(); ++i) params.flat[i] -= eta * grad[i];
    if (!params.all_finite()) throw divergence_error("parameters diverged to NaN/Inf");
}

std::vector<int> predict(const ModelParams& params, const MlpConfig& cfg,
                         const Matrix& features) {
    ForwardResult r = forward(params, cfg, features, false, nullptr);
    std::vector<int> out(features.rows);
    for (std::size_t i = 0; i < features.rows; ++i) {
        const double* zi = r.logits.row(i);
        int best = 0;
        for (std::size_t j = 1; j < r.logits.cols; ++j)
            if (zi[j] > zi[best]) best = int(j);
        out[i] = best;
    }
    return out;
}

void save_params(const ModelParams& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot write " + path);
    out.write("FSPM", 4);
    const auto put_u32 = [&](std::uint32_t v) {
        unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
        out.write(reinterpret_cast<char*>(b), 4);
    };
    put_u32(std::uint32_t(params.shapes.size()));
    for (const auto& s : params.shapes) {
        put_u32(std::uint32_t(s.out));
        put_u32(std::uint32_t(s.in));
    }
    static_assert(sizeof(double) == 8);
    for (double v : params.flat) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
        out.write(reinterpret_cast<char*>(b), 8);
    }
}

ModelParams load_params(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "FSPM", 4) != 0)
        throw data_error(path + ": not a parameter checkpoint");
    const auto get_u32 = [&]() {
        unsigned char b[4];
        in.read(reinterpret_cast<char*>(b), 4);
        if (!in) throw data_error(path + ": truncated checkpoint");
        return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
               (std::uint32_t(b[3]) << 24);
    };
    ModelParams p;
    const std::uint32_t layers = get_u32();
    std::size_t total = 0;
    for (std::uint32_t l = 0; l < layers; ++l) {
        LayerShape s{int(get_u32()), int(get_u32())};
        p.shapes.push_back(s);
        total += std::size_t(s.out) * s.in + s.out;
    }
    p.flat.resize(total);
    for (double& v : p.flat) {
        unsigned char b[8];
        in.read(reinterpret_cast<char*>(b), 8);
        if (!in) throw data_error(path + ": truncated checkpoint");
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= std::uint64_t(b[i]) << (8 * i);
        std::memcpy(&v, &bits, 8);
    }
    return p;
}

} // namespace fedsim
