#include "fedsim/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedsim/errors.hpp"

namespace fedsim {

namespace {

std::vector<std::size_t> by_client_id(const std::vector<ClientUpdateResult>& updates) {
    std::vector<std::size_t> order(updates.size());
    std::iota(order.begin(), order.end(), std::size_t(0));
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return updates[a].client_id < updates[b].client_id;
    });
    return order;
}

void check_shapes(const ModelParams& global, const std::vector<ClientUpdateResult>& updates) {
    if (updates.empty()) throw data_error("aggregation needs at least one update");
    for (const auto& u : updates)
        if (u.params.flat.size() != global.flat.size())
            throw data_error("client " + std::to_string(u.client_id) +
                             " returned params of wrong shape");
}

} // namespace

ModelParams aggregate_fedavg(const ModelParams& global,
                             const std::vector<ClientUpdateResult>& updates) {
    check_shapes(global, updates);
    std::int64_t total = 0;
    for (const auto& u : updates) total += u.num_samples;
    if (total <= 0) throw data_error("aggregation with zero total samples");

    ModelParams out = global;
    std::fill(out.flat.begin(), out.flat.end(), 0.0);
    const auto order = by_client_id(updates);
    for (std::size_t idx : order) {
        const auto& u = updates[idx];
        const double w = double(u.num_samples) / double(total);
#pragma omp parallel for schedule(static) if (out.flat.size() >= (1u << 16))
        for (std::int64_t i = 0; i < std::int64_t(out.flat.size()); ++i)
            out.flat[i] += w * u.params.flat[i];
    }
    return out;
}

ModelParams aggregate_fedatt(const ModelParams& global,
                             const std::vector<ClientUpdateResult>& updates, double epsilon) {
    check_shapes(global, updates);
    if (!(epsilon > 0.0)) throw config_error("FedAtt epsilon must be positive");

    ModelParams out = global;
    const auto order = by_client_id(updates);
    const std::size_t layers = global.shapes.size();
    for (std::size_t l = 0; l < layers; ++l) {
        const auto gblock = global.block(l);

        std::vector<double> score(order.size());
        for (std::size_t k = 0; k < order.size(); ++k) {
            const auto ublock = updates[order[k]].params.block(l);
            double sq = 0.0;
            for (std::size_t i = 0; i < gblock.size(); ++i) {
                const double d = gblock[i] - ublock[i];
                sq += d * d;
            }
            score[k] = std::sqrt(sq);
        }
        const double smax = *std::max_element(score.begin(), score.end());
        double denom = 0.0;
        for (double& s : score) {
            s = std::exp(s - smax);
            denom += s;
        }
        for (double& s : score) s /= denom;

        auto oblock = out.block(l);
        for (std::size_t k = 0; k < order.size(); ++k) {
            const auto ublock = updates[order[k]].params.block(l);
            const double alpha = score[k];
            for (std::size_t i = 0; i < oblock.size(); ++i)
                oblock[i] -= epsilon * alpha * (gblock[i] - ublock[i]);
        }
    }
    return out;
}

ModelParams aggregate_fedprox(const ModelParams& global,
                              const std::vector<ClientUpdateResult>& updates) {
    return aggregate_fedavg(global, updates);
}

ModelParams aggregate(const ModelParams& global, const std::vector<ClientUpdateResult>& updates,
                      const StrategyConfig& strategy) {
    switch (strategy.kind) {
        case StrategyKind::FedAvg: return aggregate_fedavg(global, updates);
        case StrategyKind::FedAtt: return aggregate_fedatt(global, updates, strategy.epsilon);
        case StrategyKind::FedProx: return aggregate_fedprox(global, updates);
    }
    throw config_error("unknown strategy");
}

ClientUpdateResult client_update(const ModelParams& global, const MlpConfig& arch,
                                 const ClientShard& shard, const Dataset& train,
                                 const StrategyConfig& strategy, int epochs, int batch_size,
                                 double eta, std::uint64_t seed) {
    if (shard.sample_indices.empty())
        throw data_error("client " + std::to_string(shard.client_id) + " has an empty shard");
    if (epochs < 0) throw config_error("epochs must be >= 0");
    if (batch_size < 1) throw config_error("batch size must be >= 1");

    ClientUpdateResult result;
    result.client_id = shard.client_id;
    result.num_samples = shard.num_samples();
    result.params = global;

    // mu = 0 takes the FedAvg code path exactly.
    const bool use_prox = strategy.kind == StrategyKind::FedProx && strategy.mu != 0.0;
    ProxTerm prox{strategy.mu, &global};

    Rng rng(seed);
    std::vector<std::size_t> order = shard.sample_indices;
    double loss_sum = 0.0;
    std::size_t batches = 0;
    try {
        for (int e = 0; e < epochs; ++e) {
            std::shuffle(order.begin(), order.end(), rng);
            for (std::size_t start = 0; start < order.size(); start += std::size_t(batch_size)) {
                const std::size_t stop = std::min(order.size(), start + std::size_t(batch_size));
                Matrix x(stop - start, train.feature_dim());
                std::vector<int> y(stop - start);
                for (std::size_t i = start; i < stop; ++i) {
                    const std::size_t src = order[i];
                    std::copy(train.features.row(src), train.features.row(src) + train.feature_dim(),
                              x.row(i - start));
                    y[i - start] = train.labels[src];
                }
                const LossGrad lg = loss_and_grad(result.params, arch, x, y,
                                                  use_prox ? &prox : nullptr, &rng);
                sgd_step(result.params, lg.grad, eta);
                loss_sum += lg.loss;
                ++batches;
            }
        }
    } catch (const divergence_error& e) {
        throw divergence_error("client " + std::to_string(shard.client_id) + ": " + e.what(), -1,
                               shard.client_id);
    }
    result.mean_loss = batches > 0 ? loss_sum / double(batches) : 0.0;
    return result;
}

} // namespace fedsim
