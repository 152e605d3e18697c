#pragma once

#include <cstdint>
#include <vector>

#include "fedsim/dataset.hpp"
#include "fedsim/model.hpp"
#include "fedsim/partition.hpp"

namespace fedsim {

enum class StrategyKind { FedAvg, FedAtt, FedProx };

struct StrategyConfig {
    StrategyKind kind = StrategyKind::FedAvg;
    double mu = 0.01;      // FedProx proximal coefficient
    double epsilon = 1.2;  // FedAtt server step size
};

struct ClientUpdateResult {
    int client_id = 0;
    ModelParams params;
    std::int64_t num_samples = 0;
    double mean_loss = 0.0; // mean minibatch loss over the local run
};

// Sample-weighted mean: w = sum_k (n_k / sum n) w_k. Updates are reduced in
// client-id order so the floating-point sum is schedule-independent.
ModelParams aggregate_fedavg(const ModelParams& global, const std::vector<ClientUpdateResult>& updates);

// Layer-wise attention: s_k = |w^l - w_k^l|_2, alpha = softmax(s) over
// clients, w^l <- w^l - epsilon * sum_k alpha_k (w^l - w_k^l).
ModelParams aggregate_fedatt(const ModelParams& global, const std::vector<ClientUpdateResult>& updates,
                             double epsilon);

// Same server rule as FedAvg; the proximal term lives in the local objective.
ModelParams aggregate_fedprox(const ModelParams& global, const std::vector<ClientUpdateResult>& updates);

ModelParams aggregate(const ModelParams& global, const std::vector<ClientUpdateResult>& updates,
                      const StrategyConfig& strategy);

// Algorithm: copy the global params, run `epochs` passes of seeded-shuffled
// minibatch SGD on the client's shard (FedProx anchors a proximal term at
// the received global params), return the new params and the sample count.
ClientUpdateResult client_update(const ModelParams& global, const MlpConfig& arch,
                                 const ClientShard& shard, const Dataset& train,
                                 const StrategyConfig& strategy, int epochs, int batch_size,
                                 double eta, std::uint64_t seed);

} // namespace fedsim
