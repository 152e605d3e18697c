#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "fedsim/dataset.hpp"
#include "fedsim/labeldist.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

// Sentinel for a perfectly homogeneous Dirichlet (the uniform limit),
// handled analytically rather than as a large-number approximation.
constexpr double kAlphaInf = std::numeric_limits<double>::infinity();

struct PartitionConfig {
    int num_clients = 100;
    double alpha_local = 2.0;
    double alpha_global = 2.0;
    std::uint64_t seed = 0;
};

struct ClientShard {
    int client_id = 0;
    std::vector<std::size_t> sample_indices; // into the training dataset, ascending
    LabelCounts label_counts;                // sums to |sample_indices|

    std::int64_t num_samples() const { return std::int64_t(sample_indices.size()); }
};

struct Federation {
    std::vector<ClientShard> shards; // indexed by client id
    int num_classes = 0;

    std::vector<int> client_ids() const;
    const LabelCounts& counts_of(int client_id) const;
};

// k Gamma(alpha,1) variates, normalized. alpha = inf yields the exact
// uniform vector and consumes no randomness.
std::vector<double> sample_dirichlet(double alpha, int k, Rng& rng);

// Draws p ~ Dir(alpha_global) over classes, scales to keep fractions
// f_q = p_q / max_r p_r, and uniformly subsamples each class q to
// round(f_q * n_q). alpha_global = inf returns the input unchanged. A class
// reduced to zero samples is permitted and logged to stderr.
Dataset apply_global_imbalance(const Dataset& train, const PartitionConfig& cfg);

// Same, with the class proportions supplied by the caller.
Dataset apply_global_imbalance_with(const Dataset& train,
                                    const std::vector<double>& class_proportions, Rng& rng);

// Distributes the training set across cfg.num_clients clients. Each client
// draws a proportion vector p_k ~ Dir(alpha_local) over classes; within each
// class the samples are dealt to clients proportionally to the normalized
// column {p_k[q]}_k with largest-remainder rounding, so every sample lands in
// exactly one shard.
Federation dirichlet_local_partition(const Dataset& train, const PartitionConfig& cfg);

// One JSON record per client: client_id, label_counts, sample_indices.
void save_federation_jsonl(const Federation& federation, const std::string& path);
Federation load_federation_jsonl(const std::string& path);

} // namespace fedsim
