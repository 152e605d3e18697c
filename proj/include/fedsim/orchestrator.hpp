#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fedsim/dataset.hpp"
#include "fedsim/model.hpp"
#include "fedsim/partition.hpp"
#include "fedsim/selection.hpp"
#include "fedsim/strategies.hpp"

namespace fedsim {

struct RunConfig {
    int rounds = 100;       // T
    int local_epochs = 3;   // E
    int batch_size = 32;    // B
    double eta = 0.05;
    int repeats = 3;        // R, used by the grid runner
    std::uint64_t master_seed = 42;
    StrategyConfig strategy;
    SelectionConfig selection;
    MlpConfig model;        // full layer list, input and output included
    PartitionConfig partition;

    void validate(int federation_size) const;
};

struct RoundLog {
    int round = 0;
    std::vector<int> base;  // randomly selected clients
    std::vector<int> added; // DC / ablation additions
    double distance = 0.0;  // achieved cosine distance, NaN when no target
    std::vector<std::pair<int, double>> losses; // (client, mean local loss), id order
    double f1 = 0.0;        // weighted F1 on the test set after aggregation
};

struct RunSummary {
    int rounds = 0;
    double initial_f1 = 0.0; // untrained model, the round-0 baseline
    double final_f1 = 0.0;
    double best_f1 = 0.0;
    int best_round = 0;
};

// Algorithm loop: per round, select m base clients at random, augment per
// the selection mode, run the local updates (in parallel; all sub-seeds are
// derived up front so the schedule cannot change results), aggregate per the
// strategy, evaluate on the test set. Fully deterministic for a fixed
// master seed.
std::vector<RoundLog> run_federated(const RunConfig& cfg, const Federation& federation,
                                    const Dataset& train, const Dataset& test,
                                    RunSummary* summary = nullptr,
                                    ModelParams* final_params = nullptr);

void write_round_logs_jsonl(const std::vector<RoundLog>& logs, const std::string& path);

} // namespace fedsim
