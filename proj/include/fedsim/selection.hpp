#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fedsim/labeldist.hpp"
#include "fedsim/partition.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

enum class TargetKind { None, Real, Balanced };
enum class SelectionMode { None, Greedy, Exhaustive, RandomAugment };

struct SelectionConfig {
    int base_clients = 10;  // m
    int max_added = 5;      // m_DC, ignored when mode == None
    TargetKind target = TargetKind::None;
    SelectionMode mode = SelectionMode::None;
    std::uint64_t seed = 0; // extra stream separation for standalone use
};

struct SelectionOutcome {
    std::vector<int> active;                     // base + added, sorted
    std::vector<int> added;                      // in addition order
    double achieved_distance = 0.0;              // NaN when no target applies
    std::vector<std::pair<int, double>> trace;   // (client, distance after adding it)
    std::string stop_reason;
};

// Uniform without-replacement sample of size m, returned sorted.
std::vector<int> random_select(const std::vector<int>& all_clients, int m, Rng& rng);

// Greedy augmentation: per iteration, the combined counts of the active set
// are computed (through the masked-sum protocol when >= 2 members), every
// inactive client is scored by the cosine distance of (its counts + active
// counts) to the target, and the argmin is added. Stops after max_added
// additions, when no candidate strictly decreases the distance, or when no
// candidates remain. Ties go to the lowest client id.
SelectionOutcome greedy_dc_select(const std::vector<int>& active, const Federation& federation,
                                  const LabelCounts& target, int max_added,
                                  std::uint64_t mask_seed = 0);

// Gold standard: evaluates every subset of inactive clients of size
// 0..max_added and returns the global minimum distance. Ties are broken by
// smaller subset size, then lexicographic client-id order. Refuses when the
// number of subsets exceeds the budget.
SelectionOutcome exhaustive_dc_select(const std::vector<int>& active, const Federation& federation,
                                      const LabelCounts& target, int max_added,
                                      std::uint64_t subset_budget = 10'000'000);

// Ablation arm: appends a uniform sample of exactly max_added inactive
// clients. The resulting distance is recorded for reporting (NaN without a
// target) but not optimized.
SelectionOutcome random_augment(const std::vector<int>& active, const Federation& federation,
                                int max_added, Rng& rng, const LabelCounts* target = nullptr);

} // namespace fedsim
