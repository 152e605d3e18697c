#include "fedsim/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fedsim/errors.hpp"

namespace fedsim {

namespace {

std::vector<int> sorted_union(const std::vector<int>& base, const std::vector<int>& added) {
    std::vector<int> out = base;
    out.insert(out.end(), added.begin(), added.end());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> inactive_clients(const std::vector<int>& active, const Federation& fed) {
    std::vector<int> sorted_active = active;
    std::sort(sorted_active.begin(), sorted_active.end());
    std::vector<int> inactive;
    for (int id : fed.client_ids())
        if (!std::binary_search(sorted_active.begin(), sorted_active.end(), id))
            inactive.push_back(id);
    return inactive;
}

// Combined counts of a client set, through the masked protocol when the set
// has at least two members.
LabelCounts active_counts(const std::vector<int>& members, const Federation& fed,
                          std::uint64_t mask_seed) {
    if (members.empty()) throw data_error("active set is empty");
    if (members.size() == 1) return fed.counts_of(members[0]);
    std::vector<LabelCounts> shares;
    shares.reserve(members.size());
    for (int id : members) shares.push_back(fed.counts_of(id));
    return secure_aggregate(shares, kSecureAggPrime, mask_seed);
}

bool is_zero(const LabelCounts& v) {
    return std::all_of(v.begin(), v.end(), [](std::int64_t c) { return c == 0; });
}

} // namespace

std::vector<int> random_select(const std::vector<int>& all_clients, int m, Rng& rng) {
    if (m < 0 || std::size_t(m) > all_clients.size())
        throw config_error("cannot select " + std::to_string(m) + " of " +
                           std::to_string(all_clients.size()) + " clients");
    std::vector<int> pool = all_clients;
    for (int i = 0; i < m; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(m);
    std::sort(pool.begin(), pool.end());
    return pool;
}

SelectionOutcome greedy_dc_select(const std::vector<int>& active, const Federation& fed,
                                  const LabelCounts& target, int max_added,
                                  std::uint64_t mask_seed) {
    if (is_zero(target)) throw data_error("selection target is a zero vector");

    std::vector<int> members = active;
    std::sort(members.begin(), members.end());
    std::vector<int> candidates = inactive_clients(members, fed);

    SelectionOutcome out;
    LabelCounts combined = active_counts(members, fed, derive_seed(mask_seed, 0, "active-sum"));
    if (is_zero(combined)) throw data_error("active clients hold no samples");
    double current = cosine_distance(combined, target);

    const auto target_d = to_doubles(target);
    for (int step = 0; step < max_added; ++step) {
        if (candidates.empty()) {
            out.stop_reason = "no inactive clients remain";
            break;
        }
        // Candidate scoring is independent per client; the argmin reduction
        // below is a serial scan over ascending ids, so the result does not
        // depend on the thread schedule.
        std::vector<double> scores(candidates.size());
#pragma omp parallel for schedule(static) if (candidates.size() >= 256)
        for (std::int64_t c = 0; c < std::int64_t(candidates.size()); ++c) {
            const auto with = to_doubles(add(combined, fed.counts_of(candidates[c])));
            scores[c] = cosine_distance(std::span<const double>(with),
                                        std::span<const double>(target_d));
        }
        std::size_t best = 0;
        for (std::size_t c = 1; c < scores.size(); ++c)
            if (scores[c] < scores[best]) best = c;

        if (!(scores[best] < current)) {
            out.stop_reason = "no further improvement in distribution alignment";
            break;
        }
        const int chosen = candidates[best];
        members.push_back(chosen);
        std::sort(members.begin(), members.end());
        candidates.erase(candidates.begin() + std::ptrdiff_t(best));
        combined =
            active_counts(members, fed, derive_seed(mask_seed, std::uint64_t(step) + 1, "active-sum"));
        current = cosine_distance(combined, target);
        out.added.push_back(chosen);
        out.trace.emplace_back(chosen, current);
    }
    if (out.stop_reason.empty() && int(out.added.size()) == max_added)
        out.stop_reason = "reached maximum additions";

    out.active = sorted_union(active, out.added);
    out.achieved_distance = current;
    return out;
}

SelectionOutcome exhaustive_dc_select(const std::vector<int>& active, const Federation& fed,
                                      const LabelCounts& target, int max_added,
                                      std::uint64_t subset_budget) {
    if (is_zero(target)) throw data_error("selection target is a zero vector");

    std::vector<int> members = active;
    std::sort(members.begin(), members.end());
    const std::vector<int> candidates = inactive_clients(members, fed);
    const std::size_t n = candidates.size();
    const int horizon = std::min<int>(max_added, int(n));

    // Count subsets of size 0..horizon before enumerating.
    double subset_count = 0.0;
    {
        double binom = 1.0;
        for (int s = 0; s <= horizon; ++s) {
            subset_count += binom;
            binom = binom * double(n - s) / double(s + 1);
        }
    }
    if (subset_count > double(subset_budget))
        throw config_error("exhaustive selection refused: " +
                           std::to_string(std::uint64_t(subset_count)) + " subsets exceed budget " +
                           std::to_string(subset_budget));

    LabelCounts base = active_counts(members, fed, 0);
    if (is_zero(base)) throw data_error("active clients hold no samples");

    SelectionOutcome out;
    double best = cosine_distance(base, target);
    std::vector<int> best_subset;

    // Sizes ascending, combinations in lexicographic order; strict
    // improvement keeps the first optimum, which realizes the tie-breaking
    // rule (smaller subset, then lexicographic ids).
    std::vector<std::size_t> comb;
    for (int size = 1; size <= horizon; ++size) {
        comb.resize(size);
        for (int i = 0; i < size; ++i) comb[i] = std::size_t(i);
        while (true) {
            LabelCounts combined = base;
            for (std::size_t pos : comb) combined = add(combined, fed.counts_of(candidates[pos]));
            const double d = cosine_distance(combined, target);
            if (d < best) {
                best = d;
                best_subset.clear();
                for (std::size_t pos : comb) best_subset.push_back(candidates[pos]);
            }
            // next combination
            int i = size - 1;
            while (i >= 0 && comb[i] == n - std::size_t(size - i)) --i;
            if (i < 0) break;
            ++comb[i];
            for (int j = i + 1; j < size; ++j) comb[j] = comb[j - 1] + 1;
        }
    }

    out.added = best_subset;
    out.active = sorted_union(active, best_subset);
    out.achieved_distance = best;
    for (int id : best_subset) out.trace.emplace_back(id, best);
    out.stop_reason = "exhaustive minimum";
    return out;
}

SelectionOutcome random_augment(const std::vector<int>& active, const Federation& fed,
                                int max_added, Rng& rng, const LabelCounts* target) {
    std::vector<int> members = active;
    std::sort(members.begin(), members.end());
    const std::vector<int> inactive = inactive_clients(members, fed);

    if (max_added < 0 || std::size_t(max_added) > inactive.size())
        throw config_error("cannot add " + std::to_string(max_added) + " of " +
                           std::to_string(inactive.size()) + " inactive clients");

    SelectionOutcome out;
    out.added = random_select(inactive, max_added, rng);
    out.active = sorted_union(active, out.added);
    out.achieved_distance = std::numeric_limits<double>::quiet_NaN();
    if (target && !is_zero(*target)) {
        // Reported for comparison plots, not optimized.
        LabelCounts combined(target->size(), 0);
        for (int id : out.active) combined = add(combined, fed.counts_of(id));
        if (!is_zero(combined)) out.achieved_distance = cosine_distance(combined, *target);
    }
    out.stop_reason = "random augmentation";
    return out;
}

} // namespace fedsim
