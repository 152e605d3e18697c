#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "fedsim/errors.hpp"
#include "fedsim/selection.hpp"
#include "helpers.hpp"

using namespace fedsim;

namespace {

std::vector<LabelCounts> random_counts(int clients, int classes, std::mt19937& rng, int max_count = 20) {
    std::uniform_int_distribution<int> count(0, max_count);
    std::vector<LabelCounts> counts(clients, LabelCounts(classes));
    for (auto& c : counts) {
        bool nonzero = false;
        for (auto& v : c) {
            v = count(rng);
            nonzero |= v > 0;
        }
        if (!nonzero) c[0] = 1;
    }
    return counts;
}

} // namespace

TEST_CASE("random_select basics") {
    std::vector<int> ids(100);
    std::iota(ids.begin(), ids.end(), 0);

    Rng rng(3);
    CHECK(random_select(ids, 100, rng) == ids);

    Rng a(42), b(42);
    CHECK(random_select(ids, 10, a) == random_select(ids, 10, b));

    Rng c(7);
    CHECK_THROWS_AS(random_select(ids, 101, c), config_error);
}

TEST_CASE("random_select is uniform over fixed seeds") {
    std::vector<int> ids(100);
    std::iota(ids.begin(), ids.end(), 0);
    std::vector<int> hits(100, 0);
    constexpr int kTrials = 10000;
    for (int seed = 0; seed < kTrials; ++seed) {
        Rng rng(seed);
        for (int id : random_select(ids, 10, rng)) ++hits[id];
    }
    for (int id = 0; id < 100; ++id) {
        const double freq = double(hits[id]) / kTrials;
        CHECK(freq > 0.09);
        CHECK(freq < 0.11);
    }
}

TEST_CASE("greedy selection drives the combined counts toward the target") {
    // active client 0 holds [3,1]; A=[0,2] makes the sum [3,3], colinear with
    // the balanced target; B=[1,0] does not.
    const auto fed = testutil::make_federation({{3, 1}, {0, 2}, {1, 0}});
    const auto outcome = greedy_dc_select({0}, fed, target_balanced(2), 1);
    CHECK(outcome.added == std::vector<int>{1});
    CHECK(outcome.achieved_distance == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(outcome.active == std::vector<int>{0, 1});
}

TEST_CASE("greedy stops early when no candidate strictly improves") {
    // active already proportional to the target; every candidate worsens it
    const auto fed = testutil::make_federation({{4, 4}, {9, 0}, {0, 7}});
    const auto outcome = greedy_dc_select({0}, fed, target_balanced(2), 5);
    CHECK(outcome.added.empty());
    CHECK(outcome.active == std::vector<int>{0});
    CHECK(outcome.stop_reason == "no further improvement in distribution alignment");
}

TEST_CASE("greedy per-step argmin matches a brute-force scan") {
    std::mt19937 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const auto counts = random_counts(9, 4, rng);
        const auto fed = testutil::make_federation(counts);
        const LabelCounts target = target_balanced(4);

        const auto outcome = greedy_dc_select({0}, fed, target, 2);

        // independent step-by-step replay
        std::vector<int> active{0};
        LabelCounts combined = counts[0];
        double current = testutil::oracle_cosine_distance(to_doubles(combined), to_doubles(target));
        std::vector<int> expected_added;
        for (int step = 0; step < 2; ++step) {
            int best_id = -1;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < 9; ++c) {
                if (std::find(active.begin(), active.end(), c) != active.end()) continue;
                LabelCounts with = combined;
                for (std::size_t q = 0; q < with.size(); ++q) with[q] += counts[c][q];
                const double d =
                    testutil::oracle_cosine_distance(to_doubles(with), to_doubles(target));
                if (d < best_d) {
                    best_d = d;
                    best_id = c;
                }
            }
            if (best_id < 0 || !(best_d < current)) break;
            active.push_back(best_id);
            for (std::size_t q = 0; q < combined.size(); ++q) combined[q] += counts[best_id][q];
            current = best_d;
            expected_added.push_back(best_id);
        }
        CHECK(outcome.added == expected_added);
        CHECK(outcome.achieved_distance == doctest::Approx(current).epsilon(1e-9));
    }
}

TEST_CASE("greedy trace distances strictly decrease") {
    std::mt19937 rng(5);
    const auto fed = testutil::make_federation(random_counts(15, 5, rng));
    const auto outcome = greedy_dc_select({0, 1}, fed, target_balanced(5), 6);
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& [id, d] : outcome.trace) {
        CHECK(d < prev);
        prev = d;
    }
}

TEST_CASE("greedy selection is invariant to target scaling") {
    std::mt19937 rng(13);
    const auto fed = testutil::make_federation(random_counts(12, 3, rng));
    const LabelCounts target{2, 5, 3};
    const LabelCounts scaled{20, 50, 30};
    const auto a = greedy_dc_select({0, 1}, fed, target, 4);
    const auto b = greedy_dc_select({0, 1}, fed, scaled, 4);
    CHECK(a.active == b.active);
    CHECK(a.added == b.added);
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
        CHECK(a.trace[i].first == b.trace[i].first);
        CHECK(a.trace[i].second == doctest::Approx(b.trace[i].second).epsilon(1e-12));
    }
}

TEST_CASE("greedy stops with a reason when the candidate pool empties") {
    const auto fed = testutil::make_federation({{9, 1}, {0, 1}, {0, 1}});
    const auto outcome = greedy_dc_select({0}, fed, target_balanced(2), 5);
    CHECK(outcome.added == std::vector<int>{1, 2});
    CHECK(outcome.stop_reason == "no inactive clients remain");
}

TEST_CASE("greedy rejects zero active distribution and zero target") {
    const auto fed = testutil::make_federation({{0, 0}, {1, 2}});
    CHECK_THROWS_AS(greedy_dc_select({0}, fed, target_balanced(2), 1), data_error);
    CHECK_THROWS_AS(greedy_dc_select({1}, fed, LabelCounts{0, 0}, 1), data_error);
}

TEST_CASE("exhaustive with zero horizon scores the active set") {
    const auto fed = testutil::make_federation({{3, 1}, {0, 2}});
    const auto outcome = exhaustive_dc_select({0}, fed, target_balanced(2), 0);
    CHECK(outcome.added.empty());
    CHECK(outcome.achieved_distance ==
          doctest::Approx(cosine_distance(LabelCounts{3, 1}, LabelCounts{1, 1})).epsilon(1e-12));
}

TEST_CASE("exhaustive equals greedy at horizon one") {
    std::mt19937 rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        const auto fed = testutil::make_federation(random_counts(10, 3, rng));
        const LabelCounts target = trial % 2 ? target_balanced(3) : LabelCounts{4, 2, 1};
        const auto g = greedy_dc_select({0, 1}, fed, target, 1);
        const auto e = exhaustive_dc_select({0, 1}, fed, target, 1);
        CHECK(g.active == e.active);
        CHECK(g.achieved_distance == e.achieved_distance);
    }
}

TEST_CASE("exhaustive dominates greedy on random instances") {
    std::mt19937 rng(111);
    for (int trial = 0; trial < 100; ++trial) {
        const auto fed = testutil::make_federation(random_counts(11, 3, rng));
        const auto g = greedy_dc_select({0}, fed, target_balanced(3), 3);
        const auto e = exhaustive_dc_select({0}, fed, target_balanced(3), 3);
        CHECK(e.achieved_distance <= g.achieved_distance);
    }
}

TEST_CASE("exhaustive prefers smaller subsets then lower ids on ties") {
    // both singletons reach distance 0 exactly; the lower id must win
    const auto fed = testutil::make_federation({{2, 0}, {0, 2}, {0, 2}});
    const auto outcome = exhaustive_dc_select({0}, fed, LabelCounts{1, 1}, 2);
    CHECK(outcome.added == std::vector<int>{1});

    // a candidate that only matches the current distance is not added: the
    // empty subset is smaller ([3,4] and [9,12] have exact integer norms, so
    // both distances are exactly 0)
    const auto already = testutil::make_federation({{3, 4}, {6, 8}});
    const auto kept = exhaustive_dc_select({0}, already, LabelCounts{3, 4}, 1);
    CHECK(kept.added.empty());
}

TEST_CASE("exhaustive refuses oversized enumerations, naming the count") {
    std::mt19937 rng(2);
    const auto fed = testutil::make_federation(random_counts(40, 3, rng));
    try {
        exhaustive_dc_select({0}, fed, target_balanced(3), 8, 1000);
        FAIL("expected a budget refusal");
    } catch (const config_error& e) {
        CHECK(std::string(e.what()).find("subsets exceed budget") != std::string::npos);
    }
}

TEST_CASE("random augmentation: determinism, exact count, errors") {
    std::mt19937 seed_rng(4);
    const auto fed = testutil::make_federation(random_counts(100, 4, seed_rng));
    std::vector<int> active{5, 10, 15, 20, 25, 30, 35, 40, 45, 50};

    Rng a(9), b(9);
    const auto ra = random_augment(active, fed, 5, a);
    const auto rb = random_augment(active, fed, 5, b);
    CHECK(ra.added == rb.added);
    CHECK(ra.added.size() == 5);
    for (int id : ra.added)
        CHECK(std::find(active.begin(), active.end(), id) == active.end());

    Rng c(1);
    const auto unchanged = random_augment(active, fed, 0, c);
    CHECK(unchanged.active == active);
    CHECK(unchanged.added.empty());

    const auto small = testutil::make_federation({{1, 0}, {0, 1}});
    Rng d(1);
    CHECK_THROWS_AS(random_augment({0, 1}, small, 1, d), config_error);
}

TEST_CASE("no duplicate membership in any selection path") {
    std::mt19937 rng(55);
    const auto fed = testutil::make_federation(random_counts(20, 4, rng));
    const std::vector<int> base{3, 7, 11};
    Rng aug_rng(8);
    for (const auto& outcome :
         {greedy_dc_select(base, fed, target_balanced(4), 5),
          exhaustive_dc_select(base, fed, target_balanced(4), 3),
          random_augment(base, fed, 5, aug_rng, nullptr)}) {
        std::set<int> unique(outcome.active.begin(), outcome.active.end());
        CHECK(unique.size() == outcome.active.size());
        for (int id : base) CHECK(unique.count(id) == 1);
    }
}
