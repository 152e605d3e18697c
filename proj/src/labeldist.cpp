#include "fedsim/labeldist.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fedsim/errors.hpp"
#include "fedsim/partition.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

namespace {

// Uniform residue in [0, P) via rejection, so masks are exactly uniform.
std::uint64_t uniform_mod(Rng& rng, std::uint64_t prime) {
    const std::uint64_t limit = prime * (std::uint64_t(-1) / prime); // largest multiple of P
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % prime;
}

} // namespace

LabelCounts add(const LabelCounts& a, const LabelCounts& b) {
    if (a.size() != b.size()) throw data_error("label count length mismatch");
    LabelCounts out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

std::vector<double> to_doubles(const LabelCounts& counts) {
    return std::vector<double>(counts.begin(), counts.end());
}

LabelCounts target_balanced(int num_classes) {
    if (num_classes < 2) throw config_error("balanced target needs at least 2 classes");
    return LabelCounts(num_classes, 1);
}

LabelCounts target_real(const Federation& federation, bool via_secure_agg,
                        std::uint64_t mask_seed) {
    if (federation.shards.empty()) throw data_error("federation is empty");
    std::vector<LabelCounts> shares;
    shares.reserve(federation.shards.size());
    for (const auto& shard : federation.shards) shares.push_back(shard.label_counts);
    if (via_secure_agg && shares.size() >= 2)
        return secure_aggregate(shares, kSecureAggPrime, mask_seed);
    LabelCounts total(federation.num_classes, 0);
    for (const auto& s : shares) total = add(total, s);
    return total;
}

LabelCounts secure_aggregate(const std::vector<LabelCounts>& shares, std::uint64_t prime,
                             std::uint64_t seed,
                             std::vector<std::vector<std::uint64_t>>* submissions_out) {
    const std::size_t n = shares.size();
    if (n < 2) throw config_error("secure aggregation needs at least 2 participants");
    const std::size_t q = shares[0].size();
    for (const auto& s : shares) {
        if (s.size() != q) throw data_error("secure aggregation: length mismatch");
        for (std::int64_t v : s) {
            if (v < 0) throw data_error("secure aggregation: negative count");
            if (std::uint64_t(v) >= prime / n)
                throw data_error("secure aggregation: count too large for field size");
        }
    }

    // Submissions start from the raw counts; each pair seed adds a mask to
    // the lower-id participant and subtracts it from the higher-id one.
    std::vector<std::vector<std::uint64_t>> sub(n, std::vector<std::uint64_t>(q));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < q; ++c) sub[i][c] = std::uint64_t(shares[i][c]) % prime;

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            Rng pair_rng(splitmix64(splitmix64(seed ^ (std::uint64_t(i) << 32)) ^ j));
            for (std::size_t c = 0; c < q; ++c) {
                const std::uint64_t m = uniform_mod(pair_rng, prime);
                sub[i][c] = (sub[i][c] + m) % prime;
                sub[j][c] = (sub[j][c] + prime - m) % prime;
            }
        }
    }

    LabelCounts total(q, 0);
    for (std::size_t c = 0; c < q; ++c) {
        std::uint64_t acc = 0;
        for (std::size_t i = 0; i < n; ++i) acc = (acc + sub[i][c]) % prime;
        total[c] = std::int64_t(acc);
    }
    if (submissions_out) *submissions_out = std::move(sub);
    return total;
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw data_error("cosine distance: length mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0)
        throw data_error("cosine distance undefined for a zero vector");
    const double cos = std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
    return 1.0 - cos;
}

double cosine_distance(const LabelCounts& a, const LabelCounts& b) {
    const auto da = to_doubles(a);
    const auto db = to_doubles(b);
    return cosine_distance(std::span<const double>(da), std::span<const double>(db));
}

} // namespace fedsim
