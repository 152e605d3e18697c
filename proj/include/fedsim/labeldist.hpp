#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace fedsim {

struct Federation;

// Per-class sample counts. Client-derived vectors are exact integers; the
// cosine distance converts to double at the boundary.
using LabelCounts = std::vector<std::int64_t>;

// Field size for the secure-aggregation simulation: the Mersenne prime
// 2^61 - 1, large enough for any realistic count sum and cheap in 64-bit
// arithmetic.
constexpr std::uint64_t kSecureAggPrime = (std::uint64_t(1) << 61) - 1;

LabelCounts add(const LabelCounts& a, const LabelCounts& b);

// Federation-wide label counts (componentwise sum over all clients). With
// via_secure_agg set and >= 2 clients the sum is produced through the masked
// protocol below and equals the plain sum exactly.
LabelCounts target_real(const Federation& federation, bool via_secure_agg,
                        std::uint64_t mask_seed = 0);

// The all-ones vector of length num_classes.
LabelCounts target_balanced(int num_classes);

// Pairwise-masking secure aggregation (simulation). Every pair (i,j), i<j,
// derives a shared mask vector from a pairwise seed; client i submits
// (V_i + sum_{j>i} m_ij - sum_{j<i} m_ji) mod P. Masks cancel in the modular
// sum, so the result equals sum_i V_i exactly while each submission is
// uniform mod P. Requires >= 2 participants and every component < P/n.
// When submissions_out is non-null the server-visible submissions are
// exported (for inspection in tests).
LabelCounts secure_aggregate(const std::vector<LabelCounts>& shares, std::uint64_t prime,
                             std::uint64_t seed,
                             std::vector<std::vector<std::uint64_t>>* submissions_out = nullptr);

// 1 - a.b / (|a||b|). The cosine is clamped to [-1,1] before subtracting, so
// nonnegative inputs always land in [0,1]. Zero vectors are an error.
double cosine_distance(std::span<const double> a, std::span<const double> b);
double cosine_distance(const LabelCounts& a, const LabelCounts& b);

std::vector<double> to_doubles(const LabelCounts& counts);

} // namespace fedsim
