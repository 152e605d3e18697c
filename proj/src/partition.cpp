#include "fedsim/partition.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>

#include <json.hpp>

#include "fedsim/errors.hpp"

namespace fedsim {

std::vector<int> Federation::client_ids() const {
    std::vector<int> ids(shards.size());
    for (std::size_t i = 0; i < shards.size(); ++i) ids[i] = shards[i].client_id;
    return ids;
}

const LabelCounts& Federation::counts_of(int client_id) const {
    if (client_id < 0 || std::size_t(client_id) >= shards.size())
        throw data_error("unknown client id " + std::to_string(client_id));
    return shards[client_id].label_counts;
}

std::vector<double> sample_dirichlet(double alpha, int k, Rng& rng) {
    if (k < 1) throw config_error("dirichlet dimension must be >= 1");
    if (std::isinf(alpha)) return std::vector<double>(k, 1.0 / k);
    if (!(alpha > 0.0)) throw config_error("dirichlet alpha must be > 0");

    std::vector<double> p(k);
    std::gamma_distribution<double> gamma(alpha, 1.0);
    double sum = 0.0;
    do {
        sum = 0.0;
        for (int i = 0; i < k; ++i) {
            p[i] = gamma(rng);
            sum += p[i];
        }
        // Tiny alpha can underflow every variate to zero; redraw.
    } while (sum <= 0.0);
    for (double& v : p) v /= sum;
    return p;
}

namespace {

std::vector<std::vector<std::size_t>> indices_by_class(const Dataset& ds) {
    std::vector<std::vector<std::size_t>> by_class(ds.num_classes);
    for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds.labels[i]].push_back(i);
    return by_class;
}

// Largest-remainder apportionment of n items proportionally to shares
// (which sum to 1). Ties go to the lower index.
std::vector<std::size_t> apportion(const std::vector<double>& shares, std::size_t n) {
    const std::size_t k = shares.size();
    std::vector<std::size_t> counts(k);
    std::vector<std::pair<double, std::size_t>> remainders(k);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const double quota = shares[i] * double(n);
        counts[i] = std::size_t(std::floor(quota));
        remainders[i] = {quota - std::floor(quota), i};
        assigned += counts[i];
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        return a.first > b.first || (a.first == b.first && a.second < b.second);
    });
    for (std::size_t r = 0; assigned < n; ++r, ++assigned) ++counts[remainders[r].second];
    return counts;
}

} // namespace

Dataset apply_global_imbalance_with(const Dataset& train,
                                    const std::vector<double>& class_proportions, Rng& rng) {
    if (train.size() == 0) throw data_error("cannot imbalance an empty dataset");
    if (int(class_proportions.size()) != train.num_classes)
        throw data_error("class proportion vector length mismatch");

    const double max_p = *std::max_element(class_proportions.begin(), class_proportions.end());
    if (!(max_p > 0.0)) throw data_error("class proportions are all zero");

    auto by_class = indices_by_class(train);
    std::vector<std::size_t> kept;
    for (int q = 0; q < train.num_classes; ++q) {
        auto& idx = by_class[q];
        const double keep_fraction = class_proportions[q] / max_p;
        const auto keep = std::size_t(std::llround(keep_fraction * double(idx.size())));
        std::shuffle(idx.begin(), idx.end(), rng);
        if (keep == 0 && !idx.empty())
            std::cerr << "warning: global imbalance dropped every sample of class " << q << "\n";
        kept.insert(kept.end(), idx.begin(), idx.begin() + std::min(keep, idx.size()));
    }
    std::sort(kept.begin(), kept.end());
    return take(train, kept);
}

Dataset apply_global_imbalance(const Dataset& train, const PartitionConfig& cfg) {
    if (std::isinf(cfg.alpha_global)) return train;
    Rng rng(derive_seed(cfg.seed, 0, "global-imbalance"));
    const auto p = sample_dirichlet(cfg.alpha_global, train.num_classes, rng);
    return apply_global_imbalance_with(train, p, rng);
}

Federation dirichlet_local_partition(const Dataset& train, const PartitionConfig& cfg) {
    const std::size_t n = train.size();
    const int m = cfg.num_clients;
    if (n == 0) throw data_error("cannot partition an empty dataset");
    if (m < 1) throw config_error("need at least one client");
    if (std::size_t(m) > n)
        throw data_error("more clients (" + std::to_string(m) + ") than samples (" +
                         std::to_string(n) + ")");

    Rng rng(derive_seed(cfg.seed, 0, "local-partition"));
    const int q_classes = train.num_classes;

    // One proportion vector per client, drawn client-major.
    std::vector<std::vector<double>> proportions(m);
    for (int k = 0; k < m; ++k) proportions[k] = sample_dirichlet(cfg.alpha_local, q_classes, rng);

    Federation fed;
    fed.num_classes = q_classes;
    fed.shards.resize(m);
    for (int k = 0; k < m; ++k) {
        fed.shards[k].client_id = k;
        fed.shards[k].label_counts.assign(q_classes, 0);
    }

    auto by_class = indices_by_class(train);
    for (int q = 0; q < q_classes; ++q) {
        auto& idx = by_class[q];
        if (idx.empty()) continue;
        std::shuffle(idx.begin(), idx.end(), rng);

        std::vector<double> column(m);
        double col_sum = 0.0;
        for (int k = 0; k < m; ++k) {
            column[k] = proportions[k][q];
            col_sum += column[k];
        }
        if (col_sum > 0.0) {
            for (double& v : column) v /= col_sum;
        } else {
            std::fill(column.begin(), column.end(), 1.0 / m);
        }

        const auto counts = apportion(column, idx.size());
        std::size_t offset = 0;
        for (int k = 0; k < m; ++k) {
            auto& shard = fed.shards[k];
            shard.sample_indices.insert(shard.sample_indices.end(), idx.begin() + offset,
                                        idx.begin() + offset + counts[k]);
            shard.label_counts[q] += std::int64_t(counts[k]);
            offset += counts[k];
        }
    }

    for (auto& shard : fed.shards)
        std::sort(shard.sample_indices.begin(), shard.sample_indices.end());
    return fed;
}

void save_federation_jsonl(const Federation& federation, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot write " + path);
    for (const auto& shard : federation.shards) {
        nlohmann::json rec;
        rec["client_id"] = shard.client_id;
        rec["label_counts"] = shard.label_counts;
        rec["sample_indices"] = shard.sample_indices;
        out << rec.dump() << "\n";
    }
}

Federation load_federation_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open " + path);
    Federation fed;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw data_error(path + ": " + e.what());
        }
        ClientShard shard;
        shard.client_id = rec.at("client_id").get<int>();
        shard.label_counts = rec.at("label_counts").get<LabelCounts>();
        shard.sample_indices = rec.at("sample_indices").get<std::vector<std::size_t>>();
        fed.shards.push_back(std::move(shard));
    }
    if (fed.shards.empty()) throw data_error(path + ": no client records");
    fed.num_classes = int(fed.shards[0].label_counts.size());

    std::sort(fed.shards.begin(), fed.shards.end(),
              [](const ClientShard& a, const ClientShard& b) { return a.client_id < b.client_id; });
    for (std::size_t k = 0; k < fed.shards.size(); ++k) {
        if (fed.shards[k].client_id != int(k))
            throw data_error(path + ": client ids are not 0..M-1");
        std::int64_t total = 0;
        for (auto c : fed.shards[k].label_counts) total += c;
        if (total != fed.shards[k].num_samples())
            throw data_error(path + ": label counts do not sum to the shard size");
    }
    return fed;
}

} // namespace fedsim
