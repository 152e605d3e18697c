#pragma once

// Shared fixtures and independent oracles. Everything here is deliberately
// written from scratch (no calls into the code paths under test) so the
// oracle side of each comparison stays independent.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "fedsim/dataset.hpp"
#include "fedsim/partition.hpp"

namespace testutil {

// ---- IDX fixture writer ----------------------------------------------------

inline void write_be32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<char*>(b), 4);
}

// Writes an IDX image/label pair; images are 28x28 with the given bytes.
inline void write_idx_pair(const std::string& images_path, const std::string& labels_path,
                           const std::vector<std::vector<unsigned char>>& images,
                           const std::vector<unsigned char>& labels,
                           std::uint32_t images_magic = 0x00000803,
                           std::uint32_t labels_magic = 0x00000801) {
    std::ofstream img(images_path, std::ios::binary);
    write_be32(img, images_magic);
    write_be32(img, std::uint32_t(images.size()));
    write_be32(img, 28);
    write_be32(img, 28);
    for (const auto& image : images)
        img.write(reinterpret_cast<const char*>(image.data()), std::streamsize(image.size()));

    std::ofstream lab(labels_path, std::ios::binary);
    write_be32(lab, labels_magic);
    write_be32(lab, std::uint32_t(labels.size()));
    lab.write(reinterpret_cast<const char*>(labels.data()), std::streamsize(labels.size()));
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        static std::atomic<int> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("fedsim_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

// ---- independent gamma sampler (Marsaglia-Tsang with boost for a<1) --------

inline double oracle_gamma(double alpha, std::mt19937& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    double boost = 1.0;
    double a = alpha;
    if (a < 1.0) {
        boost = std::pow(uniform(rng), 1.0 / a);
        a += 1.0;
    }
    const double d = a - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
        double x, v;
        do {
            x = normal(rng);
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform(rng);
        if (u < 1.0 - 0.0331 * x * x * x * x) return boost * d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return boost * d * v;
    }
}

inline std::vector<double> oracle_dirichlet(double alpha, int k, std::mt19937& rng) {
    std::vector<double> p(k);
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
        p[i] = oracle_gamma(alpha, rng);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

// ---- independent cosine distance -------------------------------------------

inline double oracle_cosine_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

// ---- independent weighted F1 via a full confusion matrix -------------------

inline double oracle_weighted_f1(const std::vector<int>& pred, const std::vector<int>& label,
                                 int q) {
    std::vector<std::vector<std::int64_t>> cm(q, std::vector<std::int64_t>(q, 0));
    for (std::size_t i = 0; i < pred.size(); ++i) ++cm[label[i]][pred[i]];
    double total = double(pred.size());
    double score = 0.0;
    for (int c = 0; c < q; ++c) {
        std::int64_t tp = cm[c][c], support = 0, predicted = 0;
        for (int r = 0; r < q; ++r) {
            support += cm[c][r];
            predicted += cm[r][c];
        }
        if (support == 0) continue;
        double prec = predicted > 0 ? double(tp) / double(predicted) : 0.0;
        double rec = double(tp) / double(support);
        double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
        score += f1 * double(support) / total;
    }
    return score;
}

// ---- small random federations ----------------------------------------------

// A federation made of explicit per-client label counts; sample indices are
// synthesized consecutively so conservation holds by construction.
inline fedsim::Federation make_federation(const std::vector<fedsim::LabelCounts>& counts) {
    fedsim::Federation fed;
    fed.num_classes = int(counts[0].size());
    std::size_t next = 0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        fedsim::ClientShard shard;
        shard.client_id = int(k);
        shard.label_counts = counts[k];
        std::int64_t total = 0;
        for (auto c : counts[k]) total += c;
        for (std::int64_t i = 0; i < total; ++i) shard.sample_indices.push_back(next++);
        fed.shards.push_back(std::move(shard));
    }
    return fed;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace testutil
