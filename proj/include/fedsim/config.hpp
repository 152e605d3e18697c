#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "fedsim/dataset.hpp"
#include "fedsim/eval.hpp"
#include "fedsim/orchestrator.hpp"

namespace fedsim {

struct DatasetSpec {
    std::string kind = "synthetic"; // mnist | covtype | synthetic
    std::vector<std::string> image_files; // mnist
    std::vector<std::string> label_files; // mnist
    std::string csv_path;                 // covtype
    int classes = 2;                      // synthetic
    int feature_dim = 54;                 // synthetic
    int per_class = 10000;                // synthetic
    double separation = 1.5;              // synthetic
    std::uint64_t seed = 0;               // synthetic
    double train_fraction = 0.8;
    std::uint64_t split_seed = 0;
    std::size_t train_subsample = 0; // 0 = keep everything
    std::size_t test_subsample = 0;
};

// The whole experiment description: dataset, partition, model, strategy,
// selection, run, and optional sweep sections. Defaults follow the reference
// setup (T=100, M=100, m=10, m_DC=5, E=3, alphas 2).
struct ExperimentSpec {
    DatasetSpec dataset;
    RunConfig run;             // includes partition/model/strategy/selection
    std::vector<int> hidden = {45, 30, 15};
    double dropout = 0.2;
    GridSpec sweep;
    bool has_sweep = false;
    std::string output_dir = "runs";
    std::string federation_file; // when set, `run` loads this instead of partitioning
    int jobs = 1;

    static ExperimentSpec from_json(const nlohmann::json& j);
    static ExperimentSpec from_file(const std::string& path);

    // Canonical JSON of the effective configuration (after overrides); the
    // config hash is the FNV-1a of its dump.
    nlohmann::json to_json() const;
    std::string config_hash() const;
};

// Loads or generates the dataset, splits it, applies optional subsamples,
// and resolves the model layer list. Returns (train, test, name).
struct PreparedData {
    Dataset train;
    Dataset test;
    std::string name;
};
PreparedData prepare_data(const ExperimentSpec& spec, MlpConfig* model_out);

std::string fnv1a_hex(const std::string& bytes);
std::string file_checksum(const std::string& path);

} // namespace fedsim
