#include "fedsim/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "fedsim/errors.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

namespace {

using nlohmann::json;

[[noreturn]] void bad_key(const std::string& section, const std::string& key,
                          const std::string& why) {
    throw config_error("config key '" + section + "." + key + "': " + why);
}

// Reads alpha values that may be the string "inf" or a positive number.
double read_alpha(const json& j, const std::string& section, const std::string& key,
                  double fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (v.is_string()) {
        if (v.get<std::string>() == "inf") return kAlphaInf;
        bad_key(section, key, "expected a positive number or \"inf\"");
    }
    if (!v.is_number()) bad_key(section, key, "expected a positive number or \"inf\"");
    const double a = v.get<double>();
    if (!(a > 0.0)) bad_key(section, key, "must be > 0");
    return a;
}

template <typename T>
T read_or(const json& j, const std::string& section, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        bad_key(section, key, "wrong type");
    }
}

void reject_unknown(const json& j, const std::string& section,
                    const std::vector<std::string>& known) {
    for (const auto& [key, value] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw config_error("unknown config key '" + section + "." + key + "'");
    }
}

json alpha_json(double a) {
    if (std::isinf(a)) return "inf";
    return a;
}

SelectionMode parse_mode(const std::string& s) {
    if (s == "none" || s == "None") return SelectionMode::None;
    if (s == "greedy" || s == "Greedy") return SelectionMode::Greedy;
    if (s == "exhaustive" || s == "Exhaustive") return SelectionMode::Exhaustive;
    if (s == "random" || s == "RandomAugment" || s == "random_augment")
        return SelectionMode::RandomAugment;
    throw config_error("unknown selection mode '" + s +
                       "' (expected none|greedy|exhaustive|random)");
}

std::string mode_name(SelectionMode m) {
    switch (m) {
        case SelectionMode::None: return "none";
        case SelectionMode::Greedy: return "greedy";
        case SelectionMode::Exhaustive: return "exhaustive";
        case SelectionMode::RandomAugment: return "random";
    }
    return "?";
}

} // namespace

ExperimentSpec ExperimentSpec::from_json(const json& j) {
    ExperimentSpec spec;
    reject_unknown(j, "",
                   {"dataset", "partition", "model", "strategy", "selection", "run", "sweep",
                    "output"});

    if (j.contains("dataset")) {
        const auto& d = j.at("dataset");
        reject_unknown(d, "dataset",
                       {"kind", "images", "labels", "csv", "classes", "feature_dim", "per_class",
                        "separation", "seed", "train_fraction", "split_seed", "train_subsample",
                        "test_subsample"});
        spec.dataset.kind = read_or<std::string>(d, "dataset", "kind", spec.dataset.kind);
        if (spec.dataset.kind != "mnist" && spec.dataset.kind != "covtype" &&
            spec.dataset.kind != "synthetic")
            bad_key("dataset", "kind", "expected mnist|covtype|synthetic");
        spec.dataset.image_files =
            read_or<std::vector<std::string>>(d, "dataset", "images", {});
        spec.dataset.label_files =
            read_or<std::vector<std::string>>(d, "dataset", "labels", {});
        spec.dataset.csv_path = read_or<std::string>(d, "dataset", "csv", "");
        spec.dataset.classes = read_or<int>(d, "dataset", "classes", spec.dataset.classes);
        spec.dataset.feature_dim =
            read_or<int>(d, "dataset", "feature_dim", spec.dataset.feature_dim);
        spec.dataset.per_class = read_or<int>(d, "dataset", "per_class", spec.dataset.per_class);
        spec.dataset.separation =
            read_or<double>(d, "dataset", "separation", spec.dataset.separation);
        spec.dataset.seed = read_or<std::uint64_t>(d, "dataset", "seed", spec.dataset.seed);
        spec.dataset.train_fraction =
            read_or<double>(d, "dataset", "train_fraction", spec.dataset.train_fraction);
        spec.dataset.split_seed =
            read_or<std::uint64_t>(d, "dataset", "split_seed", spec.dataset.split_seed);
        spec.dataset.train_subsample =
            read_or<std::size_t>(d, "dataset", "train_subsample", 0);
        spec.dataset.test_subsample = read_or<std::size_t>(d, "dataset", "test_subsample", 0);
    }

    if (j.contains("partition")) {
        const auto& p = j.at("partition");
        reject_unknown(p, "partition",
                       {"clients", "alpha_local", "alpha_global", "seed", "federation_file"});
        spec.run.partition.num_clients =
            read_or<int>(p, "partition", "clients", spec.run.partition.num_clients);
        spec.run.partition.alpha_local =
            read_alpha(p, "partition", "alpha_local", spec.run.partition.alpha_local);
        spec.run.partition.alpha_global =
            read_alpha(p, "partition", "alpha_global", spec.run.partition.alpha_global);
        spec.run.partition.seed =
            read_or<std::uint64_t>(p, "partition", "seed", spec.run.partition.seed);
        spec.federation_file = read_or<std::string>(p, "partition", "federation_file", "");
    }

    if (j.contains("model")) {
        const auto& m = j.at("model");
        reject_unknown(m, "model", {"hidden", "dropout"});
        spec.hidden = read_or<std::vector<int>>(m, "model", "hidden", spec.hidden);
        if (spec.hidden.empty()) bad_key("model", "hidden", "needs at least one hidden layer");
        spec.dropout = read_or<double>(m, "model", "dropout", spec.dropout);
    }

    if (j.contains("strategy")) {
        const auto& s = j.at("strategy");
        reject_unknown(s, "strategy", {"kind", "mu", "epsilon"});
        spec.run.strategy.kind =
            parse_strategy(read_or<std::string>(s, "strategy", "kind", "FedAvg"));
        spec.run.strategy.mu = read_or<double>(s, "strategy", "mu", spec.run.strategy.mu);
        spec.run.strategy.epsilon =
            read_or<double>(s, "strategy", "epsilon", spec.run.strategy.epsilon);
        if (spec.run.strategy.mu < 0) bad_key("strategy", "mu", "must be >= 0");
        if (!(spec.run.strategy.epsilon > 0)) bad_key("strategy", "epsilon", "must be > 0");
    }

    if (j.contains("selection")) {
        const auto& s = j.at("selection");
        reject_unknown(s, "selection", {"m", "m_dc", "target", "mode", "seed"});
        spec.run.selection.base_clients =
            read_or<int>(s, "selection", "m", spec.run.selection.base_clients);
        spec.run.selection.max_added =
            read_or<int>(s, "selection", "m_dc", spec.run.selection.max_added);
        spec.run.selection.target =
            parse_target(read_or<std::string>(s, "selection", "target", "none"));
        spec.run.selection.mode = parse_mode(read_or<std::string>(s, "selection", "mode", "none"));
        spec.run.selection.seed = read_or<std::uint64_t>(s, "selection", "seed", 0);
    }

    if (j.contains("run")) {
        const auto& r = j.at("run");
        reject_unknown(r, "run",
                       {"rounds", "epochs", "batch", "eta", "repeats", "master_seed", "jobs"});
        spec.run.rounds = read_or<int>(r, "run", "rounds", spec.run.rounds);
        spec.run.local_epochs = read_or<int>(r, "run", "epochs", spec.run.local_epochs);
        spec.run.batch_size = read_or<int>(r, "run", "batch", spec.run.batch_size);
        spec.run.eta = read_or<double>(r, "run", "eta", spec.run.eta);
        spec.run.repeats = read_or<int>(r, "run", "repeats", spec.run.repeats);
        spec.run.master_seed = read_or<std::uint64_t>(r, "run", "master_seed", spec.run.master_seed);
        spec.jobs = read_or<int>(r, "run", "jobs", spec.jobs);
    }

    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        reject_unknown(s, "sweep",
                       {"axis", "values", "strategies", "targets", "repartition_per_repeat"});
        spec.has_sweep = true;
        spec.sweep.axis = parse_axis(read_or<std::string>(s, "sweep", "axis", "alpha_local"));
        if (!s.contains("values") || !s.at("values").is_array() || s.at("values").empty())
            bad_key("sweep", "values", "expected a non-empty array");
        for (const auto& v : s.at("values")) {
            if (v.is_string() && v.get<std::string>() == "inf")
                spec.sweep.values.push_back(kAlphaInf);
            else if (v.is_number())
                spec.sweep.values.push_back(v.get<double>());
            else
                bad_key("sweep", "values", "entries must be numbers or \"inf\"");
        }
        const auto strategies = read_or<std::vector<std::string>>(
            s, "sweep", "strategies", {"FedAvg"});
        for (const auto& name : strategies) spec.sweep.strategies.push_back(parse_strategy(name));
        const auto targets =
            read_or<std::vector<std::string>>(s, "sweep", "targets", {"none"});
        for (const auto& name : targets) spec.sweep.targets.push_back(parse_target(name));
        spec.sweep.repartition_per_repeat =
            read_or<bool>(s, "sweep", "repartition_per_repeat", false);
    }

    if (j.contains("output")) {
        const auto& o = j.at("output");
        reject_unknown(o, "output", {"dir"});
        spec.output_dir = read_or<std::string>(o, "output", "dir", spec.output_dir);
    }

    return spec;
}

ExperimentSpec ExperimentSpec::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw config_error(path + ": " + e.what());
    }
    return from_json(j);
}

nlohmann::json ExperimentSpec::to_json() const {
    json j;
    j["dataset"]["kind"] = dataset.kind;
    if (!dataset.image_files.empty()) j["dataset"]["images"] = dataset.image_files;
    if (!dataset.label_files.empty()) j["dataset"]["labels"] = dataset.label_files;
    if (!dataset.csv_path.empty()) j["dataset"]["csv"] = dataset.csv_path;
    if (dataset.kind == "synthetic") {
        j["dataset"]["classes"] = dataset.classes;
        j["dataset"]["feature_dim"] = dataset.feature_dim;
        j["dataset"]["per_class"] = dataset.per_class;
        j["dataset"]["separation"] = dataset.separation;
        j["dataset"]["seed"] = dataset.seed;
    }
    j["dataset"]["train_fraction"] = dataset.train_fraction;
    j["dataset"]["split_seed"] = dataset.split_seed;
    if (dataset.train_subsample) j["dataset"]["train_subsample"] = dataset.train_subsample;
    if (dataset.test_subsample) j["dataset"]["test_subsample"] = dataset.test_subsample;

    j["partition"]["clients"] = run.partition.num_clients;
    j["partition"]["alpha_local"] = alpha_json(run.partition.alpha_local);
    j["partition"]["alpha_global"] = alpha_json(run.partition.alpha_global);
    j["partition"]["seed"] = run.partition.seed;
    if (!federation_file.empty()) j["partition"]["federation_file"] = federation_file;

    j["model"]["hidden"] = hidden;
    j["model"]["dropout"] = dropout;

    j["strategy"]["kind"] = strategy_name(run.strategy.kind);
    j["strategy"]["mu"] = run.strategy.mu;
    j["strategy"]["epsilon"] = run.strategy.epsilon;

    j["selection"]["m"] = run.selection.base_clients;
    j["selection"]["m_dc"] = run.selection.max_added;
    j["selection"]["target"] = target_name(run.selection.target);
    j["selection"]["mode"] = mode_name(run.selection.mode);
    j["selection"]["seed"] = run.selection.seed;

    j["run"]["rounds"] = run.rounds;
    j["run"]["epochs"] = run.local_epochs;
    j["run"]["batch"] = run.batch_size;
    j["run"]["eta"] = run.eta;
    j["run"]["repeats"] = run.repeats;
    j["run"]["master_seed"] = run.master_seed;
    j["run"]["jobs"] = jobs;

    if (has_sweep) {
        j["sweep"]["axis"] = axis_name(sweep.axis);
        auto values = json::array();
        for (double v : sweep.values) values.push_back(alpha_json(v));
        j["sweep"]["values"] = values;
        auto strategies = json::array();
        for (auto s : sweep.strategies) strategies.push_back(strategy_name(s));
        j["sweep"]["strategies"] = strategies;
        auto targets = json::array();
        for (auto t : sweep.targets) targets.push_back(target_name(t));
        j["sweep"]["targets"] = targets;
        j["sweep"]["repartition_per_repeat"] = sweep.repartition_per_repeat;
    }

    j["output"]["dir"] = output_dir;
    return j;
}

std::string fnv1a_hex(const std::string& bytes) {
    const std::uint64_t h = fnv1a64(bytes);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

std::string ExperimentSpec::config_hash() const { return fnv1a_hex(to_json().dump()); }

std::string file_checksum(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return fnv1a_hex(ss.str());
}

PreparedData prepare_data(const ExperimentSpec& spec, MlpConfig* model_out) {
    Dataset pool;
    std::string name = spec.dataset.kind;
    if (spec.dataset.kind == "synthetic") {
        pool = generate_synthetic(spec.dataset.classes, spec.dataset.feature_dim,
                                  spec.dataset.per_class, spec.dataset.separation,
                                  spec.dataset.seed);
    } else if (spec.dataset.kind == "covtype") {
        if (spec.dataset.csv_path.empty())
            throw config_error("dataset.csv is required for covtype");
        pool = load_covtype_csv(spec.dataset.csv_path);
    } else if (spec.dataset.kind == "mnist") {
        if (spec.dataset.image_files.empty() ||
            spec.dataset.image_files.size() != spec.dataset.label_files.size())
            throw config_error("dataset.images and dataset.labels must list matching IDX files");
        pool = load_mnist_idx(spec.dataset.image_files[0], spec.dataset.label_files[0]);
        for (std::size_t i = 1; i < spec.dataset.image_files.size(); ++i)
            pool = merge(pool,
                         load_mnist_idx(spec.dataset.image_files[i], spec.dataset.label_files[i]));
    }

    auto [train, test] = train_test_split(pool, spec.dataset.train_fraction,
                                          spec.dataset.split_seed);
    if (spec.dataset.train_subsample)
        train = subsample(train, spec.dataset.train_subsample,
                          derive_seed(spec.dataset.split_seed, 0, "train-subsample"));
    if (spec.dataset.test_subsample)
        test = subsample(test, spec.dataset.test_subsample,
                         derive_seed(spec.dataset.split_seed, 0, "test-subsample"));

    if (model_out) {
        model_out->layer_sizes.clear();
        model_out->layer_sizes.push_back(int(train.feature_dim()));
        for (int h : spec.hidden) model_out->layer_sizes.push_back(h);
        model_out->layer_sizes.push_back(train.num_classes);
        model_out->dropout_rate = spec.dropout;
        model_out->validate();
    }
    return {std::move(train), std::move(test), std::move(name)};
}

} // namespace fedsim
