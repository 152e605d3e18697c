// fedsim: federated-learning simulator with distribution-controlled client
// selection. Subcommands: partition, run, sweep, report.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <omp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "fedsim/config.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/eval.hpp"
#include "fedsim/orchestrator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliOverrides {
    std::string config_path;
    std::string out_dir;
    int jobs = 0;
    int rounds = 0;
    int repeats = 0;
    std::uint64_t master_seed = 0;
    bool master_seed_set = false;
    std::string strategy, target, mode;
    int m = 0, m_dc = -1;
    std::string alpha_local, alpha_global;
    std::string save_params_path;
};

void add_common_options(CLI::App* cmd, CliOverrides& o) {
    cmd->add_option("-c,--config", o.config_path, "JSON config file")->required();
    cmd->add_option("-o,--out", o.out_dir, "output directory (overrides output.dir)");
    cmd->add_option("-j,--jobs", o.jobs, "worker threads (overrides run.jobs)");
    cmd->add_option("--rounds", o.rounds, "training rounds (overrides run.rounds)");
    cmd->add_option("--repeats", o.repeats, "repeats per cell (overrides run.repeats)");
    cmd->add_option("--seed", o.master_seed, "master seed (overrides run.master_seed)")
        ->each([&o](const std::string&) { o.master_seed_set = true; });
    cmd->add_option("--strategy", o.strategy, "FedAvg|FedAtt|FedProx");
    cmd->add_option("--target", o.target, "none|real|balanced");
    cmd->add_option("--mode", o.mode, "none|greedy|exhaustive|random");
    cmd->add_option("--m", o.m, "base clients per round");
    cmd->add_option("--mdc", o.m_dc, "maximum added clients");
    cmd->add_option("--alpha-local", o.alpha_local, "local imbalance alpha or 'inf'");
    cmd->add_option("--alpha-global", o.alpha_global, "global imbalance alpha or 'inf'");
}

double parse_alpha_flag(const std::string& s, const char* name) {
    if (s == "inf") return fedsim::kAlphaInf;
    try {
        const double v = std::stod(s);
        if (v > 0) return v;
    } catch (...) {
    }
    throw fedsim::config_error(std::string(name) + " must be a positive number or 'inf'");
}

fedsim::ExperimentSpec load_spec(const CliOverrides& o) {
    auto spec = fedsim::ExperimentSpec::from_file(o.config_path);
    if (!o.out_dir.empty()) spec.output_dir = o.out_dir;
    if (o.jobs > 0) spec.jobs = o.jobs;
    if (o.rounds > 0) spec.run.rounds = o.rounds;
    if (o.repeats > 0) spec.run.repeats = o.repeats;
    if (o.master_seed_set) spec.run.master_seed = o.master_seed;
    if (!o.strategy.empty()) spec.run.strategy.kind = fedsim::parse_strategy(o.strategy);
    if (!o.target.empty()) spec.run.selection.target = fedsim::parse_target(o.target);
    if (!o.mode.empty()) {
        if (o.mode == "none") spec.run.selection.mode = fedsim::SelectionMode::None;
        else if (o.mode == "greedy") spec.run.selection.mode = fedsim::SelectionMode::Greedy;
        else if (o.mode == "exhaustive") spec.run.selection.mode = fedsim::SelectionMode::Exhaustive;
        else if (o.mode == "random") spec.run.selection.mode = fedsim::SelectionMode::RandomAugment;
        else throw fedsim::config_error("unknown --mode '" + o.mode + "'");
    }
    if (o.m > 0) spec.run.selection.base_clients = o.m;
    if (o.m_dc >= 0) spec.run.selection.max_added = o.m_dc;
    if (!o.alpha_local.empty())
        spec.run.partition.alpha_local = parse_alpha_flag(o.alpha_local, "--alpha-local");
    if (!o.alpha_global.empty())
        spec.run.partition.alpha_global = parse_alpha_flag(o.alpha_global, "--alpha-global");
    omp_set_num_threads(std::max(1, spec.jobs));
    return spec;
}

fs::path make_run_dir(const fedsim::ExperimentSpec& spec) {
    fs::path dir = fs::path(spec.output_dir) / spec.config_hash();
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw fedsim::data_error("cannot write " + path.string());
    out << text;
}

int cmd_partition(const CliOverrides& o) {
    const auto spec = load_spec(o);
    const auto dir = make_run_dir(spec);

    fedsim::MlpConfig model;
    auto data = fedsim::prepare_data(spec, &model);
    const auto imbalanced = fedsim::apply_global_imbalance(data.train, spec.run.partition);
    const auto federation = fedsim::dirichlet_local_partition(imbalanced, spec.run.partition);

    const auto fed_path = dir / "federation.jsonl";
    fedsim::save_federation_jsonl(federation, fed_path.string());

    json manifest;
    manifest["config_hash"] = spec.config_hash();
    manifest["dataset"] = data.name;
    manifest["train_samples"] = imbalanced.size();
    manifest["clients"] = spec.run.partition.num_clients;
    manifest["alpha_local"] = std::isinf(spec.run.partition.alpha_local)
                                  ? json("inf")
                                  : json(spec.run.partition.alpha_local);
    manifest["alpha_global"] = std::isinf(spec.run.partition.alpha_global)
                                   ? json("inf")
                                   : json(spec.run.partition.alpha_global);
    manifest["seed"] = spec.run.partition.seed;
    manifest["federation_checksum"] = fedsim::file_checksum(fed_path.string());
    json totals = json::array();
    for (const auto& shard : federation.shards) totals.push_back(shard.num_samples());
    manifest["client_totals"] = totals;
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");

    std::cout << "federation written to " << fed_path.string() << "\n";
    std::cout << "checksum " << manifest["federation_checksum"].get<std::string>() << "\n";
    return 0;
}

// Validates a loaded federation against the dataset it indexes.
void check_federation(const fedsim::Federation& fed, const fedsim::Dataset& train) {
    for (const auto& shard : fed.shards) {
        fedsim::LabelCounts counts(train.num_classes, 0);
        for (std::size_t idx : shard.sample_indices) {
            if (idx >= train.size())
                throw fedsim::data_error("federation file indexes outside the training set");
            ++counts[train.labels[idx]];
        }
        if (counts != shard.label_counts)
            throw fedsim::data_error("federation label counts do not match the dataset (client " +
                                     std::to_string(shard.client_id) + ")");
    }
}

int cmd_run(const CliOverrides& o) {
    const auto started = std::chrono::steady_clock::now();
    const auto spec = load_spec(o);
    const auto dir = make_run_dir(spec);

    fedsim::MlpConfig model;
    auto data = fedsim::prepare_data(spec, &model);
    const auto train = fedsim::apply_global_imbalance(data.train, spec.run.partition);

    fedsim::Federation federation;
    if (!spec.federation_file.empty()) {
        federation = fedsim::load_federation_jsonl(spec.federation_file);
        check_federation(federation, train);
    } else {
        federation = fedsim::dirichlet_local_partition(train, spec.run.partition);
    }

    fedsim::RunConfig cfg = spec.run;
    cfg.model = model;

    fedsim::RunSummary summary;
    fedsim::ModelParams final_params;
    const auto logs = fedsim::run_federated(cfg, federation, train, data.test, &summary,
                                            &final_params);
    fedsim::write_round_logs_jsonl(logs, (dir / "rounds.jsonl").string());
    if (!o.save_params_path.empty()) fedsim::save_params(final_params, o.save_params_path);

    json s;
    s["config_hash"] = spec.config_hash();
    s["dataset"] = data.name;
    s["rounds"] = summary.rounds;
    s["initial_f1"] = summary.initial_f1;
    s["final_f1"] = summary.final_f1;
    s["best_f1"] = summary.best_f1;
    s["best_round"] = summary.best_round;
    write_text(dir / "summary.json", s.dump(2) + "\n");

    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    std::cout << "final F1 " << summary.final_f1 << ", best F1 " << summary.best_f1 << " (round "
              << summary.best_round << "), " << secs << " s\n";
    std::cout << "logs in " << dir.string() << "\n";
    return 0;
}

int cmd_sweep(const CliOverrides& o) {
    const auto started = std::chrono::steady_clock::now();
    const auto spec = load_spec(o);
    if (!spec.has_sweep) throw fedsim::config_error("config has no 'sweep' section");
    const auto dir = make_run_dir(spec);

    fedsim::MlpConfig model;
    auto data = fedsim::prepare_data(spec, &model);
    fedsim::RunConfig base = spec.run;
    base.model = model;

    const fs::path cells_dir = dir / "cells";
    fs::create_directories(cells_dir);
    auto sink = [&](const fedsim::CellRunId& id, const std::vector<fedsim::RoundLog>& logs,
                    const fedsim::RunSummary&) {
        const fs::path cell_dir = cells_dir / id.key();
        fs::create_directories(cell_dir);
        fedsim::write_round_logs_jsonl(logs, (cell_dir / "rounds.jsonl").string());
    };

    const auto cells = fedsim::run_grid(base, data.train, data.test, spec.sweep, data.name, sink);
    fedsim::write_results_csv(cells, (dir / "results.csv").string());

    std::vector<fedsim::ResultCell> baseline, dc;
    for (const auto& c : cells)
        (c.target == fedsim::TargetKind::None ? baseline : dc).push_back(c);
    if (!baseline.empty() && !dc.empty())
        fedsim::write_delta_csv(fedsim::improvement_report(baseline, dc),
                                (dir / "deltas.csv").string());

    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    std::cout << cells.size() << " cells in " << secs << " s\n";
    std::cout << "results in " << dir.string() << "\n";
    return 0;
}

struct ReportArgs {
    std::string results_path;
    std::string out_path;
};

int cmd_report(const ReportArgs& a) {
    const auto cells = fedsim::read_results_csv(a.results_path);
    std::vector<fedsim::ResultCell> baseline, dc;
    for (const auto& c : cells)
        (c.target == fedsim::TargetKind::None ? baseline : dc).push_back(c);
    if (baseline.empty() || dc.empty())
        throw fedsim::data_error("results need both baseline (target none) and DC rows");
    fedsim::write_delta_csv(fedsim::improvement_report(baseline, dc), a.out_path);
    std::cout << "deltas written to " << a.out_path << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"federated-learning simulator with distribution-controlled client selection"};
    app.require_subcommand(1);
    app.footer(
        "config file keys (JSON; defaults in parentheses):\n"
        "  dataset.kind (synthetic)      mnist | covtype | synthetic\n"
        "  dataset.images, dataset.labels  IDX file lists for mnist\n"
        "  dataset.csv                   covtype CSV path\n"
        "  dataset.classes (2), dataset.feature_dim (54), dataset.per_class (10000),\n"
        "  dataset.separation (1.5), dataset.seed (0)   synthetic generator\n"
        "  dataset.train_fraction (0.8), dataset.split_seed (0)\n"
        "  dataset.train_subsample (0), dataset.test_subsample (0)   0 = keep all\n"
        "  partition.clients (100), partition.alpha_local (2), partition.alpha_global (2),\n"
        "  partition.seed (0), partition.federation_file (unset)\n"
        "  model.hidden ([45,30,15]), model.dropout (0.2)\n"
        "  strategy.kind (FedAvg), strategy.mu (0.01), strategy.epsilon (1.2)\n"
        "  selection.m (10), selection.m_dc (5), selection.target (none),\n"
        "  selection.mode (none), selection.seed (0)\n"
        "  run.rounds (100), run.epochs (3), run.batch (32), run.eta (0.05),\n"
        "  run.repeats (3), run.master_seed (42), run.jobs (1)\n"
        "  sweep.axis, sweep.values, sweep.strategies, sweep.targets,\n"
        "  sweep.repartition_per_repeat (false)\n"
        "  output.dir (runs)\n"
        "flags override config keys; alpha values accept \"inf\".");

    CliOverrides part_o, run_o, sweep_o;
    ReportArgs report_a;

    auto* partition = app.add_subcommand("partition", "partition a dataset across clients");
    add_common_options(partition, part_o);

    auto* run = app.add_subcommand("run", "one federated training run");
    add_common_options(run, run_o);
    run->add_option("--save-params", run_o.save_params_path, "write final params to this file");

    auto* sweep = app.add_subcommand("sweep", "run the configured experiment grid");
    add_common_options(sweep, sweep_o);

    auto* report = app.add_subcommand("report", "improvement deltas from a results CSV");
    report->add_option("-r,--results", report_a.results_path, "results.csv from a sweep")
        ->required();
    report->add_option("-o,--out", report_a.out_path, "output delta CSV")->required();

    try {
        app.parse(argc, argv);
        if (partition->parsed()) return cmd_partition(part_o);
        if (run->parsed()) return cmd_run(run_o);
        if (sweep->parsed()) return cmd_sweep(sweep_o);
        if (report->parsed()) return cmd_report(report_a);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const fedsim::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const fedsim::divergence_error& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return 3;
    } catch (const fedsim::data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
