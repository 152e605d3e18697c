#include "fedsim/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fedsim/errors.hpp"

namespace fedsim {

double weighted_f1(std::span<const int> predictions, std::span<const int> labels,
                   int num_classes) {
    if (predictions.size() != labels.size())
        throw data_error("prediction/label length mismatch");
    if (predictions.empty()) throw data_error("weighted F1 of an empty set");

    std::vector<std::int64_t> tp(num_classes, 0), fp(num_classes, 0), fn(num_classes, 0);
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const int p = predictions[i], y = labels[i];
        if (p < 0 || p >= num_classes || y < 0 || y >= num_classes)
            throw data_error("class index outside [0, Q)");
        if (p == y) {
            ++tp[y];
        } else {
            ++fp[p];
            ++fn[y];
        }
    }

    double score = 0.0;
    for (int q = 0; q < num_classes; ++q) {
        const std::int64_t support = tp[q] + fn[q];
        if (support == 0) continue; // weight 0
        const double precision = tp[q] + fp[q] > 0 ? double(tp[q]) / double(tp[q] + fp[q]) : 0.0;
        const double recall = double(tp[q]) / double(support);
        const double f1 =
            precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        score += f1 * double(support) / double(labels.size());
    }
    return score;
}

std::string axis_name(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::AlphaLocal: return "alpha_local";
        case SweepAxis::AlphaGlobal: return "alpha_global";
        case SweepAxis::MaxAdded: return "m_dc";
    }
    return "?";
}

std::string target_name(TargetKind t) {
    switch (t) {
        case TargetKind::None: return "none";
        case TargetKind::Real: return "real";
        case TargetKind::Balanced: return "balanced";
    }
    return "?";
}

std::string strategy_name(StrategyKind s) {
    switch (s) {
        case StrategyKind::FedAvg: return "FedAvg";
        case StrategyKind::FedAtt: return "FedAtt";
        case StrategyKind::FedProx: return "FedProx";
    }
    return "?";
}

TargetKind parse_target(const std::string& s) {
    if (s == "none" || s == "None") return TargetKind::None;
    if (s == "real" || s == "Real") return TargetKind::Real;
    if (s == "balanced" || s == "Balanced") return TargetKind::Balanced;
    throw config_error("unknown target '" + s + "' (expected none|real|balanced)");
}

StrategyKind parse_strategy(const std::string& s) {
    if (s == "FedAvg" || s == "fedavg") return StrategyKind::FedAvg;
    if (s == "FedAtt" || s == "fedatt") return StrategyKind::FedAtt;
    if (s == "FedProx" || s == "fedprox") return StrategyKind::FedProx;
    throw config_error("unknown strategy '" + s + "' (expected FedAvg|FedAtt|FedProx)");
}

SweepAxis parse_axis(const std::string& s) {
    if (s == "alpha_local") return SweepAxis::AlphaLocal;
    if (s == "alpha_global") return SweepAxis::AlphaGlobal;
    if (s == "m_dc") return SweepAxis::MaxAdded;
    throw config_error("unknown sweep axis '" + s + "' (expected alpha_local|alpha_global|m_dc)");
}

std::string format_value(double v) {
    if (std::isinf(v)) return "inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string CellRunId::key() const {
    return axis_name(axis) + "=" + format_value(value) + "_" + strategy_name(strategy) + "_" +
           target_name(target) + "_rep" + std::to_string(repeat);
}

namespace {

double parse_value(const std::string& s) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw data_error("bad numeric field '" + s + "'");
    return v;
}

std::pair<double, double> mean_and_sample_std(const std::vector<double>& xs) {
    if (xs.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= double(xs.size());
    if (xs.size() < 2) return {mean, 0.0};
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    return {mean, std::sqrt(var / double(xs.size() - 1))};
}

} // namespace

std::vector<ResultCell> run_grid(const RunConfig& base, const Dataset& train, const Dataset& test,
                                 const GridSpec& grid, const std::string& dataset_name,
                                 const CellLogSink& sink) {
    if (grid.values.empty()) throw config_error("sweep has no values");
    if (grid.strategies.empty()) throw config_error("sweep has no strategies");
    if (grid.targets.empty()) throw config_error("sweep has no targets");

    std::vector<ResultCell> cells;
    for (std::size_t vi = 0; vi < grid.values.size(); ++vi) {
        const double value = grid.values[vi];

        PartitionConfig pcfg = base.partition;
        if (grid.axis == SweepAxis::AlphaLocal) pcfg.alpha_local = value;
        if (grid.axis == SweepAxis::AlphaGlobal) pcfg.alpha_global = value;

        // One partition per axis value unless each repeat re-partitions. The
        // m_DC axis does not influence partitioning, so all its cells share
        // one partition.
        const std::uint64_t partition_index = grid.axis == SweepAxis::MaxAdded ? 0 : vi;
        const int partition_draws = grid.repartition_per_repeat ? base.repeats : 1;
        std::vector<Federation> federations;
        std::vector<Dataset> trains;
        for (int r = 0; r < partition_draws; ++r) {
            PartitionConfig pr = pcfg;
            pr.seed = derive_seed(pcfg.seed, std::uint64_t(r), "grid-partition", partition_index);
            Dataset imbalanced = apply_global_imbalance(train, pr);
            federations.push_back(dirichlet_local_partition(imbalanced, pr));
            trains.push_back(std::move(imbalanced));
        }

        for (StrategyKind s : grid.strategies) {
            for (TargetKind tk : grid.targets) {
                ResultCell cell;
                cell.dataset = dataset_name;
                cell.target = tk;
                cell.strategy = s;
                cell.axis = grid.axis;
                cell.value = value;

                RunConfig cfg = base;
                cfg.strategy.kind = s;
                cfg.selection.target = tk;
                if (tk == TargetKind::None) {
                    cfg.selection.mode = SelectionMode::None;
                } else if (cfg.selection.mode == SelectionMode::None) {
                    cfg.selection.mode = SelectionMode::Greedy;
                }
                if (grid.axis == SweepAxis::MaxAdded) cfg.selection.max_added = int(value);
                cfg.partition = pcfg;

                const std::string cell_key =
                    axis_name(grid.axis) + "=" + format_value(value) + "/" + strategy_name(s) +
                    "/" + target_name(tk);
                for (int r = 0; r < base.repeats; ++r) {
                    cfg.master_seed =
                        derive_seed(base.master_seed, vi, cell_key, std::uint64_t(r));
                    const int part = grid.repartition_per_repeat ? r : 0;
                    try {
                        RunSummary summary;
                        const auto logs =
                            run_federated(cfg, federations[part], trains[part], test, &summary);
                        cell.run_f1.push_back(summary.final_f1);
                        if (sink) sink({grid.axis, value, s, tk, r}, logs, summary);
                    } catch (const std::exception& e) {
                        if (cell.error.empty()) cell.error = e.what();
                        std::cerr << "warning: cell " << cell_key << " repeat " << r
                                  << " failed: " << e.what() << "\n";
                    }
                }
                const auto [mean, sd] = mean_and_sample_std(cell.run_f1);
                cell.mean_f1 = mean;
                cell.std_f1 = sd;
                cell.repeats = int(cell.run_f1.size());
                cells.push_back(std::move(cell));
            }
        }
    }
    return cells;
}

std::vector<DeltaRow> improvement_report(const std::vector<ResultCell>& baseline,
                                         const std::vector<ResultCell>& dc) {
    std::vector<DeltaRow> rows;
    for (const auto& cell : dc) {
        const auto match = std::find_if(baseline.begin(), baseline.end(), [&](const ResultCell& b) {
            return b.dataset == cell.dataset && b.axis == cell.axis && b.value == cell.value &&
                   b.strategy == cell.strategy;
        });
        if (match == baseline.end())
            throw data_error("no baseline cell for " + cell.dataset + " " +
                             axis_name(cell.axis) + "=" + format_value(cell.value) + " " +
                             strategy_name(cell.strategy));
        DeltaRow row;
        row.dataset = cell.dataset;
        row.target = cell.target;
        row.strategy = cell.strategy;
        row.axis = cell.axis;
        row.value = cell.value;
        row.delta_mean = cell.mean_f1 - match->mean_f1;
        row.delta_std = std::sqrt(cell.std_f1 * cell.std_f1 + match->std_f1 * match->std_f1);
        rows.push_back(row);
    }
    return rows;
}

void write_results_csv(const std::vector<ResultCell>& cells, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot write " + path);
    out << "dataset,target,strategy,axis,alpha,mean_f1,std_f1,repeats\n";
    for (const auto& c : cells)
        out << c.dataset << "," << target_name(c.target) << "," << strategy_name(c.strategy) << ","
            << axis_name(c.axis) << "," << format_value(c.value) << "," << format_value(c.mean_f1)
            << "," << format_value(c.std_f1) << "," << c.repeats << "\n";
}

std::vector<ResultCell> read_results_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "dataset,target,strategy,axis,alpha,mean_f1,std_f1,repeats")
        throw data_error(path + ": missing or wrong results header");
    std::vector<ResultCell> cells;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        if (fields.size() != 8) throw data_error(path + ": expected 8 fields, got line '" + line + "'");
        ResultCell c;
        c.dataset = fields[0];
        c.target = parse_target(fields[1]);
        c.strategy = parse_strategy(fields[2]);
        c.axis = parse_axis(fields[3]);
        c.value = parse_value(fields[4]);
        c.mean_f1 = parse_value(fields[5]);
        c.std_f1 = parse_value(fields[6]);
        c.repeats = int(parse_value(fields[7]));
        cells.push_back(std::move(c));
    }
    return cells;
}

void write_delta_csv(const std::vector<DeltaRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot write " + path);
    out << "dataset,target,strategy,axis,alpha,delta_mean,delta_std\n";
    for (const auto& r : rows)
        out << r.dataset << "," << target_name(r.target) << "," << strategy_name(r.strategy) << ","
            << axis_name(r.axis) << "," << format_value(r.value) << ","
            << format_value(r.delta_mean) << "," << format_value(r.delta_std) << "\n";
}

} // namespace fedsim
