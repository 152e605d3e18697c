#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fedsim/orchestrator.hpp"

namespace fedsim {

// Per-class F1 (harmonic mean of precision and recall), averaged with
// weights = class support / total. A class with no true and no predicted
// samples contributes F1 = 0 at weight 0.
double weighted_f1(std::span<const int> predictions, std::span<const int> labels,
                   int num_classes);

enum class SweepAxis { AlphaLocal, AlphaGlobal, MaxAdded };

std::string axis_name(SweepAxis axis);
std::string target_name(TargetKind t);
std::string strategy_name(StrategyKind s);
TargetKind parse_target(const std::string& s);
StrategyKind parse_strategy(const std::string& s);
SweepAxis parse_axis(const std::string& s);

struct GridSpec {
    SweepAxis axis = SweepAxis::AlphaLocal;
    std::vector<double> values;
    std::vector<StrategyKind> strategies;
    std::vector<TargetKind> targets; // None rows are the baselines
    bool repartition_per_repeat = false;
};

struct ResultCell {
    std::string dataset;
    TargetKind target = TargetKind::None;
    StrategyKind strategy = StrategyKind::FedAvg;
    SweepAxis axis = SweepAxis::AlphaLocal;
    double value = 0.0;
    double mean_f1 = 0.0;
    double std_f1 = 0.0; // sample std over completed repeats
    int repeats = 0;     // completed repeats; < R marks an incomplete cell
    std::vector<double> run_f1;
    std::string error;   // first failure, when incomplete
};

// Identifies one training run within a grid, for log sinks.
struct CellRunId {
    SweepAxis axis;
    double value;
    StrategyKind strategy;
    TargetKind target;
    int repeat;
    std::string key() const;
};

using CellLogSink =
    std::function<void(const CellRunId&, const std::vector<RoundLog>&, const RunSummary&)>;

// Runs R repeats of every (value, strategy, target) combination. The
// partition is recomputed per axis value (and per repeat when
// repartition_per_repeat is set); the non-swept alpha stays at its
// configured default. `train` is the split training set before any
// imbalance is applied.
std::vector<ResultCell> run_grid(const RunConfig& base, const Dataset& train, const Dataset& test,
                                 const GridSpec& grid, const std::string& dataset_name,
                                 const CellLogSink& sink = nullptr);

struct DeltaRow {
    std::string dataset;
    TargetKind target = TargetKind::None; // the DC target being compared
    StrategyKind strategy = StrategyKind::FedAvg;
    SweepAxis axis = SweepAxis::AlphaLocal;
    double value = 0.0;
    double delta_mean = 0.0;
    double delta_std = 0.0; // sqrt(s_dc^2 + s_base^2)
};

// (dc mean - baseline mean) per matching (dataset, axis, value, strategy).
std::vector<DeltaRow> improvement_report(const std::vector<ResultCell>& baseline,
                                         const std::vector<ResultCell>& dc);

// CSV schema: dataset,target,strategy,axis,alpha,mean_f1,std_f1,repeats
void write_results_csv(const std::vector<ResultCell>& cells, const std::string& path);
std::vector<ResultCell> read_results_csv(const std::string& path);

// CSV schema: dataset,target,strategy,axis,alpha,delta_mean,delta_std
void write_delta_csv(const std::vector<DeltaRow>& rows, const std::string& path);

std::string format_value(double v); // shortest round-trip repr, "inf" for infinity

} // namespace fedsim
