#include "fedsim/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>

#include <json.hpp>

#include "fedsim/errors.hpp"
#include "fedsim/eval.hpp"

namespace fedsim {

void RunConfig::validate(int federation_size) const {
    if (rounds < 1) throw config_error("rounds must be >= 1");
    if (local_epochs < 0) throw config_error("local epochs must be >= 0");
    if (batch_size < 1) throw config_error("batch size must be >= 1");
    if (!(eta > 0.0)) throw config_error("eta must be positive");
    if (repeats < 1) throw config_error("repeats must be >= 1");
    if (selection.base_clients < 1) throw config_error("m must be >= 1");
    if (selection.max_added < 0) throw config_error("m_DC must be >= 0");
    if (selection.base_clients + selection.max_added > federation_size)
        throw config_error("m + m_DC exceeds the number of clients");
    if (selection.mode != SelectionMode::None && selection.mode != SelectionMode::RandomAugment &&
        selection.target == TargetKind::None)
        throw config_error("greedy/exhaustive selection needs a target distribution");
    model.validate();
}

namespace {

double evaluate_f1(const ModelParams& params, const MlpConfig& arch, const Dataset& test) {
    const auto preds = predict(params, arch, test.features);
    return weighted_f1(preds, test.labels, test.num_classes);
}

} // namespace

std::vector<RoundLog> run_federated(const RunConfig& cfg, const Federation& federation,
                                    const Dataset& train, const Dataset& test,
                                    RunSummary* summary, ModelParams* final_params) {
    const int m_clients = int(federation.shards.size());
    cfg.validate(m_clients);
    if (test.size() == 0) throw data_error("test set is empty");
    for (const auto& shard : federation.shards)
        for (std::size_t idx : shard.sample_indices)
            if (idx >= train.size())
                throw data_error("federation references sample " + std::to_string(idx) +
                                 " outside the training set");

    const std::vector<int> all_ids = federation.client_ids();
    ModelParams params = init_params(cfg.model, derive_seed(cfg.master_seed, 0, "init"));

    // Step 1: the target distribution is fixed for the whole run.
    LabelCounts target;
    if (cfg.selection.target == TargetKind::Real)
        target = target_real(federation, true, derive_seed(cfg.master_seed, 0, "target-mask"));
    else if (cfg.selection.target == TargetKind::Balanced)
        target = target_balanced(federation.num_classes);

    RunSummary local_summary;
    local_summary.rounds = cfg.rounds;
    local_summary.initial_f1 = evaluate_f1(params, cfg.model, test);
    local_summary.best_f1 = local_summary.initial_f1;
    local_summary.best_round = 0;

    std::vector<RoundLog> logs;
    logs.reserve(cfg.rounds);

    for (int t = 1; t <= cfg.rounds; ++t) {
        RoundLog log;
        log.round = t;
        log.distance = std::numeric_limits<double>::quiet_NaN();

        Rng select_rng(derive_seed(cfg.master_seed, std::uint64_t(t), "select"));
        log.base = random_select(all_ids, cfg.selection.base_clients, select_rng);

        std::vector<int> active = log.base;
        if (cfg.selection.max_added > 0) {
            switch (cfg.selection.mode) {
                case SelectionMode::None: break;
                case SelectionMode::Greedy: {
                    const auto outcome = greedy_dc_select(
                        log.base, federation, target, cfg.selection.max_added,
                        derive_seed(cfg.master_seed, std::uint64_t(t), "mask",
                                    cfg.selection.seed));
                    active = outcome.active;
                    log.added = outcome.added;
                    log.distance = outcome.achieved_distance;
                    break;
                }
                case SelectionMode::Exhaustive: {
                    const auto outcome = exhaustive_dc_select(log.base, federation, target,
                                                              cfg.selection.max_added);
                    active = outcome.active;
                    log.added = outcome.added;
                    log.distance = outcome.achieved_distance;
                    break;
                }
                case SelectionMode::RandomAugment: {
                    Rng augment_rng(derive_seed(cfg.master_seed, std::uint64_t(t), "augment",
                                                cfg.selection.seed));
                    const auto outcome =
                        random_augment(log.base, federation, cfg.selection.max_added, augment_rng,
                                       target.empty() ? nullptr : &target);
                    active = outcome.active;
                    log.added = outcome.added;
                    log.distance = outcome.achieved_distance;
                    break;
                }
            }
        }

        // Clients that drew an empty shard have nothing to train on; they are
        // skipped (severe alpha regimes can produce them).
        std::vector<int> trainable;
        for (int id : active)
            if (federation.shards[id].num_samples() > 0) trainable.push_back(id);
        if (trainable.empty())
            throw data_error("round " + std::to_string(t) + ": no active client holds samples");

        // Pre-derive all per-client seeds, then fan out.
        std::vector<std::uint64_t> seeds(trainable.size());
        for (std::size_t i = 0; i < trainable.size(); ++i)
            seeds[i] = derive_seed(cfg.master_seed, std::uint64_t(t), "update",
                                   std::uint64_t(trainable[i]));

        std::vector<ClientUpdateResult> updates(trainable.size());
        std::vector<std::exception_ptr> errors(trainable.size());
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t i = 0; i < std::int64_t(trainable.size()); ++i) {
            try {
                updates[i] = client_update(params, cfg.model, federation.shards[trainable[i]],
                                           train, cfg.strategy, cfg.local_epochs, cfg.batch_size,
                                           cfg.eta, seeds[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
        for (std::size_t i = 0; i < errors.size(); ++i) {
            if (!errors[i]) continue;
            try {
                std::rethrow_exception(errors[i]);
            } catch (const divergence_error& e) {
                throw divergence_error("round " + std::to_string(t) + ", " + e.what(), t,
                                       e.client);
            }
        }

        params = aggregate(params, updates, cfg.strategy);
        for (const auto& u : updates) log.losses.emplace_back(u.client_id, u.mean_loss);

        log.f1 = evaluate_f1(params, cfg.model, test);
        if (log.f1 > local_summary.best_f1) {
            local_summary.best_f1 = log.f1;
            local_summary.best_round = t;
        }
        local_summary.final_f1 = log.f1;
        logs.push_back(std::move(log));
    }

    if (summary) *summary = local_summary;
    if (final_params) *final_params = std::move(params);
    return logs;
}

void write_round_logs_jsonl(const std::vector<RoundLog>& logs, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot write " + path);
    for (const auto& log : logs) {
        nlohmann::json rec;
        rec["round"] = log.round;
        rec["base"] = log.base;
        rec["added"] = log.added;
        rec["distance"] = std::isnan(log.distance) ? nlohmann::json() : nlohmann::json(log.distance);
        auto losses = nlohmann::json::array();
        for (const auto& [id, loss] : log.losses) losses.push_back({id, loss});
        rec["losses"] = losses;
        rec["f1"] = log.f1;
        out << rec.dump() << "\n";
    }
}

} // namespace fedsim
