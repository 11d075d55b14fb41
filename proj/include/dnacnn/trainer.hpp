#pragma once

// Synchronous data-parallel training over N worker threads with pluggable aggregation.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "dnacnn/collective.hpp"
#include "dnacnn/error.hpp"
#include "dnacnn/metrics.hpp"
#include "dnacnn/model.hpp"
#include "dnacnn/pipeline.hpp"
#include "dnacnn/transport.hpp"

namespace dnacnn {

struct EarlyStop {
    bool enabled = true;
    std::size_t patience = 5;
    double min_delta = 1e-4;
};

struct TrainConfig {
    std::size_t n_replicas = 1;
    StrategyKind strategy = StrategyKind::RingAllReduce;
    std::size_t epochs_max = 50;
    std::size_t batch_per_replica = 64;
    std::uint64_t seed = 1;
    Precision precision = Precision::f32;
    EarlyStop early_stop;
    std::size_t gossip_period = 1;
    bool aggregate_per_epoch = false;
    std::size_t shuffle_buffer_size = 100;
    std::size_t buffer_size = 10000;
    std::size_t max_steps = 0;  // 0: no cap
    AdamHyper adam;
    std::chrono::milliseconds collective_timeout{std::chrono::seconds(120)};

    std::size_t global_batch() const { return batch_per_replica * n_replicas; }

    void validate() const {
        if (n_replicas < 1) throw ConfigError("n_replicas must be >= 1");
        if (epochs_max < 1) throw ConfigError("epochs_max must be >= 1");
        if (batch_per_replica < 1) throw ConfigError("batch_per_replica must be >= 1");
        if (gossip_period < 1) throw ConfigError("gossip_period must be >= 1");
        if (shuffle_buffer_size < 1) throw ConfigError("shuffle_buffer_size must be >= 1");
        if (aggregate_per_epoch && strategy != StrategyKind::RingAllReduce) {
            throw ConfigError("aggregate_per_epoch is only defined for the allreduce strategy");
        }
        check_divisible(global_batch(), n_replicas);
    }
};

struct EvalMetrics {
    double loss = 0;
    double accuracy = 0;
    std::optional<double> auroc;
    std::optional<double> auprc;
    std::size_t samples = 0;
};

struct EpochMetrics {
    std::size_t epoch = 0;
    double train_loss = 0;
    double val_loss = 0;
    double val_accuracy = 0;
    std::optional<double> val_auroc;
    std::optional<double> val_auprc;
    double wall_seconds = 0;
    double sequences_per_second = 0;
    std::size_t steps = 0;
};

enum class StopReason { converged, max_epochs, max_steps, diverged };

inline std::string_view to_string(StopReason r) {
    switch (r) {
        case StopReason::converged: return "converged";
        case StopReason::max_epochs: return "max_epochs";
        case StopReason::max_steps: return "max_steps";
        case StopReason::diverged: return "diverged";
    }
    return "?";
}

struct TrainReport {
    TrainConfig config;
    ModelConfig model;
    std::vector<EpochMetrics> epochs;
    double total_wall_seconds = 0;
    std::uint64_t messages = 0;
    std::uint64_t bytes = 0;
    StopReason stop_reason = StopReason::max_epochs;
    std::size_t total_steps = 0;
    std::size_t best_epoch = 0;
    std::size_t train_size = 0;
    std::size_t validation_size = 0;
    std::size_t dropped_per_epoch = 0;
    std::optional<EvalMetrics> test;
};

/// Non-finite loss or gradient during training. Holds the report up to the last good epoch.
class TrainingDivergedError : public DivergedError {
public:
    TrainingDivergedError(const std::string& what, TrainReport partial)
        : DivergedError(what), partial_(std::move(partial)) {}

    const TrainReport& partial_report() const noexcept { return partial_; }
    std::size_t last_good_epoch() const noexcept { return partial_.epochs.size(); }

private:
    TrainReport partial_;
};

template <typename T>
struct TrainOptions {
    /// Called from worker threads after each optimizer step with that replica's flat parameters.
    std::function<void(std::size_t step, std::size_t rank, std::span<const T> params)> on_step;
};

template <typename T>
struct TrainResult {
    ModelParams<T> params;
    TrainReport report;
    std::vector<std::vector<T>> replica_params;  // flat, per rank, at the end of training
};

template <typename T>
EvalMetrics evaluate(const ModelParams<T>& params, const ModelConfig& config, std::span<const SequenceRecord> records,
                     std::size_t batch_size = 256) {
    if (records.empty()) throw ValidationError("cannot evaluate on an empty dataset");
    std::vector<double> scores;
    std::vector<int> labels;
    scores.reserve(records.size());
    labels.reserve(records.size());
    Tensor<T> all_probs({records.size()});
    Tensor<T> all_labels({records.size()});
    for (std::size_t start = 0; start < records.size(); start += batch_size) {
        const std::size_t n = std::min(batch_size, records.size() - start);
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), start);
        const auto batch = make_batch<T>(records, idx);
        const auto fr = forward(params, config, batch);
        for (std::size_t k = 0; k < n; ++k) {
            all_probs[start + k] = fr.probs[k];
            all_labels[start + k] = batch.labels[k];
            scores.push_back(static_cast<double>(fr.probs[k]));
            labels.push_back(records[start + k].label);
        }
    }
    EvalMetrics m;
    m.samples = records.size();
    m.loss = static_cast<double>(bce_loss(all_probs, all_labels));
    m.accuracy = accuracy(scores, labels);
    m.auroc = dnacnn::auroc(scores, labels);
    m.auprc = dnacnn::auprc(scores, labels);
    return m;
}

namespace detail {

template <typename T>
struct Replica {
    ModelParams<T> params;
    std::vector<T> flat;
    AdamState<T> adam;
    std::vector<double> step_losses;
};

/// First failure wins; later failures are usually fallout from the abort.
class FailureSlot {
public:
    void record(std::exception_ptr e, Transport& transport) {
        {
            std::lock_guard lock(mutex_);
            if (!first_) first_ = e;
        }
        transport.abort("a worker failed");
    }
    std::exception_ptr get() const {
        std::lock_guard lock(mutex_);
        return first_;
    }

private:
    mutable std::mutex mutex_;
    std::exception_ptr first_;
};

template <typename T>
void check_loss(T loss) {
    if (!std::isfinite(loss)) throw DivergedError("training loss became non-finite");
}

}  // namespace detail

/// Trains on `data.train`, early-stopping on `data.validation`.
template <typename T>
TrainResult<T> train(const TrainConfig& config, const ModelConfig& model_config, const Splits& data,
                     const TrainOptions<T>& options = {}) {
    config.validate();
    model_config.validate();
    if (data.train.empty()) throw ValidationError("training split is empty");
    if (data.validation.empty()) throw ValidationError("validation split is empty");
    for (const auto* split : {&data.train, &data.validation}) {
        for (const auto& rec : *split) {
            if (rec.bases.size() != model_config.seq_length) {
                throw DimensionError("sequence " + rec.id + " has length " + std::to_string(rec.bases.size()) +
                                     ", model expects " + std::to_string(model_config.seq_length));
            }
        }
    }

    const std::size_t N = config.n_replicas;
    const std::size_t bpr = config.batch_per_replica;
    const std::size_t P = model_config.param_count();
    const bool ps = config.strategy == StrategyKind::ParameterServer;
    const bool gossip = config.strategy == StrategyKind::Gossip;

    TrainReport report;
    report.config = config;
    report.model = model_config;
    report.train_size = data.train.size();
    report.validation_size = data.validation.size();

    const auto init = init_params<T>(model_config, config.seed);
    std::vector<detail::Replica<T>> replicas(N);
    for (auto& r : replicas) {
        r.params = init;
        r.flat = flatten(init);
        r.adam = AdamState<T>::fresh(P, config.adam);
    }
    std::vector<T> server_flat = flatten(init);
    AdamState<T> server_adam = AdamState<T>::fresh(P, config.adam);

    Transport transport(N + 1, config.collective_timeout);
    std::vector<std::size_t> all_indices(data.train.size());
    std::iota(all_indices.begin(), all_indices.end(), std::size_t{0});

    double best_val = std::numeric_limits<double>::infinity();
    std::size_t epochs_since_best = 0;
    std::size_t global_step = 0;
    std::size_t gossip_rounds = 0;
    const auto loop_start = std::chrono::steady_clock::now();

    auto diverged = [&](const std::string& why) {
        report.stop_reason = StopReason::diverged;
        report.total_steps = global_step;
        report.messages = transport.messages();
        report.bytes = transport.bytes();
        report.total_wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - loop_start).count();
        return TrainingDivergedError(why, report);
    };

    for (std::size_t epoch = 1; epoch <= config.epochs_max; ++epoch) {
        auto stream = shuffled_stream(all_indices, config.shuffle_buffer_size, Rng::derive(config.seed, epoch));
        std::size_t dropped = 0;
        auto schedule = group_batches(stream, config.global_batch(), &dropped);
        report.dropped_per_epoch = dropped;
        if (config.max_steps > 0 && global_step + schedule.size() > config.max_steps) {
            schedule.resize(config.max_steps - global_step);
        }
        if (schedule.empty()) {
            if (config.max_steps > 0 && global_step >= config.max_steps) {
                report.stop_reason = StopReason::max_steps;
                break;
            }
            throw ConfigError("training split of " + std::to_string(data.train.size()) +
                              " records is smaller than one global batch of " + std::to_string(config.global_batch()));
        }
        const std::size_t first_step = global_step;
        const std::size_t first_gossip_round = gossip_rounds;
        detail::FailureSlot failure;

        auto worker = [&](std::size_t rank) {
            try {
                auto& rep = replicas[rank];
                rep.step_losses.clear();
                std::size_t gossip_round = first_gossip_round;
                for (std::size_t k = 0; k < schedule.size(); ++k) {
                    const std::span<const std::size_t> mine(schedule[k].data() + rank * bpr, bpr);
                    const auto batch = make_batch<T>(data.train, mine);
                    const auto fr = forward(rep.params, model_config, batch);
                    const T loss = bce_loss(fr.probs, batch.labels);
                    detail::check_loss(loss);
                    rep.step_losses.push_back(static_cast<double>(loss));
                    auto grad = flatten(backward(rep.params, model_config, fr.cache, batch.labels));
                    const std::size_t step = first_step + k;

                    if (ps) {
                        ps_report<T>(grad, rank, N, transport);
                        rep.flat = ps_await_params<T>(rank, N, P, transport);
                    } else if (gossip || config.aggregate_per_epoch) {
                        adam_step<T>(std::span<T>(rep.flat), std::span<const T>(grad), rep.adam);
                        if (gossip && (step + 1) % config.gossip_period == 0) {
                            gossip_exchange<T>(std::span<T>(rep.flat), rank, N, gossip_round++, transport);
                        }
                    } else {
                        ring_all_reduce_inplace<T>(std::span<T>(grad), rank, N, transport);
                        if (N > 1) {
                            const T denom = static_cast<T>(N);
                            for (auto& g : grad) g /= denom;
                        }
                        adam_step<T>(std::span<T>(rep.flat), std::span<const T>(grad), rep.adam);
                    }
                    unflatten_into<T>(rep.flat, rep.params);
                    if (options.on_step) options.on_step(step, rank, rep.flat);
                }
                if (config.aggregate_per_epoch) {
                    ring_all_reduce_inplace<T>(std::span<T>(rep.flat), rank, N, transport);
                    if (N > 1) {
                        const T denom = static_cast<T>(N);
                        for (auto& v : rep.flat) v /= denom;
                    }
                    unflatten_into<T>(rep.flat, rep.params);
                }
            } catch (...) {
                failure.record(std::current_exception(), transport);
            }
        };

        auto server = [&] {
            try {
                const OptimizerStep<T> step = [&](std::span<T> params, std::span<const T> mean) {
                    adam_step<T>(params, mean, server_adam);
                };
                for (std::size_t k = 0; k < schedule.size(); ++k) {
                    ps_serve_round<T>(std::span<T>(server_flat), N, N, transport, step);
                }
            } catch (...) {
                failure.record(std::current_exception(), transport);
            }
        };

        const auto epoch_start = std::chrono::steady_clock::now();
        {
            std::vector<std::jthread> threads;
            threads.reserve(N + 1);
            for (std::size_t r = 0; r < N; ++r) threads.emplace_back(worker, r);
            if (ps) threads.emplace_back(server);
        }
        const double epoch_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start).count();

        if (auto e = failure.get()) {
            try {
                std::rethrow_exception(e);
            } catch (const DivergedError& d) {
                throw diverged(d.what());
            }
        }

        global_step += schedule.size();
        if (gossip) {
            for (std::size_t s = first_step; s < global_step; ++s) gossip_rounds += (s + 1) % config.gossip_period == 0;
        }

        // Parameters to evaluate: identical replicas, or the gossip consensus.
        ModelParams<T> eval_params = replicas[0].params;
        if (gossip && N > 1) {
            std::vector<std::vector<T>> flats;
            for (const auto& r : replicas) flats.push_back(r.flat);
            eval_params = unflatten_params<T>(model_config, gossip_finalize(flats));
        }

        EpochMetrics em;
        em.epoch = epoch;
        em.steps = schedule.size();
        double loss_sum = 0;
        for (std::size_t k = 0; k < schedule.size(); ++k) {
            double step_loss = 0;
            for (const auto& r : replicas) step_loss += r.step_losses[k];
            loss_sum += step_loss / static_cast<double>(N);
        }
        em.train_loss = loss_sum / static_cast<double>(schedule.size());
        const auto val = evaluate(eval_params, model_config, data.validation);
        if (!std::isfinite(val.loss)) throw diverged("validation loss became non-finite");
        em.val_loss = val.loss;
        em.val_accuracy = val.accuracy;
        em.val_auroc = val.auroc;
        em.val_auprc = val.auprc;
        em.wall_seconds = std::max(epoch_seconds, 1e-9);
        em.sequences_per_second = static_cast<double>(schedule.size() * config.global_batch()) / em.wall_seconds;
        report.epochs.push_back(em);

        if (val.loss < best_val - config.early_stop.min_delta) {
            best_val = val.loss;
            report.best_epoch = epoch;
            epochs_since_best = 0;
        } else {
            ++epochs_since_best;
        }
        if (config.early_stop.enabled && epochs_since_best >= config.early_stop.patience) {
            report.stop_reason = StopReason::converged;
            break;
        }
        if (config.max_steps > 0 && global_step >= config.max_steps) {
            report.stop_reason = StopReason::max_steps;
            break;
        }
    }

    TrainResult<T> result;
    for (const auto& r : replicas) result.replica_params.push_back(r.flat);
    if (gossip && N > 1) gossip_finalize(result.replica_params);
    result.params = unflatten_params<T>(model_config, result.replica_params[0]);

    report.total_steps = global_step;
    report.messages = transport.messages();
    report.bytes = transport.bytes();
    report.total_wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - loop_start).count();
    result.report = std::move(report);
    return result;
}

struct BenchmarkRow {
    std::size_t workers = 0;
    StrategyKind strategy = StrategyKind::RingAllReduce;
    double wall_seconds = 0;
    double speedup = 0;
    double sequences_per_second = 0;
    double final_accuracy = 0;
    std::optional<double> final_auroc;
    std::uint64_t messages = 0;
    std::uint64_t bytes = 0;
    std::string error;
};

/// Fixed-epoch training per (strategy, worker count). Speedup is relative to the
/// 1-worker row of the same strategy, or to that strategy's first successful row.
/// With `fixed_global_batch` every row splits the same global batch across its
/// workers; otherwise each worker keeps `base.batch_per_replica`.
template <typename T>
std::vector<BenchmarkRow> benchmark(TrainConfig base, const ModelConfig& model_config, const Splits& data,
                                    const std::vector<std::size_t>& worker_counts,
                                    const std::vector<StrategyKind>& strategies,
                                    std::optional<std::size_t> fixed_global_batch = std::nullopt) {
    base.early_stop.enabled = false;
    std::vector<BenchmarkRow> rows;
    for (StrategyKind strategy : strategies) {
        const std::size_t first = rows.size();
        for (std::size_t workers : worker_counts) {
            BenchmarkRow row;
            row.workers = workers;
            row.strategy = strategy;
            try {
                TrainConfig cfg = base;
                cfg.n_replicas = workers;
                cfg.strategy = strategy;
                if (fixed_global_batch) {
                    check_divisible(*fixed_global_batch, workers);
                    cfg.batch_per_replica = *fixed_global_batch / workers;
                }
                const auto result = train<T>(cfg, model_config, data);
                const auto& rep = result.report;
                // Training time only; per-epoch validation runs on one context.
                double trained = 0;
                for (const auto& e : rep.epochs) {
                    row.wall_seconds += e.wall_seconds;
                    trained += static_cast<double>(e.steps * cfg.global_batch());
                }
                row.sequences_per_second = trained / row.wall_seconds;
                row.final_accuracy = rep.epochs.back().val_accuracy;
                row.final_auroc = rep.epochs.back().val_auroc;
                row.messages = rep.messages;
                row.bytes = rep.bytes;
            } catch (const std::exception& e) {
                row.error = e.what();
            }
            rows.push_back(std::move(row));
        }
        double reference = 0;
        for (std::size_t i = first; i < rows.size(); ++i) {
            if (rows[i].error.empty() && rows[i].workers == 1) {
                reference = rows[i].wall_seconds;
                break;
            }
        }
        for (std::size_t i = first; i < rows.size() && reference == 0; ++i) {
            if (rows[i].error.empty()) reference = rows[i].wall_seconds;
        }
        for (std::size_t i = first; i < rows.size(); ++i) {
            if (rows[i].error.empty() && rows[i].wall_seconds > 0) rows[i].speedup = reference / rows[i].wall_seconds;
        }
    }
    return rows;
}

}  // namespace dnacnn
