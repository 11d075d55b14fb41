#pragma once

// TrainReport as JSON, learning curves and benchmark tables as CSV.

#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dnacnn/trainer.hpp"

namespace dnacnn {

inline constexpr std::string_view kUndefined = "undefined";

inline nlohmann::json metric_json(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(std::string(kUndefined));
}

inline std::string metric_text(const std::optional<double>& v) {
    if (!v) return std::string(kUndefined);
    std::ostringstream os;
    os << std::setprecision(10) << *v;
    return os.str();
}

inline nlohmann::json to_json(const TrainConfig& c) {
    return {
        {"n_replicas", c.n_replicas},
        {"strategy", std::string(to_string(c.strategy))},
        {"epochs_max", c.epochs_max},
        {"batch_per_replica", c.batch_per_replica},
        {"global_batch", c.global_batch()},
        {"seed", c.seed},
        {"precision", std::string(to_string(c.precision))},
        {"early_stop", {{"enabled", c.early_stop.enabled}, {"patience", c.early_stop.patience}, {"min_delta", c.early_stop.min_delta}}},
        {"gossip_period", c.gossip_period},
        {"aggregate_per_epoch", c.aggregate_per_epoch},
        {"shuffle_buffer_size", c.shuffle_buffer_size},
        {"buffer_size", c.buffer_size},
        {"max_steps", c.max_steps},
        {"adam", {{"learning_rate", c.adam.learning_rate}, {"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"epsilon", c.adam.epsilon}}},
    };
}

inline nlohmann::json to_json(const ModelConfig& m) {
    return {
        {"n_filters", m.n_filters},
        {"filter_width", m.filter_width},
        {"pool_window", m.pool_window},
        {"pool_stride", m.pool_stride},
        {"conv_activation", std::string(to_string(m.conv_activation))},
        {"seq_length", m.seq_length},
        {"flat_dim", m.flat_dim()},
        {"param_count", m.param_count()},
    };
}

inline nlohmann::json to_json(const EvalMetrics& m) {
    return {
        {"loss", m.loss},
        {"accuracy", m.accuracy},
        {"auroc", metric_json(m.auroc)},
        {"auprc", metric_json(m.auprc)},
        {"samples", m.samples},
    };
}

inline nlohmann::json to_json(const EpochMetrics& e) {
    return {
        {"epoch", e.epoch},
        {"train_loss", e.train_loss},
        {"val_loss", e.val_loss},
        {"val_accuracy", e.val_accuracy},
        {"val_auroc", metric_json(e.val_auroc)},
        {"val_auprc", metric_json(e.val_auprc)},
        {"wall_seconds", e.wall_seconds},
        {"sequences_per_second", e.sequences_per_second},
        {"steps", e.steps},
    };
}

inline nlohmann::json to_json(const TrainReport& r) {
    nlohmann::json epochs = nlohmann::json::array();
    for (const auto& e : r.epochs) epochs.push_back(to_json(e));
    nlohmann::json j{
        {"config", to_json(r.config)},
        {"model", to_json(r.model)},
        {"epochs", std::move(epochs)},
        {"total_wall_seconds", r.total_wall_seconds},
        {"messages", r.messages},
        {"bytes", r.bytes},
        {"stop_reason", std::string(to_string(r.stop_reason))},
        {"total_steps", r.total_steps},
        {"best_epoch", r.best_epoch},
        {"train_size", r.train_size},
        {"validation_size", r.validation_size},
        {"dropped_per_epoch", r.dropped_per_epoch},
    };
    if (r.test) j["test"] = to_json(*r.test);
    return j;
}

inline void write_curves_csv(const TrainReport& r, std::ostream& out) {
    out << "epoch,train_loss,val_loss,val_acc,val_auroc,val_auprc,wall_s\n";
    out << std::setprecision(10);
    for (const auto& e : r.epochs) {
        out << e.epoch << ',' << e.train_loss << ',' << e.val_loss << ',' << e.val_accuracy << ','
            << metric_text(e.val_auroc) << ',' << metric_text(e.val_auprc) << ',' << e.wall_seconds << '\n';
    }
}

/// Fields containing commas or quotes are quoted.
inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c == '\n' ? ' ' : c;
    }
    return q + "\"";
}

inline void write_benchmark_csv(const std::vector<BenchmarkRow>& rows, std::ostream& out) {
    out << "workers,strategy,wall_s,speedup,seq_per_s,final_acc,final_auroc,messages,bytes,error\n";
    out << std::setprecision(10);
    for (const auto& r : rows) {
        out << r.workers << ',' << to_string(r.strategy) << ',';
        if (r.error.empty()) {
            out << r.wall_seconds << ',' << r.speedup << ',' << r.sequences_per_second << ',' << r.final_accuracy
                << ',' << metric_text(r.final_auroc) << ',' << r.messages << ',' << r.bytes << ",\n";
        } else {
            out << ",,,,,,," << csv_field(r.error) << '\n';
        }
    }
}

}  // namespace dnacnn
