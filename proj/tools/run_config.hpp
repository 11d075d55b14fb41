#pragma once

// Effective configuration of a CLI run: JSON config file first, flags on top.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dnacnn/dnacnn.hpp"

namespace dnacnn::cli {

struct RunConfig {
    SimConfig sim;
    SplitSpec split;
    PipelineConfig pipeline;
    ModelConfig model;
    TrainConfig train;

    std::string pwm;  // empty: built-in motif
    std::string dataset;
    std::string checkpoint;
    std::string out = ".";
    std::string eval_split = "all";
    std::optional<std::size_t> global_batch;
    std::vector<std::size_t> workers_list{1, 2, 4};
    std::vector<StrategyKind> strategies{StrategyKind::RingAllReduce};

    /// One seed drives simulation, splitting, initialization and shuffling.
    void set_seed(std::uint64_t seed) {
        sim.seed = seed;
        split.seed = seed;
        train.seed = seed;
    }

    /// Keeps the mirrored fields of the sub-configs consistent.
    void sync() {
        pipeline.n_replicas = train.n_replicas;
        if (global_batch) {
            check_divisible(*global_batch, train.n_replicas);
            train.batch_per_replica = *global_batch / train.n_replicas;
        }
        pipeline.batch_per_replica = train.batch_per_replica;
        pipeline.shuffle_buffer_size = train.shuffle_buffer_size;
        pipeline.buffer_size = train.buffer_size;
        pipeline.validate();
        split.validate();
    }
};

std::vector<std::size_t> parse_size_list(const std::string& s, const std::string& field);
std::vector<StrategyKind> parse_strategy_list(const std::string& s);

/// Applies a JSON config document. Unknown keys are a ConfigError.
void apply_json(RunConfig& cfg, const nlohmann::json& j);

nlohmann::json to_json(const RunConfig& cfg);

}  // namespace dnacnn::cli
