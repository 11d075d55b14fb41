#include "run_config.hpp"

#include <functional>
#include <map>
#include <sstream>

namespace dnacnn::cli {

std::vector<std::size_t> parse_size_list(const std::string& s, const std::string& field) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos) {
            throw ConfigError(field + ": expected a comma-separated list of positive integers, got '" + s + "'");
        }
        const auto v = std::stoull(item);
        if (v == 0) throw ConfigError(field + ": values must be >= 1");
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError(field + " must not be empty");
    return out;
}

std::vector<StrategyKind> parse_strategy_list(const std::string& s) {
    std::vector<StrategyKind> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_strategy(item));
    if (out.empty()) throw ConfigError("strategy must not be empty");
    return out;
}

namespace {

template <typename T>
T get(const nlohmann::json& v, const std::string& key) {
    try {
        return v.get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("config field '" + key + "' has the wrong type");
    }
}

}  // namespace

void apply_json(RunConfig& c, const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
    using Setter = std::function<void(const nlohmann::json&, const std::string&)>;
    auto sz = [](std::size_t& dst) -> Setter {
        return [&dst](const nlohmann::json& v, const std::string& k) { dst = get<std::size_t>(v, k); };
    };
    auto dbl = [](double& dst) -> Setter {
        return [&dst](const nlohmann::json& v, const std::string& k) { dst = get<double>(v, k); };
    };
    auto str = [](std::string& dst) -> Setter {
        return [&dst](const nlohmann::json& v, const std::string& k) { dst = get<std::string>(v, k); };
    };
    const std::map<std::string, Setter> fields{
        {"seed", [&](const nlohmann::json& v, const std::string& k) { c.set_seed(get<std::uint64_t>(v, k)); }},
        // simulation
        {"seq_length", [&](const nlohmann::json& v, const std::string& k) {
             c.sim.seq_length = get<std::size_t>(v, k);
             c.model.seq_length = c.sim.seq_length;
         }},
        {"n_positive", sz(c.sim.n_positive)},
        {"n_negative", sz(c.sim.n_negative)},
        {"cluster_min", sz(c.sim.cluster_min)},
        {"cluster_max", sz(c.sim.cluster_max)},
        {"cluster_region_fraction", dbl(c.sim.cluster_region_fraction)},
        {"background_freqs", [&](const nlohmann::json& v, const std::string& k) {
             const auto f = get<std::vector<double>>(v, k);
             if (f.size() != 4) throw ConfigError("background_freqs needs 4 values (A C G T)");
             c.sim.background_freqs = {f[0], f[1], f[2], f[3]};
         }},
        // split
        {"train_fraction", dbl(c.split.train_fraction)},
        {"test_fraction", dbl(c.split.test_fraction)},
        {"validation_fraction", dbl(c.split.validation_fraction)},
        // pipeline
        {"buffer_size", sz(c.train.buffer_size)},
        {"shuffle_buffer_size", sz(c.train.shuffle_buffer_size)},
        {"batch_per_replica", sz(c.train.batch_per_replica)},
        {"global_batch", [&](const nlohmann::json& v, const std::string& k) { c.global_batch = get<std::size_t>(v, k); }},
        {"n_replicas", sz(c.train.n_replicas)},
        // model
        {"n_filters", sz(c.model.n_filters)},
        {"filter_width", sz(c.model.filter_width)},
        {"pool_window", sz(c.model.pool_window)},
        {"pool_stride", sz(c.model.pool_stride)},
        {"conv_activation", [&](const nlohmann::json& v, const std::string& k) {
             c.model.conv_activation = parse_activation(get<std::string>(v, k));
         }},
        // training
        {"strategy", [&](const nlohmann::json& v, const std::string& k) {
             c.strategies = parse_strategy_list(get<std::string>(v, k));
             c.train.strategy = c.strategies.front();
         }},
        {"epochs_max", sz(c.train.epochs_max)},
        {"precision", [&](const nlohmann::json& v, const std::string& k) {
             c.train.precision = parse_precision(get<std::string>(v, k));
         }},
        {"early_stop", [&](const nlohmann::json& v, const std::string& k) { c.train.early_stop.enabled = get<bool>(v, k); }},
        {"patience", sz(c.train.early_stop.patience)},
        {"min_delta", dbl(c.train.early_stop.min_delta)},
        {"gossip_period", sz(c.train.gossip_period)},
        {"aggregate_per_epoch", [&](const nlohmann::json& v, const std::string& k) { c.train.aggregate_per_epoch = get<bool>(v, k); }},
        {"max_steps", sz(c.train.max_steps)},
        {"learning_rate", dbl(c.train.adam.learning_rate)},
        {"workers_list", [&](const nlohmann::json& v, const std::string& k) {
             c.workers_list = get<std::vector<std::size_t>>(v, k);
         }},
        // paths
        {"pwm", str(c.pwm)},
        {"dataset", str(c.dataset)},
        {"checkpoint", str(c.checkpoint)},
        {"out", str(c.out)},
        {"eval_split", str(c.eval_split)},
    };
    for (const auto& [key, value] : j.items()) {
        const auto it = fields.find(key);
        if (it == fields.end()) throw ConfigError("unknown config field '" + key + "'");
        it->second(value, key);
    }
}

nlohmann::json to_json(const RunConfig& c) {
    nlohmann::json strategies = nlohmann::json::array();
    for (auto s : c.strategies) strategies.push_back(std::string(to_string(s)));
    const auto& bg = c.sim.background_freqs;
    return {
        {"seed", c.train.seed},
        {"seq_length", c.sim.seq_length},
        {"n_positive", c.sim.n_positive},
        {"n_negative", c.sim.n_negative},
        {"cluster_min", c.sim.cluster_min},
        {"cluster_max", c.sim.cluster_max},
        {"cluster_region_fraction", c.sim.cluster_region_fraction},
        {"background_freqs", {bg[0], bg[1], bg[2], bg[3]}},
        {"train_fraction", c.split.train_fraction},
        {"test_fraction", c.split.test_fraction},
        {"validation_fraction", c.split.validation_fraction},
        {"buffer_size", c.train.buffer_size},
        {"shuffle_buffer_size", c.train.shuffle_buffer_size},
        {"batch_per_replica", c.train.batch_per_replica},
        {"global_batch", c.train.global_batch()},
        {"n_replicas", c.train.n_replicas},
        {"n_filters", c.model.n_filters},
        {"filter_width", c.model.filter_width},
        {"pool_window", c.model.pool_window},
        {"pool_stride", c.model.pool_stride},
        {"conv_activation", std::string(to_string(c.model.conv_activation))},
        {"strategy", std::string(to_string(c.train.strategy))},
        {"strategies", strategies},
        {"epochs_max", c.train.epochs_max},
        {"precision", std::string(to_string(c.train.precision))},
        {"early_stop", c.train.early_stop.enabled},
        {"patience", c.train.early_stop.patience},
        {"min_delta", c.train.early_stop.min_delta},
        {"gossip_period", c.train.gossip_period},
        {"aggregate_per_epoch", c.train.aggregate_per_epoch},
        {"max_steps", c.train.max_steps},
        {"learning_rate", c.train.adam.learning_rate},
        {"workers_list", c.workers_list},
        {"pwm", c.pwm},
        {"dataset", c.dataset},
        {"checkpoint", c.checkpoint},
        {"out", c.out},
        {"eval_split", c.eval_split},
    };
}

}  // namespace dnacnn::cli
