#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dnacnn/dnacnn.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;

namespace dnacnn::cli {
namespace {

/// Options of one subcommand; each applies to the RunConfig only when given.
class FlagSet {
public:
    explicit FlagSet(CLI::App* app) : app_(app) {
        app_->add_option("--config", config_path_, "JSON config file; flags override its fields");
    }

    template <typename V, typename F>
    void add(const std::string& name, const std::string& desc, F apply) {
        auto value = std::make_shared<V>();
        CLI::Option* opt = app_->add_option(name, *value, desc);
        appliers_.push_back([opt, value, apply](RunConfig& c) {
            if (opt->count() > 0) apply(c, *value);
        });
    }

    template <typename F>
    void flag(const std::string& name, const std::string& desc, F apply) {
        CLI::Option* opt = app_->add_flag(name, desc);
        appliers_.push_back([opt, apply](RunConfig& c) {
            if (opt->count() > 0) apply(c);
        });
    }

    RunConfig resolve() const {
        RunConfig cfg;
        if (!config_path_.empty()) {
            std::ifstream in(config_path_);
            if (!in) throw ConfigError("config file not found: " + config_path_);
            nlohmann::json j;
            try {
                in >> j;
            } catch (const nlohmann::json::exception& e) {
                throw ConfigError("config file " + config_path_ + " is not valid JSON: " + e.what());
            }
            apply_json(cfg, j);
        }
        for (const auto& a : appliers_) a(cfg);
        return cfg;
    }

    CLI::App* app() const { return app_; }

private:
    CLI::App* app_;
    std::string config_path_;
    std::vector<std::function<void(RunConfig&)>> appliers_;
};

void add_shared(FlagSet& f) {
    f.add<std::uint64_t>("--seed", "RNG seed for simulation, split, init and shuffling",
                         [](RunConfig& c, std::uint64_t v) { c.set_seed(v); });
    f.add<std::size_t>("--workers", "number of worker replicas",
                       [](RunConfig& c, std::size_t v) { c.train.n_replicas = v; });
    f.add<std::string>("--strategy", "aggregation: allreduce | ps | gossip (benchmark: comma list)",
                       [](RunConfig& c, const std::string& v) {
                           c.strategies = parse_strategy_list(v);
                           c.train.strategy = c.strategies.front();
                       });
    f.add<std::size_t>("--epochs", "maximum training epochs", [](RunConfig& c, std::size_t v) { c.train.epochs_max = v; });
    f.add<std::string>("--precision", "f32 | f64",
                       [](RunConfig& c, const std::string& v) { c.train.precision = parse_precision(v); });
    f.add<std::string>("--out", "output directory", [](RunConfig& c, const std::string& v) { c.out = v; });
}

void add_dataset(FlagSet& f, const std::string& desc) {
    f.add<std::string>("--dataset", desc, [](RunConfig& c, const std::string& v) { c.dataset = v; });
}

void add_simulation(FlagSet& f) {
    f.add<std::string>("--pwm", "PWM file (default: built-in 10 bp E-box motif)",
                       [](RunConfig& c, const std::string& v) { c.pwm = v; });
    f.add<std::size_t>("--n-positive", "number of positive sequences", [](RunConfig& c, std::size_t v) { c.sim.n_positive = v; });
    f.add<std::size_t>("--n-negative", "number of negative sequences", [](RunConfig& c, std::size_t v) { c.sim.n_negative = v; });
    f.add<std::size_t>("--seq-length", "sequence length in bp", [](RunConfig& c, std::size_t v) {
        c.sim.seq_length = v;
        c.model.seq_length = v;
    });
    f.add<std::size_t>("--cluster-min", "minimum motif instances per positive",
                       [](RunConfig& c, std::size_t v) { c.sim.cluster_min = v; });
    f.add<std::size_t>("--cluster-max", "maximum motif instances per positive",
                       [](RunConfig& c, std::size_t v) { c.sim.cluster_max = v; });
    f.add<double>("--cluster-region-fraction", "central fraction of the sequence eligible for motifs",
                  [](RunConfig& c, double v) { c.sim.cluster_region_fraction = v; });
}

void add_split(FlagSet& f) {
    f.add<double>("--train-fraction", "training fraction", [](RunConfig& c, double v) { c.split.train_fraction = v; });
    f.add<double>("--test-fraction", "test fraction", [](RunConfig& c, double v) { c.split.test_fraction = v; });
    f.add<double>("--validation-fraction", "validation fraction",
                  [](RunConfig& c, double v) { c.split.validation_fraction = v; });
}

void add_model(FlagSet& f) {
    f.add<std::size_t>("--n-filters", "convolution filters", [](RunConfig& c, std::size_t v) { c.model.n_filters = v; });
    f.add<std::size_t>("--filter-width", "convolution width", [](RunConfig& c, std::size_t v) { c.model.filter_width = v; });
    f.add<std::size_t>("--pool-window", "max-pool window", [](RunConfig& c, std::size_t v) { c.model.pool_window = v; });
    f.add<std::size_t>("--pool-stride", "max-pool stride", [](RunConfig& c, std::size_t v) { c.model.pool_stride = v; });
    f.add<std::string>("--conv-activation", "relu | linear",
                       [](RunConfig& c, const std::string& v) { c.model.conv_activation = parse_activation(v); });
}

void add_training(FlagSet& f) {
    f.add<std::size_t>("--batch-per-replica", "microbatch size per worker",
                       [](RunConfig& c, std::size_t v) { c.train.batch_per_replica = v; });
    f.add<std::size_t>("--global-batch", "global batch (must be divisible by the number of replicas)",
                       [](RunConfig& c, std::size_t v) { c.global_batch = v; });
    f.add<std::size_t>("--shuffle-buffer-size", "streaming shuffle buffer",
                       [](RunConfig& c, std::size_t v) { c.train.shuffle_buffer_size = v; });
    f.add<std::size_t>("--gossip-period", "optimizer steps between gossip rounds",
                       [](RunConfig& c, std::size_t v) { c.train.gossip_period = v; });
    f.add<std::size_t>("--patience", "early-stopping patience in epochs",
                       [](RunConfig& c, std::size_t v) { c.train.early_stop.patience = v; });
    f.add<double>("--min-delta", "minimum validation-loss improvement",
                  [](RunConfig& c, double v) { c.train.early_stop.min_delta = v; });
    f.flag("--no-early-stop", "train for exactly --epochs epochs", [](RunConfig& c) { c.train.early_stop.enabled = false; });
    f.flag("--aggregate-per-epoch", "allreduce: average parameters once per epoch instead of gradients every step",
           [](RunConfig& c) { c.train.aggregate_per_epoch = true; });
    f.add<std::size_t>("--max-steps", "stop after this many optimizer steps (0: no cap)",
                       [](RunConfig& c, std::size_t v) { c.train.max_steps = v; });
    f.add<double>("--learning-rate", "Adam learning rate", [](RunConfig& c, double v) { c.train.adam.learning_rate = v; });
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
}

std::string out_path(const RunConfig& c, const std::string& name) { return (fs::path(c.out) / name).string(); }

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << text;
    if (!out) throw IoError("failed writing " + path);
}

Pwm load_pwm(const RunConfig& c) {
    if (c.pwm.empty()) return default_tal1_pwm();
    if (!fs::exists(c.pwm)) throw ConfigError("PWM file not found: " + c.pwm);
    try {
        return read_pwm_file(c.pwm);
    } catch (const ParseError& e) {
        throw ConfigError("PWM file " + c.pwm + ": " + e.what());
    }
}

std::vector<SequenceRecord> load_dataset(const RunConfig& c) {
    if (c.dataset.empty()) throw ConfigError("--dataset is required");
    if (!fs::exists(c.dataset)) throw ConfigError("dataset not found: " + c.dataset);
    auto records = read_fasta(c.dataset);
    if (records.empty()) throw ConfigError("dataset " + c.dataset + " holds no records");
    const std::size_t L = records.front().bases.size();
    for (const auto& r : records) {
        if (r.bases.size() != L) {
            throw ConfigError("dataset sequences differ in length (" + r.id + " has " + std::to_string(r.bases.size()) +
                              ", first has " + std::to_string(L) + ")");
        }
    }
    return records;
}

std::string fmt_metric(const std::optional<double>& v) { return metric_text(v); }

std::string metrics_line(const EvalMetrics& m) {
    std::ostringstream os;
    os << std::setprecision(6) << "accuracy=" << m.accuracy << " loss=" << m.loss << " auroc=" << fmt_metric(m.auroc)
       << " auprc=" << fmt_metric(m.auprc) << " n=" << m.samples;
    return os.str();
}

void write_report(const RunConfig& c, const TrainReport& report) {
    auto j = to_json(report);
    j["run_config"] = to_json(c);
    write_text(out_path(c, "report.json"), j.dump(2) + "\n");
    std::ostringstream curves;
    write_curves_csv(report, curves);
    write_text(out_path(c, "curves.csv"), curves.str());
}

int cmd_generate(const RunConfig& c, std::ostream& out) {
    const Pwm pwm = load_pwm(c);
    const auto records = generate_dataset(c.sim, pwm);
    std::string path = c.dataset;
    if (path.empty()) {
        ensure_dir(c.out);
        path = out_path(c, "dataset.fa");
    }
    write_fasta(records, path);
    std::size_t positives = 0;
    for (const auto& r : records) positives += r.label == 1;
    out << "wrote " << records.size() << " records (" << positives << " positive, " << records.size() - positives
        << " negative, " << c.sim.seq_length << " bp) to " << path << "\n";
    return kOk;
}

template <typename T>
int train_with(RunConfig c, const Splits& splits, std::ostream& out, std::ostream& err) {
    TrainResult<T> result;
    try {
        result = train<T>(c.train, c.model, splits);
    } catch (const TrainingDivergedError& e) {
        write_report(c, e.partial_report());
        err << "error: training diverged after " << e.last_good_epoch() << " good epochs: " << e.what() << "\n";
        return kDiverged;
    }
    const std::string ckpt = c.checkpoint.empty() ? out_path(c, "model.ckpt") : c.checkpoint;
    save_checkpoint(result.params, ckpt);
    // Test metrics use the stored (f32) parameters so `evaluate` reproduces them.
    const auto stored = decode_checkpoint<T>(encode_checkpoint(result.params));
    if (!splits.test.empty()) result.report.test = evaluate(stored, c.model, splits.test);
    write_report(c, result.report);

    const auto& last = result.report.epochs.back();
    out << "trained " << result.report.epochs.size() << " epochs (" << to_string(result.report.stop_reason) << ") on "
        << c.train.n_replicas << " worker(s), strategy " << to_string(c.train.strategy) << ", "
        << std::setprecision(4) << result.report.total_wall_seconds << " s\n";
    out << "validation: accuracy=" << last.val_accuracy << " loss=" << last.val_loss
        << " auroc=" << fmt_metric(last.val_auroc) << " auprc=" << fmt_metric(last.val_auprc) << "\n";
    if (result.report.test) out << "test: " << metrics_line(*result.report.test) << "\n";
    out << "checkpoint: " << ckpt << "\n";
    return kOk;
}

int cmd_train(RunConfig c, std::ostream& out, std::ostream& err) {
    const auto records = load_dataset(c);
    c.model.seq_length = records.front().bases.size();
    c.sync();
    c.model.validate();
    c.train.validate();
    ensure_dir(c.out);
    const auto splits = split(records, c.split);
    return c.train.precision == Precision::f32 ? train_with<float>(c, splits, out, err)
                                               : train_with<double>(c, splits, out, err);
}

int cmd_benchmark(RunConfig c, std::ostream& out) {
    std::vector<SequenceRecord> records;
    if (c.dataset.empty()) {
        records = generate_dataset(c.sim, load_pwm(c));
    } else {
        records = load_dataset(c);
    }
    c.model.seq_length = records.front().bases.size();
    c.train.early_stop.enabled = false;
    c.model.validate();
    ensure_dir(c.out);
    const auto splits = split(records, c.split);
    const auto rows = c.train.precision == Precision::f32
                          ? benchmark<float>(c.train, c.model, splits, c.workers_list, c.strategies, c.global_batch)
                          : benchmark<double>(c.train, c.model, splits, c.workers_list, c.strategies, c.global_batch);
    std::ostringstream csv;
    write_benchmark_csv(rows, csv);
    write_text(out_path(c, "benchmark.csv"), csv.str());
    write_text(out_path(c, "benchmark_config.json"), to_json(c).dump(2) + "\n");
    out << csv.str();
    std::size_t ok = 0;
    for (const auto& r : rows) ok += r.error.empty();
    return ok > 0 ? kOk : kConfigError;
}

int cmd_evaluate(RunConfig c, std::ostream& out) {
    if (c.checkpoint.empty()) throw ConfigError("--checkpoint is required");
    if (!fs::exists(c.checkpoint)) throw ConfigError("checkpoint not found: " + c.checkpoint);
    auto records = load_dataset(c);

    auto run = [&]<typename T>(T) -> EvalMetrics {
        const auto params = load_checkpoint<T>(c.checkpoint);
        ModelConfig model = config_from_checkpoint(params, c.model);
        const std::size_t pooled = params.dense_weights.dim(0) / model.n_filters;
        const std::size_t L = records.front().bases.size();
        model.seq_length = L;
        const bool fits = L >= model.filter_width && L - model.filter_width + 1 >= model.pool_window &&
                          model.pooled_length() == pooled;
        if (!fits) {
            const std::size_t lo = (pooled - 1) * model.pool_stride + model.pool_window + model.filter_width - 1;
            const std::size_t hi = lo + model.pool_stride - 1;
            throw ConfigError("checkpoint expects sequence length L in [" + std::to_string(lo) + ", " +
                              std::to_string(hi) + "], dataset has L=" + std::to_string(L));
        }
        std::vector<SequenceRecord> subset;
        if (c.eval_split == "all") {
            subset = std::move(records);
        } else {
            auto s = split(records, c.split);
            if (c.eval_split == "test") subset = std::move(s.test);
            else if (c.eval_split == "validation") subset = std::move(s.validation);
            else if (c.eval_split == "train") subset = std::move(s.train);
            else throw ConfigError("--split must be all, train, test or validation");
        }
        if (subset.empty()) throw ConfigError("selected split '" + c.eval_split + "' is empty");
        return evaluate(params, model, subset);
    };
    const EvalMetrics m = c.train.precision == Precision::f32 ? run(float{}) : run(double{});
    ensure_dir(c.out);
    auto j = to_json(m);
    j["run_config"] = to_json(c);
    write_text(out_path(c, "metrics.json"), j.dump(2) + "\n");
    out << metrics_line(m) << "\n";
    return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Distributed data-parallel CNN for motif-cluster detection in DNA sequences", "dnacnn"};
    app.require_subcommand(1);

    FlagSet gen(app.add_subcommand("generate", "simulate a labelled FASTA dataset"));
    add_shared(gen);
    add_simulation(gen);
    add_dataset(gen, "output FASTA path (default: <out>/dataset.fa)");

    FlagSet tr(app.add_subcommand("train", "train on a FASTA dataset; writes report.json, curves.csv, model.ckpt"));
    add_shared(tr);
    add_dataset(tr, "input FASTA dataset");
    add_split(tr);
    add_model(tr);
    add_training(tr);
    tr.add<std::string>("--checkpoint", "checkpoint output path (default: <out>/model.ckpt)",
                        [](RunConfig& c, const std::string& v) { c.checkpoint = v; });

    FlagSet bench(app.add_subcommand("benchmark", "fixed-epoch scaling sweep over worker counts; writes benchmark.csv"));
    add_shared(bench);
    add_dataset(bench, "input FASTA dataset (default: simulate from the generation flags)");
    add_simulation(bench);
    add_split(bench);
    add_model(bench);
    add_training(bench);
    bench.add<std::string>("--workers-list", "comma-separated worker counts, e.g. 1,2,4",
                           [](RunConfig& c, const std::string& v) { c.workers_list = parse_size_list(v, "--workers-list"); });

    FlagSet ev(app.add_subcommand("evaluate", "score a checkpoint on a dataset; writes metrics.json"));
    add_shared(ev);
    add_dataset(ev, "input FASTA dataset");
    add_split(ev);
    add_model(ev);
    ev.add<std::string>("--checkpoint", "checkpoint to evaluate", [](RunConfig& c, const std::string& v) { c.checkpoint = v; });
    ev.add<std::string>("--split", "all | train | test | validation (split uses --seed and fractions)",
                        [](RunConfig& c, const std::string& v) { c.eval_split = v; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kConfigError;
    }

    try {
        if (gen.app()->parsed()) return cmd_generate(gen.resolve(), out);
        if (tr.app()->parsed()) return cmd_train(tr.resolve(), out, err);
        if (bench.app()->parsed()) return cmd_benchmark(bench.resolve(), out);
        if (ev.app()->parsed()) return cmd_evaluate(ev.resolve(), out);
    } catch (const DivergedError& e) {
        err << "error: " << e.what() << "\n";
        return kDiverged;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kIoError;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kConfigError;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kIoError;
    }
    return kConfigError;
}

}  // namespace dnacnn::cli
