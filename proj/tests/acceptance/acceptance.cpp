// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only if all pass.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "../oracles.hpp"
#include "dnacnn/dnacnn.hpp"

using namespace dnacnn;

namespace {

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

template <typename T>
double linf(const std::vector<T>& a, const std::vector<T>& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
    return m;
}

Splits simulate(std::size_t per_class, std::size_t L, std::uint64_t seed) {
    SimConfig sim;
    sim.seq_length = L;
    sim.n_positive = per_class;
    sim.n_negative = per_class;
    sim.seed = seed;
    return split(generate_dataset(sim, default_tal1_pwm()), SplitSpec{0.7, 0.1, 0.2, seed});
}

// 1. Quality on desk-scale data.
void quality(Verdict& v) {
    const auto data = simulate(2000, 500, 1);
    ModelConfig m;
    m.seq_length = 500;
    TrainConfig c;
    c.n_replicas = 1;
    c.epochs_max = 30;
    c.seed = 1;
    const auto r = train<float>(c, m, data);
    const auto& last = r.report.epochs.back();
    v.detail << "epochs=" << r.report.epochs.size() << " (" << to_string(r.report.stop_reason)
             << ") val_acc=" << last.val_accuracy << " val_auroc=" << last.val_auroc.value_or(-1);
    v.check(r.report.epochs.size() <= 30, "at most 30 epochs");
    v.check(last.val_accuracy >= 0.90, "val accuracy >= 0.90");
    v.check(last.val_auroc.value_or(0) >= 0.95, "val auROC >= 0.95");
}

// 2. Sharded global batch equals one large batch, over a fixed sweep of seeds.
template <typename T>
double large_batch_gap(const Splits& data, std::uint64_t seed) {
    ModelConfig m;
    m.seq_length = 200;
    TrainConfig c;
    c.seed = seed;
    c.epochs_max = 1000;
    c.max_steps = 100;
    c.early_stop.enabled = false;
    c.n_replicas = 1;
    c.batch_per_replica = 256;
    const auto one = train<T>(c, m, data);
    c.n_replicas = 4;
    c.batch_per_replica = 64;
    const auto four = train<T>(c, m, data);
    if (one.report.total_steps != 100 || four.report.total_steps != 100) return 1e9;
    return linf(flatten(one.params), flatten(four.params));
}

void large_batch(Verdict& v) {
    const auto data = simulate(1000, 200, 2);
    v.detail << "Linf after 100 steps, seed: f32 / f64 =";
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const double g32 = large_batch_gap<float>(data, seed);
        const double g64 = large_batch_gap<double>(data, seed);
        v.detail << " " << seed << ": " << g32 << " / " << g64 << ";";
        v.check(g32 <= 1e-4, "f32 <= 1e-4 at seed " + std::to_string(seed));
        v.check(g64 <= 1e-8, "f64 <= 1e-8 at seed " + std::to_string(seed));
    }
}

// 3. Ring all-reduce against gather-sum-broadcast.
template <typename T>
std::vector<std::vector<T>> ring(std::vector<std::vector<T>> data, Transport& t) {
    const std::size_t n = data.size();
    std::vector<std::jthread> threads;
    for (std::size_t r = 0; r < n; ++r)
        threads.emplace_back([&, r] { ring_all_reduce_inplace<T>(std::span<T>(data[r]), r, n, t); });
    threads.clear();
    return data;
}

void collective(Verdict& v) {
    std::mt19937_64 gen(3);
    double worst_rel = 0;
    std::size_t cases = 0;
    for (std::size_t n : {1u, 2u, 3u, 4u, 8u})
        for (std::size_t d : {1u, 5u, 1246u, 10000u}) {
            std::vector<std::vector<std::int64_t>> ints(n, std::vector<std::int64_t>(d));
            std::vector<std::vector<float>> floats(n, std::vector<float>(d));
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t i = 0; i < d; ++i) {
                    ints[r][i] = static_cast<std::int64_t>(gen() % 2000001) - 1000000;
                    floats[r][i] = std::uniform_real_distribution<float>(0.0f, 1.0f)(gen);
                }
            Transport ti(n), tf(n);
            const auto out_i = ring(ints, ti);
            const auto out_f = ring(floats, tf);
            const auto want_i = oracle::gather_sum(ints);
            const auto want_f = oracle::gather_sum(floats);
            for (std::size_t r = 0; r < n; ++r) {
                v.check(out_i[r] == want_i, "integer sum exact");
                for (std::size_t i = 0; i < d; ++i)
                    worst_rel = std::max(worst_rel, oracle::relative_error(out_f[r][i], want_f[i], 1e-30));
            }
            const std::uint64_t expected_msgs = 2 * n * (n - 1);
            v.check(ti.messages() == expected_msgs && tf.messages() == expected_msgs, "2N(N-1) messages");
            ++cases;
        }
    v.detail << cases << " (N, D) cases, integer exact, f32 max relative error " << worst_rel;
    v.check(worst_rel <= 1e-6, "f32 relative error <= 1e-6");
}

// 4. Backward against central differences.
void gradients(Verdict& v) {
    ModelConfig c;
    c.seq_length = 50;
    c.n_filters = 2;
    c.filter_width = 5;
    c.pool_window = 5;
    c.pool_stride = 5;
    std::mt19937_64 gen(4);
    std::vector<SequenceRecord> recs;
    for (std::size_t i = 0; i < 4; ++i) recs.push_back({record_id(i), oracle::random_bases(50, gen), int(i % 2), {}});
    std::vector<std::size_t> idx{0, 1, 2, 3};
    const auto batch = make_batch<double>(recs, idx);
    const auto p0 = init_params<double>(c, 4);

    // The pooled max is non-differentiable where a window's top two pre-activations tie
    // above zero or its top pre-activation sits on the relu kink. Windows entirely below
    // zero are locally constant.
    const auto fr = forward(p0, c, batch);
    const double margin = 1e-4;
    std::size_t windows = 0;
    bool smooth = true;
    std::vector<double> preact(c.conv_length() * c.n_filters);
    for (std::size_t b = 0; b < 4; ++b) {
        kernel::conv1d_forward<double>(batch.sample(b), 50, 4, p0.conv_filters.data(), p0.conv_bias.data(), 5, preact);
        for (std::size_t w = 0; w < c.pooled_length(); ++w)
            for (std::size_t f = 0; f < c.n_filters; ++f) {
                std::vector<double> win;
                for (std::size_t j = 0; j < 5; ++j) win.push_back(preact[(w * 5 + j) * c.n_filters + f]);
                std::sort(win.begin(), win.end(), std::greater<>());
                if (std::abs(win[0]) < margin || (win[0] > 0 && win[0] - win[1] < margin)) smooth = false;
                ++windows;
            }
    }
    v.check(smooth, "no pooling ties or relu kinks within 1e-4");

    std::vector<double> flat = flatten(p0);
    auto loss = [&]() { return bce_loss(forward(unflatten_params<double>(c, flat), c, batch).probs, batch.labels); };
    const auto analytic = flatten(backward(p0, c, fr.cache, batch.labels));
    double worst = 0;
    for (std::size_t k = 0; k < flat.size(); ++k)
        worst = std::max(worst, oracle::relative_error(analytic[k], oracle::central_difference(loss, flat[k], 1e-6), 1e-7));
    v.detail << flat.size() << " parameters, " << windows << " pooling windows, max relative error " << worst;
    v.check(worst <= 1e-4, "max relative error <= 1e-4");
}

// 5. Scaling table.
void scaling(Verdict& v) {
    const auto data = simulate(2000, 1500, 5);
    ModelConfig m;
    TrainConfig c;
    c.epochs_max = 2;
    c.seed = 5;
    const auto rows = benchmark<float>(c, m, data, {1, 4}, {StrategyKind::RingAllReduce}, 256);
    std::ostringstream csv;
    write_benchmark_csv(rows, csv);
    std::cout << csv.str();
    const unsigned cores = std::thread::hardware_concurrency();
    bool ok = rows.size() == 2 && rows[0].error.empty() && rows[1].error.empty();
    v.check(ok, "benchmark rows completed");
    if (!ok) return;
    const double speedup = rows[1].speedup;
    v.detail << "4-worker speedup " << speedup << " on " << cores << " hardware thread(s)";
    if (cores >= 4) {
        v.check(speedup >= 1.8, "4-worker speedup >= 1.8");
    } else {
        v.detail << "; speedup target needs >= 4 cores, only the table is checked here";
    }
}

// 6. Metric oracles.
void metrics(Verdict& v) {
    v.check(*auroc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, std::vector<int>{0, 0, 1, 1}) == 0.75, "worked case 0.75");
    std::mt19937_64 gen(6);
    double worst_roc = 0;
    for (int t = 0; t < 1000; ++t) {
        const std::size_t n = 2 + gen() % 199;
        std::vector<double> s(n);
        std::vector<int> y(n);
        const bool coarse = t % 2 == 0;
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = coarse ? static_cast<double>(gen() % 10) / 10 : std::uniform_real_distribution<double>()(gen);
            y[i] = static_cast<int>(gen() % 2);
        }
        y[0] = 0;
        y[1] = 1;
        worst_roc = std::max(worst_roc, std::abs(*auroc(s, y) - oracle::brute_auroc(s, y)));
    }
    double worst_ap = 0;
    std::size_t patterns = 0;
    for (int scores = 0; scores < 4; ++scores) {
        std::vector<double> s(8);
        for (auto& x : s) x = scores % 2 ? static_cast<double>(gen() % 4) : std::uniform_real_distribution<double>()(gen);
        for (int mask = 1; mask < 256; ++mask) {
            std::vector<int> y(8);
            for (int i = 0; i < 8; ++i) y[static_cast<std::size_t>(i)] = (mask >> i) & 1;
            worst_ap = std::max(worst_ap, std::abs(*auprc(s, y) - oracle::exhaustive_ap(s, y)));
            ++patterns;
        }
        v.check(!auprc(s, std::vector<int>(8, 0)).has_value(), "no positives gives undefined");
    }
    v.detail << "auroc max gap " << worst_roc << " over 1000 cases, auprc max gap " << worst_ap << " over " << patterns
             << " label patterns";
    v.check(worst_roc <= 1e-12, "auroc within 1e-12");
    v.check(worst_ap <= 1e-12, "auprc within 1e-12");
}

// 7. Determinism and round trips.
void determinism(Verdict& v) {
    const auto data = simulate(200, 120, 7);
    ModelConfig m;
    m.seq_length = 120;
    TrainConfig c;
    c.epochs_max = 2;
    c.seed = 7;
    for (std::size_t n : {1u, 2u, 4u}) {
        for (auto s : {StrategyKind::RingAllReduce, StrategyKind::ParameterServer, StrategyKind::Gossip}) {
            c.n_replicas = n;
            c.strategy = s;
            c.batch_per_replica = 64 / n;
            const auto a = encode_checkpoint(train<float>(c, m, data).params);
            const auto b = encode_checkpoint(train<float>(c, m, data).params);
            v.check(a == b, "bit-identical checkpoint N=" + std::to_string(n) + " " + std::string(to_string(s)));
            v.check(encode_checkpoint(decode_checkpoint<float>(a)) == a, "checkpoint round trip");
        }
    }

    SimConfig sim;
    const auto records = generate_dataset(sim, default_tal1_pwm());
    std::size_t positives = 0;
    for (const auto& r : records) positives += r.label == 1;
    v.check(records.size() == 20000 && positives == 10000, "10000/10000 labels");
    std::stringstream fasta;
    write_fasta(records, fasta);
    v.check(read_fasta(fasta) == records, "FASTA round trip");
    const auto s = split(records, SplitSpec{});
    v.check(s.train.size() == 14000 && s.test.size() == 2000 && s.validation.size() == 4000, "split 14000/2000/4000");

    std::mt19937_64 gen(7);
    for (int t = 0; t < 200; ++t) {
        const auto seq = oracle::random_bases(1 + gen() % 2000, gen);
        if (decode_one_hot(one_hot<float>(seq)) != seq) v.check(false, "one_hot inverse");
    }
    v.detail << "checkpoints bit-identical for N in {1,2,4} x 3 strategies; 20000 records, " << positives
             << " positive; splits " << s.train.size() << "/" << s.test.size() << "/" << s.validation.size();
}

// 8. Gossip properties.
void gossip(Verdict& v) {
    std::vector<std::vector<double>> w(4, std::vector<double>(16));
    std::mt19937_64 gen(8);
    for (auto& r : w)
        for (auto& x : r) x = static_cast<double>(gen() % 4096);
    const auto sum0 = oracle::gather_sum(w);
    auto spread = [&] {
        double s = 0;
        for (std::size_t i = 0; i < 16; ++i)
            for (const auto& a : w)
                for (const auto& b : w) s = std::max(s, std::abs(a[i] - b[i]));
        return s;
    };
    std::vector<double> spreads{spread()};
    for (std::size_t round = 0; round < 5; ++round) {
        gossip_round(w, round);
        v.check(oracle::gather_sum(w) == sum0, "sum conserved exactly");
        spreads.push_back(spread());
    }
    // Once every worker holds the mean the spread is zero and stays there.
    for (std::size_t k = 1; k < spreads.size(); ++k) {
        if (spreads[k - 1] > 0) v.check(spreads[k] < spreads[k - 1], "spread strictly decreases until zero");
        else v.check(spreads[k] == 0, "spread stays zero");
    }

    auto real = std::vector<std::vector<double>>(4, std::vector<double>(1246));
    for (auto& r : real)
        for (auto& x : r) x = std::uniform_real_distribution<double>(-1, 1)(gen);
    gossip_round(real, 0);
    gossip_finalize(real);
    v.check(linf(real[0], real[1]) == 0 && linf(real[0], real[2]) == 0 && linf(real[0], real[3]) == 0,
            "zero pairwise distance after finalize");
    v.detail << "spread over 5 rounds:";
    for (double s : spreads) v.detail << " " << s;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Verdict&)>>> criteria{
        {"1 quality on 4000 x 500 bp, 1 worker", quality},
        {"2 large-batch equivalence N=4x64 vs N=1x256", large_batch},
        {"3 ring all-reduce oracle", collective},
        {"4 gradient check", gradients},
        {"5 scaling table", scaling},
        {"6 metric oracles", metrics},
        {"7 determinism and round trips", determinism},
        {"8 gossip properties", gossip},
    };
    int failures = 0;
    for (const auto& [name, fn] : criteria) {
        Verdict v;
        const auto start = std::chrono::steady_clock::now();
        try {
            fn(v);
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail << " [exception: " << e.what() << "]";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s criterion %s: %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.str().c_str(),
                    secs);
        std::fflush(stdout);
        failures += !v.pass;
    }
    return failures == 0 ? 0 : 1;
}
