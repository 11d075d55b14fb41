#pragma once

// Simulated regulatory sequences: positives carry a homotypic cluster of motif
// instances sampled from a PWM, negatives are motif-free background.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dnacnn/error.hpp"
#include "dnacnn/random.hpp"

namespace dnacnn {

inline constexpr std::string_view kBases = "ACGT";

/// Column of a base under A,C,G,T order, or -1.
inline int base_index(char b) {
    switch (b) {
        case 'A': return 0;
        case 'C': return 1;
        case 'G': return 2;
        case 'T': return 3;
        default: return -1;
    }
}

using BaseProbs = std::array<double, 4>;

inline void validate_probs(const BaseProbs& p, const std::string& what) {
    double sum = 0.0;
    for (double v : p) {
        if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(what + ": probabilities must lie in [0,1]");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
        std::ostringstream os;
        os << what << ": probabilities sum to " << sum << ", expected 1";
        throw ValidationError(os.str());
    }
}

struct Pwm {
    std::string name;
    std::vector<BaseProbs> matrix;  // one row per motif position, columns A,C,G,T

    std::size_t rows() const noexcept { return matrix.size(); }

    void validate() const {
        if (matrix.empty()) throw ValidationError("PWM '" + name + "' has no rows");
        for (std::size_t r = 0; r < matrix.size(); ++r) validate_probs(matrix[r], "PWM '" + name + "' row " + std::to_string(r));
    }

    /// Most probable base per row (first column wins ties).
    std::string consensus() const {
        std::string s;
        s.reserve(rows());
        for (const auto& row : matrix) {
            s += kBases[static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin())];
        }
        return s;
    }

    /// Every row puts `p_consensus` on the given base and splits the rest evenly.
    static Pwm from_consensus(std::string name, std::string_view consensus, double p_consensus) {
        Pwm pwm{std::move(name), {}};
        const double other = (1.0 - p_consensus) / 3.0;
        for (char b : consensus) {
            const int idx = base_index(b);
            if (idx < 0) throw ValidationError(std::string("consensus contains non-ACGT base '") + b + "'");
            BaseProbs row{other, other, other, other};
            row[static_cast<std::size_t>(idx)] = p_consensus;
            pwm.matrix.push_back(row);
        }
        pwm.validate();
        return pwm;
    }
};

/// Built-in 10 bp motif around the TAL1 E-box core CAGATG.
inline Pwm default_tal1_pwm() { return Pwm::from_consensus("TAL1_ebox", "AACAGATGGT", 0.85); }

/// `#PWM <name> <rows>` then one line of four A C G T probabilities per row.
inline Pwm read_pwm(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    auto next_line = [&]() -> bool {
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.find_first_not_of(" \t") != std::string::npos) return true;
        }
        return false;
    };
    if (!next_line()) throw ParseError("empty PWM file", line_no + 1);
    std::istringstream header(line);
    std::string tag, name;
    long long rows = -1;
    if (!(header >> tag >> name >> rows) || tag != "#PWM") throw ParseError("expected '#PWM <name> <rows>'", line_no);
    if (rows < 1) throw ParseError("PWM row count must be >= 1", line_no);
    Pwm pwm{name, {}};
    for (long long r = 0; r < rows; ++r) {
        if (!next_line()) throw ParseError("expected " + std::to_string(rows) + " PWM rows", line_no + 1);
        std::istringstream ls(line);
        BaseProbs row{};
        for (double& v : row) {
            if (!(ls >> v)) throw ParseError("expected 4 probabilities", line_no);
        }
        std::string extra;
        if (ls >> extra) throw ParseError("unexpected token '" + extra + "'", line_no);
        try {
            validate_probs(row, "PWM row");
        } catch (const ValidationError& e) {
            throw ParseError(e.what(), line_no);
        }
        pwm.matrix.push_back(row);
    }
    return pwm;
}

inline Pwm read_pwm_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open PWM file " + path);
    return read_pwm(in);
}

inline void write_pwm(const Pwm& pwm, std::ostream& out) {
    out << "#PWM " << pwm.name << ' ' << pwm.rows() << '\n';
    out << std::setprecision(17);
    for (const auto& row : pwm.matrix) out << row[0] << ' ' << row[1] << ' ' << row[2] << ' ' << row[3] << '\n';
}

struct SimConfig {
    std::size_t seq_length = 1500;
    std::size_t n_positive = 10000;
    std::size_t n_negative = 10000;
    std::size_t cluster_min = 2;
    std::size_t cluster_max = 5;
    double cluster_region_fraction = 0.6;
    BaseProbs background_freqs{0.25, 0.25, 0.25, 0.25};
    std::uint64_t seed = 1;

    std::size_t region_length() const {
        return static_cast<std::size_t>(std::floor(cluster_region_fraction * static_cast<double>(seq_length)));
    }

    void validate(const Pwm& pwm) const {
        pwm.validate();
        validate_probs(background_freqs, "background_freqs");
        if (seq_length < pwm.rows()) {
            throw ConfigError("seq_length " + std::to_string(seq_length) + " is shorter than the motif (" +
                              std::to_string(pwm.rows()) + " bp)");
        }
        if (!(cluster_region_fraction > 0.0 && cluster_region_fraction <= 1.0)) {
            throw ConfigError("cluster_region_fraction must lie in (0,1]");
        }
        if (cluster_min < 1 || cluster_min > cluster_max) {
            throw ConfigError("cluster_min/cluster_max must satisfy 1 <= cluster_min <= cluster_max");
        }
        if (cluster_max * pwm.rows() > region_length()) {
            throw ConfigError("cluster_max * motif length (" + std::to_string(cluster_max * pwm.rows()) +
                              ") exceeds the cluster region (" + std::to_string(region_length()) + " bp)");
        }
    }
};

struct SequenceRecord {
    std::string id;
    std::string bases;
    int label = 0;
    std::vector<std::size_t> motif_positions;

    friend bool operator==(const SequenceRecord&, const SequenceRecord&) = default;
};

inline std::string sample_background(std::size_t length, const BaseProbs& freqs, Rng& rng) {
    validate_probs(freqs, "background_freqs");
    std::string s(length, 'A');
    for (auto& b : s) b = kBases[rng.categorical(freqs)];
    return s;
}

inline std::string sample_motif_instance(const Pwm& pwm, Rng& rng) {
    std::string s(pwm.rows(), 'A');
    for (std::size_t r = 0; r < pwm.rows(); ++r) s[r] = kBases[rng.categorical(pwm.matrix[r])];
    return s;
}

/// Half-open range of sequence offsets eligible to hold motif instances.
struct Region {
    std::size_t begin = 0;
    std::size_t end = 0;
};

inline Region central_region(std::size_t seq_length, double fraction) {
    const auto len = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(seq_length)));
    const std::size_t begin = (seq_length - len) / 2;
    return {begin, begin + len};
}

struct EmbedResult {
    std::string bases;
    std::vector<std::size_t> positions;
};

/// Writes `count` non-overlapping instances inside `region`, every placement equally likely.
inline EmbedResult embed_cluster(std::string background, const Pwm& pwm, std::size_t count, Region region, Rng& rng) {
    EmbedResult r{std::move(background), {}};
    if (count == 0) return r;
    const std::size_t w = pwm.rows();
    if (region.end > r.bases.size() || region.begin > region.end || region.end - region.begin < w) {
        throw PlacementError("motif of " + std::to_string(w) + " bp does not fit in region [" +
                             std::to_string(region.begin) + "," + std::to_string(region.end) + ")");
    }
    const std::size_t span = region.end - region.begin;
    if (count * w > span) {
        throw PlacementError("cannot place " + std::to_string(count) + " non-overlapping " + std::to_string(w) +
                             " bp motifs in a " + std::to_string(span) + " bp region");
    }
    // Sorted non-overlapping starts p_1 < ... < p_k correspond one-to-one to k-subsets
    // z_1 < ... < z_k of [0, span - k*w + k) via p_i = begin + z_i + i*(w-1), so a
    // uniform subset (Floyd's algorithm) is a uniform placement.
    const std::size_t pool = span - count * w + count;
    std::vector<std::size_t> subset;
    subset.reserve(count);
    for (std::size_t j = pool - count; j < pool; ++j) {
        const std::size_t t = rng.below(j + 1);
        subset.push_back(std::find(subset.begin(), subset.end(), t) == subset.end() ? t : j);
    }
    std::sort(subset.begin(), subset.end());
    for (std::size_t i = 0; i < count; ++i) r.positions.push_back(region.begin + subset[i] + i * (w - 1));
    for (std::size_t p : r.positions) {
        const std::string inst = sample_motif_instance(pwm, rng);
        std::copy(inst.begin(), inst.end(), r.bases.begin() + static_cast<std::ptrdiff_t>(p));
    }
    return r;
}

inline constexpr std::size_t kMaxNegativeResamples = 100;

inline std::string record_id(std::size_t index) {
    std::ostringstream os;
    os << "seq_" << std::setw(5) << std::setfill('0') << index + 1;
    return os.str();
}

/// n_positive labelled-1 records followed by n_negative labelled-0 records.
inline std::vector<SequenceRecord> generate_dataset(const SimConfig& config, const Pwm& pwm) {
    config.validate(pwm);
    Rng rng(config.seed);
    const Region region = central_region(config.seq_length, config.cluster_region_fraction);
    const std::string consensus = pwm.consensus();
    std::vector<SequenceRecord> records;
    records.reserve(config.n_positive + config.n_negative);

    for (std::size_t i = 0; i < config.n_positive; ++i) {
        const std::size_t count = config.cluster_min + rng.below(config.cluster_max - config.cluster_min + 1);
        auto embedded = embed_cluster(sample_background(config.seq_length, config.background_freqs, rng), pwm, count,
                                      region, rng);
        records.push_back({record_id(records.size()), std::move(embedded.bases), 1, std::move(embedded.positions)});
    }
    for (std::size_t i = 0; i < config.n_negative; ++i) {
        std::string bases = sample_background(config.seq_length, config.background_freqs, rng);
        std::size_t retries = 0;
        while (bases.find(consensus) != std::string::npos) {
            if (++retries > kMaxNegativeResamples) {
                throw PlacementError("negative sequence kept matching the motif consensus after " +
                                     std::to_string(kMaxNegativeResamples) + " resamples");
            }
            bases = sample_background(config.seq_length, config.background_freqs, rng);
        }
        records.push_back({record_id(records.size()), std::move(bases), 0, {}});
    }
    return records;
}

// FASTA with labels: `>ID label=<0|1> motifs=<starts|none>`, sequence wrapped at 80.

inline constexpr std::size_t kFastaWidth = 80;

inline void write_fasta(const std::vector<SequenceRecord>& records, std::ostream& out) {
    for (const auto& rec : records) {
        out << '>' << rec.id << " label=" << rec.label << " motifs=";
        if (rec.motif_positions.empty()) {
            out << "none";
        } else {
            for (std::size_t i = 0; i < rec.motif_positions.size(); ++i) {
                if (i) out << ',';
                out << rec.motif_positions[i];
            }
        }
        out << '\n';
        for (std::size_t i = 0; i < rec.bases.size(); i += kFastaWidth) {
            out.write(rec.bases.data() + i, static_cast<std::streamsize>(std::min(kFastaWidth, rec.bases.size() - i)));
            out << '\n';
        }
    }
}

inline void write_fasta(const std::vector<SequenceRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    write_fasta(records, out);
    if (!out) throw IoError("failed writing " + path);
}

namespace detail {

inline std::size_t parse_count(std::string_view s, std::size_t line_no) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string_view::npos) {
        throw ParseError("expected a non-negative integer, got '" + std::string(s) + "'", line_no);
    }
    return std::stoull(std::string(s));
}

inline SequenceRecord parse_fasta_header(const std::string& line, std::size_t line_no) {
    std::istringstream hs(line.substr(1));
    SequenceRecord rec;
    if (!(hs >> rec.id)) throw ParseError("header has no identifier", line_no);
    bool have_label = false, have_motifs = false;
    std::string tok;
    while (hs >> tok) {
        if (tok.rfind("label=", 0) == 0) {
            const std::string v = tok.substr(6);
            if (v != "0" && v != "1") throw ParseError("label must be 0 or 1, got '" + v + "'", line_no);
            rec.label = v == "1";
            have_label = true;
        } else if (tok.rfind("motifs=", 0) == 0) {
            const std::string v = tok.substr(7);
            if (v != "none") {
                std::size_t start = 0;
                while (true) {
                    const std::size_t comma = v.find(',', start);
                    rec.motif_positions.push_back(
                        parse_count(std::string_view(v).substr(start, comma == std::string::npos ? v.npos : comma - start), line_no));
                    if (comma == std::string::npos) break;
                    start = comma + 1;
                }
            }
            have_motifs = true;
        } else {
            throw ParseError("unknown header field '" + tok + "'", line_no);
        }
    }
    if (!have_label) throw ParseError("header is missing label=", line_no);
    if (!have_motifs) throw ParseError("header is missing motifs=", line_no);
    return rec;
}

}  // namespace detail

inline std::vector<SequenceRecord> read_fasta(std::istream& in) {
    std::vector<SequenceRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '>') {
            records.push_back(detail::parse_fasta_header(line, line_no));
            continue;
        }
        if (records.empty()) throw ParseError("sequence data before the first header", line_no);
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (base_index(line[i]) < 0) {
                throw ParseError(std::string("invalid base '") + line[i] + "' at column " + std::to_string(i + 1),
                                 line_no);
            }
        }
        records.back().bases += line;
    }
    return records;
}

inline std::vector<SequenceRecord> read_fasta(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset " + path);
    return read_fasta(in);
}

}  // namespace dnacnn
