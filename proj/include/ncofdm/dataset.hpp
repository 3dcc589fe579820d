#pragma once

// Dataset generation and persistence. A dataset is a directory holding
//   manifest.json   UTF-8 description of how the data was produced
//   data.f32le      rows x 2*n1 little-endian float32, row-major
//   labels.f32le    optional, rows x (N+2): occupancy bits, N, delta_f in kHz
//   labels.u8       optional, one class byte per row
//
// Every row derives its own RNG stream from (seed, row index), so generation
// is reproducible and can be split across threads without changing output.
// The noise density N0 is calibrated once per dataset from the ensemble mean
// signal power after the fading channel, so the requested SNR holds on
// average over rows.

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "ncofdm/channel.hpp"
#include "ncofdm/rng.hpp"
#include "ncofdm/waveform.hpp"

namespace ncofdm::dataset {

using nlohmann::json;

struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr int kSchemaVersion = 1;

enum class LabelSchema { None, Occupancy, ClassIndex };

inline std::string label_schema_name(LabelSchema s) {
    switch (s) {
        case LabelSchema::None: return "none";
        case LabelSchema::Occupancy: return "occupancy";
        case LabelSchema::ClassIndex: return "class-index";
    }
    throw std::logic_error("label_schema_name");
}

inline LabelSchema label_schema_from_name(const std::string& s) {
    if (s == "none") return LabelSchema::None;
    if (s == "occupancy") return LabelSchema::Occupancy;
    if (s == "class-index") return LabelSchema::ClassIndex;
    throw SchemaError("unknown label schema: " + s);
}

// A fixed transmission case; datasets built from an explicit case list carry
// the case index as their class label.
struct CaseSpec {
    double delta_f = 0.0;
    waveform::PatternSpec pattern;
};

struct GenConfig {
    int n = 16;
    int n1 = 32;
    double t_s = 0.0;  // 0 = one useful symbol period per frame (t_u / n1)
    std::vector<double> delta_f_grid{15000.0};
    std::vector<CaseSpec> cases;  // when non-empty, overrides grid/pattern
    waveform::PatternFamilyConfig pattern;
    waveform::Modulation modulation = waveform::Modulation::Bpsk;
    bool random_power = true;  // p ~ U[1,2] per subcarrier, else all-1
    double snr_db = 10.0;
    bool noiseless = false;
    channel::ChannelSpec chan;
    double noise_fraction = 0.0;  // fraction of rows that are pure noise
    long rows = 1000;
    std::uint64_t seed = 0;
    LabelSchema labels = LabelSchema::None;
    int threads = 1;

    void validate() const {
        if (n < 1 || n1 < 1 || rows < 1) throw std::invalid_argument("GenConfig: n, n1, rows must be >= 1");
        if (cases.empty() && delta_f_grid.empty())
            throw std::invalid_argument("GenConfig: need a delta_f grid or explicit cases");
        if (noise_fraction < 0.0 || noise_fraction > 1.0)
            throw std::invalid_argument("GenConfig: noise_fraction outside [0,1]");
        if (noise_fraction > 0.0 && labels == LabelSchema::Occupancy)
            throw std::invalid_argument("GenConfig: occupancy labels undefined for noise rows");
        if (threads < 1) throw std::invalid_argument("GenConfig: threads must be >= 1");
        // A receiver samples at one fixed rate; per-row automatic sampling
        // would erase the distinction between subcarrier widths.
        std::set<double> dfs(delta_f_grid.begin(), delta_f_grid.end());
        for (const auto& c : cases) dfs.insert(c.delta_f);
        if (t_s <= 0.0 && dfs.size() > 1)
            throw std::invalid_argument("GenConfig: explicit t_s required with multiple delta_f");
    }

    double sample_interval(double delta_f) const {
        return t_s > 0.0 ? t_s : 1.0 / (delta_f * n1);
    }
};

struct DatasetManifest {
    int schema_version = kSchemaVersion;
    int n = 0;
    int n1 = 0;
    double t_s = 0.0;
    double snr_db = 0.0;
    std::string pattern_kind;
    std::string modulation;
    std::string channel;
    long rows = 0;
    std::uint64_t seed = 0;
    LabelSchema labels = LabelSchema::None;
    json config;  // full generator configuration echo
};

struct Dataset {
    DatasetManifest manifest;
    Eigen::MatrixXf x;         // d x rows, one sample per column
    Eigen::MatrixXf labels_f;  // (n+2) x rows when occupancy labels present
    std::vector<std::uint8_t> labels_u8;

    long rows() const { return x.cols(); }
    int dim() const { return static_cast<int>(x.rows()); }
};

// ---------------------------------------------------------------------------
// JSON marshalling
// ---------------------------------------------------------------------------

inline void to_json(json& j, const CaseSpec& c) {
    j = json{{"delta_f", c.delta_f}};
    std::visit(
        [&](const auto& k) {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, waveform::Ofdm>) {
                j["kind"] = "ofdm";
            } else if constexpr (std::is_same_v<T, waveform::Interleaved>) {
                j["kind"] = "interleaved";
                j["q"] = k.q;
                j["offset"] = k.offset;
            } else if constexpr (std::is_same_v<T, waveform::Pattern1>) {
                j["kind"] = "pattern1";
                j["q"] = k.q;
                j["c"] = k.c;
                j["block_offset"] = k.block_offset;
            } else if constexpr (std::is_same_v<T, waveform::Pattern2>) {
                j["kind"] = "pattern2";
                j["c"] = k.c;
                j["q1"] = k.q1;
                j["q2"] = k.q2;
                j["q3"] = k.q3;
                j["offset1"] = k.offset1;
                j["offset2"] = k.offset2;
            } else if constexpr (std::is_same_v<T, waveform::Explicit>) {
                j["kind"] = "explicit";
                j["active"] = k.active;
            } else {
                j["kind"] = "random";
                j["prob"] = k.prob;
            }
        },
        c.pattern);
}

inline void from_json(const json& j, CaseSpec& c) {
    c.delta_f = j.at("delta_f").get<double>();
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "ofdm") {
        c.pattern = waveform::Ofdm{};
    } else if (kind == "interleaved") {
        c.pattern = waveform::Interleaved{j.at("q").get<int>(), j.value("offset", 0)};
    } else if (kind == "pattern1") {
        c.pattern = waveform::Pattern1{j.at("q").get<int>(), j.at("c").get<int>(),
                                       j.at("block_offset").get<int>()};
    } else if (kind == "pattern2") {
        c.pattern = waveform::Pattern2{j.at("c").get<int>(),  j.at("q1").get<int>(),
                                       j.at("q2").get<int>(), j.at("q3").get<int>(),
                                       j.at("offset1").get<int>(), j.at("offset2").get<int>()};
    } else if (kind == "explicit") {
        c.pattern = waveform::Explicit{j.at("active").get<std::vector<int>>()};
    } else if (kind == "random") {
        c.pattern = waveform::RandomOcc{j.at("prob").get<double>()};
    } else {
        throw SchemaError("unknown pattern kind: " + kind);
    }
}

inline void to_json(json& j, const GenConfig& c) {
    j = json{{"n", c.n},
             {"n1", c.n1},
             {"t_s", c.t_s},
             {"delta_f_grid", c.delta_f_grid},
             {"cases", c.cases},
             {"pattern_family", waveform::pattern_family_name(c.pattern.family)},
             {"random_prob", c.pattern.random_prob},
             {"p1_q", {c.pattern.q_lo, c.pattern.q_hi}},
             {"p1_c", {c.pattern.c_lo, c.pattern.c_hi}},
             {"p2_c", {c.pattern.p2_c_lo, c.pattern.p2_c_hi}},
             {"p2_q", {c.pattern.p2_q_lo, c.pattern.p2_q_hi}},
             {"interleave_q", c.pattern.interleave_q},
             {"modulation", waveform::modulation_name(c.modulation)},
             {"random_power", c.random_power},
             {"snr_db", c.snr_db},
             {"noiseless", c.noiseless},
             {"channel", channel::channel_kind_name(c.chan.kind)},
             {"channel_amplitudes", c.chan.amplitudes},
             {"channel_delays_s", c.chan.delays_s},
             {"noise_fraction", c.noise_fraction},
             {"rows", c.rows},
             {"seed", c.seed},
             {"labels", label_schema_name(c.labels)}};
}

inline void from_json(const json& j, GenConfig& c) {
    c.n = j.at("n").get<int>();
    c.n1 = j.at("n1").get<int>();
    c.t_s = j.value("t_s", 0.0);
    c.delta_f_grid = j.value("delta_f_grid", std::vector<double>{15000.0});
    c.cases = j.value("cases", std::vector<CaseSpec>{});
    c.pattern.family = waveform::pattern_family_from_name(j.value("pattern_family", "random"));
    c.pattern.random_prob = j.value("random_prob", 0.5);
    if (j.contains("p1_q")) {
        c.pattern.q_lo = j["p1_q"][0].get<int>();
        c.pattern.q_hi = j["p1_q"][1].get<int>();
    }
    if (j.contains("p1_c")) {
        c.pattern.c_lo = j["p1_c"][0].get<int>();
        c.pattern.c_hi = j["p1_c"][1].get<int>();
    }
    if (j.contains("p2_c")) {
        c.pattern.p2_c_lo = j["p2_c"][0].get<int>();
        c.pattern.p2_c_hi = j["p2_c"][1].get<int>();
    }
    if (j.contains("p2_q")) {
        c.pattern.p2_q_lo = j["p2_q"][0].get<int>();
        c.pattern.p2_q_hi = j["p2_q"][1].get<int>();
    }
    c.pattern.interleave_q = j.value("interleave_q", 5);
    c.modulation = waveform::modulation_from_name(j.value("modulation", "bpsk"));
    c.random_power = j.value("random_power", true);
    c.snr_db = j.value("snr_db", 10.0);
    c.noiseless = j.value("noiseless", false);
    c.chan.kind = channel::channel_kind_from_name(j.value("channel", "awgn"));
    c.chan.amplitudes = j.value("channel_amplitudes", std::vector<double>{});
    c.chan.delays_s = j.value("channel_delays_s", std::vector<double>{});
    c.noise_fraction = j.value("noise_fraction", 0.0);
    c.rows = j.at("rows").get<long>();
    c.seed = j.value("seed", std::uint64_t{0});
    c.labels = label_schema_from_name(j.value("labels", "none"));
    c.threads = 1;
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

// Transmission parameters for one row, drawn from the configured family or
// case list. The draw order is fixed so rows are reproducible.
inline waveform::TransmissionParams draw_transmission(const GenConfig& cfg, Rng& rng,
                                                      int* case_idx = nullptr) {
    waveform::TransmissionParams p;
    p.n = cfg.n;
    p.modulation = cfg.modulation;
    if (!cfg.cases.empty()) {
        const int ci = static_cast<int>(rng.uniform_int(0, static_cast<long>(cfg.cases.size()) - 1));
        if (case_idx) *case_idx = ci;
        p.delta_f = cfg.cases[ci].delta_f;
        p.pattern = waveform::make_pattern(cfg.cases[ci].pattern, cfg.n, rng);
    } else {
        if (case_idx) *case_idx = -1;
        const int di = static_cast<int>(rng.uniform_int(0, static_cast<long>(cfg.delta_f_grid.size()) - 1));
        p.delta_f = cfg.delta_f_grid[di];
        p.pattern = waveform::make_pattern(waveform::sample_pattern_spec(cfg.pattern, cfg.n, rng),
                                           cfg.n, rng);
    }
    p.power = cfg.random_power ? waveform::random_powers(cfg.n, rng) : waveform::unit_powers(cfg.n);
    return p;
}

namespace detail {

struct RowResult {
    std::vector<double> x;
    std::vector<float> label_f;
    std::uint8_t label_u8 = 0;
};

// One dataset row. Draw order is fixed: noise gate, case/delta_f, pattern,
// powers, bits, channel, noise.
inline RowResult generate_row(const GenConfig& cfg, double n0, std::uint64_t row_seed) {
    Rng rng(row_seed);
    RowResult out;

    const bool noise_row = cfg.noise_fraction > 0.0 && rng.uniform() < cfg.noise_fraction;
    if (noise_row) {
        const double t_s = cfg.sample_interval(cfg.cases.empty() ? cfg.delta_f_grid.front()
                                                                 : cfg.cases.front().delta_f);
        waveform::ComplexFrame f;
        f.t_s = t_s;
        f.samples.assign(cfg.n1, waveform::cdouble(0.0, 0.0));
        f = channel::apply_awgn(f, n0, rng);
        out.x = waveform::vectorize(f);
        out.label_u8 = 0;
        return out;
    }

    int case_idx = -1;
    const waveform::TransmissionParams p = draw_transmission(cfg, rng, &case_idx);

    const int bits = p.pattern.active_count() * waveform::bits_per_symbol(cfg.modulation);
    const auto symbols = waveform::modulate(waveform::random_bits(bits, rng), cfg.modulation);
    auto frame = waveform::synthesize(p, symbols, cfg.n1, cfg.sample_interval(p.delta_f));
    auto [received, gain] = channel::apply_channel(frame, cfg.chan, cfg.noiseless ? 0.0 : n0, rng);
    (void)gain;
    out.x = waveform::vectorize(received);

    if (cfg.labels == LabelSchema::Occupancy) {
        out.label_f.reserve(cfg.n + 2);
        for (int i = 0; i < cfg.n; ++i) out.label_f.push_back(static_cast<float>(p.pattern.u[i]));
        out.label_f.push_back(static_cast<float>(cfg.n));
        out.label_f.push_back(static_cast<float>(p.delta_f / 1000.0));  // kHz
    } else if (cfg.labels == LabelSchema::ClassIndex) {
        out.label_u8 = cfg.noise_fraction > 0.0 ? 1 : static_cast<std::uint8_t>(std::max(case_idx, 0));
    }
    return out;
}

// Ensemble mean signal power after fading, before noise.
inline double probe_signal_power(const GenConfig& cfg, int probes = 512) {
    GenConfig probe_cfg = cfg;
    probe_cfg.noise_fraction = 0.0;
    probe_cfg.noiseless = true;
    probe_cfg.labels = LabelSchema::None;
    double acc = 0.0;
    const std::uint64_t probe_stream = splitmix64(cfg.seed ^ 0x50524f4245ULL);  // distinct stream
    for (int i = 0; i < probes; ++i) {
        const auto row = generate_row(probe_cfg, 0.0, derive_seed(probe_stream, i));
        double power = 0.0;
        for (double v : row.x) power += v * v;
        acc += power / cfg.n1;
    }
    return acc / probes;
}

}  // namespace detail

inline double calibrated_n0(const GenConfig& cfg) {
    if (cfg.noiseless) return 0.0;
    return detail::probe_signal_power(cfg) / channel::db_to_linear(cfg.snr_db);
}

inline Dataset build_dataset(const GenConfig& cfg) {
    cfg.validate();
    const double n0 = calibrated_n0(cfg);

    Dataset ds;
    ds.x.resize(2 * cfg.n1, cfg.rows);
    if (cfg.labels == LabelSchema::Occupancy) ds.labels_f.resize(cfg.n + 2, cfg.rows);
    if (cfg.labels == LabelSchema::ClassIndex) ds.labels_u8.assign(cfg.rows, 0);

    auto fill_range = [&](long begin, long end) {
        for (long r = begin; r < end; ++r) {
            const auto row = detail::generate_row(cfg, n0, derive_seed(cfg.seed, r));
            for (int i = 0; i < 2 * cfg.n1; ++i) ds.x(i, r) = static_cast<float>(row.x[i]);
            if (cfg.labels == LabelSchema::Occupancy)
                for (int i = 0; i < cfg.n + 2; ++i) ds.labels_f(i, r) = row.label_f[i];
            if (cfg.labels == LabelSchema::ClassIndex) ds.labels_u8[r] = row.label_u8;
        }
    };

    if (cfg.threads <= 1) {
        fill_range(0, cfg.rows);
    } else {
        std::vector<std::thread> pool;
        const long chunk = (cfg.rows + cfg.threads - 1) / cfg.threads;
        for (int t = 0; t < cfg.threads; ++t) {
            const long lo = t * chunk;
            const long hi = std::min<long>(cfg.rows, lo + chunk);
            if (lo < hi) pool.emplace_back(fill_range, lo, hi);
        }
        for (auto& th : pool) th.join();
    }

    ds.manifest.schema_version = kSchemaVersion;
    ds.manifest.n = cfg.n;
    ds.manifest.n1 = cfg.n1;
    ds.manifest.t_s = cfg.sample_interval(cfg.cases.empty() ? cfg.delta_f_grid.front()
                                                            : cfg.cases.front().delta_f);
    ds.manifest.snr_db = cfg.snr_db;
    ds.manifest.pattern_kind =
        cfg.cases.empty() ? waveform::pattern_family_name(cfg.pattern.family) : "cases";
    ds.manifest.modulation = waveform::modulation_name(cfg.modulation);
    ds.manifest.channel = channel::channel_kind_name(cfg.chan.kind);
    ds.manifest.rows = cfg.rows;
    ds.manifest.seed = cfg.seed;
    ds.manifest.labels = cfg.labels;
    ds.manifest.config = cfg;
    return ds;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

namespace detail {
inline void atomic_write(const std::filesystem::path& path, const void* data, std::size_t bytes) {
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open " + tmp);
        os.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
        if (!os) throw std::runtime_error("short write to " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

inline std::vector<char> read_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary | std::ios::ate);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    const auto size = is.tellg();
    std::vector<char> buf(static_cast<std::size_t>(size));
    is.seekg(0);
    is.read(buf.data(), size);
    if (!is) throw std::runtime_error("short read from " + path.string());
    return buf;
}
}  // namespace detail

inline void save_dataset(const std::filesystem::path& dir, const Dataset& ds) {
    std::filesystem::create_directories(dir);
    json m{{"schema_version", ds.manifest.schema_version},
           {"n", ds.manifest.n},
           {"n1", ds.manifest.n1},
           {"t_s", ds.manifest.t_s},
           {"snr_db", ds.manifest.snr_db},
           {"pattern_kind", ds.manifest.pattern_kind},
           {"modulation", ds.manifest.modulation},
           {"channel", ds.manifest.channel},
           {"rows", ds.manifest.rows},
           {"seed", ds.manifest.seed},
           {"labels", label_schema_name(ds.manifest.labels)},
           {"config", ds.manifest.config}};
    const std::string text = m.dump(2) + "\n";
    detail::atomic_write(dir / "manifest.json", text.data(), text.size());
    detail::atomic_write(dir / "data.f32le", ds.x.data(), sizeof(float) * ds.x.size());
    if (ds.manifest.labels == LabelSchema::Occupancy)
        detail::atomic_write(dir / "labels.f32le", ds.labels_f.data(),
                             sizeof(float) * ds.labels_f.size());
    if (ds.manifest.labels == LabelSchema::ClassIndex)
        detail::atomic_write(dir / "labels.u8", ds.labels_u8.data(), ds.labels_u8.size());
}

inline Dataset load_dataset(const std::filesystem::path& dir) {
    const auto mbuf = detail::read_file(dir / "manifest.json");
    const json m = json::parse(mbuf.begin(), mbuf.end());
    if (m.value("schema_version", -1) != kSchemaVersion)
        throw SchemaError("unsupported dataset schema_version");

    Dataset ds;
    ds.manifest.schema_version = m["schema_version"].get<int>();
    ds.manifest.n = m.at("n").get<int>();
    ds.manifest.n1 = m.at("n1").get<int>();
    ds.manifest.t_s = m.at("t_s").get<double>();
    ds.manifest.snr_db = m.at("snr_db").get<double>();
    ds.manifest.pattern_kind = m.at("pattern_kind").get<std::string>();
    ds.manifest.modulation = m.at("modulation").get<std::string>();
    ds.manifest.channel = m.at("channel").get<std::string>();
    ds.manifest.rows = m.at("rows").get<long>();
    ds.manifest.seed = m.at("seed").get<std::uint64_t>();
    ds.manifest.labels = label_schema_from_name(m.at("labels").get<std::string>());
    ds.manifest.config = m.value("config", json::object());

    const auto xbuf = detail::read_file(dir / "data.f32le");
    const long d = 2L * ds.manifest.n1;
    if (xbuf.size() != static_cast<std::size_t>(d) * ds.manifest.rows * sizeof(float))
        throw SchemaError("data.f32le size does not match manifest");
    ds.x.resize(d, ds.manifest.rows);
    std::memcpy(ds.x.data(), xbuf.data(), xbuf.size());

    if (ds.manifest.labels == LabelSchema::Occupancy) {
        const auto lbuf = detail::read_file(dir / "labels.f32le");
        const long ld = ds.manifest.n + 2;
        if (lbuf.size() != static_cast<std::size_t>(ld) * ds.manifest.rows * sizeof(float))
            throw SchemaError("labels.f32le size does not match manifest");
        ds.labels_f.resize(ld, ds.manifest.rows);
        std::memcpy(ds.labels_f.data(), lbuf.data(), lbuf.size());
    } else if (ds.manifest.labels == LabelSchema::ClassIndex) {
        const auto lbuf = detail::read_file(dir / "labels.u8");
        if (lbuf.size() != static_cast<std::size_t>(ds.manifest.rows))
            throw SchemaError("labels.u8 size does not match manifest");
        ds.labels_u8.assign(lbuf.begin(), lbuf.end());
    }
    return ds;
}

// Disjoint, exhaustive partition by a seeded permutation.
inline std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction,
                                         std::uint64_t seed) {
    if (train_fraction <= 0.0 || train_fraction >= 1.0)
        throw std::invalid_argument("split: train fraction must lie in (0,1)");
    const long rows = ds.rows();
    std::vector<long> perm(rows);
    for (long i = 0; i < rows; ++i) perm[i] = i;
    Rng rng(seed);
    for (long i = rows - 1; i > 0; --i) {
        const long j = rng.uniform_int(0, i);
        std::swap(perm[i], perm[j]);
    }
    const long train_rows = std::lround(train_fraction * rows);

    auto take = [&](long begin, long end) {
        Dataset out;
        out.manifest = ds.manifest;
        out.manifest.rows = end - begin;
        out.x.resize(ds.x.rows(), end - begin);
        if (ds.labels_f.size() > 0) out.labels_f.resize(ds.labels_f.rows(), end - begin);
        if (!ds.labels_u8.empty()) out.labels_u8.resize(end - begin);
        for (long i = begin; i < end; ++i) {
            out.x.col(i - begin) = ds.x.col(perm[i]);
            if (ds.labels_f.size() > 0) out.labels_f.col(i - begin) = ds.labels_f.col(perm[i]);
            if (!ds.labels_u8.empty()) out.labels_u8[i - begin] = ds.labels_u8[perm[i]];
        }
        return out;
    };
    return {take(0, train_rows), take(train_rows, rows)};
}

// Feature matrix as double, one sample per column.
inline Eigen::MatrixXd features_as_double(const Dataset& ds) { return ds.x.cast<double>(); }

}  // namespace ncofdm::dataset
