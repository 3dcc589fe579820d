#pragma once

// NC-OFDM/OFDM baseband synthesis: subcarrier occupancy patterns, symbol
// mapping, single-symbol frame generation and the real/imaginary sample
// layout used as the feature vector everywhere else.
//
// Conventions:
//   - Subcarrier n (0-based, n = 0..N-1) sits at frequency n * delta_f.
//   - A frame holds one CP-free symbol: s[k] = sum_n u(n) p(n) s_n
//     exp(j 2 pi n delta_f k T_s), k = 0..n1-1.
//   - Multi-symbol records re-anchor the exponential every T_o = T_u + T_cp,
//     which reproduces the cyclic-prefix structure of the continuous model.

#include <algorithm>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "ncofdm/rng.hpp"

namespace ncofdm::waveform {

using cdouble = std::complex<double>;

// ---------------------------------------------------------------------------
// Modulation
// ---------------------------------------------------------------------------

enum class Modulation { Bpsk, Qam16 };

inline int bits_per_symbol(Modulation m) { return m == Modulation::Bpsk ? 1 : 4; }

inline std::string modulation_name(Modulation m) {
    return m == Modulation::Bpsk ? "bpsk" : "qam16";
}

inline Modulation modulation_from_name(const std::string& s) {
    if (s == "bpsk") return Modulation::Bpsk;
    if (s == "qam16") return Modulation::Qam16;
    throw std::invalid_argument("unknown modulation: " + s);
}

namespace detail {
// Gray-coded 16-QAM axis: two bits -> amplitude in {-3,-1,+1,+3}.
inline double qam16_axis(int b0, int b1) {
    if (b0 == 0 && b1 == 0) return -3.0;
    if (b0 == 0 && b1 == 1) return -1.0;
    if (b0 == 1 && b1 == 1) return +1.0;
    return +3.0;
}

inline void qam16_axis_bits(double a, int& b0, int& b1) {
    if (a < -2.0) {
        b0 = 0; b1 = 0;
    } else if (a < 0.0) {
        b0 = 0; b1 = 1;
    } else if (a < 2.0) {
        b0 = 1; b1 = 1;
    } else {
        b0 = 1; b1 = 0;
    }
}
}  // namespace detail

// Maps bits to unit-average-energy symbols. BPSK: 0 -> -1, 1 -> +1.
// 16-QAM: Gray mapping per axis, scaled by 1/sqrt(10).
inline std::vector<cdouble> modulate(const std::vector<std::uint8_t>& bits, Modulation mod) {
    const int b = bits_per_symbol(mod);
    if (bits.size() % b != 0)
        throw std::invalid_argument("modulate: bit count not divisible by bits per symbol");
    std::vector<cdouble> out(bits.size() / b);
    if (mod == Modulation::Bpsk) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = bits[i] ? 1.0 : -1.0;
    } else {
        const double scale = 1.0 / std::sqrt(10.0);
        for (std::size_t i = 0; i < out.size(); ++i) {
            const std::uint8_t* p = &bits[4 * i];
            out[i] = cdouble(detail::qam16_axis(p[0], p[1]), detail::qam16_axis(p[2], p[3])) * scale;
        }
    }
    return out;
}

// Minimum-distance symbol decisions back to bits.
inline std::vector<std::uint8_t> demodulate(const std::vector<cdouble>& symbols, Modulation mod) {
    std::vector<std::uint8_t> bits;
    bits.reserve(symbols.size() * bits_per_symbol(mod));
    if (mod == Modulation::Bpsk) {
        for (const auto& s : symbols) bits.push_back(s.real() > 0.0 ? 1 : 0);
    } else {
        const double scale = std::sqrt(10.0);
        for (const auto& s : symbols) {
            int b0, b1;
            detail::qam16_axis_bits(s.real() * scale, b0, b1);
            bits.push_back(static_cast<std::uint8_t>(b0));
            bits.push_back(static_cast<std::uint8_t>(b1));
            detail::qam16_axis_bits(s.imag() * scale, b0, b1);
            bits.push_back(static_cast<std::uint8_t>(b0));
            bits.push_back(static_cast<std::uint8_t>(b1));
        }
    }
    return bits;
}

// ---------------------------------------------------------------------------
// Subcarrier occupancy patterns
// ---------------------------------------------------------------------------

struct Ofdm {};

// Active indices offset, offset+q, offset+2q, ... (spacing q).
struct Interleaved {
    int q = 1;
    int offset = 0;
};

// Baseline of actives every (q+1) positions (q inactive between actives),
// with a contiguous block of c actives forced on at [block_offset, block_offset+c).
struct Pattern1 {
    int q = 1;
    int c = 4;
    int block_offset = 0;
};

// Two contiguous blocks of length c at offset1/offset2, the three regions
// around them interleaved with q1, q2, q3 inactive slots between actives.
struct Pattern2 {
    int c = 3;
    int q1 = 1, q2 = 1, q3 = 1;
    int offset1 = 0, offset2 = 0;
};

// Each subcarrier active independently with the given probability.
struct RandomOcc {
    double prob = 0.5;
};

// A fixed index set, for structured case studies.
struct Explicit {
    std::vector<int> active;
};

using PatternSpec = std::variant<Ofdm, Interleaved, Pattern1, Pattern2, RandomOcc, Explicit>;

enum class PatternFamily { Ofdm, Interleaved, Pattern1, Pattern2, Random };

inline std::string pattern_family_name(PatternFamily f) {
    switch (f) {
        case PatternFamily::Ofdm: return "ofdm";
        case PatternFamily::Interleaved: return "interleaved";
        case PatternFamily::Pattern1: return "pattern1";
        case PatternFamily::Pattern2: return "pattern2";
        case PatternFamily::Random: return "random";
    }
    throw std::logic_error("pattern_family_name");
}

inline PatternFamily pattern_family_from_name(const std::string& s) {
    if (s == "ofdm") return PatternFamily::Ofdm;
    if (s == "interleaved") return PatternFamily::Interleaved;
    if (s == "pattern1") return PatternFamily::Pattern1;
    if (s == "pattern2") return PatternFamily::Pattern2;
    if (s == "random") return PatternFamily::Random;
    throw std::invalid_argument("unknown pattern family: " + s);
}

struct SubcarrierPattern {
    std::vector<std::uint8_t> u;  // 1 = active
    PatternSpec kind;

    int size() const { return static_cast<int>(u.size()); }

    int active_count() const {
        int c = 0;
        for (auto v : u) c += v;
        return c;
    }

    std::vector<int> active_indices() const {
        std::vector<int> idx;
        for (int i = 0; i < size(); ++i)
            if (u[i]) idx.push_back(i);
        return idx;
    }
};

namespace detail {
inline void fill_interleaved(std::vector<std::uint8_t>& u, int begin, int end, int step,
                             int phase) {
    for (int i = begin; i < end; ++i)
        if ((i - phase) % step == 0) u[i] = 1;
}
}  // namespace detail

// Builds the occupancy vector for a fully specified pattern. Random draws
// (occupancy coin flips) come from `rng`; an all-inactive random draw is
// redrawn so that every pattern has at least one active subcarrier.
inline SubcarrierPattern make_pattern(const PatternSpec& spec, int n, Rng& rng) {
    if (n < 1) throw std::invalid_argument("make_pattern: N must be >= 1");
    std::vector<std::uint8_t> u(n, 0);

    if (std::holds_alternative<Ofdm>(spec)) {
        std::fill(u.begin(), u.end(), 1);
    } else if (const auto* il = std::get_if<Interleaved>(&spec)) {
        if (il->q < 1) throw std::invalid_argument("make_pattern: interleave factor q must be >= 1");
        if (il->offset < 0 || il->offset >= n)
            throw std::invalid_argument("make_pattern: interleaved offset out of range");
        for (int i = il->offset; i < n; i += il->q) u[i] = 1;
    } else if (const auto* p1 = std::get_if<Pattern1>(&spec)) {
        if (p1->q < 1 || p1->c < 1) throw std::invalid_argument("make_pattern: pattern1 parameters");
        if (p1->block_offset < 0 || p1->block_offset + p1->c > n)
            throw std::invalid_argument("make_pattern: pattern1 block overflows N");
        detail::fill_interleaved(u, 0, n, p1->q + 1, 0);
        std::fill(u.begin() + p1->block_offset, u.begin() + p1->block_offset + p1->c, 1);
    } else if (const auto* p2 = std::get_if<Pattern2>(&spec)) {
        if (p2->c < 1 || p2->q1 < 1 || p2->q2 < 1 || p2->q3 < 1)
            throw std::invalid_argument("make_pattern: pattern2 parameters");
        if (p2->offset1 < 0 || p2->offset1 + p2->c > p2->offset2 || p2->offset2 + p2->c > n)
            throw std::invalid_argument("make_pattern: pattern2 blocks overflow N");
        detail::fill_interleaved(u, 0, p2->offset1, p2->q1 + 1, 0);
        std::fill(u.begin() + p2->offset1, u.begin() + p2->offset1 + p2->c, 1);
        detail::fill_interleaved(u, p2->offset1 + p2->c, p2->offset2, p2->q2 + 1,
                                 p2->offset1 + p2->c);
        std::fill(u.begin() + p2->offset2, u.begin() + p2->offset2 + p2->c, 1);
        detail::fill_interleaved(u, p2->offset2 + p2->c, n, p2->q3 + 1, p2->offset2 + p2->c);
    } else if (const auto* r = std::get_if<RandomOcc>(&spec)) {
        if (r->prob <= 0.0 || r->prob > 1.0)
            throw std::invalid_argument("make_pattern: random activation probability out of (0,1]");
        int active = 0;
        do {
            active = 0;
            for (int i = 0; i < n; ++i) {
                u[i] = rng.bernoulli(r->prob) ? 1 : 0;
                active += u[i];
            }
        } while (active == 0);
    } else if (const auto* e = std::get_if<Explicit>(&spec)) {
        for (int i : e->active) {
            if (i < 0 || i >= n) throw std::invalid_argument("make_pattern: explicit index out of range");
            u[i] = 1;
        }
    }

    SubcarrierPattern pat{std::move(u), spec};
    if (pat.active_count() == 0)
        throw std::invalid_argument("make_pattern: pattern has no active subcarriers");
    return pat;
}

inline SubcarrierPattern make_pattern(const PatternSpec& spec, int n, std::uint64_t seed) {
    Rng rng(seed);
    return make_pattern(spec, n, rng);
}

// Value ranges used when drawing a fresh pattern of a given family per frame.
// Defaults follow the structured-pattern study; shrink c for small N.
struct PatternFamilyConfig {
    PatternFamily family = PatternFamily::Random;
    double random_prob = 0.5;
    int q_lo = 1, q_hi = 6;        // pattern1 gap range
    int c_lo = 4, c_hi = 43;       // pattern1 block range
    int p2_c_lo = 3, p2_c_hi = 15; // pattern2 block range
    int p2_q_lo = 1, p2_q_hi = 8;  // pattern2 gap range
    int interleave_q = 5;
};

inline PatternSpec sample_pattern_spec(const PatternFamilyConfig& cfg, int n, Rng& rng) {
    switch (cfg.family) {
        case PatternFamily::Ofdm:
            return Ofdm{};
        case PatternFamily::Interleaved:
            return Interleaved{cfg.interleave_q, 0};
        case PatternFamily::Pattern1: {
            const int q = static_cast<int>(rng.uniform_int(cfg.q_lo, cfg.q_hi));
            const int c_hi = std::min(cfg.c_hi, n);
            const int c = static_cast<int>(rng.uniform_int(std::min(cfg.c_lo, c_hi), c_hi));
            const int off = static_cast<int>(rng.uniform_int(0, n - c));
            return Pattern1{q, c, off};
        }
        case PatternFamily::Pattern2: {
            const int c_hi = std::min(cfg.p2_c_hi, (n - 1) / 2);
            const int c = static_cast<int>(rng.uniform_int(std::min(cfg.p2_c_lo, c_hi), c_hi));
            const int q1 = static_cast<int>(rng.uniform_int(cfg.p2_q_lo, cfg.p2_q_hi));
            const int q2 = static_cast<int>(rng.uniform_int(cfg.p2_q_lo, cfg.p2_q_hi));
            const int q3 = static_cast<int>(rng.uniform_int(cfg.p2_q_lo, cfg.p2_q_hi));
            const int off1 = static_cast<int>(rng.uniform_int(0, n - 2 * c));
            const int off2 = static_cast<int>(rng.uniform_int(off1 + c, n - c));
            return Pattern2{c, q1, q2, q3, off1, off2};
        }
        case PatternFamily::Random:
            return RandomOcc{cfg.random_prob};
    }
    throw std::logic_error("sample_pattern_spec");
}

// ---------------------------------------------------------------------------
// Transmission parameters and frames
// ---------------------------------------------------------------------------

struct TransmissionParams {
    int n = 0;                     // total subcarriers
    double delta_f = 0.0;          // subcarrier width, Hz
    SubcarrierPattern pattern;
    std::vector<double> power;     // per-subcarrier factors, each in [1,2]
    Modulation modulation = Modulation::Bpsk;
    double t_cp = 0.0;             // cyclic prefix duration, s

    double t_useful() const { return 1.0 / delta_f; }
    double t_total() const { return t_useful() + t_cp; }

    void validate() const {
        if (n < 1 || pattern.size() != n)
            throw std::invalid_argument("TransmissionParams: pattern length must equal N");
        if (delta_f <= 0.0) throw std::invalid_argument("TransmissionParams: delta_f must be > 0");
        if (t_cp < 0.0) throw std::invalid_argument("TransmissionParams: negative cyclic prefix");
        if (static_cast<int>(power.size()) != n)
            throw std::invalid_argument("TransmissionParams: power length must equal N");
        for (int i = 0; i < n; ++i)
            if (pattern.u[i] && (power[i] < 1.0 || power[i] > 2.0))
                throw std::invalid_argument("TransmissionParams: active power factor outside [1,2]");
        if (pattern.active_count() < 1)
            throw std::invalid_argument("TransmissionParams: no active subcarriers");
    }
};

struct ComplexFrame {
    std::vector<cdouble> samples;
    double t_s = 0.0;  // sampling interval, s

    int size() const { return static_cast<int>(samples.size()); }
};

inline double mean_power(const ComplexFrame& frame) {
    double acc = 0.0;
    for (const auto& s : frame.samples) acc += std::norm(s);
    return frame.samples.empty() ? 0.0 : acc / static_cast<double>(frame.samples.size());
}

inline std::vector<double> unit_powers(int n) { return std::vector<double>(n, 1.0); }

inline std::vector<double> random_powers(int n, Rng& rng) {
    std::vector<double> p(n);
    for (auto& v : p) v = rng.uniform(1.0, 2.0);
    return p;
}

inline std::vector<std::uint8_t> random_bits(int count, Rng& rng) {
    std::vector<std::uint8_t> b(count);
    for (auto& v : b) v = rng.bernoulli(0.5) ? 1 : 0;
    return b;
}

// Single CP-free symbol, one modulated symbol per active subcarrier in
// ascending index order. Inactive subcarriers contribute nothing.
inline ComplexFrame synthesize(const TransmissionParams& params, const std::vector<cdouble>& symbols,
                               int n1, double t_s) {
    params.validate();
    if (n1 < 1) throw std::invalid_argument("synthesize: n1 must be >= 1");
    if (t_s <= 0.0) throw std::invalid_argument("synthesize: t_s must be > 0");
    const auto active = params.pattern.active_indices();
    if (symbols.size() != active.size())
        throw std::invalid_argument("synthesize: symbol count must equal active subcarrier count");
    if (1.0 / t_s < params.n * params.delta_f * (1.0 - 1e-12))
        throw std::invalid_argument("synthesize: sampling rate below the synthesized band");

    ComplexFrame frame;
    frame.t_s = t_s;
    frame.samples.assign(n1, cdouble(0.0, 0.0));
    for (std::size_t a = 0; a < active.size(); ++a) {
        const int n = active[a];
        const cdouble amp = params.power[n] * symbols[a];
        const double w = 2.0 * std::numbers::pi * n * params.delta_f * t_s;
        // Incremental rotation keeps this O(n1) per subcarrier.
        const cdouble rot(std::cos(w), std::sin(w));
        cdouble phase(1.0, 0.0);
        for (int k = 0; k < n1; ++k) {
            frame.samples[k] += amp * phase;
            phase *= rot;
        }
    }
    return frame;
}

// Multi-symbol record with cyclic prefix: fresh symbols are drawn for every
// slot of duration T_o, the exponential is re-anchored at each slot start.
inline ComplexFrame synthesize_multisymbol(const TransmissionParams& params, int n_samples,
                                           double t_s, Rng& rng) {
    params.validate();
    if (n_samples < 1) throw std::invalid_argument("synthesize_multisymbol: n_samples must be >= 1");
    if (t_s <= 0.0) throw std::invalid_argument("synthesize_multisymbol: t_s must be > 0");
    const double t_o = params.t_total();
    const auto active = params.pattern.active_indices();
    const int b = bits_per_symbol(params.modulation);

    ComplexFrame frame;
    frame.t_s = t_s;
    frame.samples.assign(n_samples, cdouble(0.0, 0.0));

    std::vector<cdouble> slot_symbols;
    long current_slot = -1;
    for (int k = 0; k < n_samples; ++k) {
        const double t = k * t_s;
        const long m = static_cast<long>(std::floor(t / t_o + 1e-12));
        if (m != current_slot) {
            slot_symbols = modulate(random_bits(static_cast<int>(active.size()) * b, rng),
                                    params.modulation);
            current_slot = m;
        }
        const double tau = t - m * t_o;
        cdouble acc(0.0, 0.0);
        for (std::size_t a = 0; a < active.size(); ++a) {
            const int n = active[a];
            const double phi = 2.0 * std::numbers::pi * n * params.delta_f * tau;
            acc += params.power[n] * slot_symbols[a] * cdouble(std::cos(phi), std::sin(phi));
        }
        frame.samples[k] = acc;
    }
    return frame;
}

// ---------------------------------------------------------------------------
// Feature vector layout
// ---------------------------------------------------------------------------

// x = [Re s(0..n1-1), Im s(0..n1-1)], d = 2 n1.
inline std::vector<double> vectorize(const ComplexFrame& frame) {
    const int n1 = frame.size();
    std::vector<double> x(2 * n1);
    for (int k = 0; k < n1; ++k) {
        x[k] = frame.samples[k].real();
        x[n1 + k] = frame.samples[k].imag();
    }
    return x;
}

inline ComplexFrame devectorize(const std::vector<double>& x, double t_s) {
    if (x.size() % 2 != 0) throw std::invalid_argument("devectorize: odd length");
    const int n1 = static_cast<int>(x.size() / 2);
    ComplexFrame frame;
    frame.t_s = t_s;
    frame.samples.resize(n1);
    for (int k = 0; k < n1; ++k) frame.samples[k] = cdouble(x[k], x[n1 + k]);
    return frame;
}

}  // namespace ncofdm::waveform
