#pragma once

// Channel models: AWGN, tapped-delay-line multipath and flat Rayleigh fading,
// plus SNR / Eb-per-N0 bookkeeping. Complex noise of variance N0 means N0/2
// per real dimension.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "ncofdm/rng.hpp"
#include "ncofdm/waveform.hpp"

namespace ncofdm::channel {

using waveform::cdouble;
using waveform::ComplexFrame;

enum class ChannelKind { Awgn, Multipath, RayleighFlat };

struct ChannelSpec {
    ChannelKind kind = ChannelKind::Awgn;
    std::vector<double> amplitudes;  // multipath tap gains
    std::vector<double> delays_s;    // multipath tap delays, nonnegative, sorted

    void validate() const {
        if (kind != ChannelKind::Multipath) return;
        if (amplitudes.size() != delays_s.size() || amplitudes.empty())
            throw std::invalid_argument("ChannelSpec: amplitudes/delays must be same nonzero length");
        double prev = -1.0;
        for (double d : delays_s) {
            if (d < 0.0 || d < prev) throw std::invalid_argument("ChannelSpec: delays must be sorted, nonnegative");
            prev = d;
        }
    }
};

inline std::string channel_kind_name(ChannelKind k) {
    switch (k) {
        case ChannelKind::Awgn: return "awgn";
        case ChannelKind::Multipath: return "multipath";
        case ChannelKind::RayleighFlat: return "rayleigh";
    }
    throw std::logic_error("channel_kind_name");
}

inline ChannelKind channel_kind_from_name(const std::string& s) {
    if (s == "awgn") return ChannelKind::Awgn;
    if (s == "multipath") return ChannelKind::Multipath;
    if (s == "rayleigh") return ChannelKind::RayleighFlat;
    throw std::invalid_argument("unknown channel kind: " + s);
}

inline ComplexFrame apply_awgn(const ComplexFrame& frame, double n0, Rng& rng) {
    if (n0 < 0.0) throw std::invalid_argument("apply_awgn: N0 must be >= 0");
    ComplexFrame out = frame;
    if (n0 == 0.0) return out;
    for (auto& s : out.samples) s += rng.complex_gaussian(n0);
    return out;
}

// Discrete convolution with the tap vector; delays must land on the sample
// grid. Output is truncated to the input length.
inline ComplexFrame apply_multipath(const ComplexFrame& frame, const std::vector<double>& amplitudes,
                                    const std::vector<double>& delays_s, double t_s) {
    if (amplitudes.size() != delays_s.size() || amplitudes.empty())
        throw std::invalid_argument("apply_multipath: amplitudes/delays must be same nonzero length");
    std::vector<int> taps(delays_s.size());
    for (std::size_t i = 0; i < delays_s.size(); ++i) {
        const double q = delays_s[i] / t_s;
        const double r = std::round(q);
        if (std::abs(q - r) > 1e-9 * std::max(1.0, std::abs(q)))
            throw std::invalid_argument("apply_multipath: delay not representable at T_s");
        taps[i] = static_cast<int>(r);
        if (taps[i] < 0) throw std::invalid_argument("apply_multipath: negative delay");
    }
    ComplexFrame out;
    out.t_s = frame.t_s;
    out.samples.assign(frame.samples.size(), cdouble(0.0, 0.0));
    for (std::size_t i = 0; i < taps.size(); ++i) {
        const int d = taps[i];
        const double a = amplitudes[i];
        for (int k = d; k < frame.size(); ++k) out.samples[k] += a * frame.samples[k - d];
    }
    return out;
}

// Single complex Gaussian gain h ~ CN(0,1) applied to the whole frame.
// The gain is returned so a receiver with channel knowledge can equalize.
inline std::pair<ComplexFrame, cdouble> apply_rayleigh_flat(const ComplexFrame& frame, Rng& rng) {
    const cdouble h = rng.complex_gaussian(1.0);
    ComplexFrame out = frame;
    for (auto& s : out.samples) s *= h;
    return {std::move(out), h};
}

// Fading/multipath first, then noise. Returns the flat-fading gain (1 for
// the other kinds) for oracle-CSI equalization.
inline std::pair<ComplexFrame, cdouble> apply_channel(const ComplexFrame& frame, const ChannelSpec& spec,
                                                      double n0, Rng& rng) {
    spec.validate();
    switch (spec.kind) {
        case ChannelKind::Awgn:
            return {apply_awgn(frame, n0, rng), cdouble(1.0, 0.0)};
        case ChannelKind::Multipath: {
            auto faded = apply_multipath(frame, spec.amplitudes, spec.delays_s, frame.t_s);
            return {apply_awgn(faded, n0, rng), cdouble(1.0, 0.0)};
        }
        case ChannelKind::RayleighFlat: {
            auto [faded, h] = apply_rayleigh_flat(frame, rng);
            return {apply_awgn(faded, n0, rng), h};
        }
    }
    throw std::logic_error("apply_channel");
}

struct LinkBudget {
    double es = 0.0;     // signal power, ||s||^2 / n1
    double snr = 0.0;    // Es / N0
    double q = 0.0;      // rate factor N_a b / N
    double eb_n0 = 0.0;  // Es / (Q N0)
};

inline LinkBudget link_budget(const waveform::TransmissionParams& params, const ComplexFrame& frame,
                              double n0) {
    if (n0 <= 0.0) throw std::invalid_argument("link_budget: N0 must be > 0");
    LinkBudget lb;
    lb.es = waveform::mean_power(frame);
    lb.snr = lb.es / n0;
    lb.q = static_cast<double>(params.pattern.active_count()) *
           waveform::bits_per_symbol(params.modulation) / static_cast<double>(params.n);
    lb.eb_n0 = lb.snr / lb.q;
    return lb;
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

}  // namespace ncofdm::channel
