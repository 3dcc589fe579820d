#pragma once

// Cyclic autocorrelation estimation and the symbol-timing ambiguity analysis
// for interleaved NC-OFDM. The estimator is the empirical sum
//   R(alpha, tau T_s) = (1/M) sum_n r[n] r*[n - tau] exp(-j 2 pi alpha n T_s)
// with indices outside the record treated as zero.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "ncofdm/waveform.hpp"

namespace ncofdm::cyclo {

using waveform::cdouble;

struct CafGrid {
    double alpha = 0.0;               // cyclic frequency, Hz
    std::vector<int> lags;            // tau in samples
    std::vector<cdouble> values;      // R(alpha, tau T_s)
    double t_s = 0.0;
    std::size_t m = 0;                // record length used

    double magnitude(std::size_t i) const { return std::abs(values[i]); }
};

inline CafGrid estimate_caf(const std::vector<cdouble>& samples, double alpha, int lag_lo,
                            int lag_hi, double t_s) {
    if (samples.empty()) throw std::invalid_argument("estimate_caf: empty input");
    if (lag_lo > lag_hi) throw std::invalid_argument("estimate_caf: bad lag range");
    const int m = static_cast<int>(samples.size());
    if (m <= std::max(std::abs(lag_lo), std::abs(lag_hi)))
        throw std::invalid_argument("estimate_caf: record shorter than max lag");

    CafGrid grid;
    grid.alpha = alpha;
    grid.t_s = t_s;
    grid.m = samples.size();
    grid.lags.reserve(lag_hi - lag_lo + 1);
    grid.values.reserve(lag_hi - lag_lo + 1);

    // Demodulated copy r[n] e^{-j 2 pi alpha n T_s}; at alpha = 0 this is r.
    std::vector<cdouble> rot(samples.size());
    if (alpha == 0.0) {
        rot = samples;
    } else {
        const double w = -2.0 * std::numbers::pi * alpha * t_s;
        const cdouble step(std::cos(w), std::sin(w));
        cdouble phase(1.0, 0.0);
        for (int n = 0; n < m; ++n) {
            rot[n] = samples[n] * phase;
            phase *= step;
        }
    }

    for (int tau = lag_lo; tau <= lag_hi; ++tau) {
        cdouble acc(0.0, 0.0);
        const int lo = std::max(0, tau);
        const int hi = std::min(m, m + tau);
        for (int n = lo; n < hi; ++n) acc += rot[n] * std::conj(samples[n - tau]);
        grid.lags.push_back(tau);
        grid.values.push_back(acc / static_cast<double>(m));
    }
    return grid;
}

// Strict local maxima of |R| over a 3-bin neighborhood, kept when above
// threshold_frac * max|R|. Returned lags are sorted ascending.
inline std::vector<int> caf_peaks(const CafGrid& grid, double threshold_frac = 0.3) {
    if (grid.values.empty()) throw std::invalid_argument("caf_peaks: empty grid");
    std::vector<double> mag(grid.values.size());
    double maxmag = 0.0;
    for (std::size_t i = 0; i < grid.values.size(); ++i) {
        mag[i] = grid.magnitude(i);
        maxmag = std::max(maxmag, mag[i]);
    }
    if (maxmag <= 0.0) throw std::invalid_argument("caf_peaks: all-zero grid");

    const double thresh = threshold_frac * maxmag;
    std::vector<int> peaks;
    for (std::size_t i = 0; i < mag.size(); ++i) {
        if (mag[i] < thresh) continue;
        const bool left_ok = (i == 0) || mag[i] > mag[i - 1];
        const bool right_ok = (i + 1 == mag.size()) || mag[i] > mag[i + 1];
        if (left_ok && right_ok) peaks.push_back(grid.lags[i]);
    }
    std::sort(peaks.begin(), peaks.end());
    return peaks;
}

// Fundamental spacing of a symmetric peak set, in seconds: the median gap
// between consecutive nonnegative peaks.
inline double fundamental_spacing(const std::vector<int>& peak_lags, double t_s) {
    std::vector<int> nonneg;
    for (int p : peak_lags)
        if (p >= 0) nonneg.push_back(p);
    std::sort(nonneg.begin(), nonneg.end());
    if (nonneg.size() < 2) throw std::invalid_argument("fundamental_spacing: need >= 2 nonnegative peaks");
    std::vector<int> gaps;
    for (std::size_t i = 1; i < nonneg.size(); ++i) gaps.push_back(nonneg[i] - nonneg[i - 1]);
    std::sort(gaps.begin(), gaps.end());
    return gaps[gaps.size() / 2] * t_s;
}

struct CandidateParams {
    double t_u = 0.0;  // useful symbol duration, s
    int q = 0;         // interleave factor
};

// All candidates whose T_u / q matches the fundamental peak spacing within
// tol_s. Several distinct transmissions can land on the same spacing, which
// is exactly the ambiguity an interleaved pattern creates.
inline std::vector<CandidateParams> ambiguity_set(const std::vector<int>& peak_lags, double t_s,
                                                  const std::vector<CandidateParams>& candidates,
                                                  double tol_s) {
    if (peak_lags.empty()) throw std::invalid_argument("ambiguity_set: empty peak set");
    const double spacing = fundamental_spacing(peak_lags, t_s);
    std::vector<CandidateParams> out;
    for (const auto& c : candidates) {
        if (c.q <= 0 || c.t_u <= 0.0) throw std::invalid_argument("ambiguity_set: bad candidate");
        if (std::abs(c.t_u / c.q - spacing) <= tol_s) out.push_back(c);
    }
    return out;
}

}  // namespace ncofdm::cyclo
