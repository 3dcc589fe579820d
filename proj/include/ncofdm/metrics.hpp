#pragma once

// Disentanglement measurement. Three scores over a trained encoder/decoder
// pair plus the latent-to-subcarrier mapping used by the unsupervised attack:
//
//   higgins_metric   linear classifier on mean |z - z0| with one generative
//                    factor held fixed per trial (encoder-side score)
//   kim_metric       argmin-variance majority vote over std-normalized
//                    latents (encoder-side, stricter)
//   traversal_metric decoder-side score: traverse one latent over [-C, C]
//                    and count spectrum bins that move more than eps;
//                    exactly one moved bin scores 100, more score 0
//
// Spectra are frame-length DFTs normalized by 1/n1, so when a frame spans one
// useful symbol period, bin n is exactly the complex amplitude of subcarrier
// n and eps thresholds are in per-subcarrier amplitude units.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "ncofdm/nn.hpp"
#include "ncofdm/rng.hpp"
#include "ncofdm/vae.hpp"

namespace ncofdm::metrics {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXcd;

struct NoInformativeLatents : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Column-batched maps; one sample per column.
using BatchFn = std::function<MatrixXd(const MatrixXd&)>;

inline BatchFn encoder_fn(const vae::VaeModel& m) {
    return [&m](const MatrixXd& x) { return vae::encode_mean_batch(m, x); };
}

inline BatchFn decoder_fn(const vae::VaeModel& m) {
    return [&m](const MatrixXd& z) { return vae::decoder_dist(m, z).mean; };
}

// ---------------------------------------------------------------------------
// Empirical variance, pairwise-difference form
// ---------------------------------------------------------------------------

// (1 / (2 h (h-1))) sum_{i,j} (w_i - w_j)^2, which equals the unbiased
// sample variance.
inline double empirical_variance(const std::vector<double>& w) {
    const std::size_t h = w.size();
    if (h < 2) throw std::invalid_argument("empirical_variance: need h >= 2");
    double acc = 0.0;
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < h; ++j) acc += (w[i] - w[j]) * (w[i] - w[j]);
    return acc / (2.0 * static_cast<double>(h) * static_cast<double>(h - 1));
}

// ---------------------------------------------------------------------------
// Spectra
// ---------------------------------------------------------------------------

// x = [Re s, Im s] of length 2 n1 -> normalized n1-point DFT.
inline VectorXcd frame_spectrum(const VectorXd& x) {
    if (x.size() % 2 != 0) throw std::invalid_argument("frame_spectrum: odd length");
    const int n1 = static_cast<int>(x.size() / 2);
    VectorXcd out(n1);
    for (int b = 0; b < n1; ++b) {
        std::complex<double> acc(0.0, 0.0);
        for (int k = 0; k < n1; ++k) {
            const double phi = -2.0 * std::numbers::pi * k * b / n1;
            acc += std::complex<double>(x[k], x[n1 + k]) *
                   std::complex<double>(std::cos(phi), std::sin(phi));
        }
        out[b] = acc / static_cast<double>(n1);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Generative factors
// ---------------------------------------------------------------------------

// A factor vector fully determines the noiseless frame; the sampler draws
// factor values from the data distribution and synth maps them to a frame.
struct GenerativeFactorSpec {
    int num_factors = 0;
    std::function<VectorXd(Rng&)> sample_factors;
    std::function<VectorXd(const VectorXd&)> synth;
};

// Random-occupancy NC-OFDM factors: the signed per-subcarrier amplitude
// u_n p_n s_n. Real modulations use one factor per subcarrier, complex ones
// two (real and imaginary parts).
inline GenerativeFactorSpec make_ncofdm_factor_spec(int n, int n1, bool complex_symbols,
                                                    double active_prob = 0.5) {
    GenerativeFactorSpec spec;
    spec.num_factors = complex_symbols ? 2 * n : n;
    spec.sample_factors = [n, complex_symbols, active_prob](Rng& rng) {
        VectorXd f = VectorXd::Zero(complex_symbols ? 2 * n : n);
        for (int i = 0; i < n; ++i) {
            if (!rng.bernoulli(active_prob)) continue;
            const double p = rng.uniform(1.0, 2.0);
            if (complex_symbols) {
                // 16-QAM-style axis values scaled to unit mean symbol energy.
                const double lvl[4] = {-3.0, -1.0, 1.0, 3.0};
                f[i] = p * lvl[rng.uniform_int(0, 3)] / std::sqrt(10.0);
                f[n + i] = p * lvl[rng.uniform_int(0, 3)] / std::sqrt(10.0);
            } else {
                f[i] = p * (rng.bernoulli(0.5) ? 1.0 : -1.0);
            }
        }
        return f;
    };
    spec.synth = [n, n1, complex_symbols](const VectorXd& f) {
        VectorXd x = VectorXd::Zero(2 * n1);
        for (int sc = 0; sc < n; ++sc) {
            const std::complex<double> amp(f[sc], complex_symbols ? f[n + sc] : 0.0);
            if (amp == std::complex<double>(0.0, 0.0)) continue;
            for (int k = 0; k < n1; ++k) {
                const double phi = 2.0 * std::numbers::pi * sc * k / n1;
                const auto v = amp * std::complex<double>(std::cos(phi), std::sin(phi));
                x[k] += v.real();
                x[n1 + k] += v.imag();
            }
        }
        return x;
    };
    return spec;
}

// ---------------------------------------------------------------------------
// Higgins metric
// ---------------------------------------------------------------------------

namespace detail {

struct FactorTrialSet {
    MatrixXd features;        // feature per trial, one column each
    std::vector<int> labels;  // fixed-factor index per trial
};

// One trial: fix factor l at a drawn value, encode L samples plus one
// reference, return mean |z - z0|.
inline VectorXd higgins_feature(const BatchFn& enc, const GenerativeFactorSpec& spec, int l,
                                int samples, Rng& rng) {
    VectorXd fixed = spec.sample_factors(rng);
    MatrixXd x(spec.synth(fixed).size(), samples + 1);
    x.col(0) = spec.synth(fixed);
    for (int i = 1; i <= samples; ++i) {
        VectorXd f = spec.sample_factors(rng);
        f[l] = fixed[l];
        x.col(i) = spec.synth(f);
    }
    const MatrixXd z = enc(x);
    VectorXd acc = VectorXd::Zero(z.rows());
    for (int i = 1; i <= samples; ++i) acc += (z.col(i) - z.col(0)).cwiseAbs();
    return acc / static_cast<double>(samples);
}

inline FactorTrialSet higgins_trials(const BatchFn& enc, const GenerativeFactorSpec& spec,
                                     int samples_per_trial, int trials, Rng& rng) {
    FactorTrialSet out;
    out.labels.resize(trials);
    for (int t = 0; t < trials; ++t) {
        const int l = static_cast<int>(rng.uniform_int(0, spec.num_factors - 1));
        const VectorXd feat = higgins_feature(enc, spec, l, samples_per_trial, rng);
        if (t == 0) out.features.resize(feat.size(), trials);
        out.features.col(t) = feat;
        out.labels[t] = l;
    }
    return out;
}

inline MatrixXd one_hot(const std::vector<int>& labels, int classes) {
    MatrixXd y = MatrixXd::Zero(classes, static_cast<Eigen::Index>(labels.size()));
    for (std::size_t i = 0; i < labels.size(); ++i) y(labels[i], static_cast<Eigen::Index>(i)) = 1.0;
    return y;
}

}  // namespace detail

// Test accuracy (x100) of a multinomial logistic classifier predicting which
// factor was held fixed from the mean absolute latent displacement.
inline double higgins_metric(const BatchFn& enc, const GenerativeFactorSpec& spec, int samples_per_trial,
                             int train_trials, std::uint64_t seed) {
    if (spec.num_factors < 2) throw std::invalid_argument("higgins_metric: need >= 2 factors");
    Rng rng(seed);
    const int test_trials = 50 * spec.num_factors;
    const auto train = detail::higgins_trials(enc, spec, samples_per_trial, train_trials, rng);
    const auto test = detail::higgins_trials(enc, spec, samples_per_trial, test_trials, rng);

    // Feature scaling keeps the logistic training well conditioned.
    VectorXd scale = train.features.rowwise().norm() / std::sqrt(double(train_trials));
    for (Eigen::Index i = 0; i < scale.size(); ++i) scale[i] = std::max(scale[i], 1e-9);
    const MatrixXd xt = train.features.array().colwise() / scale.array();
    const MatrixXd xe = test.features.array().colwise() / scale.array();

    Rng init(seed ^ 0x5eedULL);
    auto clf = nn::make_mlp(static_cast<int>(xt.rows()), {}, spec.num_factors,
                            nn::Activation::Softmax, init);
    nn::TrainConfig cfg{.lr = 5e-2, .batch = 64, .steps = 1200, .opt = nn::Optimizer::Adam,
                        .seed = seed ^ 0xc1a55ULL};
    nn::train(clf, xt, detail::one_hot(train.labels, spec.num_factors), nn::Loss::CrossEntropySoftmax,
              cfg);
    return 100.0 * nn::classification_accuracy(nn::forward(clf, xe).output(), test.labels);
}

// ---------------------------------------------------------------------------
// Kim metric
// ---------------------------------------------------------------------------

// Majority-vote accuracy (x100) of the lowest-variance latent dimension.
// Latents whose dataset-wide standard deviation falls under 0.05 are treated
// as collapsed and excluded from the argmin.
inline double kim_metric(const BatchFn& enc, const GenerativeFactorSpec& spec, int samples_per_trial,
                         int train_trials, std::uint64_t seed,
                         double collapse_std_threshold = 0.05) {
    if (spec.num_factors < 2) throw std::invalid_argument("kim_metric: need >= 2 factors");
    Rng rng(seed);

    // Dataset-wide per-dimension scale.
    const int probe = 2000;
    MatrixXd xs;
    for (int i = 0; i < probe; ++i) {
        const VectorXd x = spec.synth(spec.sample_factors(rng));
        if (i == 0) xs.resize(x.size(), probe);
        xs.col(i) = x;
    }
    const MatrixXd zs = enc(xs);
    const int nz = static_cast<int>(zs.rows());
    VectorXd stds(nz);
    for (int d = 0; d < nz; ++d) {
        std::vector<double> col(zs.row(d).data(), zs.row(d).data() + probe);
        stds[d] = std::sqrt(empirical_variance(col));
    }
    std::vector<int> usable;
    for (int d = 0; d < nz; ++d)
        if (stds[d] >= collapse_std_threshold) usable.push_back(d);
    if (usable.empty()) throw NoInformativeLatents("kim_metric: every latent collapsed");

    auto vote_dim = [&](int l) {
        VectorXd fixed = spec.sample_factors(rng);
        MatrixXd x(xs.rows(), samples_per_trial);
        for (int i = 0; i < samples_per_trial; ++i) {
            VectorXd f = spec.sample_factors(rng);
            f[l] = fixed[l];
            x.col(i) = spec.synth(f);
        }
        const MatrixXd z = enc(x);
        int best = usable.front();
        double best_var = 1e300;
        for (int d : usable) {
            std::vector<double> col(samples_per_trial);
            for (int i = 0; i < samples_per_trial; ++i) col[i] = z(d, i) / stds[d];
            const double v = empirical_variance(col);
            if (v < best_var) {
                best_var = v;
                best = d;
            }
        }
        return best;
    };

    // Majority map from training trials.
    std::map<int, std::map<int, int>> votes;  // dim -> label -> count
    for (int t = 0; t < train_trials; ++t) {
        const int l = static_cast<int>(rng.uniform_int(0, spec.num_factors - 1));
        votes[vote_dim(l)][l] += 1;
    }
    std::map<int, int> majority;
    for (const auto& [dim, counts] : votes) {
        int best_label = -1, best_count = -1;
        for (const auto& [label, count] : counts)
            if (count > best_count) {
                best_count = count;
                best_label = label;
            }
        majority[dim] = best_label;
    }

    const int test_trials = 50 * spec.num_factors;
    int correct = 0;
    for (int t = 0; t < test_trials; ++t) {
        const int l = static_cast<int>(rng.uniform_int(0, spec.num_factors - 1));
        const int dim = vote_dim(l);
        const auto it = majority.find(dim);
        if (it != majority.end() && it->second == l) ++correct;
    }
    return 100.0 * correct / test_trials;
}

// ---------------------------------------------------------------------------
// Latent traversal
// ---------------------------------------------------------------------------

enum class LatentVerdict { Uninformative, Disentangled, Entangled };
enum class TraversalMode { Corrected, Faithful };

struct TraversalReport {
    double s0 = 0.0;                       // score in [0, 100]
    int informative = 0;                   // majority informative-latent count
    std::vector<LatentVerdict> verdicts;   // majority verdict per latent
    std::map<int, std::vector<int>> latent_to_bins;  // informative latent -> moved bins
    bool reliable = false;                 // informative latents move exactly one bin
};

namespace detail {

struct TraversalScan {
    // affected[i][j] = moved-bin set for sample i, latent j.
    std::vector<std::vector<std::vector<int>>> affected;
    int n_z = 0;
    int bins = 0;
};

inline TraversalScan scan_traversal(const BatchFn& enc, const BatchFn& dec,
                                    const Eigen::MatrixXf& data, double c, int k_steps, int samples,
                                    double eps, std::uint64_t seed) {
    if (data.cols() < 1) throw std::invalid_argument("scan_traversal: empty dataset");
    Rng rng(seed);
    TraversalScan scan;
    scan.bins = static_cast<int>(data.rows() / 2);

    MatrixXd x0(data.rows(), samples);
    for (int i = 0; i < samples; ++i)
        x0.col(i) = data.col(rng.uniform_int(0, data.cols() - 1)).cast<double>();
    const MatrixXd z0 = enc(x0);
    scan.n_z = static_cast<int>(z0.rows());
    scan.affected.assign(samples, std::vector<std::vector<int>>(scan.n_z));

    for (int i = 0; i < samples; ++i) {
        const VectorXcd base_spec = frame_spectrum(x0.col(i));
        for (int j = 0; j < scan.n_z; ++j) {
            MatrixXd z = z0.col(i).replicate(1, k_steps + 1);
            for (int k = 0; k <= k_steps; ++k) z(j, k) = -c + 2.0 * c * k / k_steps;
            const MatrixXd xhat = dec(z);
            std::vector<bool> moved(scan.bins, false);
            for (int k = 0; k <= k_steps; ++k) {
                const VectorXcd spec = frame_spectrum(xhat.col(k));
                for (int b = 0; b < scan.bins; ++b)
                    if (std::abs(spec[b] - base_spec[b]) > eps) moved[b] = true;
            }
            for (int b = 0; b < scan.bins; ++b)
                if (moved[b]) scan.affected[i][j].push_back(b);
        }
    }
    return scan;
}

}  // namespace detail

// Decoder-side traversal score. Corrected mode averages 100 * (#disentangled
// / #informative) over samples; faithful mode follows the published
// pseudo-code literally, where one entangled latent zeroes the running score
// of every latent seen before it and the denominator is the sample count.
inline TraversalReport traversal_metric(const BatchFn& enc, const BatchFn& dec,
                                        const Eigen::MatrixXf& data, double c, int k_steps,
                                        int samples, double eps, TraversalMode mode,
                                        std::uint64_t seed) {
    const auto scan = detail::scan_traversal(enc, dec, data, c, k_steps, samples, eps, seed);

    TraversalReport report;
    double s1 = 0.0;
    int counted = 0;
    std::vector<int> informative_votes(scan.n_z, 0);
    std::vector<int> disentangled_votes(scan.n_z, 0);
    std::vector<std::map<std::vector<int>, int>> bin_votes(scan.n_z);

    for (int i = 0; i < static_cast<int>(scan.affected.size()); ++i) {
        double s2 = 0.0;
        int informative = 0;
        int disentangled = 0;
        for (int j = 0; j < scan.n_z; ++j) {
            const auto& bins = scan.affected[i][j];
            if (bins.empty()) continue;
            ++informative;
            ++informative_votes[j];
            bin_votes[j][bins] += 1;
            if (bins.size() == 1) {
                ++disentangled;
                ++disentangled_votes[j];
                s2 += 100.0;
            } else {
                s2 = 0.0;  // faithful-mode reset
            }
        }
        if (informative == 0) continue;
        ++counted;
        s1 += (mode == TraversalMode::Corrected) ? 100.0 * disentangled / informative
                                                 : s2 / informative;
    }
    if (counted == 0) throw NoInformativeLatents("traversal_metric: no informative latents");
    report.s0 = s1 / counted;

    const int half = static_cast<int>(scan.affected.size()) / 2;
    report.verdicts.resize(scan.n_z);
    int single_bin = 0;
    for (int j = 0; j < scan.n_z; ++j) {
        if (informative_votes[j] <= half) {
            report.verdicts[j] = LatentVerdict::Uninformative;
            continue;
        }
        report.verdicts[j] = 2 * disentangled_votes[j] > informative_votes[j]
                                 ? LatentVerdict::Disentangled
                                 : LatentVerdict::Entangled;
        ++report.informative;
        // Modal moved-bin set across samples.
        const auto& counts = bin_votes[j];
        const auto best = std::max_element(counts.begin(), counts.end(),
                                           [](const auto& a, const auto& b) { return a.second < b.second; });
        report.latent_to_bins[j] = best->first;
        if (best->first.size() == 1) ++single_bin;
    }
    report.reliable =
        report.informative > 0 && single_bin >= (4 * report.informative + 4) / 5;
    return report;
}

// The latent-to-subcarrier map alone, from the same traversal machinery.
inline TraversalReport latent_map(const BatchFn& enc, const BatchFn& dec,
                                  const Eigen::MatrixXf& data, double c, int k_steps, int samples,
                                  double eps, std::uint64_t seed) {
    return traversal_metric(enc, dec, data, c, k_steps, samples, eps, TraversalMode::Corrected,
                            seed);
}

}  // namespace ncofdm::metrics
