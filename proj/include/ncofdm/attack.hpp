#pragma once

// Adversary and receiver pipelines: unsupervised spectrum sensing, supervised
// and unsupervised transmission-parameter inference, and Monte-Carlo bit
// error rate evaluation of spoofed and legitimate links.
//
// Receiver conventions (documented here because they pin the BER accounting):
//   - The receiver demodulates per subcarrier on the true (N, delta_f) grid
//     at critical sampling, with perfect composite CSI (channel gain times
//     the transmitted per-subcarrier amplitude factor).
//   - A wrong (N_hat, delta_f_hat) is a decoding failure: every bit of the
//     frame counts at error rate 1/2.
//   - Occupancy mismatches have two accounting modes. PerSubcarrier charges
//     only the bits of wrongly-dropped active subcarriers at rate 1/2 and
//     ignores extra subcarriers. FrameExact treats any occupancy mismatch as
//     a whole-frame decoding failure, which is the stricter reading of the
//     receiver contract.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "ncofdm/channel.hpp"
#include "ncofdm/dataset.hpp"
#include "ncofdm/gmm.hpp"
#include "ncofdm/metrics.hpp"
#include "ncofdm/nn.hpp"
#include "ncofdm/rng.hpp"
#include "ncofdm/vae.hpp"
#include "ncofdm/waveform.hpp"

namespace ncofdm::attack {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct UnmappedSubcarrier : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class EstimateSource { Supervised, Unsupervised, Oracle };

struct ParamEstimate {
    int n_hat = 0;
    double delta_f_hat = 0.0;
    std::vector<std::uint8_t> u_hat;
    EstimateSource source = EstimateSource::Oracle;
    bool complex_symbols = false;  // modulation family flag (unsupervised path)
};

// Valid values the estimators snap their regression outputs onto.
struct ParamGrids {
    std::vector<int> valid_n;
    std::vector<double> delta_f_grid_hz;

    int snap_n(double raw) const {
        int best = valid_n.front();
        for (int v : valid_n)
            if (std::abs(raw - v) < std::abs(raw - best)) best = v;
        return best;
    }
    double snap_delta_f(double raw_hz) const {
        double best = delta_f_grid_hz.front();
        for (double v : delta_f_grid_hz)
            if (std::abs(raw_hz - v) < std::abs(raw_hz - best)) best = v;
        return best;
    }
};

// ---------------------------------------------------------------------------
// Supervised inference
// ---------------------------------------------------------------------------

struct SupervisedModels {
    nn::MlpModel upper;  // [N_hat, delta_f_hat in kHz]
    nn::MlpModel lower;  // sigmoid occupancy scores, one per subcarrier
    ParamGrids grids;
};

struct SupervisedTrainOptions {
    std::vector<int> upper_hidden{200, 400, 200, 50};
    std::vector<int> lower_hidden{350, 600, 400, 200};
    double lr = 1e-4;
    int batch = 500;
    int steps = 3000;
    nn::Optimizer opt = nn::Optimizer::Adam;
    std::uint64_t seed = 0;
};

inline SupervisedModels train_supervised(const dataset::Dataset& train, const ParamGrids& grids,
                                         const SupervisedTrainOptions& opt) {
    if (train.manifest.labels != dataset::LabelSchema::Occupancy)
        throw std::invalid_argument("train_supervised: needs occupancy labels");
    const int n = train.manifest.n;
    const MatrixXd x = dataset::features_as_double(train);
    const MatrixXd labels = train.labels_f.cast<double>();

    SupervisedModels models;
    models.grids = grids;
    Rng init(derive_seed(opt.seed, 1));
    models.upper = nn::make_mlp(static_cast<int>(x.rows()), opt.upper_hidden, 2,
                                nn::Activation::Linear, init);
    models.lower = nn::make_mlp(static_cast<int>(x.rows()), opt.lower_hidden, n,
                                nn::Activation::Sigmoid, init);

    const MatrixXd upper_targets = labels.bottomRows(2);  // [N, delta_f kHz]
    nn::TrainConfig upper_cfg{.lr = opt.lr, .batch = opt.batch, .steps = opt.steps,
                              .opt = opt.opt, .seed = derive_seed(opt.seed, 2)};
    nn::train(models.upper, x, upper_targets, nn::Loss::SquaredError, upper_cfg);

    const MatrixXd lower_targets = labels.topRows(n);
    nn::TrainConfig lower_cfg{.lr = opt.lr, .batch = opt.batch, .steps = opt.steps,
                              .opt = opt.opt, .seed = derive_seed(opt.seed, 3)};
    nn::train(models.lower, x, lower_targets, nn::Loss::SquaredError, lower_cfg);
    return models;
}

inline ParamEstimate supervised_infer(const SupervisedModels& models, const VectorXd& x) {
    ParamEstimate est;
    est.source = EstimateSource::Supervised;
    const VectorXd reg = nn::forward(models.upper, x).output().col(0);
    est.n_hat = models.grids.snap_n(reg[0]);
    est.delta_f_hat = models.grids.snap_delta_f(reg[1] * 1000.0);
    const VectorXd scores = nn::forward(models.lower, x).output().col(0);
    est.u_hat = nn::hard_threshold(scores);
    return est;
}

// Mean absolute per-subcarrier occupancy error over a labeled test set.
inline double occupancy_mean_error(const SupervisedModels& models, const dataset::Dataset& test) {
    if (test.manifest.labels != dataset::LabelSchema::Occupancy)
        throw std::invalid_argument("occupancy_mean_error: needs occupancy labels");
    const int n = test.manifest.n;
    const MatrixXd x = dataset::features_as_double(test);
    const MatrixXd scores = nn::forward(models.lower, x).output();
    double err = 0.0;
    for (Eigen::Index c = 0; c < x.cols(); ++c)
        for (int i = 0; i < n; ++i) {
            const int pred = scores(i, c) > 0.5 ? 1 : 0;
            const int truth = test.labels_f(i, c) > 0.5f ? 1 : 0;
            err += std::abs(pred - truth);
        }
    return err / (static_cast<double>(x.cols()) * n);
}

// ---------------------------------------------------------------------------
// Unsupervised inference
// ---------------------------------------------------------------------------

struct UnsupervisedAttacker {
    vae::VaeModel model;
    std::map<int, int> latent_for_bin;  // subcarrier bin -> latent index
    int latents_per_subcarrier = 1;     // 1 real, 2 complex symbols
    int informative_count = 0;
    double threshold = 0.5;
    double delta_f_assumed = 0.0;  // frame spans one useful symbol period
    bool map_reliable = false;
    // Structured datasets legitimately leave never-active subcarriers
    // unmapped; those infer as inactive instead of raising.
    bool allow_unmapped = false;
};

// Derives the bin->latent map from a latent traversal of the trained model.
// Bins claimed by two latents indicate complex symbols (one latent per
// real/imaginary part).
inline UnsupervisedAttacker build_unsupervised_attacker(vae::VaeModel model,
                                                        const Eigen::MatrixXf& data, double t_s,
                                                        double c, int k_steps, int samples,
                                                        double eps, std::uint64_t seed) {
    UnsupervisedAttacker atk;
    const auto report = metrics::latent_map(metrics::encoder_fn(model), metrics::decoder_fn(model),
                                            data, c, k_steps, samples, eps, seed);
    atk.model = std::move(model);
    atk.informative_count = report.informative;
    atk.map_reliable = report.reliable;
    const int n1 = static_cast<int>(data.rows() / 2);
    atk.delta_f_assumed = 1.0 / (n1 * t_s);

    std::map<int, std::vector<int>> latents_on_bin;
    for (const auto& [latent, bins] : report.latent_to_bins)
        if (bins.size() == 1) latents_on_bin[bins.front()].push_back(latent);
    int two_latent_bins = 0;
    for (const auto& [bin, latents] : latents_on_bin) {
        atk.latent_for_bin[bin] = latents.front();
        if (latents.size() >= 2) ++two_latent_bins;
    }
    if (!latents_on_bin.empty() && 2 * two_latent_bins > static_cast<int>(latents_on_bin.size()))
        atk.latents_per_subcarrier = 2;
    return atk;
}

// Threshold sweep maximizing balanced occupancy accuracy on a labeled slice.
inline double calibrate_threshold(const UnsupervisedAttacker& atk, const dataset::Dataset& labeled) {
    if (labeled.manifest.labels != dataset::LabelSchema::Occupancy)
        throw std::invalid_argument("calibrate_threshold: needs occupancy labels");
    const MatrixXd z = vae::encode_mean_batch(atk.model, dataset::features_as_double(labeled));
    const int n = labeled.manifest.n;

    double best_tau = 0.5, best_ba = -1.0;
    for (int step = 1; step <= 60; ++step) {
        const double tau = 0.05 * step;
        double tp = 0, fp = 0, tn = 0, fn = 0;
        for (Eigen::Index c = 0; c < z.cols(); ++c) {
            for (const auto& [bin, latent] : atk.latent_for_bin) {
                if (bin >= n) continue;
                const bool truth = labeled.labels_f(bin, c) > 0.5f;
                const bool pred = std::abs(z(latent, c)) > tau;
                if (truth && pred) ++tp;
                else if (truth) ++fn;
                else if (pred) ++fp;
                else ++tn;
            }
        }
        const double tpr = tp + fn > 0 ? tp / (tp + fn) : 1.0;
        const double tnr = tn + fp > 0 ? tn / (tn + fp) : 1.0;
        const double ba = 0.5 * (tpr + tnr);
        if (ba > best_ba) {
            best_ba = ba;
            best_tau = tau;
        }
    }
    return best_tau;
}

// Occupancy by thresholding the mapped posterior means; the subcarrier count
// from the informative-latent count, halved for complex symbol families.
inline ParamEstimate unsupervised_infer(const UnsupervisedAttacker& atk, const VectorXd& x) {
    ParamEstimate est;
    est.source = EstimateSource::Unsupervised;
    est.complex_symbols = atk.latents_per_subcarrier == 2;
    est.n_hat = atk.informative_count / atk.latents_per_subcarrier;
    est.delta_f_hat = atk.delta_f_assumed;
    if (!atk.latent_for_bin.empty() && atk.latent_for_bin.rbegin()->first >= est.n_hat)
        est.n_hat = atk.latent_for_bin.rbegin()->first + 1;

    const VectorXd z = vae::encode_mean(atk.model, x);
    est.u_hat.assign(est.n_hat, 0);
    for (int bin = 0; bin < est.n_hat; ++bin) {
        const auto it = atk.latent_for_bin.find(bin);
        if (it == atk.latent_for_bin.end()) {
            if (!atk.allow_unmapped)
                throw UnmappedSubcarrier("unsupervised_infer: no latent maps subcarrier " +
                                         std::to_string(bin));
            continue;  // never active in the training data
        }
        est.u_hat[bin] = std::abs(z(it->second)) > atk.threshold ? 1 : 0;
    }
    return est;
}

// Mean absolute occupancy error of the unsupervised attacker on a labeled set.
inline double unsupervised_occupancy_error(const UnsupervisedAttacker& atk,
                                           const dataset::Dataset& test) {
    const int n = test.manifest.n;
    double err = 0.0;
    for (long r = 0; r < test.rows(); ++r) {
        const auto est = unsupervised_infer(atk, test.x.col(r).cast<double>());
        for (int i = 0; i < n; ++i) {
            const int pred = i < est.n_hat ? est.u_hat[i] : 0;
            const int truth = test.labels_f(i, r) > 0.5f ? 1 : 0;
            err += std::abs(pred - truth);
        }
    }
    return err / (static_cast<double>(test.rows()) * n);
}

// ---------------------------------------------------------------------------
// Spectrum sensing
// ---------------------------------------------------------------------------

struct SenseConfig {
    vae::VaeConfig vae;         // data_dim filled from the dataset
    nn::TrainConfig train{.lr = 5e-4, .batch = 100, .steps = 3000, .opt = nn::Optimizer::Adam,
                          .seed = 0};
    int gmm_iterations = 40;
    std::uint64_t seed = 0;
};

struct SenseReport {
    std::vector<int> labels;             // 0 = noise, 1 = signal
    double accuracy = -1.0;              // against held-out truth when present
    double cluster_energy_mean[2] = {0.0, 0.0};  // [noise, signal]
    double hist_mode_energy[2] = {0.0, 0.0};
    bool modes_distinct = false;
};

// Unsupervised two-way split of a mixed noise/signal dataset: a plain VAE
// learns the representation, a two-component mixture clusters the posterior
// means, and the lower-energy cluster is labeled noise.
inline SenseReport sense_spectrum(const dataset::Dataset& mixed, SenseConfig cfg) {
    cfg.vae.data_dim = mixed.dim();
    cfg.vae.variant = vae::VaeVariant::Plain;
    Rng init(derive_seed(cfg.seed, 100));
    vae::VaeModel model = vae::make_vae(cfg.vae, init);
    cfg.train.seed = derive_seed(cfg.seed, 101);
    vae::train_variant(model, mixed.x, cfg.train);

    const MatrixXd z = vae::encode_mean_batch(model, dataset::features_as_double(mixed));
    const auto mixture = gmm::fit_em(z, 2, cfg.gmm_iterations, derive_seed(cfg.seed, 102));
    const auto assignment = gmm::assign(mixture, z);

    // Energy statistics per cluster decide which one is noise.
    const long rows = mixed.rows();
    std::vector<double> energy(rows);
    double mean_e[2] = {0.0, 0.0};
    long count_e[2] = {0, 0};
    for (long r = 0; r < rows; ++r) {
        energy[r] = mixed.x.col(r).cast<double>().squaredNorm() / (mixed.dim() / 2);
        mean_e[assignment[r]] += energy[r];
        ++count_e[assignment[r]];
    }
    if (count_e[0] == 0 || count_e[1] == 0)
        throw gmm::DegenerateFit("sense_spectrum: single-cluster fit");
    mean_e[0] /= count_e[0];
    mean_e[1] /= count_e[1];
    const int noise_cluster = mean_e[0] < mean_e[1] ? 0 : 1;

    SenseReport report;
    report.labels.resize(rows);
    for (long r = 0; r < rows; ++r) report.labels[r] = assignment[r] == noise_cluster ? 0 : 1;
    report.cluster_energy_mean[0] = std::min(mean_e[0], mean_e[1]);
    report.cluster_energy_mean[1] = std::max(mean_e[0], mean_e[1]);

    // Histogram modes over per-row energy, one per cluster.
    const double lo = *std::min_element(energy.begin(), energy.end());
    const double hi = *std::max_element(energy.begin(), energy.end()) + 1e-12;
    const int bins = 60;
    std::vector<long> hist[2];
    hist[0].assign(bins, 0);
    hist[1].assign(bins, 0);
    for (long r = 0; r < rows; ++r) {
        int b = static_cast<int>((energy[r] - lo) / (hi - lo) * bins);
        b = std::clamp(b, 0, bins - 1);
        ++hist[report.labels[r]][b];
    }
    int mode_bin[2];
    for (int c = 0; c < 2; ++c) {
        mode_bin[c] = static_cast<int>(
            std::max_element(hist[c].begin(), hist[c].end()) - hist[c].begin());
        report.hist_mode_energy[c] = lo + (mode_bin[c] + 0.5) * (hi - lo) / bins;
    }
    report.modes_distinct = mode_bin[0] != mode_bin[1];

    if (!mixed.labels_u8.empty()) {
        long correct = 0;
        for (long r = 0; r < rows; ++r)
            if (report.labels[r] == static_cast<int>(mixed.labels_u8[r])) ++correct;
        report.accuracy = static_cast<double>(correct) / rows;
    }
    return report;
}

// ---------------------------------------------------------------------------
// BER evaluation
// ---------------------------------------------------------------------------

enum class BerAccounting { PerSubcarrier, FrameExact };

struct BerPoint {
    double ebn0_db = 0.0;
    double ber = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};

struct SpoofReport {
    std::vector<BerPoint> ber;
    std::vector<BerPoint> baseline;
    double occupancy_mean_error = 0.0;
    double param_failure_rate = 0.0;  // fraction of frames with wrong (N, delta_f)
};

// Estimator run on the adversary's (or receiver's) noisy observation vector.
using EstimatorFn = std::function<ParamEstimate(const VectorXd&)>;

struct SpoofScenario {
    dataset::GenConfig tx;           // transmission distribution; snr_db is the
                                     // observation (spoofing or Tx-Rx) SNR
    std::vector<double> ar_ebn0_db;  // demodulation-link Eb/N0 sweep
    long frames_per_point = 2000;
    std::uint64_t seed = 0;
    BerAccounting accounting = BerAccounting::PerSubcarrier;
    channel::ChannelKind link_channel = channel::ChannelKind::Awgn;  // demodulation link
    int threads = 1;
};

namespace detail {

struct FrameTally {
    double bit_errors = 0.0;  // fractional under the 1/2 accounting rules
    long bits = 0;
    double occ_err = 0.0;  // per-subcarrier occupancy error, [0,1]
    bool param_failure = false;
};

// One Monte-Carlo frame: observe, estimate, retransmit, demodulate, account.
inline FrameTally run_frame(const SpoofScenario& sc, const EstimatorFn* estimator, double ebn0_db,
                            double observe_n0, std::uint64_t frame_seed) {
    using namespace waveform;
    Rng rng(frame_seed);
    FrameTally tally;

    const TransmissionParams p = dataset::draw_transmission(sc.tx, rng);
    const int b = bits_per_symbol(p.modulation);
    const auto active = p.pattern.active_indices();
    const int n_bits = static_cast<int>(active.size()) * b;
    tally.bits = n_bits;

    // Estimation step, from a noisy dataset-style observation.
    ParamEstimate est;
    if (estimator) {
        const auto obs_bits = random_bits(n_bits, rng);
        const auto obs_symbols = modulate(obs_bits, p.modulation);
        auto obs = synthesize(p, obs_symbols, sc.tx.n1, sc.tx.sample_interval(p.delta_f));
        auto [obs_rx, obs_gain] = channel::apply_channel(obs, sc.tx.chan, observe_n0, rng);
        (void)obs_gain;
        const auto xv = vectorize(obs_rx);
        est = (*estimator)(Eigen::Map<const VectorXd>(xv.data(), xv.size()));
    } else {
        est.source = EstimateSource::Oracle;
        est.n_hat = p.n;
        est.delta_f_hat = p.delta_f;
        est.u_hat = p.pattern.u;
    }

    // Occupancy bookkeeping against the true pattern.
    int dropped = 0;
    int occ_mismatch = 0;
    for (int i = 0; i < p.n; ++i) {
        const int pred = i < static_cast<int>(est.u_hat.size()) ? est.u_hat[i] : 0;
        if (pred != p.pattern.u[i]) ++occ_mismatch;
        if (p.pattern.u[i] && !pred) ++dropped;
    }
    tally.occ_err = static_cast<double>(occ_mismatch) / p.n;

    const bool grid_failure =
        est.n_hat != p.n || std::abs(est.delta_f_hat - p.delta_f) > 1e-6 * p.delta_f;
    tally.param_failure = grid_failure;
    if (grid_failure ||
        (sc.accounting == BerAccounting::FrameExact && occ_mismatch > 0)) {
        tally.bit_errors = 0.5 * n_bits;
        return tally;
    }

    // Bits the sender places on the subcarriers it believes active, in
    // ascending index order. Unit amplitude factors; the receiver's CSI is
    // the composite per-subcarrier gain.
    std::vector<int> sent_bins;
    for (int i = 0; i < p.n; ++i)
        if (i < static_cast<int>(est.u_hat.size()) && est.u_hat[i]) sent_bins.push_back(i);
    const auto tx_bits = random_bits(static_cast<int>(sent_bins.size()) * b, rng);
    const auto tx_symbols = modulate(tx_bits, p.modulation);

    // Critical sampling on the true grid; bin k of the DFT is subcarrier k.
    const int n1 = p.n;
    ComplexFrame tx_frame;
    tx_frame.t_s = p.t_useful() / n1;
    tx_frame.samples.assign(n1, cdouble(0.0, 0.0));
    for (std::size_t a = 0; a < sent_bins.size(); ++a) {
        const int sc_idx = sent_bins[a];
        const double w = 2.0 * std::numbers::pi * sc_idx / n1;
        cdouble phase(1.0, 0.0);
        const cdouble rot(std::cos(w), std::sin(w));
        for (int k = 0; k < n1; ++k) {
            tx_frame.samples[k] += tx_symbols[a] * phase;
            phase *= rot;
        }
    }

    // Demodulation-link noise from the legitimate operating point:
    // N0 = E[Es] / (Q * ebn0), Es for the true frame with unit powers.
    const double q_factor = static_cast<double>(active.size()) * b / p.n;
    const double es = static_cast<double>(active.size());
    const double n0 = es / (q_factor * channel::db_to_linear(ebn0_db));

    cdouble fade(1.0, 0.0);
    if (sc.link_channel == channel::ChannelKind::RayleighFlat) fade = rng.complex_gaussian(1.0);
    for (auto& s : tx_frame.samples) s *= fade;
    const ComplexFrame rx = channel::apply_awgn(tx_frame, n0, rng);

    // Per-subcarrier matched filter over the true active set.
    std::size_t sent_pos = 0;
    for (int a = 0; a < static_cast<int>(active.size()); ++a) {
        const int sc_idx = active[a];
        const bool sender_used =
            sc_idx < static_cast<int>(est.u_hat.size()) && est.u_hat[sc_idx];
        while (sent_pos < sent_bins.size() && sent_bins[sent_pos] < sc_idx) ++sent_pos;
        if (!sender_used) {
            tally.bit_errors += 0.5 * b;  // dropped active subcarrier
            continue;
        }
        cdouble bin(0.0, 0.0);
        const double w = -2.0 * std::numbers::pi * sc_idx / n1;
        cdouble phase(1.0, 0.0);
        const cdouble rot(std::cos(w), std::sin(w));
        for (int k = 0; k < n1; ++k) {
            bin += rx.samples[k] * phase;
            phase *= rot;
        }
        bin /= static_cast<double>(n1);
        const cdouble equalized = bin / fade;
        const auto decided = demodulate({equalized}, p.modulation);
        for (int i = 0; i < b; ++i)
            if (decided[i] != tx_bits[sent_pos * b + i]) tally.bit_errors += 1.0;
        ++sent_pos;
    }
    return tally;
}

inline BerPoint reduce_point(double ebn0_db, const std::vector<FrameTally>& tallies) {
    double err = 0.0;
    double bits = 0.0;
    for (const auto& t : tallies) {
        err += t.bit_errors;
        bits += static_cast<double>(t.bits);
    }
    BerPoint pt;
    pt.ebn0_db = ebn0_db;
    pt.ber = err / bits;
    // Delta-method standard error over frames.
    double var = 0.0;
    for (const auto& t : tallies) {
        const double d = t.bit_errors - pt.ber * t.bits;
        var += d * d;
    }
    const double se = std::sqrt(var) / bits;
    pt.ci_lo = std::max(0.0, pt.ber - 1.96 * se);
    pt.ci_hi = pt.ber + 1.96 * se;
    return pt;
}

inline std::vector<FrameTally> run_point(const SpoofScenario& sc, const EstimatorFn* estimator,
                                         double ebn0_db, double observe_n0,
                                         std::uint64_t point_stream) {
    std::vector<FrameTally> tallies(sc.frames_per_point);
    auto worker = [&](long lo, long hi) {
        for (long f = lo; f < hi; ++f)
            tallies[f] = run_frame(sc, estimator, ebn0_db, observe_n0,
                                   derive_seed(point_stream, f));
    };
    if (sc.threads <= 1) {
        worker(0, sc.frames_per_point);
    } else {
        std::vector<std::thread> pool;
        const long chunk = (sc.frames_per_point + sc.threads - 1) / sc.threads;
        for (int t = 0; t < sc.threads; ++t) {
            const long lo = t * chunk;
            const long hi = std::min<long>(sc.frames_per_point, lo + chunk);
            if (lo < hi) pool.emplace_back(worker, lo, hi);
        }
        for (auto& th : pool) th.join();
    }
    return tallies;
}

}  // namespace detail

// Full sweep for one estimator plus the oracle baseline on the same seeds.
inline SpoofReport spoof_ber_eval(const SpoofScenario& sc, const EstimatorFn* estimator) {
    if (sc.ar_ebn0_db.empty()) throw std::invalid_argument("spoof_ber_eval: empty sweep");
    const double observe_n0 = dataset::calibrated_n0(sc.tx);
    SpoofReport report;
    double occ_err = 0.0;
    long failures = 0;
    long frames = 0;
    for (std::size_t i = 0; i < sc.ar_ebn0_db.size(); ++i) {
        const std::uint64_t stream = derive_seed(sc.seed, 1000 + i);
        const auto tallies =
            detail::run_point(sc, estimator, sc.ar_ebn0_db[i], observe_n0, stream);
        report.ber.push_back(detail::reduce_point(sc.ar_ebn0_db[i], tallies));
        for (const auto& t : tallies) {
            occ_err += t.occ_err;
            failures += t.param_failure ? 1 : 0;
            ++frames;
        }
        const auto base =
            detail::run_point(sc, nullptr, sc.ar_ebn0_db[i], observe_n0, stream);
        report.baseline.push_back(detail::reduce_point(sc.ar_ebn0_db[i], base));
    }
    report.occupancy_mean_error = estimator ? occ_err / frames : 0.0;
    report.param_failure_rate = estimator ? static_cast<double>(failures) / frames : 0.0;
    return report;
}

// Legitimate-link reliability with the receiver estimating the parameters
// from its own observation (or knowing them, when estimator is null).
inline SpoofReport rx_reliability_eval(const SpoofScenario& sc, const EstimatorFn* rx_estimator) {
    return spoof_ber_eval(sc, rx_estimator);
}

inline EstimatorFn make_supervised_estimator(const SupervisedModels& models) {
    return [&models](const VectorXd& x) { return supervised_infer(models, x); };
}

inline EstimatorFn make_unsupervised_estimator(const UnsupervisedAttacker& atk) {
    return [&atk](const VectorXd& x) { return unsupervised_infer(atk, x); };
}

inline void to_json(nlohmann::json& j, const SpoofScenario& sc) {
    j = nlohmann::json{
        {"tx", sc.tx},
        {"ar_ebn0_db", sc.ar_ebn0_db},
        {"frames_per_point", sc.frames_per_point},
        {"seed", sc.seed},
        {"accounting",
         sc.accounting == BerAccounting::PerSubcarrier ? "per-subcarrier" : "frame-exact"},
        {"link_channel", channel::channel_kind_name(sc.link_channel)}};
}

inline void from_json(const nlohmann::json& j, SpoofScenario& sc) {
    sc.tx = j.at("tx").get<dataset::GenConfig>();
    sc.ar_ebn0_db = j.at("ar_ebn0_db").get<std::vector<double>>();
    sc.frames_per_point = j.value("frames_per_point", 2000L);
    sc.seed = j.value("seed", std::uint64_t{0});
    const std::string acc = j.value("accounting", "per-subcarrier");
    if (acc == "per-subcarrier")
        sc.accounting = BerAccounting::PerSubcarrier;
    else if (acc == "frame-exact")
        sc.accounting = BerAccounting::FrameExact;
    else
        throw std::invalid_argument("unknown accounting mode: " + acc);
    sc.link_channel = channel::channel_kind_from_name(j.value("link_channel", "awgn"));
    sc.threads = 1;
}

}  // namespace ncofdm::attack
