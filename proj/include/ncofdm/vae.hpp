#pragma once

// Variational autoencoder family over vectorized frames: the plain evidence
// lower bound, the beta-weighted KL variant, decoder-side moment matching on
// the batch covariance of the posterior means (the "dip" variant), and the
// density-ratio total-correlation penalty with an adversarial discriminator
// (the "factor" variant). A reconstruction weight eta <= 1 de-emphasizes the
// log-likelihood term when training data are noisy.
//
// Encoder and decoder are Gaussians with diagonal covariance; both halves of
// each network head carry (mean, log variance). The prior is standard normal.
// All gradients are assembled analytically and validated against central
// finite differences in the test suite.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ncofdm/nn.hpp"
#include "ncofdm/rng.hpp"

namespace ncofdm::vae {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

enum class VaeVariant { Plain, Beta, Dip, Factor };

inline std::string variant_name(VaeVariant v) {
    switch (v) {
        case VaeVariant::Plain: return "plain";
        case VaeVariant::Beta: return "beta";
        case VaeVariant::Dip: return "dip";
        case VaeVariant::Factor: return "factor";
    }
    throw std::logic_error("variant_name");
}

inline VaeVariant variant_from_name(const std::string& s) {
    if (s == "plain") return VaeVariant::Plain;
    if (s == "beta") return VaeVariant::Beta;
    if (s == "dip") return VaeVariant::Dip;
    if (s == "factor") return VaeVariant::Factor;
    throw std::invalid_argument("unknown vae variant: " + s);
}

struct VaeConfig {
    int data_dim = 0;  // 2 * n1
    int n_z = 20;
    std::vector<int> encoder_hidden{200, 400, 600, 400, 200};
    std::vector<int> decoder_hidden{200, 400, 600, 400, 200};
    VaeVariant variant = VaeVariant::Plain;
    double beta = 1.0;
    double lambda_d = 0.0;
    double lambda_od = 0.0;
    double gamma = 0.0;
    double eta = 1.0;
    std::vector<int> discriminator_hidden{64, 64, 64};
    double decoder_var_floor = 1e-4;
    // Negatives for the density-ratio discriminator: prior draws (the
    // literal protocol) or dimension-wise permuted posterior samples.
    bool factor_prior_negatives = true;

    void validate() const {
        if (data_dim < 1 || n_z < 1) throw std::invalid_argument("VaeConfig: bad dimensions");
        if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("VaeConfig: eta must lie in [0,1]");
        if (variant == VaeVariant::Beta && beta <= 1.0)
            throw std::invalid_argument("VaeConfig: beta variant expects beta > 1");
    }

    double kl_weight() const { return variant == VaeVariant::Beta ? beta : 1.0; }
};

inline void to_json(json& j, const VaeConfig& c) {
    j = json{{"data_dim", c.data_dim},
             {"n_z", c.n_z},
             {"encoder_hidden", c.encoder_hidden},
             {"decoder_hidden", c.decoder_hidden},
             {"variant", variant_name(c.variant)},
             {"beta", c.beta},
             {"lambda_d", c.lambda_d},
             {"lambda_od", c.lambda_od},
             {"gamma", c.gamma},
             {"eta", c.eta},
             {"discriminator_hidden", c.discriminator_hidden},
             {"decoder_var_floor", c.decoder_var_floor},
             {"factor_prior_negatives", c.factor_prior_negatives}};
}

inline void from_json(const json& j, VaeConfig& c) {
    c.data_dim = j.at("data_dim").get<int>();
    c.n_z = j.at("n_z").get<int>();
    c.encoder_hidden = j.value("encoder_hidden", std::vector<int>{200, 400, 600, 400, 200});
    c.decoder_hidden = j.value("decoder_hidden", std::vector<int>{200, 400, 600, 400, 200});
    c.variant = variant_from_name(j.value("variant", "plain"));
    c.beta = j.value("beta", 1.0);
    c.lambda_d = j.value("lambda_d", 0.0);
    c.lambda_od = j.value("lambda_od", 0.0);
    c.gamma = j.value("gamma", 0.0);
    c.eta = j.value("eta", 1.0);
    c.discriminator_hidden = j.value("discriminator_hidden", std::vector<int>{64, 64, 64});
    c.decoder_var_floor = j.value("decoder_var_floor", 1e-4);
    c.factor_prior_negatives = j.value("factor_prior_negatives", true);
}

struct VaeModel {
    VaeConfig cfg;
    nn::MlpModel encoder;        // data_dim -> 2 n_z, linear head
    nn::MlpModel decoder;        // n_z -> 2 data_dim, linear head
    nn::MlpModel discriminator;  // n_z -> 1, sigmoid head (factor variant)
};

inline VaeModel make_vae(const VaeConfig& cfg, Rng& rng) {
    cfg.validate();
    VaeModel m;
    m.cfg = cfg;
    m.encoder = nn::make_mlp(cfg.data_dim, cfg.encoder_hidden, 2 * cfg.n_z,
                             nn::Activation::Linear, rng);
    m.decoder = nn::make_mlp(cfg.n_z, cfg.decoder_hidden, 2 * cfg.data_dim,
                             nn::Activation::Linear, rng);
    m.discriminator = nn::make_mlp(cfg.n_z, cfg.discriminator_hidden, 1,
                                   nn::Activation::Sigmoid, rng);
    return m;
}

// ---------------------------------------------------------------------------
// Distribution heads
// ---------------------------------------------------------------------------

struct GaussianBatch {
    MatrixXd mean;
    MatrixXd var;
    MatrixXd logvar;
};

namespace detail {
// Log-variance heads are clamped to keep exp() finite on extreme inputs; the
// clamp is part of the model (zero gradient outside the band).
constexpr double kLogVarLimit = 30.0;

inline MatrixXd clamp_logvar(const MatrixXd& lv) {
    return lv.cwiseMax(-kLogVarLimit).cwiseMin(kLogVarLimit);
}

inline MatrixXd logvar_mask(const MatrixXd& lv) {
    return (lv.array().abs() < kLogVarLimit).cast<double>().matrix();
}
}  // namespace detail

inline GaussianBatch encoder_dist(const VaeModel& m, const MatrixXd& x) {
    const MatrixXd out = nn::forward(m.encoder, x).output();
    GaussianBatch g;
    g.mean = out.topRows(m.cfg.n_z);
    g.logvar = detail::clamp_logvar(out.bottomRows(m.cfg.n_z));
    g.var = g.logvar.array().exp().matrix();
    return g;
}

inline GaussianBatch decoder_dist(const VaeModel& m, const MatrixXd& z) {
    const MatrixXd out = nn::forward(m.decoder, z).output();
    GaussianBatch g;
    g.mean = out.topRows(m.cfg.data_dim);
    g.logvar = detail::clamp_logvar(out.bottomRows(m.cfg.data_dim));
    g.var = (g.logvar.array().exp() + m.cfg.decoder_var_floor).matrix();
    return g;
}

inline VectorXd encode_mean(const VaeModel& m, const VectorXd& x) {
    return encoder_dist(m, x).mean.col(0);
}

inline MatrixXd encode_mean_batch(const VaeModel& m, const MatrixXd& x) {
    return encoder_dist(m, x).mean;
}

inline VectorXd decode_mean(const VaeModel& m, const VectorXd& z) {
    return decoder_dist(m, z).mean.col(0);
}

// Reparameterized posterior sample with the draw recorded.
struct LatentCode {
    VectorXd mean;
    VectorXd var;
    VectorXd eps;
    VectorXd z;  // mean + sqrt(var) .* eps
};

inline LatentCode encode_sample(const VaeModel& m, const VectorXd& x, Rng& rng) {
    const auto g = encoder_dist(m, x);
    LatentCode code;
    code.mean = g.mean.col(0);
    code.var = g.var.col(0);
    code.eps.resize(m.cfg.n_z);
    for (int i = 0; i < m.cfg.n_z; ++i) code.eps[i] = rng.gaussian();
    code.z = code.mean + code.var.cwiseSqrt().cwiseProduct(code.eps);
    return code;
}

// ---------------------------------------------------------------------------
// Objective terms
// ---------------------------------------------------------------------------

// KL(N(mu, diag(var)) || N(0, I)) = 1/2 sum (mu^2 + var - 1 - log var).
inline double kl_to_standard_normal(const VectorXd& mu, const VectorXd& var) {
    if (mu.size() != var.size()) throw std::invalid_argument("kl: size mismatch");
    if ((var.array() <= 0.0).any()) throw std::invalid_argument("kl: nonpositive variance");
    return 0.5 * (mu.array().square() + var.array() - 1.0 - var.array().log()).sum();
}

// Diagonal Gaussian log density of x under (mean, var), summed over dims.
inline double gaussian_log_density(const VectorXd& x, const VectorXd& mean, const VectorXd& var) {
    const auto diff = (x - mean).array();
    return (-0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * var.array().log() -
            diff.square() / (2.0 * var.array()))
        .sum();
}

struct ElboParts {
    double total = 0.0;
    double kl = 0.0;
    double recon = 0.0;
};

// Single-sample evidence lower bound with the model's reconstruction weight:
// total = -KL + eta * log p(x | z), z = mu + sigma .* eps.
inline ElboParts elbo(const VaeModel& m, const VectorXd& x, const VectorXd& eps) {
    const auto enc = encoder_dist(m, x);
    ElboParts parts;
    parts.kl = kl_to_standard_normal(enc.mean.col(0), enc.var.col(0));
    const VectorXd z = enc.mean.col(0) + enc.var.col(0).cwiseSqrt().cwiseProduct(eps);
    const auto dec = decoder_dist(m, z);
    parts.recon = gaussian_log_density(x, dec.mean.col(0), dec.var.col(0));
    parts.total = -parts.kl + m.cfg.eta * parts.recon;
    if (!std::isfinite(parts.total)) throw std::runtime_error("elbo: non-finite value");
    return parts;
}

struct ObjectiveParts {
    double objective = 0.0;   // maximized quantity, averaged over the batch
    double kl = 0.0;          // mean KL term
    double recon = 0.0;       // mean reconstruction log density
    double dip_penalty = 0.0; // covariance moment penalty (dip variant)
    double tc = 0.0;          // density-ratio total correlation estimate (factor)
};

struct ObjectiveGrads {
    nn::Gradients encoder;
    nn::Gradients decoder;
};

// Value and, optionally, parameter gradients of the variant objective on one
// mini-batch with fixed reparameterization draws. Gradients are returned for
// the *minimized* quantity (the negative objective), ready for the nn
// optimizers. The discriminator is treated as fixed here.
inline ObjectiveParts batch_objective(const VaeModel& m, const MatrixXd& x, const MatrixXd& eps,
                                      ObjectiveGrads* grads = nullptr, MatrixXd* z_out = nullptr) {
    const int nz = m.cfg.n_z;
    const int d = m.cfg.data_dim;
    const Eigen::Index b = x.cols();
    if (eps.rows() != nz || eps.cols() != b) throw std::invalid_argument("batch_objective: eps shape");
    const double inv_b = 1.0 / static_cast<double>(b);
    const double w_kl = m.cfg.kl_weight();

    const nn::ForwardPass enc_fp = nn::forward(m.encoder, x);
    const MatrixXd mu = enc_fp.output().topRows(nz);
    const MatrixXd lv = detail::clamp_logvar(enc_fp.output().bottomRows(nz));
    const MatrixXd lv_mask = detail::logvar_mask(enc_fp.output().bottomRows(nz));
    const MatrixXd var = lv.array().exp().matrix();
    const MatrixXd sigma = var.cwiseSqrt();
    const MatrixXd z = mu + sigma.cwiseProduct(eps);
    if (z_out) *z_out = z;

    const nn::ForwardPass dec_fp = nn::forward(m.decoder, z);
    const MatrixXd mu_x = dec_fp.output().topRows(d);
    const MatrixXd lv_x = detail::clamp_logvar(dec_fp.output().bottomRows(d));
    const MatrixXd lvx_mask = detail::logvar_mask(dec_fp.output().bottomRows(d));
    const MatrixXd var_x =
        (lv_x.array().exp() + m.cfg.decoder_var_floor).matrix();

    ObjectiveParts parts;
    parts.kl = 0.5 * (mu.array().square() + var.array() - 1.0 - lv.array()).sum() * inv_b;
    const MatrixXd diff = x - mu_x;
    parts.recon = (-0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * var_x.array().log() -
                   diff.array().square() / (2.0 * var_x.array()))
                      .sum() *
                  inv_b;

    // Batch covariance of the posterior means (biased, 1/B).
    MatrixXd centered;
    MatrixXd cov;
    if (m.cfg.variant == VaeVariant::Dip) {
        const VectorXd mean_of_mu = mu.rowwise().mean();
        centered = mu.colwise() - mean_of_mu;
        cov = centered * centered.transpose() * inv_b;
        double off = 0.0, diag = 0.0;
        for (int i = 0; i < nz; ++i)
            for (int j = 0; j < nz; ++j) {
                if (i == j)
                    diag += (cov(i, i) - 1.0) * (cov(i, i) - 1.0);
                else
                    off += cov(i, j) * cov(i, j);
            }
        parts.dip_penalty = m.cfg.lambda_od * off + m.cfg.lambda_d * diag;
    }

    nn::ForwardPass disc_fp;
    if (m.cfg.variant == VaeVariant::Factor) {
        disc_fp = nn::forward(m.discriminator, z);
        // log(D/(1-D)) is the pre-sigmoid logit.
        parts.tc = disc_fp.pre.back().sum() * inv_b;
    }

    parts.objective = -w_kl * parts.kl + m.cfg.eta * parts.recon - parts.dip_penalty -
                      m.cfg.gamma * parts.tc;
    if (!std::isfinite(parts.objective)) throw std::runtime_error("batch_objective: non-finite");
    if (!grads) return parts;

    // Decoder head seed, d(-J)/d(mu_x, lv_x).
    MatrixXd dec_seed(2 * d, b);
    const MatrixXd dR_dmu = diff.cwiseQuotient(var_x);
    dec_seed.topRows(d) = -m.cfg.eta * inv_b * dR_dmu;
    const MatrixXd exp_lvx = lv_x.array().exp().matrix();
    const MatrixXd dR_dlvx =
        (exp_lvx.array() * lvx_mask.array() *
         (diff.array().square() / (2.0 * var_x.array().square()) - 0.5 / var_x.array()))
            .matrix();
    dec_seed.bottomRows(d) = -m.cfg.eta * inv_b * dR_dlvx;
    grads->decoder = nn::backward(m.decoder, dec_fp, dec_seed);

    // d(-J)/dz: reconstruction path plus the fixed-discriminator logit path.
    MatrixXd dz = grads->decoder.dinput;
    if (m.cfg.variant == VaeVariant::Factor) {
        const MatrixXd logit_seed = MatrixXd::Constant(1, b, m.cfg.gamma * inv_b);
        dz += nn::backward(m.discriminator, disc_fp, logit_seed, true).dinput;
    }

    // Encoder head seed.
    MatrixXd enc_seed(2 * nz, b);
    enc_seed.topRows(nz) = w_kl * inv_b * mu + dz;
    enc_seed.bottomRows(nz) =
        ((w_kl * inv_b * 0.5 * (var.array() - 1.0) +
          dz.array() * 0.5 * sigma.array() * eps.array()) *
         lv_mask.array())
            .matrix();
    if (m.cfg.variant == VaeVariant::Dip) {
        MatrixXd g = cov;
        for (int i = 0; i < nz; ++i)
            for (int j = 0; j < nz; ++j)
                g(i, j) = (i == j) ? 2.0 * m.cfg.lambda_d * (cov(i, i) - 1.0)
                                   : 2.0 * m.cfg.lambda_od * cov(i, j);
        enc_seed.topRows(nz) += (2.0 * inv_b) * (g * centered);
    }
    grads->encoder = nn::backward(m.encoder, enc_fp, enc_seed);
    return parts;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct VaeTrainTrace {
    std::vector<double> objective;           // per step
    std::vector<double> discriminator_loss;  // per step, factor variant only
};

// Mini-batch ascent on the variant objective; the factor variant alternates
// one discriminator update per VAE update, with prior draws as negatives.
inline VaeTrainTrace train_variant(VaeModel& m, const Eigen::MatrixXf& data,
                                   const nn::TrainConfig& cfg) {
    if (data.rows() != m.cfg.data_dim) throw std::invalid_argument("train_variant: data dim");
    if (cfg.batch < 1 || cfg.lr <= 0.0) throw std::invalid_argument("train_variant: bad config");
    Rng rng(cfg.seed);
    nn::AdamState enc_opt(m.encoder), dec_opt(m.decoder), disc_opt(m.discriminator);
    VaeTrainTrace trace;
    trace.objective.reserve(cfg.steps);

    std::vector<int> idx(cfg.batch);
    MatrixXd xb(m.cfg.data_dim, cfg.batch);
    MatrixXd eps(m.cfg.n_z, cfg.batch);
    for (int step = 0; step < cfg.steps; ++step) {
        for (auto& i : idx) i = static_cast<int>(rng.uniform_int(0, data.cols() - 1));
        for (int c = 0; c < cfg.batch; ++c) xb.col(c) = data.col(idx[c]).cast<double>();
        for (int c = 0; c < cfg.batch; ++c)
            for (int r = 0; r < m.cfg.n_z; ++r) eps(r, c) = rng.gaussian();

        ObjectiveGrads grads;
        MatrixXd z;
        ObjectiveParts parts;
        try {
            parts = batch_objective(m, xb, eps, &grads, &z);
        } catch (const std::runtime_error&) {
            throw nn::TrainingDiverged(step);
        }
        trace.objective.push_back(parts.objective);
        if (cfg.opt == nn::Optimizer::Adam) {
            enc_opt.step(m.encoder, grads.encoder, cfg);
            dec_opt.step(m.decoder, grads.decoder, cfg);
        } else {
            nn::sgd_step(m.encoder, grads.encoder, cfg.lr);
            nn::sgd_step(m.decoder, grads.decoder, cfg.lr);
        }

        if (m.cfg.variant == VaeVariant::Factor) {
            // Positives: posterior samples from this batch. Negatives: prior
            // draws, or posterior samples permuted independently per latent.
            MatrixXd disc_in(m.cfg.n_z, 2 * cfg.batch);
            disc_in.leftCols(cfg.batch) = z;
            if (m.cfg.factor_prior_negatives) {
                for (int c = 0; c < cfg.batch; ++c)
                    for (int r = 0; r < m.cfg.n_z; ++r) disc_in(r, cfg.batch + c) = rng.gaussian();
            } else {
                for (int r = 0; r < m.cfg.n_z; ++r)
                    for (int c = 0; c < cfg.batch; ++c)
                        disc_in(r, cfg.batch + c) = z(r, rng.uniform_int(0, cfg.batch - 1));
            }
            MatrixXd disc_t(1, 2 * cfg.batch);
            disc_t.leftCols(cfg.batch).setOnes();
            disc_t.rightCols(cfg.batch).setZero();
            const auto fp = nn::forward(m.discriminator, disc_in);
            const double dl = nn::loss_value(nn::Loss::BernoulliBce, fp.output(), disc_t);
            if (!std::isfinite(dl)) throw nn::TrainingDiverged(step);
            trace.discriminator_loss.push_back(dl);
            const auto dg = nn::backward_from_loss(m.discriminator, fp, nn::Loss::BernoulliBce, disc_t);
            if (cfg.opt == nn::Optimizer::Adam)
                disc_opt.step(m.discriminator, dg, cfg);
            else
                nn::sgd_step(m.discriminator, dg, cfg.lr);
        }
    }
    return trace;
}

// Sum of absolute reconstruction errors through the posterior and decoder means.
inline double reconstruction_error(const VaeModel& m, const VectorXd& x) {
    return (x - decode_mean(m, encode_mean(m, x))).cwiseAbs().sum();
}

// ---------------------------------------------------------------------------
// Checkpoints: vae header + three embedded mlp checkpoints
// ---------------------------------------------------------------------------

inline void save_vae(const std::string& path, const VaeModel& m) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_vae: cannot open " + path);
    json header{{"format", "ncofdm-vae"}, {"schema_version", 1}, {"config", m.cfg}};
    const std::string hs = header.dump();
    const std::uint32_t len = static_cast<std::uint32_t>(hs.size());
    os.write(reinterpret_cast<const char*>(&len), sizeof(len));
    os.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    nn::detail::write_header_and_blob(os, nn::detail::mlp_header(m.encoder), m.encoder);
    nn::detail::write_header_and_blob(os, nn::detail::mlp_header(m.decoder), m.decoder);
    nn::detail::write_header_and_blob(os, nn::detail::mlp_header(m.discriminator), m.discriminator);
}

inline VaeModel load_vae(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_vae: cannot open " + path);
    const json header = nn::detail::read_header(is);
    if (header.value("format", "") != "ncofdm-vae")
        throw std::runtime_error("load_vae: not a vae checkpoint");
    VaeModel m;
    m.cfg = header.at("config").get<VaeConfig>();
    for (nn::MlpModel* part : {&m.encoder, &m.decoder, &m.discriminator}) {
        const json h = nn::detail::read_header(is);
        *part = nn::detail::mlp_from_header(h);
        nn::detail::read_f32_blob(is, *part);
        part->validate();
    }
    return m;
}

}  // namespace ncofdm::vae
