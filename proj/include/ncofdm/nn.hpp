#pragma once

// Minimal dense feed-forward network with reverse-mode gradients.
// Batches are column-major: one sample per column. Everything runs in double
// so gradients can be checked against central finite differences.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ncofdm/rng.hpp"

namespace ncofdm::nn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Activation { Linear, Relu, Sigmoid, Softmax };
enum class Loss { SquaredError, CrossEntropySoftmax, BernoulliBce };
enum class Optimizer { Sgd, Adam };

inline std::string activation_name(Activation a) {
    switch (a) {
        case Activation::Linear: return "linear";
        case Activation::Relu: return "relu";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Softmax: return "softmax";
    }
    throw std::logic_error("activation_name");
}

inline Activation activation_from_name(const std::string& s) {
    if (s == "linear") return Activation::Linear;
    if (s == "relu") return Activation::Relu;
    if (s == "sigmoid") return Activation::Sigmoid;
    if (s == "softmax") return Activation::Softmax;
    throw std::invalid_argument("unknown activation: " + s);
}

struct TrainingDiverged : std::runtime_error {
    int step;
    explicit TrainingDiverged(int s)
        : std::runtime_error("training diverged at step " + std::to_string(s)), step(s) {}
};

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

struct MlpModel {
    std::vector<MatrixXd> weights;      // layer l: out x in
    std::vector<VectorXd> biases;
    std::vector<Activation> activations;

    int num_layers() const { return static_cast<int>(weights.size()); }
    int input_dim() const { return static_cast<int>(weights.front().cols()); }
    int output_dim() const { return static_cast<int>(weights.back().rows()); }

    void validate() const {
        if (weights.empty() || weights.size() != biases.size() ||
            weights.size() != activations.size())
            throw std::invalid_argument("MlpModel: inconsistent layer lists");
        for (std::size_t l = 0; l < weights.size(); ++l) {
            if (weights[l].rows() != biases[l].size())
                throw std::invalid_argument("MlpModel: bias size mismatch");
            if (l > 0 && weights[l].cols() != weights[l - 1].rows())
                throw std::invalid_argument("MlpModel: adjacent layer dims incompatible");
            if (!weights[l].allFinite() || !biases[l].allFinite())
                throw std::invalid_argument("MlpModel: non-finite parameters");
        }
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l < weights.size(); ++l)
            n += static_cast<std::size_t>(weights[l].size()) + biases[l].size();
        return n;
    }
};

// He-scaled Gaussian init for ReLU layers, Glorot for the rest, zero biases.
inline MlpModel make_mlp(const std::vector<int>& widths, const std::vector<Activation>& activations,
                         Rng& rng) {
    if (widths.size() < 2 || activations.size() != widths.size() - 1)
        throw std::invalid_argument("make_mlp: need widths = activations + 1");
    MlpModel m;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const int fan_in = widths[l];
        const int fan_out = widths[l + 1];
        const double scale = activations[l] == Activation::Relu
                                 ? std::sqrt(2.0 / fan_in)
                                 : std::sqrt(2.0 / (fan_in + fan_out));
        MatrixXd w(fan_out, fan_in);
        for (int j = 0; j < fan_in; ++j)
            for (int i = 0; i < fan_out; ++i) w(i, j) = scale * rng.gaussian();
        m.weights.push_back(std::move(w));
        m.biases.push_back(VectorXd::Zero(fan_out));
        m.activations.push_back(activations[l]);
    }
    m.validate();
    return m;
}

// Convenience: hidden layers all ReLU, configurable head.
inline MlpModel make_mlp(int input, const std::vector<int>& hidden, int output, Activation head,
                         Rng& rng) {
    std::vector<int> widths{input};
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    widths.push_back(output);
    std::vector<Activation> act(hidden.size(), Activation::Relu);
    act.push_back(head);
    return make_mlp(widths, act, rng);
}

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

struct ForwardPass {
    std::vector<MatrixXd> pre;   // pre-activations per layer
    std::vector<MatrixXd> post;  // post[0] = input, post[l+1] = activation(pre[l])

    const MatrixXd& output() const { return post.back(); }
};

namespace detail {
inline void apply_activation(Activation a, const MatrixXd& pre, MatrixXd& post) {
    switch (a) {
        case Activation::Linear:
            post = pre;
            return;
        case Activation::Relu:
            post = pre.cwiseMax(0.0);
            return;
        case Activation::Sigmoid:
            post = ((-pre.array()).exp() + 1.0).inverse().matrix();
            return;
        case Activation::Softmax: {
            post.resizeLike(pre);
            for (Eigen::Index c = 0; c < pre.cols(); ++c) {
                Eigen::ArrayXd col = pre.col(c).array();
                col -= col.maxCoeff();
                Eigen::ArrayXd e = col.exp();
                post.col(c) = (e / e.sum()).matrix();
            }
            return;
        }
    }
    throw std::logic_error("apply_activation");
}

// dL/dpre from dL/dpost.
inline MatrixXd activation_backward(Activation a, const MatrixXd& pre, const MatrixXd& post,
                                    const MatrixXd& dpost) {
    switch (a) {
        case Activation::Linear:
            return dpost;
        case Activation::Relu:
            return (pre.array() > 0.0).cast<double>().matrix().cwiseProduct(dpost);
        case Activation::Sigmoid:
            return (post.array() * (1.0 - post.array()) * dpost.array()).matrix();
        case Activation::Softmax: {
            MatrixXd dpre(pre.rows(), pre.cols());
            for (Eigen::Index c = 0; c < pre.cols(); ++c) {
                const double dot = post.col(c).dot(dpost.col(c));
                dpre.col(c) = post.col(c).cwiseProduct(dpost.col(c) - VectorXd::Constant(pre.rows(), dot));
            }
            return dpre;
        }
    }
    throw std::logic_error("activation_backward");
}
}  // namespace detail

inline ForwardPass forward(const MlpModel& m, const MatrixXd& batch) {
    if (batch.rows() != m.input_dim())
        throw std::invalid_argument("forward: input width mismatch");
    ForwardPass fp;
    fp.pre.resize(m.num_layers());
    fp.post.resize(m.num_layers() + 1);
    fp.post[0] = batch;
    for (int l = 0; l < m.num_layers(); ++l) {
        fp.pre[l].noalias() = m.weights[l] * fp.post[l];
        fp.pre[l].colwise() += m.biases[l];
        detail::apply_activation(m.activations[l], fp.pre[l], fp.post[l + 1]);
    }
    return fp;
}

struct Gradients {
    std::vector<MatrixXd> dw;
    std::vector<VectorXd> db;
    MatrixXd dinput;
};

// Reverse pass seeded with dL/d(output). If seed_is_preactivation, the seed
// is interpreted as dL/d(pre) of the last layer (used by fused loss heads).
inline Gradients backward(const MlpModel& m, const ForwardPass& fp, const MatrixXd& seed,
                          bool seed_is_preactivation = false) {
    Gradients g;
    g.dw.resize(m.num_layers());
    g.db.resize(m.num_layers());
    MatrixXd dpre;
    for (int l = m.num_layers() - 1; l >= 0; --l) {
        if (l == m.num_layers() - 1 && seed_is_preactivation)
            dpre = seed;
        else if (l == m.num_layers() - 1)
            dpre = detail::activation_backward(m.activations[l], fp.pre[l], fp.post[l + 1], seed);
        else {
            MatrixXd dpost;
            dpost.noalias() = m.weights[l + 1].transpose() * dpre;
            dpre = detail::activation_backward(m.activations[l], fp.pre[l], fp.post[l + 1], dpost);
        }
        g.dw[l].noalias() = dpre * fp.post[l].transpose();
        g.db[l] = dpre.rowwise().sum();
    }
    g.dinput.noalias() = m.weights[0].transpose() * dpre;
    return g;
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

// Mean over the batch of the per-sample loss.
inline double loss_value(Loss loss, const MatrixXd& output, const MatrixXd& targets) {
    if (output.rows() != targets.rows() || output.cols() != targets.cols())
        throw std::invalid_argument("loss_value: shape mismatch");
    const double b = static_cast<double>(output.cols());
    switch (loss) {
        case Loss::SquaredError:
            return (output - targets).squaredNorm() / b;
        case Loss::CrossEntropySoftmax: {
            const double tiny = 1e-12;
            return -(targets.array() * (output.array() + tiny).log()).sum() / b;
        }
        case Loss::BernoulliBce: {
            const auto p = output.array().min(1.0 - 1e-12).max(1e-12);
            return -(targets.array() * p.log() + (1.0 - targets.array()) * (1.0 - p).log()).sum() / b;
        }
    }
    throw std::logic_error("loss_value");
}

// Gradients of loss_value wrt parameters. Softmax + cross-entropy and
// sigmoid + Bernoulli heads are fused into the (p - t)/B pre-activation seed.
inline Gradients backward_from_loss(const MlpModel& m, const ForwardPass& fp, Loss loss,
                                    const MatrixXd& targets) {
    const double b = static_cast<double>(targets.cols());
    const MatrixXd& out = fp.output();
    switch (loss) {
        case Loss::SquaredError:
            return backward(m, fp, MatrixXd(2.0 / b * (out - targets)));
        case Loss::CrossEntropySoftmax:
            if (m.activations.back() != Activation::Softmax)
                throw std::invalid_argument("CrossEntropySoftmax requires a softmax head");
            return backward(m, fp, MatrixXd((out - targets) / b), true);
        case Loss::BernoulliBce:
            if (m.activations.back() != Activation::Sigmoid)
                throw std::invalid_argument("BernoulliBce requires a sigmoid head");
            return backward(m, fp, MatrixXd((out - targets) / b), true);
    }
    throw std::logic_error("backward_from_loss");
}

// ---------------------------------------------------------------------------
// Optimizers and training loop
// ---------------------------------------------------------------------------

struct TrainConfig {
    double lr = 1e-4;
    int batch = 100;
    int steps = 1000;
    Optimizer opt = Optimizer::Adam;
    std::uint64_t seed = 0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
};

class AdamState {
  public:
    explicit AdamState(const MlpModel& m) {
        for (int l = 0; l < m.num_layers(); ++l) {
            mw_.push_back(MatrixXd::Zero(m.weights[l].rows(), m.weights[l].cols()));
            vw_.push_back(MatrixXd::Zero(m.weights[l].rows(), m.weights[l].cols()));
            mb_.push_back(VectorXd::Zero(m.biases[l].size()));
            vb_.push_back(VectorXd::Zero(m.biases[l].size()));
        }
    }

    void step(MlpModel& m, const Gradients& g, const TrainConfig& cfg) {
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg.adam_beta1, t_);
        const double bc2 = 1.0 - std::pow(cfg.adam_beta2, t_);
        for (int l = 0; l < m.num_layers(); ++l) {
            mw_[l] = cfg.adam_beta1 * mw_[l] + (1.0 - cfg.adam_beta1) * g.dw[l];
            vw_[l] = cfg.adam_beta2 * vw_[l] +
                     (1.0 - cfg.adam_beta2) * g.dw[l].cwiseProduct(g.dw[l]);
            m.weights[l].array() -= cfg.lr * (mw_[l].array() / bc1) /
                                    ((vw_[l].array() / bc2).sqrt() + cfg.adam_eps);
            mb_[l] = cfg.adam_beta1 * mb_[l] + (1.0 - cfg.adam_beta1) * g.db[l];
            vb_[l] = cfg.adam_beta2 * vb_[l] +
                     (1.0 - cfg.adam_beta2) * g.db[l].cwiseProduct(g.db[l]);
            m.biases[l].array() -= cfg.lr * (mb_[l].array() / bc1) /
                                   ((vb_[l].array() / bc2).sqrt() + cfg.adam_eps);
        }
    }

  private:
    std::vector<MatrixXd> mw_, vw_;
    std::vector<VectorXd> mb_, vb_;
    int t_ = 0;
};

inline void sgd_step(MlpModel& m, const Gradients& g, double lr) {
    for (int l = 0; l < m.num_layers(); ++l) {
        m.weights[l] -= lr * g.dw[l];
        m.biases[l] -= lr * g.db[l];
    }
}

inline MatrixXd sample_batch(const MatrixXd& data, const std::vector<int>& idx) {
    MatrixXd out(data.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = data.col(idx[i]);
    return out;
}

// Mini-batch training; batches are sampled with replacement from the data.
// Returns the per-step training loss trace.
inline std::vector<double> train(MlpModel& m, const MatrixXd& x, const MatrixXd& y, Loss loss,
                                 const TrainConfig& cfg) {
    if (x.cols() != y.cols()) throw std::invalid_argument("train: x/y column mismatch");
    if (cfg.lr <= 0.0 || cfg.batch < 1 || cfg.steps < 0)
        throw std::invalid_argument("train: bad config");
    Rng rng(cfg.seed);
    AdamState adam(m);
    std::vector<double> trace;
    trace.reserve(cfg.steps);
    std::vector<int> idx(cfg.batch);
    for (int step = 0; step < cfg.steps; ++step) {
        for (auto& i : idx) i = static_cast<int>(rng.uniform_int(0, x.cols() - 1));
        const MatrixXd xb = sample_batch(x, idx);
        const MatrixXd yb = sample_batch(y, idx);
        const ForwardPass fp = forward(m, xb);
        const double l = loss_value(loss, fp.output(), yb);
        if (!std::isfinite(l)) throw TrainingDiverged(step);
        trace.push_back(l);
        const Gradients g = backward_from_loss(m, fp, loss, yb);
        if (cfg.opt == Optimizer::Adam)
            adam.step(m, g, cfg);
        else
            sgd_step(m, g, cfg.lr);
    }
    return trace;
}

// ---------------------------------------------------------------------------
// Misc heads
// ---------------------------------------------------------------------------

// h(t) = 0 for t <= 0.5, 1 otherwise; inputs must lie in [0,1].
inline std::vector<std::uint8_t> hard_threshold(const VectorXd& v) {
    std::vector<std::uint8_t> out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (v[i] < 0.0 || v[i] > 1.0)
            throw std::invalid_argument("hard_threshold: input outside [0,1]");
        out[i] = v[i] > 0.5 ? 1 : 0;
    }
    return out;
}

inline double classification_accuracy(const MatrixXd& probs, const std::vector<int>& labels) {
    if (static_cast<std::size_t>(probs.cols()) != labels.size())
        throw std::invalid_argument("classification_accuracy: size mismatch");
    int correct = 0;
    for (Eigen::Index c = 0; c < probs.cols(); ++c) {
        Eigen::Index arg;
        probs.col(c).maxCoeff(&arg);
        if (static_cast<int>(arg) == labels[c]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

// ---------------------------------------------------------------------------
// Checkpoints: [u32le header length][JSON header][f32le weight blob]
// Blob layout per layer: W row-major, then bias.
// ---------------------------------------------------------------------------

namespace detail {
inline void write_f32_blob(std::ostream& os, const MlpModel& m) {
    for (int l = 0; l < m.num_layers(); ++l) {
        for (Eigen::Index r = 0; r < m.weights[l].rows(); ++r)
            for (Eigen::Index c = 0; c < m.weights[l].cols(); ++c) {
                const float v = static_cast<float>(m.weights[l](r, c));
                os.write(reinterpret_cast<const char*>(&v), sizeof(float));
            }
        for (Eigen::Index r = 0; r < m.biases[l].size(); ++r) {
            const float v = static_cast<float>(m.biases[l][r]);
            os.write(reinterpret_cast<const char*>(&v), sizeof(float));
        }
    }
}

inline void read_f32_blob(std::istream& is, MlpModel& m) {
    auto rd = [&is]() {
        float v;
        is.read(reinterpret_cast<char*>(&v), sizeof(float));
        if (!is) throw std::runtime_error("checkpoint: truncated weight blob");
        return static_cast<double>(v);
    };
    for (int l = 0; l < m.num_layers(); ++l) {
        for (Eigen::Index r = 0; r < m.weights[l].rows(); ++r)
            for (Eigen::Index c = 0; c < m.weights[l].cols(); ++c) m.weights[l](r, c) = rd();
        for (Eigen::Index r = 0; r < m.biases[l].size(); ++r) m.biases[l][r] = rd();
    }
}

inline nlohmann::json mlp_header(const MlpModel& m) {
    std::vector<int> widths{m.input_dim()};
    std::vector<std::string> acts;
    for (int l = 0; l < m.num_layers(); ++l) {
        widths.push_back(static_cast<int>(m.weights[l].rows()));
        acts.push_back(activation_name(m.activations[l]));
    }
    return {{"format", "ncofdm-mlp"},
            {"schema_version", 1},
            {"widths", widths},
            {"activations", acts},
            {"has_optimizer_state", false}};
}

inline MlpModel mlp_from_header(const nlohmann::json& h) {
    const auto widths = h.at("widths").get<std::vector<int>>();
    const auto acts = h.at("activations").get<std::vector<std::string>>();
    MlpModel m;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        m.weights.push_back(MatrixXd::Zero(widths[l + 1], widths[l]));
        m.biases.push_back(VectorXd::Zero(widths[l + 1]));
        m.activations.push_back(activation_from_name(acts.at(l)));
    }
    return m;
}

inline void write_header_and_blob(std::ostream& os, const nlohmann::json& header,
                                  const MlpModel& m) {
    const std::string hs = header.dump();
    const std::uint32_t len = static_cast<std::uint32_t>(hs.size());
    os.write(reinterpret_cast<const char*>(&len), sizeof(len));
    os.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    write_f32_blob(os, m);
}

inline nlohmann::json read_header(std::istream& is) {
    std::uint32_t len = 0;
    is.read(reinterpret_cast<char*>(&len), sizeof(len));
    if (!is) throw std::runtime_error("checkpoint: missing header");
    std::string hs(len, '\0');
    is.read(hs.data(), len);
    if (!is) throw std::runtime_error("checkpoint: truncated header");
    return nlohmann::json::parse(hs);
}
}  // namespace detail

inline void save_mlp(const std::string& path, const MlpModel& m) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_mlp: cannot open " + path);
    detail::write_header_and_blob(os, detail::mlp_header(m), m);
}

inline MlpModel load_mlp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_mlp: cannot open " + path);
    const nlohmann::json h = detail::read_header(is);
    if (h.value("format", "") != "ncofdm-mlp")
        throw std::runtime_error("load_mlp: not an mlp checkpoint");
    MlpModel m = detail::mlp_from_header(h);
    detail::read_f32_blob(is, m);
    m.validate();
    return m;
}

}  // namespace ncofdm::nn
