#pragma once

// Diagonal-covariance Gaussian mixture fitted by expectation-maximization.
// Used for the two-way clustering step of spectrum sensing.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "ncofdm/rng.hpp"

namespace ncofdm::gmm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct DegenerateFit : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GmmModel {
    MatrixXd means;    // d x k
    MatrixXd vars;     // d x k, diagonal covariances
    VectorXd weights;  // k

    int components() const { return static_cast<int>(weights.size()); }
};

namespace detail {
// Log density of every sample under every component: k x n.
inline MatrixXd log_densities(const GmmModel& m, const MatrixXd& x) {
    const int k = m.components();
    const Eigen::Index n = x.cols();
    const Eigen::Index d = x.rows();
    MatrixXd out(k, n);
    for (int c = 0; c < k; ++c) {
        const VectorXd inv_var = m.vars.col(c).cwiseInverse();
        const double log_norm =
            -0.5 * (d * std::log(2.0 * std::numbers::pi) + m.vars.col(c).array().log().sum());
        for (Eigen::Index i = 0; i < n; ++i) {
            const VectorXd diff = x.col(i) - m.means.col(c);
            out(c, i) = log_norm - 0.5 * diff.cwiseProduct(diff).dot(inv_var);
        }
    }
    return out;
}
}  // namespace detail

// Mean log-likelihood per sample.
inline double log_likelihood(const GmmModel& m, const MatrixXd& x) {
    const MatrixXd ld = detail::log_densities(m, x);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < x.cols(); ++i) {
        Eigen::ArrayXd col = ld.col(i).array() + m.weights.array().log();
        const double mx = col.maxCoeff();
        acc += mx + std::log((col - mx).exp().sum());
    }
    return acc / static_cast<double>(x.cols());
}

// EM with a seeded random-point initialization and a variance floor.
// Throws DegenerateFit when a component collapses to (almost) zero weight.
inline GmmModel fit_em(const MatrixXd& x, int k, int iterations, std::uint64_t seed,
                       double var_floor = 1e-8) {
    if (k < 1) throw std::invalid_argument("fit_em: k must be >= 1");
    if (x.cols() < k) throw std::invalid_argument("fit_em: fewer samples than components");
    const Eigen::Index n = x.cols();
    const Eigen::Index d = x.rows();

    const VectorXd global_mean = x.rowwise().mean();
    VectorXd global_var = VectorXd::Zero(d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const VectorXd diff = x.col(i) - global_mean;
        global_var += diff.cwiseProduct(diff);
    }
    global_var = (global_var / static_cast<double>(n)).cwiseMax(var_floor);

    Rng rng(seed);
    GmmModel m;
    m.means.resize(d, k);
    m.vars.resize(d, k);
    m.weights = VectorXd::Constant(k, 1.0 / k);
    for (int c = 0; c < k; ++c) {
        m.means.col(c) = x.col(rng.uniform_int(0, n - 1));
        m.vars.col(c) = global_var;
    }

    MatrixXd resp(k, n);
    for (int it = 0; it < iterations; ++it) {
        // E step in the log domain.
        const MatrixXd ld = detail::log_densities(m, x);
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::ArrayXd col = ld.col(i).array() + m.weights.array().log();
            const double mx = col.maxCoeff();
            Eigen::ArrayXd e = (col - mx).exp();
            resp.col(i) = (e / e.sum()).matrix();
        }

        // M step.
        const VectorXd nk = resp.rowwise().sum();
        for (int c = 0; c < k; ++c) {
            if (nk[c] < 1e-6)
                throw DegenerateFit("fit_em: component " + std::to_string(c) + " collapsed");
            const VectorXd mean = (x * resp.row(c).transpose()) / nk[c];
            VectorXd var = VectorXd::Zero(d);
            for (Eigen::Index i = 0; i < n; ++i) {
                const VectorXd diff = x.col(i) - mean;
                var += resp(c, i) * diff.cwiseProduct(diff);
            }
            m.means.col(c) = mean;
            m.vars.col(c) = (var / nk[c]).cwiseMax(var_floor);
            m.weights[c] = nk[c] / static_cast<double>(n);
        }
    }
    return m;
}

inline std::vector<int> assign(const GmmModel& m, const MatrixXd& x) {
    const MatrixXd ld = detail::log_densities(m, x);
    std::vector<int> out(x.cols());
    for (Eigen::Index i = 0; i < x.cols(); ++i) {
        Eigen::Index arg;
        (ld.col(i).array() + m.weights.array().log()).maxCoeff(&arg);
        out[i] = static_cast<int>(arg);
    }
    return out;
}

}  // namespace ncofdm::gmm
