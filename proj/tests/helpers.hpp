#pragma once

// Shared test utilities. The oracles here are deliberately written as direct,
// naive computations so they stay independent of the library code they check.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

#include "ncofdm/nn.hpp"
#include "ncofdm/rng.hpp"

namespace testing_oracles {

using cdouble = std::complex<double>;

// Naive normalized DFT: X_b = (1/n) sum_k x_k exp(-j 2 pi k b / n).
inline std::vector<cdouble> dft_oracle(const std::vector<cdouble>& x) {
    const std::size_t n = x.size();
    std::vector<cdouble> out(n, cdouble(0.0, 0.0));
    for (std::size_t b = 0; b < n; ++b) {
        cdouble acc(0.0, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            const double phi = -2.0 * std::numbers::pi * static_cast<double>(k * b) / n;
            acc += x[k] * cdouble(std::cos(phi), std::sin(phi));
        }
        out[b] = acc / static_cast<double>(n);
    }
    return out;
}

// Unbiased sample variance, the textbook route.
inline double sample_variance(const std::vector<double>& w) {
    double mean = 0.0;
    for (double v : w) mean += v;
    mean /= static_cast<double>(w.size());
    double acc = 0.0;
    for (double v : w) acc += (v - mean) * (v - mean);
    return acc / static_cast<double>(w.size() - 1);
}

// ---------------------------------------------------------------------------
// Finite-difference gradient checking
// ---------------------------------------------------------------------------

// Flat view over every parameter of an MLP.
inline std::vector<double*> parameter_view(ncofdm::nn::MlpModel& m) {
    std::vector<double*> view;
    for (int l = 0; l < m.num_layers(); ++l) {
        for (Eigen::Index i = 0; i < m.weights[l].size(); ++i) view.push_back(m.weights[l].data() + i);
        for (Eigen::Index i = 0; i < m.biases[l].size(); ++i) view.push_back(m.biases[l].data() + i);
    }
    return view;
}

inline std::vector<double> flatten_gradients(const ncofdm::nn::Gradients& g) {
    std::vector<double> flat;
    for (std::size_t l = 0; l < g.dw.size(); ++l) {
        for (Eigen::Index i = 0; i < g.dw[l].size(); ++i) flat.push_back(g.dw[l].data()[i]);
        for (Eigen::Index i = 0; i < g.db[l].size(); ++i) flat.push_back(g.db[l].data()[i]);
    }
    return flat;
}

// Central-difference check of `analytic` against `objective` over `n_coords`
// randomly chosen parameter coordinates. Returns the worst relative error.
inline double max_grad_rel_error(std::vector<double*> params, const std::vector<double>& analytic,
                                 const std::function<double()>& objective, int n_coords,
                                 ncofdm::Rng& rng, double h = 1e-4) {
    double worst = 0.0;
    for (int t = 0; t < n_coords; ++t) {
        const std::size_t i =
            static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(params.size()) - 1));
        const double saved = *params[i];
        *params[i] = saved + h;
        const double fp = objective();
        *params[i] = saved - h;
        const double fm = objective();
        *params[i] = saved;
        const double fd = (fp - fm) / (2.0 * h);
        const double denom = std::max(std::abs(fd), std::abs(analytic[i]));
        if (denom < 1e-8) continue;  // both effectively zero
        worst = std::max(worst, std::abs(fd - analytic[i]) / denom);
    }
    return worst;
}

}  // namespace testing_oracles
