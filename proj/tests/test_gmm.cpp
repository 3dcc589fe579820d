#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include "ncofdm/gmm.hpp"
#include "ncofdm/rng.hpp"

using namespace ncofdm;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Two well-separated diagonal Gaussians with known parameters.
MatrixXd two_cluster_data(int per_cluster, Rng& rng) {
    MatrixXd x(3, 2 * per_cluster);
    for (int i = 0; i < per_cluster; ++i) {
        x.col(i) = Eigen::Vector3d(rng.gaussian(), rng.gaussian(), rng.gaussian());
        x.col(per_cluster + i) =
            Eigen::Vector3d(8.0, -6.0, 4.0) +
            0.5 * Eigen::Vector3d(rng.gaussian(), rng.gaussian(), rng.gaussian());
    }
    return x;
}

}  // namespace

TEST_CASE("em recovers two separated gaussians", "[gmm]") {
    Rng rng(5);
    const auto x = two_cluster_data(500, rng);
    const auto model = gmm::fit_em(x, 2, 50, 17);

    // Identify which component sits at the origin.
    const int c0 = model.means.col(0).norm() < model.means.col(1).norm() ? 0 : 1;
    const int c1 = 1 - c0;
    REQUIRE((model.means.col(c0) - Eigen::Vector3d(0, 0, 0)).norm() < 0.2);
    REQUIRE((model.means.col(c1) - Eigen::Vector3d(8, -6, 4)).norm() < 0.2);
    REQUIRE(model.weights[c0] == Catch::Approx(0.5).margin(0.05));

    const auto labels = gmm::assign(model, x);
    int correct = 0;
    for (int i = 0; i < 1000; ++i) correct += (labels[i] == (i < 500 ? c0 : c1)) ? 1 : 0;
    REQUIRE(correct == 1000);
}

TEST_CASE("em increases the likelihood", "[gmm]") {
    Rng rng(8);
    const auto x = two_cluster_data(200, rng);
    const auto early = gmm::fit_em(x, 2, 1, 3);
    const auto late = gmm::fit_em(x, 2, 30, 3);
    REQUIRE(gmm::log_likelihood(late, x) >= gmm::log_likelihood(early, x) - 1e-9);
}

TEST_CASE("em is deterministic for a seed", "[gmm]") {
    Rng rng(9);
    const auto x = two_cluster_data(100, rng);
    const auto a = gmm::fit_em(x, 2, 20, 4);
    const auto b = gmm::fit_em(x, 2, 20, 4);
    REQUIRE(a.means == b.means);
    REQUIRE(a.vars == b.vars);
}

TEST_CASE("em validates inputs", "[gmm]") {
    MatrixXd tiny = MatrixXd::Zero(2, 1);
    REQUIRE_THROWS_AS(gmm::fit_em(tiny, 2, 5, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(gmm::fit_em(tiny, 0, 5, 1), std::invalid_argument);
}
