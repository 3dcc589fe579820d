#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "helpers.hpp"
#include "ncofdm/nn.hpp"
#include "ncofdm/rng.hpp"

using namespace ncofdm;
using namespace ncofdm::nn;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using testing_oracles::flatten_gradients;
using testing_oracles::max_grad_rel_error;
using testing_oracles::parameter_view;

namespace {

MatrixXd random_matrix(int r, int c, Rng& rng, double scale = 1.0) {
    MatrixXd m(r, c);
    for (int j = 0; j < c; ++j)
        for (int i = 0; i < r; ++i) m(i, j) = scale * rng.gaussian();
    return m;
}

MatrixXd one_hot(const std::vector<int>& labels, int classes) {
    MatrixXd y = MatrixXd::Zero(classes, static_cast<Eigen::Index>(labels.size()));
    for (std::size_t i = 0; i < labels.size(); ++i) y(labels[i], static_cast<Eigen::Index>(i)) = 1.0;
    return y;
}

}  // namespace

TEST_CASE("identity linear layer passes input through", "[nn]") {
    MlpModel m;
    m.weights.push_back(MatrixXd::Identity(4, 4));
    m.biases.push_back(VectorXd::Zero(4));
    m.activations.push_back(Activation::Linear);
    Rng rng(1);
    const MatrixXd x = random_matrix(4, 5, rng);
    REQUIRE((forward(m, x).output() - x).norm() == 0.0);
}

TEST_CASE("elementwise activations", "[nn]") {
    MatrixXd pre(2, 1);
    pre << -1.0, 2.0;
    MatrixXd post;
    nn::detail::apply_activation(Activation::Relu, pre, post);
    REQUIRE(post(0, 0) == 0.0);
    REQUIRE(post(1, 0) == 2.0);

    MatrixXd zero = MatrixXd::Zero(1, 1);
    nn::detail::apply_activation(Activation::Sigmoid, zero, post);
    REQUIRE(post(0, 0) == Catch::Approx(0.5));
}

TEST_CASE("forward rejects width mismatch", "[nn]") {
    Rng rng(2);
    auto m = make_mlp(6, {8}, 3, Activation::Linear, rng);
    REQUIRE_THROWS_AS(forward(m, MatrixXd::Zero(5, 2)), std::invalid_argument);
}

TEST_CASE("gradients match central finite differences for every loss head", "[nn][gradcheck]") {
    struct Config {
        Activation head;
        Loss loss;
        const char* name;
    };
    const std::vector<Config> configs{
        {Activation::Linear, Loss::SquaredError, "linear+l2"},
        {Activation::Sigmoid, Loss::SquaredError, "sigmoid+l2"},
        {Activation::Softmax, Loss::CrossEntropySoftmax, "softmax+ce"},
        {Activation::Sigmoid, Loss::BernoulliBce, "sigmoid+bce"},
    };
    for (const auto& cfg : configs) {
        INFO(cfg.name);
        Rng rng(101);
        auto m = make_mlp(5, {7, 6}, 3, cfg.head, rng);
        const MatrixXd x = random_matrix(5, 8, rng);
        MatrixXd y;
        if (cfg.loss == Loss::CrossEntropySoftmax) {
            std::vector<int> labels;
            for (int i = 0; i < 8; ++i) labels.push_back(static_cast<int>(rng.uniform_int(0, 2)));
            y = one_hot(labels, 3);
        } else if (cfg.loss == Loss::BernoulliBce) {
            y = MatrixXd::Zero(3, 8);
            for (int j = 0; j < 8; ++j)
                for (int i = 0; i < 3; ++i) y(i, j) = rng.bernoulli(0.5) ? 1.0 : 0.0;
        } else {
            y = random_matrix(3, 8, rng);
        }

        const auto fp = forward(m, x);
        const auto analytic = flatten_gradients(backward_from_loss(m, fp, cfg.loss, y));
        auto objective = [&]() { return loss_value(cfg.loss, forward(m, x).output(), y); };
        Rng coord_rng(7);
        const double err =
            max_grad_rel_error(parameter_view(m), analytic, objective, 100, coord_rng);
        REQUIRE(err < 1e-4);
    }
}

TEST_CASE("zero input and zero target give zero gradients", "[nn]") {
    Rng rng(3);
    auto m = make_mlp(4, {5}, 2, Activation::Linear, rng);
    m.activations[0] = Activation::Linear;
    const MatrixXd x = MatrixXd::Zero(4, 6);
    const MatrixXd y = MatrixXd::Zero(2, 6);
    const auto g = backward_from_loss(m, forward(m, x), Loss::SquaredError, y);
    for (const auto& dw : g.dw) REQUIRE(dw.norm() == 0.0);
    for (const auto& db : g.db) REQUIRE(db.norm() == 0.0);
}

TEST_CASE("softmax cross-entropy seed equals p minus t", "[nn]") {
    Rng rng(4);
    auto m = make_mlp(6, {}, 4, Activation::Softmax, rng);
    const MatrixXd x = random_matrix(6, 5, rng);
    const auto fp = forward(m, x);
    const MatrixXd y = one_hot({0, 1, 2, 3, 1}, 4);
    const auto g = backward_from_loss(m, fp, Loss::CrossEntropySoftmax, y);
    // db of the only layer is the row-sum of the pre-activation seed.
    const MatrixXd expected_seed = (fp.output() - y) / 5.0;
    REQUIRE((g.db[0] - expected_seed.rowwise().sum()).norm() < 1e-12);
}

TEST_CASE("training recovers a linear map", "[nn]") {
    Rng rng(5);
    const MatrixXd w_true = random_matrix(3, 6, rng);
    const MatrixXd x = random_matrix(6, 256, rng);
    const MatrixXd y = w_true * x;

    auto m = make_mlp(6, {}, 3, Activation::Linear, rng);
    TrainConfig coarse{.lr = 1e-2, .batch = 256, .steps = 1500, .opt = Optimizer::Adam, .seed = 11};
    train(m, x, y, Loss::SquaredError, coarse);
    TrainConfig fine{.lr = 2e-4, .batch = 256, .steps = 1500, .opt = Optimizer::Adam, .seed = 12};
    train(m, x, y, Loss::SquaredError, fine);

    // Closed-form least squares as the oracle.
    const MatrixXd w_ls =
        (x * x.transpose()).ldlt().solve(x * y.transpose()).transpose();
    REQUIRE((m.weights[0] - w_ls).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("xor separates with one hidden layer", "[nn]") {
    MatrixXd x(2, 4);
    x << -1, -1, 1, 1,
         -1, 1, -1, 1;
    MatrixXd y(1, 4);
    y << 0, 1, 1, 0;

    Rng rng(6);
    auto m = make_mlp(2, {8}, 1, Activation::Sigmoid, rng);
    TrainConfig cfg{.lr = 5e-2, .batch = 4, .steps = 2000, .opt = Optimizer::Adam, .seed = 21};
    train(m, x, y, Loss::BernoulliBce, cfg);
    const MatrixXd out = forward(m, x).output();
    for (int i = 0; i < 4; ++i) REQUIRE((out(0, i) > 0.5 ? 1.0 : 0.0) == y(0, i));
}

TEST_CASE("training is reproducible for a fixed seed", "[nn]") {
    Rng rng(8);
    const MatrixXd x = random_matrix(4, 64, rng);
    const MatrixXd y = random_matrix(2, 64, rng);
    Rng init_a(9), init_b(9);
    auto ma = make_mlp(4, {6}, 2, Activation::Linear, init_a);
    auto mb = make_mlp(4, {6}, 2, Activation::Linear, init_b);
    const TrainConfig cfg{.lr = 1e-3, .batch = 16, .steps = 200, .opt = Optimizer::Adam, .seed = 31};
    const auto ta = train(ma, x, y, Loss::SquaredError, cfg);
    const auto tb = train(mb, x, y, Loss::SquaredError, cfg);
    REQUIRE(ta == tb);
    for (int l = 0; l < ma.num_layers(); ++l) REQUIRE(ma.weights[l] == mb.weights[l]);
}

TEST_CASE("divergence reports the failing step", "[nn]") {
    Rng rng(10);
    const MatrixXd x = random_matrix(3, 32, rng, 10.0);
    const MatrixXd y = random_matrix(2, 32, rng, 10.0);
    auto m = make_mlp(3, {4}, 2, Activation::Linear, rng);
    TrainConfig cfg{.lr = 1e12, .batch = 8, .steps = 500, .opt = Optimizer::Sgd, .seed = 41};
    try {
        train(m, x, y, Loss::SquaredError, cfg);
        FAIL("expected divergence");
    } catch (const TrainingDiverged& e) {
        REQUIRE(e.step >= 0);
        REQUIRE(e.step < 500);
    }
}

TEST_CASE("hard threshold boundary behavior", "[nn]") {
    VectorXd v(3);
    v << 0.3, 0.7, 0.5;
    const auto h = hard_threshold(v);
    REQUIRE(h == std::vector<std::uint8_t>{0, 1, 0});
    VectorXd bad(1);
    bad << 1.2;
    REQUIRE_THROWS_AS(hard_threshold(bad), std::invalid_argument);
}

TEST_CASE("checkpoint round trip preserves f32 weights", "[nn]") {
    Rng rng(12);
    auto m = make_mlp(5, {7}, 2, Activation::Sigmoid, rng);
    const std::string path = "/tmp/ncofdm_test_mlp.ckpt";
    save_mlp(path, m);
    const auto loaded = load_mlp(path);
    REQUIRE(loaded.num_layers() == m.num_layers());
    REQUIRE(loaded.activations == m.activations);
    for (int l = 0; l < m.num_layers(); ++l)
        for (Eigen::Index i = 0; i < m.weights[l].size(); ++i)
            REQUIRE(loaded.weights[l].data()[i] ==
                    static_cast<double>(static_cast<float>(m.weights[l].data()[i])));

    // A second save of the loaded model is byte-identical.
    const std::string path2 = "/tmp/ncofdm_test_mlp2.ckpt";
    save_mlp(path2, loaded);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    REQUIRE(b1 == b2);
}
