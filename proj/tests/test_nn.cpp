#include "drivemon/nn.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <vector>

#include "doctest.h"
#include "drivemon/rng.hpp"
#include "oracles.hpp"

using namespace drivemon;

namespace {

// Smallest pre-activation magnitude across hidden layers; gradient checks
// need the batch to sit away from the ReLU kink.
double min_abs_preact(const nn::MlpModel& model, const Matrix& X) {
    Matrix A = X;
    double best = 1e300;
    for (std::size_t l = 0; l + 1 < model.layers.size(); ++l) {
        Matrix Z = model.layers[l].W * A;
        Z.colwise() += model.layers[l].b;
        best = std::min(best, Z.cwiseAbs().minCoeff());
        A = Z.cwiseMax(0.0);
    }
    return best;
}

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double lo = -1.0,
                     double hi = 1.0) {
    Matrix m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.uniform(lo, hi);
    return m;
}

}  // namespace

TEST_CASE("architecture and parameter count") {
    const std::vector<int> hidden{16, 8};
    const auto m = nn::make_mlp(180, hidden, 1, nn::OutputActivation::identity, 1);
    CHECK(m.layers.size() == 3);
    CHECK(m.layers[0].W.rows() == 16);
    CHECK(m.layers[0].W.cols() == 180);
    CHECK(m.layers[1].W.rows() == 8);
    CHECK(m.layers[2].W.rows() == 1);
    CHECK(m.input_dim() == 180);
    CHECK(m.output_dim() == 1);
    // 181*16 + 17*8 + 9*1
    CHECK(m.parameter_count() == 3041);

    CHECK_THROWS_AS(nn::make_mlp(0, hidden, 1, nn::OutputActivation::identity, 1),
                    std::invalid_argument);
    const std::vector<int> bad{16, 0};
    CHECK_THROWS_AS(nn::make_mlp(10, bad, 1, nn::OutputActivation::identity, 1),
                    std::invalid_argument);
}

TEST_CASE("he-uniform initialization: bounds, zero biases, determinism") {
    const std::vector<int> hidden{16, 8};
    const auto a = nn::make_mlp(180, hidden, 1, nn::OutputActivation::identity, 7);
    const auto b = nn::make_mlp(180, hidden, 1, nn::OutputActivation::identity, 7);
    const auto c = nn::make_mlp(180, hidden, 1, nn::OutputActivation::identity, 8);

    int fan_in = 180;
    for (const auto& l : a.layers) {
        const double bound = std::sqrt(6.0 / fan_in);
        CHECK(l.W.cwiseAbs().maxCoeff() <= bound);
        CHECK(l.W.cwiseAbs().maxCoeff() > 0.0);
        CHECK(l.b.cwiseAbs().maxCoeff() == 0.0);
        fan_in = static_cast<int>(l.W.rows());
    }
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
        CHECK((a.layers[l].W.array() == b.layers[l].W.array()).all());
        CHECK(!(a.layers[l].W.array() == c.layers[l].W.array()).all());
    }
}

TEST_CASE("forward_batch equals per-sample forward") {
    const std::vector<int> hidden{6, 4};
    const auto m = nn::make_mlp(9, hidden, 1, nn::OutputActivation::identity, 3);
    Rng rng(11);
    const Matrix X = random_matrix(9, 5, rng);
    const Matrix A = nn::forward_batch(m, X);
    for (Eigen::Index i = 0; i < X.cols(); ++i) {
        const Vector single = nn::forward(m, X.col(i));
        CHECK(std::abs(A(0, i) - single(0)) <= 1e-14);
    }
    CHECK_THROWS_AS(nn::forward_batch(m, Matrix::Zero(4, 2)), std::invalid_argument);
}

TEST_CASE("logistic head outputs probabilities") {
    const std::vector<int> hidden{5};
    const auto m = nn::make_mlp(4, hidden, 1, nn::OutputActivation::logistic, 5);
    Rng rng(6);
    const Matrix X = random_matrix(4, 20, rng, -3.0, 3.0);
    const Matrix P = nn::forward_batch(m, X);
    CHECK(P.minCoeff() > 0.0);
    CHECK(P.maxCoeff() < 1.0);
}

TEST_CASE("analytic gradients match finite differences (identity/MSE)") {
    Rng rng(21);
    nn::MlpModel model;
    Matrix X, Y;
    // Redraw until the batch sits safely away from every ReLU kink.
    for (std::uint64_t attempt = 0;; ++attempt) {
        const std::vector<int> hidden{5, 4};
        model = nn::make_mlp(7, hidden, 1, nn::OutputActivation::identity, 100 + attempt);
        X = random_matrix(7, 3, rng);
        Y = random_matrix(1, 3, rng);
        if (min_abs_preact(model, X) > 1e-3) break;
        REQUIRE(attempt < 50);
    }

    const auto bw = nn::backward(model, X, Y);
    const auto loss_fn = [&] {
        const Matrix A = nn::forward_batch(model, X);
        return (A - Y).squaredNorm() / static_cast<double>(X.cols());
    };
    CHECK(bw.loss == doctest::Approx(loss_fn()).epsilon(1e-12));

    int checked = 0;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        auto& W = model.layers[l].W;
        auto& b = model.layers[l].b;
        for (int k = 0; k < 8; ++k) {
            const auto r = static_cast<Eigen::Index>(rng.next_u64() % W.rows());
            const auto c = static_cast<Eigen::Index>(rng.next_u64() % W.cols());
            const double num = oracles::numeric_grad(loss_fn, W(r, c), 1e-6);
            const double ana = bw.grads[l].W(r, c);
            CHECK(std::abs(num - ana) <= 1e-5 * std::max({1.0, std::abs(num), std::abs(ana)}));
            ++checked;
        }
        const auto r = static_cast<Eigen::Index>(rng.next_u64() % b.size());
        const double num = oracles::numeric_grad(loss_fn, b(r), 1e-6);
        CHECK(std::abs(num - bw.grads[l].b(r)) <= 1e-5);
        ++checked;
    }
    CHECK(checked >= 27);
}

TEST_CASE("analytic gradients match finite differences (logistic/BCE)") {
    Rng rng(33);
    const std::vector<int> hidden{5};
    auto model = nn::make_mlp(6, hidden, 1, nn::OutputActivation::logistic, 44);
    const Matrix X = random_matrix(6, 4, rng);
    Matrix Y(1, 4);
    Y << 1.0, 0.0, 1.0, 0.0;
    REQUIRE(min_abs_preact(model, X) > 1e-4);

    const auto bw = nn::backward(model, X, Y);
    const auto loss_fn = [&] {
        const Matrix P = nn::forward_batch(model, X);
        double total = 0.0;
        for (Eigen::Index i = 0; i < P.cols(); ++i) total += nn::loss_bce(Y(0, i), P(0, i));
        return total / static_cast<double>(P.cols());
    };
    CHECK(bw.loss == doctest::Approx(loss_fn()).epsilon(1e-12));

    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        for (int k = 0; k < 6; ++k) {
            auto& W = model.layers[l].W;
            const auto r = static_cast<Eigen::Index>(rng.next_u64() % W.rows());
            const auto c = static_cast<Eigen::Index>(rng.next_u64() % W.cols());
            const double num = oracles::numeric_grad(loss_fn, W(r, c), 1e-6);
            const double ana = bw.grads[l].W(r, c);
            CHECK(std::abs(num - ana) <= 1e-5 * std::max({1.0, std::abs(num), std::abs(ana)}));
        }
    }
}

TEST_CASE("backward_given_output_grad reproduces the MSE gradient") {
    Rng rng(55);
    const std::vector<int> hidden{5, 3};
    const auto model = nn::make_mlp(6, hidden, 1, nn::OutputActivation::identity, 66);
    const Matrix X = random_matrix(6, 4, rng);
    const Matrix Y = random_matrix(1, 4, rng);

    const auto bw = nn::backward(model, X, Y);
    const Matrix A = nn::forward_batch(model, X);
    const Matrix G = (2.0 / static_cast<double>(X.cols())) * (A - Y);
    const auto grads = nn::backward_given_output_grad(model, X, G);

    for (std::size_t l = 0; l < grads.size(); ++l) {
        CHECK((grads[l].W - bw.grads[l].W).cwiseAbs().maxCoeff() <= 1e-13);
        CHECK((grads[l].b - bw.grads[l].b).cwiseAbs().maxCoeff() <= 1e-13);
    }
}

TEST_CASE("sgd momentum matches the two-step recurrence by hand") {
    auto model = nn::make_mlp(1, {}, 1, nn::OutputActivation::identity, 1);
    model.layers[0].W(0, 0) = 0.3;
    auto opt = nn::make_sgd_momentum(model, 0.1, 0.9);

    const double x = 2.0, y = 1.0;
    Matrix X(1, 1), Y(1, 1);
    X << x;
    Y << y;

    // Scalar replica: g_w = 2(wx + b - y)x, g_b = 2(wx + b - y).
    double w = 0.3, b = 0.0, dw = 0.0, db = 0.0;
    for (int stepi = 0; stepi < 3; ++stepi) {
        const auto bw = nn::backward(model, X, Y);
        nn::sgd_momentum_step(model, opt, bw.grads);

        const double e = w * x + b - y;
        const double gw = 2.0 * e * x, gb = 2.0 * e;
        dw = -0.1 * gw + 0.9 * dw;
        db = -0.1 * gb + 0.9 * db;
        w += dw;
        b += db;

        CHECK(model.layers[0].W(0, 0) == doctest::Approx(w).epsilon(1e-15));
        CHECK(model.layers[0].b(0) == doctest::Approx(b).epsilon(1e-15));
    }
    CHECK(opt.step_count == 3);
}

TEST_CASE("adam matches a scalar reference with bias correction") {
    auto model = nn::make_mlp(1, {}, 1, nn::OutputActivation::identity, 1);
    model.layers[0].W(0, 0) = -0.4;
    auto opt = nn::make_adam(model, 0.05);

    const double x = 1.5, y = -2.0;
    Matrix X(1, 1), Y(1, 1);
    X << x;
    Y << y;

    double w = -0.4, b = 0.0;
    double mw = 0.0, vw = 0.0, mb = 0.0, vb = 0.0;
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8, eta = 0.05;
    for (int t = 1; t <= 4; ++t) {
        const auto bw = nn::backward(model, X, Y);
        nn::adam_step(model, opt, bw.grads);

        const double e = w * x + b - y;
        const double gw = 2.0 * e * x, gb = 2.0 * e;
        mw = b1 * mw + (1 - b1) * gw;
        vw = b2 * vw + (1 - b2) * gw * gw;
        mb = b1 * mb + (1 - b1) * gb;
        vb = b2 * vb + (1 - b2) * gb * gb;
        const double c1 = 1.0 - std::pow(b1, t), c2 = 1.0 - std::pow(b2, t);
        w -= eta * (mw / c1) / (std::sqrt(vw / c2) + eps);
        b -= eta * (mb / c1) / (std::sqrt(vb / c2) + eps);

        CHECK(model.layers[0].W(0, 0) == doctest::Approx(w).epsilon(1e-14));
        CHECK(model.layers[0].b(0) == doctest::Approx(b).epsilon(1e-14));
    }
}

TEST_CASE("checkpoint round trip is bit exact; corrupt files are rejected") {
    const std::vector<int> hidden{4, 3};
    auto model = nn::make_mlp(5, hidden, 1, nn::OutputActivation::identity, 77);
    auto opt = nn::make_sgd_momentum(model, 0.01, 0.9);
    Rng rng(8);
    const Matrix X = random_matrix(5, 6, rng);
    const Matrix Y = random_matrix(1, 6, rng);
    for (int i = 0; i < 3; ++i) {
        const auto bw = nn::backward(model, X, Y);
        nn::sgd_momentum_step(model, opt, bw.grads);
    }

    const auto path = (std::filesystem::temp_directory_path() / "drivemon_nn_ckpt.bin").string();
    nn::save_checkpoint(model, opt, path);
    const auto [m2, o2] = nn::load_checkpoint(path);

    REQUIRE(m2.layers.size() == model.layers.size());
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        CHECK((m2.layers[l].W.array() == model.layers[l].W.array()).all());
        CHECK((m2.layers[l].b.array() == model.layers[l].b.array()).all());
        CHECK((o2.prev_delta[l].W.array() == opt.prev_delta[l].W.array()).all());
    }
    CHECK(m2.output_activation == model.output_activation);
    CHECK(o2.step_count == opt.step_count);
    CHECK(o2.eta == opt.eta);

    // Truncate and expect a clean failure.
    const auto full = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, full / 2);
    CHECK_THROWS_AS(nn::load_checkpoint(path), std::runtime_error);
    CHECK_THROWS_AS(nn::load_checkpoint(path + ".does_not_exist"), std::runtime_error);
    std::filesystem::remove(path);
}

TEST_CASE("input validation") {
    const std::vector<int> hidden{3};
    const auto m = nn::make_mlp(4, hidden, 1, nn::OutputActivation::identity, 1);
    Matrix bad = Matrix::Zero(4, 2);
    bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(nn::forward_batch(m, bad), std::invalid_argument);
    CHECK_THROWS_AS(nn::backward(m, Matrix::Zero(4, 0), Matrix::Zero(1, 0)),
                    std::invalid_argument);
    CHECK_THROWS_AS(nn::backward(m, Matrix::Zero(4, 2), Matrix::Zero(1, 3)),
                    std::invalid_argument);
}
