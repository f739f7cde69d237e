#include "aalr/model.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "aalr/errors.hpp"
#include "grad_check.hpp"

namespace aalr {
namespace {

TEST(Model, ParameterLayoutIsWeightThenBiasPerLayer) {
    Model m({3, 4, 2}, Activation::ReLU);
    EXPECT_EQ(m.parameter_count(), 3u * 4 + 4 + 4 * 2 + 2);
    EXPECT_EQ(m.weight_offset(0), 0u);
    EXPECT_EQ(m.bias_offset(0), 12u);
    EXPECT_EQ(m.weight_offset(1), 16u);
    EXPECT_EQ(m.bias_offset(1), 24u);
    m.weight(1)(1, 2) = 7.0;
    EXPECT_EQ(m.parameters()[16 + 1 * 4 + 2], 7.0);
}

TEST(Model, InitializeIsDeterministicAndBounded) {
    const Model a = Model::initialize({5, 8, 3}, Activation::ReLU, 11);
    const Model b = Model::initialize({5, 8, 3}, Activation::ReLU, 11);
    const Model c = Model::initialize({5, 8, 3}, Activation::ReLU, 12);
    EXPECT_TRUE(std::equal(a.parameters().begin(), a.parameters().end(), b.parameters().begin()));
    EXPECT_FALSE(std::equal(a.parameters().begin(), a.parameters().end(), c.parameters().begin()));
    EXPECT_LE(a.weight(0).cwiseAbs().maxCoeff(), std::sqrt(6.0 / 5.0));
    EXPECT_LE(a.weight(1).cwiseAbs().maxCoeff(), std::sqrt(6.0 / 8.0));
    EXPECT_EQ(a.bias(0).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Model, SetParametersChecksLength) {
    Model m({2, 2}, Activation::ReLU);
    const std::vector<double> wrong(5, 0.0);
    EXPECT_THROW(m.set_parameters(wrong), ShapeError);
}

TEST(Model, ZeroModelPredictsUniform) {
    const Model m({4, 3}, Activation::ReLU);
    Matrix x = Matrix::Random(5, 4);
    const std::vector<int> y{0, 1, 2, 0, 1};
    EXPECT_NEAR(forward_loss(m, {x, y}), std::log(3.0), 1e-15);
}

TEST(Model, HandComputedTwoTwoTwoReluNet) {
    Model m({2, 2, 2}, Activation::ReLU);
    // W0 = [[1,-1],[2,0.5]], b0 = [0, -1], W1 = [[1,0],[-1,1]], b1 = [0.5, 0]
    m.weight(0) << 1, -1, 2, 0.5;
    m.bias(0) << 0, -1;
    m.weight(1) << 1, 0, -1, 1;
    m.bias(1) << 0.5, 0;
    Matrix x(1, 2);
    x << 1, 2;
    // z0 = [1-2, 2+1-1] = [-1, 2]; h = [0, 2]; logits = [0.5, 2]
    const Matrix z = logits(m, x);
    EXPECT_DOUBLE_EQ(z(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(z(0, 1), 2.0);
    const std::vector<int> y0{0};
    const std::vector<int> y1{1};
    // -log softmax_0 = log(1 + e^{1.5}), -log softmax_1 = log(1 + e^{-1.5})
    EXPECT_NEAR(forward_loss(m, {x, y0}), std::log1p(std::exp(1.5)), 1e-14);
    EXPECT_NEAR(forward_loss(m, {x, y1}), std::log1p(std::exp(-1.5)), 1e-14);
}

TEST(Model, HandComputedGradientOfLinearModel) {
    Model m({1, 2}, Activation::ReLU);
    m.weight(0) << 1, -1;
    Matrix x(1, 1);
    x << 2;
    const std::vector<int> y{0};
    // logits [2,-2]; p0 = 1/(1+e^-4); dL/dz = [p0-1, 1-p0]
    const double p0 = 1.0 / (1.0 + std::exp(-4.0));
    const Gradient g = backward(m, {x, y});
    EXPECT_NEAR(g.parameters[0], 2 * (p0 - 1), 1e-14);
    EXPECT_NEAR(g.parameters[1], 2 * (1 - p0), 1e-14);
    EXPECT_NEAR(g.parameters[2], p0 - 1, 1e-14);
    EXPECT_NEAR(g.parameters[3], 1 - p0, 1e-14);
    EXPECT_NEAR(g.inputs(0, 0), (p0 - 1) * 1 + (1 - p0) * -1, 1e-14);
}

TEST(Model, SoftmaxRowsSumToOne) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const Model m = Model::initialize({6, 10, 4}, Activation::Tanh, rng());
        Matrix x = Matrix::Random(8, 6) * 5.0;
        const Matrix p = predict_proba(m, x);
        for (Eigen::Index i = 0; i < p.rows(); ++i) {
            EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-12);
            EXPECT_GE(p.row(i).minCoeff(), 0.0);
        }
    }
}

TEST(Model, ExtremeLogitsStayFinite) {
    Model m({1, 2}, Activation::ReLU);
    m.weight(0) << 800, -800;
    Matrix x(1, 1);
    x << 1;
    const std::vector<int> y{1};
    EXPECT_NEAR(forward_loss(m, {x, y}), 1600.0, 1e-9);
}

TEST(Model, NonFiniteParametersGiveNonFiniteLoss) {
    Model m = Model::initialize({2, 3, 2}, Activation::ReLU, 1);
    m.parameters()[0] = std::numeric_limits<double>::infinity();
    Matrix x(2, 2);
    x << 1, 1, 0.5, 0.2;
    const std::vector<int> y{0, 1};
    EXPECT_FALSE(std::isfinite(forward_loss(m, {x, y})));
    EXPECT_EQ(accuracy(m, {x, y}), 0.0);
}

TEST(Model, ShapeErrors) {
    const Model m({3, 2}, Activation::ReLU);
    Matrix x = Matrix::Zero(2, 4);
    const std::vector<int> y{0, 1};
    EXPECT_THROW(forward_loss(m, {x, y}), ShapeError);
    Matrix ok = Matrix::Zero(2, 3);
    const std::vector<int> bad{0, 2};
    EXPECT_THROW(forward_loss(m, {ok, bad}), ShapeError);
    Matrix empty(0, 3);
    EXPECT_THROW(forward_loss(m, {empty, std::span<const int>{}}), ShapeError);
}

TEST(Model, ActivationNames) {
    EXPECT_EQ(activation_from_string("relu"), Activation::ReLU);
    EXPECT_EQ(activation_from_string("tanh"), Activation::Tanh);
    EXPECT_EQ(to_string(Activation::Tanh), "tanh");
    EXPECT_THROW(activation_from_string("gelu"), ConfigError);
}

class GradientOracle : public ::testing::TestWithParam<Activation> {};

TEST_P(GradientOracle, BackpropMatchesCentralDifferences) {
    std::mt19937_64 rng(GetParam() == Activation::ReLU ? 101 : 202);
    for (int trial = 0; trial < 25; ++trial) {
        const auto pair = testing::random_pair(rng, GetParam());
        const auto err = testing::gradient_errors(pair);
        EXPECT_LE(err.parameters, 1e-4) << "trial " << trial;
        EXPECT_LE(err.inputs, 1e-4) << "trial " << trial;
    }
}

INSTANTIATE_TEST_SUITE_P(Activations, GradientOracle, ::testing::Values(Activation::ReLU, Activation::Tanh),
                         [](const auto& info) { return std::string(to_string(info.param)); });

} // namespace
} // namespace aalr
