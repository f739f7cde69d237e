#include "aalr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "aalr/errors.hpp"

namespace aalr {
namespace {

TEST(Sgd, HeavyBallClosedForm) {
    Model m({1, 2}, Activation::ReLU);  // 4 parameters
    const std::vector<double> w0{1.0, -2.0, 0.5, 0.0};
    m.set_parameters(w0);
    SgdState s(4);
    SgdConfig cfg;
    cfg.momentum = 0.9;
    cfg.weight_decay = 0.1;
    const std::vector<double> g{0.2, 0.4, -1.0, 3.0};
    const double lr = 0.5;

    sgd_step(m, s, g, lr, cfg);
    sgd_step(m, s, g, lr, cfg);
    for (std::size_t i = 0; i < 4; ++i) {
        const double v1 = g[i] + 0.1 * w0[i];
        const double w1 = w0[i] - lr * v1;
        const double v2 = 0.9 * v1 + g[i] + 0.1 * w1;
        const double w2 = w1 - lr * v2;
        EXPECT_DOUBLE_EQ(s.velocity[i], v2);
        EXPECT_DOUBLE_EQ(m.parameters()[i], w2);
    }
}

TEST(Sgd, ResetZeroesMomentum) {
    SgdState s(3);
    s.velocity = {1, 2, 3};
    s.reset();
    EXPECT_EQ(s.velocity, (std::vector<double>{0, 0, 0}));
}

TEST(Sgd, GradientLengthMismatch) {
    Model m({1, 2}, Activation::ReLU);
    SgdState s(4);
    const std::vector<double> g(3, 0.0);
    EXPECT_THROW(sgd_step(m, s, g, 0.1, {}), ShapeError);
}

TEST(Sgd, ConfigValidation) {
    SgdConfig c;
    EXPECT_NO_THROW(c.validate());
    c.momentum = 1.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.batch_size = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.weight_decay = -1;
    EXPECT_THROW(c.validate(), ConfigError);

    AttackConfig a;
    a.enabled = true;
    EXPECT_NO_THROW(a.validate());
    a.alpha = 2 * a.epsilon;
    EXPECT_THROW(a.validate(), ConfigError);
    a = {};
    a.enabled = true;
    a.epsilon = 1.5;
    EXPECT_THROW(a.validate(), ConfigError);
}

TEST(Permutation, IsDeterministicPermutationVaryingByEpoch) {
    const auto a = epoch_permutation(100, 5, 0);
    const auto b = epoch_permutation(100, 5, 0);
    const auto c = epoch_permutation(100, 5, 1);
    const auto d = epoch_permutation(100, 6, 0);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
    EXPECT_NE(a, d);
    auto sorted = a;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        EXPECT_EQ(sorted[i], i);
    }
}

TEST(TrainEpoch, ZeroLearningRateLeavesModelUnchanged) {
    const Dataset d = make_synthetic(SyntheticKind::Moons, 50, 1);
    Model m = Model::initialize({2, 8, 2}, Activation::ReLU, 3);
    const std::vector<double> before(m.parameters().begin(), m.parameters().end());
    SgdState s(m.parameter_count());
    const EpochStats st = train_epoch(m, s, d, 0.0, {}, {}, 0);
    EXPECT_TRUE(std::equal(before.begin(), before.end(), m.parameters().begin()));
    EXPECT_DOUBLE_EQ(st.eval_loss, forward_loss(m, d.view()));
}

TEST(TrainEpoch, MatchesManualMiniBatchLoopIncludingPartialBatch) {
    const Dataset d = make_synthetic(SyntheticKind::Blobs, 10, 2);
    SgdConfig cfg;
    cfg.batch_size = 4;
    cfg.seed = 17;
    Model a = Model::initialize({2, 3, 2}, Activation::Tanh, 4);
    Model b = a;
    SgdState sa(a.parameter_count()), sb(b.parameter_count());

    const EpochStats st = train_epoch(a, sa, d, 0.1, cfg, {}, 3);

    const auto perm = epoch_permutation(10, 17, 3);
    double weighted = 0.0;
    for (std::size_t start : {0u, 4u, 8u}) {
        const std::size_t len = std::min<std::size_t>(4, 10 - start);
        const Dataset mb = d.gather(std::span(perm).subspan(start, len));
        const Gradient g = backward(b, mb.view());
        weighted += g.loss * static_cast<double>(len);
        sgd_step(b, sb, g.parameters, 0.1, cfg);
    }
    EXPECT_TRUE(std::equal(a.parameters().begin(), a.parameters().end(), b.parameters().begin()));
    EXPECT_DOUBLE_EQ(st.train_loss, weighted / 10.0);
    EXPECT_DOUBLE_EQ(st.train_acc, accuracy(b, d.view()));
}

TEST(TrainEpoch, DivergenceIsReportedNotClipped) {
    const Dataset d = make_synthetic(SyntheticKind::Moons, 64, 1);
    Model m = Model::initialize({2, 16, 16, 2}, Activation::ReLU, 3);
    SgdState s(m.parameter_count());
    bool non_finite = false;
    for (int e = 0; e < 5 && !non_finite; ++e) {
        non_finite = !std::isfinite(train_epoch(m, s, d, 1e12, {}, {}, e).eval_loss);
    }
    EXPECT_TRUE(non_finite);
}

TEST(TrainEpoch, TwoBlobsReachNearPerfectAccuracy) {
    const Dataset d = make_synthetic(SyntheticKind::Blobs, 400, 8);
    Model m = Model::initialize({2, 2}, Activation::ReLU, 1);
    SgdState s(m.parameter_count());
    EpochStats st;
    for (int e = 0; e < 20; ++e) {
        st = train_epoch(m, s, d, 0.1, {}, {}, e);
    }
    EXPECT_GE(st.train_acc, 0.99);
}

// Two classes, one feature, logits [0, x]: d loss/dx = sigmoid(x) - [y == 1].
TEST(Fgsm, OneDimensionalLogisticClosedForm) {
    Model m({1, 2}, Activation::ReLU);
    m.weight(0) << 0, 1;
    Matrix x(4, 1);
    x << 0.5, 0.5, 0.98, 0.01;
    const std::vector<int> y{0, 1, 0, 1};
    const Matrix adv = fgsm(m, {x, y}, 0.05);
    EXPECT_DOUBLE_EQ(adv(0, 0), 0.55);  // label 0: push x up
    EXPECT_DOUBLE_EQ(adv(1, 0), 0.45);  // label 1: push x down
    EXPECT_DOUBLE_EQ(adv(2, 0), 1.0);   // clipped
    EXPECT_DOUBLE_EQ(adv(3, 0), 0.0);   // clipped
}

TEST(Fgsm, ZeroGradientLeavesInputInPlace) {
    const Model m({3, 2}, Activation::ReLU);  // all-zero weights
    Matrix x = Matrix::Constant(2, 3, 0.3);
    const std::vector<int> y{0, 1};
    EXPECT_EQ(fgsm(m, {x, y}, 0.1), x);
}

TEST(Fgsm, BoundsHoldForRandomModels) {
    std::mt19937_64 rng(44);
    std::uniform_real_distribution<double> unit(0.0, 1.0), eps(0.001, 0.5);
    int samples = 0;
    while (samples < 2000) {
        const Model m = Model::initialize({4, 6, 3}, Activation::ReLU, rng());
        Matrix x(50, 4);
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            x.data()[i] = unit(rng);
        }
        std::vector<int> y(50);
        for (auto& v : y) {
            v = static_cast<int>(rng() % 3);
        }
        const double e = eps(rng);
        const Matrix adv = fgsm(m, {x, y}, e);
        EXPECT_LE((adv - x).cwiseAbs().maxCoeff(), e + 1e-15);
        EXPECT_GE(adv.minCoeff(), 0.0);
        EXPECT_LE(adv.maxCoeff(), 1.0);
        samples += 50;
    }
}

TEST(Fgsm, AttackLowersAccuracyOfNaturalModel) {
    const Dataset d = make_synthetic(SyntheticKind::Moons, 300, 5);
    Model m = Model::initialize({2, 16, 2}, Activation::ReLU, 2);
    SgdState s(m.parameter_count());
    for (int e = 0; e < 30; ++e) {
        train_epoch(m, s, d, 0.1, {}, {}, e);
    }
    EXPECT_LT(adversarial_accuracy(m, d.view(), 0.1), accuracy(m, d.view()));
}

} // namespace
} // namespace aalr
