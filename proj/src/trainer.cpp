#include "aalr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "aalr/errors.hpp"

namespace aalr {

void SgdConfig::validate() const {
    if (!(momentum >= 0.0 && momentum < 1.0)) {
        throw ConfigError("momentum must lie in [0, 1)");
    }
    if (!(weight_decay >= 0.0)) {
        throw ConfigError("weight decay must be non-negative");
    }
    if (batch_size < 1) {
        throw ConfigError("batch size must be at least 1");
    }
}

void AttackConfig::validate() const {
    if (!enabled) {
        return;
    }
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw ConfigError("attack epsilon must lie in (0, 1)");
    }
    if (!(alpha > 0.0 && alpha <= epsilon)) {
        throw ConfigError("attack alpha must lie in (0, epsilon]");
    }
}

void sgd_step(Model& model, SgdState& state, std::span<const double> gradient, double lr, const SgdConfig& config) {
    auto w = model.parameters();
    if (gradient.size() != w.size()) {
        throw ShapeError("gradient length does not match the model");
    }
    if (state.velocity.size() != w.size()) {
        state.velocity.assign(w.size(), 0.0);
    }
    auto& v = state.velocity;
    for (std::size_t i = 0; i < w.size(); ++i) {
        v[i] = config.momentum * v[i] + gradient[i] + config.weight_decay * w[i];
        w[i] -= lr * v[i];
    }
}

Matrix fgsm(const Model& model, BatchView batch, double epsilon) {
    const Gradient g = backward(model, batch);
    Matrix out = batch.inputs;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        for (Eigen::Index j = 0; j < out.cols(); ++j) {
            const double d = g.inputs(i, j);
            const double sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
            out(i, j) = std::clamp(out(i, j) + epsilon * sign, 0.0, 1.0);
        }
    }
    return out;
}

double adversarial_accuracy(const Model& model, BatchView batch, double epsilon) {
    const Matrix perturbed = fgsm(model, batch, epsilon);
    return accuracy(model, {perturbed, batch.labels});
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

} // namespace

std::vector<std::size_t> epoch_permutation(std::size_t n, std::uint64_t seed, std::uint64_t epoch) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    const std::uint64_t key = splitmix64(splitmix64(seed) ^ epoch);
    for (std::size_t i = n; i > 1; --i) {
        const std::uint64_t r = splitmix64(key + i);
        const auto j = static_cast<std::size_t>((static_cast<unsigned __int128>(r) * i) >> 64);
        std::swap(perm[i - 1], perm[j]);
    }
    return perm;
}

EpochStats train_epoch(Model& model, SgdState& state, const Dataset& data, double lr, const SgdConfig& config,
                       const AttackConfig& attack, std::uint64_t epoch) {
    config.validate();
    if (data.size() == 0) {
        throw DomainError("cannot train on an empty dataset");
    }
    const auto perm = epoch_permutation(data.size(), config.seed, epoch);
    const auto batch = static_cast<std::size_t>(config.batch_size);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < perm.size(); start += batch) {
        const std::size_t end = std::min(perm.size(), start + batch);
        Dataset mb = data.gather(std::span(perm).subspan(start, end - start));
        if (attack.enabled) {
            mb.inputs = fgsm(model, mb.view(), attack.epsilon);
        }
        const Gradient g = backward(model, mb.view());
        loss_sum += g.loss * static_cast<double>(end - start);
        sgd_step(model, state, g.parameters, lr, config);
    }

    EpochStats stats;
    stats.train_loss = loss_sum / static_cast<double>(data.size());
    stats.eval_loss = forward_loss(model, data.view());
    stats.train_acc = accuracy(model, data.view());
    return stats;
}

} // namespace aalr
