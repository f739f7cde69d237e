#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "aalr/dataset.hpp"
#include "aalr/model.hpp"

namespace aalr {

struct SgdConfig {
    double momentum = 0.9;
    double weight_decay = 5e-4;
    int batch_size = 32;
    std::uint64_t seed = 0;

    /// Throws ConfigError unless momentum is in [0,1), weight decay >= 0 and batch_size >= 1.
    void validate() const;
};

/// Momentum buffers of the heavy-ball optimizer, one per parameter.
struct SgdState {
    std::vector<double> velocity;

    explicit SgdState(std::size_t parameters = 0) : velocity(parameters, 0.0) {}
    void reset() { std::fill(velocity.begin(), velocity.end(), 0.0); }
};

/// v <- momentum * v + g + weight_decay * w;  w <- w - lr * v
void sgd_step(Model& model, SgdState& state, std::span<const double> gradient, double lr, const SgdConfig& config);

/// Single-step l-infinity attack. alpha is carried for configuration parity;
/// the step taken is epsilon.
struct AttackConfig {
    bool enabled = false;
    double epsilon = 8.0 / 255.0;
    double alpha = 2.0 / 255.0;

    void validate() const;
};

/// x' = clip_[0,1](x + epsilon * sign(d loss / d x)). Labels are unchanged.
Matrix fgsm(const Model& model, BatchView batch, double epsilon);

/// Accuracy on FGSM-perturbed copies of the batch.
double adversarial_accuracy(const Model& model, BatchView batch, double epsilon);

struct EpochStats {
    double train_loss = 0.0;  // mean mini-batch loss during the epoch
    double eval_loss = 0.0;   // full-set loss after the epoch
    double train_acc = 0.0;   // full-set accuracy after the epoch
};

/// Counter-based permutation of [0, n) for (seed, epoch).
std::vector<std::size_t> epoch_permutation(std::size_t n, std::uint64_t seed, std::uint64_t epoch);

/// One shuffled pass in mini-batches. With the attack enabled each batch is
/// replaced by its FGSM counterpart before the gradient step. Non-finite
/// losses are reported, never clipped.
EpochStats train_epoch(Model& model, SgdState& state, const Dataset& data, double lr, const SgdConfig& config,
                       const AttackConfig& attack, std::uint64_t epoch);

} // namespace aalr
