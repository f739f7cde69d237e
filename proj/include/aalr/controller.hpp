#pragma once

#include <cmath>
#include <ostream>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace aalr {

/*
 * Automated adaptive learning-rate controller.
 *
 * The controller is a pure state machine. The training harness reports one
 * loss per completed train block and receives an ordered list of directives
 * (set LR, save/restore checkpoint, reinitialize, train k epochs, stop). It
 * never touches model weights itself.
 *
 * Phase 1 (initial exploration) trains one epoch at a time from the initial
 * LR and halves the LR, reloading the initial weights, whenever the loss gets
 * worse. Ten consecutive non-worsening epochs end the phase.
 *
 * Phase 2 (optimistic binary exploration) doubles the LR on every strict
 * improvement and resets patience to 1. A stagnant block earns one retry at
 * the same LR; a second stagnant block halves the LR and doubles patience.
 * Non-finite losses restore the best checkpoint and halve the LR.
 */

enum class Phase { InitialExploration, OptimisticBinary };

/// Length of a Phase 2 train block: `p` epochs, or `p + 1` epochs.
enum class BlockMode { Patience, PatiencePlusOne };

inline constexpr int kInitialPatience = 10;

/// One loss reading. NaN and +-infinity are representable and mean divergence.
class LossObservation {
public:
    constexpr explicit LossObservation(double value) noexcept : value_(value) {}

    constexpr double value() const noexcept { return value_; }
    bool finite() const noexcept { return std::isfinite(value_); }

private:
    double value_;
};

struct SetLr {
    double lr;
    bool operator==(const SetLr&) const = default;
};
struct SaveCheckpoint {
    bool operator==(const SaveCheckpoint&) const = default;
};
struct RestoreCheckpoint {
    bool operator==(const RestoreCheckpoint&) const = default;
};
struct ReinitializeModel {
    bool operator==(const ReinitializeModel&) const = default;
};
struct TrainEpochs {
    int count;
    bool operator==(const TrainEpochs&) const = default;
};
struct Stop {
    bool operator==(const Stop&) const = default;
};

using Directive = std::variant<SetLr, SaveCheckpoint, RestoreCheckpoint, ReinitializeModel, TrainEpochs, Stop>;

std::string to_string(const Directive& d);
std::ostream& operator<<(std::ostream& os, const Directive& d);

struct ControllerState {
    Phase phase = Phase::InitialExploration;
    BlockMode block = BlockMode::Patience;
    double initial_lr = 0.1;
    double lr = 0.1;
    int patience = kInitialPatience;
    int patience_counter = 0;
    double best_loss = 0.0;
    int epoch = 0;
    int epoch_budget = 1;
    // Phase 2 trained one stagnant block and is running the retry block.
    bool second_try_pending = false;
    // Length of the train block currently directed; 0 once stopped.
    int pending_epochs = 1;
    bool stopped = false;

    bool operator==(const ControllerState&) const = default;
};

struct ControllerStep {
    ControllerState state;
    std::vector<Directive> directives;
};

/// Throws InitializationError on a non-finite initial loss, ConfigError on a
/// non-positive LR or budget.
ControllerState new_controller(double initial_lr, int epoch_budget, LossObservation initial_loss,
                               BlockMode block = BlockMode::Patience);

/// Directives that start a run: [SetLr(initial), TrainEpochs(1)].
std::vector<Directive> start_directives(const ControllerState& state);

ControllerStep observe_phase1(ControllerState state, LossObservation loss);
ControllerStep observe_phase2(ControllerState state, LossObservation loss);

/// Dispatches on the current phase. Throws ProtocolError after Stop.
ControllerStep observe(const ControllerState& state, LossObservation loss);

/// Train-block length Phase 2 uses for the state's current patience.
int block_length(const ControllerState& state);

struct LrPoint {
    int epoch;
    double lr;
    bool operator==(const LrPoint&) const = default;
};

/// Expands a sequence of controller states into one (epoch, lr) pair per
/// directed training epoch. Throws DomainError on an empty sequence.
std::vector<LrPoint> lr_trajectory(std::span<const ControllerState> states);

} // namespace aalr
