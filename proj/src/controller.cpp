#include "aalr/controller.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "aalr/errors.hpp"
#include "aalr/log.hpp"

namespace aalr {
namespace {

// Below this fraction of the initial LR the controller warns but keeps halving.
const double kLrWarnFraction = std::ldexp(1.0, -30);

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void halve_lr(ControllerState& s) {
    const double floor = kLrWarnFraction * s.initial_lr;
    const bool above = s.lr >= floor;
    s.lr /= 2.0;
    if (above && s.lr < floor) {
        std::ostringstream msg;
        msg << "learning rate " << s.lr << " fell below 2^-30 of the initial rate at epoch " << s.epoch;
        log::warn(msg.str());
    }
}

// Appends the next train block, truncated at the budget, or Stop once the
// budget is spent.
void schedule_block(ControllerState& s, std::vector<Directive>& out, int length) {
    if (s.epoch >= s.epoch_budget) {
        s.stopped = true;
        s.pending_epochs = 0;
        out.emplace_back(Stop{});
        return;
    }
    const int count = std::min(length, s.epoch_budget - s.epoch);
    s.pending_epochs = count;
    out.emplace_back(TrainEpochs{count});
}

void check_observable(const ControllerState& s, Phase expected) {
    if (s.stopped) {
        throw ProtocolError("loss observed after the controller issued Stop");
    }
    if (s.phase != expected) {
        throw ProtocolError(expected == Phase::InitialExploration ? "observe_phase1 called outside phase 1"
                                                                  : "observe_phase2 called outside phase 2");
    }
}

} // namespace

std::string to_string(const Directive& d) {
    return std::visit(overloaded{
                          [](const SetLr& x) {
                              std::ostringstream os;
                              os << "SetLr(" << x.lr << ")";
                              return os.str();
                          },
                          [](const SaveCheckpoint&) { return std::string("SaveCheckpoint"); },
                          [](const RestoreCheckpoint&) { return std::string("RestoreCheckpoint"); },
                          [](const ReinitializeModel&) { return std::string("ReinitializeModel"); },
                          [](const TrainEpochs& x) { return "TrainEpochs(" + std::to_string(x.count) + ")"; },
                          [](const Stop&) { return std::string("Stop"); },
                      },
                      d);
}

std::ostream& operator<<(std::ostream& os, const Directive& d) { return os << to_string(d); }

ControllerState new_controller(double initial_lr, int epoch_budget, LossObservation initial_loss, BlockMode block) {
    if (!(initial_lr > 0.0) || !std::isfinite(initial_lr)) {
        throw ConfigError("initial learning rate must be positive and finite");
    }
    if (epoch_budget < 1) {
        throw ConfigError("epoch budget must be at least 1");
    }
    if (!initial_loss.finite()) {
        throw InitializationError("initial model produced a non-finite loss before training");
    }
    ControllerState s;
    s.phase = Phase::InitialExploration;
    s.block = block;
    s.initial_lr = initial_lr;
    s.lr = initial_lr;
    s.patience = kInitialPatience;
    s.patience_counter = 0;
    s.best_loss = initial_loss.value();
    s.epoch = 0;
    s.epoch_budget = epoch_budget;
    s.pending_epochs = 1;
    return s;
}

std::vector<Directive> start_directives(const ControllerState& state) {
    if (state.stopped) {
        return {Stop{}};
    }
    return {SetLr{state.lr}, TrainEpochs{state.pending_epochs}};
}

int block_length(const ControllerState& state) {
    if (state.phase == Phase::InitialExploration) {
        return 1;
    }
    return state.block == BlockMode::PatiencePlusOne ? state.patience + 1 : state.patience;
}

ControllerStep observe_phase1(ControllerState s, LossObservation loss) {
    check_observable(s, Phase::InitialExploration);
    s.epoch += s.pending_epochs;

    std::vector<Directive> out;
    if (!loss.finite() || loss.value() > s.best_loss) {
        // Reload the initial weights; the best loss is deliberately kept.
        halve_lr(s);
        s.patience_counter = 0;
        out.emplace_back(ReinitializeModel{});
        out.emplace_back(SetLr{s.lr});
        schedule_block(s, out, 1);
        return {s, std::move(out)};
    }

    s.best_loss = loss.value();
    ++s.patience_counter;
    if (s.patience_counter >= s.patience) {
        s.phase = Phase::OptimisticBinary;
        s.patience = 1;
        s.patience_counter = 0;
        s.second_try_pending = false;
        s.lr *= 2.0;
        out.emplace_back(SaveCheckpoint{});
        out.emplace_back(SetLr{s.lr});
        log::info("entering optimistic binary exploration at epoch " + std::to_string(s.epoch));
    }
    schedule_block(s, out, block_length(s));
    return {s, std::move(out)};
}

ControllerStep observe_phase2(ControllerState s, LossObservation loss) {
    check_observable(s, Phase::OptimisticBinary);
    s.epoch += s.pending_epochs;

    std::vector<Directive> out;
    if (!loss.finite()) {
        halve_lr(s);
        s.patience *= 2;
        s.second_try_pending = false;
        out.emplace_back(RestoreCheckpoint{});
        out.emplace_back(SetLr{s.lr});
    } else if (loss.value() < s.best_loss) {
        s.best_loss = loss.value();
        s.lr *= 2.0;
        s.patience = 1;
        s.second_try_pending = false;
        out.emplace_back(SaveCheckpoint{});
        out.emplace_back(SetLr{s.lr});
    } else if (!s.second_try_pending) {
        s.second_try_pending = true;
    } else {
        // Second stagnant block: lower the LR without restoring the model.
        halve_lr(s);
        s.patience *= 2;
        s.second_try_pending = false;
        out.emplace_back(SetLr{s.lr});
    }
    schedule_block(s, out, block_length(s));
    return {s, std::move(out)};
}

ControllerStep observe(const ControllerState& state, LossObservation loss) {
    if (state.stopped) {
        throw ProtocolError("loss observed after the controller issued Stop");
    }
    return state.phase == Phase::InitialExploration ? observe_phase1(state, loss) : observe_phase2(state, loss);
}

std::vector<LrPoint> lr_trajectory(std::span<const ControllerState> states) {
    if (states.empty()) {
        throw DomainError("lr_trajectory needs at least one controller state");
    }
    std::vector<LrPoint> out;
    for (const auto& s : states) {
        for (int i = 0; i < s.pending_epochs; ++i) {
            out.push_back({s.epoch + i, s.lr});
        }
    }
    return out;
}

} // namespace aalr
