#pragma once

#include <span>

#include "aalr/controller.hpp"

namespace aalr {

/// Flag form of one directive list, for hosts that apply LR and checkpoint
/// changes themselves. Order is implied: restore or reinitialize, then save,
/// then set `lr`, then train `train_epochs` (0 when `stop`).
struct CallbackDirective {
    double lr = 0.0;
    bool save_checkpoint = false;
    bool restore_checkpoint = false;
    bool reinitialize = false;
    bool stop = false;
    int train_epochs = 0;

    bool operator==(const CallbackDirective&) const = default;
};

/// `current_lr` is the LR in force before the directives; SetLr overrides it.
CallbackDirective project(std::span<const Directive> directives, double current_lr);

/// Controller wrapper exposing the one-method callback surface.
class CallbackController {
public:
    CallbackController(double initial_lr, int epochs, double initial_loss, BlockMode block = BlockMode::Patience);

    /// What to do before the first loss is reported.
    CallbackDirective start() const;

    /// Throws ProtocolError after stop.
    CallbackDirective observe(double loss);

    const ControllerState& state() const noexcept { return state_; }

private:
    ControllerState state_;
};

} // namespace aalr
