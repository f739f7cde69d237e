#include "aalr/callback.hpp"

#include <variant>

namespace aalr {

CallbackDirective project(std::span<const Directive> directives, double current_lr) {
    CallbackDirective out;
    out.lr = current_lr;
    for (const auto& d : directives) {
        if (const auto* set = std::get_if<SetLr>(&d)) {
            out.lr = set->lr;
        } else if (std::holds_alternative<SaveCheckpoint>(d)) {
            out.save_checkpoint = true;
        } else if (std::holds_alternative<RestoreCheckpoint>(d)) {
            out.restore_checkpoint = true;
        } else if (std::holds_alternative<ReinitializeModel>(d)) {
            out.reinitialize = true;
        } else if (const auto* train = std::get_if<TrainEpochs>(&d)) {
            out.train_epochs += train->count;
        } else if (std::holds_alternative<Stop>(d)) {
            out.stop = true;
        }
    }
    return out;
}

CallbackController::CallbackController(double initial_lr, int epochs, double initial_loss, BlockMode block)
    : state_(new_controller(initial_lr, epochs, LossObservation(initial_loss), block)) {}

CallbackDirective CallbackController::start() const {
    const auto directives = start_directives(state_);
    return project(directives, state_.lr);
}

CallbackDirective CallbackController::observe(double loss) {
    const double before = state_.lr;
    auto step = aalr::observe(state_, LossObservation(loss));
    state_ = step.state;
    return project(step.directives, before);
}

} // namespace aalr
