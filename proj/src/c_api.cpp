#include "aalr/c_api.h"

#include <exception>
#include <string>

#include "aalr/callback.hpp"
#include "aalr/errors.hpp"

struct aalr_controller {
    aalr::CallbackController inner;
};

namespace {

thread_local std::string last_error;

void fill(const aalr::CallbackDirective& d, aalr_callback_directive* out) {
    out->lr = d.lr;
    out->save_checkpoint = d.save_checkpoint;
    out->restore_checkpoint = d.restore_checkpoint;
    out->reinitialize = d.reinitialize;
    out->stop = d.stop;
    out->train_epochs = d.train_epochs;
}

template <class F>
int guarded(F&& f) {
    try {
        f();
        last_error.clear();
        return AALR_OK;
    } catch (const aalr::InitializationError& e) {
        last_error = e.what();
        return AALR_INITIALIZATION_ERROR;
    } catch (const aalr::ProtocolError& e) {
        last_error = e.what();
        return AALR_PROTOCOL_ERROR;
    } catch (const aalr::ConfigError& e) {
        last_error = e.what();
        return AALR_INVALID_ARGUMENT;
    } catch (const std::exception& e) {
        last_error = e.what();
        return AALR_INTERNAL_ERROR;
    }
}

} // namespace

extern "C" {

int aalr_controller_create(double initial_lr, int epochs, double initial_loss, int block_plus_one,
                           aalr_controller** out) {
    if (out == nullptr) {
        last_error = "null output pointer";
        return AALR_INVALID_ARGUMENT;
    }
    *out = nullptr;
    return guarded([&] {
        const auto block = block_plus_one != 0 ? aalr::BlockMode::PatiencePlusOne : aalr::BlockMode::Patience;
        *out = new aalr_controller{aalr::CallbackController(initial_lr, epochs, initial_loss, block)};
    });
}

int aalr_controller_start(const aalr_controller* controller, aalr_callback_directive* out) {
    if (controller == nullptr || out == nullptr) {
        last_error = "null argument";
        return AALR_INVALID_ARGUMENT;
    }
    return guarded([&] { fill(controller->inner.start(), out); });
}

int aalr_controller_observe(aalr_controller* controller, double loss, aalr_callback_directive* out) {
    if (controller == nullptr || out == nullptr) {
        last_error = "null argument";
        return AALR_INVALID_ARGUMENT;
    }
    return guarded([&] { fill(controller->inner.observe(loss), out); });
}

void aalr_controller_destroy(aalr_controller* controller) { delete controller; }

const char* aalr_last_error(void) { return last_error.c_str(); }

} // extern "C"
