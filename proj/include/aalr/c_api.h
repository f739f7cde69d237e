/* C ABI over the adaptive LR controller for foreign-language bindings. */
#ifndef AALR_C_API_H
#define AALR_C_API_H

#ifdef __cplusplus
extern "C" {
#endif

typedef struct aalr_controller aalr_controller;

typedef struct {
    double lr;
    int save_checkpoint;
    int restore_checkpoint;
    int reinitialize;
    int stop;
    int train_epochs;
} aalr_callback_directive;

enum {
    AALR_OK = 0,
    AALR_INITIALIZATION_ERROR = 1,
    AALR_PROTOCOL_ERROR = 2,
    AALR_INVALID_ARGUMENT = 3,
    AALR_INTERNAL_ERROR = 4
};

/* block_plus_one != 0 selects train blocks of p + 1 epochs. */
int aalr_controller_create(double initial_lr, int epochs, double initial_loss, int block_plus_one,
                           aalr_controller** out);
int aalr_controller_start(const aalr_controller* controller, aalr_callback_directive* out);
int aalr_controller_observe(aalr_controller* controller, double loss, aalr_callback_directive* out);
void aalr_controller_destroy(aalr_controller* controller);

/* Message for the last failing call on this thread; never NULL. */
const char* aalr_last_error(void);

#ifdef __cplusplus
}
#endif

#endif
