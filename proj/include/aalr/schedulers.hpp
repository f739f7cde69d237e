#pragma once

#include <string_view>
#include <variant>
#include <vector>

namespace aalr {

/// Multiplies the base LR by gamma at every milestone epoch.
struct StepDecay {
    double initial_lr = 0.1;
    std::vector<int> milestones;
    double gamma = 0.1;
};

/// Cosine annealing with warm restarts: period i lasts period_0 * period_mult^i epochs.
struct CosineRestarts {
    double eta_max = 0.1;
    double eta_min = 0.0;
    int period_0 = 10;
    int period_mult = 2;
};

/// Triangular cyclical LR between the bounds; one half cycle rises, the next falls.
struct Cyclic {
    double eta_min = 0.001;
    double eta_max = 0.1;
    int half_cycle = 10;
};

using Schedule = std::variant<StepDecay, CosineRestarts, Cyclic>;

/// Throws ConfigError on invalid bounds, periods or milestones.
void validate(const Schedule& schedule);

/// LR for a zero-based epoch.
double lr_at(const Schedule& schedule, int epoch);

/// eta_min + (eta_max - eta_min) * (1 + cos(pi * t_cur / t_i)) / 2
double cosine_annealing(double eta_max, double eta_min, double t_cur, double t_i);

std::string_view schedule_name(const Schedule& schedule);

} // namespace aalr
