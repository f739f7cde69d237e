#include "aalr/oracle_sim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "aalr/errors.hpp"

namespace aalr {
namespace {

bool is_power_of_two_ratio(double ratio) {
    int exp = 0;
    return std::frexp(ratio, &exp) == 0.5;
}

void require_power_of_two(int gamma, int minimum) {
    if (gamma < minimum || !std::has_single_bit(static_cast<unsigned>(gamma))) {
        throw DomainError("gamma must be a power of two >= " + std::to_string(minimum) + ", got " +
                          std::to_string(gamma));
    }
}

struct Block {
    int start;
    int end;
    double lr;
    int progress_after;
    bool complete;
};

} // namespace

OptSchedule::OptSchedule(std::vector<OptSegment> segments) : segments_(std::move(segments)) {
    for (const auto& s : segments_) {
        total_ += s.length;
        ends_.push_back(total_);
    }
}

OptSchedule OptSchedule::create(std::vector<OptSegment> segments, double min_spacing) {
    if (!(min_spacing >= 2.0)) {
        throw DomainError("segment spacing constant must be at least 2");
    }
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const auto& s = segments[i];
        if (!(s.lr > 0.0) || !std::isfinite(s.lr) || s.length < 1) {
            throw DomainError("segment " + std::to_string(i) + " needs a positive LR and length");
        }
        if (i == 0) {
            continue;
        }
        const double gamma = segments[i - 1].lr / s.lr;
        if (!is_power_of_two_ratio(gamma)) {
            throw DomainError("change factor into segment " + std::to_string(i) + " is not a power of two");
        }
        if (gamma > 1.0 && s.length < min_spacing * gamma) {
            throw DomainError("segment " + std::to_string(i) + " is shorter than " + std::to_string(min_spacing) +
                              " x its decrease factor");
        }
    }
    return OptSchedule(std::move(segments));
}

double OptSchedule::change_factor(std::size_t i) const {
    if (i + 1 >= segments_.size()) {
        throw DomainError("no change after the last segment");
    }
    return segments_[i].lr / segments_[i + 1].lr;
}

double OptSchedule::lr_at(int progress) const {
    if (segments_.empty()) {
        throw DomainError("empty schedule has no LR");
    }
    const auto it = std::upper_bound(ends_.begin(), ends_.end(), progress);
    if (it == ends_.end()) {
        return segments_.back().lr;
    }
    return segments_[static_cast<std::size_t>(it - ends_.begin())].lr;
}

int epochs_to_match_decrease(int gamma) {
    require_power_of_two(gamma, 2);
    const int n = 1 + std::countr_zero(static_cast<unsigned>(gamma));
    int total = 0;
    for (int i = 0; i < n; ++i) {
        total += 2 * ((1 << i) + 1);
    }
    return total;
}

int decrease_closed_form(int gamma) {
    require_power_of_two(gamma, 2);
    const int n = 1 + std::countr_zero(static_cast<unsigned>(gamma));
    return 2 * n + (1 << (n + 1)) - 1;
}

int epochs_to_match_increase(int gamma) {
    require_power_of_two(gamma, 1);
    return 2 * std::countr_zero(static_cast<unsigned>(gamma));
}

SimTrajectory simulate(const OptSchedule& schedule, const SimOptions& options) {
    SimTrajectory out;
    if (schedule.empty()) {
        return out;
    }
    const int total = schedule.total_epochs();
    out.opt_epochs = total;
    for (int q = 0; q < total; ++q) {
        out.opt_lrs.push_back({q, schedule.lr_at(q)});
    }

    // Phase 1 is assumed to have settled on rho_0; Phase 2 opens at twice that.
    ControllerState state;
    state.phase = Phase::OptimisticBinary;
    state.block = options.block;
    state.initial_lr = schedule.segments().front().lr;
    state.lr = 2.0 * state.initial_lr;
    state.patience = 1;
    state.best_loss = 0.0;
    state.epoch_budget = std::numeric_limits<int>::max();
    state.pending_epochs = block_length(state);

    std::mt19937_64 rng(options.seed);
    std::bernoulli_distribution flip(std::clamp(options.noise, 0.0, 1.0));

    std::vector<Block> blocks;
    int t = 0;
    int q = 0;
    while (q < total) {
        const int start = t;
        const int planned = state.pending_epochs;
        bool improved = false;
        for (int j = 0; j < planned && q < total; ++j) {
            const double rho = schedule.lr_at(q);
            out.aalr_lrs.push_back({t, state.lr});
            out.target_lrs.push_back(rho);
            out.progress.push_back(q);
            if (state.lr <= rho) {
                ++q;
                improved = true;
            }
            ++t;
        }
        blocks.push_back({start, t, state.lr, q, t - start == planned});
        if (q >= total) {
            break;
        }
        if (options.noise > 0.0 && flip(rng)) {
            improved = !improved;
        }
        const double loss = improved ? state.best_loss - 1.0 : state.best_loss + 1.0;
        state = observe_phase2(state, LossObservation(loss)).state;
    }
    out.aalr_epochs = t;

    // Catch-up per change, counted from the end of the block in which OPT's
    // progress crossed the change point. A decrease is caught up when a block
    // starts at or below the new rho; an increase when the first block at or
    // above the new rho completes.
    const auto& segs = schedule.segments();
    int boundary = 0;
    for (std::size_t i = 0; i + 1 < segs.size(); ++i) {
        boundary += segs[i].length;
        const double next = segs[i + 1].lr;
        std::optional<int> delay;
        const auto crossed = std::find_if(blocks.begin(), blocks.end(),
                                          [boundary](const Block& b) { return b.progress_after >= boundary; });
        if (crossed != blocks.end()) {
            const int changed_at = crossed->end;
            if (next == segs[i].lr) {
                delay = 0;
            }
            for (auto it = crossed + 1; it != blocks.end() && !delay; ++it) {
                if (next < segs[i].lr && it->lr <= next) {
                    delay = it->start - changed_at;
                } else if (next > segs[i].lr && it->lr >= next && it->complete) {
                    delay = it->end - changed_at;
                }
            }
        }
        out.catch_up_epochs.push_back(delay);
    }
    return out;
}

double delay_ratio(const SimTrajectory& trajectory) {
    if (trajectory.opt_epochs == 0) {
        throw DomainError("delay ratio of an empty trajectory");
    }
    return static_cast<double>(trajectory.aalr_epochs) / static_cast<double>(trajectory.opt_epochs);
}

void write_trajectory_csv(std::ostream& os, const SimTrajectory& trajectory) {
    os << "epoch,aalr_lr,opt_lr,progress\n";
    os.precision(17);
    for (std::size_t i = 0; i < trajectory.aalr_lrs.size(); ++i) {
        os << trajectory.aalr_lrs[i].epoch << ',' << trajectory.aalr_lrs[i].lr << ',' << trajectory.target_lrs[i]
           << ',' << trajectory.progress[i] << '\n';
    }
}

} // namespace aalr
