#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "aalr/controller.hpp"

namespace aalr {

/*
 * Delay analysis of the controller against an oracle optimizer ("OPT") that
 * always trains at the highest stable LR.
 *
 * OPT's schedule is piecewise constant and indexed by training progress: an
 * AALR epoch at LR eta makes one epoch of OPT-equivalent progress iff
 * eta <= rho, where rho is OPT's LR at the current progress. A train block
 * improves the loss iff it made any progress. The Phase 2 state machine from
 * controller.hpp is driven by that signal.
 */

struct OptSegment {
    double lr;   // rho
    int length;  // Delta, epochs
};

class OptSchedule {
public:
    /// Validates: positive LRs and lengths; consecutive LRs differ by a power
    /// of two; a decrease by gamma is followed by a segment of at least
    /// min_spacing * gamma epochs (min_spacing >= 2). Throws DomainError.
    static OptSchedule create(std::vector<OptSegment> segments, double min_spacing = 2.0);

    const std::vector<OptSegment>& segments() const noexcept { return segments_; }
    bool empty() const noexcept { return segments_.empty(); }

    /// rho_i / rho_{i+1}; > 1 for a decrease.
    double change_factor(std::size_t i) const;

    int total_epochs() const noexcept { return total_; }

    /// OPT's LR after `progress` epochs of training. Past the end, the last LR.
    double lr_at(int progress) const;

private:
    explicit OptSchedule(std::vector<OptSegment> segments);

    std::vector<OptSegment> segments_;
    std::vector<int> ends_;
    int total_ = 0;
};

struct SimOptions {
    BlockMode block = BlockMode::PatiencePlusOne;
    // Probability of flipping the improvement signal after a block.
    double noise = 0.0;
    std::uint64_t seed = 0;
};

struct SimTrajectory {
    std::vector<LrPoint> aalr_lrs;  // one per AALR epoch
    std::vector<LrPoint> opt_lrs;   // one per OPT epoch, on OPT's own clock
    std::vector<double> target_lrs; // OPT's rho at AALR's progress, per AALR epoch
    std::vector<int> progress;      // OPT-equivalent epochs completed before each AALR epoch
    // One entry per schedule change; empty when AALR never caught up.
    std::vector<std::optional<int>> catch_up_epochs;
    int aalr_epochs = 0;
    int opt_epochs = 0;
};

/// sum_{i=0}^{n-1} 2 (2^i + 1) with n = 1 + log2(gamma), summed term by term.
/// gamma >= 2 and a power of two, else DomainError.
int epochs_to_match_decrease(int gamma);

/// 2 n + 2^(n+1) - 1, the commonly quoted closed form of the same sum. It
/// exceeds the summation by exactly one.
int decrease_closed_form(int gamma);

/// 2 log2(gamma); gamma a power of two (gamma = 1 gives 0).
int epochs_to_match_increase(int gamma);

SimTrajectory simulate(const OptSchedule& schedule, const SimOptions& options = {});

/// Total AALR epochs / total OPT epochs. Throws DomainError for an empty run.
double delay_ratio(const SimTrajectory& trajectory);

/// epoch,aalr_lr,opt_lr,progress
void write_trajectory_csv(std::ostream& os, const SimTrajectory& trajectory);

} // namespace aalr
