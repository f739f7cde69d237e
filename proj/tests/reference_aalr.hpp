#pragma once

// Test-only reference: the adaptive LR algorithm written as the literal
// imperative loop (phase 1 while-loop, phase 2 while-loop with an inline
// retry), emitting the directives a harness would execute. It shares no code
// with the state machine in src/controller.cpp and serves as its oracle.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "aalr/controller.hpp"

namespace aalr::testing {

struct ReferenceRun {
    // groups[0] is what the harness does before the first loss; groups[k] is
    // what it does after the k-th loss.
    std::vector<std::vector<Directive>> groups;
    int observations = 0;
};

inline ReferenceRun run_reference(double initial_lr, int budget, double initial_loss, BlockMode mode,
                                  const std::function<double()>& next_loss) {
    ReferenceRun run;
    std::vector<Directive> current;
    auto flush = [&] {
        run.groups.push_back(current);
        current.clear();
    };
    int t = 0;
    auto train = [&](int k) {
        if (t >= budget) {
            current.emplace_back(Stop{});
            flush();
            return false;
        }
        k = std::min(k, budget - t);
        current.emplace_back(TrainEpochs{k});
        flush();
        t += k;
        return true;
    };
    auto evaluate = [&] {
        ++run.observations;
        return next_loss();
    };
    auto diverged = [](double l) { return !std::isfinite(l); };

    double eta = initial_lr;
    double best = initial_loss;
    current.emplace_back(SetLr{eta});

    // Phase 1.
    int p = 10;
    int i = 0;
    while (i < p) {
        if (!train(1)) {
            return run;
        }
        const double loss = evaluate();
        ++i;
        if (diverged(loss) || loss > best) {
            eta /= 2;
            current.emplace_back(ReinitializeModel{});
            current.emplace_back(SetLr{eta});
            i = 0;
        } else {
            best = loss;
        }
    }
    current.emplace_back(SaveCheckpoint{});

    // Phase 2.
    eta *= 2;
    current.emplace_back(SetLr{eta});
    p = 1;
    auto block = [&] { return mode == BlockMode::PatiencePlusOne ? p + 1 : p; };
    for (;;) {
        if (!train(block())) {
            return run;
        }
        double loss = evaluate();
        if (diverged(loss)) {
            eta /= 2;
            current.emplace_back(RestoreCheckpoint{});
            current.emplace_back(SetLr{eta});
            p *= 2;
            continue;
        }
        if (loss < best) {
            best = loss;
            current.emplace_back(SaveCheckpoint{});
            eta *= 2;
            current.emplace_back(SetLr{eta});
            p = 1;
        } else {
            if (!train(block())) {
                return run;
            }
            loss = evaluate();
            if (!diverged(loss) && loss < best) {
                best = loss;
                current.emplace_back(SaveCheckpoint{});
                eta *= 2;
                current.emplace_back(SetLr{eta});
                p = 1;
            } else {
                eta /= 2;
                p *= 2;
                if (diverged(loss)) {
                    current.emplace_back(RestoreCheckpoint{});
                }
                current.emplace_back(SetLr{eta});
            }
        }
    }
}

} // namespace aalr::testing
