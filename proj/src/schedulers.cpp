#include "aalr/schedulers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "aalr/errors.hpp"

namespace aalr {
namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

} // namespace

void validate(const Schedule& schedule) {
    std::visit(overloaded{
                   [](const StepDecay& s) {
                       if (!(s.initial_lr > 0.0)) {
                           throw ConfigError("step decay: initial LR must be positive");
                       }
                       if (!(s.gamma > 0.0)) {
                           throw ConfigError("step decay: gamma must be positive");
                       }
                       for (std::size_t i = 0; i < s.milestones.size(); ++i) {
                           if (s.milestones[i] < 0 || (i > 0 && s.milestones[i] <= s.milestones[i - 1])) {
                               throw ConfigError("step decay: milestones must be non-negative and strictly increasing");
                           }
                       }
                   },
                   [](const CosineRestarts& s) {
                       if (!(s.eta_max > 0.0) || !(s.eta_min >= 0.0) || s.eta_min > s.eta_max) {
                           throw ConfigError("cosine: need 0 <= eta_min <= eta_max and eta_max > 0");
                       }
                       if (s.period_0 < 1 || s.period_mult < 1) {
                           throw ConfigError("cosine: period_0 and period_mult must be at least 1");
                       }
                   },
                   [](const Cyclic& s) {
                       if (!(s.eta_min > 0.0) || s.eta_min > s.eta_max) {
                           throw ConfigError("cyclic: need 0 < eta_min <= eta_max");
                       }
                       if (s.half_cycle < 1) {
                           throw ConfigError("cyclic: half cycle must be at least 1 epoch");
                       }
                   },
               },
               schedule);
}

double cosine_annealing(double eta_max, double eta_min, double t_cur, double t_i) {
    return eta_min + 0.5 * (eta_max - eta_min) * (1.0 + std::cos(std::numbers::pi * t_cur / t_i));
}

double lr_at(const Schedule& schedule, int epoch) {
    if (epoch < 0) {
        throw DomainError("epoch must be non-negative");
    }
    return std::visit(overloaded{
                          [epoch](const StepDecay& s) {
                              const auto passed = std::count_if(s.milestones.begin(), s.milestones.end(),
                                                                [epoch](int m) { return m <= epoch; });
                              return s.initial_lr * std::pow(s.gamma, static_cast<double>(passed));
                          },
                          [epoch](const CosineRestarts& s) {
                              long long t_cur = epoch;
                              long long t_i = s.period_0;
                              while (t_cur >= t_i) {
                                  t_cur -= t_i;
                                  t_i *= s.period_mult;
                              }
                              return cosine_annealing(s.eta_max, s.eta_min, static_cast<double>(t_cur),
                                                      static_cast<double>(t_i));
                          },
                          [epoch](const Cyclic& s) {
                              const double pos = static_cast<double>(epoch) / s.half_cycle;
                              const double cycle = std::floor(1.0 + pos / 2.0);
                              const double x = std::abs(pos - 2.0 * cycle + 1.0);
                              return s.eta_min + (s.eta_max - s.eta_min) * std::max(0.0, 1.0 - x);
                          },
                      },
                      schedule);
}

std::string_view schedule_name(const Schedule& schedule) {
    return std::visit(overloaded{
                          [](const StepDecay&) { return std::string_view("step"); },
                          [](const CosineRestarts&) { return std::string_view("cosine"); },
                          [](const Cyclic&) { return std::string_view("cyclic"); },
                      },
                      schedule);
}

} // namespace aalr
