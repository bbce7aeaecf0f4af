#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qmag/rng.hpp"

namespace qmag {

/// Ito-Euler stepping parameters, dimensionless time (units of 1/M).
struct StepConfig {
    double dt = 1e-5;
    double horizon = 1.0;
    /// Record every `stride` steps; 0 = auto (about `target_points` samples).
    int stride = 0;
    int target_points = 2000;

    void validate() const {
        if (!(dt > 0.0) || dt > 1e-3) throw std::invalid_argument("dt must be in (0, 1e-3]");
        if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be > 0");
        if (stride < 0) throw std::invalid_argument("stride must be >= 0");
    }

    long steps() const { return static_cast<long>(std::llround(horizon / dt)); }

    int effective_stride() const {
        if (stride > 0) return stride;
        const long n = steps();
        return static_cast<int>(std::max<long>(1, n / std::max(1, target_points)));
    }
};

/// Outcome of one trajectory. Unstable trajectories carry the step index
/// and the first violated invariant.
struct TrajectoryStatus {
    bool completed = true;
    long failed_step = -1;
    std::string reason;

    static TrajectoryStatus ok() { return {}; }
    static TrajectoryStatus unstable(long step, std::string why) {
        return {false, step, std::move(why)};
    }
};

template <typename State>
struct Trajectory {
    std::vector<double> times;
    std::vector<State> states;  // decimated snapshots, includes t = 0
    TrajectoryStatus status;
};

template <typename F, typename State>
concept Stepper = requires(F f, const State& s, std::span<const double> dw, double dt) {
    { f(s, dw, dt) } -> std::convertible_to<State>;
};

template <typename F, typename State>
concept Validator = requires(F f, State& s) {
    // returns std::nullopt when the state is healthy; may repair in place
    { f(s) } -> std::convertible_to<std::optional<std::string>>;
};

/// Euler-Maruyama driver: draws `channels` Wiener increments per step,
/// applies the stepper, lets the validator repair or reject the state, and
/// records decimated snapshots. Stops at the first invariant violation.
template <typename State, typename Step, typename Check>
    requires Stepper<Step, State> && Validator<Check, State>
Trajectory<State> run_trajectory(State state, int channels, Step step, Check check,
                                 const StepConfig& cfg, RandomStream& rs) {
    cfg.validate();
    const long n = cfg.steps();
    const int stride = cfg.effective_stride();

    Trajectory<State> out;
    out.times.reserve(static_cast<std::size_t>(n / stride) + 2);
    out.states.reserve(static_cast<std::size_t>(n / stride) + 2);
    out.times.push_back(0.0);
    out.states.push_back(state);

    std::vector<double> dw(static_cast<std::size_t>(channels));
    for (long i = 0; i < n; ++i) {
        rs.wiener(cfg.dt, dw);
        state = step(static_cast<const State&>(state), std::span<const double>(dw), cfg.dt);
        if (std::optional<std::string> why = check(state)) {
            out.status = TrajectoryStatus::unstable(i, *why);
            return out;
        }
        if ((i + 1) % stride == 0 || i + 1 == n) {
            out.times.push_back(static_cast<double>(i + 1) * cfg.dt);
            out.states.push_back(state);
        }
    }
    return out;
}

}  // namespace qmag
