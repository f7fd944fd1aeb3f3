#pragma once

#include <cmath>
#include <optional>

#include "pnid/sim/dynamics.hpp"
#include "pnid/sim/types.hpp"

namespace pnid::sim {

inline EngagementState initial_state(const EngagementConfig& cfg) {
    EngagementState s;
    s.t = 0.0;
    s.range = cfg.range0;
    s.los = cfg.los0;
    s.theta_A = cfg.aircraft.theta0;
    s.theta_M = cfg.missile.theta0;
    s.speed_M = cfg.missile.speed0;
    refresh_commands(s, cfg.missile, cfg.aircraft);
    return s;
}

/// Termination predicate; std::nullopt while the engagement continues.
inline std::optional<Termination> check_termination(const EngagementState& s,
                                                    const EngagementConfig& cfg) {
    if (s.range < cfg.limits.min_range) return Termination::MinRange;
    if (relative_kinematics(s, cfg.aircraft.speed).range_rate >= 0) return Termination::Opening;
    if (s.t > cfg.limits.max_time) return Termination::TimeLimit;
    return std::nullopt;
}

inline bool is_finite(const EngagementState& s) {
    return std::isfinite(s.range) && std::isfinite(s.los) && std::isfinite(s.theta_A) &&
           std::isfinite(s.theta_M) && std::isfinite(s.speed_M) && std::isfinite(s.accel_A) &&
           std::isfinite(s.accel_M);
}

/// Propagates from launch until the missile closes inside min_range, the geometry
/// opens, or the time limit passes. Grid times are exact multiples of cfg.dt.
inline Trajectory simulate(const EngagementConfig& cfg) {
    cfg.validate();
    Trajectory traj;
    traj.config = cfg;
    traj.dt = cfg.dt;
    traj.states.reserve(static_cast<std::size_t>(std::min(cfg.limits.max_time, 60.0) / cfg.dt) + 2);
    traj.states.push_back(initial_state(cfg));

    for (std::size_t k = 0;; ++k) {
        const EngagementState& cur = traj.states.back();
        if (auto why = check_termination(cur, cfg)) {
            traj.termination = *why;
            return traj;
        }
        EngagementState next = integrate_step(cur, cfg.missile, cfg.aircraft, cfg.dt);
        if (!is_finite(next))
            throw NumericalBlowupError("non-finite engagement state", k + 1);
        if (!(next.range > 0) || !(next.speed_M > 0))
            throw NumericalBlowupError("range or missile speed left the valid domain", k + 1);
        next.t = static_cast<double>(k + 1) * cfg.dt;
        refresh_commands(next, cfg.missile, cfg.aircraft);
        traj.states.push_back(next);
    }
}

}  // namespace pnid::sim
