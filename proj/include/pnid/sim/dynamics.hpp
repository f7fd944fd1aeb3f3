#pragma once

#include <array>
#include <cmath>
#include <cstddef>

#include "pnid/core/constants.hpp"
#include "pnid/core/errors.hpp"
#include "pnid/sim/types.hpp"

namespace pnid::sim {

/// Classic fixed-step fourth-order Runge-Kutta on a fixed-size state.
/// `f(t, y)` must return the derivative as the same array type.
template <std::size_t Dim, typename Deriv>
std::array<double, Dim> rk4_step(Deriv&& f, double t, const std::array<double, Dim>& y, double h) {
    auto axpy = [](const std::array<double, Dim>& a, double s, const std::array<double, Dim>& b) {
        std::array<double, Dim> out;
        for (std::size_t i = 0; i < Dim; ++i) out[i] = a[i] + s * b[i];
        return out;
    };
    const auto k1 = f(t, y);
    const auto k2 = f(t + 0.5 * h, axpy(y, 0.5 * h, k1));
    const auto k3 = f(t + 0.5 * h, axpy(y, 0.5 * h, k2));
    const auto k4 = f(t + h, axpy(y, h, k3));
    std::array<double, Dim> out;
    for (std::size_t i = 0; i < Dim; ++i)
        out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

struct RelativeKinematics {
    double range_rate;  // V_R, negative while closing
    double los_rate;    // q_dot
};

/// Range rate and LOS rate.
///   V_R   = -[V_A cos(theta_A - q) + V_M cos(theta_M - q)]
///   q_dot =  [V_A sin(theta_A - q) - V_M sin(theta_M - q)] / R
inline RelativeKinematics relative_kinematics(double range, double los, double theta_A,
                                              double theta_M, double speed_A, double speed_M) {
    if (!(range > 0)) throw DegenerateGeometryError("relative kinematics need R > 0");
    const double dA = theta_A - los;
    const double dM = theta_M - los;
    return {-(speed_A * std::cos(dA) + speed_M * std::cos(dM)),
            (speed_A * std::sin(dA) - speed_M * std::sin(dM)) / range};
}

inline RelativeKinematics relative_kinematics(const EngagementState& s, double speed_A) {
    return relative_kinematics(s.range, s.los, s.theta_A, s.theta_M, speed_A, s.speed_M);
}

/// PN acceleration command, a_c = N * V_c * q_dot with V_c = -V_R.
inline double pn_command(double gain, double range_rate, double los_rate) {
    return gain * (-range_rate) * los_rate;
}

/// One RK4 step of a_dot = (a_c - a) / tau with a_c held constant.
inline double lag_update(double accel, double cmd, double tau, double dt) {
    auto f = [&](double, const std::array<double, 1>& y) {
        return std::array<double, 1>{(cmd - y[0]) / tau};
    };
    return rk4_step<1>(f, 0.0, {accel}, dt)[0];
}

/// Evader square wave: +eta*g on [phase, phase + 1/(2 xi)) modulo the period, -eta*g otherwise.
inline double bang_bang_command(double t, const AircraftParams& p) {
    const double period = 1.0 / p.maneuver_freq;
    double s = std::fmod(t - p.maneuver_phase, period);
    if (s < 0) s += period;
    const double amp = p.maneuver_amp_g * kGravity;
    return s < 0.5 * period ? amp : -amp;
}

/// Aerodynamic drag in newtons.
inline double drag_force(double speed, const MissileParams& p, double rho = kAirDensity) {
    const double cd = p.drag_scale * p.drag.coefficient(speed / kSpeedOfSound);
    return 0.5 * rho * speed * speed * cd * p.ref_area;
}

/// Along-track acceleration: (T - D)/m - g sin(theta_M).
inline double speed_derivative(double speed, double theta_M, const MissileParams& p,
                               double rho = kAirDensity) {
    return (p.thrust - drag_force(speed, p, rho)) / p.mass - kGravity * std::sin(theta_M);
}

/// Flight-path angle rate for a gravity-inclusive lateral acceleration.
inline double path_angle_rate(double accel, double theta, double speed) {
    return (accel - kGravity * std::cos(theta)) / speed;
}

namespace detail {

// Integrated components: R, q, theta_A, theta_M, V_M, a_A, a_M
using StateVec = std::array<double, 7>;

inline StateVec pack(const EngagementState& s) {
    return {s.range, s.los, s.theta_A, s.theta_M, s.speed_M, s.accel_A, s.accel_M};
}

struct Derivative {
    const MissileParams& missile;
    const AircraftParams& aircraft;

    StateVec operator()(double t, const StateVec& y) const {
        const auto kin = relative_kinematics(y[0], y[1], y[2], y[3], aircraft.speed, y[4]);
        const double cmd_M = pn_command(missile.gain, kin.range_rate, kin.los_rate);
        const double cmd_A = bang_bang_command(t, aircraft);
        return {kin.range_rate,
                kin.los_rate,
                path_angle_rate(y[5], y[2], aircraft.speed),
                path_angle_rate(y[6], y[3], y[4]),
                speed_derivative(y[4], y[3], missile),
                (cmd_A - y[5]) / aircraft.tau,
                (cmd_M - y[6]) / missile.tau};
    }
};

}  // namespace detail

/// Fills in the command channels of `s` from its own kinematics.
inline void refresh_commands(EngagementState& s, const MissileParams& missile,
                             const AircraftParams& aircraft) {
    const auto kin = relative_kinematics(s, aircraft.speed);
    s.cmd_M = pn_command(missile.gain, kin.range_rate, kin.los_rate);
    s.cmd_A = bang_bang_command(s.t, aircraft);
}

/// One RK4 step of the full engagement. Guidance and evader commands are evaluated
/// at every stage; the returned state carries the commands at its own time.
inline EngagementState integrate_step(const EngagementState& state, const MissileParams& missile,
                                      const AircraftParams& aircraft, double dt) {
    const detail::Derivative f{missile, aircraft};
    const auto y = rk4_step<7>(f, state.t, detail::pack(state), dt);
    EngagementState next;
    next.t = state.t + dt;
    next.range = y[0];
    next.los = y[1];
    next.theta_A = y[2];
    next.theta_M = y[3];
    next.speed_M = y[4];
    next.accel_A = y[5];
    next.accel_M = y[6];
    if (next.range > 0) refresh_commands(next, missile, aircraft);
    return next;
}

}  // namespace pnid::sim
