#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pnid/core/constants.hpp"
#include "pnid/core/errors.hpp"

namespace pnid::sim {

/// Piecewise-linear drag coefficient versus Mach, clamped at both ends.
class DragTable {
public:
    using Point = std::pair<double, double>;  // (Mach, C_D)

    DragTable() : DragTable(default_points()) {}
    explicit DragTable(std::vector<Point> points) : points_(std::move(points)) {
        if (points_.empty()) throw ConfigError("drag table is empty");
        for (std::size_t i = 1; i < points_.size(); ++i)
            if (!(points_[i].first > points_[i - 1].first))
                throw ConfigError("drag table Mach values must be strictly increasing");
    }

    static DragTable flat(double cd) { return DragTable({{0.0, cd}}); }

    /// Invented default shape (transonic rise, supersonic decay); no source values exist.
    static std::vector<Point> default_points() {
        return {{0.5, 0.30}, {0.9, 0.35}, {1.1, 0.55}, {1.5, 0.45}, {2.0, 0.38}, {3.0, 0.32}};
    }

    double coefficient(double mach) const {
        if (mach <= points_.front().first) return points_.front().second;
        if (mach >= points_.back().first) return points_.back().second;
        std::size_t i = 1;
        while (points_[i].first < mach) ++i;
        const auto& [m0, c0] = points_[i - 1];
        const auto& [m1, c1] = points_[i];
        return c0 + (c1 - c0) * (mach - m0) / (m1 - m0);
    }

    const std::vector<Point>& points() const { return points_; }

private:
    std::vector<Point> points_;
};

struct MissileParams {
    double gain = 4.0;           // PN navigation constant N
    double tau = 0.25;           // lateral time constant (s)
    double speed0 = 2.25 * kSpeedOfSound;
    double theta0 = 0.0;         // rad
    double mass = 100.0;         // kg
    double thrust = 0.0;         // N
    double ref_area = 0.101;     // m^2
    DragTable drag;
    double drag_scale = 1.0;

    void validate() const {
        if (!(gain > 0)) throw ConfigError("missile gain N must be > 0");
        if (!(tau > 0)) throw ConfigError("missile tau must be > 0");
        if (!(speed0 > 0)) throw ConfigError("missile speed must be > 0");
        if (!(mass > 0)) throw ConfigError("missile mass must be > 0");
        if (!(ref_area > 0)) throw ConfigError("missile reference area must be > 0");
        if (!(drag_scale > 0)) throw ConfigError("drag scale must be > 0");
    }
};

struct AircraftParams {
    double speed = 0.9 * kSpeedOfSound;  // constant (m/s)
    double theta0 = 0.0;                 // rad
    double tau = 0.6;                    // s
    double maneuver_amp_g = 8.0;         // square-wave amplitude, g units
    double maneuver_freq = 1.0 / 8.0;    // Hz
    double maneuver_phase = 0.0;         // s

    void validate() const {
        if (!(speed > 0)) throw ConfigError("aircraft speed must be > 0");
        if (!(tau > 0)) throw ConfigError("aircraft tau must be > 0");
        if (!(maneuver_amp_g >= 0)) throw ConfigError("maneuver amplitude must be >= 0");
        if (!(maneuver_freq > 0)) throw ConfigError("maneuver frequency must be > 0");
    }
};

struct SimLimits {
    double min_range = 50.0;  // m
    double max_time = 30.0;   // s
};

/// Polar engagement state. LOS runs from the aircraft to the missile.
struct EngagementState {
    double t = 0.0;
    double range = 0.0;     // R
    double los = 0.0;       // q
    double theta_A = 0.0;
    double theta_M = 0.0;
    double speed_M = 0.0;   // V_M
    double accel_A = 0.0;   // achieved lateral accelerations (m/s^2)
    double accel_M = 0.0;
    double cmd_A = 0.0;     // commands at this instant
    double cmd_M = 0.0;

    bool operator==(const EngagementState&) const = default;
};

struct EngagementConfig {
    MissileParams missile;
    AircraftParams aircraft;
    double range0 = 7000.0;
    double los0 = 0.0;
    double dt = 1e-3;
    SimLimits limits;

    void validate() const {
        missile.validate();
        aircraft.validate();
        if (!(range0 > 0)) throw ConfigError("initial range must be > 0");
        if (!(dt > 0)) throw ConfigError("integration step must be > 0");
    }
};

enum class Termination { MinRange, Opening, TimeLimit };

inline std::string to_string(Termination t) {
    switch (t) {
        case Termination::MinRange: return "min_range";
        case Termination::Opening: return "opening";
        case Termination::TimeLimit: return "time_limit";
    }
    return "unknown";
}

struct Trajectory {
    EngagementConfig config;
    double dt = 0.0;
    std::vector<EngagementState> states;
    Termination termination = Termination::TimeLimit;

    const EngagementState& final_state() const { return states.back(); }
    double flight_time() const { return states.back().t; }
};

}  // namespace pnid::sim
