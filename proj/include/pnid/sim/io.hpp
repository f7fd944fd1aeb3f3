#pragma once

#include <fstream>
#include <iomanip>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "pnid/core/errors.hpp"
#include "pnid/sim/types.hpp"

namespace pnid::sim {

inline constexpr const char* kTrajectoryHeader = "t,R,q,theta_A,theta_M,V_M,a_A,a_M,a_cA,a_cM";

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << kTrajectoryHeader << '\n';
    os << std::setprecision(17);
    for (const auto& s : traj.states) {
        os << s.t << ',' << s.range << ',' << s.los << ',' << s.theta_A << ',' << s.theta_M << ','
           << s.speed_M << ',' << s.accel_A << ',' << s.accel_M << ',' << s.cmd_A << ',' << s.cmd_M
           << '\n';
    }
}

// Scenario config keys (all SI, angles in radians):
//   missile:  N, tau, speed0, theta0, mass, thrust, ref_area, drag_scale, drag_table [[mach, cd], ...]
//   aircraft: speed, theta0, tau, maneuver_amp_g, maneuver_freq, maneuver_phase
//   R0, q0, dt, limits: {R_min, t_max}
// Missing keys keep their defaults.

inline void from_json(const nlohmann::json& j, MissileParams& p) {
    p.gain = j.value("N", p.gain);
    p.tau = j.value("tau", p.tau);
    p.speed0 = j.value("speed0", p.speed0);
    p.theta0 = j.value("theta0", p.theta0);
    p.mass = j.value("mass", p.mass);
    p.thrust = j.value("thrust", p.thrust);
    p.ref_area = j.value("ref_area", p.ref_area);
    p.drag_scale = j.value("drag_scale", p.drag_scale);
    if (j.contains("drag_table")) {
        std::vector<DragTable::Point> pts;
        for (const auto& row : j.at("drag_table")) {
            if (!row.is_array() || row.size() != 2) throw ConfigError("drag_table rows must be [mach, cd]");
            pts.emplace_back(row[0].get<double>(), row[1].get<double>());
        }
        p.drag = DragTable(std::move(pts));
    }
}

inline void to_json(nlohmann::json& j, const MissileParams& p) {
    nlohmann::json table = nlohmann::json::array();
    for (const auto& [m, cd] : p.drag.points()) table.push_back({m, cd});
    j = {{"N", p.gain},         {"tau", p.tau},       {"speed0", p.speed0},
         {"theta0", p.theta0},  {"mass", p.mass},     {"thrust", p.thrust},
         {"ref_area", p.ref_area}, {"drag_scale", p.drag_scale}, {"drag_table", table}};
}

inline void from_json(const nlohmann::json& j, AircraftParams& p) {
    p.speed = j.value("speed", p.speed);
    p.theta0 = j.value("theta0", p.theta0);
    p.tau = j.value("tau", p.tau);
    p.maneuver_amp_g = j.value("maneuver_amp_g", p.maneuver_amp_g);
    p.maneuver_freq = j.value("maneuver_freq", p.maneuver_freq);
    p.maneuver_phase = j.value("maneuver_phase", p.maneuver_phase);
}

inline void to_json(nlohmann::json& j, const AircraftParams& p) {
    j = {{"speed", p.speed},
         {"theta0", p.theta0},
         {"tau", p.tau},
         {"maneuver_amp_g", p.maneuver_amp_g},
         {"maneuver_freq", p.maneuver_freq},
         {"maneuver_phase", p.maneuver_phase}};
}

inline void from_json(const nlohmann::json& j, EngagementConfig& c) {
    if (j.contains("missile")) from_json(j.at("missile"), c.missile);
    if (j.contains("aircraft")) from_json(j.at("aircraft"), c.aircraft);
    c.range0 = j.value("R0", c.range0);
    c.los0 = j.value("q0", c.los0);
    c.dt = j.value("dt", c.dt);
    if (j.contains("limits")) {
        const auto& l = j.at("limits");
        c.limits.min_range = l.value("R_min", c.limits.min_range);
        c.limits.max_time = l.value("t_max", c.limits.max_time);
    }
}

inline void to_json(nlohmann::json& j, const EngagementConfig& c) {
    j = {{"missile", c.missile},
         {"aircraft", c.aircraft},
         {"R0", c.range0},
         {"q0", c.los0},
         {"dt", c.dt},
         {"limits", {{"R_min", c.limits.min_range}, {"t_max", c.limits.max_time}}}};
}

inline nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    try {
        return nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("invalid config file " + path + ": " + e.what());
    }
}

}  // namespace pnid::sim
