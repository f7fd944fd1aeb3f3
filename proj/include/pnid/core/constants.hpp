#pragma once

namespace pnid {

inline constexpr double kGravity = 9.8;        // m/s^2
inline constexpr double kSpeedOfSound = 340.0; // m/s, one Mach
inline constexpr double kAirDensity = 1.225;   // kg/m^3, sea level
inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double mach_to_mps(double mach) { return mach * kSpeedOfSound; }

}  // namespace pnid
