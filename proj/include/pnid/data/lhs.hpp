#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <numeric>
#include <vector>

#include "pnid/core/constants.hpp"
#include "pnid/core/errors.hpp"
#include "pnid/core/rng.hpp"
#include "pnid/sim/types.hpp"

namespace pnid::data {

/// Latin hypercube design on the unit cube: n rows of `dims` values in [0, 1).
/// Dimension d places exactly one row in each stratum [k/n, (k+1)/n), with an independent
/// random stratum permutation per dimension and uniform jitter inside each stratum.
inline std::vector<std::vector<double>> lhs_unit(std::size_t n, std::size_t dims, std::uint64_t seed) {
    if (n == 0) throw ConfigError("LHS needs at least one sample");
    Rng rng(seed);
    std::vector<std::vector<double>> out(n, std::vector<double>(dims));
    std::vector<std::size_t> perm(n);
    for (std::size_t d = 0; d < dims; ++d) {
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        shuffle(std::span<std::size_t>(perm), rng);
        for (std::size_t i = 0; i < n; ++i)
            out[i][d] = (static_cast<double>(perm[i]) + uniform01(rng)) / static_cast<double>(n);
    }
    return out;
}

/// Index of the equal-width stratum holding u in [0, 1).
inline std::size_t lhs_stratum(double u, std::size_t n) {
    const auto k = static_cast<std::size_t>(u * static_cast<double>(n));
    return k < n ? k : n - 1;
}

struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    double at(double u) const { return lo + u * (hi - lo); }
    bool contains(double v) const { return v >= lo && v <= hi; }
};

/// Scenario ranges of the randomized engagement parameters.
struct ParamBox {
    static constexpr std::size_t kDims = 6;

    Interval range0{6000.0, 8000.0};     // m
    Interval los0_deg{0.0, 5.0};         // deg
    Interval speed_A_mach{0.8, 1.0};
    Interval speed_M0_mach{2.0, 2.5};
    Interval gain{2.5, 5.5};
    Interval tau{0.1, 0.4};              // s

    std::array<const Interval*, kDims> dims() const {
        return {&range0, &los0_deg, &speed_A_mach, &speed_M0_mach, &gain, &tau};
    }

    void validate() const {
        for (const auto* d : dims())
            if (!(d->hi > d->lo)) throw ConfigError("parameter box range needs max > min");
    }
};

/// One randomized engagement in physical units.
struct Scenario {
    double range0 = 7000.0;   // m
    double los0 = 0.0;        // rad
    double speed_A = 0.9 * kSpeedOfSound;
    double speed_M0 = 2.25 * kSpeedOfSound;
    double gain = 4.0;
    double tau = 0.25;
    double maneuver_phase = 0.0;  // s

    bool operator==(const Scenario&) const = default;
};

/// Maps a unit-cube point onto the box.
inline Scenario scenario_at(const ParamBox& box, const std::vector<double>& u) {
    if (u.size() < ParamBox::kDims) throw ConfigError("scenario point needs 6 coordinates");
    Scenario s;
    s.range0 = box.range0.at(u[0]);
    s.los0 = deg_to_rad(box.los0_deg.at(u[1]));
    s.speed_A = mach_to_mps(box.speed_A_mach.at(u[2]));
    s.speed_M0 = mach_to_mps(box.speed_M0_mach.at(u[3]));
    s.gain = box.gain.at(u[4]);
    s.tau = box.tau.at(u[5]);
    return s;
}

/// Physical-unit LHS over the box.
inline std::vector<Scenario> lhs_sample(const ParamBox& box, std::size_t n, std::uint64_t seed) {
    box.validate();
    std::vector<Scenario> out;
    out.reserve(n);
    for (const auto& row : lhs_unit(n, ParamBox::kDims, seed)) out.push_back(scenario_at(box, row));
    return out;
}

/// Engagement config for `s`, taking every non-randomized setting from `base`.
inline sim::EngagementConfig make_engagement(const Scenario& s, const sim::EngagementConfig& base) {
    sim::EngagementConfig c = base;
    c.range0 = s.range0;
    c.los0 = s.los0;
    c.aircraft.speed = s.speed_A;
    c.aircraft.maneuver_phase = s.maneuver_phase;
    c.missile.speed0 = s.speed_M0;
    c.missile.gain = s.gain;
    c.missile.tau = s.tau;
    return c;
}

/// Stable identifier of a scenario: a hash of the bit patterns of its parameters.
inline std::uint64_t scenario_id(const Scenario& s) {
    std::uint64_t h = 0x5ce7a210ULL;
    for (double v : {s.range0, s.los0, s.speed_A, s.speed_M0, s.gain, s.tau, s.maneuver_phase})
        h = mix64(h ^ std::bit_cast<std::uint64_t>(v));
    return h;
}

}  // namespace pnid::data
