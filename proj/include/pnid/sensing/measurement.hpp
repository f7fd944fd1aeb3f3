#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <random>
#include <vector>

#include "pnid/core/errors.hpp"
#include "pnid/core/rng.hpp"
#include "pnid/sensing/differencing.hpp"
#include "pnid/sim/dynamics.hpp"
#include "pnid/sim/types.hpp"

namespace pnid::sensing {

struct RadarSample {
    double t;
    double range;  // R_meas
    double los;    // q_meas
};

/// Radar returns at a fixed period. Sample k was taken at trajectory index k * stride.
struct MeasurementSeries {
    double period = 0.01;
    std::size_t stride = 10;
    double sigma_range = 0.0;
    double sigma_los = 0.0;
    std::uint64_t seed = 0;
    std::vector<RadarSample> samples;

    std::size_t size() const { return samples.size(); }
};

/// Number of integrator steps per radar period; throws unless the period is a grid multiple.
inline std::size_t grid_stride(double period, double dt) {
    if (!(period > 0) || !(dt > 0)) throw ConfigError("measurement period and dt must be > 0");
    const double ratio = period / dt;
    const double rounded = std::round(ratio);
    if (rounded < 1 || std::abs(ratio - rounded) > 1e-9 * ratio)
        throw ConfigError("measurement period is not an integer multiple of the integration step");
    return static_cast<std::size_t>(rounded);
}

/// Samples R and q every `period` seconds and adds independent zero-mean Gaussian noise.
/// For each tick the range draw comes first, then the LOS draw, from one stream.
inline MeasurementSeries sample_measurements(const sim::Trajectory& traj, double period,
                                             double sigma_range, double sigma_los,
                                             std::uint64_t seed) {
    if (sigma_range < 0 || sigma_los < 0) throw ConfigError("noise levels must be >= 0");
    MeasurementSeries out;
    out.period = period;
    out.stride = grid_stride(period, traj.dt);
    out.sigma_range = sigma_range;
    out.sigma_los = sigma_los;
    out.seed = seed;
    Rng rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    out.samples.reserve(traj.states.size() / out.stride + 1);
    for (std::size_t i = 0; i < traj.states.size(); i += out.stride) {
        const auto& s = traj.states[i];
        const double nu_r = unit(rng);
        const double nu_q = unit(rng);
        out.samples.push_back({static_cast<double>(i / out.stride) * period,
                               s.range + sigma_range * nu_r, s.los + sigma_los * nu_q});
    }
    return out;
}

inline std::vector<double> estimate_los_rate(const MeasurementSeries& series, std::size_t width = 5,
                                             DifferencingMode mode = DifferencingMode::Offline) {
    if (series.size() < 2) throw InsufficientDataError("LOS-rate estimation needs at least 2 samples");
    std::vector<double> q(series.size());
    for (std::size_t k = 0; k < q.size(); ++k) q[k] = series.samples[k].los;
    return smoothed_derivative(q, series.period, width, mode);
}

inline constexpr std::size_t kFeatureCount = 6;
using FeatureVector = std::array<double, kFeatureCount>;

/// Model input at one radar tick, in the fixed order R, q, q_dot, V_A, theta_A, a_A.
struct FeatureRow {
    double t;
    double range;
    double los;
    double los_rate;
    double speed_A;
    double theta_A;
    double accel_A;

    FeatureVector values() const { return {range, los, los_rate, speed_A, theta_A, accel_A}; }
};

inline constexpr std::array<const char*, kFeatureCount> kFeatureNames = {
    "R", "q", "q_dot", "V_A", "theta_A", "a_A"};

struct FeatureSeries {
    double period = 0.01;
    std::size_t stride = 10;
    std::vector<FeatureRow> rows;

    std::size_t size() const { return rows.size(); }
};

/// Joins radar data with the aircraft's own (noise-free) navigation states.
inline FeatureSeries build_features(const MeasurementSeries& series, std::span<const double> los_rate,
                                    const sim::Trajectory& traj) {
    if (los_rate.size() != series.size())
        throw ConfigError("LOS-rate sequence does not match the measurement grid");
    if (series.stride != grid_stride(series.period, traj.dt))
        throw ConfigError("measurement stride does not match the trajectory grid");
    FeatureSeries f;
    f.period = series.period;
    f.stride = series.stride;
    f.rows.reserve(series.size());
    for (std::size_t k = 0; k < series.size(); ++k) {
        const std::size_t idx = k * series.stride;
        if (idx >= traj.states.size())
            throw ConfigError("measurement series extends past the trajectory");
        const auto& s = traj.states[idx];
        const auto& m = series.samples[k];
        if (std::abs(m.t - s.t) > 1e-9 * std::max(1.0, s.t))
            throw ConfigError("measurement timestamps are not aligned with the trajectory grid");
        f.rows.push_back({m.t, m.range, m.los, los_rate[k], traj.config.aircraft.speed, s.theta_A,
                          s.accel_A});
    }
    return f;
}

/// True LOS rate at each radar tick (used by noise-free pipelines).
inline std::vector<double> exact_los_rate(const MeasurementSeries& series, const sim::Trajectory& traj) {
    std::vector<double> out(series.size());
    for (std::size_t k = 0; k < series.size(); ++k)
        out[k] = sim::relative_kinematics(traj.states[k * series.stride], traj.config.aircraft.speed)
                     .los_rate;
    return out;
}

struct SensingConfig {
    double period = 0.01;        // 100 Hz radar
    double sigma_range = 5.0;    // m
    double sigma_los = 1e-3;     // rad
    bool noise = true;
    std::size_t smoothing_width = 5;
    DifferencingMode mode = DifferencingMode::Offline;
    /// With noise off, use the simulator's LOS rate instead of differencing.
    bool exact_rate_when_noise_free = true;

    void validate() const {
        if (!(period > 0)) throw ConfigError("measurement period must be > 0");
        if (sigma_range < 0 || sigma_los < 0) throw ConfigError("noise levels must be >= 0");
        if (smoothing_width == 0 || smoothing_width % 2 == 0)
            throw ConfigError("smoothing width must be odd");
    }
};

/// Measurement and feature assembly in one call.
inline FeatureSeries sense(const sim::Trajectory& traj, const SensingConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const double sr = cfg.noise ? cfg.sigma_range : 0.0;
    const double sq = cfg.noise ? cfg.sigma_los : 0.0;
    const auto series = sample_measurements(traj, cfg.period, sr, sq, seed);
    const auto rate = (!cfg.noise && cfg.exact_rate_when_noise_free)
                          ? exact_los_rate(series, traj)
                          : estimate_los_rate(series, cfg.smoothing_width, cfg.mode);
    return build_features(series, rate, traj);
}

inline void write_measurements_csv(std::ostream& os, const MeasurementSeries& m) {
    os << "# seed=" << m.seed << " period=" << m.period << " sigma_R=" << m.sigma_range
       << " sigma_q=" << m.sigma_los << '\n';
    os << "t,R_meas,q_meas\n" << std::setprecision(17);
    for (const auto& s : m.samples) os << s.t << ',' << s.range << ',' << s.los << '\n';
}

inline void write_features_csv(std::ostream& os, const FeatureSeries& f, std::uint64_t seed) {
    os << "# seed=" << seed << " period=" << f.period << '\n';
    os << "t,R,q,q_dot,V_A,theta_A,a_A\n" << std::setprecision(17);
    for (const auto& r : f.rows)
        os << r.t << ',' << r.range << ',' << r.los << ',' << r.los_rate << ',' << r.speed_A << ','
           << r.theta_A << ',' << r.accel_A << '\n';
}

}  // namespace pnid::sensing
