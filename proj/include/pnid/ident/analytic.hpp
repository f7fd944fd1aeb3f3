#pragma once

#include <cmath>
#include <iomanip>
#include <ostream>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pnid/core/constants.hpp"
#include "pnid/core/errors.hpp"
#include "pnid/sensing/differencing.hpp"
#include "pnid/sensing/measurement.hpp"
#include "pnid/sim/dynamics.hpp"

namespace pnid::ident {

/// Missile state recovered from aircraft-side quantities at one radar tick.
struct ReconstructionPoint {
    double t = 0.0;
    double f1 = 0.0;          // V_M cos(theta_M - q)
    double f2 = 0.0;          // V_M sin(theta_M - q)
    double theta_M = 0.0;
    double speed_M = 0.0;
    double accel_M = 0.0;     // m/s^2
    double accel_M_g = 0.0;   // same, in g
    bool valid = false;
};

struct ReconstructOptions {
    double min_speed = 1e-6;         // |(f1, f2)| below this is degenerate
    std::size_t smoothing_width = 5; // for theta_M rate
};

/// Inverts the relative kinematics. `range_rate` is V_R at each feature tick.
inline std::vector<ReconstructionPoint> reconstruct(const sensing::FeatureSeries& f,
                                                    std::span<const double> range_rate,
                                                    const ReconstructOptions& opt = {}) {
    if (range_rate.size() != f.size())
        throw ConfigError("range-rate sequence does not match the feature grid");
    std::vector<ReconstructionPoint> pts(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) {
        const auto& r = f.rows[k];
        auto& p = pts[k];
        p.t = r.t;
        const double d = r.theta_A - r.los;
        p.f1 = -range_rate[k] - r.speed_A * std::cos(d);
        p.f2 = -r.los_rate * r.range + r.speed_A * std::sin(d);
        p.valid = std::hypot(p.f1, p.f2) > opt.min_speed;
        if (!p.valid) continue;
        p.theta_M = std::atan2(p.f2, p.f1) + r.los;
        const double e = p.theta_M - r.los;
        p.speed_M = p.f1 * std::cos(e) + p.f2 * std::sin(e);
    }
    if (f.size() >= 2) {
        std::vector<double> theta(f.size());
        for (std::size_t k = 0; k < f.size(); ++k) theta[k] = pts[k].theta_M;
        const auto rate = sensing::smoothed_derivative(theta, f.period, opt.smoothing_width);
        const std::size_t half = opt.smoothing_width / 2 + 1;
        for (std::size_t k = 0; k < f.size(); ++k) {
            auto& p = pts[k];
            if (!p.valid) continue;
            // differencing across a degenerate neighbour poisons the rate
            for (std::size_t j = k >= half ? k - half : 0; j <= std::min(f.size() - 1, k + half); ++j)
                if (!pts[j].valid) p.valid = false;
            p.accel_M = p.speed_M * rate[k] + kGravity * std::cos(p.theta_M);
            p.accel_M_g = p.accel_M / kGravity;
        }
    }
    return pts;
}

/// Range rate from noisy range samples by the same smoothed differencing as the LOS rate.
inline std::vector<double> estimate_range_rate(const sensing::FeatureSeries& f,
                                               std::size_t width = 5) {
    std::vector<double> r(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) r[k] = f.rows[k].range;
    return sensing::smoothed_derivative(r, f.period, width);
}

/// Simulator range rate at each feature tick, for noise-free runs.
inline std::vector<double> exact_range_rate(const sensing::FeatureSeries& f, const sim::Trajectory& traj) {
    std::vector<double> r(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) {
        const std::size_t i = k * f.stride;
        if (i >= traj.states.size()) throw ConfigError("feature grid runs past the trajectory");
        r[k] = sim::relative_kinematics(traj.states[i], traj.config.aircraft.speed).range_rate;
    }
    return r;
}

struct ParamSolution {
    double gain = 0.0;   // N_hat
    double tau = 0.0;    // tau_hat (s)
    double residual = 0.0;
    std::size_t instants = 0;
};

/// Least-squares fit of a_t = N (V_c q_dot)_t - tau (a_t - a_{t-1}) / T_p over every
/// pair of consecutive valid points.
inline ParamSolution solve_gain_tau(std::span<const ReconstructionPoint> pts,
                                    std::span<const double> closing_speed,
                                    std::span<const double> los_rate, double period) {
    if (closing_speed.size() != pts.size() || los_rate.size() != pts.size())
        throw ConfigError("solve inputs have mismatched lengths");
    std::vector<std::size_t> rows;
    for (std::size_t k = 1; k < pts.size(); ++k)
        if (pts[k].valid && pts[k - 1].valid) rows.push_back(k);
    if (rows.size() < 2) throw InsufficientDataError("need at least 2 usable instants");

    Eigen::MatrixXd A(static_cast<Eigen::Index>(rows.size()), 2);
    Eigen::VectorXd b(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::size_t k = rows[i];
        const auto ii = static_cast<Eigen::Index>(i);
        A(ii, 0) = closing_speed[k] * los_rate[k];
        A(ii, 1) = -(pts[k].accel_M - pts[k - 1].accel_M) / period;
        b(ii) = pts[k].accel_M;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (!(sv(0) > 0) || sv(1) <= 1e-10 * sv(0))
        throw UnidentifiableError("gain/time-constant system is rank deficient");
    const Eigen::Vector2d x = svd.solve(b);
    ParamSolution sol;
    sol.gain = x(0);
    sol.tau = x(1);
    sol.residual = std::sqrt((A * x - b).squaredNorm() / static_cast<double>(rows.size()));
    sol.instants = rows.size();
    return sol;
}

/// Full analytic route from features: range rate and LOS rate are taken as given.
struct AnalyticResult {
    std::vector<ReconstructionPoint> points;
    ParamSolution solution;
};

inline AnalyticResult identify(const sensing::FeatureSeries& f, std::span<const double> range_rate,
                               const ReconstructOptions& opt = {}) {
    AnalyticResult res;
    res.points = reconstruct(f, range_rate, opt);
    std::vector<double> vc(f.size()), qd(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) {
        vc[k] = -range_rate[k];
        qd[k] = f.rows[k].los_rate;
    }
    res.solution = solve_gain_tau(res.points, vc, qd, f.period);
    return res;
}

inline void write_reconstruction_csv(std::ostream& os, std::span<const ReconstructionPoint> pts) {
    os << "t,f1,f2,theta_M_hat,V_M_hat,a_M_hat,a_M_hat_g,valid\n" << std::setprecision(17);
    for (const auto& p : pts)
        os << p.t << ',' << p.f1 << ',' << p.f2 << ',' << p.theta_M << ',' << p.speed_M << ','
           << p.accel_M << ',' << p.accel_M_g << ',' << (p.valid ? 1 : 0) << '\n';
}

inline void write_solution_csv(std::ostream& os, const ParamSolution& s) {
    os << "N_hat,tau_hat,residual,instants\n" << std::setprecision(17);
    os << s.gain << ',' << s.tau << ',' << s.residual << ',' << s.instants << '\n';
}

}  // namespace pnid::ident
