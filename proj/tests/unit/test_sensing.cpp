#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "pnid/sensing/measurement.hpp"
#include "pnid/sim/simulate.hpp"

using namespace pnid;
using namespace pnid::sensing;

namespace {

sim::Trajectory sample_trajectory() {
    sim::EngagementConfig c;
    c.aircraft.speed = 0.9 * kSpeedOfSound;
    c.missile.gain = 5.0;
    c.missile.tau = 0.30;
    return sim::simulate(c);
}

// Fixed-geometry trajectory on the radar grid: n states with R = 7000, q = 0.
sim::Trajectory still_trajectory(std::size_t n, double dt) {
    sim::Trajectory t;
    t.dt = dt;
    t.states.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        t.states[i].t = static_cast<double>(i) * dt;
        t.states[i].range = 7000.0;
        t.states[i].speed_M = 700.0;
    }
    return t;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
    const double ma = mean(a), mb = mean(b);
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST(Measurements, ZeroNoiseEqualsTruth) {
    const auto traj = sample_trajectory();
    const auto m = sample_measurements(traj, 0.01, 0.0, 0.0, 7);
    ASSERT_EQ(m.stride, 10u);
    ASSERT_EQ(m.size(), (traj.states.size() - 1) / 10 + 1);
    for (std::size_t k = 0; k < m.size(); ++k) {
        EXPECT_EQ(m.samples[k].range, traj.states[k * 10].range);
        EXPECT_EQ(m.samples[k].los, traj.states[k * 10].los);
        EXPECT_NEAR(m.samples[k].t, traj.states[k * 10].t, 1e-12);
    }
}

TEST(Measurements, TimestampsAreGridMultiples) {
    const auto m = sample_measurements(sample_trajectory(), 0.01, 5.0, 1e-3, 1);
    for (std::size_t k = 0; k < m.size(); ++k) EXPECT_EQ(m.samples[k].t, static_cast<double>(k) * 0.01);
}

TEST(Measurements, NoiseStatistics) {
    const std::size_t n = 100000;
    const auto traj = still_trajectory(n, 0.01);
    const auto m = sample_measurements(traj, 0.01, 5.0, 1e-3, 2024);
    ASSERT_EQ(m.size(), n);
    std::vector<double> er(n), eq(n);
    for (std::size_t k = 0; k < n; ++k) {
        er[k] = m.samples[k].range - 7000.0;
        eq[k] = m.samples[k].los;
    }
    const double mr = mean(er);
    double var = 0;
    for (double e : er) var += (e - mr) * (e - mr);
    const double sd = std::sqrt(var / (n - 1));
    EXPECT_LT(std::abs(sd - 5.0), 0.02 * 5.0);
    EXPECT_LT(std::abs(mr), 3.0 * 5.0 / std::sqrt(static_cast<double>(n)));

    // channels and neighbouring ticks are uncorrelated
    EXPECT_LT(std::abs(correlation(er, eq)), 0.02);
    const std::vector<double> r0(er.begin(), er.end() - 1), r1(er.begin() + 1, er.end());
    const std::vector<double> q0(eq.begin(), eq.end() - 1), q1(eq.begin() + 1, eq.end());
    EXPECT_LT(std::abs(correlation(r0, r1)), 0.02);
    EXPECT_LT(std::abs(correlation(q0, q1)), 0.02);
    EXPECT_LT(std::abs(correlation(r0, q1)), 0.02);
}

TEST(Measurements, SameSeedSameSeries) {
    const auto traj = sample_trajectory();
    const auto a = sample_measurements(traj, 0.01, 5.0, 1e-3, 99);
    const auto b = sample_measurements(traj, 0.01, 5.0, 1e-3, 99);
    const auto c = sample_measurements(traj, 0.01, 5.0, 1e-3, 100);
    ASSERT_EQ(a.size(), b.size());
    bool differs = false;
    for (std::size_t k = 0; k < a.size(); ++k) {
        EXPECT_EQ(a.samples[k].range, b.samples[k].range);
        EXPECT_EQ(a.samples[k].los, b.samples[k].los);
        differs = differs || a.samples[k].range != c.samples[k].range;
    }
    EXPECT_TRUE(differs);
}

TEST(Measurements, PeriodMustBeGridMultiple) {
    const auto traj = still_trajectory(100, 0.01);
    EXPECT_THROW(sample_measurements(traj, 0.015, 0, 0, 1), ConfigError);
    EXPECT_THROW(sample_measurements(traj, 0.0, 0, 0, 1), ConfigError);
    EXPECT_THROW(sample_measurements(traj, 0.01, -1.0, 0, 1), ConfigError);
}

TEST(LosRate, ExactOnAffineSignal) {
    MeasurementSeries m;
    m.period = 0.01;
    for (int k = 0; k < 200; ++k) m.samples.push_back({k * 0.01, 7000.0, 0.013 - 0.045 * k * 0.01});
    for (auto mode : {DifferencingMode::Offline, DifferencingMode::Causal}) {
        const auto qd = estimate_los_rate(m, 5, mode);
        for (double v : qd) EXPECT_NEAR(v, -0.045, 1e-12);
    }
}

TEST(LosRate, ConstantSignalGivesZero) {
    MeasurementSeries m;
    for (int k = 0; k < 50; ++k) m.samples.push_back({k * 0.01, 7000.0, 0.3});
    for (double v : estimate_los_rate(m)) EXPECT_EQ(v, 0.0);
}

TEST(LosRate, NoiseFreeSimulationInteriorError) {
    const auto traj = sample_trajectory();
    const auto m = sample_measurements(traj, 0.01, 0.0, 0.0, 1);
    const auto est = estimate_los_rate(m);
    const auto truth = exact_los_rate(m, traj);
    double worst = 0;
    for (std::size_t k = 3; k + 3 < est.size(); ++k) worst = std::max(worst, std::abs(est[k] - truth[k]));
    EXPECT_LT(worst, 1e-3);
}

TEST(LosRate, NeedsTwoSamples) {
    MeasurementSeries m;
    m.samples.push_back({0.0, 7000.0, 0.0});
    EXPECT_THROW(estimate_los_rate(m), InsufficientDataError);
}

TEST(Differencing, CausalOutputNeverReadsAhead) {
    // perturbation oracle: changing any input after k+1 (after k once k >= 1) leaves output k unchanged
    std::vector<double> x(40);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(0.3 * static_cast<double>(i)) + 0.01 * i * i;
    const auto base = smoothed_derivative(x, 0.01, 5, DifferencingMode::Causal);
    for (std::size_t j = 0; j < x.size(); ++j) {
        auto y = x;
        y[j] += 1.0;
        const auto out = smoothed_derivative(y, 0.01, 5, DifferencingMode::Causal);
        for (std::size_t k = 0; k < x.size(); ++k) {
            const bool allowed = j <= k || (k == 0 && j == 1);
            if (!allowed) {
                ASSERT_EQ(out[k], base[k]) << "output " << k << " read input " << j;
            }
        }
    }
}

TEST(Differencing, OfflineIsCentered) {
    std::vector<double> x(31, 0.0);
    x[15] = 1.0;
    const auto d = smoothed_derivative(x, 1.0, 5, DifferencingMode::Offline);
    for (std::size_t k = 0; k < x.size(); ++k) EXPECT_NEAR(d[k], -d[30 - k], 1e-15) << k;
    EXPECT_EQ(d[15], 0.0);
    EXPECT_EQ(d[19], 0.0);
}

TEST(Differencing, MovingAverages) {
    const std::vector<double> x{1, 2, 3, 4, 10};
    const auto c = centered_moving_average(x, 3);
    EXPECT_DOUBLE_EQ(c[0], 1.5);
    EXPECT_DOUBLE_EQ(c[2], 3.0);
    EXPECT_DOUBLE_EQ(c[4], 7.0);
    const auto t = trailing_moving_average(x, 3);
    EXPECT_DOUBLE_EQ(t[0], 1.0);
    EXPECT_DOUBLE_EQ(t[1], 1.5);
    EXPECT_DOUBLE_EQ(t[4], 17.0 / 3.0);
}

TEST(Features, ZeroNoiseMatchesKinematics) {
    const auto traj = sample_trajectory();
    SensingConfig cfg;
    cfg.noise = false;
    const auto f = sense(traj, cfg, 3);
    ASSERT_EQ(f.size(), (traj.states.size() - 1) / 10 + 1);
    for (std::size_t k = 0; k < f.size(); ++k) {
        const auto& s = traj.states[k * f.stride];
        const auto& r = f.rows[k];
        EXPECT_EQ(r.range, s.range);
        EXPECT_EQ(r.los, s.los);
        EXPECT_DOUBLE_EQ(r.los_rate, sim::relative_kinematics(s, traj.config.aircraft.speed).los_rate);
        EXPECT_EQ(r.speed_A, traj.config.aircraft.speed);
        EXPECT_EQ(r.theta_A, s.theta_A);
        EXPECT_EQ(r.accel_A, s.accel_A);
    }
}

TEST(Features, FixedFieldOrder) {
    FeatureRow r{0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
    const auto v = r.values();
    ASSERT_EQ(v.size(), 6u);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(v[i], static_cast<double>(i + 1));
    EXPECT_STREQ(kFeatureNames[0], "R");
    EXPECT_STREQ(kFeatureNames[1], "q");
    EXPECT_STREQ(kFeatureNames[2], "q_dot");
    EXPECT_STREQ(kFeatureNames[3], "V_A");
    EXPECT_STREQ(kFeatureNames[4], "theta_A");
    EXPECT_STREQ(kFeatureNames[5], "a_A");
}

TEST(Features, NoisyPipelineDifferencesMeasuredLos) {
    const auto traj = sample_trajectory();
    SensingConfig cfg;
    const auto f = sense(traj, cfg, 11);
    const auto m = sample_measurements(traj, cfg.period, cfg.sigma_range, cfg.sigma_los, 11);
    const auto qd = estimate_los_rate(m, cfg.smoothing_width);
    ASSERT_EQ(f.size(), m.size());
    for (std::size_t k = 0; k < f.size(); ++k) {
        EXPECT_EQ(f.rows[k].range, m.samples[k].range);
        EXPECT_EQ(f.rows[k].los_rate, qd[k]);
    }
}

TEST(Features, GridMismatchRejected) {
    const auto traj = sample_trajectory();
    auto m = sample_measurements(traj, 0.01, 0, 0, 1);
    std::vector<double> short_rate(m.size() - 1, 0.0);
    EXPECT_THROW(build_features(m, short_rate, traj), ConfigError);
    std::vector<double> rate(m.size(), 0.0);
    m.stride = 5;
    EXPECT_THROW(build_features(m, rate, traj), ConfigError);
}

TEST(Features, CsvCarriesSeedMetadata) {
    SensingConfig cfg;
    const auto f = sense(still_trajectory(50, 0.01), cfg, 42);
    std::ostringstream os;
    write_features_csv(os, f, 42);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line.rfind("# seed=42", 0), 0u);
    std::getline(is, line);
    EXPECT_EQ(line, "t,R,q,q_dot,V_A,theta_A,a_A");
}

TEST(SensingConfig, Validation) {
    SensingConfig c;
    c.smoothing_width = 4;
    EXPECT_THROW(c.validate(), ConfigError);
    c.smoothing_width = 5;
    c.sigma_los = -1;
    EXPECT_THROW(c.validate(), ConfigError);
}
