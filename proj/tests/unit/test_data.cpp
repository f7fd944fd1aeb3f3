#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "pnid/data/dataset.hpp"
#include "pnid/data/dataset_io.hpp"

using namespace pnid;
using namespace pnid::data;

namespace {

std::filesystem::path scratch(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("pnid_test_data_" + name);
    std::filesystem::remove_all(p);
    return p;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

DatasetConfig small_config(std::size_t trajectories = 20) {
    DatasetConfig c;
    c.trajectories = trajectories;
    c.windows_per_trajectory = 20;
    c.seed = 17;
    return c;
}

}  // namespace

TEST(Lhs, EveryStratumHitOncePerDimension) {
    for (std::size_t n : {4u, 100u, 1000u}) {
        const auto pts = lhs_unit(n, 6, 1000 + n);
        ASSERT_EQ(pts.size(), n);
        for (std::size_t d = 0; d < 6; ++d) {
            std::vector<int> hits(n, 0);
            for (const auto& p : pts) {
                ASSERT_GE(p[d], 0.0);
                ASSERT_LT(p[d], 1.0);
                ++hits[lhs_stratum(p[d], n)];
            }
            for (std::size_t k = 0; k < n; ++k) ASSERT_EQ(hits[k], 1) << "n=" << n << " d=" << d << " k=" << k;
        }
    }
}

TEST(Lhs, MeanNearCenter) {
    const auto pts = lhs_unit(1000, 6, 3);
    for (std::size_t d = 0; d < 6; ++d) {
        double m = 0;
        for (const auto& p : pts) m += p[d];
        EXPECT_NEAR(m / 1000.0, 0.5, 0.01);
    }
}

TEST(Lhs, DimensionsAreNotAligned) {
    const auto pts = lhs_unit(100, 6, 5);
    std::size_t same = 0;
    for (const auto& p : pts) same += lhs_stratum(p[0], 100) == lhs_stratum(p[1], 100);
    EXPECT_LT(same, 10u);
}

TEST(Lhs, SeedDeterminism) {
    EXPECT_EQ(lhs_unit(50, 6, 9), lhs_unit(50, 6, 9));
    EXPECT_NE(lhs_unit(50, 6, 9), lhs_unit(50, 6, 10));
    EXPECT_THROW(lhs_unit(0, 6, 1), ConfigError);
}

TEST(Lhs, PhysicalScenariosCoverBox) {
    const ParamBox box;
    const auto sc = lhs_sample(box, 100, 11);
    std::set<std::size_t> gain_strata;
    for (const auto& s : sc) {
        EXPECT_TRUE(box.range0.contains(s.range0));
        EXPECT_TRUE(box.gain.contains(s.gain));
        EXPECT_TRUE(box.tau.contains(s.tau));
        EXPECT_GE(s.speed_M0, 2.0 * kSpeedOfSound);
        EXPECT_LE(s.speed_M0, 2.5 * kSpeedOfSound);
        EXPECT_GE(s.los0, 0.0);
        EXPECT_LE(s.los0, 5.0 * kPi / 180.0);
        gain_strata.insert(lhs_stratum((s.gain - 2.5) / 3.0, 100));
    }
    EXPECT_EQ(gain_strata.size(), 100u);
}

TEST(Lhs, ScenarioIdSensitiveToEveryParameter) {
    Scenario a;
    const auto base = scenario_id(a);
    EXPECT_EQ(scenario_id(a), base);
    for (double Scenario::*f : {&Scenario::range0, &Scenario::los0, &Scenario::speed_A, &Scenario::speed_M0,
                                &Scenario::gain, &Scenario::tau, &Scenario::maneuver_phase}) {
        Scenario b = a;
        b.*f = std::nextafter(b.*f, 1e9);
        EXPECT_NE(scenario_id(b), base);
    }
}

TEST(Windows, SecondPassStratifiesEndTicks) {
    for (std::size_t ticks : {50u, 150u, 1013u}) {
        for (std::size_t n : {4u, 20u, 37u}) {
            Rng rng(ticks * 31 + n);
            const auto draw = extract_windows(ticks, 100, n, 10, rng);
            ASSERT_EQ(draw.windows.size(), n);
            const std::size_t span = ticks - 9;
            std::vector<int> hits(n, 0);
            for (std::size_t k = 0; k < n; ++k) {
                const auto& w = draw.windows[k];
                ASSERT_GE(w.end, 9u);
                ASSERT_LT(w.end, ticks);
                if (k) {
                    ASSERT_GT(w.end, draw.windows[k - 1].end);
                }
                // block of the end tick within [l_min - 1, ticks - 1]
                const std::size_t rel = w.end - 9;
                std::size_t b = 0;
                while ((b + 1) * span / n <= rel) ++b;
                ++hits[b];
            }
            for (int h : hits) ASSERT_EQ(h, 1) << ticks << " " << n;
        }
    }
}

TEST(Windows, LengthsFollowAvailableHistory) {
    Rng rng(1);
    const auto draw = extract_windows(150, 100, 20, 10, rng);
    for (const auto& w : draw.windows) {
        EXPECT_EQ(w.length, std::min<std::size_t>(100, w.end + 1));
        EXPECT_GE(w.length, 10u);
        EXPECT_EQ(w.first() + w.length - 1, w.end);
    }
    Rng rng2(2);
    const auto short_draw = extract_windows(50, 100, 20, 10, rng2);
    for (const auto& w : short_draw.windows) EXPECT_EQ(w.first(), 0u);
}

TEST(Windows, MoreWindowsThanTicksTakesEach) {
    Rng rng(3);
    const auto draw = extract_windows(15, 100, 20, 10, rng);
    ASSERT_EQ(draw.windows.size(), 6u);
    for (std::size_t k = 0; k < 6; ++k) EXPECT_EQ(draw.windows[k].end, 9 + k);
}

TEST(Windows, TooShortSeriesIsSkipped) {
    Rng rng(4);
    const auto draw = extract_windows(9, 100, 20, 10, rng);
    EXPECT_TRUE(draw.windows.empty());
    EXPECT_FALSE(draw.skipped.empty());
    EXPECT_THROW(extract_windows(100, 5, 20, 10, rng), ConfigError);
    EXPECT_THROW(extract_windows(100, 5, 20, 0, rng), ConfigError);
}

TEST(Windows, ValuesAreRowMajorFeatureRows) {
    sensing::FeatureSeries f;
    for (int i = 0; i < 30; ++i) f.rows.push_back({0.01 * i, 1.0 * i, 2.0 * i, 3.0 * i, 4.0 * i, 5.0 * i, 6.0 * i});
    const auto v = window_values(f, window_ending_at(20, 5));
    ASSERT_EQ(v.size(), 30u);
    EXPECT_EQ(v[0], 16.0);
    EXPECT_EQ(v[5], 6.0 * 16);
    EXPECT_EQ(v[29], 6.0 * 20);
    EXPECT_THROW(window_values(f, window_ending_at(30, 5)), ConfigError);
}

TEST(Normalize, EndpointsAndMidpoint) {
    const Range r{2.5, 5.5};
    EXPECT_EQ(normalize(2.5, r), 0.0);
    EXPECT_EQ(normalize(5.5, r), 1.0);
    EXPECT_EQ(normalize(4.0, r), 0.5);
    EXPECT_EQ(denormalize(0.5, r), 4.0);
}

TEST(Normalize, RoundTrip) {
    Rng rng(8);
    for (int i = 0; i < 10000; ++i) {
        const double lo = 2000.0 * uniform01(rng) - 1000.0;
        const Range r{lo, lo + 0.001 + 100.0 * uniform01(rng)};
        const double v = r.min + 3.0 * (uniform01(rng) - 0.3) * r.span();
        ASSERT_NEAR(denormalize(normalize(v, r), r), v, 1e-12 * std::max(1.0, std::abs(v)) + 1e-9 * r.span());
    }
}

TEST(Normalize, DegenerateRangeRejected) {
    EXPECT_THROW(normalize(1.0, Range{3.0, 3.0}), ConfigError);
    EXPECT_THROW(denormalize(0.5, Range{}), ConfigError);
    NormStats s;
    EXPECT_THROW(s.check(), ConfigError);
}

class DatasetFixture : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        cfg_ = new DatasetConfig(small_config(200));
        ds_ = new Dataset(generate_dataset(*cfg_));
    }
    static void TearDownTestSuite() {
        delete ds_;
        delete cfg_;
    }
    static DatasetConfig* cfg_;
    static Dataset* ds_;
};
DatasetConfig* DatasetFixture::cfg_ = nullptr;
Dataset* DatasetFixture::ds_ = nullptr;

TEST_F(DatasetFixture, SizesAndSplitByTrajectory) {
    const auto& ds = *ds_;
    ASSERT_EQ(ds.trajectories.size(), 200u);
    EXPECT_EQ(ds.train.size() + ds.validation.size(), 4000u);
    EXPECT_EQ(ds.ids(Split::Train).size(), 180u);
    EXPECT_EQ(ds.ids(Split::Validation).size(), 20u);
    EXPECT_TRUE(disjoint(ds.ids(Split::Train), ds.ids(Split::Validation)));
    const auto train_ids = ds.ids(Split::Train), val_ids = ds.ids(Split::Validation);
    const std::set<std::uint64_t> tr(train_ids.begin(), train_ids.end()), va(val_ids.begin(), val_ids.end());
    for (const auto& s : ds.train) ASSERT_TRUE(tr.count(s.trajectory));
    for (const auto& s : ds.validation) ASSERT_TRUE(va.count(s.trajectory));
}

TEST_F(DatasetFixture, WindowsPerTrajectory) {
    std::map<std::uint64_t, std::set<std::uint32_t>> ends;
    for (const auto* part : {&ds_->train, &ds_->validation})
        for (const auto& s : *part) {
            ASSERT_GE(s.length, cfg_->min_length);
            ASSERT_LE(s.length, cfg_->window);
            ASSERT_EQ(s.values.size(), std::size_t{s.length} * kFeatures);
            ASSERT_TRUE(ends[s.trajectory].insert(s.end).second) << "repeated end tick";
        }
    for (const auto& t : ds_->trajectories) EXPECT_EQ(ends[t.id].size(), t.windows);
}

TEST_F(DatasetFixture, StatsComeFromTrainingSplitOnly) {
    const auto& ds = *ds_;
    double lo[2] = {INFINITY, INFINITY}, hi[2] = {-INFINITY, -INFINITY};
    for (const auto& t : ds.trajectories) {
        if (t.split != Split::Train) continue;
        lo[0] = std::min(lo[0], t.scenario.gain);
        hi[0] = std::max(hi[0], t.scenario.gain);
        lo[1] = std::min(lo[1], t.scenario.tau);
        hi[1] = std::max(hi[1], t.scenario.tau);
    }
    for (int k = 0; k < 2; ++k) {
        EXPECT_EQ(ds.stats.labels[k].min, lo[k]);
        EXPECT_EQ(ds.stats.labels[k].max, hi[k]);
    }
    double zmin[2] = {INFINITY, INFINITY}, zmax[2] = {-INFINITY, -INFINITY};
    std::array<double, kFeatures> fmin, fmax;
    fmin.fill(INFINITY);
    fmax.fill(-INFINITY);
    for (const auto& s : ds.train) {
        for (int k = 0; k < 2; ++k) {
            zmin[k] = std::min(zmin[k], s.label[k]);
            zmax[k] = std::max(zmax[k], s.label[k]);
        }
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            fmin[i % kFeatures] = std::min(fmin[i % kFeatures], s.values[i]);
            fmax[i % kFeatures] = std::max(fmax[i % kFeatures], s.values[i]);
        }
    }
    for (int k = 0; k < 2; ++k) {
        EXPECT_EQ(zmin[k], 0.0);
        EXPECT_EQ(zmax[k], 1.0);
    }
    for (std::size_t f = 0; f < kFeatures; ++f) {
        EXPECT_NEAR(fmin[f], 0.0, 1e-12) << f;
        EXPECT_NEAR(fmax[f], 1.0, 1e-12) << f;
    }
}

TEST_F(DatasetFixture, InputsCarryOnlySensedFeatures) {
    const auto p = scratch("manifest");
    save_dataset(*ds_, p);
    const auto m = nlohmann::json::parse(slurp(p / kManifestFile));
    EXPECT_EQ(m.at("features"), nlohmann::json({"R", "q", "q_dot", "V_A", "theta_A", "a_A"}));
    EXPECT_EQ(m.at("labels"), nlohmann::json({"N", "tau"}));
    // identical engagements that differ only in the unknowns give identical first rows
    Scenario a = ds_->trajectories[0].scenario, b = a;
    b.gain = 3.0;
    b.tau = 0.15;
    const auto fa = sensing::sense(sim::simulate(make_engagement(a, cfg_->base)), cfg_->sensing, 1);
    const auto fb = sensing::sense(sim::simulate(make_engagement(b, cfg_->base)), cfg_->sensing, 1);
    EXPECT_EQ(fa.rows[0].values(), fb.rows[0].values());
    std::filesystem::remove_all(p);
}

TEST_F(DatasetFixture, SaveLoadRoundTrip) {
    const auto p = scratch("roundtrip");
    save_dataset(*ds_, p);
    const Dataset back = load_dataset(p);
    EXPECT_EQ(back.stats, ds_->stats);
    EXPECT_EQ(back.train, ds_->train);
    EXPECT_EQ(back.validation, ds_->validation);
    EXPECT_EQ(back.trajectories.size(), ds_->trajectories.size());
    const auto q = scratch("roundtrip2");
    save_dataset(back, q);
    EXPECT_EQ(slurp(p / kSamplesFile), slurp(q / kSamplesFile));
    EXPECT_EQ(slurp(p / kManifestFile), slurp(q / kManifestFile));
    std::filesystem::remove_all(p);
    std::filesystem::remove_all(q);
}

TEST_F(DatasetFixture, TamperedSamplesRejected) {
    const auto p = scratch("tamper");
    save_dataset(*ds_, p);
    std::string block = slurp(p / kSamplesFile);
    block[block.size() / 2] ^= 0x01;
    {
        std::ofstream os(p / kSamplesFile, std::ios::binary);
        os << block;
    }
    EXPECT_THROW(load_dataset(p), FormatError);
    std::filesystem::remove_all(p);
    EXPECT_THROW(load_dataset(p), Error);
}

TEST(Dataset, ByteIdenticalAcrossRunsAndWorkers) {
    const auto cfg = small_config(24);
    const auto a = scratch("w1"), b = scratch("w3"), c = scratch("w1b");
    save_dataset(generate_dataset(cfg, 1), a);
    save_dataset(generate_dataset(cfg, 3), b);
    save_dataset(generate_dataset(cfg, 1), c);
    for (const char* f : {kSamplesFile, kManifestFile}) {
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
        EXPECT_EQ(slurp(a / f), slurp(c / f)) << f;
    }
    for (const auto& p : {a, b, c}) std::filesystem::remove_all(p);
}

TEST(Dataset, SeedChangesContent) {
    auto c1 = small_config(10), c2 = c1;
    c2.seed = 18;
    const auto d1 = generate_dataset(c1), d2 = generate_dataset(c2);
    EXPECT_TRUE(disjoint(d1.ids(Split::Train), d2.ids(Split::Train)));
}

TEST(Dataset, ConfigValidation) {
    auto c = small_config();
    c.min_length = 101;
    EXPECT_THROW(generate_dataset(c), ConfigError);
    c = small_config();
    c.trajectories = 0;
    EXPECT_THROW(generate_dataset(c), ConfigError);
    c = small_config();
    c.train_fraction = 0.0;
    EXPECT_THROW(generate_dataset(c), ConfigError);
}

TEST(Dataset, ConfigJsonRoundTrip) {
    auto c = small_config(33);
    c.box.gain = {3.0, 4.0};
    c.sensing.sigma_range = 2.0;
    c.randomize_phase = true;
    const nlohmann::json j = c;
    DatasetConfig back = j.get<DatasetConfig>();
    EXPECT_EQ(nlohmann::json(back), j);
    EXPECT_EQ(back.trajectories, 33u);
    EXPECT_EQ(back.box.gain.hi, 4.0);
}

TEST(Dataset, DisjointHelper) {
    EXPECT_TRUE(disjoint({1, 2, 3}, {4, 5}));
    EXPECT_FALSE(disjoint({1, 2, 3}, {3}));
    EXPECT_TRUE(disjoint({}, {1}));
}
