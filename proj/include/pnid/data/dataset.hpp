#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <iterator>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "pnid/core/errors.hpp"
#include "pnid/core/rng.hpp"
#include "pnid/data/lhs.hpp"
#include "pnid/data/normalize.hpp"
#include "pnid/data/windows.hpp"
#include "pnid/sensing/measurement.hpp"
#include "pnid/sim/simulate.hpp"

namespace pnid::data {

struct DatasetConfig {
    ParamBox box;
    sim::EngagementConfig base;  // every non-randomized engagement setting
    sensing::SensingConfig sensing = [] {
        sensing::SensingConfig s;
        s.noise = false;  // training inputs are clean by default
        return s;
    }();
    std::size_t trajectories = 200;
    std::size_t windows_per_trajectory = 20;
    std::size_t window = 100;     // K
    std::size_t min_length = 10;  // l_min
    double train_fraction = 0.9;
    std::size_t max_retries = 10;
    bool randomize_phase = false;
    std::uint64_t seed = 1;

    void validate() const {
        box.validate();
        base.validate();
        sensing.validate();
        if (trajectories == 0) throw ConfigError("dataset needs at least one trajectory");
        if (windows_per_trajectory == 0) throw ConfigError("windows_per_trajectory must be positive");
        if (window == 0 || min_length == 0 || min_length > window)
            throw ConfigError("need 1 <= l_min <= K");
        if (!(train_fraction > 0.0 && train_fraction <= 1.0))
            throw ConfigError("train_fraction must lie in (0, 1]");
    }
};

/// One window with its normalized label and where it came from.
struct Sample {
    std::uint64_t trajectory = 0;
    std::uint32_t end = 0;     // last tick of the window
    std::uint32_t length = 0;  // l
    std::array<double, kLabels> label{};
    std::vector<double> values;  // length x 6, row-major

    bool operator==(const Sample&) const = default;
};

enum class Split { Train, Validation };

inline const char* to_string(Split s) { return s == Split::Train ? "train" : "validation"; }

struct TrajectoryRecord {
    std::uint64_t id = 0;
    std::size_t slot = 0;
    Split split = Split::Train;
    std::size_t attempts = 1;
    std::size_t ticks = 0;
    std::size_t windows = 0;
    Scenario scenario;
};

struct Dataset {
    DatasetConfig config;
    NormStats stats;
    std::vector<TrajectoryRecord> trajectories;
    std::vector<Sample> train;
    std::vector<Sample> validation;
    std::vector<std::string> log;

    std::vector<std::uint64_t> ids(Split s) const {
        std::vector<std::uint64_t> out;
        for (const auto& t : trajectories)
            if (t.split == s) out.push_back(t.id);
        return out;
    }
};

namespace detail {

enum StreamTag : std::uint64_t { kScenarioLhs = 1, kResample, kNoise, kWindows, kSplit, kPhase };

struct SlotOutcome {
    Scenario scenario;
    std::size_t attempts = 0;
    std::size_t ticks = 0;
    std::vector<WindowSpec> windows;
    std::vector<std::vector<double>> raw;  // physical-unit windows
    std::vector<std::string> log;
};

inline Scenario uniform_scenario(const ParamBox& box, Rng& rng) {
    std::vector<double> u(ParamBox::kDims);
    for (auto& v : u) v = uniform01(rng);
    return scenario_at(box, u);
}

inline SlotOutcome run_slot(const DatasetConfig& cfg, const Scenario& first, std::size_t slot) {
    SlotOutcome out;
    for (std::size_t attempt = 0; attempt <= cfg.max_retries; ++attempt) {
        Scenario sc = first;
        if (attempt > 0) {
            Rng r(derive_seed(cfg.seed, {kResample, slot, attempt}));
            sc = uniform_scenario(cfg.box, r);
        }
        if (cfg.randomize_phase) {
            Rng r(derive_seed(cfg.seed, {kPhase, slot, attempt}));
            sc.maneuver_phase = uniform01(r) / cfg.base.aircraft.maneuver_freq;
        }
        out.attempts = attempt + 1;
        try {
            const auto traj = sim::simulate(make_engagement(sc, cfg.base));
            const auto feats = sensing::sense(traj, cfg.sensing, derive_seed(cfg.seed, {kNoise, slot, attempt}));
            Rng wr(derive_seed(cfg.seed, {kWindows, slot}));
            auto draw = extract_windows(feats.size(), cfg.window, cfg.windows_per_trajectory, cfg.min_length, wr);
            if (draw.windows.empty()) {
                out.log.push_back("slot " + std::to_string(slot) + " attempt " + std::to_string(attempt) +
                                  ": skipped, " + draw.skipped);
                continue;
            }
            out.scenario = sc;
            out.ticks = feats.size();
            out.windows = std::move(draw.windows);
            for (const auto& w : out.windows) out.raw.push_back(window_values(feats, w));
            return out;
        } catch (const Error& e) {
            out.log.push_back("slot " + std::to_string(slot) + " attempt " + std::to_string(attempt) +
                              ": " + e.what());
        }
    }
    throw Error("trajectory slot " + std::to_string(slot) + " failed after " +
                std::to_string(cfg.max_retries) + " retries");
}

}  // namespace detail

/// Runs fn(0..n-1) strided over `workers` threads and rethrows the first failure.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

/// LHS pass 1 over the box, simulate + sense each scenario, LHS pass 2 for window end
/// ticks, split 90/10 by trajectory, min-max statistics from the training split only.
inline Dataset generate_dataset(const DatasetConfig& cfg, std::size_t workers = 1) {
    cfg.validate();
    const auto scenarios = lhs_sample(cfg.box, cfg.trajectories, derive_seed(cfg.seed, {detail::kScenarioLhs}));
    std::vector<detail::SlotOutcome> slots(cfg.trajectories);
    parallel_for(cfg.trajectories, workers,
                 [&](std::size_t i) { slots[i] = detail::run_slot(cfg, scenarios[i], i); });

    Dataset ds;
    ds.config = cfg;
    const std::size_t n = cfg.trajectories;
    auto n_train = static_cast<std::size_t>(std::llround(cfg.train_fraction * static_cast<double>(n)));
    n_train = std::clamp<std::size_t>(n_train, 1, n);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng split_rng(derive_seed(cfg.seed, {detail::kSplit}));
    shuffle(std::span<std::size_t>(order), split_rng);
    std::vector<Split> split(n, Split::Validation);
    for (std::size_t k = 0; k < n_train; ++k) split[order[k]] = Split::Train;

    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = slots[i];
        for (const auto& line : s.log) ds.log.push_back(line);
        TrajectoryRecord rec;
        rec.id = scenario_id(s.scenario);
        rec.slot = i;
        rec.split = split[i];
        rec.attempts = s.attempts;
        rec.ticks = s.ticks;
        rec.windows = s.windows.size();
        rec.scenario = s.scenario;
        ds.trajectories.push_back(rec);
        if (split[i] != Split::Train) continue;
        for (const auto& w : s.raw)
            for (std::size_t r = 0; r + kFeatures <= w.size(); r += kFeatures)
                for (std::size_t f = 0; f < kFeatures; ++f) ds.stats.features[f].include(w[r + f]);
        ds.stats.labels[0].include(s.scenario.gain);
        ds.stats.labels[1].include(s.scenario.tau);
    }
    ds.stats.check();

    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = slots[i];
        auto& dst = split[i] == Split::Train ? ds.train : ds.validation;
        const auto label = ds.stats.normalize_labels({s.scenario.gain, s.scenario.tau});
        for (std::size_t k = 0; k < s.windows.size(); ++k) {
            Sample smp;
            smp.trajectory = ds.trajectories[i].id;
            smp.end = static_cast<std::uint32_t>(s.windows[k].end);
            smp.length = static_cast<std::uint32_t>(s.windows[k].length);
            smp.label = label;
            smp.values = s.raw[k];
            normalize_window(smp.values, ds.stats);
            dst.push_back(std::move(smp));
        }
    }
    return ds;
}

/// True when no id appears in both lists.
inline bool disjoint(std::vector<std::uint64_t> a, std::vector<std::uint64_t> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<std::uint64_t> both;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
    return both.empty();
}

}  // namespace pnid::data
