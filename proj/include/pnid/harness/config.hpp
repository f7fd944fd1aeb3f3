#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pnid/core/errors.hpp"
#include "pnid/data/dataset_io.hpp"
#include "pnid/nn/train.hpp"

namespace pnid::harness {

struct EvalConfig {
    sensing::SensingConfig sensing;  // radar noise on by default
    std::size_t mc_runs = 600;
    std::size_t windows_per_run = 20;
    std::vector<double> grid_gain{2.5, 4.0, 5.5};
    std::vector<double> grid_tau{0.1, 0.25, 0.4};
    std::size_t grid_runs = 20;
    std::vector<double> drag_scales{0.5, 1.0, 2.0};
    std::size_t drag_runs = 100;
    data::Scenario sample = [] {
        data::Scenario s;
        s.range0 = 7000.0;
        s.los0 = 0.0;
        s.speed_A = 0.9 * kSpeedOfSound;
        s.gain = 5.0;
        s.tau = 0.30;
        return s;
    }();
    std::uint64_t seed = 2024;
};

/// Everything one experiment needs; presets fill it, a config file overrides it.
struct ExperimentConfig {
    std::string preset = "desk";
    data::DatasetConfig dataset;
    nn::Architecture arch;
    nn::TrainConfig train;
    bool single_precision = true;  // train in float, evaluate in double
    EvalConfig eval;
    std::size_t workers = 1;

    void validate() const {
        dataset.validate();
        nn::Architecture a = arch;
        if (a.head == nn::HeadKind::Immm && a.regimes.empty())
            a.regimes = {nn::linspace_regimes(dataset.box.gain.lo, dataset.box.gain.hi, 5),
                         nn::linspace_regimes(dataset.box.tau.lo, dataset.box.tau.hi, 5)};
        a.validate();
        eval.sensing.validate();
        if (train.batch == 0) throw ConfigError("training batch must be positive");
        if (arch.window != dataset.window) throw ConfigError("model window K must equal the dataset K");
        if (eval.grid_gain.empty() || eval.grid_tau.empty()) throw ConfigError("grid axes must be non-empty");
    }
};

/// Named presets. "desk" shrinks every count to laptop scale; "paper" is the full recipe
/// (3 x 96 GRU, batch 3000, 100000 iterations, 6000 Monte Carlo runs, 11 x 11 grid).
inline ExperimentConfig make_preset(const std::string& name) {
    ExperimentConfig c;
    c.preset = name;
    c.arch.head = nn::HeadKind::Immm;
    if (name == "desk") {
        c.dataset.trajectories = 1000;
        c.dataset.windows_per_trajectory = 20;
        c.arch.input_width = 32;
        c.arch.hidden = 32;
        c.train.batch = 64;
        c.train.iterations = 4000;
    } else if (name == "paper") {
        c.dataset.trajectories = 20000;
        c.dataset.windows_per_trajectory = 20;
        c.arch.input_width = 96;
        c.arch.hidden = 96;
        c.train.batch = 3000;
        c.train.iterations = 100000;
        c.train.shard = 100;
        c.single_precision = false;
        c.eval.mc_runs = 6000;
        c.eval.grid_gain.clear();
        c.eval.grid_tau.clear();
        for (int i = 0; i <= 10; ++i) {
            c.eval.grid_gain.push_back(2.5 + 0.3 * i);
            c.eval.grid_tau.push_back(0.1 + 0.03 * i);
        }
        c.eval.grid_runs = 150;
        c.eval.drag_scales = {0.5, 0.75, 1.0, 1.25, 1.5, 2.0};
        c.eval.drag_runs = 300;
    } else {
        throw ConfigError("unknown preset '" + name + "' (expected desk or paper)");
    }
    c.arch.layers = 3;
    c.arch.window = c.dataset.window;
    return c;
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
    const auto& e = c.eval;
    return {{"preset", c.preset},
            {"dataset", c.dataset},
            {"model",
             {{"input_width", c.arch.input_width},
              {"hidden", c.arch.hidden},
              {"layers", c.arch.layers},
              {"K", c.arch.window},
              {"head", nn::to_string(c.arch.head)}}},
            {"train",
             {{"batch", c.train.batch},
              {"iterations", c.train.iterations},
              {"shard", c.train.shard},
              {"seed", c.train.seed},
              {"base_rate", c.train.adam.base_rate},
              {"decay", c.train.adam.decay},
              {"decay_every", c.train.adam.decay_every},
              {"single_precision", c.single_precision}}},
            {"eval",
             {{"sensing", e.sensing},
              {"mc_runs", e.mc_runs},
              {"windows_per_run", e.windows_per_run},
              {"grid_N", e.grid_gain},
              {"grid_tau", e.grid_tau},
              {"grid_runs", e.grid_runs},
              {"drag_scales", e.drag_scales},
              {"drag_runs", e.drag_runs},
              {"sample", data::scenario_to_json(e.sample)},
              {"seed", e.seed}}},
            {"workers", c.workers}};
}

/// Applies the keys present in `j` on top of `c`.
inline void apply_json(const nlohmann::json& j, ExperimentConfig& c) {
    try {
        if (j.contains("dataset")) data::from_json(j.at("dataset"), c.dataset);
        if (j.contains("model")) {
            const auto& m = j.at("model");
            c.arch.input_width = m.value("input_width", c.arch.input_width);
            c.arch.hidden = m.value("hidden", c.arch.hidden);
            c.arch.layers = m.value("layers", c.arch.layers);
            c.arch.window = m.value("K", c.arch.window);
            if (m.contains("head")) c.arch.head = nn::parse_head(m.at("head").get<std::string>());
        }
        if (j.contains("train")) {
            const auto& t = j.at("train");
            c.train.batch = t.value("batch", c.train.batch);
            c.train.iterations = t.value("iterations", c.train.iterations);
            c.train.shard = t.value("shard", c.train.shard);
            c.train.seed = t.value("seed", c.train.seed);
            c.train.adam.base_rate = t.value("base_rate", c.train.adam.base_rate);
            c.train.adam.decay = t.value("decay", c.train.adam.decay);
            c.train.adam.decay_every = t.value("decay_every", c.train.adam.decay_every);
            c.single_precision = t.value("single_precision", c.single_precision);
        }
        if (j.contains("eval")) {
            const auto& e = j.at("eval");
            if (e.contains("sensing")) sensing::from_json(e.at("sensing"), c.eval.sensing);
            c.eval.mc_runs = e.value("mc_runs", c.eval.mc_runs);
            c.eval.windows_per_run = e.value("windows_per_run", c.eval.windows_per_run);
            c.eval.grid_gain = e.value("grid_N", c.eval.grid_gain);
            c.eval.grid_tau = e.value("grid_tau", c.eval.grid_tau);
            c.eval.grid_runs = e.value("grid_runs", c.eval.grid_runs);
            c.eval.drag_scales = e.value("drag_scales", c.eval.drag_scales);
            c.eval.drag_runs = e.value("drag_runs", c.eval.drag_runs);
            if (e.contains("sample")) c.eval.sample = data::scenario_from_json(e.at("sample"));
            c.eval.seed = e.value("seed", c.eval.seed);
        }
        c.workers = j.value("workers", c.workers);
        if (!(j.contains("model") && j.at("model").contains("K"))) c.arch.window = c.dataset.window;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad experiment config: ") + e.what());
    }
}

/// Preset named in the file (or `fallback`), then the file's overrides. A reproducibility
/// record is accepted too: its "config" member is used.
inline ExperimentConfig load_experiment(const nlohmann::json& file, const std::string& fallback = "desk") {
    const nlohmann::json& j = file.contains("config") && file.at("config").is_object() ? file.at("config") : file;
    ExperimentConfig c = make_preset(j.value("preset", fallback));
    apply_json(j, c);
    return c;
}

}  // namespace pnid::harness
