#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pnid/core/errors.hpp"
#include "pnid/core/rng.hpp"
#include "pnid/data/dataset.hpp"
#include "pnid/harness/config.hpp"
#include "pnid/nn/model.hpp"
#include "pnid/nn/train.hpp"
#include "pnid/sim/simulate.hpp"

namespace pnid::harness {

inline std::vector<nn::LabeledSequence> as_sequences(const std::vector<data::Sample>& samples) {
    std::vector<nn::LabeledSequence> out(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        out[i].seq = {samples[i].values.data(), samples[i].length};
        out[i].target = samples[i].label;
    }
    return out;
}

/// A fresh model for `ds`; IMMM regime banks span the training labels.
inline nn::Model fresh_model(const ExperimentConfig& cfg, const data::Dataset& ds, nn::HeadKind head) {
    nn::Architecture a = cfg.arch;
    a.head = head;
    a.regimes.clear();
    a.window = ds.config.window;
    return nn::make_model(a, ds.stats, derive_seed(cfg.train.seed, {0x1417ULL}));
}

struct TrainedModel {
    nn::Model model;
    nn::TrainHistory history;
};

inline TrainedModel train_model(const ExperimentConfig& cfg, const data::Dataset& ds, nn::HeadKind head,
                                const std::function<void(std::size_t, double)>& on_step = {}) {
    TrainedModel out{fresh_model(cfg, ds, head), {}};
    const auto seqs = as_sequences(ds.train);
    nn::TrainConfig tc = cfg.train;
    tc.workers = cfg.workers;
    out.history = cfg.single_precision ? nn::train<float>(out.model, seqs, tc, on_step)
                                       : nn::train<double>(out.model, seqs, tc, on_step);
    return out;
}

struct TrainingCurve {
    nn::HeadKind head = nn::HeadKind::Immm;
    std::vector<double> loss;        // batch loss per iteration
    nn::MseSummary initial;          // validation split, before training
    nn::MseSummary final;            // validation split, after training
};

struct TrainingComparison {
    TrainingCurve immm, linear;
    nn::Model immm_model, linear_model;
};

/// Trains both heads on the same backbone initialization, data order and schedule.
inline TrainingComparison compare_training(const ExperimentConfig& cfg, const data::Dataset& ds) {
    const auto& eval_set = ds.validation.empty() ? ds.train : ds.validation;
    const auto val = as_sequences(eval_set);
    TrainingComparison out;
    for (auto head : {nn::HeadKind::Immm, nn::HeadKind::Linear}) {
        TrainingCurve curve;
        curve.head = head;
        curve.initial = nn::evaluate_mse(fresh_model(cfg, ds, head), val);
        auto tm = train_model(cfg, ds, head);
        curve.loss = std::move(tm.history.loss);
        curve.final = nn::evaluate_mse(tm.model, val);
        (head == nn::HeadKind::Immm ? out.immm_model : out.linear_model) = std::move(tm.model);
        (head == nn::HeadKind::Immm ? out.immm : out.linear) = std::move(curve);
    }
    return out;
}

// ---- evaluation ---------------------------------------------------------------------

struct EvalRow {
    std::uint64_t trajectory = 0;
    std::size_t cell = 0;  // grid cell or sweep point index, 0 otherwise
    std::uint32_t end = 0;
    std::uint32_t length = 0;
    std::array<double, 2> truth{};        // N, tau (physical)
    std::array<double, 2> estimate{};     // N_hat, tau_hat (physical)
    std::array<double, 2> truth_norm{};
    std::array<double, 2> estimate_norm{};
};

struct MseBlock {
    std::size_t count = 0;
    std::array<double, 2> normalized{};  // per output, normalized label units
    std::array<double, 2> physical{};    // per output, physical units
    double combined = 0.0;               // mean of the two normalized MSEs

    static MseBlock of(const std::vector<EvalRow>& rows, std::size_t begin, std::size_t end) {
        MseBlock b;
        for (std::size_t i = begin; i < end; ++i) {
            const auto& r = rows[i];
            for (std::size_t k = 0; k < 2; ++k) {
                const double dn = r.estimate_norm[k] - r.truth_norm[k];
                const double dp = r.estimate[k] - r.truth[k];
                b.normalized[k] += dn * dn;
                b.physical[k] += dp * dp;
            }
            ++b.count;
        }
        if (b.count > 0)
            for (std::size_t k = 0; k < 2; ++k) {
                b.normalized[k] /= static_cast<double>(b.count);
                b.physical[k] /= static_cast<double>(b.count);
            }
        b.combined = (b.normalized[0] + b.normalized[1]) / 2.0;
        return b;
    }
};

struct EvalReport {
    std::string name;
    std::vector<EvalRow> rows;
    MseBlock mse;
    std::size_t trajectories = 0;
    std::vector<std::string> log;
};

/// Scenario settings shared by the evaluation protocols.
struct EvalSetup {
    sim::EngagementConfig base;
    sensing::SensingConfig sensing;
    std::size_t windows_per_run = 20;
    std::size_t min_length = 10;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    std::vector<std::uint64_t> excluded;  // training trajectory ids

    static EvalSetup from(const ExperimentConfig& cfg, const data::Dataset* training = nullptr) {
        EvalSetup s;
        s.base = cfg.dataset.base;
        s.sensing = cfg.eval.sensing;
        s.windows_per_run = cfg.eval.windows_per_run;
        s.min_length = cfg.dataset.min_length;
        s.seed = cfg.eval.seed;
        s.workers = cfg.workers;
        if (training) s.excluded = training->ids(data::Split::Train);
        return s;
    }
};

namespace detail {

enum EvalStream : std::uint64_t { kEvalLhs = 101, kEvalNoise, kEvalWindows, kGridCell, kSweep };

struct RunOutcome {
    std::vector<EvalRow> rows;
    std::string error;
};

}  // namespace detail

/// Simulates, senses and evaluates every scenario; scenario i uses noise and window
/// streams derived from (seed, stream_key, i), so results do not depend on `workers`.
inline EvalReport evaluate_scenarios(const nn::Model& model, const std::vector<data::Scenario>& scenarios,
                                     const EvalSetup& setup, const std::string& name, std::size_t cell = 0,
                                     std::uint64_t stream_key = 0) {
    EvalReport rep;
    rep.name = name;
    std::vector<std::uint64_t> excluded = setup.excluded;
    std::sort(excluded.begin(), excluded.end());
    std::vector<detail::RunOutcome> runs(scenarios.size());
    const std::size_t K = model.arch.window;

    data::parallel_for(scenarios.size(), setup.workers, [&](std::size_t i) {
        const auto& sc = scenarios[i];
        const std::uint64_t id = data::scenario_id(sc);
        if (std::binary_search(excluded.begin(), excluded.end(), id))
            throw Error("evaluation scenario coincides with a training trajectory");
        auto& out = runs[i];
        try {
            const auto traj = sim::simulate(data::make_engagement(sc, setup.base));
            const auto feats =
                sensing::sense(traj, setup.sensing, derive_seed(setup.seed, {detail::kEvalNoise, stream_key, i}));
            Rng wr(derive_seed(setup.seed, {detail::kEvalWindows, stream_key, i}));
            const auto draw = data::extract_windows(feats.size(), K, setup.windows_per_run, setup.min_length, wr);
            if (draw.windows.empty()) {
                out.error = "run " + std::to_string(i) + ": " + draw.skipped;
                return;
            }
            std::vector<std::vector<double>> values;
            std::vector<nn::SequenceRef> refs;
            values.reserve(draw.windows.size());
            for (const auto& w : draw.windows) {
                values.push_back(data::window_values(feats, w));
                data::normalize_window(values.back(), model.stats);
                refs.push_back({values.back().data(), w.length});
            }
            const auto est = nn::model_forward_batch<double>(model, refs);
            const std::array<double, 2> truth{sc.gain, sc.tau};
            const auto truth_norm = model.stats.normalize_labels(truth);
            for (std::size_t k = 0; k < est.size(); ++k) {
                EvalRow r;
                r.trajectory = id;
                r.cell = cell;
                r.end = static_cast<std::uint32_t>(draw.windows[k].end);
                r.length = static_cast<std::uint32_t>(draw.windows[k].length);
                r.truth = truth;
                r.truth_norm = truth_norm;
                r.estimate = {est[k].gain, est[k].tau};
                r.estimate_norm = est[k].normalized;
                out.rows.push_back(r);
            }
        } catch (const DegenerateGeometryError& e) {
            out.error = "run " + std::to_string(i) + ": " + e.what();
        } catch (const NumericalBlowupError& e) {
            out.error = "run " + std::to_string(i) + ": " + e.what();
        }
    });

    for (auto& r : runs) {
        if (!r.error.empty()) rep.log.push_back(r.error);
        if (!r.rows.empty()) ++rep.trajectories;
        rep.rows.insert(rep.rows.end(), r.rows.begin(), r.rows.end());
    }
    rep.mse = MseBlock::of(rep.rows, 0, rep.rows.size());
    return rep;
}

/// Scenarios drawn by LHS over the box, disjoint from the training trajectories.
inline EvalReport monte_carlo_eval(const nn::Model& model, const data::ParamBox& box, std::size_t n_runs,
                                   const EvalSetup& setup) {
    if (n_runs == 0) {
        EvalReport rep;
        rep.name = "monte_carlo";
        return rep;
    }
    const auto scenarios = data::lhs_sample(box, n_runs, derive_seed(setup.seed, {detail::kEvalLhs}));
    return evaluate_scenarios(model, scenarios, setup, "monte_carlo");
}

struct GridCell {
    double gain = 0.0;
    double tau = 0.0;
    MseBlock mse;
};

struct GridReport {
    std::vector<double> gains, taus;
    std::vector<GridCell> cells;  // row-major: gain outer, tau inner
    EvalReport all;
};

/// (N, tau) fixed per cell, every other parameter drawn by LHS over the box.
inline GridReport grid_eval(const nn::Model& model, const data::ParamBox& box, const std::vector<double>& gains,
                            const std::vector<double>& taus, std::size_t runs_per_cell, const EvalSetup& setup) {
    GridReport g;
    g.gains = gains;
    g.taus = taus;
    g.all.name = "grid";
    std::size_t cell = 0;
    for (double n : gains)
        for (double t : taus) {
            auto sc = runs_per_cell == 0
                          ? std::vector<data::Scenario>{}
                          : data::lhs_sample(box, runs_per_cell, derive_seed(setup.seed, {detail::kGridCell, cell}));
            for (auto& s : sc) {
                s.gain = n;
                s.tau = t;
            }
            auto rep = evaluate_scenarios(model, sc, setup, "grid", cell, detail::kGridCell + 1000 * (cell + 1));
            g.cells.push_back({n, t, rep.mse});
            g.all.rows.insert(g.all.rows.end(), rep.rows.begin(), rep.rows.end());
            g.all.log.insert(g.all.log.end(), rep.log.begin(), rep.log.end());
            g.all.trajectories += rep.trajectories;
            ++cell;
        }
    g.all.mse = MseBlock::of(g.all.rows, 0, g.all.rows.size());
    return g;
}

struct SweepPoint {
    double x = 0.0;
    MseBlock mse;
};

struct SweepCurve {
    std::string variable;
    std::vector<SweepPoint> points;  // ascending x
};

/// Re-simulates one scenario set at each drag scale; the scenarios and noise streams are
/// shared across points so only the drag changes.
inline SweepCurve drag_sweep_eval(const nn::Model& model, const data::ParamBox& box, std::vector<double> deltas,
                                  std::size_t runs_per_point, const EvalSetup& setup) {
    std::sort(deltas.begin(), deltas.end());
    SweepCurve curve;
    curve.variable = "delta_d";
    const auto scenarios = runs_per_point == 0
                               ? std::vector<data::Scenario>{}
                               : data::lhs_sample(box, runs_per_point, derive_seed(setup.seed, {detail::kSweep}));
    for (double d : deltas) {
        if (!(d > 0)) throw ConfigError("drag scale must be positive");
        EvalSetup s = setup;
        s.base.missile.drag_scale = d;
        const auto rep = evaluate_scenarios(model, scenarios, s, "drag_sweep", 0, detail::kSweep);
        curve.points.push_back({d, rep.mse});
    }
    return curve;
}

// ---- sample run ---------------------------------------------------------------------

struct SampleTick {
    double t = 0.0;
    std::size_t length = 0;
    double gain = 0.0;
    double tau = 0.0;
    std::vector<std::vector<double>> weights;  // IMMM regime weights per group
};

struct SampleRun {
    data::Scenario scenario;
    sim::Termination termination = sim::Termination::MinRange;
    std::vector<SampleTick> ticks;
};

/// Replays one engagement, estimating at every radar tick from the window ending there.
inline SampleRun sample_run(const nn::Model& model, const data::Scenario& sc, const sim::EngagementConfig& base,
                            const sensing::SensingConfig& sensing, std::uint64_t seed) {
    SampleRun out;
    out.scenario = sc;
    const auto traj = sim::simulate(data::make_engagement(sc, base));
    out.termination = traj.termination;
    const auto feats = sensing::sense(traj, sensing, seed);
    std::vector<std::vector<double>> values(feats.size());
    std::vector<nn::SequenceRef> refs(feats.size());
    for (std::size_t i = 0; i < feats.size(); ++i) {
        const auto w = data::window_ending_at(i, model.arch.window);
        values[i] = data::window_values(feats, w);
        data::normalize_window(values[i], model.stats);
        refs[i] = {values[i].data(), w.length};
    }
    const auto est = nn::model_forward_batch<double>(model, refs);
    for (std::size_t i = 0; i < feats.size(); ++i) {
        SampleTick tk;
        tk.t = feats.rows[i].t;
        tk.length = refs[i].length;
        tk.gain = est[i].gain;
        tk.tau = est[i].tau;
        tk.weights = est[i].weights;
        out.ticks.push_back(std::move(tk));
    }
    return out;
}

}  // namespace pnid::harness
