#pragma once

#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pnid/core/errors.hpp"
#include "pnid/data/dataset_io.hpp"
#include "pnid/harness/config.hpp"
#include "pnid/harness/experiments.hpp"
#include "pnid/harness/report.hpp"
#include "pnid/ident/analytic.hpp"
#include "pnid/nn/checkpoint.hpp"
#include "pnid/sim/io.hpp"
#include "pnid/sim/simulate.hpp"

namespace pnid::harness {

namespace fs = std::filesystem;

struct CliOptions {
    std::string config;
    std::string preset = "desk";
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string noise;  // "", "on", "off"
    std::string head = "immm";
    std::string dataset;
    std::string checkpoint;
    std::optional<std::size_t> workers;
    std::optional<std::size_t> iterations;
    std::optional<std::size_t> trajectories;
    std::optional<std::size_t> runs;
    bool csv = false;
};

namespace detail {

inline std::ofstream open_out(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream os(p, std::ios::binary);
    if (!os) throw FormatError("cannot write " + p.string());
    return os;
}

inline bool noise_flag(const std::string& v, bool fallback) {
    if (v.empty()) return fallback;
    return v == "on";
}

inline ExperimentConfig experiment(const CliOptions& o) {
    ExperimentConfig c = make_preset(o.preset);
    if (!o.config.empty()) c = load_experiment(sim::load_json_file(o.config), o.preset);
    if (o.workers) c.workers = *o.workers;
    if (o.iterations) c.train.iterations = *o.iterations;
    if (o.trajectories) c.dataset.trajectories = *o.trajectories;
    if (o.runs) {
        c.eval.mc_runs = *o.runs;
        c.eval.grid_runs = *o.runs;
        c.eval.drag_runs = *o.runs;
    }
    c.arch.head = nn::parse_head(o.head);
    c.validate();
    return c;
}

inline sim::EngagementConfig engagement(const CliOptions& o) {
    sim::EngagementConfig c;
    if (!o.config.empty()) {
        const auto j = sim::load_json_file(o.config);
        try {
            sim::from_json(j.contains("engagement") ? j.at("engagement") : j, c);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("bad engagement config: ") + e.what());
        }
    }
    c.validate();
    return c;
}

inline Reproducibility record(const std::string& command, const std::vector<std::string>& argv,
                              nlohmann::json config) {
    Reproducibility r;
    r.command = command;
    r.argv = argv;
    r.config = std::move(config);
    return r;
}

inline void note_input(Reproducibility& r, const fs::path& p) {
    if (fs::is_directory(p)) {
        const auto m = p / data::kManifestFile;
        r.inputs[m.string()] = file_sha256(m);
    } else {
        r.inputs[p.string()] = file_sha256(p);
    }
}

inline void progress(std::ostream& err, const std::string& what, std::size_t it, std::size_t total, double loss) {
    if ((it + 1) % 500 == 0 || it + 1 == total)
        err << what << ": iteration " << it + 1 << "/" << total << " loss " << loss << '\n';
}

}  // namespace detail

/// Entry point of the `pnid` tool. Returns the process exit status.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
    CLI::App app{"pnid: guidance-parameter identification from radar measurements"};
    app.name("pnid");
    app.require_subcommand(1);
    CliOptions o;
    std::vector<std::string> args(argv, argv + argc);

    auto add_common = [&](CLI::App* s) {
        s->add_option("--config", o.config, "JSON config file (or a reproducibility record)");
        s->add_option("--seed", o.seed, "master seed");
        s->add_option("--out", o.out, "output file or directory")->required();
        s->add_option("--workers", o.workers, "worker threads");
    };
    auto add_experiment = [&](CLI::App* s) {
        add_common(s);
        s->add_option("--preset", o.preset, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
        s->add_option("--noise", o.noise, "radar noise on/off")->check(CLI::IsMember({"on", "off"}));
    };

    auto* sim_cmd = app.add_subcommand("simulate", "simulate one engagement and write its trajectory CSV");
    add_common(sim_cmd);

    auto* analytic_cmd = app.add_subcommand("analytic", "analytic reconstruction and (N, tau) least squares");
    auto* ident_cmd = app.add_subcommand("ident", "identification tools");
    ident_cmd->require_subcommand(1);
    auto* ident_analytic = ident_cmd->add_subcommand("analytic", "same as the top-level analytic command");
    for (auto* s : {analytic_cmd, ident_analytic}) {
        add_common(s);
        s->add_option("--noise", o.noise, "radar noise on/off")->check(CLI::IsMember({"on", "off"}));
    }

    auto* ds_cmd = app.add_subcommand("dataset", "generate a windowed training dataset");
    add_experiment(ds_cmd);
    ds_cmd->add_option("--trajectories", o.trajectories, "number of trajectories");
    ds_cmd->add_flag("--csv", o.csv, "also export samples.csv");

    auto* train_cmd = app.add_subcommand("train", "train one model and write a checkpoint");
    add_experiment(train_cmd);
    train_cmd->add_option("--dataset", o.dataset, "dataset directory")->required();
    train_cmd->add_option("--head", o.head, "immm or linear")->check(CLI::IsMember({"immm", "linear"}));
    train_cmd->add_option("--iterations", o.iterations, "training iterations");

    auto* compare_cmd = app.add_subcommand("compare", "train both heads with identical settings");
    add_experiment(compare_cmd);
    compare_cmd->add_option("--dataset", o.dataset, "dataset directory")->required();
    compare_cmd->add_option("--iterations", o.iterations, "training iterations");

    std::vector<CLI::App*> eval_cmds;
    for (auto [name, help] : {std::pair{"eval", "Monte Carlo evaluation on fresh scenarios"},
                              std::pair{"sample-run", "replay the reference scenario tick by tick"},
                              std::pair{"grid-sweep", "evaluation on an (N, tau) grid"},
                              std::pair{"drag-sweep", "evaluation under scaled drag"}}) {
        auto* s = app.add_subcommand(name, help);
        add_experiment(s);
        s->add_option("--checkpoint", o.checkpoint, "trained checkpoint")->required();
        s->add_option("--dataset", o.dataset, "training dataset (its trajectories are excluded)");
        s->add_option("--runs", o.runs, "runs per experiment point");
        eval_cmds.push_back(s);
    }

    try {
        if (argc <= 1) {
            err << app.help();
            return 2;
        }
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n\n" << app.help();
        return e.get_exit_code() == 0 ? 2 : e.get_exit_code();
    }

    try {
        const fs::path outp(o.out);
        if (sim_cmd->parsed()) {
            const auto cfg = detail::engagement(o);
            const auto traj = sim::simulate(cfg);
            auto os = detail::open_out(outp);
            sim::write_trajectory_csv(os, traj);
            auto rec = detail::record("simulate", args, cfg);
            rec.outputs.push_back(outp.string());
            rec.config["termination"] = sim::to_string(traj.termination);
            write_reproducibility(fs::path(o.out + ".repro.json"), rec);
            out << "termination " << sim::to_string(traj.termination) << ", t = " << traj.flight_time()
                << " s, final R = " << traj.final_state().range << " m\n";
            return 0;
        }
        if (analytic_cmd->parsed() || ident_analytic->parsed()) {
            const auto cfg = detail::engagement(o);
            const auto traj = sim::simulate(cfg);
            sensing::SensingConfig sc;
            sc.noise = detail::noise_flag(o.noise, false);
            const std::uint64_t seed = o.seed.value_or(1);
            const auto feats = sensing::sense(traj, sc, seed);
            const auto rr = sc.noise ? ident::estimate_range_rate(feats) : ident::exact_range_rate(feats, traj);
            fs::create_directories(outp);
            auto rec = detail::record("analytic", args, {{"engagement", cfg}, {"sensing", sc}, {"seed", seed}});
            {
                auto os = detail::open_out(outp / "features.csv");
                sensing::write_features_csv(os, feats, seed);
            }
            const auto pts = ident::reconstruct(feats, rr);
            {
                auto os = detail::open_out(outp / "reconstruction.csv");
                ident::write_reconstruction_csv(os, pts);
            }
            rec.outputs = {"features.csv", "reconstruction.csv"};
            try {
                const auto res = ident::identify(feats, rr);
                auto os = detail::open_out(outp / "solution.csv");
                ident::write_solution_csv(os, res.solution);
                rec.outputs.push_back("solution.csv");
                out << "N_hat " << res.solution.gain << ", tau_hat " << res.solution.tau << '\n';
            } catch (const UnidentifiableError& e) {
                err << "warning: " << e.what() << '\n';
            }
            write_reproducibility(outp / "repro.json", rec);
            return 0;
        }

        ExperimentConfig cfg = detail::experiment(o);
        if (ds_cmd->parsed()) {
            if (o.seed) cfg.dataset.seed = *o.seed;
            cfg.dataset.sensing.noise = detail::noise_flag(o.noise, cfg.dataset.sensing.noise);
            const auto ds = data::generate_dataset(cfg.dataset, cfg.workers);
            data::save_dataset(ds, outp);
            auto rec = detail::record("dataset", args, to_json(cfg));
            rec.outputs = {data::kManifestFile, data::kSamplesFile};
            if (o.csv) {
                auto os = detail::open_out(outp / "samples.csv");
                data::write_samples_csv(os, ds);
                rec.outputs.push_back("samples.csv");
            }
            write_reproducibility(outp / "repro.json", rec);
            for (const auto& line : ds.log) err << line << '\n';
            out << ds.train.size() << " training and " << ds.validation.size() << " validation samples from "
                << ds.trajectories.size() << " trajectories\n";
            return 0;
        }
        if (train_cmd->parsed() || compare_cmd->parsed()) {
            if (o.seed) cfg.train.seed = *o.seed;
            const auto ds = data::load_dataset(o.dataset);
            cfg.dataset = ds.config;
            if (train_cmd->parsed()) {
                const auto tm = train_model(cfg, ds, cfg.arch.head, [&](std::size_t it, double loss) {
                    detail::progress(err, "train", it, cfg.train.iterations, loss);
                });
                nn::save_checkpoint(tm.model, outp);
                {
                    auto os = detail::open_out(fs::path(o.out + ".loss.csv"));
                    os << "iteration,loss\n" << std::setprecision(10);
                    for (std::size_t i = 0; i < tm.history.loss.size(); ++i) os << i << ',' << tm.history.loss[i] << '\n';
                }
                auto rec = detail::record("train", args, to_json(cfg));
                detail::note_input(rec, o.dataset);
                rec.outputs = {outp.string(), o.out + ".loss.csv"};
                write_reproducibility(fs::path(o.out + ".repro.json"), rec);
                const auto mse = nn::evaluate_mse(tm.model, as_sequences(ds.validation));
                out << "validation MSE (normalized): N " << mse.per_output[0] << ", tau " << mse.per_output[1]
                    << ", combined " << mse.combined << '\n';
                return 0;
            }
            const auto cmp = compare_training(cfg, ds);
            fs::create_directories(outp);
            {
                auto os = detail::open_out(outp / "curves.csv");
                write_curves_csv(os, cmp);
            }
            {
                auto os = detail::open_out(outp / "summary.csv");
                write_comparison_summary_csv(os, cmp);
            }
            {
                auto os = detail::open_out(outp / "reference.csv");
                write_reference_csv(os);
            }
            nn::save_checkpoint(cmp.immm_model, outp / "immm.ckpt");
            nn::save_checkpoint(cmp.linear_model, outp / "linear.ckpt");
            auto rec = detail::record("compare", args, to_json(cfg));
            detail::note_input(rec, o.dataset);
            rec.outputs = {"curves.csv", "summary.csv", "reference.csv", "immm.ckpt", "linear.ckpt"};
            write_reproducibility(outp / "repro.json", rec);
            out << "initial MSE: immm " << cmp.immm.initial.combined << ", linear " << cmp.linear.initial.combined
                << "; final MSE: immm " << cmp.immm.final.combined << ", linear " << cmp.linear.final.combined
                << '\n';
            return 0;
        }

        // evaluation commands
        if (o.seed) cfg.eval.seed = *o.seed;
        cfg.eval.sensing.noise = detail::noise_flag(o.noise, cfg.eval.sensing.noise);
        const auto model = nn::load_checkpoint(fs::path(o.checkpoint));
        std::optional<data::Dataset> training;
        if (!o.dataset.empty()) {
            training = data::load_dataset(o.dataset);
            cfg.dataset = training->config;
        }
        const auto setup = EvalSetup::from(cfg, training ? &*training : nullptr);
        auto rec = detail::record(app.get_subcommands().front()->get_name(), args, to_json(cfg));
        detail::note_input(rec, o.checkpoint);
        if (!o.dataset.empty()) detail::note_input(rec, o.dataset);

        if (eval_cmds[1]->parsed()) {  // sample-run
            const auto run = sample_run(model, cfg.eval.sample, cfg.dataset.base, cfg.eval.sensing, cfg.eval.seed);
            auto os = detail::open_out(outp);
            write_sample_run_csv(os, run);
            rec.outputs.push_back(outp.string());
            write_reproducibility(fs::path(o.out + ".repro.json"), rec);
            if (!run.ticks.empty())
                out << "final estimate N_hat " << run.ticks.back().gain << ", tau_hat " << run.ticks.back().tau
                    << " (" << run.ticks.size() << " ticks)\n";
            return 0;
        }
        fs::create_directories(outp);
        {
            auto os = detail::open_out(outp / "reference.csv");
            write_reference_csv(os);
        }
        if (eval_cmds[0]->parsed()) {
            const auto rep = monte_carlo_eval(model, cfg.dataset.box, cfg.eval.mc_runs, setup);
            auto s = detail::open_out(outp / "summary.csv");
            write_eval_summary_csv(s, rep);
            auto r = detail::open_out(outp / "rows.csv");
            write_eval_rows_csv(r, rep);
            for (const auto& line : rep.log) err << line << '\n';
            rec.outputs = {"summary.csv", "rows.csv", "reference.csv"};
            out << "MSE (normalized): N " << rep.mse.normalized[0] << ", tau " << rep.mse.normalized[1] << " over "
                << rep.mse.count << " windows\n";
        } else if (eval_cmds[2]->parsed()) {
            const auto g = grid_eval(model, cfg.dataset.box, cfg.eval.grid_gain, cfg.eval.grid_tau, cfg.eval.grid_runs,
                                     setup);
            auto s = detail::open_out(outp / "grid.csv");
            write_grid_csv(s, g);
            auto r = detail::open_out(outp / "rows.csv");
            write_eval_rows_csv(r, g.all);
            rec.outputs = {"grid.csv", "rows.csv", "reference.csv"};
            out << g.cells.size() << " grid cells, combined MSE " << g.all.mse.combined << '\n';
        } else {
            const auto c = drag_sweep_eval(model, cfg.dataset.box, cfg.eval.drag_scales, cfg.eval.drag_runs, setup);
            auto s = detail::open_out(outp / "sweep.csv");
            write_sweep_csv(s, c);
            rec.outputs = {"sweep.csv", "reference.csv"};
            for (const auto& p : c.points)
                out << "delta_d " << p.x << ": MSE N " << p.mse.normalized[0] << ", tau " << p.mse.normalized[1]
                    << '\n';
        }
        write_reproducibility(outp / "repro.json", rec);
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace pnid::harness
