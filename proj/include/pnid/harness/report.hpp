#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pnid/core/version.hpp"
#include "pnid/data/dataset_io.hpp"
#include "pnid/harness/experiments.hpp"

namespace pnid::harness {

/// Published reference numbers, kept for annotating reports. They are never test
/// expectations: the desk presets run at a small fraction of the original scale.
struct PublishedValue {
    const char* experiment;
    const char* quantity;
    double value;
};

inline constexpr PublishedValue kPublishedReference[] = {
    {"compare", "initial_mse_linear", 0.3366},
    {"compare", "initial_mse_immm", 0.0834},
    {"compare", "final_mse_linear", 10.5e-5},
    {"compare", "final_mse_immm", 5.16e-5},
    {"sample_run", "initial_N_hat", 4.0},
    {"sample_run", "initial_tau_hat", 0.25},
    {"monte_carlo", "mse_N", 0.1158e-3},
    {"monte_carlo", "mse_tau", 4.0327e-3},
    {"grid", "mse_cell_N2.5_tau0.10", 2.1049e-3},
};

inline void write_reference_csv(std::ostream& os) {
    os << "source,experiment,quantity,value\n" << std::setprecision(8);
    for (const auto& r : kPublishedReference)
        os << "published," << r.experiment << ',' << r.quantity << ',' << r.value << '\n';
}

inline void write_eval_rows_csv(std::ostream& os, const EvalReport& rep) {
    os << "trajectory,cell,end_tick,length,N,tau,N_hat,tau_hat,N_norm,tau_norm,N_hat_norm,tau_hat_norm\n";
    os << std::setprecision(17);
    for (const auto& r : rep.rows)
        os << data::hex_id(r.trajectory) << ',' << r.cell << ',' << r.end << ',' << r.length << ','
           << r.truth[0] << ',' << r.truth[1] << ',' << r.estimate[0] << ',' << r.estimate[1] << ','
           << r.truth_norm[0] << ',' << r.truth_norm[1] << ',' << r.estimate_norm[0] << ','
           << r.estimate_norm[1] << '\n';
}

inline void write_mse_header(std::ostream& os) {
    os << "count,mse_N_norm,mse_tau_norm,mse_combined_norm,mse_N_phys,mse_tau_phys";
}

inline void write_mse_fields(std::ostream& os, const MseBlock& m) {
    os << m.count << ',' << m.normalized[0] << ',' << m.normalized[1] << ',' << m.combined << ','
       << m.physical[0] << ',' << m.physical[1];
}

inline void write_eval_summary_csv(std::ostream& os, const EvalReport& rep) {
    os << "name,trajectories,";
    write_mse_header(os);
    os << '\n' << std::setprecision(10) << rep.name << ',' << rep.trajectories << ',';
    write_mse_fields(os, rep.mse);
    os << '\n';
}

inline void write_grid_csv(std::ostream& os, const GridReport& g) {
    os << "N,tau,";
    write_mse_header(os);
    os << '\n' << std::setprecision(10);
    for (const auto& c : g.cells) {
        os << c.gain << ',' << c.tau << ',';
        write_mse_fields(os, c.mse);
        os << '\n';
    }
}

inline void write_sweep_csv(std::ostream& os, const SweepCurve& s) {
    os << s.variable << ',';
    write_mse_header(os);
    os << '\n' << std::setprecision(10);
    for (const auto& p : s.points) {
        os << p.x << ',';
        write_mse_fields(os, p.mse);
        os << '\n';
    }
}

/// iteration, batch loss of each head (normalized MSE).
inline void write_curves_csv(std::ostream& os, const TrainingComparison& c) {
    os << "iteration,loss_immm,loss_linear\n" << std::setprecision(10);
    const std::size_t n = std::max(c.immm.loss.size(), c.linear.loss.size());
    for (std::size_t i = 0; i < n; ++i) {
        os << i << ',';
        if (i < c.immm.loss.size()) os << c.immm.loss[i];
        os << ',';
        if (i < c.linear.loss.size()) os << c.linear.loss[i];
        os << '\n';
    }
}

inline void write_comparison_summary_csv(std::ostream& os, const TrainingComparison& c) {
    os << "head,initial_mse_norm,final_mse_norm,initial_mse_N_norm,initial_mse_tau_norm,final_mse_N_norm,"
          "final_mse_tau_norm,validation_samples\n"
       << std::setprecision(10);
    for (const auto* curve : {&c.linear, &c.immm})
        os << nn::to_string(curve->head) << ',' << curve->initial.combined << ',' << curve->final.combined << ','
           << curve->initial.per_output[0] << ',' << curve->initial.per_output[1] << ','
           << curve->final.per_output[0] << ',' << curve->final.per_output[1] << ',' << curve->final.count << '\n';
}

inline void write_sample_run_csv(std::ostream& os, const SampleRun& run) {
    os << "t,length,N_hat,tau_hat";
    const std::size_t groups = run.ticks.empty() ? 0 : run.ticks.front().weights.size();
    for (std::size_t g = 0; g < groups; ++g)
        for (std::size_t j = 0; j < run.ticks.front().weights[g].size(); ++j)
            os << ",G" << g + 1 << '_' << j + 1;
    os << '\n' << std::setprecision(10);
    for (const auto& t : run.ticks) {
        os << t.t << ',' << t.length << ',' << t.gain << ',' << t.tau;
        for (const auto& g : t.weights)
            for (double w : g) os << ',' << w;
        os << '\n';
    }
}

/// Record written next to every output: enough to rerun the experiment.
struct Reproducibility {
    std::string command;
    std::vector<std::string> argv;
    nlohmann::json config;
    nlohmann::json inputs = nlohmann::json::object();   // input file -> sha256
    nlohmann::json outputs = nlohmann::json::array();

    nlohmann::json to_json() const {
        return {{"command", command}, {"argv", argv},     {"config", config},
                {"inputs", inputs},   {"outputs", outputs}, {"build", build_info()}};
    }
};

inline std::string file_sha256(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw FormatError("cannot open " + p.string());
    std::ostringstream os;
    os << in.rdbuf();
    return data::sha256_hex(os.str());
}

inline void write_reproducibility(const std::filesystem::path& path, const Reproducibility& r) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw FormatError("cannot write " + path.string());
    os << r.to_json().dump(2) << '\n';
}

}  // namespace pnid::harness
