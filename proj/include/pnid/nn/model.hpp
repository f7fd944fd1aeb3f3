#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <type_traits>
#include <vector>

#include "pnid/core/errors.hpp"
#include "pnid/data/normalize.hpp"
#include "pnid/nn/network.hpp"
#include "pnid/nn/params.hpp"

namespace pnid::nn {

/// One GRU step for a single sample:
///   r = sig(W_hr h + W_xr x + b_r), z = sig(W_hz h + W_xz x + b_z)
///   c = tanh(W_hh (r . h) + W_xh x + b_h), h' = (1 - z) . h + z . c
template <typename S>
Vec<S> gru_cell_forward(const Vec<S>& x, const Vec<S>& h_prev, const GruLayerParams<S>& p) {
    if (x.size() != static_cast<Eigen::Index>(p.input_dim()) ||
        h_prev.size() != static_cast<Eigen::Index>(p.hidden()))
        throw ConfigError("GRU cell input shapes do not match its parameters");
    auto sig = [](const Vec<S>& a) -> Vec<S> { return (S(1) / (S(1) + (-a.array()).exp())).matrix(); };
    const Vec<S> r = sig(p.w_hr * h_prev + p.w_xr * x + p.b_r.col(0));
    const Vec<S> z = sig(p.w_hz * h_prev + p.w_xz * x + p.b_z.col(0));
    const Vec<S> rh = (r.array() * h_prev.array()).matrix();
    const Vec<S> c = (p.w_hh * rh + p.w_xh * x + p.b_h.col(0)).array().tanh().matrix();
    return ((S(1) - z.array()) * h_prev.array() + z.array() * c.array()).matrix();
}

struct ImmmOutput {
    std::vector<double> outputs;              // O_i, physical units
    std::vector<std::vector<double>> weights; // G_i, each on the simplex
};

/// Grouped softmax over each regime bank, O_i = Lambda_i^T G_i.
template <typename S>
ImmmOutput immm_forward(const Vec<S>& h_last, const RegimeBank<S>& bank) {
    ImmmOutput out;
    for (std::size_t i = 0; i < bank.groups(); ++i) {
        const auto& lam = bank.values[i];
        if (bank.gate_w[i].rows() != static_cast<Eigen::Index>(lam.size()) ||
            bank.gate_w[i].cols() != h_last.size())
            throw ConfigError("IMMM gate shape does not match its regime group");
        const Vec<S> logits = bank.gate_w[i] * h_last + bank.gate_b[i].col(0);
        const double mx = static_cast<double>(logits.maxCoeff());
        std::vector<double> e(lam.size());
        double denom = 0.0, numer = 0.0;
        for (std::size_t j = 0; j < lam.size(); ++j) {
            e[j] = std::exp(static_cast<double>(logits(static_cast<Eigen::Index>(j))) - mx);
            denom += e[j];
            numer += lam[j] * e[j];
        }
        for (auto& v : e) v /= denom;
        out.outputs.push_back(numer / denom);
        out.weights.push_back(std::move(e));
    }
    return out;
}

/// Trained (or fresh) identifier: architecture, double-precision parameters and the
/// normalization statistics of the data it was built for.
struct Model {
    Architecture arch;
    ModelParams<double> params;
    data::NormStats stats;
    std::uint64_t optimizer_step = 0;

    std::array<data::Range, data::kLabels> label_ranges() const { return stats.labels; }
};

/// Default regime banks: `count` evenly spaced values spanning each label range.
inline std::vector<std::vector<double>> regimes_from_stats(const data::NormStats& stats,
                                                          std::size_t count = 5) {
    std::vector<std::vector<double>> out;
    for (const auto& r : stats.labels) out.push_back(linspace_regimes(r.min, r.max, count));
    return out;
}

inline Model make_model(Architecture arch, const data::NormStats& stats, std::uint64_t seed) {
    stats.check();
    if (arch.head == HeadKind::Immm && arch.regimes.empty()) arch.regimes = regimes_from_stats(stats);
    arch.validate();
    if (arch.head == HeadKind::Immm && arch.regimes.size() != data::kLabels)
        throw ConfigError("IMMM head needs exactly one regime group per label");
    Model m;
    m.arch = arch;
    m.params = initialize<double>(arch, seed);
    m.stats = stats;
    return m;
}

struct Estimate {
    double gain = 0.0;  // N_hat
    double tau = 0.0;   // tau_hat
    std::array<double, data::kLabels> normalized{};
    std::vector<std::vector<double>> weights;  // IMMM only
};

/// Batched inference over normalized windows; processes `chunk` windows at a time.
template <typename S = double>
std::vector<Estimate> model_forward_batch(const Model& m, std::span<const SequenceRef> windows,
                                          const ModelParams<S>* params = nullptr,
                                          std::size_t chunk = 256) {
    ModelParams<S> local;
    if (!params) {
        if constexpr (std::is_same_v<S, double>) {
            params = &m.params;
        } else {
            local = m.params.template cast<S>();
            params = &local;
        }
    }
    std::vector<Estimate> out;
    out.reserve(windows.size());
    for (std::size_t b = 0; b < windows.size(); b += chunk) {
        const auto part = windows.subspan(b, std::min(chunk, windows.size() - b));
        auto cache = forward<S>(*params, m.stats.labels,
                                PackedBatch<S>::pack(part, m.arch.input_dim, m.arch.window));
        for (Eigen::Index s = 0; s < static_cast<Eigen::Index>(part.size()); ++s) {
            Estimate e;
            e.normalized = {static_cast<double>(cache.normalized(0, s)),
                            static_cast<double>(cache.normalized(1, s))};
            if (m.arch.head == HeadKind::Immm) {
                e.gain = static_cast<double>(cache.physical(0, s));
                e.tau = static_cast<double>(cache.physical(1, s));
                for (const auto& G : cache.gates) {
                    std::vector<double> w(static_cast<std::size_t>(G.rows()));
                    for (Eigen::Index j = 0; j < G.rows(); ++j) w[static_cast<std::size_t>(j)] = static_cast<double>(G(j, s));
                    e.weights.push_back(std::move(w));
                }
            } else {
                const auto phys = m.stats.denormalize_labels(e.normalized);
                e.gain = phys[0];
                e.tau = phys[1];
            }
            out.push_back(std::move(e));
        }
    }
    return out;
}

/// Estimates (N, tau) in physical units from one normalized window.
inline Estimate model_forward(const Model& m, SequenceRef window) {
    if (window.length == 0) throw InsufficientDataError("empty input window");
    return model_forward_batch(m, std::span<const SequenceRef>(&window, 1)).front();
}

}  // namespace pnid::nn
