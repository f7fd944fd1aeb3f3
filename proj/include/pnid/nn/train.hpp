#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <thread>
#include <vector>

#include "pnid/core/errors.hpp"
#include "pnid/core/rng.hpp"
#include "pnid/nn/adam.hpp"
#include "pnid/nn/model.hpp"
#include "pnid/nn/network.hpp"

namespace pnid::nn {

/// A normalized window with its normalized (N, tau) target.
struct LabeledSequence {
    SequenceRef seq;
    std::array<double, data::kLabels> target{};
};

/// MSE over the batch and both outputs, with its gradient written to `grad`.
/// The batch is cut into fixed shards of `shard` samples; shard gradients are summed
/// in shard order, so the result does not depend on `workers`.
template <typename S>
S loss_and_gradient(const ModelParams<S>& p, const Architecture& arch,
                         const std::array<data::Range, data::kLabels>& labels,
                         std::span<const LabeledSequence> batch, ModelParams<S>& grad,
                         std::size_t shard = 16, std::size_t workers = 1) {
    if (batch.empty()) throw InsufficientDataError("empty training batch");
    shard = std::max<std::size_t>(1, shard);
    workers = std::max<std::size_t>(1, workers);
    const std::size_t n_shards = (batch.size() + shard - 1) / shard;
    const std::size_t n_out = data::kLabels;
    const S scale = static_cast<S>(1.0 / (static_cast<double>(batch.size()) * static_cast<double>(n_out)));

    std::vector<ModelParams<S>> shard_grads(n_shards, grad);
    std::vector<S> sse(n_shards, S(0));
    auto run_shard = [&](std::size_t k) {
        auto part = batch.subspan(k * shard, std::min(shard, batch.size() - k * shard));
        std::vector<SequenceRef> seqs(part.size());
        Mat<S> targets(static_cast<Eigen::Index>(n_out), static_cast<Eigen::Index>(part.size()));
        for (std::size_t s = 0; s < part.size(); ++s) {
            seqs[s] = part[s].seq;
            for (std::size_t i = 0; i < n_out; ++i)
                targets(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s)) = static_cast<S>(part[s].target[i]);
        }
        shard_grads[k].set_zero();
        auto cache = forward<S>(p, labels, PackedBatch<S>::pack(seqs, arch.input_dim, arch.window));
        sse[k] = backward<S>(p, cache, labels, targets, scale, shard_grads[k]);
    };

    if (workers == 1 || n_shards == 1) {
        for (std::size_t k = 0; k < n_shards; ++k) run_shard(k);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < std::min(workers, n_shards); ++w)
            pool.emplace_back([&, w] {
                for (std::size_t k = w; k < n_shards; k += workers) run_shard(k);
            });
        for (auto& th : pool) th.join();
    }

    grad.set_zero();
    std::vector<Mat<S>*> acc;
    grad.visit([&](const std::string&, Mat<S>& m) { acc.push_back(&m); });
    for (auto& g : shard_grads) {
        std::size_t idx = 0;
        g.visit([&](const std::string&, Mat<S>& m) { *acc[idx++] += m; });
    }
    S total = 0;
    for (S v : sse) total += v;
    return total * scale;
}

struct TrainConfig {
    std::size_t batch = 64;
    std::size_t iterations = 2000;
    std::size_t shard = 16;
    std::size_t workers = 1;
    std::uint64_t seed = 1;
    AdamConfig adam;
};

/// One optimizer step; throws DivergenceError on a non-finite loss or gradient.
template <typename S>
double train_step(ModelParams<S>& params, AdamState<S>& adam, const Architecture& arch,
                  const std::array<data::Range, data::kLabels>& labels,
                  std::span<const LabeledSequence> batch, ModelParams<S>& grad_scratch,
                  std::size_t shard = 16, std::size_t workers = 1) {
    const auto loss = static_cast<double>(loss_and_gradient<S>(params, arch, labels, batch, grad_scratch, shard, workers));
    if (!std::isfinite(loss)) throw DivergenceError("non-finite training loss", adam.step);
    if (!grad_scratch.all_finite()) throw DivergenceError("non-finite gradient", adam.step);
    adam.apply(params, grad_scratch);
    return loss;
}

/// Per-output and combined MSE in normalized label units.
struct MseSummary {
    std::array<double, data::kLabels> per_output{};
    double combined = 0.0;
    std::size_t count = 0;
};

inline MseSummary evaluate_mse(const Model& m, std::span<const LabeledSequence> samples,
                               std::size_t chunk = 256) {
    MseSummary out;
    out.count = samples.size();
    if (samples.empty()) return out;
    std::vector<SequenceRef> seqs(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) seqs[i] = samples[i].seq;
    const auto est = model_forward_batch<double>(m, seqs, nullptr, chunk);
    for (std::size_t i = 0; i < samples.size(); ++i)
        for (std::size_t k = 0; k < data::kLabels; ++k) {
            const double d = est[i].normalized[k] - samples[i].target[k];
            out.per_output[k] += d * d;
        }
    for (auto& v : out.per_output) v /= static_cast<double>(samples.size());
    out.combined = (out.per_output[0] + out.per_output[1]) / 2.0;
    return out;
}

inline void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
    shuffle(std::span<std::size_t>(idx), rng);
}

struct TrainHistory {
    std::vector<double> loss;  // batch loss before each update
};

/// Mini-batch training over epochs of a seeded permutation. Parameters are trained in
/// precision S and written back to `model` in double.
template <typename S = double>
TrainHistory train(Model& model, std::span<const LabeledSequence> data, const TrainConfig& cfg,
                   const std::function<void(std::size_t, double)>& on_step = {}) {
    if (data.empty()) throw InsufficientDataError("no training samples");
    TrainHistory hist;
    hist.loss.reserve(cfg.iterations);
    ModelParams<S> params = model.params.template cast<S>();
    auto adam = AdamState<S>::create(params, cfg.adam);
    adam.step = model.optimizer_step;
    ModelParams<S> grad = params;

    Rng order_rng(derive_seed(cfg.seed, {0x0b5e55edULL}));
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t cursor = order.size();
    std::vector<LabeledSequence> batch;
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        batch.clear();
        while (batch.size() < std::min(cfg.batch, data.size())) {
            if (cursor == order.size()) {
                shuffle_indices(order, order_rng);
                cursor = 0;
            }
            batch.push_back(data[order[cursor++]]);
        }
        const double loss = train_step<S>(params, adam, model.arch, model.stats.labels, batch, grad,
                                          cfg.shard, cfg.workers);
        hist.loss.push_back(loss);
        if (on_step) on_step(it, loss);
    }
    model.params = params.template cast<double>();
    model.optimizer_step = adam.step;
    return hist;
}

}  // namespace pnid::nn
