#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pnid/core/rng.hpp"
#include "pnid/nn/train.hpp"

namespace pnid::nn {

using GradientFn = std::function<double(const ModelParams<double>&, std::span<const LabeledSequence>,
                                        ModelParams<double>&)>;

struct GradCheckOptions {
    double epsilon = 1e-6;
    double subset = 1.0;          // fraction of entries checked
    std::uint64_t seed = 0;
    double denominator_floor = 1e-8;  // guards the relative error for near-zero gradients
};

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::string worst_tensor;
    std::size_t checked = 0;
};

/// Compares an analytic gradient against central differences of the loss.
/// relative error = |g_a - g_n| / max(|g_a|, |g_n|, floor)
/// The differenced loss is evaluated in long double so a 1e-6 step is not swamped by rounding.
inline GradCheckResult grad_check(const Model& model, std::span<const LabeledSequence> batch,
                                  const GradCheckOptions& opt = {}, GradientFn gradient = {}) {
    using Wide = long double;
    auto loss_of = [&](const ModelParams<Wide>& p) {
        ModelParams<Wide> scratch = p;
        return loss_and_gradient<Wide>(p, model.arch, model.stats.labels, batch, scratch);
    };
    if (!gradient) {
        gradient = [&](const ModelParams<double>& p, std::span<const LabeledSequence> b,
                       ModelParams<double>& g) {
            return loss_and_gradient<double>(p, model.arch, model.stats.labels, b, g);
        };
    }
    ModelParams<double> analytic = model.params;
    gradient(model.params, batch, analytic);

    ModelParams<Wide> probe = model.params.template cast<Wide>();
    std::vector<std::pair<std::string, Mat<Wide>*>> tensors;
    probe.visit([&](const std::string& n, Mat<Wide>& m) { tensors.emplace_back(n, &m); });
    std::vector<const Mat<double>*> grads;
    analytic.visit([&](const std::string&, const Mat<double>& m) { grads.push_back(&m); });

    Rng rng(opt.seed);
    GradCheckResult res;
    for (std::size_t k = 0; k < tensors.size(); ++k) {
        Mat<Wide>& w = *tensors[k].second;
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            if (opt.subset < 1.0 && uniform01(rng) >= opt.subset) continue;
            const Wide orig = w.data()[i];
            const Wide h = static_cast<Wide>(opt.epsilon);
            w.data()[i] = orig + h;
            const Wide up = loss_of(probe);
            w.data()[i] = orig - h;
            const Wide down = loss_of(probe);
            w.data()[i] = orig;
            const double numeric = static_cast<double>((up - down) / (2 * h));
            const double a = grads[k]->data()[i];
            const double denom = std::max({std::abs(a), std::abs(numeric), opt.denominator_floor});
            const double rel = std::abs(a - numeric) / denom;
            ++res.checked;
            if (rel > res.max_relative_error) {
                res.max_relative_error = rel;
                res.worst_tensor = tensors[k].first;
            }
        }
    }
    return res;
}

}  // namespace pnid::nn
