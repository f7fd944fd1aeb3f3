#pragma once

#include <cmath>
#include <cstdint>

#include "pnid/nn/params.hpp"

namespace pnid::nn {

struct AdamConfig {
    double base_rate = 0.002;
    double decay = 0.99;         // multiplicative rate decay ...
    std::size_t decay_every = 100;  // ... applied every this many steps
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    double rate(std::uint64_t step) const {
        return base_rate * std::pow(decay, static_cast<double>(step / decay_every));
    }
};

template <typename S>
struct AdamState {
    AdamConfig config;
    ModelParams<S> m;  // first moments
    ModelParams<S> v;  // second moments
    std::uint64_t step = 0;

    static AdamState create(const ModelParams<S>& like, AdamConfig cfg = {}) {
        AdamState st;
        st.config = cfg;
        st.m = like;
        st.m.set_zero();
        st.v = st.m;
        return st;
    }

    /// One bias-corrected Adam update at the scheduled rate for the current step.
    void apply(ModelParams<S>& params, const ModelParams<S>& grad) {
        const double lr = config.rate(step);
        ++step;
        const S b1 = static_cast<S>(config.beta1), b2 = static_cast<S>(config.beta2);
        const S c1 = static_cast<S>(1.0 - std::pow(config.beta1, static_cast<double>(step)));
        const S c2 = static_cast<S>(1.0 - std::pow(config.beta2, static_cast<double>(step)));
        const S eps = static_cast<S>(config.epsilon);
        const S rate = static_cast<S>(lr);

        std::vector<Mat<S>*> ps, gs, ms, vs;
        params.visit([&](const std::string&, Mat<S>& x) { ps.push_back(&x); });
        const_cast<ModelParams<S>&>(grad).visit([&](const std::string&, Mat<S>& x) { gs.push_back(&x); });
        m.visit([&](const std::string&, Mat<S>& x) { ms.push_back(&x); });
        v.visit([&](const std::string&, Mat<S>& x) { vs.push_back(&x); });
        for (std::size_t k = 0; k < ps.size(); ++k) {
            auto g = gs[k]->array();
            ms[k]->array() = b1 * ms[k]->array() + (S(1) - b1) * g;
            vs[k]->array() = b2 * vs[k]->array() + (S(1) - b2) * g.square();
            ps[k]->array() -= rate * (ms[k]->array() / c1) / ((vs[k]->array() / c2).sqrt() + eps);
        }
    }
};

}  // namespace pnid::nn
