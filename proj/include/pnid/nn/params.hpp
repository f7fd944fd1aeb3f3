#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pnid/core/errors.hpp"
#include "pnid/core/rng.hpp"

namespace pnid::nn {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

enum class HeadKind { Immm, Linear };

inline std::string to_string(HeadKind h) { return h == HeadKind::Immm ? "immm" : "linear"; }

inline HeadKind parse_head(const std::string& s) {
    if (s == "immm") return HeadKind::Immm;
    if (s == "linear") return HeadKind::Linear;
    throw ConfigError("unknown head kind: " + s);
}

/// Evenly spaced regime values from lo to hi inclusive.
inline std::vector<double> linspace_regimes(double lo, double hi, std::size_t count) {
    if (count < 2) throw ConfigError("a regime group needs at least 2 regimes");
    std::vector<double> v(count);
    for (std::size_t j = 0; j < count; ++j)
        v[j] = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(count - 1);
    v.back() = hi;
    return v;
}

/// Layer sizes and head configuration; everything needed to shape a ModelParams.
struct Architecture {
    std::size_t input_dim = 6;
    std::size_t input_width = 32;
    std::size_t hidden = 32;
    std::size_t layers = 3;
    std::size_t window = 100;  // K, max input steps
    HeadKind head = HeadKind::Immm;
    std::vector<std::vector<double>> regimes;  // one ascending group per output (IMMM)

    std::size_t outputs() const { return head == HeadKind::Immm ? regimes.size() : 2; }

    void validate() const {
        if (input_dim == 0 || input_width == 0 || hidden == 0 || layers == 0 || window == 0)
            throw ConfigError("architecture sizes must be positive");
        if (head == HeadKind::Immm) {
            if (regimes.empty()) throw ConfigError("IMMM head needs regime groups");
            for (const auto& g : regimes) {
                if (g.size() < 2) throw ConfigError("each regime group needs p >= 2");
                for (std::size_t j = 1; j < g.size(); ++j)
                    if (!(g[j] > g[j - 1])) throw ConfigError("regime values must be strictly increasing");
            }
        }
    }

    bool operator==(const Architecture&) const = default;
};

template <typename S>
struct GruLayerParams {
    Mat<S> w_hr, w_xr, b_r;  // reset gate
    Mat<S> w_hz, w_xz, b_z;  // update gate
    Mat<S> w_hh, w_xh, b_h;  // candidate state

    static GruLayerParams zeros(std::size_t hidden, std::size_t in) {
        const auto H = static_cast<Eigen::Index>(hidden);
        const auto D = static_cast<Eigen::Index>(in);
        GruLayerParams p;
        p.w_hr = Mat<S>::Zero(H, H); p.w_xr = Mat<S>::Zero(H, D); p.b_r = Mat<S>::Zero(H, 1);
        p.w_hz = Mat<S>::Zero(H, H); p.w_xz = Mat<S>::Zero(H, D); p.b_z = Mat<S>::Zero(H, 1);
        p.w_hh = Mat<S>::Zero(H, H); p.w_xh = Mat<S>::Zero(H, D); p.b_h = Mat<S>::Zero(H, 1);
        return p;
    }

    std::size_t hidden() const { return static_cast<std::size_t>(w_hr.rows()); }
    std::size_t input_dim() const { return static_cast<std::size_t>(w_xr.cols()); }

    template <typename F>
    void visit(const std::string& prefix, F&& f) {
        f(prefix + ".w_hr", w_hr); f(prefix + ".w_xr", w_xr); f(prefix + ".b_r", b_r);
        f(prefix + ".w_hz", w_hz); f(prefix + ".w_xz", w_xz); f(prefix + ".b_z", b_z);
        f(prefix + ".w_hh", w_hh); f(prefix + ".w_xh", w_xh); f(prefix + ".b_h", b_h);
    }
    template <typename F>
    void visit(const std::string& prefix, F&& f) const {
        const_cast<GruLayerParams*>(this)->visit(prefix, [&](const std::string& n, Mat<S>& m) {
            f(n, static_cast<const Mat<S>&>(m));
        });
    }
};

/// Grouped gating for the multiple-model head. Regime values are constants; only the
/// per-group gate weights/biases train. Group i connects to the hidden state alone.
template <typename S>
struct RegimeBank {
    std::vector<std::vector<double>> values;
    std::vector<Mat<S>> gate_w;  // p_i x H
    std::vector<Mat<S>> gate_b;  // p_i x 1

    std::size_t groups() const { return values.size(); }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (std::size_t i = 0; i < gate_w.size(); ++i)
            n += static_cast<std::size_t>(gate_w[i].size() + gate_b[i].size());
        return n;
    }
};

template <typename S>
struct LinearHead {
    Mat<S> w;  // outputs x H
    Mat<S> b;  // outputs x 1
};

template <typename S>
struct ModelParams {
    Mat<S> in_w;  // input_width x input_dim
    Mat<S> in_b;  // input_width x 1
    std::vector<GruLayerParams<S>> gru;
    HeadKind head = HeadKind::Immm;
    RegimeBank<S> immm;
    LinearHead<S> linear;

    static ModelParams zeros(const Architecture& a) {
        a.validate();
        ModelParams p;
        p.head = a.head;
        p.in_w = Mat<S>::Zero(static_cast<Eigen::Index>(a.input_width), static_cast<Eigen::Index>(a.input_dim));
        p.in_b = Mat<S>::Zero(static_cast<Eigen::Index>(a.input_width), 1);
        for (std::size_t l = 0; l < a.layers; ++l)
            p.gru.push_back(GruLayerParams<S>::zeros(a.hidden, l == 0 ? a.input_width : a.hidden));
        const auto H = static_cast<Eigen::Index>(a.hidden);
        if (a.head == HeadKind::Immm) {
            p.immm.values = a.regimes;
            for (const auto& g : a.regimes) {
                const auto pi = static_cast<Eigen::Index>(g.size());
                p.immm.gate_w.push_back(Mat<S>::Zero(pi, H));
                p.immm.gate_b.push_back(Mat<S>::Zero(pi, 1));
            }
        } else {
            p.linear.w = Mat<S>::Zero(2, H);
            p.linear.b = Mat<S>::Zero(2, 1);
        }
        return p;
    }

    /// Trainable tensors in a fixed order with stable names.
    template <typename F>
    void visit(F&& f) {
        f(std::string("input.w"), in_w);
        f(std::string("input.b"), in_b);
        for (std::size_t l = 0; l < gru.size(); ++l) gru[l].visit("gru" + std::to_string(l), f);
        if (head == HeadKind::Immm) {
            for (std::size_t i = 0; i < immm.gate_w.size(); ++i) {
                f("immm" + std::to_string(i) + ".w", immm.gate_w[i]);
                f("immm" + std::to_string(i) + ".b", immm.gate_b[i]);
            }
        } else {
            f(std::string("linear.w"), linear.w);
            f(std::string("linear.b"), linear.b);
        }
    }
    template <typename F>
    void visit(F&& f) const {
        const_cast<ModelParams*>(this)->visit([&](const std::string& n, Mat<S>& m) {
            f(n, static_cast<const Mat<S>&>(m));
        });
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        visit([&](const std::string&, const Mat<S>& m) { n += static_cast<std::size_t>(m.size()); });
        return n;
    }

    void set_zero() {
        visit([](const std::string&, Mat<S>& m) { m.setZero(); });
    }

    bool all_finite() const {
        bool ok = true;
        visit([&](const std::string&, const Mat<S>& m) { ok = ok && m.allFinite(); });
        return ok;
    }

    template <typename T>
    ModelParams<T> cast() const {
        ModelParams<T> out;
        out.head = head;
        out.in_w = in_w.template cast<T>();
        out.in_b = in_b.template cast<T>();
        for (const auto& g : gru) {
            GruLayerParams<T> q;
            q.w_hr = g.w_hr.template cast<T>(); q.w_xr = g.w_xr.template cast<T>(); q.b_r = g.b_r.template cast<T>();
            q.w_hz = g.w_hz.template cast<T>(); q.w_xz = g.w_xz.template cast<T>(); q.b_z = g.b_z.template cast<T>();
            q.w_hh = g.w_hh.template cast<T>(); q.w_xh = g.w_xh.template cast<T>(); q.b_h = g.b_h.template cast<T>();
            out.gru.push_back(std::move(q));
        }
        out.immm.values = immm.values;
        for (const auto& w : immm.gate_w) out.immm.gate_w.push_back(w.template cast<T>());
        for (const auto& b : immm.gate_b) out.immm.gate_b.push_back(b.template cast<T>());
        if (head == HeadKind::Linear) {
            out.linear.w = linear.w.template cast<T>();
            out.linear.b = linear.b.template cast<T>();
        }
        return out;
    }
};

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
template <typename S>
void glorot_uniform(Mat<S>& m, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            m(i, j) = static_cast<S>((2.0 * uniform01(rng) - 1.0) * limit);
}

/// Glorot weights, zero biases, and an all-zero IMMM gate so the fresh model outputs
/// the mean of every regime group.
template <typename S>
ModelParams<S> initialize(const Architecture& a, std::uint64_t seed) {
    auto p = ModelParams<S>::zeros(a);
    Rng rng(seed);
    glorot_uniform(p.in_w, rng);
    for (auto& g : p.gru) {
        glorot_uniform(g.w_hr, rng); glorot_uniform(g.w_xr, rng);
        glorot_uniform(g.w_hz, rng); glorot_uniform(g.w_xz, rng);
        glorot_uniform(g.w_hh, rng); glorot_uniform(g.w_xh, rng);
    }
    if (a.head == HeadKind::Linear) glorot_uniform(p.linear.w, rng);
    return p;
}

}  // namespace pnid::nn
