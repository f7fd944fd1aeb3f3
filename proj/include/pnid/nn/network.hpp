#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pnid/core/errors.hpp"
#include "pnid/data/normalize.hpp"
#include "pnid/nn/params.hpp"

namespace pnid::nn {

/// Row-major `length x dim` block of normalized inputs.
struct SequenceRef {
    const double* data = nullptr;
    std::size_t length = 0;
};

/// Sequences packed time-major and right-aligned: column t*B + s holds step t of
/// sample s, and sample s is active from step T - length_s onwards. Every sample
/// therefore ends on the final step and starts from a zero hidden state.
template <typename S>
struct PackedBatch {
    std::size_t steps = 0;
    std::size_t batch = 0;
    Mat<S> x;
    std::vector<std::size_t> start;

    static PackedBatch pack(std::span<const SequenceRef> seqs, std::size_t dim, std::size_t max_len) {
        PackedBatch pb;
        pb.batch = seqs.size();
        if (pb.batch == 0) throw InsufficientDataError("empty batch");
        for (const auto& s : seqs) {
            if (s.length == 0) throw InsufficientDataError("empty input window");
            if (s.length > max_len) throw ConfigError("input window longer than the model's K");
            pb.steps = std::max(pb.steps, s.length);
        }
        const auto B = static_cast<Eigen::Index>(pb.batch);
        pb.x = Mat<S>::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(pb.steps) * B);
        pb.start.resize(pb.batch);
        for (std::size_t s = 0; s < pb.batch; ++s) {
            pb.start[s] = pb.steps - seqs[s].length;
            for (std::size_t k = 0; k < seqs[s].length; ++k) {
                const auto col = static_cast<Eigen::Index>(pb.start[s] + k) * B + static_cast<Eigen::Index>(s);
                for (std::size_t i = 0; i < dim; ++i)
                    pb.x(static_cast<Eigen::Index>(i), col) = static_cast<S>(seqs[s].data[k * dim + i]);
            }
        }
        return pb;
    }

    Eigen::Index cols(std::size_t t) const { return static_cast<Eigen::Index>(t * batch); }
    Eigen::Index width() const { return static_cast<Eigen::Index>(batch); }
};

template <typename S>
struct LayerCache {
    Mat<S> r, z, cand, rh, h;  // all hidden x (T*B)
};

template <typename S>
struct ForwardCache {
    PackedBatch<S> in;
    Mat<S> u;  // tanh input layer output
    std::vector<LayerCache<S>> layers;
    std::vector<Mat<S>> gates;  // IMMM: p_i x B softmax weights
    Mat<S> physical;            // outputs x B (physical units for IMMM, normalized for linear)
    Mat<S> normalized;          // outputs x B

    Mat<S> h_last() const {
        const auto& top = layers.back().h;
        return top.middleCols(in.cols(in.steps - 1), in.width());
    }
};

namespace detail {

template <typename Derived>
void sigmoid_inplace(Eigen::MatrixBase<Derived>&& m) {
    using S = typename Derived::Scalar;
    m = (S(1) / (S(1) + (-m.array()).exp())).matrix();
}

template <typename Derived>
void tanh_inplace(Eigen::MatrixBase<Derived>&& m) {
    m = m.array().tanh().matrix();
}

template <typename S>
void zero_inactive(Mat<S>& m, const PackedBatch<S>& in, std::size_t t) {
    for (std::size_t s = 0; s < in.batch; ++s)
        if (t < in.start[s]) m.col(in.cols(t) + static_cast<Eigen::Index>(s)).setZero();
}

}  // namespace detail

/// Forward pass over a packed batch. `labels` are the normalization ranges of the outputs.
template <typename S>
ForwardCache<S> forward(const ModelParams<S>& p, const std::array<data::Range, data::kLabels>& labels,
                        PackedBatch<S> in) {
    ForwardCache<S> c;
    c.in = std::move(in);
    const std::size_t T = c.in.steps;
    const auto B = c.in.width();
    const Eigen::Index TB = static_cast<Eigen::Index>(T) * B;

    c.u.noalias() = p.in_w * c.in.x;
    c.u.colwise() += p.in_b.col(0);
    detail::tanh_inplace(c.u.leftCols(TB));

    c.layers.resize(p.gru.size());
    for (std::size_t l = 0; l < p.gru.size(); ++l) {
        const auto& g = p.gru[l];
        const Mat<S>& x = l == 0 ? c.u : c.layers[l - 1].h;
        auto& L = c.layers[l];
        const auto H = static_cast<Eigen::Index>(g.hidden());
        L.r.noalias() = g.w_xr * x;
        L.r.colwise() += g.b_r.col(0);
        L.z.noalias() = g.w_xz * x;
        L.z.colwise() += g.b_z.col(0);
        L.cand.noalias() = g.w_xh * x;
        L.cand.colwise() += g.b_h.col(0);
        L.rh = Mat<S>::Zero(H, TB);
        L.h = Mat<S>::Zero(H, TB);

        for (std::size_t t = 0; t < T; ++t) {
            const auto c0 = c.in.cols(t);
            auto R = L.r.middleCols(c0, B);
            auto Z = L.z.middleCols(c0, B);
            auto C = L.cand.middleCols(c0, B);
            auto Hn = L.h.middleCols(c0, B);
            if (t == 0) {
                detail::sigmoid_inplace(L.r.middleCols(c0, B));
                detail::sigmoid_inplace(L.z.middleCols(c0, B));
                detail::tanh_inplace(L.cand.middleCols(c0, B));
                Hn = (Z.array() * C.array()).matrix();
            } else {
                const auto Hp = L.h.middleCols(c.in.cols(t - 1), B);
                R.noalias() += g.w_hr * Hp;
                Z.noalias() += g.w_hz * Hp;
                detail::sigmoid_inplace(L.r.middleCols(c0, B));
                detail::sigmoid_inplace(L.z.middleCols(c0, B));
                auto RH = L.rh.middleCols(c0, B);
                RH = (R.array() * Hp.array()).matrix();
                C.noalias() += g.w_hh * RH;
                detail::tanh_inplace(L.cand.middleCols(c0, B));
                Hn = (Hp.array() + Z.array() * (C.array() - Hp.array())).matrix();
            }
            detail::zero_inactive<S>(L.h, c.in, t);
        }
    }

    const Mat<S> h = c.h_last();
    if (p.head == HeadKind::Immm) {
        const std::size_t n_out = p.immm.groups();
        c.physical.resize(static_cast<Eigen::Index>(n_out), B);
        c.normalized.resize(static_cast<Eigen::Index>(n_out), B);
        c.gates.resize(n_out);
        for (std::size_t i = 0; i < n_out; ++i) {
            const auto& lam = p.immm.values[i];
            Mat<S> logits = p.immm.gate_w[i] * h;
            logits.colwise() += p.immm.gate_b[i].col(0);
            Mat<S>& G = c.gates[i];
            G.resize(logits.rows(), B);
            for (Eigen::Index s = 0; s < B; ++s) {
                const S mx = logits.col(s).maxCoeff();
                S denom = 0, numer = 0;
                for (Eigen::Index j = 0; j < logits.rows(); ++j) {
                    const S e = std::exp(logits(j, s) - mx);
                    G(j, s) = e;
                    denom += e;
                    numer += static_cast<S>(lam[static_cast<std::size_t>(j)]) * e;
                }
                G.col(s) /= denom;
                const S o = numer / denom;
                c.physical(static_cast<Eigen::Index>(i), s) = o;
                c.normalized(static_cast<Eigen::Index>(i), s) =
                    (o - static_cast<S>(labels[i].min)) / static_cast<S>(labels[i].span());
            }
        }
    } else {
        c.normalized.noalias() = p.linear.w * h;
        c.normalized.colwise() += p.linear.b.col(0);
        c.physical = c.normalized;
    }
    return c;
}

/// Accumulates d(loss)/d(params) into `grad`, where
/// loss = scale * sum over samples and outputs of (normalized output - target)^2.
/// Returns the unscaled sum of squared errors.
template <typename S>
S backward(const ModelParams<S>& p, const ForwardCache<S>& c,
                const std::array<data::Range, data::kLabels>& labels, const Mat<S>& targets, S scale,
                ModelParams<S>& grad) {
    const std::size_t T = c.in.steps;
    const auto B = c.in.width();
    const Eigen::Index TB = static_cast<Eigen::Index>(T) * B;

    const Mat<S> diff = c.normalized - targets;
    const S sse = diff.squaredNorm();
    const Mat<S> d_out = (S(2) * scale) * diff;

    const Mat<S> h = c.h_last();
    Mat<S> dh;
    if (p.head == HeadKind::Immm) {
        dh = Mat<S>::Zero(h.rows(), B);
        for (std::size_t i = 0; i < p.immm.groups(); ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            const auto& lam = p.immm.values[i];
            const Mat<S>& G = c.gates[i];
            Mat<S> dlogit(G.rows(), B);
            for (Eigen::Index s = 0; s < B; ++s) {
                const S d_phys = d_out(ii, s) / static_cast<S>(labels[i].span());
                const S o = c.physical(ii, s);
                for (Eigen::Index j = 0; j < G.rows(); ++j)
                    dlogit(j, s) = G(j, s) * (static_cast<S>(lam[static_cast<std::size_t>(j)]) - o) * d_phys;
            }
            grad.immm.gate_w[i].noalias() += dlogit * h.transpose();
            grad.immm.gate_b[i] += dlogit.rowwise().sum();
            dh.noalias() += p.immm.gate_w[i].transpose() * dlogit;
        }
    } else {
        grad.linear.w.noalias() += d_out * h.transpose();
        grad.linear.b += d_out.rowwise().sum();
        dh.noalias() = p.linear.w.transpose() * d_out;
    }

    // Gradient w.r.t. every step's output of the current layer.
    Mat<S> d_above = Mat<S>::Zero(h.rows(), TB);
    d_above.middleCols(c.in.cols(T - 1), B) = dh;

    for (std::size_t l = p.gru.size(); l-- > 0;) {
        const auto& g = p.gru[l];
        auto& gg = grad.gru[l];
        const auto& L = c.layers[l];
        const Mat<S>& x = l == 0 ? c.u : c.layers[l - 1].h;
        const auto H = static_cast<Eigen::Index>(g.hidden());

        Mat<S> d_ar(H, TB), d_az(H, TB), d_ac(H, TB);
        Mat<S> d_next = Mat<S>::Zero(H, B);
        Mat<S> dH(H, B), d_hp(H, B);
        for (std::size_t t = T; t-- > 0;) {
            const auto c0 = c.in.cols(t);
            dH = d_above.middleCols(c0, B) + d_next;
            for (std::size_t s = 0; s < c.in.batch; ++s)
                if (t < c.in.start[s]) dH.col(static_cast<Eigen::Index>(s)).setZero();

            const auto R = L.r.middleCols(c0, B).array();
            const auto Z = L.z.middleCols(c0, B).array();
            const auto C = L.cand.middleCols(c0, B).array();
            auto Aac = d_ac.middleCols(c0, B);
            auto Aar = d_ar.middleCols(c0, B);
            auto Aaz = d_az.middleCols(c0, B);
            if (t == 0) {
                // h_prev = 0: no reset-gate path and no earlier step
                Aaz = (dH.array() * C * Z * (S(1) - Z)).matrix();
                Aac = (dH.array() * Z * (S(1) - C * C)).matrix();
                Aar.setZero();
                continue;
            }
            const auto Hp = L.h.middleCols(c.in.cols(t - 1), B).array();
            Aaz = (dH.array() * (C - Hp) * Z * (S(1) - Z)).matrix();
            Aac = (dH.array() * Z * (S(1) - C * C)).matrix();
            d_hp = (dH.array() * (S(1) - Z)).matrix();
            const Mat<S> d_rh = g.w_hh.transpose() * Aac;
            Aar = (d_rh.array() * Hp * R * (S(1) - R)).matrix();
            d_hp.array() += d_rh.array() * R;
            d_hp.noalias() += g.w_hr.transpose() * Aar;
            d_hp.noalias() += g.w_hz.transpose() * Aaz;
            d_next = d_hp;
        }

        gg.w_xr.noalias() += d_ar * x.transpose();
        gg.w_xz.noalias() += d_az * x.transpose();
        gg.w_xh.noalias() += d_ac * x.transpose();
        gg.b_r += d_ar.rowwise().sum();
        gg.b_z += d_az.rowwise().sum();
        gg.b_h += d_ac.rowwise().sum();
        if (T > 1) {
            const Eigen::Index rest = TB - B;
            gg.w_hr.noalias() += d_ar.rightCols(rest) * L.h.leftCols(rest).transpose();
            gg.w_hz.noalias() += d_az.rightCols(rest) * L.h.leftCols(rest).transpose();
            gg.w_hh.noalias() += d_ac.rightCols(rest) * L.rh.rightCols(rest).transpose();
        }

        Mat<S> d_x = g.w_xr.transpose() * d_ar;
        d_x.noalias() += g.w_xz.transpose() * d_az;
        d_x.noalias() += g.w_xh.transpose() * d_ac;
        d_above = std::move(d_x);
    }

    const Mat<S> d_pre = (d_above.array() * (S(1) - c.u.array().square())).matrix();
    grad.in_w.noalias() += d_pre * c.in.x.transpose();
    grad.in_b += d_pre.rowwise().sum();
    return sse;
}

}  // namespace pnid::nn
