#pragma once

// Differentiable building blocks: Euclidean linear and gated recurrent cells,
// the Mobius feed-forward layer and hyperbolic multiclass logistic regression.
// Each layer has a plain forward (used by inference-only paths and tests) and
// a tape forward (used by training).

#include <cmath>
#include <cstddef>
#include <vector>

#include "hyperseq/autodiff.hpp"
#include "hyperseq/common.hpp"
#include "hyperseq/geometry.hpp"
#include "hyperseq/tensor.hpp"

namespace hyperseq::nn {

using ad::Tape;
using ad::Tensor;
using ad::Var;

struct EuclideanLinear {
    Tensor weight;  // (out, in)
    Tensor bias;    // (out)
};

/// Two-gate (update/reset) recurrent cell with tanh candidate:
///   r = sigmoid(Wr z + Ur c + br)
///   u = sigmoid(Wu z + Uu c + bu)
///   h = tanh(Wc z + Uc (r*c) + bc)
///   c' = (1 - u)*c + u*h
struct RecurrentCell {
    Tensor w_reset, u_reset, b_reset;
    Tensor w_update, u_update, b_update;
    Tensor w_cand, u_cand, b_cand;

    std::size_t hidden_dim() const { return b_reset.size(); }
    std::size_t input_dim() const { return w_reset.cols(); }
};

/// Mobius feed-forward layer: x -> exp0(W log0(x)) (+) bias. The weight is a
/// Euclidean parameter; the bias lives on the ball.
struct HyperbolicLinear {
    Tensor weight;  // (out, in)
    Tensor bias;    // (out), manifold parameter, |bias| <= 1 - kBallEps

    geom::PoincarePoint bias_point() const { return geom::PoincarePoint(bias.data()); }
};

/// Per-class hyperplane in the ball: prototype p_k (manifold) and tangent
/// normal a_k (Euclidean).
struct HyperbolicMLR {
    Tensor prototypes;  // (K, d), each row a ball point
    Tensor normals;     // (K, d)

    std::size_t num_classes() const { return prototypes.rows(); }
    std::size_t dim() const { return prototypes.cols(); }
};

// ---- initialization (deterministic given the Rng sequence) ----

inline Tensor glorot_uniform(std::size_t out, std::size_t in, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    Tensor w = Tensor::zeros({out, in});
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-bound, bound);
    return w;
}

inline EuclideanLinear init_linear(std::size_t out, std::size_t in, Rng& rng) {
    return EuclideanLinear{glorot_uniform(out, in, rng), Tensor::zeros({out})};
}

inline RecurrentCell init_recurrent(std::size_t hidden, std::size_t input, Rng& rng) {
    RecurrentCell c;
    c.w_reset = glorot_uniform(hidden, input, rng);
    c.u_reset = glorot_uniform(hidden, hidden, rng);
    c.b_reset = Tensor::zeros({hidden});
    c.w_update = glorot_uniform(hidden, input, rng);
    c.u_update = glorot_uniform(hidden, hidden, rng);
    c.b_update = Tensor::zeros({hidden});
    c.w_cand = glorot_uniform(hidden, input, rng);
    c.u_cand = glorot_uniform(hidden, hidden, rng);
    c.b_cand = Tensor::zeros({hidden});
    return c;
}

inline HyperbolicLinear init_hyperbolic_linear(std::size_t out, std::size_t in, Rng& rng) {
    return HyperbolicLinear{glorot_uniform(out, in, rng), Tensor::zeros({out})};
}

inline HyperbolicMLR init_mlr(std::size_t classes, std::size_t dim, Rng& rng) {
    HyperbolicMLR h;
    h.prototypes = Tensor::zeros({classes, dim});
    h.normals = Tensor::zeros({classes, dim});
    for (std::size_t k = 0; k < classes; ++k) {
        Vec g(dim);
        for (double& v : g) v = rng.normal(0.0, 0.01);
        const Vec p = geom::exp0(g).coords();
        Vec a(dim);
        for (double& v : a) v = rng.normal();
        const double an = norm(a);
        for (std::size_t i = 0; i < dim; ++i) {
            h.prototypes.at(k, i) = p[i];
            h.normals.at(k, i) = a[i] / an;
        }
    }
    return h;
}

// ---- plain forwards ----

inline Vec euclidean_linear_forward(const EuclideanLinear& l, const Vec& x) {
    if (l.weight.cols() != x.size() || l.weight.rows() != l.bias.size())
        throw invalid_input("euclidean_linear_forward: shape mismatch");
    Vec y(l.weight.rows());
    for (std::size_t r = 0; r < l.weight.rows(); ++r) {
        double s = l.bias[r];
        for (std::size_t c = 0; c < l.weight.cols(); ++c) s += l.weight.at(r, c) * x[c];
        y[r] = s;
    }
    return y;
}

inline Vec recurrent_step(const RecurrentCell& cell, const Vec& c_prev, const Vec& z) {
    const std::size_t h = cell.hidden_dim();
    if (c_prev.size() != h || z.size() != cell.input_dim())
        throw invalid_input("recurrent_step: shape mismatch");
    auto affine = [h](const Tensor& W, const Vec& x, const Tensor& U, const Vec& s,
                      const Tensor& b) {
        Vec y(h);
        for (std::size_t r = 0; r < h; ++r) {
            double acc = b[r];
            for (std::size_t c = 0; c < W.cols(); ++c) acc += W.at(r, c) * x[c];
            for (std::size_t c = 0; c < h; ++c) acc += U.at(r, c) * s[c];
            y[r] = acc;
        }
        return y;
    };
    Vec reset = affine(cell.w_reset, z, cell.u_reset, c_prev, cell.b_reset);
    Vec update = affine(cell.w_update, z, cell.u_update, c_prev, cell.b_update);
    for (std::size_t i = 0; i < h; ++i) {
        reset[i] = 1.0 / (1.0 + std::exp(-reset[i]));
        update[i] = 1.0 / (1.0 + std::exp(-update[i]));
    }
    Vec gated(h);
    for (std::size_t i = 0; i < h; ++i) gated[i] = reset[i] * c_prev[i];
    Vec cand = affine(cell.w_cand, z, cell.u_cand, gated, cell.b_cand);
    Vec next(h);
    for (std::size_t i = 0; i < h; ++i) {
        cand[i] = std::tanh(cand[i]);
        next[i] = (1.0 - update[i]) * c_prev[i] + update[i] * cand[i];
    }
    return next;
}

inline geom::PoincarePoint hyperbolic_linear_forward(const HyperbolicLinear& l,
                                                     const geom::PoincarePoint& x) {
    if (l.weight.cols() != x.dim()) throw invalid_input("hyperbolic_linear_forward: shape mismatch");
    const Vec v = geom::log0(x);
    Vec wv(l.weight.rows(), 0.0);
    for (std::size_t r = 0; r < l.weight.rows(); ++r)
        for (std::size_t c = 0; c < l.weight.cols(); ++c) wv[r] += l.weight.at(r, c) * v[c];
    return geom::mobius_add(geom::exp0(wv), l.bias_point());
}

/// logit_k = lambda_{p_k} |a_k| asinh( 2<(-p_k)(+)x, a_k> /
///           ((1 - |(-p_k)(+)x|^2) |a_k|) )
inline Vec hyperbolic_mlr_logits(const HyperbolicMLR& head, const geom::PoincarePoint& x) {
    if (head.dim() != x.dim()) throw invalid_input("hyperbolic_mlr_logits: shape mismatch");
    const std::size_t K = head.num_classes();
    Vec logits(K);
    for (std::size_t k = 0; k < K; ++k) {
        Vec p(head.dim()), a(head.dim());
        for (std::size_t i = 0; i < head.dim(); ++i) {
            p[i] = head.prototypes.at(k, i);
            a[i] = head.normals.at(k, i);
        }
        const double an = norm(a);
        if (an == 0.0) throw degenerate_class("hyperbolic_mlr_logits: zero normal");
        const geom::PoincarePoint m =
            geom::mobius_add(geom::PoincarePoint(scaled(p, -1.0)), x);
        const double lam_p = 2.0 / (1.0 - norm_sq(p));
        const double arg = 2.0 * dot(m.coords(), a) / ((1.0 - norm_sq(m.coords())) * an);
        logits[k] = lam_p * an * std::asinh(arg);
    }
    return logits;
}

// ---- tape forwards ----

struct LinearVars {
    Var weight, bias;
};
struct RecurrentVars {
    Var w_reset, u_reset, b_reset;
    Var w_update, u_update, b_update;
    Var w_cand, u_cand, b_cand;
};
struct HyperbolicLinearVars {
    Var weight, bias;
};
struct MLRVars {
    Var prototypes, normals;  // (K, d) each
};

inline Var linear_forward(Tape& t, const LinearVars& p, Var x) {
    return t.add(t.matvec(p.weight, x), p.bias);
}

inline Var recurrent_forward(Tape& t, const RecurrentVars& p, Var c_prev, Var z) {
    Var reset = t.sigmoid(t.add(t.add(t.matvec(p.w_reset, z), t.matvec(p.u_reset, c_prev)),
                                p.b_reset));
    Var update = t.sigmoid(t.add(t.add(t.matvec(p.w_update, z), t.matvec(p.u_update, c_prev)),
                                 p.b_update));
    Var cand = t.tanh(t.add(
        t.add(t.matvec(p.w_cand, z), t.matvec(p.u_cand, t.mul(reset, c_prev))), p.b_cand));
    Var keep = t.shift(t.neg(update), 1.0);  // 1 - u
    return t.add(t.mul(keep, c_prev), t.mul(update, cand));
}

inline Var hyperbolic_linear_forward(Tape& t, const HyperbolicLinearVars& p, Var x_point) {
    Var wv = t.matvec(p.weight, t.log0(x_point));
    Var moved = t.project_ball(t.exp0(wv));
    return t.project_ball(t.mobius_add(moved, p.bias));
}

inline Var mlr_logits(Tape& t, const MLRVars& p, Var x_point) {
    const std::size_t K = t.value(p.prototypes).rows();
    std::vector<Var> logits;
    logits.reserve(K);
    Var two = t.constant(Tensor::scalar(2.0));
    for (std::size_t k = 0; k < K; ++k) {
        Var proto = t.row(p.prototypes, k);
        Var a = t.row(p.normals, k);
        Var m = t.project_ball(t.mobius_add(t.neg(proto), x_point));
        Var a_norm = t.sqrt(t.sum(t.mul(a, a)));
        Var m_sq = t.sum(t.mul(m, m));
        Var arg = t.divide(t.scale(t.sum(t.mul(m, a)), 2.0),
                           t.mul(t.shift(t.neg(m_sq), 1.0), a_norm));
        Var lam = t.divide(two, t.shift(t.neg(t.sum(t.mul(proto, proto))), 1.0));
        logits.push_back(t.mul(t.mul(lam, a_norm), t.asinh(arg)));
    }
    return t.pack(logits);
}

}  // namespace hyperseq::nn
