#pragma once

// The predictive pipeline: encoder f, recurrent aggregator g, multi-horizon
// predictor phi, exp-map projection and hyperbolic feed-forward head. The
// euclidean baseline swaps the hyperbolic pathway for a plain linear head and
// keeps everything else identical. Targets share the prediction head.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hyperseq/autodiff.hpp"
#include "hyperseq/common.hpp"
#include "hyperseq/layers.hpp"
#include "hyperseq/optim.hpp"

namespace hyperseq::model {

using ad::Tape;
using ad::Tensor;
using ad::Var;

enum class SpaceMode { hyperbolic, euclidean };

inline std::string to_string(SpaceMode m) {
    return m == SpaceMode::hyperbolic ? "hyperbolic" : "euclidean";
}

struct ModelConfig {
    std::size_t d_in = 32;
    std::size_t d_z = 16;
    std::size_t d_c = 32;
    int delta_max = 4;
    SpaceMode space = SpaceMode::hyperbolic;
    bool stop_target_grad = false;
    double temperature = 1.0;
    bool horizon_one_hot = false;  // default: normalized scalar input

    std::size_t horizon_dims() const {
        return horizon_one_hot ? static_cast<std::size_t>(delta_max) : 1;
    }
};

struct PredictiveModel {
    ModelConfig cfg;
    nn::EuclideanLinear enc1, enc2;  // f: d_in -> d_z -> d_z, tanh between
    nn::RecurrentCell agg;           // g: input d_z, hidden d_c
    nn::EuclideanLinear pred1, pred2;  // phi: (d_c + horizon) -> d_c -> d_z
    nn::HyperbolicLinear hyp_head;     // d_z -> d_z (hyperbolic mode)
    nn::EuclideanLinear euc_head;      // d_z -> d_z (euclidean mode)
};

/// Deterministic init; the shared trunk consumes the same draws in both
/// space modes so matched baselines start from identical encoders.
inline PredictiveModel init_model(const ModelConfig& cfg, std::uint64_t seed) {
    if (cfg.delta_max < 1) throw invalid_input("init_model: delta_max must be >= 1");
    Rng rng(derive_seed(seed, 7));
    PredictiveModel m;
    m.cfg = cfg;
    m.enc1 = nn::init_linear(cfg.d_z, cfg.d_in, rng);
    m.enc2 = nn::init_linear(cfg.d_z, cfg.d_z, rng);
    m.agg = nn::init_recurrent(cfg.d_c, cfg.d_z, rng);
    m.pred1 = nn::init_linear(cfg.d_c, cfg.d_c + cfg.horizon_dims(), rng);
    m.pred2 = nn::init_linear(cfg.d_z, cfg.d_c, rng);
    if (cfg.space == SpaceMode::hyperbolic)
        m.hyp_head = nn::init_hyperbolic_linear(cfg.d_z, cfg.d_z, rng);
    else
        m.euc_head = nn::init_linear(cfg.d_z, cfg.d_z, rng);
    return m;
}

/// Canonical parameter walk: a single ordering shared by the optimizer
/// registry, the tape binder and the checkpoint format.
template <typename F>
void for_each_param(PredictiveModel& m, F&& f) {
    f("enc1.weight", opt::Space::euclidean, m.enc1.weight);
    f("enc1.bias", opt::Space::euclidean, m.enc1.bias);
    f("enc2.weight", opt::Space::euclidean, m.enc2.weight);
    f("enc2.bias", opt::Space::euclidean, m.enc2.bias);
    f("agg.w_reset", opt::Space::euclidean, m.agg.w_reset);
    f("agg.u_reset", opt::Space::euclidean, m.agg.u_reset);
    f("agg.b_reset", opt::Space::euclidean, m.agg.b_reset);
    f("agg.w_update", opt::Space::euclidean, m.agg.w_update);
    f("agg.u_update", opt::Space::euclidean, m.agg.u_update);
    f("agg.b_update", opt::Space::euclidean, m.agg.b_update);
    f("agg.w_cand", opt::Space::euclidean, m.agg.w_cand);
    f("agg.u_cand", opt::Space::euclidean, m.agg.u_cand);
    f("agg.b_cand", opt::Space::euclidean, m.agg.b_cand);
    f("pred1.weight", opt::Space::euclidean, m.pred1.weight);
    f("pred1.bias", opt::Space::euclidean, m.pred1.bias);
    f("pred2.weight", opt::Space::euclidean, m.pred2.weight);
    f("pred2.bias", opt::Space::euclidean, m.pred2.bias);
    if (m.cfg.space == SpaceMode::hyperbolic) {
        f("hyp_head.weight", opt::Space::euclidean, m.hyp_head.weight);
        f("hyp_head.bias", opt::Space::manifold, m.hyp_head.bias);
    } else {
        f("euc_head.weight", opt::Space::euclidean, m.euc_head.weight);
        f("euc_head.bias", opt::Space::euclidean, m.euc_head.bias);
    }
}

inline void register_params(PredictiveModel& m, opt::ParamGroup& group) {
    for_each_param(m, [&group](const char* name, opt::Space space, Tensor& t) {
        group.add(name, space, t);
    });
}

/// One tape leaf per parameter, in canonical order.
struct ModelVars {
    std::vector<Var> order;
    nn::LinearVars enc1, enc2, pred1, pred2, euc_head;
    nn::RecurrentVars agg;
    nn::HyperbolicLinearVars hyp_head;
};

/// Assembles the per-layer var structs from leaves in canonical order.
inline ModelVars wire_vars(const ModelConfig& cfg, std::vector<Var> order) {
    ModelVars v;
    v.order = std::move(order);
    std::size_t i = 0;
    auto next = [&v, &i]() { return v.order[i++]; };
    v.enc1 = {next(), next()};
    v.enc2 = {next(), next()};
    v.agg = {next(), next(), next(), next(), next(), next(), next(), next(), next()};
    v.pred1 = {next(), next()};
    v.pred2 = {next(), next()};
    if (cfg.space == SpaceMode::hyperbolic)
        v.hyp_head = {next(), next()};
    else
        v.euc_head = {next(), next()};
    if (i != v.order.size()) throw invalid_input("wire_vars: var count mismatch");
    return v;
}

inline ModelVars bind(Tape& t, PredictiveModel& m) {
    std::vector<Var> order;
    for_each_param(m, [&](const char*, opt::Space, Tensor& tensor) {
        order.push_back(t.leaf(tensor));
    });
    return wire_vars(m.cfg, std::move(order));
}

/// Adjoints of all bound parameters, aligned with the canonical order.
inline std::vector<Tensor> collect_grads(Tape& t, const ModelVars& v) {
    std::vector<Tensor> g;
    g.reserve(v.order.size());
    for (Var p : v.order) g.push_back(t.adjoint(p));
    return g;
}

// ---- forward ops ----

inline Var encode(Tape& t, const ModelVars& v, Var features) {
    Var h = t.tanh(nn::linear_forward(t, v.enc1, features));
    return nn::linear_forward(t, v.enc2, h);
}

inline Var aggregate(Tape& t, const PredictiveModel& m, const ModelVars& v,
                     std::span<const Var> zs) {
    if (zs.empty()) throw invalid_input("aggregate: empty sequence");
    Var c = t.constant(Tensor::zeros({m.cfg.d_c}));
    for (Var z : zs) c = nn::recurrent_forward(t, v.agg, c, z);
    return c;
}

inline Var horizon_input(Tape& t, const ModelConfig& cfg, int delta) {
    if (delta < 1 || delta > cfg.delta_max)
        throw invalid_input("predict: delta outside [1, delta_max]");
    if (cfg.horizon_one_hot) {
        Tensor h = Tensor::zeros({static_cast<std::size_t>(cfg.delta_max)});
        h[delta - 1] = 1.0;
        return t.constant(h);
    }
    Tensor h = Tensor::zeros({1});
    h[0] = static_cast<double>(delta) / static_cast<double>(cfg.delta_max);
    return t.constant(h);
}

/// phi(c_t, delta) followed by the space projection: exp-map plus hyperbolic
/// head in hyperbolic mode, plain linear head in euclidean mode.
inline Var predict(Tape& t, const PredictiveModel& m, const ModelVars& v, Var context,
                   int delta) {
    Var input = t.concat(context, horizon_input(t, m.cfg, delta));
    Var h = t.tanh(nn::linear_forward(t, v.pred1, input));
    Var raw = nn::linear_forward(t, v.pred2, h);
    if (m.cfg.space == SpaceMode::euclidean) return nn::linear_forward(t, v.euc_head, raw);
    Var on_ball = t.project_ball(t.exp0(raw));
    return nn::hyperbolic_linear_forward(t, v.hyp_head, on_ball);
}

/// Targets pass through the same exp-map + head pathway (shared weights).
inline Var target_embedding(Tape& t, const PredictiveModel& m, const ModelVars& v,
                            Var features) {
    Var z = encode(t, v, features);
    if (m.cfg.space == SpaceMode::euclidean) return nn::linear_forward(t, v.euc_head, z);
    Var on_ball = t.project_ball(t.exp0(z));
    return nn::hyperbolic_linear_forward(t, v.hyp_head, on_ball);
}

/// Euclidean norm of a hyperbolic prediction; the paper's confidence proxy.
inline double prediction_radius(const PredictiveModel& m, const Tensor& zhat) {
    if (m.cfg.space != SpaceMode::hyperbolic)
        throw unsupported_mode("prediction_radius: euclidean mode has no radius");
    double q = 0.0;
    for (std::size_t i = 0; i < zhat.size(); ++i) q += zhat[i] * zhat[i];
    return std::sqrt(q);
}

}  // namespace hyperseq::model
