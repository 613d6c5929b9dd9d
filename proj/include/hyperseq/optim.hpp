#pragma once

// Parameter updates that respect parameter space: plain SGD/Adam for
// Euclidean tensors, Riemannian SGD/Adam for ball-valued tensors. Manifold
// tensors are row collections of ball points; Adam second moments for them
// track the metric norm of the Riemannian gradient (one scalar per point),
// and moments are carried in coordinates without parallel transport.

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hyperseq/common.hpp"
#include "hyperseq/geometry.hpp"
#include "hyperseq/tensor.hpp"

namespace hyperseq::opt {

using ad::Tensor;

enum class Space { euclidean, manifold };

struct ParamRef {
    std::string name;
    Space space;
    Tensor* value = nullptr;
};

struct AdamState {
    Tensor m;  // first moment, parameter-shaped
    Tensor v;  // second moment; per-coordinate (euclidean) or per-row (manifold)
    std::int64_t step = 0;
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Euclidean gradient -> Riemannian gradient on the ball (inverse metric
/// scaling (1-|x|^2)^2/4), based at x.
inline geom::TangentVector riemannian_grad(const geom::PoincarePoint& x, const Vec& euclid_grad) {
    if (x.dim() != euclid_grad.size()) throw invalid_input("riemannian_grad: shape mismatch");
    const double f = 1.0 - norm_sq(x.coords());
    return geom::TangentVector(x, scaled(euclid_grad, f * f / 4.0));
}

class ParamGroup {
public:
    void add(std::string name, Space space, Tensor& value) {
        refs_.push_back(ParamRef{std::move(name), space, &value});
    }

    const std::vector<ParamRef>& refs() const { return refs_; }
    std::size_t size() const { return refs_.size(); }

    AdamState& state(const ParamRef& ref) {
        AdamState& s = state_[ref.name];
        if (s.m.empty()) {
            s.m = ref.value->like_zeros();
            if (ref.space == Space::manifold) {
                s.v = Tensor::zeros({point_rows(*ref.value)});
            } else {
                s.v = ref.value->like_zeros();
            }
        }
        return s;
    }

    std::map<std::string, AdamState>& raw_state() { return state_; }
    const std::map<std::string, AdamState>& raw_state() const { return state_; }

    /// Consecutive steps in which some manifold point needed the boundary
    /// clamp; feeds the divergence warning in the metrics stream.
    int clamp_streak() const { return clamp_streak_; }
    void note_step(bool clamped) { clamp_streak_ = clamped ? clamp_streak_ + 1 : 0; }

    static std::size_t point_rows(const Tensor& t) {
        return t.rank() == 2 ? t.rows() : 1;
    }
    static std::size_t point_dim(const Tensor& t) {
        return t.rank() == 2 ? t.cols() : t.size();
    }

private:
    std::vector<ParamRef> refs_;
    std::map<std::string, AdamState> state_;
    int clamp_streak_ = 0;
};

namespace detail {

inline void check_grads_finite(const std::vector<Tensor>& grads) {
    for (const Tensor& g : grads)
        for (std::size_t i = 0; i < g.size(); ++i)
            if (!std::isfinite(g[i])) throw divergence_error("optimizer: non-finite gradient");
}

/// Applies a tangent update u (coordinates) to the point stored in row r.
/// Returns true if the boundary clamp fired (detected on the pre-projection
/// norm, so a point already resting at the clamp radius does not count).
inline bool apply_manifold_update(Tensor& value, std::size_t r, const Vec& u) {
    const std::size_t d = ParamGroup::point_dim(value);
    const double un = norm(u);
    if (un < 1e-15) return false;
    Vec x(d);
    for (std::size_t i = 0; i < d; ++i) x[i] = value[r * d + i];
    const double lam = 2.0 / (1.0 - norm_sq(x));
    const double t = std::tanh(lam * un / 2.0);
    Vec moved = geom::mobius_add_raw(x, scaled(u, t / un));
    const double rn = norm(moved);
    const double max_r = 1.0 - kBallEps;
    const bool clamped = rn > max_r;
    const double s = clamped ? max_r / rn : 1.0;
    for (std::size_t i = 0; i < d; ++i) value[r * d + i] = s * moved[i];
    return clamped;
}

}  // namespace detail

/// SGD: Euclidean params move along -lr*g; manifold points retract through
/// the exponential map along -lr * riemannian_grad.
inline void rsgd_step(ParamGroup& group, const std::vector<Tensor>& grads, double lr) {
    if (grads.size() != group.size()) throw invalid_input("rsgd_step: gradient count mismatch");
    detail::check_grads_finite(grads);
    bool clamped = false;
    for (std::size_t p = 0; p < group.size(); ++p) {
        const ParamRef& ref = group.refs()[p];
        Tensor& value = *ref.value;
        const Tensor& g = grads[p];
        if (!value.same_shape(g)) throw invalid_input("rsgd_step: gradient shape mismatch");
        if (ref.space == Space::euclidean) {
            for (std::size_t i = 0; i < value.size(); ++i) value[i] -= lr * g[i];
            continue;
        }
        const std::size_t rows = ParamGroup::point_rows(value);
        const std::size_t d = ParamGroup::point_dim(value);
        for (std::size_t r = 0; r < rows; ++r) {
            double q = 0.0;
            for (std::size_t i = 0; i < d; ++i) q += value[r * d + i] * value[r * d + i];
            const double scale = (1.0 - q) * (1.0 - q) / 4.0;
            Vec u(d);
            for (std::size_t i = 0; i < d; ++i) u[i] = -lr * scale * g[r * d + i];
            clamped |= detail::apply_manifold_update(value, r, u);
        }
    }
    group.note_step(clamped);
}

/// Adam with Riemannian handling of manifold points: moments on the
/// Riemannian gradient, second moment on its metric norm, update through the
/// exponential map.
inline void radam_step(ParamGroup& group, const std::vector<Tensor>& grads,
                       const AdamConfig& cfg) {
    if (grads.size() != group.size()) throw invalid_input("radam_step: gradient count mismatch");
    detail::check_grads_finite(grads);
    bool clamped = false;
    for (std::size_t p = 0; p < group.size(); ++p) {
        const ParamRef& ref = group.refs()[p];
        Tensor& value = *ref.value;
        const Tensor& g = grads[p];
        if (!value.same_shape(g)) throw invalid_input("radam_step: gradient shape mismatch");
        AdamState& st = group.state(ref);
        st.step += 1;
        const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step));
        const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step));

        if (ref.space == Space::euclidean) {
            for (std::size_t i = 0; i < value.size(); ++i) {
                st.m[i] = cfg.beta1 * st.m[i] + (1.0 - cfg.beta1) * g[i];
                st.v[i] = cfg.beta2 * st.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                const double mh = st.m[i] / bc1;
                const double vh = st.v[i] / bc2;
                value[i] -= cfg.lr * mh / (std::sqrt(vh) + cfg.eps);
            }
            continue;
        }

        const std::size_t rows = ParamGroup::point_rows(value);
        const std::size_t d = ParamGroup::point_dim(value);
        for (std::size_t r = 0; r < rows; ++r) {
            double q = 0.0;
            for (std::size_t i = 0; i < d; ++i) q += value[r * d + i] * value[r * d + i];
            const double scale = (1.0 - q) * (1.0 - q) / 4.0;
            const double lam = 2.0 / (1.0 - q);
            double rg_sq = 0.0;
            Vec rg(d);
            for (std::size_t i = 0; i < d; ++i) {
                rg[i] = scale * g[r * d + i];
                rg_sq += rg[i] * rg[i];
            }
            const double metric_sq = lam * lam * rg_sq;
            double& v_r = st.v[r];
            v_r = cfg.beta2 * v_r + (1.0 - cfg.beta2) * metric_sq;
            const double vh = v_r / bc2;
            const double denom = std::sqrt(vh) + cfg.eps;
            Vec u(d);
            for (std::size_t i = 0; i < d; ++i) {
                double& m_i = st.m[r * d + i];
                m_i = cfg.beta1 * m_i + (1.0 - cfg.beta1) * rg[i];
                u[i] = -cfg.lr * (m_i / bc1) / denom;
            }
            clamped |= detail::apply_manifold_update(value, r, u);
        }
    }
    group.note_step(clamped);
}

}  // namespace hyperseq::opt
