#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "hyperseq/common.hpp"

namespace hyperseq::geom {

/// A point of the Poincare ball model: coordinates strictly inside the unit
/// ball (norm clamped to <= 1 - kBallEps on construction). Curvature is -1.
class PoincarePoint {
public:
    explicit PoincarePoint(Vec coords) : coords_(std::move(coords)) {
        if (coords_.empty()) throw invalid_input("PoincarePoint: dimension must be >= 1");
        if (!all_finite(coords_)) throw invalid_input("PoincarePoint: non-finite coordinates");
        clamp();
    }

    static PoincarePoint origin(std::size_t dim) { return PoincarePoint(Vec(dim, 0.0)); }

    const Vec& coords() const { return coords_; }
    std::size_t dim() const { return coords_.size(); }
    double operator[](std::size_t i) const { return coords_[i]; }
    double radius() const { return norm(coords_); }

    friend bool operator==(const PoincarePoint& a, const PoincarePoint& b) {
        return a.coords_ == b.coords_;
    }

private:
    void clamp() {
        const double r = norm(coords_);
        const double max_r = 1.0 - kBallEps;
        if (r > max_r) {
            const double s = max_r / r;
            for (double& c : coords_) c *= s;
        }
    }

    Vec coords_;
};

/// Tangent vector at a base point. Tangent coordinates are unconstrained.
struct TangentVector {
    PoincarePoint base;
    Vec direction;

    TangentVector(PoincarePoint b, Vec d) : base(std::move(b)), direction(std::move(d)) {
        if (base.dim() != direction.size())
            throw invalid_input("TangentVector: base/direction dimension mismatch");
    }
};

/// Piecewise-linear curve sampled uniformly on [0, 1].
struct Curve {
    std::vector<PoincarePoint> samples;

    explicit Curve(std::vector<PoincarePoint> s) : samples(std::move(s)) {
        if (samples.size() < 2) throw invalid_input("Curve: needs >= 2 samples");
        for (const auto& p : samples)
            if (p.dim() != samples.front().dim())
                throw invalid_input("Curve: mixed dimensions");
    }
};

inline PoincarePoint project_to_ball(const Vec& v) {
    if (v.empty()) throw invalid_input("project_to_ball: empty vector");
    if (!all_finite(v)) throw invalid_input("project_to_ball: non-finite input");
    return PoincarePoint(v);  // the constructor clamps
}

inline double conformal_factor(const PoincarePoint& x) {
    return 2.0 / (1.0 - norm_sq(x.coords()));
}

/// Gyrovector addition before the boundary guard.
inline Vec mobius_add_raw(const Vec& xv, const Vec& yv) {
    const double c = dot(xv, yv);
    const double qx = norm_sq(xv);
    const double qy = norm_sq(yv);
    const double a = 1.0 + 2.0 * c + qy;
    const double b = 1.0 - qx;
    const double den = 1.0 + 2.0 * c + qx * qy;  // >= (1 - |x||y|)^2 > 0
    Vec out(xv.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (a * xv[i] + b * yv[i]) / den;
    return out;
}

inline PoincarePoint mobius_add(const PoincarePoint& x, const PoincarePoint& y) {
    if (x.dim() != y.dim()) throw invalid_input("mobius_add: dimension mismatch");
    return project_to_ball(mobius_add_raw(x.coords(), y.coords()));
}

inline PoincarePoint mobius_neg(const PoincarePoint& x) {
    return PoincarePoint(scaled(x.coords(), -1.0));
}

/// Poincare distance, evaluated as acosh(1 + u) = log1p(u + sqrt(u(u + 2)))
/// to avoid cancellation for nearby points.
inline double distance(const PoincarePoint& x, const PoincarePoint& y) {
    if (x.dim() != y.dim()) throw invalid_input("distance: dimension mismatch");
    const Vec d = subtracted(x.coords(), y.coords());
    const double u =
        2.0 * norm_sq(d) / ((1.0 - norm_sq(x.coords())) * (1.0 - norm_sq(y.coords())));
    return std::log1p(u + std::sqrt(u * (u + 2.0)));
}

/// Exponential map at the origin: v -> tanh(|v|) v/|v|  (curvature -1,
/// lambda_0 = 2 absorbed into the tanh argument).
inline PoincarePoint exp0(const Vec& v) {
    if (v.empty()) throw invalid_input("exp0: empty vector");
    if (!all_finite(v)) throw invalid_input("exp0: non-finite input");
    const double r = norm(v);
    if (r < 1e-15) return PoincarePoint(v);
    return project_to_ball(scaled(v, std::tanh(r) / r));
}

/// Logarithmic map at the origin: x -> artanh(|x|) x/|x|; zero at the origin
/// (removable singularity).
inline Vec log0(const PoincarePoint& x) {
    const double r = x.radius();
    if (r < 1e-15) return x.coords();
    return scaled(x.coords(), std::atanh(r) / r);
}

inline PoincarePoint exp_at(const TangentVector& v) {
    const double r = norm(v.direction);
    if (r < 1e-15) return v.base;
    const double lam = conformal_factor(v.base);
    const double t = std::tanh(lam * r / 2.0);
    return mobius_add(v.base, PoincarePoint(scaled(v.direction, t / r)));
}

inline TangentVector log_at(const PoincarePoint& x, const PoincarePoint& y) {
    const PoincarePoint w = mobius_add(mobius_neg(x), y);
    const double r = w.radius();
    if (r < 1e-15) return TangentVector(x, Vec(x.dim(), 0.0));
    const double lam = conformal_factor(x);
    return TangentVector(x, scaled(w.coords(), (2.0 / lam) * std::atanh(r) / r));
}

inline PoincarePoint geodesic_point(const PoincarePoint& x, const PoincarePoint& y, double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw invalid_input("geodesic_point: t outside [0,1]");
    TangentVector v = log_at(x, y);
    return exp_at(TangentVector(x, scaled(v.direction, t)));
}

/// Length of a sampled curve under the conformal metric: sum over segments of
/// lambda(midpoint) * |delta|. Converges to the Riemannian length as the
/// sampling refines.
inline double curve_length_numeric(const Curve& c) {
    double len = 0.0;
    for (std::size_t i = 0; i + 1 < c.samples.size(); ++i) {
        const Vec& a = c.samples[i].coords();
        const Vec& b = c.samples[i + 1].coords();
        Vec mid(a.size());
        for (std::size_t k = 0; k < a.size(); ++k) mid[k] = 0.5 * (a[k] + b[k]);
        const double lam = 2.0 / (1.0 - norm_sq(mid));
        len += lam * norm(subtracted(b, a));
    }
    return len;
}

/// Frechet (Karcher) mean: minimizer of sum of squared distances, by
/// Riemannian gradient descent from the projected Euclidean average.
/// Converged when the Riemannian length of the update falls below tol.
inline PoincarePoint frechet_mean(const std::vector<PoincarePoint>& points, double tol,
                                  int max_iters = 1000, double step = 0.2) {
    if (points.empty()) throw invalid_input("frechet_mean: empty point set");
    for (const auto& p : points)
        if (p.dim() != points.front().dim()) throw invalid_input("frechet_mean: mixed dimensions");
    if (points.size() == 1) return points.front();

    const std::size_t n = points.front().dim();
    Vec avg(n, 0.0);
    for (const auto& p : points)
        for (std::size_t i = 0; i < n; ++i) avg[i] += p[i];
    PoincarePoint m = project_to_ball(scaled(avg, 1.0 / static_cast<double>(points.size())));

    for (int iter = 0; iter < max_iters; ++iter) {
        Vec update(n, 0.0);
        for (const auto& p : points) {
            const TangentVector lg = log_at(m, p);
            for (std::size_t i = 0; i < n; ++i) update[i] += lg.direction[i];
        }
        for (std::size_t i = 0; i < n; ++i)
            update[i] *= step / static_cast<double>(points.size());
        if (conformal_factor(m) * norm(update) < tol) return m;
        m = exp_at(TangentVector(m, update));
    }
    throw convergence_error("frechet_mean: no convergence within iteration cap", m.coords());
}

}  // namespace hyperseq::geom
