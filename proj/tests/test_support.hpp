#pragma once

// Shared test-only helpers: independent oracles and random samplers. These
// intentionally re-derive results through routes that do not share code with
// the library implementations they check.

#include <cmath>
#include <vector>

#include "hyperseq/common.hpp"
#include "hyperseq/geometry.hpp"

namespace testsup {

using hyperseq::Rng;
using hyperseq::Vec;
using hyperseq::geom::PoincarePoint;

// Eq.(1) evaluated verbatim through std::acosh, independent of the library's
// log1p-based formulation.
inline double distance_reference(const Vec& x, const Vec& y) {
    double diff2 = 0.0, qx = 0.0, qy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        diff2 += (x[i] - y[i]) * (x[i] - y[i]);
        qx += x[i] * x[i];
        qy += y[i] * y[i];
    }
    return std::acosh(1.0 + 2.0 * diff2 / ((1.0 - qx) * (1.0 - qy)));
}

inline Vec random_in_ball(Rng& rng, std::size_t dim, double max_norm) {
    Vec v(dim);
    for (double& c : v) c = rng.normal();
    const double r = hyperseq::norm(v);
    const double target = max_norm * std::pow(rng.uniform(), 1.0 / static_cast<double>(dim));
    if (r > 0.0)
        for (double& c : v) c *= target / r;
    return v;
}

inline PoincarePoint random_point(Rng& rng, std::size_t dim, double max_norm) {
    return PoincarePoint(random_in_ball(rng, dim, max_norm));
}

// 2-D grid search minimizing sum of squared hyperbolic distances; refines
// around the coarse optimum. Used as the Frechet-mean oracle.
inline Vec grid_search_frechet_2d(const std::vector<Vec>& pts, double coarse_step = 2e-3,
                                  double fine_step = 2e-5) {
    auto objective = [&pts](double x, double y) {
        double s = 0.0;
        for (const auto& p : pts) {
            const double d = distance_reference({x, y}, p);
            s += d * d;
        }
        return s;
    };
    double best_x = 0.0, best_y = 0.0, best = objective(0.0, 0.0);
    const double lim = 0.999;
    for (double x = -lim; x <= lim; x += coarse_step) {
        for (double y = -lim; y <= lim; y += coarse_step) {
            if (x * x + y * y >= lim * lim) continue;
            const double v = objective(x, y);
            if (v < best) {
                best = v;
                best_x = x;
                best_y = y;
            }
        }
    }
    const double cx = best_x, cy = best_y;
    for (double x = cx - coarse_step; x <= cx + coarse_step; x += fine_step) {
        for (double y = cy - coarse_step; y <= cy + coarse_step; y += fine_step) {
            if (x * x + y * y >= 1.0) continue;
            const double v = objective(x, y);
            if (v < best) {
                best = v;
                best_x = x;
                best_y = y;
            }
        }
    }
    return {best_x, best_y};
}

}  // namespace testsup
