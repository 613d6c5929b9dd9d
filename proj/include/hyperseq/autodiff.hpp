#pragma once

// Minimal reverse-mode differentiation over dense tensors. Every primitive
// carries a hand-derived adjoint; grad_check verifies each against central
// finite differences. Graphs are built on a Tape and are single-owner.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "hyperseq/common.hpp"
#include "hyperseq/tensor.hpp"

namespace hyperseq::ad {

struct Var {
    std::int32_t id = -1;
    bool valid() const { return id >= 0; }
};

class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    void reserve(std::size_t n) { nodes_.reserve(n); }
    std::size_t num_nodes() const { return nodes_.size(); }

    Var leaf(Tensor value) {
        nodes_.push_back(Node{std::move(value), Tensor{}, nullptr});
        return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
    }

    /// Alias of leaf for values that never receive gradient reads.
    Var constant(Tensor value) { return leaf(std::move(value)); }

    const Tensor& value(Var v) const { return nodes_[v.id].value; }

    /// Accumulated adjoint (zeros until a backward pass reaches the node).
    const Tensor& adjoint(Var v) {
        Node& n = nodes_[v.id];
        if (n.adjoint.empty()) n.adjoint = n.value.like_zeros();
        return n.adjoint;
    }

    void zero_adjoints() {
        for (Node& n : nodes_) n.adjoint = Tensor{};
    }

    void clear() { nodes_.clear(); }

    /// Reverse pass from a scalar output. Each reachable node's adjoint gains
    /// d(output)/d(node); repeated calls accumulate.
    void backward(Var output) {
        if (!output.valid() || !nodes_[output.id].value.is_scalar())
            throw invalid_input("backward: output must be a scalar node");
        std::vector<Tensor> g(static_cast<std::size_t>(output.id) + 1);
        g[output.id] = Tensor::scalar(1.0);
        for (std::int32_t id = output.id; id >= 0; --id) {
            if (g[id].empty()) continue;
            const Node& n = nodes_[id];
            if (n.backprop) n.backprop(*this, g, id);
        }
        for (std::int32_t id = 0; id <= output.id; ++id) {
            if (g[id].empty()) continue;
            Node& n = nodes_[id];
            if (n.adjoint.empty()) n.adjoint = n.value.like_zeros();
            for (std::size_t k = 0; k < n.adjoint.size(); ++k) n.adjoint[k] += g[id][k];
        }
    }

    // ---- elementwise and linear primitives ----

    Var add(Var a, Var b) {
        check_same_shape(a, b, "add");
        Tensor out = value(a);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += value(b)[i];
        return emplace(std::move(out), [pa = a.id, pb = b.id](Tape& t, Grads& g, NodeId self) {
            const Tensor& go = g[self];
            t.accum(g, pa, go);
            t.accum(g, pb, go);
        });
    }

    Var sub(Var a, Var b) {
        check_same_shape(a, b, "sub");
        Tensor out = value(a);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] -= value(b)[i];
        return emplace(std::move(out), [pa = a.id, pb = b.id](Tape& t, Grads& g, NodeId self) {
            const Tensor& go = g[self];
            t.accum(g, pa, go);
            t.accum_scaled(g, pb, go, -1.0);
        });
    }

    Var mul(Var a, Var b) {
        check_same_shape(a, b, "mul");
        Tensor out = value(a);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] *= value(b)[i];
        return emplace(std::move(out), [pa = a.id, pb = b.id](Tape& t, Grads& g, NodeId self) {
            const Tensor& go = g[self];
            const Tensor& va = t.nodes_[pa].value;
            const Tensor& vb = t.nodes_[pb].value;
            Tensor& ga = t.slot(g, pa);
            Tensor& gb = t.slot(g, pb);
            for (std::size_t i = 0; i < go.size(); ++i) {
                ga[i] += go[i] * vb[i];
                gb[i] += go[i] * va[i];
            }
        });
    }

    Var divide(Var a, Var b) {
        check_same_shape(a, b, "divide");
        Tensor out = value(a);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] /= value(b)[i];
        return emplace(std::move(out), [pa = a.id, pb = b.id](Tape& t, Grads& g, NodeId self) {
            const Tensor& go = g[self];
            const Tensor& vb = t.nodes_[pb].value;
            const Tensor& vo = t.nodes_[self].value;
            Tensor& ga = t.slot(g, pa);
            Tensor& gb = t.slot(g, pb);
            for (std::size_t i = 0; i < go.size(); ++i) {
                ga[i] += go[i] / vb[i];
                gb[i] -= go[i] * vo[i] / vb[i];
            }
        });
    }

    Var neg(Var a) { return scale(a, -1.0); }

    Var scale(Var a, double c) {
        Tensor out = value(a);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] *= c;
        return emplace(std::move(out), [pa = a.id, c](Tape& t, Grads& g, NodeId self) {
            t.accum_scaled(g, pa, g[self], c);
        });
    }

    Var shift(Var a, double c) {
        Tensor out = value(a);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += c;
        return emplace(std::move(out), [pa = a.id](Tape& t, Grads& g, NodeId self) {
            t.accum(g, pa, g[self]);
        });
    }

    Var tanh(Var a) {
        Tensor out = value(a);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
        return emplace(std::move(out), [pa = a.id](Tape& t, Grads& g, NodeId self) {
            const Tensor& go = g[self];
            const Tensor& y = t.nodes_[self].value;
            Tensor& ga = t.slot(g, pa);
            for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * (1.0 - y[i] * y[i]);
        });
    }

    Var sigmoid(Var a) {
        Tensor out = value(a);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-out[i]));
        return emplace(std::move(out), [pa = a.id](Tape& t, Grads& g, NodeId self) {
            const Tensor& go = g[self];
            const Tensor& y = t.nodes_[self].value;
            Tensor& ga = t.slot(g, pa);
            for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * y[i] * (1.0 - y[i]);
        });
    }

    Var artanh(Var a) {
        Tensor out = value(a);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::atanh(out[i]);
        return emplace(std::move(out), [pa = a.id](Tape& t, Grads& g, NodeId self) {
            const Tensor& go = g[self];
            const Tensor& x = t.nodes_[pa].value;
            Tensor& ga = t.slot(g, pa);
            for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] / (1.0 - x[i] * x[i]);
        });
    }

    Var asinh(Var a) {
        Tensor out = value(a);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::asinh(out[i]);
        return emplace(std::move(out), [pa = a.id](Tape& t, Grads& g, NodeId self) {
            const Tensor& go = g[self];
            const Tensor& x = t.nodes_[pa].value;
            Tensor& ga = t.slot(g, pa);
            for (std::size_t i = 0; i < go.size(); ++i)
                ga[i] += go[i] / std::sqrt(1.0 + x[i] * x[i]);
        });
    }

    Var sqrt(Var a) {
        Tensor out = value(a);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(out[i]);
        return emplace(std::move(out), [pa = a.id](Tape& t, Grads& g, NodeId self) {
            const Tensor& go = g[self];
            const Tensor& y = t.nodes_[self].value;
            Tensor& ga = t.slot(g, pa);
            for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] / (2.0 * y[i]);
        });
    }

    /// Stable acosh(1 + u) for u >= 0, elementwise. The derivative diverges
    /// as u -> 0; contributions are dropped below a tiny threshold (the
    /// losses only consume this through forms that vanish there too).
    Var acosh1p(Var a) {
        Tensor out = value(a);
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = std::log1p(out[i] + std::sqrt(out[i] * (out[i] + 2.0)));
        return emplace(std::move(out), [pa = a.id](Tape& t, Grads& g, NodeId self) {
            const Tensor& go = g[self];
            const Tensor& u = t.nodes_[pa].value;
            Tensor& ga = t.slot(g, pa);
            for (std::size_t i = 0; i < go.size(); ++i) {
                if (u[i] < 1e-14) continue;
                ga[i] += go[i] / std::sqrt(u[i] * (u[i] + 2.0));
            }
        });
    }

    Var matvec(Var w, Var x) {
        const Tensor& W = value(w);
        const Tensor& X = value(x);
        if (W.rank() != 2 || X.rank() != 1 || W.cols() != X.size())
            throw invalid_input("matvec: shape mismatch");
        Tensor out = Tensor::zeros({W.rows()});
        for (std::size_t r = 0; r < W.rows(); ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < W.cols(); ++c) s += W.at(r, c) * X[c];
            out[r] = s;
        }
        return emplace(std::move(out), [pw = w.id, px = x.id](Tape& t, Grads& g, NodeId self) {
            const Tensor& go = g[self];
            const Tensor& W = t.nodes_[pw].value;
            const Tensor& X = t.nodes_[px].value;
            Tensor& gw = t.slot(g, pw);
            Tensor& gx = t.slot(g, px);
            for (std::size_t r = 0; r < W.rows(); ++r) {
                const double gr = go[r];
                for (std::size_t c = 0; c < W.cols(); ++c) {
                    gw.at(r, c) += gr * X[c];
                    gx[c] += W.at(r, c) * gr;
                }
            }
        });
    }

    Var sum(Var a) {
        double s = 0.0;
        for (std::size_t i = 0; i < value(a).size(); ++i) s += value(a)[i];
        return emplace(Tensor::scalar(s), [pa = a.id](Tape& t, Grads& g, NodeId self) {
            const double go = g[self][0];
            Tensor& ga = t.slot(g, pa);
            for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += go;
        });
    }

    Var concat(Var a, Var b) {
        const Tensor& A = value(a);
        const Tensor& B = value(b);
        if (A.rank() != 1 || B.rank() != 1) throw invalid_input("concat: rank-1 only");
        Tensor out = Tensor::zeros({A.size() + B.size()});
        for (std::size_t i = 0; i < A.size(); ++i) out[i] = A[i];
        for (std::size_t i = 0; i < B.size(); ++i) out[A.size() + i] = B[i];
        return emplace(std::move(out),
                       [pa = a.id, pb = b.id, na = A.size()](Tape& t, Grads& g, NodeId self) {
                           const Tensor& go = g[self];
                           Tensor& ga = t.slot(g, pa);
                           Tensor& gb = t.slot(g, pb);
                           for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += go[i];
                           for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += go[na + i];
                       });
    }

    /// Extracts row r of a rank-2 tensor as a rank-1 vector.
    Var row(Var m, std::size_t r) {
        const Tensor& M = value(m);
        if (M.rank() != 2 || r >= M.rows()) throw invalid_input("row: bad index or rank");
        Tensor out = Tensor::zeros({M.cols()});
        for (std::size_t c = 0; c < M.cols(); ++c) out[c] = M.at(r, c);
        return emplace(std::move(out), [pm = m.id, r](Tape& t, Grads& g, NodeId self) {
            const Tensor& go = g[self];
            Tensor& gm = t.slot(g, pm);
            for (std::size_t c = 0; c < go.size(); ++c) gm.at(r, c) += go[c];
        });
    }

    /// Gathers scalar nodes into a rank-1 vector.
    Var pack(const std::vector<Var>& scalars) {
        if (scalars.empty()) throw invalid_input("pack: empty");
        Tensor out = Tensor::zeros({scalars.size()});
        std::vector<std::int32_t> ids(scalars.size());
        for (std::size_t i = 0; i < scalars.size(); ++i) {
            if (!value(scalars[i]).is_scalar()) throw invalid_input("pack: scalars only");
            out[i] = value(scalars[i])[0];
            ids[i] = scalars[i].id;
        }
        return emplace(std::move(out), [ids = std::move(ids)](Tape& t, Grads& g, NodeId self) {
            const Tensor& go = g[self];
            for (std::size_t i = 0; i < ids.size(); ++i) t.slot(g, ids[i])[0] += go[i];
        });
    }

    /// Numerically stable log(sum(exp(v))).
    Var logsumexp(Var a) {
        const Tensor& v = value(a);
        if (v.rank() != 1 || v.size() == 0) throw invalid_input("logsumexp: rank-1 only");
        double m = v[0];
        for (std::size_t i = 1; i < v.size(); ++i) m = std::max(m, v[i]);
        double s = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) s += std::exp(v[i] - m);
        return emplace(Tensor::scalar(m + std::log(s)),
                       [pa = a.id](Tape& t, Grads& g, NodeId self) {
                           const double go = g[self][0];
                           const double y = t.nodes_[self].value[0];
                           const Tensor& v = t.nodes_[pa].value;
                           Tensor& ga = t.slot(g, pa);
                           for (std::size_t i = 0; i < v.size(); ++i)
                               ga[i] += go * std::exp(v[i] - y);
                       });
    }

    // ---- manifold primitives ----

    /// Raw Mobius addition (no boundary projection; compose with
    /// project_ball where the model requires the invariant).
    Var mobius_add(Var x, Var y) {
        check_same_shape(x, y, "mobius_add");
        const Tensor& xv = value(x);
        const Tensor& yv = value(y);
        const double c = dot_(xv, yv);
        const double qx = dot_(xv, xv);
        const double qy = dot_(yv, yv);
        const double a = 1.0 + 2.0 * c + qy;
        const double b = 1.0 - qx;
        const double den = 1.0 + 2.0 * c + qx * qy;
        Tensor out = Tensor::zeros(xv.shape());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = (a * xv[i] + b * yv[i]) / den;
        return emplace(std::move(out), [px = x.id, py = y.id](Tape& t, Grads& g, NodeId self) {
            const Tensor& go = g[self];
            const Tensor& xv = t.nodes_[px].value;
            const Tensor& yv = t.nodes_[py].value;
            const Tensor& m = t.nodes_[self].value;
            const double c = dot_(xv, yv);
            const double qx = dot_(xv, xv);
            const double qy = dot_(yv, yv);
            const double a = 1.0 + 2.0 * c + qy;
            const double b = 1.0 - qx;
            const double den = 1.0 + 2.0 * c + qx * qy;
            const double gx_dot = dot_(go, xv);
            const double gy_dot = dot_(go, yv);
            const double gm_dot = dot_(go, m);
            Tensor& gx = t.slot(g, px);
            Tensor& gy = t.slot(g, py);
            for (std::size_t j = 0; j < go.size(); ++j) {
                gx[j] += (2.0 * gx_dot * yv[j] + a * go[j] - 2.0 * gy_dot * xv[j] -
                          gm_dot * (2.0 * yv[j] + 2.0 * qy * xv[j])) /
                         den;
                gy[j] += (gx_dot * (2.0 * xv[j] + 2.0 * yv[j]) + b * go[j] -
                          gm_dot * (2.0 * xv[j] + 2.0 * qx * yv[j])) /
                         den;
            }
        });
    }

    Var exp0(Var v) {
        const Tensor& vv = value(v);
        const double r = std::sqrt(dot_(vv, vv));
        Tensor out = vv;
        const double h = (r < 1e-8) ? 1.0 - r * r / 3.0 : std::tanh(r) / r;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] *= h;
        return emplace(std::move(out), [pv = v.id](Tape& t, Grads& g, NodeId self) {
            const Tensor& go = g[self];
            const Tensor& vv = t.nodes_[pv].value;
            const double r = std::sqrt(dot_(vv, vv));
            double h, hp_over_r;
            if (r < 1e-4) {
                h = 1.0 - r * r / 3.0 + 2.0 * r * r * r * r / 15.0;
                hp_over_r = -2.0 / 3.0 + 8.0 * r * r / 15.0;
            } else {
                const double T = std::tanh(r);
                h = T / r;
                hp_over_r = ((1.0 - T * T) / r - T / (r * r)) / r;
            }
            const double gv_dot = dot_(go, vv);
            Tensor& gv = t.slot(g, pv);
            for (std::size_t j = 0; j < go.size(); ++j)
                gv[j] += h * go[j] + hp_over_r * gv_dot * vv[j];
        });
    }

    Var log0(Var x) {
        const Tensor& xv = value(x);
        const double r = std::sqrt(dot_(xv, xv));
        Tensor out = xv;
        const double k = (r < 1e-8) ? 1.0 + r * r / 3.0 : std::atanh(r) / r;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] *= k;
        return emplace(std::move(out), [px = x.id](Tape& t, Grads& g, NodeId self) {
            const Tensor& go = g[self];
            const Tensor& xv = t.nodes_[px].value;
            const double r = std::sqrt(dot_(xv, xv));
            double k, kp_over_r;
            if (r < 1e-4) {
                k = 1.0 + r * r / 3.0 + r * r * r * r / 5.0;
                kp_over_r = 2.0 / 3.0 + 4.0 * r * r / 5.0;
            } else {
                const double A = std::atanh(r);
                k = A / r;
                kp_over_r = 1.0 / (r * r * (1.0 - r * r)) - A / (r * r * r);
            }
            const double gx_dot = dot_(go, xv);
            Tensor& gx = t.slot(g, px);
            for (std::size_t j = 0; j < go.size(); ++j)
                gx[j] += k * go[j] + kp_over_r * gx_dot * xv[j];
        });
    }

    /// Poincare distance in the stable acosh(1+u) form. The gradient at
    /// coincident points is defined as zero (the losses only use d^2, whose
    /// true gradient vanishes there).
    Var poincare_distance(Var x, Var y) {
        check_same_shape(x, y, "poincare_distance");
        const Tensor& xv = value(x);
        const Tensor& yv = value(y);
        double e = 0.0;
        for (std::size_t i = 0; i < xv.size(); ++i) e += (xv[i] - yv[i]) * (xv[i] - yv[i]);
        const double qx = dot_(xv, xv);
        const double qy = dot_(yv, yv);
        const double u = 2.0 * e / ((1.0 - qx) * (1.0 - qy));
        const double d = std::log1p(u + std::sqrt(u * (u + 2.0)));
        return emplace(Tensor::scalar(d), [px = x.id, py = y.id](Tape& t, Grads& g, NodeId self) {
            const double go = g[self][0];
            const Tensor& xv = t.nodes_[px].value;
            const Tensor& yv = t.nodes_[py].value;
            double e = 0.0;
            for (std::size_t i = 0; i < xv.size(); ++i) e += (xv[i] - yv[i]) * (xv[i] - yv[i]);
            const double qx = dot_(xv, xv);
            const double qy = dot_(yv, yv);
            const double p = (1.0 - qx) * (1.0 - qy);
            const double u = 2.0 * e / p;
            if (u < 1e-14) return;
            const double inv_s = 1.0 / std::sqrt(u * (u + 2.0));
            Tensor& gx = t.slot(g, px);
            Tensor& gy = t.slot(g, py);
            for (std::size_t j = 0; j < xv.size(); ++j) {
                const double diff = xv[j] - yv[j];
                gx[j] += go * inv_s * (4.0 * diff / p + 2.0 * u * xv[j] / (1.0 - qx));
                gy[j] += go * inv_s * (-4.0 * diff / p + 2.0 * u * yv[j] / (1.0 - qy));
            }
        });
    }

    /// Boundary guard. Identity when the input is interior; otherwise the
    /// rescaling to norm 1 - kBallEps, with the exact rescaling Jacobian in
    /// the backward pass.
    Var project_ball(Var v) {
        const Tensor& vv = value(v);
        const double r = std::sqrt(dot_(vv, vv));
        const double max_r = 1.0 - kBallEps;
        const bool fired = r > max_r;
        Tensor out = vv;
        if (fired)
            for (std::size_t i = 0; i < out.size(); ++i) out[i] *= max_r / r;
        return emplace(std::move(out), [pv = v.id, fired](Tape& t, Grads& g, NodeId self) {
            const Tensor& go = g[self];
            const Tensor& vv = t.nodes_[pv].value;
            Tensor& gv = t.slot(g, pv);
            if (!fired) {
                for (std::size_t j = 0; j < go.size(); ++j) gv[j] += go[j];
                return;
            }
            const double r = std::sqrt(dot_(vv, vv));
            const double max_r = 1.0 - kBallEps;
            const double gdotv = dot_(go, vv);
            for (std::size_t j = 0; j < go.size(); ++j)
                gv[j] += max_r * (go[j] / r - gdotv * vv[j] / (r * r * r));
        });
    }

private:
    using NodeId = std::int32_t;
    using Grads = std::vector<Tensor>;
    using Backprop = std::function<void(Tape&, Grads&, NodeId)>;

    struct Node {
        Tensor value;
        Tensor adjoint;
        Backprop backprop;
    };

    Var emplace(Tensor value, Backprop b) {
        nodes_.push_back(Node{std::move(value), Tensor{}, std::move(b)});
        return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
    }

    Tensor& slot(Grads& g, NodeId id) {
        if (g[id].empty()) g[id] = nodes_[id].value.like_zeros();
        return g[id];
    }

    void accum(Grads& g, NodeId id, const Tensor& contribution) {
        Tensor& dst = slot(g, id);
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += contribution[i];
    }

    void accum_scaled(Grads& g, NodeId id, const Tensor& contribution, double s) {
        Tensor& dst = slot(g, id);
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += s * contribution[i];
    }

    void check_same_shape(Var a, Var b, const char* op) const {
        if (!value(a).same_shape(value(b)))
            throw invalid_input(std::string(op) + ": shape mismatch");
    }

    static double dot_(const Tensor& a, const Tensor& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
        return s;
    }

    std::vector<Node> nodes_;
};

// ---- finite-difference verification ----

struct GradCheckReport {
    std::string op_name;
    double max_rel_error = 0.0;
    double step = 0.0;
    bool pass = false;
};

using TapeFn = std::function<Var(Tape&, const std::vector<Var>&)>;

/// Compares the tape's adjoints for `f` (scalar-valued) against central
/// finite differences, coordinate by coordinate. Inputs flagged in
/// `ball_inputs` must sit inside the ball with margin >= 10*step so the
/// perturbed evaluations stay on the manifold.
inline GradCheckReport grad_check(const std::string& name, const TapeFn& f,
                                  const std::vector<Tensor>& inputs, double step, double tol,
                                  const std::vector<bool>& ball_inputs = {}) {
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const bool on_ball = i < ball_inputs.size() && ball_inputs[i];
        if (on_ball) {
            double q = 0.0;
            for (std::size_t k = 0; k < inputs[i].size(); ++k) q += inputs[i][k] * inputs[i][k];
            if (std::sqrt(q) > 1.0 - kBallEps - 10.0 * step)
                throw invalid_input("grad_check: input too close to the ball boundary");
        }
    }

    auto eval = [&f](const std::vector<Tensor>& ins) {
        Tape t;
        std::vector<Var> vars;
        vars.reserve(ins.size());
        for (const Tensor& in : ins) vars.push_back(t.leaf(in));
        Var out = f(t, vars);
        if (!t.value(out).is_scalar()) throw invalid_input("grad_check: op must be scalar-valued");
        return t.value(out)[0];
    };

    // analytic pass
    Tape t;
    std::vector<Var> vars;
    for (const Tensor& in : inputs) vars.push_back(t.leaf(in));
    Var out = f(t, vars);
    if (!t.value(out).is_scalar()) throw invalid_input("grad_check: op must be scalar-valued");
    t.backward(out);

    double worst = 0.0;
    std::vector<Tensor> work = inputs;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const Tensor& analytic = t.adjoint(vars[i]);
        for (std::size_t k = 0; k < inputs[i].size(); ++k) {
            const double orig = work[i][k];
            work[i][k] = orig + step;
            const double fp = eval(work);
            work[i][k] = orig - step;
            const double fm = eval(work);
            work[i][k] = orig;
            const double numeric = (fp - fm) / (2.0 * step);
            const double a = analytic[k];
            const double rel =
                std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
            worst = std::max(worst, rel);
        }
    }
    return GradCheckReport{name, worst, step, worst < tol};
}

}  // namespace hyperseq::ad
