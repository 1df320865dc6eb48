#pragma once

#include <chrono>
#include <map>
#include <numbers>
#include <ostream>

#include "json.hpp"
#include "sqpc/data.hpp"
#include "sqpc/squaring.hpp"
#include "sqpc/unitary.hpp"

namespace sqpc {

// Gradients use G = ∂L/∂Re + i ∂L/∂Im for every complex parameter; steepest descent is W − ηG.

// ---------------------------------------------------------------------------
// Parameter blocks

struct ParamBlock {
    enum class Kind { sum_weight, table, fourier_bias };
    Kind kind = Kind::sum_weight;
    std::vector<int> layers;  // tables of one tie group are stacked row-wise in this order
    bool manifold = false;    // rows kept orthonormal
};

inline std::vector<ParamBlock> param_blocks(const TensorizedCircuit& c, bool unitary) {
    std::vector<ParamBlock> out;
    std::map<int, std::size_t> tie;
    for (int i = 0; i < c.num_layers(); ++i) {
        const Layer& l = c.layer(i);
        if (l.kind == Layer::Kind::sum) {
            out.push_back({ParamBlock::Kind::sum_weight, {i}, unitary});
        } else if (l.kind == Layer::Kind::input && l.family.learnable) {
            if (l.family.kind == InputFamily::Kind::categorical) {
                const bool manifold = unitary && l.family.orthonormal;
                if (l.tie_group >= 0) {
                    auto it = tie.find(l.tie_group);
                    if (it != tie.end()) {
                        out[it->second].layers.push_back(i);
                        continue;
                    }
                    tie[l.tie_group] = out.size();
                }
                out.push_back({ParamBlock::Kind::table, {i}, manifold});
            } else if (l.family.kind == InputFamily::Kind::fourier) {
                out.push_back({ParamBlock::Kind::fourier_bias, {i}, false});
            }
        }
    }
    return out;
}

inline MatrixC gather_block(const TensorizedCircuit& c, const ParamBlock& b) {
    switch (b.kind) {
    case ParamBlock::Kind::sum_weight: return c.layer(b.layers[0]).weight;
    case ParamBlock::Kind::fourier_bias: return MatrixC::Constant(1, 1, cplx(c.layer(b.layers[0]).family.bias, 0.0));
    case ParamBlock::Kind::table: {
        Eigen::Index rows = 0;
        for (int i : b.layers) rows += c.layer(i).family.table.rows();
        MatrixC T(rows, c.layer(b.layers[0]).family.table.cols());
        Eigen::Index r = 0;
        for (int i : b.layers) {
            const MatrixC& t = c.layer(i).family.table;
            T.middleRows(r, t.rows()) = t;
            r += t.rows();
        }
        return T;
    }
    }
    return {};
}

inline void scatter_block(TensorizedCircuit& c, const ParamBlock& b, const MatrixC& v) {
    switch (b.kind) {
    case ParamBlock::Kind::sum_weight: c.mutable_layer(b.layers[0]).weight = v; break;
    case ParamBlock::Kind::fourier_bias: c.mutable_layer(b.layers[0]).family.bias = v(0, 0).real(); break;
    case ParamBlock::Kind::table: {
        Eigen::Index r = 0;
        for (int i : b.layers) {
            MatrixC& t = c.mutable_layer(i).family.table;
            t = v.middleRows(r, t.rows());
            r += t.rows();
        }
        break;
    }
    }
}

// Gradient of one block from per-layer gradients.
inline MatrixC gather_grad(const TensorizedCircuit& c, const ParamBlock& b, const std::vector<MatrixC>& g) {
    if (b.kind != ParamBlock::Kind::table) {
        const MatrixC& x = g[static_cast<std::size_t>(b.layers[0])];
        return x.size() ? x : MatrixC::Zero(gather_block(c, b).rows(), gather_block(c, b).cols());
    }
    MatrixC out = MatrixC::Zero(gather_block(c, b).rows(), c.layer(b.layers[0]).family.table.cols());
    Eigen::Index r = 0;
    for (int i : b.layers) {
        const MatrixC& x = g[static_cast<std::size_t>(i)];
        const Eigen::Index k = c.layer(i).family.table.rows();
        if (x.size()) out.middleRows(r, k) = x;
        r += k;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reverse mode through layers

// Per-layer parameter gradients: sum weight (K1×K2), categorical table (K×v), Fourier bias (1×1, real part).
using LayerGrads = std::vector<MatrixC>;

inline LayerGrads zero_layer_grads(const TensorizedCircuit& c) {
    LayerGrads g(static_cast<std::size_t>(c.num_layers()));
    for (int i = 0; i < c.num_layers(); ++i) {
        const Layer& l = c.layer(i);
        if (l.kind == Layer::Kind::sum) g[static_cast<std::size_t>(i)] = MatrixC::Zero(l.weight.rows(), l.weight.cols());
        else if (l.kind == Layer::Kind::input && l.family.kind == InputFamily::Kind::categorical)
            g[static_cast<std::size_t>(i)] = MatrixC::Zero(l.family.table.rows(), l.family.table.cols());
        else if (l.kind == Layer::Kind::input && l.family.kind == InputFamily::Kind::fourier)
            g[static_cast<std::size_t>(i)] = MatrixC::Zero(1, 1);
    }
    return g;
}

inline void add_grads(LayerGrads& into, const LayerGrads& g, double scale = 1.0) {
    for (std::size_t i = 0; i < into.size(); ++i)
        if (g[i].size()) into[i] += scale * g[i];
}

// Adjoints of every layer given the output adjoint (1 × batch); adds sum-weight gradients into grads.
inline std::vector<MatrixC> backward_layers(const TensorizedCircuit& c, const std::vector<MatrixC>& vals, const MatrixC& g_out,
                                            LayerGrads& grads) {
    std::vector<MatrixC> adj(static_cast<std::size_t>(c.num_layers()));
    const Eigen::Index B = g_out.cols();
    for (int i = 0; i < c.num_layers(); ++i) adj[static_cast<std::size_t>(i)] = MatrixC::Zero(c.layer(i).width, B);
    adj[static_cast<std::size_t>(c.output())] = g_out;
    for (int i = c.num_layers() - 1; i >= 0; --i) {
        const Layer& l = c.layer(i);
        const MatrixC& a = adj[static_cast<std::size_t>(i)];
        switch (l.kind) {
        case Layer::Kind::input:
            break;
        case Layer::Kind::sum: {
            Eigen::Index off = 0;
            MatrixC& gw = grads[static_cast<std::size_t>(i)];
            for (int in : l.inputs) {
                const MatrixC& x = vals[static_cast<std::size_t>(in)];
                gw.middleCols(off, x.rows()).noalias() += a * x.adjoint();
                adj[static_cast<std::size_t>(in)].noalias() += l.weight.middleCols(off, x.rows()).adjoint() * a;
                off += x.rows();
            }
            break;
        }
        case Layer::Kind::hadamard: {
            const int p = l.inputs[0], q = l.inputs[1];
            adj[static_cast<std::size_t>(p)] += vals[static_cast<std::size_t>(q)].conjugate().cwiseProduct(a);
            adj[static_cast<std::size_t>(q)] += vals[static_cast<std::size_t>(p)].conjugate().cwiseProduct(a);
            break;
        }
        case Layer::Kind::kronecker: {
            const int p = l.inputs[0], q = l.inputs[1];
            const MatrixC& va = vals[static_cast<std::size_t>(p)];
            const MatrixC& vb = vals[static_cast<std::size_t>(q)];
            const Eigen::Index K1 = va.rows(), K2 = vb.rows();
            MatrixC src;
            if (l.perm.empty()) {
                src = a;
            } else {
                src.resize(a.rows(), B);
                for (Eigen::Index r = 0; r < a.rows(); ++r) src.row(l.perm[static_cast<std::size_t>(r)]) = a.row(r);
            }
            MatrixC& ga = adj[static_cast<std::size_t>(p)];
            MatrixC& gb = adj[static_cast<std::size_t>(q)];
            const MatrixC cb = vb.conjugate();
            for (Eigen::Index r = 0; r < K1; ++r) {
                auto blk = src.middleRows(r * K2, K2);
                ga.row(r) += blk.cwiseProduct(cb).colwise().sum();
                gb += (blk.array().rowwise() * va.row(r).conjugate().array()).matrix();
            }
            break;
        }
        }
    }
    return adj;
}

// Adds input-family gradients from input-layer adjoints evaluated at rows [begin, end) of X.
inline void input_grads(const TensorizedCircuit& c, const std::vector<MatrixC>& vals, const std::vector<MatrixC>& adj,
                        const MatrixR& X, long begin, LayerGrads& grads) {
    for (int i = 0; i < c.num_layers(); ++i) {
        const Layer& l = c.layer(i);
        if (l.kind != Layer::Kind::input || !l.family.learnable) continue;
        const MatrixC& a = adj[static_cast<std::size_t>(i)];
        MatrixC& g = grads[static_cast<std::size_t>(i)];
        if (l.family.kind == InputFamily::Kind::categorical) {
            for (Eigen::Index b = 0; b < a.cols(); ++b) g.col(static_cast<Eigen::Index>(X(begin + b, l.var))) += a.col(b);
        } else if (l.family.kind == InputFamily::Kind::fourier) {
            const MatrixC& v = vals[static_cast<std::size_t>(i)];
            double s = 0;
            for (Eigen::Index k = 0; k < v.rows(); ++k) {
                const cplx dphase(0.0, 2.0 * std::numbers::pi * l.family.freq[static_cast<std::size_t>(k)] / l.family.period);
                for (Eigen::Index b = 0; b < v.cols(); ++b) s += (std::conj(a(k, b)) * v(k, b) * dphase).real();
            }
            g(0, 0) += s;
        }
    }
}

// ---------------------------------------------------------------------------
// Negative log-likelihood

enum class Normalization { detect, unitary, materialize };

struct LossValue {
    double nll = 0;
    double log_partition = 0;
    std::vector<double> log_density;
    int floored = 0;  // examples with |c(x)|² clamped at the log floor
    int batch = 0;

    double mean_nll() const { return batch ? nll / batch : 0.0; }
    double bpd(int d) const { return nll / (static_cast<double>(batch) * d * std::numbers::ln2); }
};

namespace detail {

inline bool resolve_unitary(const TensorizedCircuit& c, Normalization n) {
    if (n == Normalization::detect) return check_unitarity(c).unitary();
    return n == Normalization::unitary;
}

// Gradients of both factors of a Tracy-Singh product with one row block each.
inline void tracy_singh_grad(const BlockMatrix& A, const BlockMatrix& B, const MatrixC& GS, MatrixC& GA, MatrixC& GB) {
    const Eigen::Index R1 = A.M.rows(), R2 = B.M.rows();
    GA = MatrixC::Zero(A.M.rows(), A.M.cols());
    GB = MatrixC::Zero(B.M.rows(), B.M.cols());
    Eigen::Index col = 0;
    int oa = 0;
    for (int Ca : A.col_blocks) {
        int ob = 0;
        for (int Cb : B.col_blocks) {
            for (Eigen::Index r1 = 0; r1 < R1; ++r1)
                for (int c1 = 0; c1 < Ca; ++c1) {
                    const cplx av = A.M(r1, oa + c1);
                    for (Eigen::Index r2 = 0; r2 < R2; ++r2)
                        for (int c2 = 0; c2 < Cb; ++c2) {
                            const cplx gs = GS(r1 * R2 + r2, col + c1 * Cb + c2);
                            GA(r1, oa + c1) += gs * std::conj(B.M(r2, ob + c2));
                            GB(r2, ob + c2) += gs * std::conj(av);
                        }
                }
            col += static_cast<Eigen::Index>(Ca) * Cb;
            ob += Cb;
        }
        oa += Ca;
    }
}

inline BlockMatrix sum_side(const TensorizedCircuit& c, int l, bool conj) {
    const Layer& L = c.layer(l);
    if (L.kind != Layer::Kind::sum) return BlockMatrix::trivial(MatrixC::Identity(L.width, L.width));
    BlockMatrix W;
    W.M = conj ? MatrixC(L.weight.conjugate()) : L.weight;
    W.row_blocks = {L.width};
    for (int i : L.inputs) W.col_blocks.push_back(c.layer(i).width);
    return W;
}

}  // namespace detail

// log Z of |c|² through the materialized square; adds scale · ∂log Z into grads when given.
inline double log_partition_materialized(const TensorizedCircuit& c, double scale = 0.0, LayerGrads* grads = nullptr) {
    require(check_structured_decomposable(c), ErrorKind::precondition,
            "normalizing a non-unitary circuit needs structured decomposability");
    const TensorizedCircuit cc = conjugate(c);
    ProductCircuit pc = multiply_with_origin(c, cc);
    const TensorizedCircuit& s = pc.circuit;
    auto vals = integrate_layers(s, Assignment(static_cast<std::size_t>(c.num_vars()), missing_value()), c.scope());
    const double Z = vals[static_cast<std::size_t>(s.output())](0, 0).real();
    require(std::isfinite(Z) && Z > 0, ErrorKind::numerical, "partition function is not positive: " + std::to_string(Z));
    if (!grads) return std::log(Z);

    LayerGrads sg = zero_layer_grads(s);
    MatrixC g_out = MatrixC::Constant(1, 1, cplx(scale / Z, 0.0));
    auto adj = backward_layers(s, vals, g_out, sg);
    LayerGrads& g = *grads;
    for (int i = 0; i < s.num_layers(); ++i) {
        const Layer& l = s.layer(i);
        const ProductOrigin o = pc.origin[static_cast<std::size_t>(i)];
        if (l.kind == Layer::Kind::sum) {
            const MatrixC& GS = sg[static_cast<std::size_t>(i)];
            if (o.a >= 0 && o.b >= 0) {
                MatrixC GA, GB;
                detail::tracy_singh_grad(detail::sum_side(c, o.a, false), detail::sum_side(c, o.b, true), GS, GA, GB);
                if (c.layer(o.a).kind == Layer::Kind::sum) g[static_cast<std::size_t>(o.a)] += GA;
                if (c.layer(o.b).kind == Layer::Kind::sum) g[static_cast<std::size_t>(o.b)] += GB.conjugate();
            } else if (o.a >= 0) {
                g[static_cast<std::size_t>(o.a)] += GS;
            } else {
                g[static_cast<std::size_t>(o.b)] += GS.conjugate();
            }
        } else if (l.kind == Layer::Kind::input && l.family.kind == InputFamily::Kind::categorical) {
            // integrated input: ℓ_p = Σ_x P(p, x)
            const MatrixC GP = adj[static_cast<std::size_t>(i)].col(0).replicate(1, l.family.table.cols());
            const bool la = o.a >= 0 && c.layer(o.a).family.learnable;
            const bool lb = o.b >= 0 && c.layer(o.b).family.learnable;
            if (o.a >= 0 && o.b >= 0) {
                const MatrixC& A = c.layer(o.a).family.table;
                const MatrixC B = c.layer(o.b).family.table.conjugate();
                const Eigen::Index K2 = B.rows();
                MatrixC GA = MatrixC::Zero(A.rows(), A.cols()), GB = MatrixC::Zero(B.rows(), B.cols());
                for (Eigen::Index p = 0; p < A.rows(); ++p)
                    for (Eigen::Index q = 0; q < K2; ++q) {
                        GA.row(p) += GP.row(p * K2 + q).cwiseProduct(B.row(q).conjugate());
                        GB.row(q) += GP.row(p * K2 + q).cwiseProduct(A.row(p).conjugate());
                    }
                if (la) g[static_cast<std::size_t>(o.a)] += GA;
                if (lb) g[static_cast<std::size_t>(o.b)] += GB.conjugate();
            } else if (la) {
                g[static_cast<std::size_t>(o.a)] += GP;
            } else if (lb) {
                g[static_cast<std::size_t>(o.b)] += GP.conjugate();
            }
        }
        // Fourier biases: Z integrates over whole periods, so it does not depend on them.
    }
    return std::log(Z);
}

namespace detail {

// Data term −Σ 2 log|c(x)| over rows [b, e); fills log|c|² and adds gradients when asked.
inline void data_term(const TensorizedCircuit& c, const MatrixR& X, long b, long e, std::vector<double>& logc2, int& floored,
                      LayerGrads* grads) {
    auto vals = forward_layers(c, X, b, e);
    const MatrixC& out = vals[static_cast<std::size_t>(c.output())];
    MatrixC g_out = MatrixC::Zero(1, e - b);
    for (long k = 0; k < e - b; ++k) {
        const cplx v = out(0, k);
        const double m2 = std::norm(v);
        if (!(m2 >= log_floor)) {
            logc2[static_cast<std::size_t>(b + k)] = std::log(log_floor);
            ++floored;
        } else {
            logc2[static_cast<std::size_t>(b + k)] = std::log(m2);
            g_out(0, k) = -2.0 / std::conj(v);
        }
    }
    if (!grads) return;
    auto adj = backward_layers(c, vals, g_out, *grads);
    input_grads(c, vals, adj, X, b, *grads);
}

inline LossValue loss_impl(const TensorizedCircuit& c, const MatrixR& X, Normalization norm, LayerGrads* grads) {
    const long n = X.rows();
    require(n >= 1, ErrorKind::input, "empty batch");
    LossValue L;
    L.batch = static_cast<int>(n);
    std::vector<double> logc2(static_cast<std::size_t>(n));
    const int chunks = chunk_count(n);
    std::vector<LayerGrads> part(static_cast<std::size_t>(chunks));
    std::vector<int> fl(static_cast<std::size_t>(chunks), 0);
    constexpr long block = 512;
    parallel_chunks(n, [&](int k, long b, long e) {
        if (grads) part[static_cast<std::size_t>(k)] = zero_layer_grads(c);
        for (long s = b; s < e; s += block)
            data_term(c, X, s, std::min(e, s + block), logc2, fl[static_cast<std::size_t>(k)],
                      grads ? &part[static_cast<std::size_t>(k)] : nullptr);
    });
    if (grads)
        for (const auto& p : part) add_grads(*grads, p);
    for (int f : fl) L.floored += f;
    if (!resolve_unitary(c, norm)) L.log_partition = log_partition_materialized(c, static_cast<double>(n), grads);
    L.log_density.resize(static_cast<std::size_t>(n));
    for (long k = 0; k < n; ++k) L.log_density[static_cast<std::size_t>(k)] = logc2[static_cast<std::size_t>(k)] - L.log_partition;
    std::vector<double> terms(logc2.begin(), logc2.end());
    L.nll = static_cast<double>(n) * L.log_partition - pairwise_sum(terms);
    return L;
}

}  // namespace detail

// L = |B| log Z − Σ 2 log|c(x)|; log Z is skipped (0) for unitary circuits.
inline LossValue nll(const TensorizedCircuit& c, const MatrixR& X, Normalization norm = Normalization::detect) {
    return detail::loss_impl(c, X, norm, nullptr);
}

struct LossAndGrad {
    LossValue loss;
    LayerGrads layer_grads;
};

inline LossAndGrad backward(const TensorizedCircuit& c, const MatrixR& X, Normalization norm = Normalization::detect) {
    LossAndGrad r;
    r.layer_grads = zero_layer_grads(c);
    r.loss = detail::loss_impl(c, X, norm, &r.layer_grads);
    return r;
}

// Evaluates in blocks to bound memory; returns bits per dimension.
inline double eval_bpd(const TensorizedCircuit& c, const MatrixR& X, Normalization norm, long block = 2048) {
    require(X.rows() >= 1, ErrorKind::input, "empty evaluation set");
    const double logZ = detail::resolve_unitary(c, norm) ? 0.0 : log_partition_materialized(c);
    double total = 0;
    for (long s = 0; s < X.rows(); s += block) {
        const long e = std::min<long>(X.rows(), s + block);
        total += nll(c, X.middleRows(s, e - s), Normalization::unitary).nll + static_cast<double>(e - s) * logZ;
    }
    return total / (static_cast<double>(X.rows()) * static_cast<double>(X.cols()) * std::numbers::ln2);
}

// ---------------------------------------------------------------------------
// Optimizers

struct LandingHyper {
    double lr = 0.01;
    double lambda = 0.1;
    double eps = 0.5;
    double momentum = 0.9;
    double dampening = 0.0;
    double weight_decay = 0.0;
    int period = 100;  // polar projection every `period` steps
    bool nesterov = false;

    void validate() const {
        require(lr >= 0 && lambda > 0 && eps >= 0 && period >= 1, ErrorKind::input,
                "landing needs lr >= 0, lambda > 0, eps >= 0, period >= 1");
    }
};

struct AdamHyper {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct OptimizerState {
    MatrixC A;  // momentum buffer (landing) / first moment (adam)
    MatrixR v;  // second moment
    long t = 0;
};

struct StepInfo {
    double distance = 0;  // ‖WW† − I‖_F after the step
    double step = 0;      // step size used
    bool projected = false;
};

inline double manifold_distance(const MatrixC& W) {
    return (W * W.adjoint() - MatrixC::Identity(W.rows(), W.rows())).norm();
}

inline MatrixC skew_hermitian(const MatrixC& M) { return 0.5 * (M - M.adjoint()); }

// Relative-gradient (tangent) and normal components of the landing field at X (columns orthonormal).
inline MatrixC landing_relative(const MatrixC& X, const MatrixC& g) { return skew_hermitian(g * X.adjoint()) * X; }
inline MatrixC landing_normal(const MatrixC& X, double lambda) {
    return lambda * X * (X.adjoint() * X - MatrixC::Identity(X.cols(), X.cols()));
}

inline double landing_safe_step(double d, double r, double lambda, double eps) {
    const double a = lambda * d * (d - 1);
    return (-a + std::sqrt(a * a + r * r * std::max(0.0, eps - d))) / (r * r + 1e-8);
}

namespace detail {

inline void require_finite(const MatrixC& G) {
    require(G.allFinite(), ErrorKind::numerical, "non-finite gradient; step aborted");
}

// One landing move on X (columns orthonormal) along the field built from g; returns the step size.
inline double landing_move(MatrixC& X, const MatrixC& g, const LandingHyper& h) {
    MatrixC field = landing_relative(X, g) + landing_normal(X, h.lambda);
    const double d = (X.adjoint() * X - MatrixC::Identity(X.cols(), X.cols())).norm();
    const double r = field.norm();
    double eta = h.lr;
    if (r > 0) eta = std::min(eta, landing_safe_step(d, r, h.lambda, h.eps));
    X -= eta * field;
    return eta;
}

}  // namespace detail

// W stored with orthonormal rows; the field is built on X = W† (orthonormal columns).
inline StepInfo landing_step(MatrixC& W, const MatrixC& G, OptimizerState& s, const LandingHyper& h) {
    h.validate();
    detail::require_finite(G);
    MatrixC X = W.adjoint();
    MatrixC g = G.adjoint();
    if (h.weight_decay != 0) g += h.weight_decay * X;
    if (h.momentum != 0) {
        if (s.t == 0) s.A = g;
        else s.A = h.momentum * s.A + (1 - h.dampening) * g;
        g = h.nesterov ? MatrixC(g + h.momentum * s.A) : s.A;
    }
    ++s.t;
    StepInfo info;
    info.step = detail::landing_move(X, g, h);
    if (s.t % h.period == 0) {
        X = project_semi_unitary(X.adjoint()).adjoint();
        if (s.A.size()) s.A = s.A - X * s.A.adjoint() * X;
        info.projected = true;
    }
    W = X.adjoint();
    info.distance = manifold_distance(W);
    return info;
}

// Landing with a bias-corrected, rectified second-moment preconditioner and projection whenever d > ε.
inline StepInfo landing_pc_step(MatrixC& W, const MatrixC& G, OptimizerState& s, const LandingHyper& h, const AdamHyper& a) {
    h.validate();
    detail::require_finite(G);
    if (s.t == 0) {
        s.A = MatrixC::Zero(G.rows(), G.cols());
        s.v = MatrixR::Zero(G.rows(), G.cols());
    }
    ++s.t;
    const double t = static_cast<double>(s.t);
    s.A = a.beta1 * s.A + (1 - a.beta1) * G;
    s.v = a.beta2 * s.v + (1 - a.beta2) * G.cwiseAbs2();
    const MatrixC mhat = s.A / (1 - std::pow(a.beta1, t));
    const MatrixR vhat = s.v / (1 - std::pow(a.beta2, t));
    const double rho_inf = 2 / (1 - a.beta2) - 1;
    const double rho = rho_inf - 2 * t * std::pow(a.beta2, t) / (1 - std::pow(a.beta2, t));
    MatrixC pre = mhat;
    if (rho > 4 && vhat.maxCoeff() > 0) {
        const double rect = std::sqrt((rho - 4) * (rho - 2) * rho_inf / ((rho_inf - 4) * (rho_inf - 2) * rho));
        pre = rect * (mhat.array() / (vhat.array().sqrt() + a.eps).cast<cplx>()).matrix();
    }
    MatrixC X = W.adjoint();
    StepInfo info;
    info.step = detail::landing_move(X, pre.adjoint(), h);
    W = X.adjoint();
    if (manifold_distance(W) > h.eps) {
        W = project_semi_unitary(W);
        info.projected = true;
    }
    info.distance = manifold_distance(W);
    return info;
}

inline void sgd_step(MatrixC& W, const MatrixC& G, double lr) {
    detail::require_finite(G);
    W -= lr * G;
}

inline void adam_step(MatrixC& W, const MatrixC& G, OptimizerState& s, const AdamHyper& a) {
    detail::require_finite(G);
    if (s.t == 0) {
        s.A = MatrixC::Zero(G.rows(), G.cols());
        s.v = MatrixR::Zero(G.rows(), G.cols());
    }
    ++s.t;
    const double t = static_cast<double>(s.t);
    s.A = a.beta1 * s.A + (1 - a.beta1) * G;
    s.v = a.beta2 * s.v + (1 - a.beta2) * G.cwiseAbs2();
    const MatrixC mhat = s.A / (1 - std::pow(a.beta1, t));
    const MatrixR vhat = s.v / (1 - std::pow(a.beta2, t));
    W -= a.lr * (mhat.array() / (vhat.array().sqrt() + a.eps).cast<cplx>()).matrix();
}

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
    std::string optimizer = "landing";  // sgd | adam | landing | landing_pc
    LandingHyper landing;
    AdamHyper adam;
    int steps = 1000;
    int batch_size = 256;
    int eval_every = 50;
    std::uint64_t seed = 0;
    Normalization norm = Normalization::detect;
    double divergence_factor = 10.0;
    long eval_rows = 4096;  // validation rows used per evaluation
    bool project_checkpoints = true;  // landing runs: evaluate and keep polar-projected snapshots
};

struct TrainResult {
    TensorizedCircuit best;
    TensorizedCircuit last;
    double best_valid_bpd = std::numeric_limits<double>::infinity();
    int best_step = 0;
    int steps = 0;
    double first_train_nll = 0;
    double last_train_nll = 0;
    bool diverged = false;
    std::string message;
    std::vector<nlohmann::json> metrics;
};

class Trainer {
public:
    Trainer(TensorizedCircuit c, const TrainConfig& cfg) : c_(std::move(c)), cfg_(cfg) {
        require(cfg.optimizer == "sgd" || cfg.optimizer == "adam" || cfg.optimizer == "landing" || cfg.optimizer == "landing_pc",
                ErrorKind::input, "unknown optimizer '" + cfg.optimizer + "'");
        unitary_ = detail::resolve_unitary(c_, cfg.norm);
        const bool manifold = cfg.optimizer == "landing" || cfg.optimizer == "landing_pc";
        require(!manifold || unitary_, ErrorKind::precondition, "landing optimizers need a unitary circuit");
        blocks_ = param_blocks(c_, manifold);
        state_.resize(blocks_.size());
    }

    const TensorizedCircuit& circuit() const { return c_; }
    TensorizedCircuit& circuit() { return c_; }
    const std::vector<ParamBlock>& blocks() const { return blocks_; }
    Normalization normalization() const { return unitary_ ? Normalization::unitary : Normalization::materialize; }
    bool on_manifold() const { return cfg_.optimizer == "landing" || cfg_.optimizer == "landing_pc"; }

    // Copy of the circuit with every manifold block replaced by its closest semi-unitary matrix.
    TensorizedCircuit projected() const {
        TensorizedCircuit c = c_;
        for (const ParamBlock& b : blocks_)
            if (b.manifold) scatter_block(c, b, project_semi_unitary(gather_block(c, b)));
        return c;
    }

    // One optimizer step on a batch; returns the loss before the step.
    LossValue step(const MatrixR& batch, std::vector<double>* distances = nullptr) {
        LossAndGrad lg = backward(c_, batch, normalization());
        const double scale = 1.0 / static_cast<double>(batch.rows());
        for (std::size_t k = 0; k < blocks_.size(); ++k) {
            const ParamBlock& b = blocks_[k];
            MatrixC W = gather_block(c_, b);
            MatrixC G = scale * gather_grad(c_, b, lg.layer_grads);
            if (b.kind == ParamBlock::Kind::fourier_bias) G(0, 0) = G(0, 0).real();
            OptimizerState& s = state_[k];
            if (b.manifold) {
                if (cfg_.landing.lr == 0) continue;
                StepInfo info = cfg_.optimizer == "landing" ? landing_step(W, G, s, cfg_.landing)
                                                             : landing_pc_step(W, G, s, cfg_.landing, cfg_.adam);
                if (distances) distances->push_back(info.distance);
            } else if (cfg_.optimizer == "sgd" || cfg_.optimizer == "landing") {
                const double lr = cfg_.optimizer == "sgd" ? cfg_.adam.lr : cfg_.landing.lr;
                if (lr == 0) continue;
                sgd_step(W, G, lr);
            } else {
                if (cfg_.adam.lr == 0) continue;
                adam_step(W, G, s, cfg_.adam);
            }
            if (b.kind == ParamBlock::Kind::fourier_bias) W(0, 0) = W(0, 0).real();
            scatter_block(c_, b, W);
        }
        return lg.loss;
    }

private:
    TensorizedCircuit c_;
    TrainConfig cfg_;
    bool unitary_ = false;
    std::vector<ParamBlock> blocks_;
    std::vector<OptimizerState> state_;
};

// Minibatch training with best-validation checkpointing; one JSON line per evaluation.
inline TrainResult train(TensorizedCircuit c, const Dataset& data, const TrainConfig& cfg, std::ostream* metrics = nullptr) {
    require(data.train.rows() >= 1, ErrorKind::input, "training split is empty");
    require(cfg.batch_size >= 1 && cfg.steps >= 0 && cfg.eval_every >= 1, ErrorKind::input, "invalid training loop settings");
    Trainer tr(std::move(c), cfg);
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(cfg.seed);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(data.train.rows()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::size_t cursor = order.size();
    const MatrixR& valid_all = data.valid.rows() ? data.valid : data.train;
    const MatrixR valid = valid_all.topRows(std::min<Eigen::Index>(valid_all.rows(), cfg.eval_rows));

    TrainResult res;
    const bool snap = cfg.project_checkpoints && tr.on_manifold();
    auto evaluate = [&](int step, double train_nll, const std::vector<double>& dist) {
        const TensorizedCircuit cur = snap ? tr.projected() : tr.circuit();
        const double vb = eval_bpd(cur, valid, tr.normalization());
        nlohmann::json j;
        j["step"] = step;
        j["train_nll"] = train_nll;
        j["valid_bpd"] = vb;
        j["manifold_distance"] = dist;
        j["wall_time"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (metrics) *metrics << j.dump() << "\n";
        res.metrics.push_back(j);
        if (vb < res.best_valid_bpd) {
            res.best_valid_bpd = vb;
            res.best_step = step;
            res.best = cur;
        }
    };

    MatrixR batch(std::min<Eigen::Index>(cfg.batch_size, data.train.rows()), data.train.cols());
    double start = 0;
    std::vector<double> dist;
    for (int step = 0; step < cfg.steps; ++step) {
        for (Eigen::Index r = 0; r < batch.rows(); ++r) {
            if (cursor == order.size()) {
                std::shuffle(order.begin(), order.end(), rng);
                cursor = 0;
            }
            batch.row(r) = data.train.row(order[cursor++]);
        }
        if (step == 0) evaluate(0, nll(tr.circuit(), batch, tr.normalization()).mean_nll(), {});
        dist.clear();
        LossValue L = tr.step(batch, &dist);
        const double cur = L.mean_nll();
        if (step == 0) start = res.first_train_nll = cur;
        res.last_train_nll = cur;
        res.steps = step + 1;
        if (!std::isfinite(cur) || cur > cfg.divergence_factor * std::max(std::abs(start), 1.0)) {
            res.diverged = true;
            res.message = "training diverged at step " + std::to_string(step) + ": nll " + std::to_string(cur) +
                          " against start " + std::to_string(start);
            if (metrics) *metrics << nlohmann::json{{"step", step}, {"error", res.message}}.dump() << "\n";
            break;
        }
        if ((step + 1) % cfg.eval_every == 0 || step + 1 == cfg.steps) evaluate(step + 1, cur, dist);
    }
    if (res.metrics.empty()) evaluate(0, 0.0, {});
    res.last = snap ? tr.projected() : tr.circuit();
    return res;
}

}  // namespace sqpc
