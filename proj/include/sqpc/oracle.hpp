#pragma once

#include <functional>

#include "sqpc/scalar_circuit.hpp"
#include "sqpc/tensorized.hpp"

namespace sqpc {

struct OracleResult {
    cplx value = 0.0;
    std::string method;  // enumeration | naive-contraction | quadrature(n)
    double cost = 0;     // operation count
    double real() const { return value.real(); }
};

struct EnumOptions {
    std::size_t cap = default_enum_cap;
    std::vector<QuadratureRule> quadrature;  // per variable; only read for continuous variables in Z
};

namespace detail {

inline void enum_setup(const std::vector<VarDomain>& domains, const Assignment& y, const VarSet& Z, const EnumOptions& opt,
                       std::vector<int>& vars, std::vector<QuadratureRule>& rules, Assignment& base, std::string& method) {
    vars = Z.to_vector();
    bool quad = false;
    for (int v : vars) {
        require(v < static_cast<int>(domains.size()), ErrorKind::input, "marginalized variable out of range");
        rules.push_back(points_for(domains, opt.quadrature, v));
        quad = quad || !domains[static_cast<std::size_t>(v)].is_categorical();
    }
    method = quad ? "quadrature" : "enumeration";
    base = y;
    base.resize(domains.size(), missing_value());
    for (int v = 0; v < static_cast<int>(domains.size()); ++v)
        if (!Z.contains(v)) check_value(domains, v, base[static_cast<std::size_t>(v)]);
}

}  // namespace detail

// Σ over dom(Z) of |c(y, z)|², literal summation in lexicographic order.
inline OracleResult enum_marginal(const ScalarCircuit& c, const Assignment& y, const VarSet& Z, const EnumOptions& opt = {}) {
    std::vector<int> vars;
    std::vector<QuadratureRule> rules;
    Assignment base;
    OracleResult r;
    detail::enum_setup(c.domains(), y, Z, opt, vars, rules, base, r.method);
    std::vector<double> terms;
    detail::for_each_grid_point(vars, rules, base, opt.cap, [&](const Assignment& a, double w) {
        terms.push_back(w * std::norm(c.evaluate(a)));
    });
    r.value = pairwise_sum(terms);
    r.cost = static_cast<double>(terms.size()) * static_cast<double>(c.size());
    return r;
}

inline OracleResult enum_partition(const ScalarCircuit& c, const EnumOptions& opt = {}) {
    return enum_marginal(c, Assignment(static_cast<std::size_t>(c.num_vars()), missing_value()), c.scope(), opt);
}

inline OracleResult enum_marginal(const TensorizedCircuit& c, const Assignment& y, const VarSet& Z, const EnumOptions& opt = {}) {
    std::vector<int> vars;
    std::vector<QuadratureRule> rules;
    Assignment base;
    OracleResult r;
    detail::enum_setup(c.domains(), y, Z, opt, vars, rules, base, r.method);
    for (std::size_t v = 0; v < base.size(); ++v)
        if (is_missing(base[v])) base[v] = detail::zero_assignment(c.domains())[v];
    std::vector<Assignment> pts;
    std::vector<double> ws;
    detail::for_each_grid_point(vars, rules, base, opt.cap, [&](const Assignment& a, double w) {
        pts.push_back(a);
        ws.push_back(w);
    });
    VectorC vals = eval_batch(c, assignments_to_matrix(pts, c.num_vars()));
    std::vector<double> terms(pts.size());
    for (std::size_t k = 0; k < pts.size(); ++k) terms[k] = ws[k] * std::norm(vals(static_cast<Eigen::Index>(k)));
    r.value = pairwise_sum(terms);
    r.cost = static_cast<double>(terms.size()) * static_cast<double>(c.total_size());
    return r;
}

inline OracleResult enum_partition(const TensorizedCircuit& c, const EnumOptions& opt = {}) {
    return enum_marginal(c, Assignment(static_cast<std::size_t>(c.num_vars()), missing_value()), c.scope(), opt);
}

// Literal sum over all R^(d-1) bond indices of ψ_1^{i1} ψ_2^{i1 i2} ... ψ_d^{i_{d-1}}.
// Factor layout as in build_mps_chain: end factors width R, middle factors component i*R + j.
inline OracleResult naive_mps(const std::vector<InputFamily>& factors, int R, const Assignment& x) {
    const int d = static_cast<int>(factors.size());
    require(d >= 2 && R >= 1, ErrorKind::input, "MPS needs d >= 2 and R >= 1");
    std::vector<VectorC> vals;
    for (int k = 0; k < d; ++k) vals.push_back(factors[static_cast<std::size_t>(k)].eval(x[static_cast<std::size_t>(k)]));
    std::vector<int> idx(static_cast<std::size_t>(d - 1), 0);
    std::vector<cplx> terms;
    for (;;) {
        cplx t = vals[0](idx[0]);
        for (int k = 1; k + 1 < d; ++k) t *= vals[static_cast<std::size_t>(k)](idx[static_cast<std::size_t>(k - 1)] * R + idx[static_cast<std::size_t>(k)]);
        t *= vals[static_cast<std::size_t>(d - 1)](idx[static_cast<std::size_t>(d - 2)]);
        terms.push_back(t);
        std::size_t k = idx.size();
        bool done = true;
        while (k > 0) {
            --k;
            if (++idx[k] < R) {
                done = false;
                break;
            }
            idx[k] = 0;
        }
        if (done) break;
    }
    OracleResult r;
    r.value = pairwise_sum(terms);
    r.method = "naive-contraction";
    r.cost = static_cast<double>(terms.size()) * d;
    return r;
}

// ∫ f_i(x) g_j(x)* dx by the composite trapezoid rule on n points.
inline MatrixC quadrature_gram(const InputFamily& f, const InputFamily& g, int n) {
    require(f.domain == g.domain, ErrorKind::input, "gram of families over different domains");
    require(f.domain.kind == VarDomain::Kind::interval, ErrorKind::capability, "quadrature needs a bounded interval domain");
    QuadratureRule q = trapezoid_rule(f.domain.lo, f.domain.hi, n);
    MatrixC G = MatrixC::Zero(f.width(), g.width());
    for (std::size_t k = 0; k < q.nodes.size(); ++k) G.noalias() += q.weights[k] * f.eval(q.nodes[k]) * g.eval(q.nodes[k]).adjoint();
    return G;
}

}  // namespace sqpc
