#pragma once

#include <functional>
#include <map>
#include <set>
#include <unordered_map>

#include "sqpc/core.hpp"
#include "sqpc/input_family.hpp"

namespace sqpc {

struct ScalarUnit {
    enum class Kind { input, sum, product };
    Kind kind = Kind::input;
    std::vector<int> inputs;
    std::vector<cplx> weights;
    int var = -1;
    int family = -1;
    int component = -1;
    VarSet scope;
};

struct EvalStats {
    std::size_t unit_visits = 0;
    std::size_t edge_traversals = 0;
};

class ScalarCircuit {
public:
    ScalarCircuit() = default;
    explicit ScalarCircuit(std::vector<VarDomain> domains) : domains_(std::move(domains)) {}

    int add_family(InputFamily f) {
        families_.push_back(std::move(f));
        family_offset_.push_back(next_function_id_);
        next_function_id_ += families_.back().width();
        return static_cast<int>(families_.size()) - 1;
    }

    int add_input(int var, int family, int component) {
        require(var >= 0 && var < num_vars(), ErrorKind::input, "input unit variable out of range");
        require(family >= 0 && family < static_cast<int>(families_.size()), ErrorKind::input, "unknown family");
        require(component >= 0 && component < families_[static_cast<std::size_t>(family)].width(), ErrorKind::input,
                "family component out of range");
        require(families_[static_cast<std::size_t>(family)].domain == domains_[static_cast<std::size_t>(var)],
                ErrorKind::input, "family domain differs from variable domain");
        ScalarUnit u;
        u.kind = ScalarUnit::Kind::input;
        u.var = var;
        u.family = family;
        u.component = component;
        u.scope = VarSet::single(var);
        return push(std::move(u));
    }

    int add_sum(std::vector<int> inputs, std::vector<cplx> weights) {
        require(!inputs.empty(), ErrorKind::input, "sum unit needs inputs");
        require(inputs.size() == weights.size(), ErrorKind::input, "sum unit weight count mismatch");
        for (cplx w : weights)
            require(std::abs(w) >= min_weight_modulus, ErrorKind::input, "sum weight modulus below 1e-15");
        ScalarUnit u;
        u.kind = ScalarUnit::Kind::sum;
        u.inputs = std::move(inputs);
        u.weights = std::move(weights);
        return push(std::move(u));
    }

    int add_product(std::vector<int> inputs) {
        require(!inputs.empty(), ErrorKind::input, "product unit needs inputs");
        ScalarUnit u;
        u.kind = ScalarUnit::Kind::product;
        u.inputs = std::move(inputs);
        return push(std::move(u));
    }

    // Sets the output and drops units not reachable from it.
    void set_output(int id) {
        require(id >= 0 && id < num_units(), ErrorKind::input, "output id out of range");
        std::vector<char> live(units_.size(), 0);
        live[static_cast<std::size_t>(id)] = 1;
        for (int u = id; u >= 0; --u) {
            if (!live[static_cast<std::size_t>(u)]) continue;
            for (int i : units_[static_cast<std::size_t>(u)].inputs) live[static_cast<std::size_t>(i)] = 1;
        }
        std::vector<int> remap(units_.size(), -1);
        std::vector<ScalarUnit> kept;
        for (std::size_t u = 0; u < units_.size(); ++u) {
            if (!live[u]) continue;
            ScalarUnit nu = units_[u];
            for (int& i : nu.inputs) i = remap[static_cast<std::size_t>(i)];
            remap[u] = static_cast<int>(kept.size());
            kept.push_back(std::move(nu));
        }
        units_ = std::move(kept);
        output_ = remap[static_cast<std::size_t>(id)];
    }

    int output() const { return output_; }
    int num_vars() const { return static_cast<int>(domains_.size()); }
    int num_units() const { return static_cast<int>(units_.size()); }
    const ScalarUnit& unit(int i) const { return units_[static_cast<std::size_t>(i)]; }
    const std::vector<ScalarUnit>& units() const { return units_; }
    const std::vector<VarDomain>& domains() const { return domains_; }
    const std::vector<InputFamily>& families() const { return families_; }
    const InputFamily& family(int i) const { return families_[static_cast<std::size_t>(i)]; }
    VarSet scope() const { return unit(output_).scope; }

    int function_id(int unit_id) const {
        const ScalarUnit& u = unit(unit_id);
        return family_offset_[static_cast<std::size_t>(u.family)] + u.component;
    }

    // |c|: number of edges.
    std::size_t size() const {
        std::size_t n = 0;
        for (const auto& u : units_) n += u.inputs.size();
        return n;
    }

    std::vector<cplx> evaluate_all(const Assignment& x, EvalStats* stats = nullptr) const {
        require(static_cast<int>(x.size()) >= num_vars(), ErrorKind::input, "assignment shorter than variable count");
        std::vector<cplx> val(units_.size());
        for (std::size_t i = 0; i < units_.size(); ++i) {
            const ScalarUnit& u = units_[i];
            if (stats) {
                ++stats->unit_visits;
                stats->edge_traversals += u.inputs.size();
            }
            switch (u.kind) {
            case ScalarUnit::Kind::input: {
                const double xv = x[static_cast<std::size_t>(u.var)];
                check_value(domains_, u.var, xv);
                val[i] = family(u.family).eval_one(xv, u.component);
                break;
            }
            case ScalarUnit::Kind::sum: {
                cplx s = 0;
                for (std::size_t k = 0; k < u.inputs.size(); ++k) s += u.weights[k] * val[static_cast<std::size_t>(u.inputs[k])];
                val[i] = s;
                break;
            }
            case ScalarUnit::Kind::product: {
                cplx p = 1;
                for (int k : u.inputs) p *= val[static_cast<std::size_t>(k)];
                val[i] = p;
                break;
            }
            }
        }
        return val;
    }

    cplx evaluate(const Assignment& x, EvalStats* stats = nullptr) const {
        require(output_ >= 0, ErrorKind::precondition, "circuit has no output");
        for (int v : scope().to_vector()) check_value(domains_, v, x.size() > static_cast<std::size_t>(v) ? x[static_cast<std::size_t>(v)] : missing_value());
        return evaluate_all(x, stats)[static_cast<std::size_t>(output_)];
    }

    // ∫ |f|² of the function computed by an input unit.
    double input_sq_norm(int unit_id) const {
        const ScalarUnit& u = unit(unit_id);
        MatrixC G = gram(family(u.family), family(u.family));
        return G(u.component, u.component).real();
    }

    // ∫ f_a f_b* for two input units over the same variable.
    cplx input_inner(int a, int b) const {
        const ScalarUnit& ua = unit(a);
        const ScalarUnit& ub = unit(b);
        MatrixC G = gram(family(ua.family), family(ub.family));
        return G(ua.component, ub.component);
    }

private:
    int push(ScalarUnit u) {
        const int id = static_cast<int>(units_.size());
        for (int i : u.inputs) {
            require(i >= 0 && i < id, ErrorKind::input, "unit input must refer to an earlier unit");
            u.scope |= units_[static_cast<std::size_t>(i)].scope;
        }
        units_.push_back(std::move(u));
        output_ = id;
        return id;
    }

    std::vector<VarDomain> domains_;
    std::vector<InputFamily> families_;
    std::vector<int> family_offset_;
    int next_function_id_ = 0;
    std::vector<ScalarUnit> units_;
    int output_ = -1;
};

// ---------------------------------------------------------------------------
// Structural checks

inline bool check_smooth(const ScalarCircuit& c) {
    for (const auto& u : c.units()) {
        if (u.kind != ScalarUnit::Kind::sum) continue;
        for (int i : u.inputs)
            if (c.unit(i).scope != u.scope) return false;
    }
    return true;
}

inline bool check_decomposable(const ScalarCircuit& c) {
    for (const auto& u : c.units()) {
        if (u.kind != ScalarUnit::Kind::product) continue;
        VarSet seen;
        for (int i : u.inputs) {
            if (seen.intersects(c.unit(i).scope)) return false;
            seen |= c.unit(i).scope;
        }
    }
    return true;
}

namespace detail {

using Partition = std::vector<VarSet>;

inline std::map<VarSet, std::set<Partition>> product_partitions(const ScalarCircuit& c) {
    std::map<VarSet, std::set<Partition>> out;
    for (const auto& u : c.units()) {
        if (u.kind != ScalarUnit::Kind::product) continue;
        Partition p;
        for (int i : u.inputs) p.push_back(c.unit(i).scope);
        std::sort(p.begin(), p.end());
        out[u.scope].insert(p);
    }
    return out;
}

}  // namespace detail

// Products with equal scope across the two circuits split it identically.
inline bool check_compatible(const ScalarCircuit& c1, const ScalarCircuit& c2) {
    require(check_smooth(c1) && check_decomposable(c1) && check_smooth(c2) && check_decomposable(c2),
            ErrorKind::precondition, "compatibility needs smooth and decomposable circuits");
    auto p1 = detail::product_partitions(c1);
    auto p2 = detail::product_partitions(c2);
    for (const auto& [scope, parts1] : p1) {
        auto it = p2.find(scope);
        if (it == p2.end()) continue;
        std::set<detail::Partition> all = parts1;
        all.insert(it->second.begin(), it->second.end());
        if (all.size() > 1) return false;
    }
    return true;
}

inline bool check_structured_decomposable(const ScalarCircuit& c) { return check_compatible(c, c); }

// ---------------------------------------------------------------------------
// Enumeration helpers

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline QuadratureRule trapezoid_rule(double lo, double hi, int n) {
    require(n >= 2, ErrorKind::input, "trapezoid rule needs at least two points");
    QuadratureRule q;
    const double h = (hi - lo) / (n - 1);
    for (int i = 0; i < n; ++i) {
        q.nodes.push_back(lo + h * i);
        q.weights.push_back((i == 0 || i == n - 1) ? 0.5 * h : h);
    }
    return q;
}

namespace detail {

// Per-variable integration points: categorical values with weight 1, otherwise a supplied rule.
inline QuadratureRule points_for(const std::vector<VarDomain>& domains, const std::vector<QuadratureRule>& quad, int v) {
    const VarDomain& d = domains[static_cast<std::size_t>(v)];
    if (d.is_categorical()) {
        QuadratureRule q;
        for (int x = 0; x < d.cardinality; ++x) {
            q.nodes.push_back(x);
            q.weights.push_back(1.0);
        }
        return q;
    }
    require(static_cast<int>(quad.size()) > v && !quad[static_cast<std::size_t>(v)].nodes.empty(), ErrorKind::capability,
            "no quadrature supplied for continuous variable " + std::to_string(v));
    return quad[static_cast<std::size_t>(v)];
}

// Calls fn(assignment, weight) for every grid point over vars, starting from base.
inline void for_each_grid_point(const std::vector<int>& vars, const std::vector<QuadratureRule>& rules, Assignment base,
                                std::size_t cap, const std::function<void(const Assignment&, double)>& fn) {
    double total = 1.0;
    for (const auto& r : rules) total *= static_cast<double>(r.nodes.size());
    require(total <= static_cast<double>(cap), ErrorKind::resource,
            "enumeration of " + std::to_string(total) + " points exceeds cap " + std::to_string(cap));
    std::vector<std::size_t> idx(vars.size(), 0);
    for (;;) {
        double w = 1.0;
        for (std::size_t k = 0; k < vars.size(); ++k) {
            base[static_cast<std::size_t>(vars[k])] = rules[k].nodes[idx[k]];
            w *= rules[k].weights[idx[k]];
        }
        fn(base, w);
        // lexicographic: last variable fastest
        std::size_t k = vars.size();
        while (k > 0) {
            --k;
            if (++idx[k] < rules[k].nodes.size()) break;
            idx[k] = 0;
            if (k == 0) return;
        }
        if (vars.empty()) return;
    }
}

inline Assignment zero_assignment(const std::vector<VarDomain>& domains) {
    Assignment a(domains.size(), 0.0);
    for (std::size_t v = 0; v < domains.size(); ++v)
        if (domains[v].kind == VarDomain::Kind::interval) a[v] = domains[v].lo;
    return a;
}

}  // namespace detail

inline constexpr std::size_t default_enum_cap = std::size_t{1} << 20;

// 32 random assignments plus the all-zeros assignment.
inline std::vector<Assignment> default_probes(const std::vector<VarDomain>& domains, std::uint64_t seed = 7, int n = 32) {
    Rng rng(seed);
    std::vector<Assignment> out;
    out.push_back(detail::zero_assignment(domains));
    for (int k = 0; k < n; ++k) {
        Assignment a(domains.size());
        for (std::size_t v = 0; v < domains.size(); ++v) {
            const VarDomain& d = domains[v];
            if (d.is_categorical()) {
                a[v] = static_cast<double>(std::uniform_int_distribution<int>(0, d.cardinality - 1)(rng));
            } else if (d.kind == VarDomain::Kind::interval) {
                a[v] = std::uniform_real_distribution<double>(d.lo, d.hi)(rng);
            } else {
                a[v] = std::normal_distribution<double>(0.0, 1.0)(rng);
            }
        }
        out.push_back(std::move(a));
    }
    return out;
}

// Supports are enumerated exactly; requires categorical domains.
inline bool check_deterministic(const ScalarCircuit& c, std::size_t cap = default_enum_cap, double zero_tol = 1e-12) {
    for (const auto& d : c.domains())
        require(d.is_categorical(), ErrorKind::unsupported, "determinism check is restricted to categorical domains");
    std::map<VarSet, std::vector<int>> by_scope;
    for (int i = 0; i < c.num_units(); ++i)
        if (c.unit(i).kind == ScalarUnit::Kind::sum && c.unit(i).inputs.size() > 1) by_scope[c.unit(i).scope].push_back(i);
    for (const auto& [scope, sums] : by_scope) {
        std::vector<int> vars = scope.to_vector();
        std::vector<QuadratureRule> rules;
        for (int v : vars) rules.push_back(detail::points_for(c.domains(), {}, v));
        bool ok = true;
        detail::for_each_grid_point(vars, rules, detail::zero_assignment(c.domains()), cap,
                                    [&](const Assignment& a, double) {
                                        if (!ok) return;
                                        auto val = c.evaluate_all(a);
                                        for (int s : sums) {
                                            int nonzero = 0;
                                            for (int i : c.unit(s).inputs)
                                                if (std::abs(val[static_cast<std::size_t>(i)]) > zero_tol) ++nonzero;
                                            if (nonzero > 1) {
                                                ok = false;
                                                return;
                                            }
                                        }
                                    });
        if (!ok) return false;
    }
    return true;
}

struct OrthogonalityOptions {
    std::vector<Assignment> probes;
    std::vector<QuadratureRule> quadrature;  // indexed by variable; used for non-categorical domains
    double tol = tau_orth;
    std::size_t cap = default_enum_cap;
};

// Z-orthogonality of every sum unit whose scope meets Z. Z = all variables gives plain orthogonality.
inline bool check_orthogonal(const ScalarCircuit& c, const VarSet& Z, const OrthogonalityOptions& opt = {}) {
    std::map<VarSet, std::vector<int>> by_zhat;
    bool mixed = false;
    for (int i = 0; i < c.num_units(); ++i) {
        const ScalarUnit& u = c.unit(i);
        if (u.kind != ScalarUnit::Kind::sum) continue;
        VarSet zhat = u.scope & Z;
        if (zhat.empty()) continue;
        if (zhat != u.scope) mixed = true;
        if (u.inputs.size() > 1) by_zhat[zhat].push_back(i);
    }
    if (by_zhat.empty()) return true;
    require(!mixed || !opt.probes.empty(), ErrorKind::input,
            "Z-orthogonality with fixed variables needs probe assignments");
    std::vector<Assignment> probes = opt.probes;
    if (probes.empty()) probes.push_back(detail::zero_assignment(c.domains()));

    for (const auto& [zhat, sums] : by_zhat) {
        std::vector<int> vars = zhat.to_vector();
        std::vector<QuadratureRule> rules;
        for (int v : vars) rules.push_back(detail::points_for(c.domains(), opt.quadrature, v));
        bool needs_probe = false;
        for (int s : sums)
            if (c.unit(s).scope != zhat) needs_probe = true;
        const std::size_t n_probe = needs_probe ? probes.size() : 1;
        for (std::size_t p = 0; p < n_probe; ++p) {
            std::vector<MatrixC> G;
            for (int s : sums) {
                const auto n = static_cast<Eigen::Index>(c.unit(s).inputs.size());
                G.push_back(MatrixC::Zero(n, n));
            }
            detail::for_each_grid_point(vars, rules, probes[p], opt.cap, [&](const Assignment& a, double w) {
                auto val = c.evaluate_all(a);
                for (std::size_t k = 0; k < sums.size(); ++k) {
                    const auto& in = c.unit(sums[k]).inputs;
                    VectorC v(static_cast<Eigen::Index>(in.size()));
                    for (std::size_t j = 0; j < in.size(); ++j) v(static_cast<Eigen::Index>(j)) = val[static_cast<std::size_t>(in[j])];
                    G[k].noalias() += w * v * v.adjoint();
                }
            });
            for (const auto& g : G)
                for (Eigen::Index i = 0; i < g.rows(); ++i)
                    for (Eigen::Index j = 0; j < g.cols(); ++j)
                        if (i != j && std::abs(g(i, j)) >= opt.tol) return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Basis scopes and regular orthogonality

// Function ids of input units over X reachable from n.
inline std::set<int> basis_scope(const ScalarCircuit& c, int n, int X) {
    std::set<int> out;
    if (!c.unit(n).scope.contains(X)) return out;
    std::vector<char> seen(static_cast<std::size_t>(c.num_units()), 0);
    std::vector<int> stack{n};
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        if (seen[static_cast<std::size_t>(u)]) continue;
        seen[static_cast<std::size_t>(u)] = 1;
        const ScalarUnit& su = c.unit(u);
        if (!su.scope.contains(X)) continue;
        if (su.kind == ScalarUnit::Kind::input) {
            out.insert(c.function_id(u));
        } else {
            for (int i : su.inputs) stack.push_back(i);
        }
    }
    return out;
}

namespace detail {

inline bool disjoint_basis_for(const ScalarCircuit& c, const ScalarUnit& u, int X) {
    std::set<int> seen;
    for (int i : u.inputs) {
        std::set<int> b = basis_scope(c, i, X);
        for (int f : b)
            if (!seen.insert(f).second) return false;
    }
    return true;
}

}  // namespace detail

// Every sum meeting Z has inputs with disjoint basis scopes for some X ∈ scope ∩ Z.
inline bool check_basis_decomposable(const ScalarCircuit& c, const VarSet& Z) {
    for (const auto& u : c.units()) {
        if (u.kind != ScalarUnit::Kind::sum || u.inputs.size() < 2) continue;
        VarSet cand = u.scope & Z;
        if (cand.empty()) continue;
        bool found = false;
        for (int X : cand.to_vector())
            if (detail::disjoint_basis_for(c, u, X)) {
                found = true;
                break;
            }
        if (!found) return false;
    }
    return true;
}

inline bool check_basis_decomposable(const ScalarCircuit& c) { return check_basis_decomposable(c, c.scope()); }

// Distinct input functions over each variable of Z are pairwise orthogonal.
inline bool check_input_functions_orthogonal(const ScalarCircuit& c, const VarSet& Z, double tol = tau_orth) {
    std::map<int, std::map<int, int>> by_var;  // var -> function id -> unit
    for (int i = 0; i < c.num_units(); ++i) {
        const ScalarUnit& u = c.unit(i);
        if (u.kind == ScalarUnit::Kind::input && Z.contains(u.var)) by_var[u.var].emplace(c.function_id(i), i);
    }
    for (const auto& [var, fns] : by_var) {
        std::vector<int> units;
        for (const auto& [fid, u] : fns) units.push_back(u);
        for (std::size_t a = 0; a < units.size(); ++a)
            for (std::size_t b = a + 1; b < units.size(); ++b)
                if (std::abs(c.input_inner(units[a], units[b])) >= tol) return false;
    }
    return true;
}

inline bool check_regular_orthogonal(const ScalarCircuit& c, const VarSet& Z, double tol = tau_orth) {
    return check_basis_decomposable(c, Z) && check_input_functions_orthogonal(c, Z, tol);
}

inline bool check_regular_orthogonal(const ScalarCircuit& c) { return check_regular_orthogonal(c, c.scope()); }

// ---------------------------------------------------------------------------
// Marginalization of |c|² for Z-orthogonal circuits, one pass over the circuit.

inline double mar_ortho_dec(const ScalarCircuit& c, const Assignment& y, const VarSet& Z, bool verify = false,
                            const OrthogonalityOptions& opt = {}) {
    require(check_smooth(c) && check_decomposable(c), ErrorKind::precondition,
            "marginalization needs a smooth and decomposable circuit");
    if (verify) {
        OrthogonalityOptions o = opt;
        if (o.probes.empty()) o.probes = default_probes(c.domains());
        require(check_orthogonal(c, Z, o), ErrorKind::property, "circuit is not Z-orthogonal");
    }
    Assignment a = y;
    a.resize(static_cast<std::size_t>(c.num_vars()), missing_value());
    for (int v : (c.scope() - Z).to_vector()) check_value(c.domains(), v, a[static_cast<std::size_t>(v)]);
    // Variables in Z are never read by units whose scope avoids Z; fill them to allow one evaluation pass.
    Assignment filled = a;
    Assignment zero = detail::zero_assignment(c.domains());
    for (int v : Z.to_vector())
        if (v < c.num_vars()) filled[static_cast<std::size_t>(v)] = zero[static_cast<std::size_t>(v)];
    for (std::size_t v = 0; v < filled.size(); ++v)
        if (is_missing(filled[v])) filled[v] = zero[v];
    std::vector<cplx> val = c.evaluate_all(filled);

    std::vector<VectorR> sq_norms(c.families().size());
    std::vector<double> r(static_cast<std::size_t>(c.num_units()), 0.0);
    for (int i = 0; i < c.num_units(); ++i) {
        const ScalarUnit& u = c.unit(i);
        if (!u.scope.intersects(Z)) {
            r[static_cast<std::size_t>(i)] = std::norm(val[static_cast<std::size_t>(i)]);
            continue;
        }
        switch (u.kind) {
        case ScalarUnit::Kind::input:
        {
            VectorR& d = sq_norms[static_cast<std::size_t>(u.family)];
            if (d.size() == 0) d = gram(c.family(u.family), c.family(u.family)).diagonal().real();
            r[static_cast<std::size_t>(i)] = d(u.component);
        }
            break;
        case ScalarUnit::Kind::sum: {
            double s = 0;
            for (std::size_t k = 0; k < u.inputs.size(); ++k) s += std::norm(u.weights[k]) * r[static_cast<std::size_t>(u.inputs[k])];
            r[static_cast<std::size_t>(i)] = s;
            break;
        }
        case ScalarUnit::Kind::product: {
            double p = 1;
            for (int k : u.inputs) p *= r[static_cast<std::size_t>(k)];
            r[static_cast<std::size_t>(i)] = p;
            break;
        }
        }
    }
    return r[static_cast<std::size_t>(c.output())];
}

// ---------------------------------------------------------------------------
// Induced sub-circuit expansion

struct Monomial {
    cplx omega;
    std::vector<std::pair<int, int>> leaves;  // (variable, input unit id), sorted by variable
};

inline std::vector<Monomial> expand_polynomial(const ScalarCircuit& c, std::size_t cap = 100000) {
    require(check_smooth(c) && check_decomposable(c), ErrorKind::precondition,
            "expansion needs a smooth and decomposable circuit");
    std::vector<std::vector<Monomial>> memo(static_cast<std::size_t>(c.num_units()));
    for (int i = 0; i < c.num_units(); ++i) {
        const ScalarUnit& u = c.unit(i);
        auto& out = memo[static_cast<std::size_t>(i)];
        switch (u.kind) {
        case ScalarUnit::Kind::input:
            out.push_back({cplx(1.0), {{u.var, i}}});
            break;
        case ScalarUnit::Kind::sum:
            for (std::size_t k = 0; k < u.inputs.size(); ++k)
                for (const Monomial& m : memo[static_cast<std::size_t>(u.inputs[k])]) {
                    out.push_back({u.weights[k] * m.omega, m.leaves});
                    require(out.size() <= cap, ErrorKind::resource, "induced sub-circuit count exceeds cap");
                }
            break;
        case ScalarUnit::Kind::product: {
            out.push_back({cplx(1.0), {}});
            for (int in : u.inputs) {
                std::vector<Monomial> next;
                for (const Monomial& a : out)
                    for (const Monomial& b : memo[static_cast<std::size_t>(in)]) {
                        Monomial m{a.omega * b.omega, a.leaves};
                        m.leaves.insert(m.leaves.end(), b.leaves.begin(), b.leaves.end());
                        next.push_back(std::move(m));
                        require(next.size() <= cap, ErrorKind::resource, "induced sub-circuit count exceeds cap");
                    }
                out.swap(next);
            }
            for (auto& m : out) std::sort(m.leaves.begin(), m.leaves.end());
            break;
        }
        }
    }
    return memo[static_cast<std::size_t>(c.output())];
}

inline cplx eval_polynomial(const ScalarCircuit& c, const std::vector<Monomial>& poly, const Assignment& x) {
    std::vector<cplx> terms;
    terms.reserve(poly.size());
    for (const Monomial& m : poly) {
        cplx t = m.omega;
        for (const auto& [var, unit] : m.leaves) {
            const ScalarUnit& u = c.unit(unit);
            check_value(c.domains(), var, x[static_cast<std::size_t>(var)]);
            t *= c.family(u.family).eval_one(x[static_cast<std::size_t>(var)], u.component);
        }
        terms.push_back(t);
    }
    return pairwise_sum(terms);
}

}  // namespace sqpc
