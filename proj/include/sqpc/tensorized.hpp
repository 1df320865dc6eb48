#pragma once

#include <map>
#include <set>

#include "sqpc/core.hpp"
#include "sqpc/input_family.hpp"
#include "sqpc/parallel.hpp"
#include "sqpc/scalar_circuit.hpp"

namespace sqpc {

struct Layer {
    enum class Kind { input, sum, hadamard, kronecker };
    Kind kind = Kind::input;
    int width = 0;
    std::vector<int> inputs;
    VarSet scope;

    int var = -1;           // input
    InputFamily family;     // input
    int tie_group = -1;     // input layers in one group are row-blocks of one semi-unitary matrix
    MatrixC weight;         // sum: width × Σ input widths
    std::vector<int> perm;  // kronecker: out[p] = (a ⊗ b)[perm[p]]; empty means identity

    bool is_product() const { return kind == Kind::hadamard || kind == Kind::kronecker; }
};

inline const char* layer_kind_name(Layer::Kind k) {
    switch (k) {
    case Layer::Kind::input: return "input";
    case Layer::Kind::sum: return "sum";
    case Layer::Kind::hadamard: return "hadamard";
    case Layer::Kind::kronecker: return "kronecker";
    }
    return "?";
}

class TensorizedCircuit {
public:
    TensorizedCircuit() = default;
    explicit TensorizedCircuit(std::vector<VarDomain> domains) : domains_(std::move(domains)) {}

    int add_input(int var, InputFamily f, int tie_group = -1) {
        require(var >= 0 && var < num_vars(), ErrorKind::input, "input layer variable out of range");
        require(f.domain == domains_[static_cast<std::size_t>(var)], ErrorKind::input,
                "family domain differs from variable domain");
        require(f.width() >= 1, ErrorKind::input, "input layer width must be positive");
        Layer l;
        l.kind = Layer::Kind::input;
        l.var = var;
        l.width = f.width();
        l.family = std::move(f);
        l.tie_group = tie_group;
        l.scope = VarSet::single(var);
        return push(std::move(l));
    }

    int add_sum(std::vector<int> inputs, MatrixC W) {
        require(!inputs.empty(), ErrorKind::input, "sum layer needs inputs");
        int k2 = 0;
        for (int i : inputs) {
            check_id(i);
            k2 += layer(i).width;
        }
        require(W.cols() == k2, ErrorKind::input,
                "sum weight has " + std::to_string(W.cols()) + " columns, inputs provide " + std::to_string(k2));
        require(W.rows() >= 1, ErrorKind::input, "sum layer width must be positive");
        const VarSet& s0 = layer(inputs[0]).scope;
        for (int i : inputs) require(layer(i).scope == s0, ErrorKind::input, "sum layer inputs must share scope");
        Layer l;
        l.kind = Layer::Kind::sum;
        l.inputs = std::move(inputs);
        l.width = static_cast<int>(W.rows());
        l.weight = std::move(W);
        return push(std::move(l));
    }

    int add_hadamard(int a, int b) {
        check_id(a);
        check_id(b);
        require(layer(a).width == layer(b).width, ErrorKind::input, "hadamard inputs must share width");
        require(!layer(a).scope.intersects(layer(b).scope), ErrorKind::input, "product inputs must have disjoint scopes");
        Layer l;
        l.kind = Layer::Kind::hadamard;
        l.inputs = {a, b};
        l.width = layer(a).width;
        return push(std::move(l));
    }

    int add_kronecker(int a, int b, std::vector<int> perm = {}) {
        check_id(a);
        check_id(b);
        require(!layer(a).scope.intersects(layer(b).scope), ErrorKind::input, "product inputs must have disjoint scopes");
        Layer l;
        l.kind = Layer::Kind::kronecker;
        l.inputs = {a, b};
        l.width = layer(a).width * layer(b).width;
        if (!perm.empty()) {
            require(static_cast<int>(perm.size()) == l.width, ErrorKind::input, "kronecker permutation length mismatch");
            std::vector<char> hit(perm.size(), 0);
            for (int p : perm) {
                require(p >= 0 && p < l.width && !hit[static_cast<std::size_t>(p)], ErrorKind::input,
                        "kronecker permutation is not a bijection");
                hit[static_cast<std::size_t>(p)] = 1;
            }
            bool ident = true;
            for (int p = 0; p < l.width; ++p) ident = ident && perm[static_cast<std::size_t>(p)] == p;
            if (!ident) l.perm = std::move(perm);
        }
        return push(std::move(l));
    }

    // Sets the output (width 1) and drops layers not reachable from it.
    void set_output(int id) {
        check_id(id);
        require(layer(id).width == 1, ErrorKind::input, "output layer must have width 1");
        std::vector<char> live(layers_.size(), 0);
        live[static_cast<std::size_t>(id)] = 1;
        for (int u = id; u >= 0; --u) {
            if (!live[static_cast<std::size_t>(u)]) continue;
            for (int i : layers_[static_cast<std::size_t>(u)].inputs) live[static_cast<std::size_t>(i)] = 1;
        }
        std::vector<int> remap(layers_.size(), -1);
        std::vector<Layer> kept;
        for (std::size_t u = 0; u < layers_.size(); ++u) {
            if (!live[u]) continue;
            Layer nl = std::move(layers_[u]);
            for (int& i : nl.inputs) i = remap[static_cast<std::size_t>(i)];
            remap[u] = static_cast<int>(kept.size());
            kept.push_back(std::move(nl));
        }
        layers_ = std::move(kept);
        output_ = remap[static_cast<std::size_t>(id)];
    }

    int output() const { return output_; }
    int num_vars() const { return static_cast<int>(domains_.size()); }
    int num_layers() const { return static_cast<int>(layers_.size()); }
    const Layer& layer(int i) const { return layers_[static_cast<std::size_t>(i)]; }
    Layer& mutable_layer(int i) { return layers_[static_cast<std::size_t>(i)]; }
    const std::vector<Layer>& layers() const { return layers_; }
    const std::vector<VarDomain>& domains() const { return domains_; }
    VarSet scope() const { return layer(output_).scope; }

    // S(ℓ): number of input connections of the layer's units.
    std::size_t layer_size(int i) const {
        const Layer& l = layer(i);
        switch (l.kind) {
        case Layer::Kind::input: return 0;
        case Layer::Kind::sum: {
            std::size_t n = 0;
            for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
                for (Eigen::Index c = 0; c < l.weight.cols(); ++c)
                    if (std::abs(l.weight(r, c)) >= min_weight_modulus) ++n;
            return n;
        }
        case Layer::Kind::hadamard:
        case Layer::Kind::kronecker: return 2 * static_cast<std::size_t>(l.width);
        }
        return 0;
    }

    std::size_t max_layer_size() const {
        std::size_t m = 0;
        for (int i = 0; i < num_layers(); ++i) m = std::max(m, layer_size(i));
        return m;
    }

    std::size_t total_size() const {
        std::size_t m = 0;
        for (int i = 0; i < num_layers(); ++i) m += layer_size(i);
        return m;
    }

private:
    void check_id(int i) const {
        require(i >= 0 && i < num_layers(), ErrorKind::input, "layer id " + std::to_string(i) + " out of range");
    }

    int push(Layer l) {
        for (int i : l.inputs) l.scope |= layer(i).scope;
        layers_.push_back(std::move(l));
        output_ = static_cast<int>(layers_.size()) - 1;
        return output_;
    }

    std::vector<VarDomain> domains_;
    std::vector<Layer> layers_;
    int output_ = -1;
};

// ---------------------------------------------------------------------------
// Evaluation

inline void kron_columns(const MatrixC& a, const MatrixC& b, const std::vector<int>& perm, MatrixC& out) {
    const Eigen::Index K1 = a.rows(), K2 = b.rows(), B = a.cols();
    out.resize(K1 * K2, B);
    for (Eigen::Index i = 0; i < K1; ++i)
        out.middleRows(i * K2, K2) = b.array().rowwise() * a.row(i).array();
    if (!perm.empty()) {
        MatrixC tmp(out.rows(), B);
        for (Eigen::Index p = 0; p < out.rows(); ++p) tmp.row(p) = out.row(perm[static_cast<std::size_t>(p)]);
        out.swap(tmp);
    }
}

inline void apply_sum(const Layer& l, const std::vector<MatrixC>& vals, MatrixC& out) {
    Eigen::Index off = 0;
    for (std::size_t k = 0; k < l.inputs.size(); ++k) {
        const MatrixC& in = vals[static_cast<std::size_t>(l.inputs[k])];
        if (k == 0)
            out.noalias() = l.weight.middleCols(off, in.rows()) * in;
        else
            out.noalias() += l.weight.middleCols(off, in.rows()) * in;
        off += in.rows();
    }
}

// Input-layer values for rows [begin, end) of X (rows are assignments).
inline MatrixC eval_input_layer(const TensorizedCircuit& c, const Layer& l, const MatrixR& X, long begin, long end) {
    MatrixC out(l.width, end - begin);
    for (long b = begin; b < end; ++b) {
        const double x = X(b, l.var);
        check_value(c.domains(), l.var, x);
        l.family.eval_into(x, out.col(b - begin).data());
    }
    return out;
}

// Computes every non-input layer from already-filled input-layer values.
inline void propagate(const TensorizedCircuit& c, std::vector<MatrixC>& vals) {
    for (int i = 0; i < c.num_layers(); ++i) {
        const Layer& l = c.layer(i);
        MatrixC& out = vals[static_cast<std::size_t>(i)];
        switch (l.kind) {
        case Layer::Kind::input:
            break;
        case Layer::Kind::sum:
            apply_sum(l, vals, out);
            break;
        case Layer::Kind::hadamard:
            out = vals[static_cast<std::size_t>(l.inputs[0])].cwiseProduct(vals[static_cast<std::size_t>(l.inputs[1])]);
            break;
        case Layer::Kind::kronecker:
            kron_columns(vals[static_cast<std::size_t>(l.inputs[0])], vals[static_cast<std::size_t>(l.inputs[1])], l.perm, out);
            break;
        }
    }
}

// All layer values (width × batch) for rows [begin, end).
inline std::vector<MatrixC> forward_layers(const TensorizedCircuit& c, const MatrixR& X, long begin, long end) {
    require(X.cols() >= c.num_vars(), ErrorKind::input, "assignment matrix has fewer columns than variables");
    std::vector<MatrixC> vals(static_cast<std::size_t>(c.num_layers()));
    for (int i = 0; i < c.num_layers(); ++i)
        if (c.layer(i).kind == Layer::Kind::input) vals[static_cast<std::size_t>(i)] = eval_input_layer(c, c.layer(i), X, begin, end);
    propagate(c, vals);
    return vals;
}

// Evaluates a batch of complete assignments (one per row).
inline VectorC eval_batch(const TensorizedCircuit& c, const MatrixR& X) {
    const long n = X.rows();
    VectorC out(n);
    parallel_chunks(n, [&](int, long b, long e) {
        constexpr long block = 256;
        for (long s = b; s < e; s += block) {
            const long t = std::min(e, s + block);
            auto vals = forward_layers(c, X, s, t);
            out.segment(s, t - s) = vals[static_cast<std::size_t>(c.output())].row(0).transpose();
        }
    });
    return out;
}

inline cplx eval_one(const TensorizedCircuit& c, const Assignment& x) {
    MatrixR X(1, static_cast<Eigen::Index>(x.size()));
    for (std::size_t v = 0; v < x.size(); ++v) X(0, static_cast<Eigen::Index>(v)) = x[v];
    return eval_batch(c, X)(0);
}

inline MatrixR assignments_to_matrix(const std::vector<Assignment>& xs, int d) {
    MatrixR X(static_cast<Eigen::Index>(xs.size()), d);
    for (std::size_t r = 0; r < xs.size(); ++r)
        for (int v = 0; v < d; ++v) X(static_cast<Eigen::Index>(r), v) = xs[r][static_cast<std::size_t>(v)];
    return X;
}

// ---------------------------------------------------------------------------
// Structural properties at layer granularity

inline bool check_smooth(const TensorizedCircuit& c) {
    for (const auto& l : c.layers())
        if (l.kind == Layer::Kind::sum)
            for (int i : l.inputs)
                if (c.layer(i).scope != l.scope) return false;
    return true;
}

inline bool check_decomposable(const TensorizedCircuit& c) {
    for (const auto& l : c.layers())
        if (l.is_product() && c.layer(l.inputs[0]).scope.intersects(c.layer(l.inputs[1]).scope)) return false;
    return true;
}

namespace detail {

inline std::map<VarSet, std::set<std::vector<VarSet>>> layer_partitions(const TensorizedCircuit& c) {
    std::map<VarSet, std::set<std::vector<VarSet>>> out;
    for (const auto& l : c.layers()) {
        if (!l.is_product()) continue;
        std::vector<VarSet> p{c.layer(l.inputs[0]).scope, c.layer(l.inputs[1]).scope};
        std::sort(p.begin(), p.end());
        out[l.scope].insert(p);
    }
    return out;
}

}  // namespace detail

inline bool check_compatible(const TensorizedCircuit& c1, const TensorizedCircuit& c2) {
    require(check_smooth(c1) && check_decomposable(c1) && check_smooth(c2) && check_decomposable(c2),
            ErrorKind::precondition, "compatibility needs smooth and decomposable circuits");
    auto p1 = detail::layer_partitions(c1);
    auto p2 = detail::layer_partitions(c2);
    for (const auto& [scope, parts] : p1) {
        auto it = p2.find(scope);
        if (it == p2.end()) continue;
        auto all = parts;
        all.insert(it->second.begin(), it->second.end());
        if (all.size() > 1) return false;
    }
    return true;
}

inline bool check_structured_decomposable(const TensorizedCircuit& c) { return check_compatible(c, c); }

// ---------------------------------------------------------------------------
// Unit-level expansion

inline ScalarCircuit to_scalar_view(const TensorizedCircuit& c, std::size_t max_units = std::size_t{1} << 24) {
    ScalarCircuit s(c.domains());
    std::vector<std::vector<int>> units(static_cast<std::size_t>(c.num_layers()));
    std::size_t count = 0;
    for (int i = 0; i < c.num_layers(); ++i) {
        const Layer& l = c.layer(i);
        count += static_cast<std::size_t>(l.width);
        require(count <= max_units, ErrorKind::resource, "scalar view exceeds unit cap");
        auto& out = units[static_cast<std::size_t>(i)];
        switch (l.kind) {
        case Layer::Kind::input: {
            int fam = s.add_family(l.family);
            for (int k = 0; k < l.width; ++k) out.push_back(s.add_input(l.var, fam, k));
            break;
        }
        case Layer::Kind::sum: {
            std::vector<int> cols;
            for (int in : l.inputs)
                for (int u : units[static_cast<std::size_t>(in)]) cols.push_back(u);
            for (int r = 0; r < l.width; ++r) {
                std::vector<int> ins;
                std::vector<cplx> ws;
                for (std::size_t j = 0; j < cols.size(); ++j) {
                    cplx w = l.weight(r, static_cast<Eigen::Index>(j));
                    if (std::abs(w) < min_weight_modulus) continue;
                    ins.push_back(cols[j]);
                    ws.push_back(w);
                }
                require(!ins.empty(), ErrorKind::input, "sum layer row " + std::to_string(r) + " is identically zero");
                out.push_back(s.add_sum(std::move(ins), std::move(ws)));
            }
            break;
        }
        case Layer::Kind::hadamard: {
            const auto& a = units[static_cast<std::size_t>(l.inputs[0])];
            const auto& b = units[static_cast<std::size_t>(l.inputs[1])];
            for (int k = 0; k < l.width; ++k) out.push_back(s.add_product({a[static_cast<std::size_t>(k)], b[static_cast<std::size_t>(k)]}));
            break;
        }
        case Layer::Kind::kronecker: {
            const auto& a = units[static_cast<std::size_t>(l.inputs[0])];
            const auto& b = units[static_cast<std::size_t>(l.inputs[1])];
            const int K2 = static_cast<int>(b.size());
            for (int p = 0; p < l.width; ++p) {
                const int q = l.perm.empty() ? p : l.perm[static_cast<std::size_t>(p)];
                out.push_back(s.add_product({a[static_cast<std::size_t>(q / K2)], b[static_cast<std::size_t>(q % K2)]}));
            }
            break;
        }
        }
    }
    s.set_output(units[static_cast<std::size_t>(c.output())][0]);
    return s;
}

// ---------------------------------------------------------------------------
// Parameter accounting

struct ParamCount {
    std::size_t complex_as_one = 0;
    std::size_t complex_as_two = 0;
    std::size_t sum_weights = 0;
    std::size_t input_params = 0;
};

// Sum weights and learnable input parameters (categorical tables, Fourier biases).
inline ParamCount param_count(const TensorizedCircuit& c) {
    ParamCount p;
    for (const auto& l : c.layers()) {
        if (l.kind == Layer::Kind::sum) {
            const auto n = static_cast<std::size_t>(l.weight.size());
            p.sum_weights += n;
            p.complex_as_one += n;
            p.complex_as_two += 2 * n;
        } else if (l.kind == Layer::Kind::input && l.family.learnable) {
            if (l.family.kind == InputFamily::Kind::categorical) {
                const auto n = static_cast<std::size_t>(l.family.table.size());
                p.input_params += n;
                p.complex_as_one += n;
                p.complex_as_two += 2 * n;
            } else if (l.family.kind == InputFamily::Kind::fourier) {
                p.input_params += 1;
                p.complex_as_one += 1;
                p.complex_as_two += 1;  // the bias is real
            }
        }
    }
    return p;
}

}  // namespace sqpc
