#pragma once

#include <map>

#include "sqpc/kron_algebra.hpp"
#include "sqpc/tensorized.hpp"

namespace sqpc {

inline TensorizedCircuit conjugate(const TensorizedCircuit& c) {
    TensorizedCircuit out = c;
    for (int i = 0; i < out.num_layers(); ++i) {
        Layer& l = out.mutable_layer(i);
        if (l.kind == Layer::Kind::sum) l.weight = l.weight.conjugate();
        if (l.kind == Layer::Kind::input) l.family = conjugate_family(l.family);
    }
    return out;
}

// Where each layer of a product circuit came from: a pair of layers (a in c1, b in c2),
// or a copy of a single layer (the other side is -1).
struct ProductOrigin {
    int a = -1;
    int b = -1;
};

struct ProductCircuit {
    TensorizedCircuit circuit;
    std::vector<ProductOrigin> origin;  // indexed by layer of `circuit`
};

namespace detail {

class Multiplier {
public:
    Multiplier(const TensorizedCircuit& c1, const TensorizedCircuit& c2) : c1_(c1), c2_(c2), out_(c1.domains()) {
        require(c1.num_vars() == c2.num_vars(), ErrorKind::input, "circuits over different variable sets");
        for (int v = 0; v < c1.num_vars(); ++v)
            require(c1.domains()[static_cast<std::size_t>(v)] == c2.domains()[static_cast<std::size_t>(v)], ErrorKind::input,
                    "circuits disagree on the domain of variable " + std::to_string(v));
    }

    ProductCircuit run() {
        int root = mul(c1_.output(), c2_.output());
        out_.set_output(root);
        // set_output keeps relative order; rebuild the origin table for the kept layers
        ProductCircuit pc;
        pc.circuit = std::move(out_);
        pc.origin = remap_origins(root);
        return pc;
    }

private:
    std::vector<ProductOrigin> remap_origins(int root) const {
        // layers reachable from root, in original order, are exactly the kept ones
        std::vector<char> live(origin_.size(), 0);
        live[static_cast<std::size_t>(root)] = 1;
        for (int u = root; u >= 0; --u) {
            if (!live[static_cast<std::size_t>(u)]) continue;
            for (int i : inputs_[static_cast<std::size_t>(u)]) live[static_cast<std::size_t>(i)] = 1;
        }
        std::vector<ProductOrigin> out;
        for (std::size_t u = 0; u < origin_.size(); ++u)
            if (live[u]) out.push_back(origin_[u]);
        return out;
    }

    int record(int id, int a, int b) {
        require(static_cast<int>(origin_.size()) == id, ErrorKind::numerical, "product origin table out of sync");
        origin_.push_back({a, b});
        inputs_.push_back(out_.layer(id).inputs);
        return id;
    }

    int copy(const TensorizedCircuit& src, int l, bool first) {
        auto& memo = first ? copy1_ : copy2_;
        auto it = memo.find(l);
        if (it != memo.end()) return it->second;
        const Layer& L = src.layer(l);
        int id;
        std::vector<int> ins;
        for (int i : L.inputs) ins.push_back(copy(src, i, first));
        switch (L.kind) {
        case Layer::Kind::input: id = out_.add_input(L.var, L.family); break;
        case Layer::Kind::sum: id = out_.add_sum(ins, L.weight); break;
        case Layer::Kind::hadamard: id = out_.add_hadamard(ins[0], ins[1]); break;
        default: id = out_.add_kronecker(ins[0], ins[1], L.perm); break;
        }
        record(id, first ? l : -1, first ? -1 : l);
        memo[l] = id;
        return id;
    }

    int mul(int l1, int l2) {
        auto key = std::make_pair(l1, l2);
        auto it = memo_.find(key);
        if (it != memo_.end()) return it->second;
        const Layer& A = c1_.layer(l1);
        const Layer& B = c2_.layer(l2);
        int id;
        if (!A.scope.intersects(B.scope)) {
            id = out_.add_kronecker(copy(c1_, l1, true), copy(c2_, l2, false));
        } else {
            require(A.scope == B.scope, ErrorKind::property,
                    "incompatible circuits: overlapping scopes " + A.scope.str() + " and " + B.scope.str());
            if (A.kind == Layer::Kind::sum || B.kind == Layer::Kind::sum) {
                id = mul_sum(l1, l2);
            } else if (A.kind == Layer::Kind::input && B.kind == Layer::Kind::input) {
                id = out_.add_input(A.var, product_family(A.family, B.family));
            } else if (A.is_product() && B.is_product()) {
                id = mul_product(l1, l2);
            } else {
                throw Error(ErrorKind::property, "incompatible circuits: input layer meets product layer");
            }
        }
        record(id, l1, l2);
        memo_[key] = id;
        return id;
    }

    int mul_sum(int l1, int l2) {
        auto side = [](const TensorizedCircuit& c, int l, std::vector<int>& ins, BlockMatrix& W) {
            const Layer& L = c.layer(l);
            if (L.kind == Layer::Kind::sum) {
                ins = L.inputs;
                W.M = L.weight;
                W.row_blocks = {L.width};
                for (int i : L.inputs) W.col_blocks.push_back(c.layer(i).width);
            } else {
                ins = {l};
                W = BlockMatrix::trivial(MatrixC::Identity(L.width, L.width));
            }
        };
        std::vector<int> ia, ib;
        BlockMatrix Wa, Wb;
        side(c1_, l1, ia, Wa);
        side(c2_, l2, ib, Wb);
        std::vector<int> ins;
        for (int a : ia)
            for (int b : ib) ins.push_back(mul(a, b));
        return out_.add_sum(ins, tracy_singh(Wa, Wb).M);
    }

    int mul_product(int l1, int l2) {
        const Layer& A = c1_.layer(l1);
        const Layer& B = c2_.layer(l2);
        require(A.kind == B.kind, ErrorKind::property, "mixed Hadamard/Kronecker products are not supported");
        const int a = A.inputs[0], c = A.inputs[1];
        const int x = B.inputs[0], y = B.inputs[1];
        const bool straight = c1_.layer(a).scope == c2_.layer(x).scope;
        const bool crossed = c1_.layer(a).scope == c2_.layer(y).scope;
        require(straight || crossed, ErrorKind::property, "incompatible circuits: products split a scope differently");
        const int m1 = mul(a, straight ? x : y);
        const int m2 = mul(c, straight ? y : x);
        if (A.kind == Layer::Kind::hadamard) return out_.add_hadamard(m1, m2);

        const int Ka = c1_.layer(a).width, Kc = c1_.layer(c).width;
        const int Kx = c2_.layer(x).width, Ky = c2_.layer(y).width;
        // Bring the factors of m1 ⊗ m2 into the order (a ⊗ c) ⊗ (x ⊗ y).
        std::vector<int> map = straight ? PermutationSpec{Ka, Kx, Kc, Ky}.index_map()
                                        : factor_permutation({Ka, Ky, Kc, Kx}, {0, 2, 3, 1});
        if (!A.perm.empty() || !B.perm.empty()) {
            const int KA = Ka * Kc, KB = Kx * Ky;
            std::vector<int> outer(static_cast<std::size_t>(KA * KB));
            for (int p1 = 0; p1 < KA; ++p1)
                for (int p2 = 0; p2 < KB; ++p2) {
                    const int q1 = A.perm.empty() ? p1 : A.perm[static_cast<std::size_t>(p1)];
                    const int q2 = B.perm.empty() ? p2 : B.perm[static_cast<std::size_t>(p2)];
                    outer[static_cast<std::size_t>(p1 * KB + p2)] = q1 * KB + q2;
                }
            map = compose_maps(outer, map);
        }
        return out_.add_kronecker(m1, m2, map);
    }

    const TensorizedCircuit& c1_;
    const TensorizedCircuit& c2_;
    TensorizedCircuit out_;
    std::map<std::pair<int, int>, int> memo_;
    std::map<int, int> copy1_, copy2_;
    std::vector<ProductOrigin> origin_;
    std::vector<std::vector<int>> inputs_;
};

}  // namespace detail

inline ProductCircuit multiply_with_origin(const TensorizedCircuit& c1, const TensorizedCircuit& c2) {
    return detail::Multiplier(c1, c2).run();
}

// Circuit computing c1(x)·c2(x) for compatible c1, c2.
inline TensorizedCircuit multiply(const TensorizedCircuit& c1, const TensorizedCircuit& c2) {
    return multiply_with_origin(c1, c2).circuit;
}

// Layer values with input layers over Z replaced by their integrals and the rest evaluated at y.
inline std::vector<MatrixC> integrate_layers(const TensorizedCircuit& c, const Assignment& y, const VarSet& Z) {
    std::vector<MatrixC> vals(static_cast<std::size_t>(c.num_layers()));
    for (int i = 0; i < c.num_layers(); ++i) {
        const Layer& l = c.layer(i);
        if (l.kind != Layer::Kind::input) continue;
        if (Z.contains(l.var)) {
            vals[static_cast<std::size_t>(i)] = l.family.integrals();
        } else {
            const double x = static_cast<std::size_t>(l.var) < y.size() ? y[static_cast<std::size_t>(l.var)] : missing_value();
            check_value(c.domains(), l.var, x);
            vals[static_cast<std::size_t>(i)] = l.family.eval(x);
        }
    }
    propagate(c, vals);
    return vals;
}

inline double marginal_via_square(const TensorizedCircuit& c, const Assignment& y, const VarSet& Z) {
    require(check_structured_decomposable(c), ErrorKind::precondition, "squaring needs a structured-decomposable circuit");
    TensorizedCircuit sq = multiply(c, conjugate(c));
    auto vals = integrate_layers(sq, y, Z);
    return vals[static_cast<std::size_t>(sq.output())](0, 0).real();
}

inline double partition_via_square(const TensorizedCircuit& c) {
    return marginal_via_square(c, Assignment(static_cast<std::size_t>(c.num_vars()), missing_value()), c.scope());
}

}  // namespace sqpc
