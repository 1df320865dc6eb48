#pragma once

#include <map>
#include <optional>
#include <sstream>

#include "sqpc/kron_algebra.hpp"
#include "sqpc/squaring.hpp"
#include "sqpc/tensorized.hpp"

namespace sqpc {

struct UnitarityReport {
    bool u1 = true;  // orthonormal input layers, mutually orthogonal layers per variable
    bool u2 = true;  // ∃X: sum inputs share no input layers over X
    bool u3 = true;  // semi-unitary sum weights
    bool u4 = true;  // ∀X form of u2
    std::vector<std::string> witnesses;

    bool unitary() const { return u1 && u2 && u3; }
    bool unitary_any_marginal() const { return u1 && u3 && u4; }
};

namespace detail {

// Sorted ids of input layers reachable from each layer.
inline std::vector<std::vector<int>> reachable_inputs(const TensorizedCircuit& c) {
    std::vector<std::vector<int>> r(static_cast<std::size_t>(c.num_layers()));
    for (int i = 0; i < c.num_layers(); ++i) {
        const Layer& l = c.layer(i);
        auto& out = r[static_cast<std::size_t>(i)];
        if (l.kind == Layer::Kind::input) {
            out = {i};
            continue;
        }
        for (int in : l.inputs) {
            std::vector<int> merged;
            std::set_union(out.begin(), out.end(), r[static_cast<std::size_t>(in)].begin(), r[static_cast<std::size_t>(in)].end(),
                           std::back_inserter(merged));
            out.swap(merged);
        }
    }
    return r;
}

}  // namespace detail

inline UnitarityReport check_unitarity(const TensorizedCircuit& c, double tol_orth = tau_orth, double tol_unit = tau_unit) {
    UnitarityReport rep;
    auto note = [&](const std::string& s) {
        if (rep.witnesses.size() < 32) rep.witnesses.push_back(s);
    };

    std::map<int, std::vector<int>> inputs_by_var;
    for (int i = 0; i < c.num_layers(); ++i) {
        const Layer& l = c.layer(i);
        if (l.kind != Layer::Kind::input) continue;
        inputs_by_var[l.var].push_back(i);
        double defect = 0;
        try {
            defect = orthonormality_defect(l.family);
        } catch (const Error&) {
            defect = std::numeric_limits<double>::infinity();
        }
        if (!(defect < tol_orth)) {
            rep.u1 = false;
            note("U1: input layer " + std::to_string(i) + " is not orthonormal (defect " + std::to_string(defect) + ")");
        }
    }
    for (const auto& [var, ids] : inputs_by_var)
        for (std::size_t a = 0; a < ids.size(); ++a)
            for (std::size_t b = a + 1; b < ids.size(); ++b) {
                double m = 0;
                try {
                    m = gram(c.layer(ids[a]).family, c.layer(ids[b]).family).cwiseAbs().maxCoeff();
                } catch (const Error&) {
                    m = std::numeric_limits<double>::infinity();
                }
                if (!(m < tol_orth)) {
                    rep.u1 = false;
                    note("U1: input layers " + std::to_string(ids[a]) + " and " + std::to_string(ids[b]) + " over variable " +
                         std::to_string(var) + " are not orthogonal");
                }
            }

    auto reach = detail::reachable_inputs(c);
    for (int i = 0; i < c.num_layers(); ++i) {
        const Layer& l = c.layer(i);
        if (l.kind != Layer::Kind::sum) continue;
        if (l.weight.rows() > l.weight.cols()) {
            rep.u3 = false;
            note("U3: sum layer " + std::to_string(i) + " has shape " + std::to_string(l.weight.rows()) + "x" +
                 std::to_string(l.weight.cols()));
        } else {
            double d = semi_unitary_defect(l.weight);
            if (!(d < tol_unit)) {
                rep.u3 = false;
                note("U3: sum layer " + std::to_string(i) + " has ||WW^H - I||_max = " + std::to_string(d));
            }
        }
        if (l.inputs.size() < 2) continue;
        bool any = false, all = true;
        int bad_var = -1;
        for (int X : l.scope.to_vector()) {
            std::set<int> seen;
            bool disjoint = true;
            for (int in : l.inputs) {
                for (int id : reach[static_cast<std::size_t>(in)]) {
                    if (c.layer(id).var != X) continue;
                    if (!seen.insert(id).second) {
                        disjoint = false;
                        break;
                    }
                }
                if (!disjoint) break;
            }
            any = any || disjoint;
            if (!disjoint) {
                all = false;
                if (bad_var < 0) bad_var = X;
            }
        }
        if (!any) {
            rep.u2 = false;
            note("U2: inputs of sum layer " + std::to_string(i) + " share input layers over every variable");
        }
        if (!all) {
            rep.u4 = false;
            note("U4: inputs of sum layer " + std::to_string(i) + " share input layers over variable " + std::to_string(bad_var));
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Marginals of |c|² for unitary circuits

struct MarginalStats {
    std::size_t evaluated_layers = 0;  // scope ∩ Z = ∅
    std::size_t moment_layers = 0;     // scope meets Z but is not inside it
    std::size_t identity_layers = 0;   // scope ⊆ Z
    double flops = 0;                  // multiply-adds, counted per layer kind
};

namespace detail {

class UnitaryMarginal {
public:
    UnitaryMarginal(const TensorizedCircuit& c, const Assignment& y, const VarSet& Z, MarginalStats* stats)
        : c_(c), y_(y), Z_(Z), stats_(stats), val_(static_cast<std::size_t>(c.num_layers())),
          mom_(static_cast<std::size_t>(c.num_layers())) {}

    // ∫ ℓ ℓ† over Z, as a K×K matrix (row-major reshape of the moment vector).
    const MatrixC& moment(int i) {
        auto& slot = mom_[static_cast<std::size_t>(i)];
        if (slot) return *slot;
        const Layer& l = c_.layer(i);
        MatrixC M;
        if (l.scope.subset_of(Z_)) {
            M = MatrixC::Identity(l.width, l.width);
            if (stats_) ++stats_->identity_layers;
        } else if (!l.scope.intersects(Z_)) {
            const VectorC& r = value(i);
            M = r * r.adjoint();
            if (stats_) {
                ++stats_->evaluated_layers;
                stats_->flops += static_cast<double>(l.width) * l.width;
            }
        } else {
            if (stats_) ++stats_->moment_layers;
            switch (l.kind) {
            case Layer::Kind::sum: {
                M = MatrixC::Zero(l.width, l.width);
                Eigen::Index off = 0;
                for (int in : l.inputs) {
                    const int K = c_.layer(in).width;
                    const auto Wi = l.weight.middleCols(off, K);
                    MatrixC T = Wi * moment(in);
                    M.noalias() += T * Wi.adjoint();
                    off += K;
                    if (stats_) stats_->flops += static_cast<double>(l.width) * K * (K + l.width);
                }
                break;
            }
            case Layer::Kind::hadamard:
                M = moment(l.inputs[0]).cwiseProduct(moment(l.inputs[1]));
                if (stats_) stats_->flops += static_cast<double>(l.width) * l.width;
                break;
            case Layer::Kind::kronecker: {
                const MatrixC& M1 = moment(l.inputs[0]);
                const MatrixC& M2 = moment(l.inputs[1]);
                const int K1 = static_cast<int>(M1.rows()), K2 = static_cast<int>(M2.rows());
                // vec(M1 ⊗ M2) = (I ⊗ K^(K1,K2) ⊗ I)(vec M1 ⊗ vec M2)
                VectorC r = commutation_apply(PermutationSpec{K1, K1, K2, K2}, kron(vec_rows(M1), vec_rows(M2)));
                M = unvec_rows(r, l.width, l.width);
                if (!l.perm.empty()) {
                    MatrixC P(l.width, l.width);
                    for (int p = 0; p < l.width; ++p)
                        for (int q = 0; q < l.width; ++q)
                            P(p, q) = M(l.perm[static_cast<std::size_t>(p)], l.perm[static_cast<std::size_t>(q)]);
                    M.swap(P);
                }
                if (stats_) stats_->flops += static_cast<double>(l.width) * l.width;
                break;
            }
            case Layer::Kind::input:
                throw Error(ErrorKind::numerical, "univariate input layer partially inside Z");
            }
        }
        slot = std::move(M);
        return *slot;
    }

private:
    const VectorC& value(int i) {
        auto& slot = val_[static_cast<std::size_t>(i)];
        if (slot) return *slot;
        const Layer& l = c_.layer(i);
        VectorC v;
        switch (l.kind) {
        case Layer::Kind::input: {
            const double x = static_cast<std::size_t>(l.var) < y_.size() ? y_[static_cast<std::size_t>(l.var)] : missing_value();
            check_value(c_.domains(), l.var, x);
            v = l.family.eval(x);
            break;
        }
        case Layer::Kind::sum: {
            v = VectorC::Zero(l.width);
            Eigen::Index off = 0;
            for (int in : l.inputs) {
                const VectorC& x = value(in);
                v.noalias() += l.weight.middleCols(off, x.size()) * x;
                off += x.size();
            }
            if (stats_) stats_->flops += static_cast<double>(l.weight.size());
            break;
        }
        case Layer::Kind::hadamard:
            v = value(l.inputs[0]).cwiseProduct(value(l.inputs[1]));
            if (stats_) stats_->flops += l.width;
            break;
        case Layer::Kind::kronecker: {
            VectorC k = kron(value(l.inputs[0]), value(l.inputs[1]));
            v = l.perm.empty() ? k : apply_index_map(l.perm, k);
            if (stats_) stats_->flops += l.width;
            break;
        }
        }
        slot = std::move(v);
        return *slot;
    }

    const TensorizedCircuit& c_;
    const Assignment& y_;
    const VarSet& Z_;
    MarginalStats* stats_;
    std::vector<std::optional<VectorC>> val_;
    std::vector<std::optional<MatrixC>> mom_;
};

}  // namespace detail

// ∫ |c(y, z)|² dz for circuits satisfying U1, U3 and U4 (U2 suffices when Z covers every variable).
inline double mar_squared_unitary(const TensorizedCircuit& c, const Assignment& y, const VarSet& Z, bool verify = true,
                                  MarginalStats* stats = nullptr) {
    if (verify) {
        UnitarityReport rep = check_unitarity(c);
        const bool full = c.scope().subset_of(Z);
        const bool ok = rep.u1 && rep.u3 && (full ? rep.u2 : rep.u4);
        if (!ok) {
            std::string why = rep.witnesses.empty() ? "" : rep.witnesses.front();
            throw Error(ErrorKind::property, "circuit violates unitarity conditions: " + why);
        }
    }
    detail::UnitaryMarginal m(c, y, Z, stats);
    const MatrixC& M = m.moment(c.output());
    const cplx v = M(0, 0);
    require(std::abs(v.imag()) <= 1e-9 * std::max(1.0, std::abs(v.real())), ErrorKind::numerical,
            "marginal has a non-negligible imaginary part " + std::to_string(v.imag()));
    return v.real();
}

// All intermediate moment matrices, for invariant tests.
inline std::vector<MatrixC> squared_moments(const TensorizedCircuit& c, const Assignment& y, const VarSet& Z) {
    detail::UnitaryMarginal m(c, y, Z, nullptr);
    std::vector<MatrixC> out;
    for (int i = 0; i < c.num_layers(); ++i) out.push_back(m.moment(i));
    return out;
}

// ---------------------------------------------------------------------------
// Unitarization

// Inserts identity sum layers between consecutive products, and above a non-sum output.
inline TensorizedCircuit interleave_products(const TensorizedCircuit& c) {
    TensorizedCircuit out(c.domains());
    std::vector<int> map(static_cast<std::size_t>(c.num_layers()), -1);
    std::vector<int> wrapped(static_cast<std::size_t>(c.num_layers()), -1);
    auto as_sum_child = [&](int i) {
        const int m = map[static_cast<std::size_t>(i)];
        if (!c.layer(i).is_product()) return m;
        int& w = wrapped[static_cast<std::size_t>(i)];
        if (w < 0) w = out.add_sum({m}, MatrixC::Identity(c.layer(i).width, c.layer(i).width));
        return w;
    };
    for (int i = 0; i < c.num_layers(); ++i) {
        const Layer& l = c.layer(i);
        int id = -1;
        switch (l.kind) {
        case Layer::Kind::input: id = out.add_input(l.var, l.family, l.tie_group); break;
        case Layer::Kind::sum: {
            std::vector<int> ins;
            for (int in : l.inputs) ins.push_back(map[static_cast<std::size_t>(in)]);
            id = out.add_sum(ins, l.weight);
            break;
        }
        case Layer::Kind::hadamard: id = out.add_hadamard(as_sum_child(l.inputs[0]), as_sum_child(l.inputs[1])); break;
        case Layer::Kind::kronecker: id = out.add_kronecker(as_sum_child(l.inputs[0]), as_sum_child(l.inputs[1]), l.perm); break;
        }
        map[static_cast<std::size_t>(i)] = id;
    }
    int root = map[static_cast<std::size_t>(c.output())];
    if (c.layer(c.output()).kind != Layer::Kind::sum) root = out.add_sum({root}, MatrixC::Identity(1, 1));
    out.set_output(root);
    return out;
}

struct UnitarizeResult {
    TensorizedCircuit circuit;
    double beta = 1.0;  // circuit(x) = beta * c(x)
};

struct UnitarizeOptions {
    int max_width = 1 << 16;  // cap on widths produced by converting Hadamard layers
};

inline UnitarizeResult unitarize(const TensorizedCircuit& c, const UnitarizeOptions& opt = {}) {
    require(check_smooth(c) && check_decomposable(c), ErrorKind::precondition, "unitarize needs a smooth, decomposable circuit");
    TensorizedCircuit src = interleave_products(c);
    TensorizedCircuit out(src.domains());
    std::vector<int> id(static_cast<std::size_t>(src.num_layers()), -1);
    std::vector<MatrixC> carry(static_cast<std::size_t>(src.num_layers()));  // ℓ_old = carry · ℓ_new
    for (int i = 0; i < src.num_layers(); ++i) {
        const Layer& l = src.layer(i);
        const auto u = static_cast<std::size_t>(i);
        switch (l.kind) {
        case Layer::Kind::input:
            id[u] = out.add_input(l.var, l.family, l.tie_group);
            carry[u] = MatrixC::Identity(l.width, l.width);
            break;
        case Layer::Kind::sum: {
            Eigen::Index H = 0;
            std::vector<int> ins;
            for (int in : l.inputs) {
                H += carry[static_cast<std::size_t>(in)].cols();
                ins.push_back(id[static_cast<std::size_t>(in)]);
            }
            MatrixC V(l.width, H);
            Eigen::Index off = 0, col = 0;
            for (int in : l.inputs) {
                const MatrixC& R = carry[static_cast<std::size_t>(in)];
                V.middleCols(col, R.cols()) = l.weight.middleCols(off, R.rows()) * R;
                off += R.rows();
                col += R.cols();
            }
            QRResult qr = thin_qr(V.adjoint());
            id[u] = out.add_sum(ins, qr.Q.adjoint());
            carry[u] = qr.R.adjoint();
            break;
        }
        case Layer::Kind::kronecker: {
            const MatrixC& R1 = carry[static_cast<std::size_t>(l.inputs[0])];
            const MatrixC& R2 = carry[static_cast<std::size_t>(l.inputs[1])];
            id[u] = out.add_kronecker(id[static_cast<std::size_t>(l.inputs[0])], id[static_cast<std::size_t>(l.inputs[1])]);
            MatrixC R = kron(R1, R2);
            if (!l.perm.empty()) {
                MatrixC P(R.rows(), R.cols());
                for (Eigen::Index p = 0; p < R.rows(); ++p) P.row(p) = R.row(l.perm[static_cast<std::size_t>(p)]);
                R.swap(P);
            }
            carry[u] = std::move(R);
            break;
        }
        case Layer::Kind::hadamard: {
            const MatrixC& R1 = carry[static_cast<std::size_t>(l.inputs[0])];
            const MatrixC& R2 = carry[static_cast<std::size_t>(l.inputs[1])];
            const Eigen::Index w = R1.cols() * R2.cols();
            require(w <= opt.max_width, ErrorKind::resource,
                    "Hadamard-to-Kronecker conversion needs width " + std::to_string(w) + " above the cap");
            id[u] = out.add_kronecker(id[static_cast<std::size_t>(l.inputs[0])], id[static_cast<std::size_t>(l.inputs[1])]);
            carry[u] = face_split(R1, R2);
            break;
        }
        }
    }
    const auto root = static_cast<std::size_t>(src.output());
    out.set_output(id[root]);
    const MatrixC& R = carry[root];
    require(R.rows() == 1 && R.cols() == 1, ErrorKind::numerical, "root carry is not 1x1");
    const double r = std::abs(R(0, 0));
    require(r > 0, ErrorKind::numerical, "circuit is identically zero; no normalizing constant exists");
    return {std::move(out), 1.0 / r};
}

}  // namespace sqpc
