#pragma once

#include <functional>
#include <string>

#include "sqpc/linalg.hpp"
#include "sqpc/tensorized.hpp"

namespace sqpc {

// Regions are expanded as a tree: a region reached through two different partitions appears twice.
struct RegionGraph {
    struct Region {
        VarSet scope;
        std::vector<int> partitions;
        int var = -1;  // leaf variable
    };
    struct Partition {
        int region = -1;
        std::vector<int> children;
    };
    std::vector<Region> regions;
    std::vector<Partition> partitions;
    int root = -1;
    int num_vars = 0;

    int add_leaf(int var) {
        Region r;
        r.scope = VarSet::single(var);
        r.var = var;
        regions.push_back(std::move(r));
        return static_cast<int>(regions.size()) - 1;
    }
    int add_region(const VarSet& scope) {
        Region r;
        r.scope = scope;
        regions.push_back(std::move(r));
        return static_cast<int>(regions.size()) - 1;
    }
    void add_partition(int region, std::vector<int> children) {
        VarSet u;
        for (int ch : children) {
            require(!u.intersects(regions[static_cast<std::size_t>(ch)].scope), ErrorKind::input,
                    "partition children must be disjoint");
            u |= regions[static_cast<std::size_t>(ch)].scope;
        }
        require(u == regions[static_cast<std::size_t>(region)].scope, ErrorKind::input,
                "partition children must cover the region scope");
        partitions.push_back({region, std::move(children)});
        regions[static_cast<std::size_t>(region)].partitions.push_back(static_cast<int>(partitions.size()) - 1);
    }

    bool is_leaf(int r) const { return regions[static_cast<std::size_t>(r)].partitions.empty(); }

    // Number of leaf occurrences per variable.
    std::vector<int> occurrences() const {
        std::vector<int> occ(static_cast<std::size_t>(num_vars), 0);
        for (const auto& r : regions)
            if (r.partitions.empty()) ++occ[static_cast<std::size_t>(r.var)];
        return occ;
    }
};

// Left-linear chain ((X0, X1), X2), ...
inline RegionGraph chain_region_graph(int d) {
    require(d >= 2, ErrorKind::input, "chain needs at least two variables");
    RegionGraph g;
    g.num_vars = d;
    int acc = g.add_leaf(0);
    for (int v = 1; v < d; ++v) {
        int leaf = g.add_leaf(v);
        int r = g.add_region(g.regions[static_cast<std::size_t>(acc)].scope | VarSet::single(v));
        g.add_partition(r, {acc, leaf});
        acc = r;
    }
    g.root = acc;
    return g;
}

// Balanced binary tree over d = 2^m variables.
inline RegionGraph binary_tree_region_graph(int d) {
    require(d >= 2 && (d & (d - 1)) == 0, ErrorKind::input, "balanced binary tree needs d a power of two");
    RegionGraph g;
    g.num_vars = d;
    std::function<int(int, int)> build = [&](int lo, int hi) -> int {
        if (hi - lo == 1) return g.add_leaf(lo);
        const int mid = (lo + hi) / 2;
        int a = build(lo, mid);
        int b = build(mid, hi);
        int r = g.add_region(VarSet::range(lo, hi));
        g.add_partition(r, {a, b});
        return r;
    };
    g.root = build(0, d);
    return g;
}

namespace detail {

inline VarSet patch_scope(int r0, int c0, int h, int w, int width) {
    VarSet s;
    for (int r = r0; r < r0 + h; ++r)
        for (int c = c0; c < c0 + w; ++c) s.insert(r * width + c);
    return s;
}

}  // namespace detail

// Four aligned patches per region; odd sides split ceil/floor.
inline RegionGraph quadtree_region_graph(int h, int w) {
    require(h >= 1 && w >= 1 && h * w >= 2, ErrorKind::input, "image needs at least two pixels");
    RegionGraph g;
    g.num_vars = h * w;
    std::function<int(int, int, int, int)> build = [&](int r0, int c0, int ph, int pw) -> int {
        if (ph == 1 && pw == 1) return g.add_leaf(r0 * w + c0);
        std::vector<std::pair<int, int>> rows, cols;
        if (ph >= 2) rows = {{r0, (ph + 1) / 2}, {r0 + (ph + 1) / 2, ph / 2}};
        else rows = {{r0, 1}};
        if (pw >= 2) cols = {{c0, (pw + 1) / 2}, {c0 + (pw + 1) / 2, pw / 2}};
        else cols = {{c0, 1}};
        std::vector<int> children;
        for (auto [rr, rh] : rows)
            for (auto [cc, cw] : cols) children.push_back(build(rr, cc, rh, cw));
        int r = g.add_region(detail::patch_scope(r0, c0, ph, pw, w));
        g.add_partition(r, children);
        return r;
    };
    g.root = build(0, 0, h, w);
    return g;
}

// Patches larger than min_patch in both sides get a horizontal and a vertical split;
// smaller patches get one halving cut along their longer side.
inline RegionGraph multisplit_region_graph(int h, int w, int min_patch = 8) {
    require(h >= 1 && w >= 1 && h * w >= 2, ErrorKind::input, "image needs at least two pixels");
    require(min_patch >= 1, ErrorKind::input, "min_patch must be >= 1");
    RegionGraph g;
    g.num_vars = h * w;
    std::function<int(int, int, int, int)> build = [&](int r0, int c0, int ph, int pw) -> int {
        if (ph == 1 && pw == 1) return g.add_leaf(r0 * w + c0);
        int r = g.add_region(detail::patch_scope(r0, c0, ph, pw, w));
        const bool both = ph > min_patch && pw > min_patch;
        auto hcut = [&] {
            int top = build(r0, c0, (ph + 1) / 2, pw);
            int bot = build(r0 + (ph + 1) / 2, c0, ph / 2, pw);
            g.add_partition(r, {top, bot});
        };
        auto vcut = [&] {
            int left = build(r0, c0, ph, (pw + 1) / 2);
            int right = build(r0, c0 + (pw + 1) / 2, ph, pw / 2);
            g.add_partition(r, {left, right});
        };
        if (both) {
            hcut();
            vcut();
        } else if (ph >= pw) {
            hcut();
        } else {
            vcut();
        }
        return r;
    };
    g.root = build(0, 0, h, w);
    return g;
}

// ---------------------------------------------------------------------------
// Compilation into tensorized circuits

struct FamilySpec {
    std::string kind = "categorical";  // categorical | embedding | delta | fourier | gaussian
    int cardinality = 2;
    double period = 6.0;
    double gauss_lo = -3.0;
    double gauss_hi = 3.0;
    double gauss_sigma = 0.5;

    VarDomain domain() const {
        if (kind == "fourier") return VarDomain::interval(0.0, period);
        if (kind == "gaussian") return VarDomain::real_line();
        return VarDomain::categorical(cardinality);
    }
    bool orthonormal() const { return kind == "embedding" || kind == "delta" || kind == "fourier"; }

    // Largest usable input width for a variable appearing in `occ` leaves.
    int input_width(int K, int occ, bool unitary) const {
        if (kind == "delta") return cardinality;
        if (kind == "fourier") return K % 2 == 1 ? K : K + 1;
        if (kind == "embedding" || (unitary && kind == "categorical")) {
            const int cap = cardinality / std::max(1, occ);
            require(cap >= 1, ErrorKind::infeasible,
                    "variable occurs " + std::to_string(occ) + " times, more than " + std::to_string(cardinality) +
                        " orthonormal functions allow");
            return std::min(K, cap);
        }
        return K;
    }
};

struct CompileOptions {
    int K = 2;
    Layer::Kind product = Layer::Kind::kronecker;
    FamilySpec family;
    bool unitary = false;
    std::uint64_t seed = 0;
};

inline TensorizedCircuit compile_region_graph(const RegionGraph& g, const CompileOptions& opt) {
    require(opt.K >= 1, ErrorKind::input, "K must be >= 1");
    require(opt.product == Layer::Kind::hadamard || opt.product == Layer::Kind::kronecker, ErrorKind::input,
            "product kind must be hadamard or kronecker");
    const bool hadamard = opt.product == Layer::Kind::hadamard;
    const bool unitary = opt.unitary;
    if (unitary)
        require(opt.family.orthonormal() || opt.family.kind == "categorical", ErrorKind::capability,
                "unitary circuits need orthonormal input families");
    Rng rng(opt.seed);
    TensorizedCircuit c(std::vector<VarDomain>(static_cast<std::size_t>(g.num_vars), opt.family.domain()));

    const std::vector<int> occ = g.occurrences();
    int max_occ = 1;
    for (int o : occ) max_occ = std::max(max_occ, o);
    // Hadamard layers need one common width.
    const int common = opt.family.input_width(opt.K, max_occ, unitary);

    // Input families per variable, one per occurrence.
    std::vector<std::vector<InputFamily>> fams(static_cast<std::size_t>(g.num_vars));
    std::vector<int> tie(static_cast<std::size_t>(g.num_vars), -1);
    for (int v = 0; v < g.num_vars; ++v) {
        const int o = std::max(1, occ[static_cast<std::size_t>(v)]);
        const int kin = hadamard ? common : opt.family.input_width(opt.K, o, unitary);
        auto& out = fams[static_cast<std::size_t>(v)];
        const std::string& kind = opt.family.kind;
        if (kind == "embedding" || (unitary && kind == "categorical")) {
            out = make_unitary_embedding_blocks(opt.family.cardinality, std::vector<int>(static_cast<std::size_t>(o), kin), rng());
            if (o > 1) tie[static_cast<std::size_t>(v)] = v;
        } else if (kind == "delta") {
            for (int k = 0; k < o; ++k) out.push_back(delta_family(opt.family.cardinality));
        } else if (kind == "fourier") {
            require(o == 1, ErrorKind::infeasible, "repeated Fourier input layers over one variable are not orthogonal");
            out.push_back(fourier_family(kin, opt.family.period));
        } else if (kind == "gaussian") {
            require(!unitary, ErrorKind::capability, "Gaussian inputs are not orthonormal");
            for (int k = 0; k < o; ++k) {
                std::vector<double> mu, sd;
                for (int i = 0; i < kin; ++i) {
                    mu.push_back(kin == 1 ? 0.5 * (opt.family.gauss_lo + opt.family.gauss_hi)
                                          : opt.family.gauss_lo + (opt.family.gauss_hi - opt.family.gauss_lo) * i / (kin - 1));
                    sd.push_back(opt.family.gauss_sigma);
                }
                out.push_back(gaussian_family(mu, sd));
            }
        } else if (kind == "categorical") {
            for (int k = 0; k < o; ++k) out.push_back(random_categorical(opt.family.cardinality, kin, rng));
        } else {
            throw Error(ErrorKind::input, "unknown input family kind '" + kind + "'");
        }
    }
    std::vector<int> used(static_cast<std::size_t>(g.num_vars), 0);

    auto make_weight = [&](int k1, int k2) -> MatrixC {
        if (unitary) return random_semi_unitary(k1, k2, rng);
        return random_complex(k1, k2, 1.0 / std::sqrt(static_cast<double>(k2)), rng);
    };

    std::vector<int> out_layer(g.regions.size(), -1);
    std::function<int(int)> build = [&](int r) -> int {
        if (out_layer[static_cast<std::size_t>(r)] >= 0) return out_layer[static_cast<std::size_t>(r)];
        const auto& reg = g.regions[static_cast<std::size_t>(r)];
        int id;
        if (reg.partitions.empty()) {
            const auto v = static_cast<std::size_t>(reg.var);
            id = c.add_input(reg.var, fams[v][static_cast<std::size_t>(used[v]++)], tie[v]);
        } else {
            std::vector<int> prods;
            int fan_in = 0;
            for (int p : reg.partitions) {
                std::vector<int> level;
                for (int ch : g.partitions[static_cast<std::size_t>(p)].children) level.push_back(build(ch));
                while (level.size() > 1) {
                    std::vector<int> next;
                    for (std::size_t i = 0; i + 1 < level.size(); i += 2)
                        next.push_back(hadamard ? c.add_hadamard(level[i], level[i + 1]) : c.add_kronecker(level[i], level[i + 1]));
                    if (level.size() % 2) next.push_back(level.back());
                    level.swap(next);
                }
                prods.push_back(level[0]);
                fan_in += c.layer(level[0]).width;
            }
            int k1 = r == g.root ? 1 : (hadamard ? common : opt.K);
            if (unitary) k1 = std::min(k1, fan_in);
            id = c.add_sum(prods, make_weight(k1, fan_in));
        }
        out_layer[static_cast<std::size_t>(r)] = id;
        return id;
    };
    int root = build(g.root);
    c.set_output(root);
    return c;
}

inline TensorizedCircuit build_quadtree(int h, int w, const CompileOptions& opt) {
    return compile_region_graph(quadtree_region_graph(h, w), opt);
}

inline TensorizedCircuit build_multisplit(int h, int w, int min_patch, const CompileOptions& opt) {
    return compile_region_graph(multisplit_region_graph(h, w, min_patch), opt);
}

// Rank-R binary tree: Kronecker products feeding R×R² sum layers, root 1×R².
inline TensorizedCircuit build_ttn_binary(int d, int R, FamilySpec family, bool unitary = false, std::uint64_t seed = 0) {
    CompileOptions o;
    o.K = R;
    o.product = Layer::Kind::kronecker;
    o.family = std::move(family);
    o.unitary = unitary;
    o.seed = seed;
    return compile_region_graph(binary_tree_region_graph(d), o);
}

// Left-to-right chain compiled like the other region graphs (Kronecker products, K×(K·K_in) sums).
inline TensorizedCircuit build_chain(int d, const CompileOptions& opt) {
    return compile_region_graph(chain_region_graph(d), opt);
}

// Literal MPS of rank R: factors[0] and factors[d-1] have width R, the middle ones width R²
// with component i*R + j holding ψ_k^{i,j}. Sum weights are fixed selections of value 1.
inline TensorizedCircuit build_mps_chain(const std::vector<InputFamily>& factors, int R) {
    const int d = static_cast<int>(factors.size());
    require(d >= 2 && R >= 1, ErrorKind::input, "MPS needs d >= 2 and R >= 1");
    std::vector<VarDomain> doms;
    for (const auto& f : factors) doms.push_back(f.domain);
    TensorizedCircuit c(doms);
    for (int k = 0; k < d; ++k) {
        const int want = (k == 0 || k == d - 1) ? R : R * R;
        require(factors[static_cast<std::size_t>(k)].width() == want, ErrorKind::input,
                "MPS factor " + std::to_string(k) + " must have width " + std::to_string(want));
    }
    int acc = c.add_input(0, factors[0]);
    for (int k = 1; k + 1 < d; ++k) {
        int in = c.add_input(k, factors[static_cast<std::size_t>(k)]);
        int kr = c.add_kronecker(acc, in);
        MatrixC W = MatrixC::Zero(R, R * R * R);
        for (int j = 0; j < R; ++j)
            for (int i = 0; i < R; ++i) W(j, i * R * R + i * R + j) = 1.0;
        acc = c.add_sum({kr}, W);
    }
    int last = c.add_input(d - 1, factors[static_cast<std::size_t>(d - 1)]);
    int had = c.add_hadamard(acc, last);
    int out = c.add_sum({had}, MatrixC::Ones(1, R));
    c.set_output(out);
    return c;
}

// Random categorical MPS factors over v-ary variables.
inline std::vector<InputFamily> random_mps_factors(int d, int R, int v, Rng& rng) {
    std::vector<InputFamily> out;
    for (int k = 0; k < d; ++k) out.push_back(random_categorical(v, (k == 0 || k == d - 1) ? R : R * R, rng));
    return out;
}

}  // namespace sqpc
