// Acceptance run: one PASS/FAIL line per criterion.
// Exit status is 0 once every criterion has been evaluated without an exception; --strict also fails on any FAIL line.

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "generators.hpp"
#include "sqpc/config.hpp"
#include "sqpc/data.hpp"
#include "sqpc/learning.hpp"

using namespace sqpc;
using namespace sqpc::testing;

namespace {

// Tolerances and budgets.
constexpr double kPartitionTol = 1e-9;
constexpr double kTriangleTol = 1e-9;
constexpr double kOrthoDecTol = 1e-9;
constexpr double kMultiplyTol = 1e-10;
constexpr double kPointwiseTol = 1e-10;
constexpr double kBetaTol = 1e-9;
constexpr double kGradientTol = 1e-5;
constexpr double kTangencyTol = 1e-10;
constexpr double kU3Tol = 1e-6;
constexpr double kBpdGap = 0.10;
constexpr double kUniformMargin = 0.15;
constexpr double kParamRatio = 1.5;
constexpr double kUnitaryGrowth = 2.6;
constexpr double kSquareGrowth = 3.2;
constexpr double kParamTarget = 6.557728e6;
constexpr double kBandMass = 0.60;
constexpr double kMassTol = 0.02;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... a) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, a...);
    return buf;
}

Assignment none(int d) { return Assignment(static_cast<std::size_t>(d), missing_value()); }

FamilySpec embedding_spec(int v) {
    FamilySpec f;
    f.kind = "embedding";
    f.cardinality = v;
    return f;
}

// ---------------------------------------------------------------------------

Outcome normalization() {
    const double t0 = cli::now_seconds();
    int count = 0, failed = 0, squared = 0, enumerated = 0;
    double worst = 0;
    std::uint64_t seed = 1;
    Rng rng(7);
    // multisplit shapes whose variables occur few enough times for card orthonormal functions
    const std::vector<std::pair<int, int>> split2{{2, 2}}, split4{{2, 2}, {2, 3}, {3, 2}, {2, 4}, {4, 2}};
    for (int K : {1, 2, 4, 8})
        for (int card : {2, 4})
            for (int rep = 0; rep < 7; ++rep) {
                std::vector<TensorizedCircuit> cs;
                const auto opt = [&] { return options(K, Layer::Kind::kronecker, categorical_spec(card), true, seed++); };
                cs.push_back(build_chain(std::uniform_int_distribution<int>(2, 16)(rng), opt()));
                cs.push_back(build_ttn_binary(1 << std::uniform_int_distribution<int>(1, 4)(rng), K, categorical_spec(card), true, seed++));
                const int h = std::uniform_int_distribution<int>(1, 4)(rng), w = std::uniform_int_distribution<int>(2, 4)(rng);
                cs.push_back(build_quadtree(h, w, opt()));
                const auto& shapes = card == 2 ? split2 : split4;
                const auto [mh, mw] = shapes[std::uniform_int_distribution<std::size_t>(0, shapes.size() - 1)(rng)];
                cs.push_back(build_multisplit(mh, mw, 1, opt()));
                for (std::size_t k = 0; k < cs.size(); ++k) {
                    const TensorizedCircuit& c = cs[k];
                    double e = std::abs(mar_squared_unitary(c, none(c.num_vars()), c.scope()) - 1.0);
                    // independent checks: the materialized square (structured shapes) and enumeration (small domains)
                    if (k < 3) {
                        e = std::max(e, std::abs(partition_via_square(c) - 1.0));
                        ++squared;
                    }
                    if (std::pow(card, c.num_vars()) <= 16384) {
                        e = std::max(e, std::abs(enum_partition(c).real() - 1.0));
                        ++enumerated;
                    }
                    worst = std::max(worst, e);
                    failed += e > kPartitionTol;
                    ++count;
                }
            }
    const double secs = cli::now_seconds() - t0;
    return {count >= 200 && failed == 0 && secs < 120,
            fmt("%d circuits (%d also via the square, %d by enumeration), max |Z-1| %.2e (tol %.0e), %.1f s (limit 120)", count, squared,
                enumerated, worst, kPartitionTol, secs)};
}

Outcome oracle_triangle() {
    const double t0 = cli::now_seconds();
    cli::VerifySpec s;
    s.queries = 50;
    s.tol = kTriangleTol;
    json r = cli::run_verify(s);
    double worst = 0;
    int structured = 0;
    for (const auto& c : r.at("cases")) {
        worst = std::max(worst, c.at("max_rel_err").get<double>());
        structured += c.at("structured").get<bool>();
    }
    const double secs = cli::now_seconds() - t0;
    return {r.at("pass").get<bool>() && secs < 300,
            fmt("%zu circuits (%d structured) x %d queries, max rel err %.2e (tol %.0e), %.1f s (limit 300)", r.at("cases").size(),
                structured, s.queries, worst, kTriangleTol, secs)};
}

struct SplitSum {
    VarSet scope;
    int head;
};

// Σ_i w_i φ_i(x_a) · f_L^(i) · f_R^(i) with φ an orthonormal basis of the binary variable a; every sum splits on its head a.
ScalarCircuit regular_orthogonal_binary(int d, Rng& rng, std::uint64_t seed, std::vector<SplitSum>& sums) {
    ScalarCircuit c(std::vector<VarDomain>(static_cast<std::size_t>(d), VarDomain::categorical(2)));
    std::vector<int> fam;
    for (int v = 0; v < d; ++v) fam.push_back(c.add_family(make_unitary_embedding(2, 2, seed + static_cast<std::uint64_t>(v))));
    std::function<int(std::vector<int>)> build = [&](std::vector<int> vars) -> int {
        std::shuffle(vars.begin(), vars.end(), rng);
        sums.push_back({VarSet::of(vars.begin(), vars.end()), vars.back()});
        const int a = vars.back();
        vars.pop_back();
        const std::size_t cut = vars.empty() ? 0 : std::uniform_int_distribution<std::size_t>(0, vars.size())(rng);
        const std::vector<int> left(vars.begin(), vars.begin() + static_cast<long>(cut)), right(vars.begin() + static_cast<long>(cut), vars.end());
        std::vector<int> terms;
        std::vector<cplx> ws;
        for (int i = 0; i < 2; ++i) {
            std::vector<int> factors{c.add_input(a, fam[static_cast<std::size_t>(a)], i)};
            if (!left.empty()) factors.push_back(build(left));
            if (!right.empty()) factors.push_back(build(right));
            terms.push_back(factors.size() == 1 ? factors[0] : c.add_product(factors));
            ws.push_back(complex_normal(rng));
        }
        return c.add_sum(terms, ws);
    };
    std::vector<int> all(static_cast<std::size_t>(d));
    std::iota(all.begin(), all.end(), 0);
    c.set_output(build(all));
    return c;
}

// Product of blocks w_0 Π φ_0(x_v) + w_1 Π φ_1(x_v): every sum splits on every variable of its scope.
ScalarCircuit split_on_all_binary(int d, Rng& rng, std::uint64_t seed) {
    ScalarCircuit c(std::vector<VarDomain>(static_cast<std::size_t>(d), VarDomain::categorical(2)));
    std::vector<int> fam;
    for (int v = 0; v < d; ++v) fam.push_back(c.add_family(make_unitary_embedding(2, 2, seed + static_cast<std::uint64_t>(v))));
    std::vector<int> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> blocks;
    for (std::size_t p = 0; p < order.size();) {
        const std::size_t n = std::min(order.size() - p, std::uniform_int_distribution<std::size_t>(1, 4)(rng));
        std::vector<int> terms;
        std::vector<cplx> ws;
        for (int i = 0; i < 2; ++i) {
            std::vector<int> f;
            for (std::size_t k = p; k < p + n; ++k) f.push_back(c.add_input(order[k], fam[static_cast<std::size_t>(order[k])], i));
            terms.push_back(f.size() == 1 ? f[0] : c.add_product(f));
            ws.push_back(complex_normal(rng));
        }
        blocks.push_back(c.add_sum(terms, ws));
        p += n;
    }
    c.set_output(blocks.size() == 1 ? blocks[0] : c.add_product(blocks));
    return c;
}

// Smallest superset of Z containing the head of every sum whose scope meets it.
VarSet close_over_heads(VarSet Z, const std::vector<SplitSum>& sums) {
    for (bool grew = true; grew;) {
        grew = false;
        for (const auto& s : sums)
            if (s.scope.intersects(Z) && !Z.contains(s.head)) {
                Z.insert(s.head);
                grew = true;
            }
    }
    return Z;
}

Outcome ortho_dec() {
    Rng rng(3);
    double worst = 0;
    int queries = 0, circuits = 0, partial = 0;
    bool regular = true;
    auto run = [&](const ScalarCircuit& c, const VarSet& Z) {
        regular = regular && check_regular_orthogonal(c, Z);
        Assignment y = random_assignment(c.domains(), rng);
        for (int v : Z.to_vector()) y[static_cast<std::size_t>(v)] = missing_value();
        worst = std::max(worst, rel_err(mar_ortho_dec(c, y, Z), enum_marginal(c, y, Z).real()));
        ++queries;
        partial += Z != c.scope();
    };
    for (int d : {2, 4, 6, 8, 10, 12})
        for (int rep = 0; rep < 3; ++rep) {
            const auto seed = static_cast<std::uint64_t>(100 * d + rep);
            ScalarCircuit all = split_on_all_binary(d, rng, seed);
            for (int v = 0; v < d; ++v) run(all, VarSet::single(v));
            for (int k = 0; k < 10; ++k) run(all, random_subset(d, rng));
            run(all, all.scope());
            std::vector<SplitSum> sums;
            ScalarCircuit one = regular_orthogonal_binary(d, rng, seed + 50, sums);
            run(one, one.scope());
            run(one, close_over_heads(VarSet::single(sums.front().head), sums));
            for (int k = 0; k < 10; ++k) run(one, close_over_heads(random_subset(d, rng), sums));
            circuits += 2;
        }
    return {regular && worst <= kOrthoDecTol,
            fmt("%d circuits (2-12 binary vars, Z-regular-orthogonal on every query: %s), %d queries (%d with Z a proper subset), max rel err %.2e (tol %.0e)",
                circuits, regular ? "yes" : "no", queries, partial, worst, kOrthoDecTol)};
}

Outcome multiply_square() {
    Rng rng(4);
    std::vector<TensorizedCircuit> cs{
        build_quadtree(3, 4, options(3, Layer::Kind::kronecker, categorical_spec(3), false, 1)),
        build_quadtree(4, 4, options(4, Layer::Kind::hadamard, categorical_spec(2), false, 2)),
        build_ttn_binary(8, 2, categorical_spec(2), true, 3),
        build_ttn_binary(2, 5, FamilySpec{"fourier", 2, 6.0}, false, 4),
        build_chain(6, options(3, Layer::Kind::kronecker, categorical_spec(4), false, 5)),
        build_mps_chain(random_mps_factors(5, 3, 2, rng), 3),
    };
    double worst = 0;
    bool props = true, widths = true;
    for (const auto& c : cs) {
        TensorizedCircuit sq = multiply(c, conjugate(c));
        props = props && check_smooth(sq) && check_decomposable(sq);
        int wmax = 0, sqmax = 0;
        for (const Layer& l : c.layers()) wmax = std::max(wmax, l.width);
        for (const Layer& l : sq.layers()) sqmax = std::max(sqmax, l.width);
        widths = widths && sqmax <= wmax * wmax && sq.num_layers() <= c.num_layers() * c.num_layers();
        MatrixR X = random_points(c.domains(), 100, rng);
        VectorC v = eval_batch(c, X), s = eval_batch(sq, X);
        for (Eigen::Index r = 0; r < X.rows(); ++r) worst = std::max(worst, rel_err(s(r), cplx(std::norm(v(r)), 0)));
    }
    return {props && widths && worst <= kMultiplyTol,
            fmt("%zu circuits x 100 points, max rel err %.2e (tol %.0e), smooth+decomposable %s, widths <= max^2 %s", cs.size(), worst,
                kMultiplyTol, props ? "yes" : "no", widths ? "yes" : "no")};
}

Outcome unitarize_check() {
    Rng rng(5);
    double point = 0, beta = 0, beta_unit = 0;
    int n = 0;
    std::vector<TensorizedCircuit> plain{
        build_quadtree(3, 3, options(2, Layer::Kind::kronecker, embedding_spec(4), false, 11)),
        build_quadtree(3, 3, options(2, Layer::Kind::hadamard, embedding_spec(4), false, 12)),
        build_ttn_binary(8, 3, embedding_spec(2), false, 13),
        build_chain(6, options(3, Layer::Kind::kronecker, embedding_spec(3), false, 14)),
        build_multisplit(2, 4, 1, options(2, Layer::Kind::kronecker, embedding_spec(4), false, 15)),
    };
    for (auto c : plain) {
        // perturb every sum weight away from any semi-unitary point
        for (int i = 0; i < c.num_layers(); ++i)
            if (c.layer(i).kind == Layer::Kind::sum) {
                MatrixC& W = c.mutable_layer(i).weight;
                W += random_complex(W.rows(), W.cols(), 0.5, rng);
            }
        UnitarizeResult u = unitarize(c);
        MatrixR X = random_points(c.domains(), 100, rng);
        point = std::max(point, max_rel(eval_batch(u.circuit, X), u.beta * eval_batch(c, X)));
        beta = std::max(beta, rel_err(u.beta, 1.0 / std::sqrt(enum_partition(c).real())));
        ++n;
    }
    std::vector<TensorizedCircuit> unit{
        build_quadtree(3, 3, options(2, Layer::Kind::kronecker, categorical_spec(4), true, 21)),
        build_ttn_binary(8, 2, categorical_spec(2), true, 22),
        build_chain(8, options(2, Layer::Kind::kronecker, categorical_spec(2), true, 23)),
    };
    for (const auto& c : unit) {
        UnitarizeResult u = unitarize(c);
        beta_unit = std::max(beta_unit, std::abs(u.beta - 1.0));
        MatrixR X = random_points(c.domains(), 100, rng);
        point = std::max(point, max_rel(eval_batch(u.circuit, X), u.beta * eval_batch(c, X)));
    }
    return {point <= kPointwiseTol && beta <= kBetaTol && beta_unit <= kBetaTol,
            fmt("%d perturbed + %zu unitary circuits: pointwise %.2e (tol %.0e), beta vs Z^-1/2 %.2e (tol %.0e), |beta-1| on unitary %.2e",
                n, unit.size(), point, kPointwiseTol, beta, kBetaTol, beta_unit)};
}

Outcome determinism() {
    Rng rng(6);
    int det_pass = 0, mix_fail = 0;
    for (int k = 0; k < 100; ++k) {
        const int d = 2 + k % 4, v = 2 + k % 3;
        ScalarCircuit c = deterministic_circuit(d, v, rng);
        det_pass += check_orthogonal(c, c.scope());
        ScalarCircuit m = positive_mixture(d, v, 2 + k % 3, rng);
        mix_fail += !check_orthogonal(m, m.scope());
    }
    return {det_pass == 100 && mix_fail == 100,
            fmt("deterministic orthogonal %d/100, overlapping mixtures rejected %d/100", det_pass, mix_fail)};
}

Outcome gradients() {
    Rng rng(7);
    struct Case {
        std::string name;
        TensorizedCircuit c;
        Normalization n;
    };
    std::vector<Case> cases;
    cases.push_back({"quadtree-kronecker", build_quadtree(2, 2, options(2, Layer::Kind::kronecker, categorical_spec(3), false, 1)),
                     Normalization::materialize});
    cases.push_back({"quadtree-hadamard", build_quadtree(2, 3, options(3, Layer::Kind::hadamard, categorical_spec(2), false, 2)),
                     Normalization::materialize});
    cases.push_back({"quadtree-unitary", build_quadtree(2, 3, options(2, Layer::Kind::kronecker, categorical_spec(4), true, 3)),
                     Normalization::unitary});
    cases.push_back({"multisplit-unitary", build_multisplit(2, 3, 1, options(2, Layer::Kind::kronecker, categorical_spec(4), true, 4)),
                     Normalization::unitary});
    cases.push_back({"chain", build_chain(4, options(2, Layer::Kind::kronecker, categorical_spec(3), false, 5)), Normalization::materialize});
    cases.push_back({"ttn-fourier", fourier_2d(3, false, 6), Normalization::materialize});
    cases.push_back({"ttn-fourier-unitary", fourier_2d(3, true, 8), Normalization::unitary});
    std::string parts;
    double worst = 0;
    for (auto& cs : cases) {
        MatrixR X = random_points(cs.c.domains(), 6, rng);
        int checked = 0;
        const double e = worst_gradient_error(cs.c, X, cs.n, &checked);
        worst = std::max(worst, e);
        parts += fmt(" %s %.1e/%d", cs.name.c_str(), e, checked);
    }
    return {worst < kGradientTol, fmt("max rel err %.2e (tol %.0e);", worst, kGradientTol) + parts};
}

Outcome landing() {
    Dataset d = synth_dataset("rings", 2000, 200, 200, 0.1, 8);
    TrainConfig cfg;
    cfg.optimizer = "landing";
    cfg.landing.lr = 0.2;
    cfg.landing.eps = 0.3;
    cfg.landing.period = 1 << 30;  // rely on safe stepping alone
    Trainer t(fourier_2d(7, true, 9), cfg);
    Rng rng(10);
    std::vector<double> dist;
    double worst_d = 0, worst_tan = 0;
    const Eigen::Index B = 64;
    for (int step = 0; step < 1000; ++step) {
        const Eigen::Index r0 = std::uniform_int_distribution<Eigen::Index>(0, d.train.rows() - B)(rng);
        const MatrixR batch = d.train.middleRows(r0, B);
        if (step % 50 == 0) {
            LossAndGrad lg = backward(t.circuit(), batch, Normalization::unitary);
            for (const ParamBlock& b : t.blocks()) {
                if (!b.manifold) continue;
                const MatrixC X = gather_block(t.circuit(), b).adjoint();
                const MatrixC g = gather_grad(t.circuit(), b, lg.layer_grads).adjoint() / static_cast<double>(B);
                const MatrixC rel = landing_relative(X, g), nor = landing_normal(X, cfg.landing.lambda);
                const double scale = rel.norm() * nor.norm();
                if (scale > 0) worst_tan = std::max(worst_tan, std::abs((rel.adjoint() * nor).trace().real()) / scale);
            }
        }
        dist.clear();
        t.step(batch, &dist);
        for (double x : dist) worst_d = std::max(worst_d, x);
    }
    TensorizedCircuit out = t.projected();
    const bool u3 = check_unitarity(out, tau_orth, kU3Tol).u3;
    const double z = mar_squared_unitary(out, none(out.num_vars()), out.scope(), false);
    return {worst_d <= 2 * cfg.landing.eps && worst_tan < kTangencyTol && u3,
            fmt("1000 steps: max d %.3f (limit 2eps = %.2f), normalized Re<grad, normal> %.1e (tol %.0e), U3 at %.0e after projection %s, Z %.12f",
                worst_d, 2 * cfg.landing.eps, worst_tan, kTangencyTol, kU3Tol, u3 ? "yes" : "no", z)};
}

Outcome digits(const std::string& data_dir) {
    const double t0 = cli::now_seconds();
    json dj = {{"kind", "idx"}, {"images", "digits8x8-images-idx3-ubyte"}, {"binarize", 128}, {"valid_frac", 0.1}, {"test_frac", 0.2},
               {"seed", 0}};
    Dataset data = dataset_from_json(dj, data_dir);

    CompileOptions uo;
    uo.K = 4;
    uo.product = Layer::Kind::kronecker;
    uo.family = categorical_spec(2);
    uo.unitary = true;
    uo.seed = 1;
    TensorizedCircuit uc = build_quadtree(8, 8, uo);
    TrainConfig ucfg;
    ucfg.optimizer = "landing_pc";
    ucfg.landing.lr = 0.05;
    ucfg.steps = 4000;
    ucfg.batch_size = 64;
    ucfg.eval_every = 250;
    ucfg.seed = 1;

    CompileOptions bo = uo;
    bo.K = 12;
    bo.product = Layer::Kind::hadamard;
    bo.unitary = false;
    TensorizedCircuit bc = build_quadtree(8, 8, bo);
    TrainConfig bcfg;
    bcfg.optimizer = "adam";
    bcfg.adam.lr = 0.02;
    bcfg.steps = 1500;
    bcfg.batch_size = 64;
    bcfg.eval_every = 100;
    bcfg.seed = 1;

    const double pu = static_cast<double>(param_count(uc).complex_as_two), pb = static_cast<double>(param_count(bc).complex_as_two);
    TrainResult ur = train(uc, data, ucfg);
    TrainResult br = train(bc, data, bcfg);
    const double a = eval_bpd(ur.best, data.test, Normalization::unitary);
    const double b = eval_bpd(br.best, data.test, Normalization::materialize);
    const double uniform = 1.0;  // log2 of the binary cardinality
    const double gap = std::abs(a - b) / std::min(a, b);
    const double ratio = std::max(pu, pb) / std::min(pu, pb);
    const double secs = cli::now_seconds() - t0;
    const bool ok = ratio <= kParamRatio && gap <= kBpdGap && a <= (1 - kUniformMargin) * uniform &&
                    b <= (1 - kUniformMargin) * uniform && secs < 1800;
    return {ok, fmt("test bpd unitary-kronecker K4 %.4f vs baseline-hadamard K12 %.4f (gap %.1f%%, limit %.0f%%), uniform %.1f, "
                    "params %.0f vs %.0f (ratio %.2f), %.0f s",
                    a, b, 100 * gap, 100 * kBpdGap, uniform, pu, pb, ratio, secs)};
}

Outcome throughput() {
    cli::BenchSpec s;
    s.modes = {"baseline-hadamard", "unitary-hadamard"};
    s.widths = {8, 16, 32};
    s.burn_in = 3;
    s.iters = 10;
    json rep = cli::run_benchmark(s, &std::cerr);
    const int K = cli::largest_common_width(rep, s.modes);
    bool step_ok = false;
    std::string step_detail = "no common width";
    if (K > 0) {
        const json& base = *cli::find_row(rep, "baseline-hadamard", K);
        const json& unit = *cli::find_row(rep, "unitary-hadamard", K);
        step_ok = unit.at("step_ms").get<double>() < base.at("step_ms").get<double>() &&
                  unit.at("peak_mb").get<double>() < base.at("peak_mb").get<double>();
        step_detail = fmt("K=%d step %.1f vs %.1f ms, peak %.1f vs %.1f MB", K, unit.at("step_ms").get<double>(),
                          base.at("step_ms").get<double>(), unit.at("peak_mb").get<double>(), base.at("peak_mb").get<double>());
    }
    auto growth = [](const cli::ScalingSpec& ss, double& gu, double& gs) {
        std::vector<double> su, tu, sq, tq;
        for (const auto& r : cli::run_marginal_scaling(ss, &std::cerr)) {
            su.push_back(static_cast<double>(r.s_max));
            tu.push_back(r.unitary_s);
            if (r.square_status == "ok") {
                sq.push_back(static_cast<double>(r.s_max));
                tq.push_back(r.square_s);
            }
        }
        gu = cli::growth_per_doubling(su, tu);
        gs = sq.size() >= 2 ? cli::growth_per_doubling(sq, tq) : 0.0;
    };
    cli::ScalingSpec ss;
    double gu = 0, gs = 0;
    growth(ss, gu, gs);
    // same sweep with 256 categories, reported only
    cli::ScalingSpec wide = ss;
    wide.cardinality = 256;
    wide.widths = {16, 23, 32, 45};
    double wu = 0, ws = 0;
    growth(wide, wu, ws);
    return {step_ok && gu <= kUnitaryGrowth && gs >= kSquareGrowth,
            fmt("unitary vs baseline Hadamard at largest common width: %s; per S_max doubling (%d categories, widths %d-%d): unitary x%.2f "
                "(limit %.1f), square x%.2f (needs %.1f); with 256 categories, widths 16-45: unitary x%.2f, square x%.2f",
                step_detail.c_str(), ss.cardinality, ss.widths.front(), ss.widths.back(), gu, kUnitaryGrowth, gs, kSquareGrowth, wu, ws)};
}

Outcome param_band() {
    CompileOptions o;
    o.K = 16;
    o.product = Layer::Kind::hadamard;
    o.family = categorical_spec(256);
    o.seed = 0;
    ParamCount p = param_count(build_quadtree(28, 28, o));
    const double one = static_cast<double>(p.complex_as_one), two = static_cast<double>(p.complex_as_two);
    auto within = [](double x) { return x <= 2 * kParamTarget && x >= kParamTarget / 2; };
    return {within(one) || within(two),
            fmt("28x28 quad-tree, 256 categories, 16 units, Hadamard: %.0f complex (x%.2f), %.0f real (x%.2f) against %.0f; matching: %s", one,
                one / kParamTarget, two, two / kParamTarget, kParamTarget,
                within(two) ? "real and imaginary parts counted separately" : within(one) ? "complex entries counted once" : "none")};
}

Outcome rings_density() {
    Dataset d = synth_dataset("rings", 4000, 500, 500, 0.1, 12);
    TrainConfig cfg;
    cfg.optimizer = "landing_pc";
    cfg.landing.lr = 0.05;
    cfg.steps = 1000;
    cfg.batch_size = 128;
    cfg.eval_every = 100;
    cfg.seed = 12;
    TrainResult r = train(build_ttn_binary(2, 15, FamilySpec{"fourier", 2, rings_period}, true, 12), d, cfg);
    cli::DensityGrid g = cli::density_grid(r.best, 256, Normalization::unitary);
    const double band = cli::band_mass_fraction(g, rings_period / 2, rings_period / 2, ring_radii(), 0.3);
    const double mass = g.total_mass();
    return {band >= kBandMass && std::abs(mass - 1) <= kMassTol,
            fmt("Fourier K=15 unitary-Kronecker, 256^2 grid: mass within ring bands (+-0.3) %.3f (needs %.2f), total %.4f (tol %.2f)", band,
                kBandMass, mass, kMassTol)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app("acceptance criteria");
    bool strict = false;
    std::string only;
    std::string data_dir = SQPC_TEST_DATA;
    app.add_flag("--strict", strict, "nonzero exit when any criterion fails");
    app.add_option("--only", only, "comma-separated criterion numbers");
    app.add_option("--data", data_dir, "directory with the digits IDX files");
    std::string report;
    app.add_option("--report", report, "also write the PASS/FAIL lines to this file");
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"normalization", normalization},
        {"oracle-triangle", oracle_triangle},
        {"mar-ortho-dec", ortho_dec},
        {"multiply", multiply_square},
        {"unitarize", unitarize_check},
        {"determinism-orthogonality", determinism},
        {"gradient-fidelity", gradients},
        {"landing", landing},
        {"digits-analog", [&] { return digits(data_dir); }},
        {"throughput", throughput},
        {"parameter-count", param_band},
        {"fourier-density", rings_density},
    };
    std::set<int> pick;
    for (std::size_t p = 0; p < only.size();) {
        std::size_t q = only.find(',', p);
        if (q == std::string::npos) q = only.size();
        pick.insert(std::stoi(only.substr(p, q - p)));
        p = q + 1;
    }
    std::ofstream rep;
    if (!report.empty()) rep.open(report);
    int failed = 0, errors = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!pick.empty() && !pick.count(id)) continue;
        const double t0 = cli::now_seconds();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
            ++errors;
        }
        failed += !o.pass;
        const std::string line = std::string(o.pass ? "PASS" : "FAIL") + " " + std::to_string(id) + " " + criteria[i].first + ": " +
                                 o.detail + fmt(" [%.1f s]", cli::now_seconds() - t0);
        std::cout << line << std::endl;
        if (rep) rep << line << std::endl;
    }
    std::cout << failed << " criteria failed" << std::endl;
    if (rep) rep << failed << " criteria failed" << std::endl;
    if (errors) return 2;
    return strict && failed ? 1 : 0;
}
