#pragma once

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <new>
#include <sstream>

#include "alloc_tracker.hpp"
#include "sqpc/config.hpp"
#include "sqpc/oracle.hpp"
#include "sqpc/squaring.hpp"
#include "sqpc/unitary.hpp"

namespace sqpc::cli {

// FNV-1a over the canonical (key-sorted) dump.
inline std::string config_hash(const json& j) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : j.dump()) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

inline Normalization pick_normalization(const TensorizedCircuit& c) {
    return check_unitarity(c).unitary() ? Normalization::unitary : Normalization::materialize;
}

// ---------------------------------------------------------------------------
// Density grids

struct DensityGrid {
    int n = 0;
    double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
    MatrixR p;  // p(i, j) at x = x0 + (i + ½)·dx, y = y0 + (j + ½)·dy

    double dx() const { return (x1 - x0) / n; }
    double dy() const { return (y1 - y0) / n; }
    double x(int i) const { return x0 + (i + 0.5) * dx(); }
    double y(int j) const { return y0 + (j + 0.5) * dy(); }
    double total_mass() const { return p.sum() * dx() * dy(); }
};

// p(x) = |c(x)|² / Z at cell centres of an n × n grid over the circuit's box domain.
inline DensityGrid density_grid(const TensorizedCircuit& c, int n, Normalization norm) {
    require(c.num_vars() == 2, ErrorKind::input, "density export needs a circuit over exactly two variables");
    for (const VarDomain& d : c.domains())
        require(d.kind == VarDomain::Kind::interval, ErrorKind::input, "density export needs bounded continuous variables");
    require(n >= 1, ErrorKind::input, "grid size must be >= 1");
    DensityGrid g;
    g.n = n;
    g.x0 = c.domains()[0].lo;
    g.x1 = c.domains()[0].hi;
    g.y0 = c.domains()[1].lo;
    g.y1 = c.domains()[1].hi;
    const bool unitary = norm == Normalization::unitary ||
                         (norm == Normalization::detect && check_unitarity(c).unitary());
    const double Z = unitary ? 1.0 : std::exp(log_partition_materialized(c));
    g.p.resize(n, n);
    MatrixR X(n, 2);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            X(j, 0) = g.x(i);
            X(j, 1) = g.y(j);
        }
        VectorC v = eval_batch(c, X);
        for (int j = 0; j < n; ++j) g.p(i, j) = std::norm(v(j)) / Z;
    }
    return g;
}

inline void write_density_csv(const std::string& path, const DensityGrid& g) {
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorKind::input, "cannot write " + path);
    out << "x,y,density\n" << std::setprecision(10);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) out << g.x(i) << "," << g.y(j) << "," << g.p(i, j) << "\n";
}

// Fraction of grid mass whose cell centre lies within half_width of a circle of the given radii.
inline double band_mass_fraction(const DensityGrid& g, double cx, double cy, const std::vector<double>& radii, double half_width) {
    double in = 0, all = 0;
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            const double r = std::hypot(g.x(i) - cx, g.y(j) - cy);
            bool hit = false;
            for (double R : radii) hit = hit || std::abs(r - R) <= half_width;
            all += g.p(i, j);
            if (hit) in += g.p(i, j);
        }
    return all > 0 ? in / all : 0.0;
}

// ---------------------------------------------------------------------------
// Training-step benchmark

struct BenchMode {
    std::string name;
    Layer::Kind product = Layer::Kind::hadamard;
    bool unitary = false;
    std::string optimizer = "sgd";
};

inline BenchMode bench_mode(const std::string& name) {
    if (name == "baseline-hadamard") return {name, Layer::Kind::hadamard, false, "sgd"};
    if (name == "baseline-hadamard-adam") return {name, Layer::Kind::hadamard, false, "adam"};
    if (name == "unitary-hadamard") return {name, Layer::Kind::hadamard, true, "landing_pc"};
    if (name == "unitary-kronecker") return {name, Layer::Kind::kronecker, true, "landing_pc"};
    throw Error(ErrorKind::input, "unknown benchmark mode '" + name + "'");
}

struct BenchSpec {
    int height = 8;
    int width = 8;
    int cardinality = 256;
    int batch = 32;
    std::vector<int> widths{8, 16, 32};
    std::vector<std::string> modes{"baseline-hadamard", "unitary-hadamard", "unitary-kronecker"};
    int burn_in = 10;
    int iters = 50;
    std::size_t mem_cap = std::size_t{2} << 30;  // per run; 0 disables the guard
    double max_step_seconds = 20;                // a slower first step skips the remaining widths of that mode
    std::uint64_t seed = 0;
};

inline BenchSpec bench_spec_from_json(const json& j) {
    BenchSpec s;
    s.height = j.value("height", s.height);
    s.width = j.value("width", s.width);
    s.cardinality = j.value("cardinality", s.cardinality);
    s.batch = j.value("batch", s.batch);
    s.widths = j.value("widths", s.widths);
    s.modes = j.value("modes", s.modes);
    s.burn_in = j.value("burn_in", s.burn_in);
    s.iters = j.value("iters", s.iters);
    s.mem_cap = static_cast<std::size_t>(j.value("mem_cap_mb", static_cast<double>(s.mem_cap >> 20))) << 20;
    s.max_step_seconds = j.value("max_step_seconds", s.max_step_seconds);
    s.seed = j.value("seed", s.seed);
    require(s.height >= 1 && s.width >= 1 && s.batch >= 1 && s.iters >= 1 && s.burn_in >= 0 && !s.widths.empty(),
            ErrorKind::input, "invalid benchmark settings");
    for (const auto& m : s.modes) bench_mode(m);
    return s;
}

struct BenchRow {
    std::string mode;
    int K = 0;
    std::size_t params = 0;
    double step_ms = 0;
    std::size_t peak_bytes = 0;
    std::string status = "ok";  // ok | oom | timeout
};

inline json to_json(const BenchRow& r) {
    return {{"mode", r.mode}, {"units", r.K}, {"params", r.params}, {"step_ms", r.step_ms},
            {"peak_mb", static_cast<double>(r.peak_bytes) / (1 << 20)}, {"status", r.status}};
}

// One configuration: build, burn in, then average the measured optimizer steps.
inline BenchRow bench_one(const BenchSpec& s, const BenchMode& m, int K) {
    BenchRow r;
    r.mode = m.name;
    r.K = K;
    Rng rng(s.seed + static_cast<std::uint64_t>(K));
    MatrixR X(s.batch, s.height * s.width);
    std::uniform_int_distribution<int> pix(0, s.cardinality - 1);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = pix(rng);

    const std::size_t base = alloc::current();
    alloc::set_cap(s.mem_cap ? base + s.mem_cap : 0);
    alloc::reset_peak();
    try {
        CompileOptions o;
        o.K = K;
        o.product = m.product;
        o.family.kind = "categorical";
        o.family.cardinality = s.cardinality;
        o.unitary = m.unitary;
        o.seed = s.seed;
        TensorizedCircuit c = build_quadtree(s.height, s.width, o);
        r.params = param_count(c).complex_as_two;
        TrainConfig cfg;
        cfg.optimizer = m.optimizer;
        cfg.norm = m.unitary ? Normalization::unitary : Normalization::materialize;
        cfg.landing.lr = cfg.adam.lr = 1e-3;
        Trainer t(std::move(c), cfg);
        double first = now_seconds();
        t.step(X);
        first = now_seconds() - first;
        if (first > s.max_step_seconds) {
            r.status = "timeout";
            r.step_ms = first * 1e3;
        } else {
            for (int k = 1; k < s.burn_in; ++k) t.step(X);
            const double t0 = now_seconds();
            for (int k = 0; k < s.iters; ++k) t.step(X);
            r.step_ms = (now_seconds() - t0) / s.iters * 1e3;
        }
        r.peak_bytes = alloc::peak() - base;
    } catch (const std::bad_alloc&) {
        r.status = "oom";
        r.peak_bytes = alloc::peak() - base;
    } catch (const Error& e) {
        alloc::set_cap(0);
        if (e.kind() != ErrorKind::resource) throw;
        r.status = "oom";
    }
    alloc::set_cap(0);
    return r;
}

inline json run_benchmark(const BenchSpec& s, std::ostream* log = nullptr) {
    json rows = json::array();
    for (const auto& name : s.modes) {
        const BenchMode m = bench_mode(name);
        for (int K : s.widths) {
            BenchRow r = bench_one(s, m, K);
            if (log) *log << to_json(r).dump() << std::endl;
            rows.push_back(to_json(r));
            if (r.status != "ok") break;  // larger widths only cost more
        }
    }
    return {{"rows", rows},
            {"memory", "peak heap bytes from malloc interposition on the CPU process, relative to the start of each run"},
            {"iterations", {{"burn_in", s.burn_in}, {"measured", s.iters}}},
            {"batch", s.batch},
            {"image", {s.height, s.width}},
            {"cardinality", s.cardinality}};
}

// Largest width at which every listed mode finished, or 0.
inline int largest_common_width(const json& report, const std::vector<std::string>& modes) {
    int best = 0;
    std::map<int, int> ok;
    for (const auto& r : report.at("rows"))
        if (r.at("status") == "ok" && std::find(modes.begin(), modes.end(), r.at("mode").get<std::string>()) != modes.end())
            ++ok[r.at("units").get<int>()];
    for (const auto& [K, n] : ok)
        if (n == static_cast<int>(modes.size())) best = std::max(best, K);
    return best;
}

inline const json* find_row(const json& report, const std::string& mode, int K) {
    for (const auto& r : report.at("rows"))
        if (r.at("mode") == mode && r.at("units") == K) return &r;
    return nullptr;
}

// ---------------------------------------------------------------------------
// Marginal scaling: unitary moments against the materialized square

inline std::size_t max_layer_size(const TensorizedCircuit& c) {
    std::size_t m = 0;
    for (const Layer& l : c.layers())
        m = std::max(m, l.kind == Layer::Kind::sum ? static_cast<std::size_t>(l.weight.size()) : static_cast<std::size_t>(l.width));
    return m;
}

struct ScalingSpec {
    int height = 4;
    int width = 4;
    int cardinality = 64;  // the unitary width cap is the cardinality, so 64 admits every width below
    Layer::Kind product = Layer::Kind::hadamard;
    std::vector<int> widths{16, 23, 32, 45, 64};  // S_max roughly doubles per step
    int repeats = 5;
    std::size_t mem_cap = std::size_t{3} << 30;
    std::uint64_t seed = 0;
};

inline ScalingSpec scaling_spec_from_json(const json& j) {
    ScalingSpec s;
    s.height = j.value("height", s.height);
    s.width = j.value("width", s.width);
    s.cardinality = j.value("cardinality", s.cardinality);
    s.product = product_kind_from_string(j.value("product", std::string("hadamard")));
    s.widths = j.value("widths", s.widths);
    s.repeats = j.value("repeats", s.repeats);
    s.mem_cap = static_cast<std::size_t>(j.value("mem_cap_mb", static_cast<double>(s.mem_cap >> 20))) << 20;
    s.seed = j.value("seed", s.seed);
    require(s.widths.size() >= 2 && s.repeats >= 1, ErrorKind::input, "scaling needs two widths and one repeat");
    return s;
}

struct ScalingRow {
    int K = 0;
    std::size_t s_max = 0;
    double unitary_s = 0;  // median seconds
    double square_s = 0;
    std::string square_status = "ok";
};

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Left-half marginal: the left columns are integrated out, the right ones observed.
inline std::vector<ScalingRow> run_marginal_scaling(const ScalingSpec& s, std::ostream* log = nullptr) {
    std::vector<ScalingRow> rows;
    for (int K : s.widths) {
        CompileOptions o;
        o.K = K;
        o.product = s.product;
        o.family.kind = "categorical";
        o.family.cardinality = s.cardinality;
        o.unitary = true;
        o.seed = s.seed;
        TensorizedCircuit c = build_quadtree(s.height, s.width, o);
        Rng rng(s.seed + 17);
        Assignment y(static_cast<std::size_t>(c.num_vars()));
        VarSet Z;
        for (int r = 0; r < s.height; ++r)
            for (int q = 0; q < s.width; ++q) {
                const int v = r * s.width + q;
                if (q < s.width / 2) {
                    Z.insert(v);
                    y[static_cast<std::size_t>(v)] = missing_value();
                } else {
                    y[static_cast<std::size_t>(v)] = std::uniform_int_distribution<int>(0, s.cardinality - 1)(rng);
                }
            }
        ScalingRow row;
        row.K = K;
        row.s_max = max_layer_size(c);
        std::vector<double> tu, ts;
        for (int k = 0; k < s.repeats; ++k) {
            // repeat short calls so each sample spans a measurable interval
            int reps = 0;
            const double t0 = now_seconds();
            do {
                mar_squared_unitary(c, y, Z, false);
                ++reps;
            } while (now_seconds() - t0 < 0.05);
            tu.push_back((now_seconds() - t0) / reps);
        }
        const std::size_t base = alloc::current();
        alloc::set_cap(s.mem_cap ? base + s.mem_cap : 0);
        try {
            for (int k = 0; k < s.repeats; ++k) {
                const double t0 = now_seconds();
                marginal_via_square(c, y, Z);
                ts.push_back(now_seconds() - t0);
            }
        } catch (const std::bad_alloc&) {
            row.square_status = "oom";
        }
        alloc::set_cap(0);
        row.unitary_s = median(tu);
        row.square_s = ts.empty() ? 0.0 : median(ts);
        if (log)
            *log << json{{"units", K}, {"s_max", row.s_max}, {"unitary_s", row.unitary_s}, {"square_s", row.square_s},
                         {"square_status", row.square_status}}
                        .dump()
                 << std::endl;
        rows.push_back(row);
    }
    return rows;
}

// Growth factor of t per doubling of s: 2^slope of the least-squares fit of log t on log s.
inline double growth_per_doubling(const std::vector<double>& s, const std::vector<double>& t) {
    const std::size_t n = s.size();
    require(n >= 2 && t.size() == n, ErrorKind::input, "growth fit needs two matching samples");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += std::log2(s[i]);
        my += std::log2(t[i]);
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (std::log2(s[i]) - mx) * (std::log2(t[i]) - my);
        sxx += (std::log2(s[i]) - mx) * (std::log2(s[i]) - mx);
    }
    return std::exp2(sxy / sxx);
}

// ---------------------------------------------------------------------------
// Oracle triangle

struct VerifySpec {
    int queries = 50;
    std::uint64_t seed = 0;
    double tol = 1e-9;
};

inline VerifySpec verify_spec_from_json(const json& j) {
    VerifySpec s;
    s.queries = j.value("queries", s.queries);
    s.seed = j.value("seed", s.seed);
    s.tol = j.value("tolerance", s.tol);
    require(s.queries >= 1 && s.tol > 0, ErrorKind::input, "invalid verify settings");
    return s;
}

struct TriangleCase {
    std::string name;
    TensorizedCircuit circuit;
    bool structured;
};

inline std::vector<TriangleCase> triangle_cases(std::uint64_t seed) {
    auto opt = [&](int K, Layer::Kind p, int card, std::uint64_t s) {
        CompileOptions o;
        o.K = K;
        o.product = p;
        o.family.kind = "categorical";
        o.family.cardinality = card;
        o.unitary = true;
        o.seed = seed + s;
        return o;
    };
    FamilySpec bin;
    bin.cardinality = 2;
    std::vector<TriangleCase> out;
    out.push_back({"quadtree-3x4-kronecker", build_quadtree(3, 4, opt(2, Layer::Kind::kronecker, 2, 1)), true});
    out.push_back({"quadtree-3x4-hadamard", build_quadtree(3, 4, opt(4, Layer::Kind::hadamard, 2, 2)), true});
    out.push_back({"ttn-8", build_ttn_binary(8, 2, bin, true, seed + 3), true});
    out.push_back({"chain-14", build_chain(14, opt(2, Layer::Kind::kronecker, 2, 4)), true});
    out.push_back({"multisplit-2x3", build_multisplit(2, 3, 1, opt(2, Layer::Kind::kronecker, 4, 5)), false});
    out.push_back({"multisplit-2x4", build_multisplit(2, 4, 1, opt(2, Layer::Kind::kronecker, 4, 6)), false});
    out.push_back({"multisplit-2x2", build_multisplit(2, 2, 1, opt(2, Layer::Kind::kronecker, 2, 7)), false});
    return out;
}

// mar_squared_unitary against enumeration (and the materialized square when structured).
inline json run_verify(const VerifySpec& s, std::ostream* log = nullptr) {
    json cases = json::array();
    bool pass = true;
    for (auto& tc : triangle_cases(s.seed)) {
        const TensorizedCircuit& c = tc.circuit;
        Rng rng(s.seed + 99);
        double worst = 0;
        for (int q = 0; q < s.queries; ++q) {
            VarSet Z;
            Assignment y(static_cast<std::size_t>(c.num_vars()));
            for (int v = 0; v < c.num_vars(); ++v) {
                if (rng() & 1) {
                    Z.insert(v);
                    y[static_cast<std::size_t>(v)] = missing_value();
                } else {
                    y[static_cast<std::size_t>(v)] =
                        std::uniform_int_distribution<int>(0, c.domains()[static_cast<std::size_t>(v)].cardinality - 1)(rng);
                }
            }
            const double u = mar_squared_unitary(c, y, Z);
            const double e = enum_marginal(c, y, Z).real();
            worst = std::max(worst, rel_err(u, e));
            if (tc.structured) {
                const double sq = marginal_via_square(c, y, Z);
                worst = std::max({worst, rel_err(u, sq), rel_err(sq, e)});
            }
        }
        const double z = mar_squared_unitary(c, Assignment(static_cast<std::size_t>(c.num_vars()), missing_value()), c.scope());
        const bool ok = worst <= s.tol && std::abs(z - 1) <= s.tol;
        pass = pass && ok;
        json row{{"circuit", tc.name}, {"structured", tc.structured}, {"vars", c.num_vars()}, {"queries", s.queries},
                 {"max_rel_err", worst}, {"partition", z}, {"pass", ok}};
        if (log) *log << row.dump() << std::endl;
        cases.push_back(row);
    }
    return {{"cases", cases}, {"tolerance", s.tol}, {"pass", pass}};
}

}  // namespace sqpc::cli
