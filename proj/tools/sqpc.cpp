#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "commands.hpp"

using namespace sqpc;
namespace fs = std::filesystem;

namespace {

struct Globals {
    std::string config;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 1;
    std::string out;
    std::string verify = "on";
    std::string circuit;
    std::string queries;
    std::string method = "auto";
    int grid = 256;
};

int exit_code(ErrorKind k) {
    switch (k) {
    case ErrorKind::input:
    case ErrorKind::domain: return 2;
    case ErrorKind::precondition:
    case ErrorKind::property: return 3;
    case ErrorKind::resource: return 4;
    case ErrorKind::capability:
    case ErrorKind::unsupported:
    case ErrorKind::infeasible: return 5;
    case ErrorKind::numerical: return 6;
    }
    return 1;
}

json load_config(const Globals& g, bool required) {
    if (g.config.empty()) {
        require(!required, ErrorKind::input, "--config is required for this command");
        return json::object();
    }
    json j = read_json_file(g.config);
    require(j.is_object(), ErrorKind::input, g.config + ": config must be a JSON object");
    return j;
}

std::string config_dir(const Globals& g) { return g.config.empty() ? "" : fs::path(g.config).parent_path().string(); }

// Report sink: --out file, else stdout.
void emit(const Globals& g, const json& j) {
    if (g.out.empty()) {
        std::cout << j.dump(2) << "\n";
    } else {
        write_json_file(g.out, j);
        std::cout << g.out << "\n";
    }
}

json property_report(const TensorizedCircuit& c) {
    UnitarityReport u = check_unitarity(c);
    ParamCount p = param_count(c);
    return {{"vars", c.num_vars()},
            {"layers", c.num_layers()},
            {"size", c.total_size()},
            {"params", {{"complex", p.complex_as_one}, {"real", p.complex_as_two}}},
            {"smooth", check_smooth(c)},
            {"decomposable", check_decomposable(c)},
            {"structured_decomposable", check_structured_decomposable(c)},
            {"unitarity", {{"u1", u.u1}, {"u2", u.u2}, {"u3", u.u3}, {"u4", u.u4}, {"witnesses", u.witnesses}}},
            {"unitary", u.unitary()}};
}

TensorizedCircuit architecture_circuit(const json& cfg, const Globals& g) {
    require(cfg.contains("architecture"), ErrorKind::input, "config needs an 'architecture' object");
    ArchitectureConfig a = architecture_from_json(cfg.at("architecture"));
    if (g.seed_set) a.compile.seed = g.seed;
    TensorizedCircuit c = build_architecture(a);
    if (g.verify == "on") {
        require(check_smooth(c) && check_decomposable(c), ErrorKind::property, "built circuit is not smooth and decomposable");
        if (a.compile.unitary) {
            UnitarityReport u = check_unitarity(c);
            require(u.unitary(), ErrorKind::property,
                    "requested unitary circuit fails U1-U3" + (u.witnesses.empty() ? std::string() : ": " + u.witnesses.front()));
        }
    }
    return c;
}

int cmd_build(const Globals& g) {
    json cfg = load_config(g, true);
    TensorizedCircuit c = architecture_circuit(cfg, g);
    json rep = property_report(c);
    rep["config_hash"] = cli::config_hash(cfg);
    if (!g.out.empty()) save_circuit(g.out, c);
    std::cout << rep.dump(2) << "\n";
    return 0;
}

int cmd_check(const Globals& g) {
    require(!g.circuit.empty(), ErrorKind::input, "--circuit is required");
    TensorizedCircuit c = load_circuit(g.circuit);
    emit(g, property_report(c));
    return 0;
}

int cmd_train(const Globals& g) {
    json cfg = load_config(g, true);
    require(cfg.contains("data"), ErrorKind::input, "config needs a 'data' object");
    TrainConfig tc = train_config_from_json(cfg.value("training", json::object()));
    if (g.seed_set) tc.seed = g.seed;
    const std::string norm = cfg.value("normalization", std::string("detect"));
    require(norm == "detect" || norm == "unitary" || norm == "materialize", ErrorKind::input, "unknown normalization '" + norm + "'");
    tc.norm = norm == "unitary" ? Normalization::unitary : norm == "materialize" ? Normalization::materialize : Normalization::detect;
    TensorizedCircuit c = architecture_circuit(cfg, g);
    Dataset data = dataset_from_json(cfg.at("data"), config_dir(g));
    require(data.num_vars() == c.num_vars(), ErrorKind::input, "data and architecture disagree on the number of variables");
    for (int v = 0; v < c.num_vars(); ++v)
        require(data.domains[static_cast<std::size_t>(v)] == c.domains()[static_cast<std::size_t>(v)], ErrorKind::input,
                "data domain of variable " + std::to_string(v) + " differs from the circuit's");

    const fs::path dir = g.out.empty() ? fs::path("run") : fs::path(g.out);
    fs::create_directories(dir);
    std::ofstream metrics(dir / "metrics.jsonl");
    TrainResult r = train(std::move(c), data, tc, &metrics);
    const Normalization n = tc.norm == Normalization::detect ? cli::pick_normalization(r.best) : tc.norm;
    json rep{{"config_hash", cli::config_hash(cfg)},
             {"steps", r.steps},
             {"best_step", r.best_step},
             {"best_valid_bpd", r.best_valid_bpd},
             {"first_train_nll", r.first_train_nll},
             {"last_train_nll", r.last_train_nll},
             {"diverged", r.diverged},
             {"message", r.message},
             {"params", param_count(r.best).complex_as_two}};
    if (data.test.rows()) rep["test_bpd"] = eval_bpd(r.best, data.test, n);
    save_circuit((dir / "best.json").string(), r.best);
    save_circuit((dir / "last.json").string(), r.last);
    write_json_file((dir / "report.json").string(), rep);
    std::cout << rep.dump(2) << "\n";
    return r.diverged ? 6 : 0;
}

Assignment parse_evidence(const json& ev, int d) {
    Assignment y(static_cast<std::size_t>(d), missing_value());
    if (ev.is_array()) {
        require(static_cast<int>(ev.size()) == d, ErrorKind::input, "evidence array must list every variable (null for unobserved)");
        for (int v = 0; v < d; ++v)
            if (!ev[static_cast<std::size_t>(v)].is_null()) y[static_cast<std::size_t>(v)] = ev[static_cast<std::size_t>(v)].get<double>();
    } else if (ev.is_object()) {
        for (const auto& [k, val] : ev.items()) {
            int v = -1;
            try {
                v = std::stoi(k);
            } catch (const std::exception&) {
            }
            require(v >= 0 && v < d, ErrorKind::input, "evidence key '" + k + "' is not a variable index");
            y[static_cast<std::size_t>(v)] = val.get<double>();
        }
    } else {
        require(ev.is_null(), ErrorKind::input, "evidence must be an object, an array or null");
    }
    return y;
}

int cmd_marginalize(const Globals& g) {
    require(!g.circuit.empty() && !g.queries.empty(), ErrorKind::input, "--circuit and --queries are required");
    TensorizedCircuit c = load_circuit(g.circuit);
    json qs = read_json_file(g.queries);
    if (qs.is_object()) qs = json::array({qs});
    require(qs.is_array(), ErrorKind::input, "queries must be a JSON object or array");
    require(g.method == "auto" || g.method == "unitary" || g.method == "square" || g.method == "enumerate", ErrorKind::input,
            "method must be auto, unitary, square or enumerate");
    const bool unitary = check_unitarity(c).unitary();
    std::string method = g.method;
    if (method == "auto") method = unitary ? "unitary" : "square";
    double Z = 1.0;
    if (!unitary) Z = method == "enumerate" ? enum_partition(c).real() : partition_via_square(c);
    json out = json::array();
    for (const json& q : qs) {
        Assignment y = parse_evidence(q.value("evidence", json()), c.num_vars());
        VarSet Z_set;
        for (int v : q.value("marginalized", std::vector<int>{})) {
            require(v >= 0 && v < c.num_vars(), ErrorKind::input, "marginalized variable " + std::to_string(v) + " out of range");
            Z_set.insert(v);
        }
        for (int v = 0; v < c.num_vars(); ++v)
            require(Z_set.contains(v) || !is_missing(y[static_cast<std::size_t>(v)]), ErrorKind::input,
                    "variable " + std::to_string(v) + " is neither observed nor marginalized");
        double m = 0;
        if (method == "unitary") m = mar_squared_unitary(c, y, Z_set, g.verify == "on");
        else if (method == "square") m = marginal_via_square(c, y, Z_set);
        else m = enum_marginal(c, y, Z_set).real();
        out.push_back({{"marginalized", Z_set.to_vector()}, {"value", m}, {"probability", m / Z}, {"method", method}});
    }
    emit(g, out);
    return 0;
}

int cmd_unitarize(const Globals& g) {
    require(!g.circuit.empty(), ErrorKind::input, "--circuit is required");
    TensorizedCircuit c = load_circuit(g.circuit);
    UnitarizeResult r = unitarize(c);
    json rep{{"beta", r.beta}, {"layers", r.circuit.num_layers()}, {"params", param_count(r.circuit).complex_as_two}};
    if (g.verify == "on") {
        UnitarityReport u = check_unitarity(r.circuit);
        rep["unitary"] = u.unitary();
        require(u.u3, ErrorKind::numerical, "unitarized sum weights are not semi-unitary");
    }
    if (!g.out.empty()) save_circuit(g.out, r.circuit);
    std::cout << rep.dump(2) << "\n";
    return 0;
}

int cmd_benchmark(const Globals& g) {
    json cfg = load_config(g, false);
    json bench = cfg.value("benchmark", cfg);
    cli::BenchSpec s = cli::bench_spec_from_json(bench.value("step", json::object()));
    if (g.seed_set) s.seed = g.seed;
    json rep = cli::run_benchmark(s, &std::cerr);
    if (bench.contains("marginal")) {
        cli::ScalingSpec m = cli::scaling_spec_from_json(bench.at("marginal"));
        auto rows = cli::run_marginal_scaling(m, &std::cerr);
        json mr = json::array();
        for (const auto& r : rows)
            mr.push_back({{"units", r.K}, {"s_max", r.s_max}, {"unitary_s", r.unitary_s}, {"square_s", r.square_s}, {"square_status", r.square_status}});
        rep["marginal"] = mr;
    }
    rep["config_hash"] = cli::config_hash(cfg);
    rep["threads"] = num_threads();
    emit(g, rep);
    return 0;
}

int cmd_verify(const Globals& g) {
    json cfg = load_config(g, false);
    cli::VerifySpec s = cli::verify_spec_from_json(cfg.value("verify", cfg));
    if (g.seed_set) s.seed = g.seed;
    json rep = cli::run_verify(s, &std::cerr);
    rep["config_hash"] = cli::config_hash(cfg);
    emit(g, rep);
    return rep.at("pass").get<bool>() ? 0 : 1;
}

int cmd_export_density(const Globals& g) {
    require(!g.circuit.empty(), ErrorKind::input, "--circuit is required");
    require(!g.out.empty(), ErrorKind::input, "--out is required");
    TensorizedCircuit c = load_circuit(g.circuit);
    cli::DensityGrid grid = cli::density_grid(c, g.grid, Normalization::detect);
    cli::write_density_csv(g.out, grid);
    std::cout << json{{"grid", g.grid}, {"mass", grid.total_mass()}, {"out", g.out}}.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Squared complex circuits: build, check, train, marginalize, unitarize, benchmark"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config, "JSON config file");
    auto* seed = app.add_option("--seed", g.seed, "seed overriding the config");
    app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out", g.out, "output path");
    app.add_option("--verify-properties", g.verify, "check structural properties before running")->check(CLI::IsMember({"on", "off"}));

    auto* build = app.add_subcommand("build", "compile an architecture into a circuit file");
    auto* check = app.add_subcommand("check", "report structural and unitarity properties");
    auto* trn = app.add_subcommand("train", "maximum-likelihood training");
    auto* mar = app.add_subcommand("marginalize", "answer marginal queries");
    auto* uni = app.add_subcommand("unitarize", "rewrite a circuit into unitary form");
    auto* bench = app.add_subcommand("benchmark", "time and memory per optimizer step");
    auto* ver = app.add_subcommand("verify", "oracle-triangle suite");
    auto* dens = app.add_subcommand("export-density", "2-D density grid as CSV");
    for (auto* sc : {check, mar, uni, dens}) sc->add_option("--circuit", g.circuit, "circuit JSON file");
    mar->add_option("--queries", g.queries, "JSON query list");
    mar->add_option("--method", g.method, "auto | unitary | square | enumerate");
    dens->add_option("--grid", g.grid, "cells per axis")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;  // usage errors share the input-error code
    }
    g.seed_set = seed->count() > 0;
    set_num_threads(g.threads);

    try {
        if (*build) return cmd_build(g);
        if (*check) return cmd_check(g);
        if (*trn) return cmd_train(g);
        if (*mar) return cmd_marginalize(g);
        if (*uni) return cmd_unitarize(g);
        if (*bench) return cmd_benchmark(g);
        if (*ver) return cmd_verify(g);
        if (*dens) return cmd_export_density(g);
    } catch (const Error& e) {
        std::cerr << "sqpc: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::bad_alloc&) {
        std::cerr << "sqpc: out of memory\n";
        return 4;
    } catch (const json::exception& e) {
        std::cerr << "sqpc: malformed JSON: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
