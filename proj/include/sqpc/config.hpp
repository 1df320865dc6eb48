#pragma once

#include <filesystem>

#include "sqpc/data.hpp"
#include "sqpc/learning.hpp"
#include "sqpc/region_graph.hpp"
#include "sqpc/serialize.hpp"

namespace sqpc {

// Relative paths inside a config are resolved against the config file's directory.
inline std::string resolve_path(const std::string& p, const std::string& base_dir) {
    if (p.empty() || base_dir.empty() || std::filesystem::path(p).is_absolute()) return p;
    return (std::filesystem::path(base_dir) / p).string();
}

struct ArchitectureConfig {
    std::string region_graph = "quadtree";  // quadtree | multisplit | binary_tree | chain | mps
    int height = 0;
    int width = 0;
    int num_vars = 0;
    int min_patch = 8;
    CompileOptions compile;

    int vars() const { return (height > 0 && width > 0) ? height * width : num_vars; }
};

inline Layer::Kind product_kind_from_string(const std::string& s) {
    if (s == "hadamard") return Layer::Kind::hadamard;
    if (s == "kronecker") return Layer::Kind::kronecker;
    throw Error(ErrorKind::input, "product must be 'hadamard' or 'kronecker', got '" + s + "'");
}

inline ArchitectureConfig architecture_from_json(const json& j) {
    ArchitectureConfig a;
    a.region_graph = j.value("region_graph", a.region_graph);
    a.height = j.value("height", 0);
    a.width = j.value("width", 0);
    a.num_vars = j.value("num_vars", 0);
    a.min_patch = j.value("min_patch", a.min_patch);
    a.compile.K = j.value("K", 2);
    a.compile.product = product_kind_from_string(j.value("product", std::string("kronecker")));
    a.compile.unitary = j.value("unitary", false);
    a.compile.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("family")) {
        const json& f = j.at("family");
        a.compile.family.kind = f.value("kind", a.compile.family.kind);
        a.compile.family.cardinality = f.value("cardinality", a.compile.family.cardinality);
        a.compile.family.period = f.value("period", a.compile.family.period);
        a.compile.family.gauss_lo = f.value("lo", a.compile.family.gauss_lo);
        a.compile.family.gauss_hi = f.value("hi", a.compile.family.gauss_hi);
        a.compile.family.gauss_sigma = f.value("sigma", a.compile.family.gauss_sigma);
    }
    require(a.compile.K >= 1, ErrorKind::input, "K must be >= 1");
    const bool image = a.region_graph == "quadtree" || a.region_graph == "multisplit";
    if (image) require(a.height >= 1 && a.width >= 1, ErrorKind::input, a.region_graph + " needs height and width");
    else require(a.num_vars >= 2, ErrorKind::input, a.region_graph + " needs num_vars >= 2");
    return a;
}

inline TensorizedCircuit build_architecture(const ArchitectureConfig& a) {
    if (a.region_graph == "quadtree") return build_quadtree(a.height, a.width, a.compile);
    if (a.region_graph == "multisplit") return build_multisplit(a.height, a.width, a.min_patch, a.compile);
    if (a.region_graph == "binary_tree") return compile_region_graph(binary_tree_region_graph(a.num_vars), a.compile);
    if (a.region_graph == "chain") return build_chain(a.num_vars, a.compile);
    if (a.region_graph == "mps") {
        require(!a.compile.unitary, ErrorKind::capability, "the literal MPS builder has fixed selection weights; use 'chain' for unitary chains");
        require(a.compile.family.kind == "categorical", ErrorKind::capability, "the literal MPS builder uses categorical factors");
        Rng rng(a.compile.seed);
        return build_mps_chain(random_mps_factors(a.num_vars, a.compile.K, a.compile.family.cardinality, rng), a.compile.K);
    }
    throw Error(ErrorKind::input, "unknown region graph '" + a.region_graph + "'");
}

inline Dataset dataset_from_json(const json& j, const std::string& base_dir = "") {
    const std::string kind = j.value("kind", std::string("rings"));
    const std::uint64_t seed = j.value("seed", std::uint64_t{0});
    if (kind == "rings" || kind == "spiral") {
        return synth_dataset(kind, j.value("n_train", 4096), j.value("n_valid", 1024), j.value("n_test", 1024),
                             j.value("noise_sd", 0.1), seed);
    }
    const double vf = j.value("valid_frac", 0.1), tf = j.value("test_frac", 0.2);
    if (kind == "idx") {
        IdxArray a = read_idx(resolve_path(j.at("images").get<std::string>(), base_dir));
        MatrixR X = idx_images(a);
        int card = 256;
        if (j.contains("binarize")) {
            X = binarize(X, j.at("binarize").get<double>());
            card = 2;
        }
        if (j.contains("limit")) X.conservativeResize(std::min<Eigen::Index>(X.rows(), j.at("limit").get<Eigen::Index>()), X.cols());
        return split_rows(X, std::vector<VarDomain>(static_cast<std::size_t>(X.cols()), VarDomain::categorical(card)), vf, tf, seed);
    }
    if (kind == "csv") {
        MatrixR X = read_csv(resolve_path(j.at("path").get<std::string>(), base_dir), j.value("header", false));
        std::vector<VarDomain> doms;
        if (j.contains("domains")) {
            for (const auto& d : j.at("domains")) doms.push_back(domain_from_json(d));
        } else {
            doms.assign(static_cast<std::size_t>(X.cols()), VarDomain::categorical(j.value("cardinality", 2)));
        }
        require(static_cast<Eigen::Index>(doms.size()) == X.cols(), ErrorKind::input, "CSV column count differs from domain count");
        return split_rows(X, std::move(doms), vf, tf, seed);
    }
    throw Error(ErrorKind::input, "unknown dataset kind '" + kind + "'");
}

inline TrainConfig train_config_from_json(const json& j) {
    TrainConfig t;
    t.steps = j.value("steps", t.steps);
    t.batch_size = j.value("batch_size", t.batch_size);
    t.eval_every = j.value("eval_every", t.eval_every);
    t.seed = j.value("seed", t.seed);
    t.eval_rows = j.value("eval_rows", t.eval_rows);
    t.divergence_factor = j.value("divergence_factor", t.divergence_factor);
    t.project_checkpoints = j.value("project_checkpoints", t.project_checkpoints);
    if (j.contains("optimizer")) {
        const json& o = j.at("optimizer");
        t.optimizer = o.value("name", t.optimizer);
        const double lr = o.value("lr", 0.01);
        t.landing.lr = lr;
        t.adam.lr = lr;
        t.landing.lambda = o.value("lambda", t.landing.lambda);
        t.landing.eps = o.value("eps", t.landing.eps);
        t.landing.momentum = o.value("momentum", t.landing.momentum);
        t.landing.dampening = o.value("dampening", t.landing.dampening);
        t.landing.weight_decay = o.value("weight_decay", t.landing.weight_decay);
        t.landing.period = o.value("period", t.landing.period);
        t.landing.nesterov = o.value("nesterov", t.landing.nesterov);
        t.adam.beta1 = o.value("beta1", t.adam.beta1);
        t.adam.beta2 = o.value("beta2", t.adam.beta2);
        t.adam.eps = o.value("adam_eps", t.adam.eps);
    }
    t.landing.validate();
    require(t.steps >= 0 && t.batch_size >= 1 && t.eval_every >= 1, ErrorKind::input, "invalid training loop settings");
    return t;
}

}  // namespace sqpc
