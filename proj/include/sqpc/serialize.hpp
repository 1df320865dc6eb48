#pragma once

#include <fstream>

#include "json.hpp"
#include "sqpc/scalar_circuit.hpp"
#include "sqpc/tensorized.hpp"

namespace sqpc {

using json = nlohmann::json;

inline constexpr int circuit_format_version = 1;

namespace detail {

inline double finite_or_throw(double x) {
    require(std::isfinite(x), ErrorKind::input, "cannot serialize a non-finite value");
    return x;
}

inline json cplx_to_json(cplx z) { return json::array({finite_or_throw(z.real()), finite_or_throw(z.imag())}); }

inline cplx cplx_from_json(const json& j) {
    require(j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number(), ErrorKind::input,
            "complex value must be [re, im]");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline json matrix_to_json(const MatrixC& M) {
    json data = json::array();
    for (Eigen::Index r = 0; r < M.rows(); ++r)
        for (Eigen::Index c = 0; c < M.cols(); ++c) data.push_back(cplx_to_json(M(r, c)));
    return {{"rows", M.rows()}, {"cols", M.cols()}, {"data", data}};
}

inline MatrixC matrix_from_json(const json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>(), cols = j.at("cols").get<Eigen::Index>();
    const json& data = j.at("data");
    require(rows >= 0 && cols >= 0 && data.size() == static_cast<std::size_t>(rows * cols), ErrorKind::input,
            "matrix data length does not match its shape");
    MatrixC M(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) M(r, c) = cplx_from_json(data[k++]);
    return M;
}

inline void check_header(const json& j, const std::string& kind) {
    require(j.is_object() && j.value("format", "") == kind, ErrorKind::input, "not a " + kind + " document");
    const int v = j.value("version", 0);
    require(v == circuit_format_version, ErrorKind::input, "unsupported " + kind + " version " + std::to_string(v));
}

}  // namespace detail

inline json to_json(const VarDomain& d) {
    switch (d.kind) {
    case VarDomain::Kind::categorical: return {{"kind", "categorical"}, {"cardinality", d.cardinality}};
    case VarDomain::Kind::interval: return {{"kind", "interval"}, {"lo", d.lo}, {"hi", d.hi}};
    case VarDomain::Kind::real_line: return {{"kind", "real_line"}};
    }
    return {};
}

inline VarDomain domain_from_json(const json& j) {
    const std::string k = j.at("kind").get<std::string>();
    if (k == "categorical") return VarDomain::categorical(j.at("cardinality").get<int>());
    if (k == "interval") return VarDomain::interval(j.at("lo").get<double>(), j.at("hi").get<double>());
    if (k == "real_line") return VarDomain::real_line();
    throw Error(ErrorKind::input, "unknown domain kind '" + k + "'");
}

inline json to_json(const InputFamily& f) {
    json j{{"label", f.label},
           {"domain", to_json(f.domain)},
           {"orthonormal", f.orthonormal},
           {"learnable", f.learnable},
           {"origin", f.origin}};
    switch (f.kind) {
    case InputFamily::Kind::categorical:
        j["kind"] = "categorical";
        j["table"] = detail::matrix_to_json(f.table);
        break;
    case InputFamily::Kind::fourier: {
        j["kind"] = "fourier";
        j["period"] = f.period;
        j["bias"] = detail::finite_or_throw(f.bias);
        j["freq"] = f.freq;
        json co = json::array();
        for (cplx c : f.coeff) co.push_back(detail::cplx_to_json(c));
        j["coeff"] = co;
        break;
    }
    case InputFamily::Kind::gaussian:
        j["kind"] = "gaussian";
        j["mu"] = f.mu;
        j["sigma"] = f.sigma;
        break;
    }
    return j;
}

inline InputFamily family_from_json(const json& j) {
    InputFamily f;
    const std::string k = j.at("kind").get<std::string>();
    f.label = j.value("label", k);
    f.domain = domain_from_json(j.at("domain"));
    f.orthonormal = j.value("orthonormal", false);
    f.learnable = j.value("learnable", true);
    f.origin = j.value("origin", "");
    if (k == "categorical") {
        f.kind = InputFamily::Kind::categorical;
        f.table = detail::matrix_from_json(j.at("table"));
        require(f.domain.is_categorical() && f.table.cols() == f.domain.cardinality, ErrorKind::input,
                "categorical table width differs from its domain");
    } else if (k == "fourier") {
        f.kind = InputFamily::Kind::fourier;
        f.period = j.at("period").get<double>();
        f.bias = j.at("bias").get<double>();
        f.freq = j.at("freq").get<std::vector<int>>();
        for (const auto& c : j.at("coeff")) f.coeff.push_back(detail::cplx_from_json(c));
        require(f.freq.size() == f.coeff.size() && f.period > 0, ErrorKind::input, "malformed Fourier family");
    } else if (k == "gaussian") {
        f.kind = InputFamily::Kind::gaussian;
        f.mu = j.at("mu").get<std::vector<double>>();
        f.sigma = j.at("sigma").get<std::vector<double>>();
        require(f.mu.size() == f.sigma.size(), ErrorKind::input, "malformed Gaussian family");
    } else {
        throw Error(ErrorKind::input, "unknown family kind '" + k + "'");
    }
    return f;
}

inline json to_json(const TensorizedCircuit& c) {
    json doms = json::array(), layers = json::array();
    for (const auto& d : c.domains()) doms.push_back(to_json(d));
    for (const Layer& l : c.layers()) {
        json j{{"kind", layer_kind_name(l.kind)}, {"inputs", l.inputs}};
        if (l.kind == Layer::Kind::input) {
            j["var"] = l.var;
            j["tie_group"] = l.tie_group;
            j["family"] = to_json(l.family);
        } else if (l.kind == Layer::Kind::sum) {
            j["weight"] = detail::matrix_to_json(l.weight);
        } else if (l.kind == Layer::Kind::kronecker && !l.perm.empty()) {
            j["perm"] = l.perm;
        }
        layers.push_back(std::move(j));
    }
    return {{"format", "sqpc-tensorized"}, {"version", circuit_format_version}, {"domains", doms}, {"layers", layers},
            {"output", c.output()}};
}

inline TensorizedCircuit tensorized_from_json(const json& j) {
    detail::check_header(j, "sqpc-tensorized");
    std::vector<VarDomain> doms;
    for (const auto& d : j.at("domains")) doms.push_back(domain_from_json(d));
    TensorizedCircuit c(doms);
    for (const auto& l : j.at("layers")) {
        const std::string k = l.at("kind").get<std::string>();
        const auto ins = l.value("inputs", std::vector<int>{});
        if (k == "input") {
            c.add_input(l.at("var").get<int>(), family_from_json(l.at("family")), l.value("tie_group", -1));
        } else if (k == "sum") {
            c.add_sum(ins, detail::matrix_from_json(l.at("weight")));
        } else if (k == "hadamard" || k == "kronecker") {
            require(ins.size() == 2, ErrorKind::input, "product layers take two inputs");
            if (k == "hadamard") c.add_hadamard(ins[0], ins[1]);
            else c.add_kronecker(ins[0], ins[1], l.value("perm", std::vector<int>{}));
        } else {
            throw Error(ErrorKind::input, "unknown layer kind '" + k + "'");
        }
    }
    const int out = j.at("output").get<int>();
    require(out >= 0 && out < c.num_layers(), ErrorKind::input, "output layer id out of range");
    c.set_output(out);
    return c;
}

inline json to_json(const ScalarCircuit& c) {
    json doms = json::array(), fams = json::array(), units = json::array();
    for (const auto& d : c.domains()) doms.push_back(to_json(d));
    for (const auto& f : c.families()) fams.push_back(to_json(f));
    for (const auto& u : c.units()) {
        json j;
        switch (u.kind) {
        case ScalarUnit::Kind::input:
            j = {{"kind", "input"}, {"var", u.var}, {"family", u.family}, {"component", u.component}};
            break;
        case ScalarUnit::Kind::sum: {
            json w = json::array();
            for (cplx x : u.weights) w.push_back(detail::cplx_to_json(x));
            j = {{"kind", "sum"}, {"inputs", u.inputs}, {"weights", w}};
            break;
        }
        case ScalarUnit::Kind::product:
            j = {{"kind", "product"}, {"inputs", u.inputs}};
            break;
        }
        units.push_back(std::move(j));
    }
    return {{"format", "sqpc-scalar"}, {"version", circuit_format_version}, {"domains", doms}, {"families", fams},
            {"units", units}, {"output", c.output()}};
}

inline ScalarCircuit scalar_from_json(const json& j) {
    detail::check_header(j, "sqpc-scalar");
    std::vector<VarDomain> doms;
    for (const auto& d : j.at("domains")) doms.push_back(domain_from_json(d));
    ScalarCircuit c(doms);
    for (const auto& f : j.at("families")) c.add_family(family_from_json(f));
    for (const auto& u : j.at("units")) {
        const std::string k = u.at("kind").get<std::string>();
        if (k == "input") {
            c.add_input(u.at("var").get<int>(), u.at("family").get<int>(), u.at("component").get<int>());
        } else if (k == "sum") {
            std::vector<cplx> w;
            for (const auto& x : u.at("weights")) w.push_back(detail::cplx_from_json(x));
            c.add_sum(u.at("inputs").get<std::vector<int>>(), std::move(w));
        } else if (k == "product") {
            c.add_product(u.at("inputs").get<std::vector<int>>());
        } else {
            throw Error(ErrorKind::input, "unknown unit kind '" + k + "'");
        }
    }
    c.set_output(j.at("output").get<int>());
    return c;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::input, "cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::input, path + ": " + e.what());
    }
}

inline void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorKind::input, "cannot write " + path);
    out << j.dump() << "\n";
}

inline void save_circuit(const std::string& path, const TensorizedCircuit& c) { write_json_file(path, to_json(c)); }

inline TensorizedCircuit load_circuit(const std::string& path) {
    try {
        return tensorized_from_json(read_json_file(path));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::input, path + ": " + e.what());
    }
}

}  // namespace sqpc
