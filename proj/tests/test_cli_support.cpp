#include "test_util.hpp"

#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "sqpc/config.hpp"

using namespace sqpc;
using namespace sqpc::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("sqpc_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir / name;
}

void expect_kind(ErrorKind k, const std::function<void()>& f) {
    try {
        f();
        FAIL() << "no error raised";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), k) << e.what();
    }
}

}  // namespace

TEST(Serialize, TensorizedRoundTrip) {
    std::vector<TensorizedCircuit> cs;
    cs.push_back(build_quadtree(3, 3, options(2, Layer::Kind::hadamard, categorical_spec(3), false, 1)));
    cs.push_back(build_multisplit(2, 4, 1, options(2, Layer::Kind::kronecker, categorical_spec(4), true, 2)));
    cs.push_back(build_ttn_binary(2, 3, FamilySpec{"fourier", 2, 6.0}, true, 3));
    Rng rng(4);
    for (const auto& c : cs) {
        const fs::path p = scratch("circuit.json");
        save_circuit(p.string(), c);
        TensorizedCircuit back = load_circuit(p.string());
        ASSERT_EQ(back.num_layers(), c.num_layers());
        EXPECT_EQ(back.total_size(), c.total_size());
        MatrixR X = random_points(c.domains(), 20, rng);
        EXPECT_EQ(eval_batch(back, X), eval_batch(c, X));
        EXPECT_EQ(check_unitarity(back).unitary(), check_unitarity(c).unitary());
    }
}

TEST(Serialize, ScalarRoundTrip) {
    Rng rng(5);
    ScalarCircuit c = deterministic_circuit(3, 3, rng);
    ScalarCircuit back = scalar_from_json(json::parse(to_json(c).dump()));
    EXPECT_EQ(back.size(), c.size());
    for (int t = 0; t < 10; ++t) {
        Assignment x = random_assignment(c.domains(), rng);
        EXPECT_EQ(back.evaluate(x), c.evaluate(x));
    }
}

TEST(Serialize, RejectsMalformedDocuments) {
    TensorizedCircuit c = build_quadtree(2, 2, options(2, Layer::Kind::kronecker, categorical_spec(2), false, 6));
    json j = to_json(c);
    json wrong = j;
    wrong["version"] = 99;
    expect_kind(ErrorKind::input, [&] { tensorized_from_json(wrong); });
    expect_kind(ErrorKind::input, [&] { scalar_from_json(j); });
    const fs::path p = scratch("broken.json");
    std::ofstream(p) << "{ not json";
    expect_kind(ErrorKind::input, [&] { load_circuit(p.string()); });
    expect_kind(ErrorKind::input, [&] { load_circuit(scratch("absent.json").string()); });
    MatrixC bad = MatrixC::Ones(1, 1);
    bad(0, 0) = cplx(std::numeric_limits<double>::infinity(), 0);
    expect_kind(ErrorKind::input, [&] { detail::matrix_to_json(bad); });
}

TEST(Config, ArchitectureParsing) {
    json j = json::parse(R"({"region_graph": "quadtree", "height": 4, "width": 4, "K": 3, "product": "hadamard",
                             "family": {"kind": "categorical", "cardinality": 5}, "seed": 7})");
    ArchitectureConfig a = architecture_from_json(j);
    EXPECT_EQ(a.vars(), 16);
    EXPECT_EQ(a.compile.K, 3);
    EXPECT_EQ(a.compile.product, Layer::Kind::hadamard);
    EXPECT_EQ(a.compile.family.cardinality, 5);
    TensorizedCircuit c = build_architecture(a);
    EXPECT_EQ(c.num_vars(), 16);
    EXPECT_EQ(c.domains()[0].cardinality, 5);
    expect_kind(ErrorKind::input, [] { architecture_from_json(json::parse(R"({"region_graph": "quadtree"})")); });
    expect_kind(ErrorKind::input, [] { architecture_from_json(json::parse(R"({"region_graph": "chain", "num_vars": 4, "product": "outer"})")); });
    expect_kind(ErrorKind::input, [] { build_architecture(architecture_from_json(json::parse(R"({"region_graph": "ring", "num_vars": 4})"))); });
    expect_kind(ErrorKind::capability, [] {
        build_architecture(architecture_from_json(json::parse(R"({"region_graph": "mps", "num_vars": 4, "unitary": true})")));
    });
}

TEST(Config, TrainingParsing) {
    TrainConfig t = train_config_from_json(json::parse(R"({"steps": 12, "batch_size": 8,
        "optimizer": {"name": "landing_pc", "lr": 0.2, "lambda": 1.5, "eps": 0.3, "period": 7}})"));
    EXPECT_EQ(t.steps, 12);
    EXPECT_EQ(t.optimizer, "landing_pc");
    EXPECT_EQ(t.landing.lr, 0.2);
    EXPECT_EQ(t.adam.lr, 0.2);
    EXPECT_EQ(t.landing.lambda, 1.5);
    EXPECT_EQ(t.landing.period, 7);
    expect_kind(ErrorKind::input, [] { train_config_from_json(json::parse(R"({"optimizer": {"lambda": -1}})")); });
    expect_kind(ErrorKind::input, [] { train_config_from_json(json::parse(R"({"batch_size": 0})")); });
}

TEST(Config, SyntheticDataset) {
    Dataset d = dataset_from_json(json::parse(R"({"kind": "spiral", "n_train": 30, "n_valid": 5, "n_test": 5, "seed": 2})"));
    EXPECT_EQ(d.train.rows(), 30);
    EXPECT_EQ(d.domains[0].hi, spiral_period);
    Dataset e = dataset_from_json(json::parse(R"({"kind": "spiral", "n_train": 30, "n_valid": 5, "n_test": 5, "seed": 2})"));
    EXPECT_EQ(d.train, e.train);
    expect_kind(ErrorKind::input, [] { dataset_from_json(json::parse(R"({"kind": "moons"})")); });
}

TEST(DataIo, IdxRoundTripAndBinarize) {
    IdxArray a;
    a.dims = {3, 2, 2};
    for (int i = 0; i < 12; ++i) a.data.push_back(static_cast<std::uint8_t>(i * 20));
    const fs::path p = scratch("images.idx");
    write_idx(p.string(), a);
    IdxArray b = read_idx(p.string());
    EXPECT_EQ(b.dims, a.dims);
    EXPECT_EQ(b.data, a.data);
    int h = 0, w = 0;
    MatrixR X = idx_images(b, &h, &w);
    EXPECT_EQ(h, 2);
    EXPECT_EQ(X.rows(), 3);
    EXPECT_EQ(X(1, 3), 140.0);
    MatrixR B = binarize(X, 100);
    EXPECT_EQ(B.sum(), 7.0);

    json cfg = {{"kind", "idx"}, {"images", p.filename().string()}, {"binarize", 100}, {"valid_frac", 0.0}, {"test_frac", 0.0}};
    Dataset d = dataset_from_json(cfg, p.parent_path().string());
    EXPECT_EQ(d.train.rows(), 3);
    EXPECT_EQ(d.domains[0].cardinality, 2);

    std::ofstream(scratch("short.idx"), std::ios::binary) << "\x00\x00";
    expect_kind(ErrorKind::input, [] { read_idx(scratch("short.idx").string()); });
}

TEST(DataIo, CsvReading) {
    const fs::path p = scratch("data.csv");
    std::ofstream(p) << "a,b\n0,1\n# comment\n1,1\n\n2,0\n";
    MatrixR X = read_csv(p.string(), true);
    ASSERT_EQ(X.rows(), 3);
    EXPECT_EQ(X(2, 0), 2.0);
    json cfg = {{"kind", "csv"}, {"path", p.string()}, {"header", true}, {"cardinality", 3}, {"valid_frac", 0.0}, {"test_frac", 0.0}};
    EXPECT_EQ(dataset_from_json(cfg).train.rows(), 3);
    cfg["cardinality"] = 2;
    expect_kind(ErrorKind::domain, [&] { dataset_from_json(cfg); });
    std::ofstream(p) << "0,1\n1\n";
    expect_kind(ErrorKind::input, [&] { read_csv(p.string()); });
    std::ofstream(p) << "0,x\n";
    expect_kind(ErrorKind::input, [&] { read_csv(p.string()); });
}

TEST(DataIo, SplitIsSeededPermutation) {
    MatrixR X(10, 1);
    for (int i = 0; i < 10; ++i) X(i, 0) = i;
    Dataset d = split_rows(X, {VarDomain::categorical(10)}, 0.2, 0.3, 5);
    EXPECT_EQ(d.train.rows(), 5);
    EXPECT_EQ(d.valid.rows(), 2);
    EXPECT_EQ(d.test.rows(), 3);
    EXPECT_EQ(d.train.sum() + d.valid.sum() + d.test.sum(), 45.0);
    EXPECT_EQ(split_rows(X, {VarDomain::categorical(10)}, 0.2, 0.3, 5).train, d.train);
    expect_kind(ErrorKind::input, [&] { split_rows(X, {VarDomain::categorical(10)}, 0.6, 0.5, 1); });
}
