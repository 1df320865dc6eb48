#include "test_util.hpp"

#include "sqpc/data.hpp"
#include "sqpc/learning.hpp"

using namespace sqpc;
using namespace sqpc::testing;

namespace {

std::vector<MatrixC> all_params(const TensorizedCircuit& c) {
    std::vector<MatrixC> out;
    for (const ParamBlock& b : param_blocks(c, false)) out.push_back(gather_block(c, b));
    return out;
}

double z_unitary(const TensorizedCircuit& c) {
    return mar_squared_unitary(c, Assignment(static_cast<std::size_t>(c.num_vars()), missing_value()), c.scope());
}

}  // namespace

TEST(Loss, UnitaryCircuitHasZeroLogPartition) {
    TensorizedCircuit c = build_quadtree(2, 3, options(2, Layer::Kind::kronecker, categorical_spec(4), true, 1));
    Rng rng(1);
    MatrixR X = random_points(c.domains(), 8, rng);
    LossValue L = nll(c, X);
    EXPECT_EQ(L.log_partition, 0.0);
    EXPECT_LT(std::abs(log_partition_materialized(c)), 1e-10);
    EXPECT_LT(rel_err(L.nll, nll(c, X, Normalization::materialize).nll), 1e-9);
}

TEST(Loss, UniformModelGivesLog2CardinalityBitsPerDim) {
    TensorizedCircuit c(std::vector<VarDomain>(3, VarDomain::categorical(4)));
    std::vector<int> in;
    for (int v = 0; v < 3; ++v) in.push_back(c.add_input(v, categorical_family(MatrixC::Constant(1, 4, cplx(0.7, 0.2)))));
    int p = c.add_kronecker(c.add_kronecker(in[0], in[1]), in[2]);
    c.set_output(c.add_sum({p}, MatrixC::Ones(1, 1)));
    Rng rng(2);
    MatrixR X = random_points(c.domains(), 10, rng);
    EXPECT_NEAR(nll(c, X, Normalization::materialize).bpd(3), 2.0, 1e-12);
    EXPECT_NEAR(eval_bpd(c, X, Normalization::materialize), 2.0, 1e-12);
}

TEST(Loss, MatchesEnumeratedPartition) {
    TensorizedCircuit c = build_quadtree(2, 2, options(2, Layer::Kind::kronecker, categorical_spec(2), false, 3));
    double Z = 0;
    for (int m = 0; m < 16; ++m) Z += std::norm(eval_one(c, {double(m & 1), double(m >> 1 & 1), double(m >> 2 & 1), double(m >> 3 & 1)}));
    MatrixR X(3, 4);
    X << 0, 1, 1, 0, 1, 1, 1, 1, 0, 0, 1, 0;
    double expect = 0;
    for (Eigen::Index r = 0; r < 3; ++r) expect -= std::log(std::norm(eval_one(c, row_of(X, r))) / Z);
    LossValue L = nll(c, X, Normalization::materialize);
    EXPECT_LT(rel_err(L.log_partition, std::log(Z)), 1e-10);
    EXPECT_LT(rel_err(L.nll, expect), 1e-10);
    EXPECT_EQ(L.batch, 3);
}

TEST(Loss, ZeroDensityIsFloored) {
    TensorizedCircuit c({VarDomain::categorical(2)});
    MatrixC t(1, 2);
    t << 0.0, 1.0;
    c.set_output(c.add_sum({c.add_input(0, categorical_family(t))}, MatrixC::Ones(1, 1)));
    MatrixR X(2, 1);
    X << 0, 1;
    LossValue L = nll(c, X, Normalization::materialize);
    EXPECT_EQ(L.floored, 1);
    EXPECT_TRUE(std::isfinite(L.nll));
}

TEST(Gradient, FiniteDifferencesMaterialized) {
    Rng rng(4);
    for (Layer::Kind k : {Layer::Kind::kronecker, Layer::Kind::hadamard}) {
        TensorizedCircuit c = build_quadtree(2, 3, options(2, k, categorical_spec(3), false, 5));
        MatrixR X = random_points(c.domains(), 5, rng);
        int n = 0;
        EXPECT_LT(worst_gradient_error(c, X, Normalization::materialize, &n), 1e-5);
        EXPECT_GT(n, 20);
    }
}

TEST(Gradient, FiniteDifferencesUnitary) {
    TensorizedCircuit c = build_quadtree(2, 3, options(2, Layer::Kind::kronecker, categorical_spec(4), true, 6));
    Rng rng(7);
    MatrixR X = random_points(c.domains(), 5, rng);
    EXPECT_LT(worst_gradient_error(c, X, Normalization::unitary), 1e-5);
}

TEST(Gradient, FiniteDifferencesFourierBias) {
    Rng rng(8);
    for (bool unitary : {false, true}) {
        TensorizedCircuit c = fourier_2d(3, unitary, 9);
        MatrixR X = random_points(c.domains(), 6, rng);
        EXPECT_LT(worst_gradient_error(c, X, unitary ? Normalization::unitary : Normalization::materialize), 1e-5);
        LossAndGrad lg = backward(c, X, Normalization::materialize);
        bool any_bias = false;
        for (int i = 0; i < c.num_layers(); ++i)
            if (c.layer(i).kind == Layer::Kind::input) any_bias |= std::abs(lg.layer_grads[static_cast<std::size_t>(i)](0, 0)) > 1e-8;
        EXPECT_TRUE(any_bias);
    }
}

TEST(Gradient, UnobservedCategoryHasZeroGradient) {
    TensorizedCircuit c = build_quadtree(1, 2, options(2, Layer::Kind::kronecker, categorical_spec(3), true, 10));
    MatrixR X(2, 2);
    X << 0, 1, 0, 2;
    LossAndGrad lg = backward(c, X, Normalization::unitary);
    for (int i = 0; i < c.num_layers(); ++i) {
        const Layer& l = c.layer(i);
        if (l.kind == Layer::Kind::input && l.var == 0) {
            const MatrixC& g = lg.layer_grads[static_cast<std::size_t>(i)];
            EXPECT_EQ(g.col(1).norm(), 0.0);
            EXPECT_EQ(g.col(2).norm(), 0.0);
            EXPECT_GT(g.col(0).norm(), 0.0);
        }
    }
}

TEST(Landing, ZeroGradientOnManifoldIsFixedPoint) {
    Rng rng(11);
    MatrixC W = random_semi_unitary(2, 5, rng);
    const MatrixC W0 = W;
    OptimizerState s;
    landing_step(W, MatrixC::Zero(2, 5), s, LandingHyper{});
    EXPECT_LT((W - W0).norm(), 1e-14);
}

TEST(Landing, SafeStepOnManifold) {
    for (double r : {0.5, 2.0, 10.0}) EXPECT_LT(rel_err(landing_safe_step(0.0, r, 0.1, 0.5), std::sqrt(0.5) / r), 1e-7);
}

TEST(Landing, FieldComponentsAreOrthogonal) {
    Rng rng(12);
    for (int t = 0; t < 10; ++t) {
        MatrixC X = random_complex(6, 3, 1.0, rng);
        MatrixC g = random_complex(6, 3, 1.0, rng);
        const cplx ip = (landing_relative(X, g).adjoint() * landing_normal(X, 1.0)).trace();
        EXPECT_LT(std::abs(ip.real()), 1e-12 * landing_relative(X, g).norm() * landing_normal(X, 1.0).norm() + 1e-14);
    }
}

TEST(Landing, QuadraticStaysNearManifold) {
    Rng rng(13);
    MatrixC W = random_semi_unitary(3, 6, rng);
    const MatrixC B = random_complex(3, 6, 1.0, rng);
    OptimizerState s;
    LandingHyper h;
    h.lr = 0.1;
    const double start = (W - B).squaredNorm();
    for (int k = 0; k < 50; ++k) {
        StepInfo info = landing_step(W, 2.0 * (W - B), s, h);
        EXPECT_LT(info.distance, 0.5);
    }
    EXPECT_LT((W - B).squaredNorm(), start);
}

TEST(Landing, SafeStepBoundsDistanceUnderLargeSteps) {
    Rng rng(14);
    MatrixC W = random_semi_unitary(4, 8, rng);
    OptimizerState s;
    LandingHyper h;
    h.lr = 5.0;
    h.eps = 0.3;
    double worst = 0;
    for (int k = 0; k < 1000; ++k) worst = std::max(worst, landing_step(W, random_complex(4, 8, 10.0, rng), s, h).distance);
    EXPECT_LE(worst, 2 * h.eps);
}

TEST(Landing, PeriodicProjection) {
    Rng rng(15);
    MatrixC W = random_semi_unitary(2, 4, rng);
    OptimizerState s;
    LandingHyper h;
    h.period = 5;
    for (int k = 1; k <= 5; ++k) {
        StepInfo info = landing_step(W, random_complex(2, 4, 1.0, rng), s, h);
        EXPECT_EQ(info.projected, k == 5);
    }
    EXPECT_LT(manifold_distance(W), 1e-12);
}

TEST(LandingPc, ProjectsWhenFarFromManifold) {
    Rng rng(16);
    MatrixC W = 2.0 * random_semi_unitary(2, 4, rng);
    OptimizerState s;
    StepInfo info = landing_pc_step(W, random_complex(2, 4, 0.01, rng), s, LandingHyper{}, AdamHyper{});
    EXPECT_TRUE(info.projected);
    EXPECT_LT(info.distance, 1e-12);
}

TEST(LandingPc, FirstStepIsUnpreconditioned) {
    Rng rng(17);
    const MatrixC W0 = random_semi_unitary(3, 5, rng);
    const MatrixC G = random_complex(3, 5, 1.0, rng);
    LandingHyper h;
    h.lr = 0.01;
    h.momentum = 0;
    MatrixC a = W0, b = W0;
    OptimizerState sa, sb;
    StepInfo ia = landing_pc_step(a, G, sa, h, AdamHyper{});
    landing_step(b, G, sb, h);
    EXPECT_FALSE(ia.projected);
    EXPECT_LT((a - b).norm(), 1e-14);
}

TEST(Optimizers, AdamAndSgdMove) {
    Rng rng(18);
    MatrixC W = random_complex(2, 3, 1.0, rng), V = W;
    const MatrixC G = random_complex(2, 3, 1.0, rng);
    sgd_step(W, G, 0.1);
    EXPECT_LT((W - (V - 0.1 * G)).norm(), 1e-15);
    OptimizerState s;
    MatrixC U = V;
    adam_step(U, G, s, AdamHyper{});
    // first Adam step moves each coordinate by lr in modulus
    EXPECT_LT(std::abs((U - V).cwiseAbs().maxCoeff() - 0.01), 1e-6);
    EXPECT_THROW(sgd_step(W, MatrixC::Constant(2, 3, cplx(std::nan(""), 0)), 0.1), Error);
}

TEST(Trainer, ZeroLearningRateLeavesParameters) {
    TensorizedCircuit c = fourier_2d(3, true, 19);
    Dataset d = synth_dataset("rings", 200, 50, 50, 0.1, 1);
    TrainConfig cfg;
    cfg.landing.lr = 0;
    cfg.steps = 5;
    cfg.batch_size = 32;
    TrainResult r = train(c, d, cfg);
    auto a = all_params(c), b = all_params(r.last);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LT((a[i] - b[i]).norm(), 1e-12);
    EXPECT_FALSE(r.diverged);
    cfg.project_checkpoints = false;
    auto c2 = all_params(train(c, d, cfg).last);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], c2[i]);
}

TEST(Trainer, LandingCheckpointsAreUnitary) {
    Dataset d = synth_dataset("rings", 500, 100, 50, 0.1, 5);
    TrainConfig cfg;
    cfg.optimizer = "landing";
    cfg.landing.lr = 0.1;
    cfg.steps = 30;
    cfg.eval_every = 10;
    cfg.batch_size = 32;
    TrainResult r = train(fourier_2d(5, true, 23), d, cfg);
    EXPECT_TRUE(check_unitarity(r.best).unitary());
    EXPECT_TRUE(check_unitarity(r.last).unitary());
    EXPECT_NEAR(z_unitary(r.last), 1.0, 1e-9);
}

TEST(Trainer, LandingRequiresUnitaryCircuit) {
    TensorizedCircuit c = build_quadtree(2, 2, options(2, Layer::Kind::kronecker, categorical_spec(2), false, 1));
    TrainConfig cfg;
    try {
        Trainer t(c, cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::precondition);
    }
    cfg.optimizer = "rmsprop";
    EXPECT_THROW(Trainer(c, cfg), Error);
}

TEST(Trainer, RingsImprove) {
    Dataset d = synth_dataset("rings", 2000, 200, 200, 0.1, 2);
    for (const std::string opt : {"landing", "adam"}) {
        TrainConfig cfg;
        cfg.optimizer = opt;
        cfg.steps = 150;
        cfg.batch_size = 64;
        cfg.eval_every = 50;
        cfg.landing.lr = 0.05;
        cfg.adam.lr = 0.02;
        cfg.norm = opt == "adam" ? Normalization::materialize : Normalization::detect;
        TrainResult r = train(fourier_2d(7, true, 20), d, cfg);
        EXPECT_FALSE(r.diverged) << opt;
        EXPECT_LT(r.best_valid_bpd, r.metrics.front()["valid_bpd"].get<double>()) << opt;
        EXPECT_LT(r.last_train_nll, r.first_train_nll) << opt;
    }
}

TEST(Trainer, UnitarityHoldsAfterEveryProjection) {
    Dataset d = synth_dataset("rings", 500, 50, 50, 0.1, 3);
    TrainConfig cfg;
    cfg.optimizer = "landing_pc";
    cfg.landing.eps = 0;  // project on every step
    cfg.landing.lr = 0.05;
    Trainer t(fourier_2d(5, true, 21), cfg);
    for (int k = 0; k < 20; ++k) {
        t.step(d.train.middleRows(k * 20, 20));
        EXPECT_LT(std::abs(z_unitary(t.circuit()) - 1.0), 1e-6);
    }
}

TEST(Trainer, DivergenceIsReported) {
    Dataset d = synth_dataset("rings", 300, 50, 50, 0.1, 4);
    TrainConfig cfg;
    cfg.optimizer = "sgd";
    cfg.adam.lr = -1.0;  // ascent
    cfg.steps = 50;
    cfg.norm = Normalization::materialize;
    cfg.divergence_factor = 1.5;
    TrainResult r = train(fourier_2d(3, false, 22), d, cfg);
    EXPECT_TRUE(r.diverged);
    EXPECT_FALSE(r.message.empty());
    EXPECT_LT(r.steps, 50);
}

TEST(SynthData, NoiselessSpiralOnCurve) {
    Rng rng(23);
    MatrixR X = synth_data("spiral", 200, 0.0, rng);
    const double c = spiral_period / 2;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const double dx = X(i, 0) - c, dy = X(i, 1) - c;
        const double r = std::hypot(dx, dy);
        // r = 0.4θ with θ ≡ atan2 mod 2π; some winding must match
        double best = 1e9;
        for (int k = 0; k < 3; ++k) {
            double th = std::atan2(dy, dx);
            if (th < 0) th += 2 * std::numbers::pi;
            best = std::min(best, std::abs(0.4 * (th + 2 * std::numbers::pi * k) - r));
        }
        EXPECT_LT(best, 1e-9);
    }
}

TEST(SynthData, RingRadii) {
    Rng rng(24);
    const double sd = 0.05;
    MatrixR X = synth_data("rings", 2000, sd, rng);
    std::vector<double> sum(2, 0.0);
    std::vector<int> n(2, 0);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const double r = std::hypot(X(i, 0) - rings_period / 2, X(i, 1) - rings_period / 2);
        const int k = r < 1.5 ? 0 : 1;
        sum[static_cast<std::size_t>(k)] += r;
        ++n[static_cast<std::size_t>(k)];
    }
    for (int k = 0; k < 2; ++k) {
        ASSERT_GT(n[static_cast<std::size_t>(k)], 100);
        const double mean = sum[static_cast<std::size_t>(k)] / n[static_cast<std::size_t>(k)];
        EXPECT_LT(std::abs(mean - ring_radii()[static_cast<std::size_t>(k)]), 3 * sd);
    }
    EXPECT_GE(X.minCoeff(), 0.0);
    EXPECT_LE(X.maxCoeff(), rings_period);
}
