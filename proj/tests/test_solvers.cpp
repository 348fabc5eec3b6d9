#include <gtest/gtest.h>

#include "mimocs/solvers.hpp"
#include "oracles.hpp"

using namespace mimocs;

namespace {

struct Instance {
    RadarConfig cfg;
    SignalSet sig;
    MeasurementOperator op;
    TargetScene scene;
    cvec y;
};

Instance make_instance(RadarConfig cfg, std::int64_t s, double sigma, std::uint64_t seed, double amplitude = 1.0) {
    auto sig = generate_signals(cfg, SignalFamily::ComplexGaussian, seed);
    MeasurementOperator op(cfg, sig);
    auto scene = make_scene(sample_unconstrained_support(cfg, s, seed), amplitude, seed);
    cvec y = op.forward(scene.entries());
    RandomStream noise(seed, StreamTag::Noise);
    for (auto& v : y) v += sigma * noise.complex_gaussian();
    return {cfg, std::move(sig), std::move(op), std::move(scene), std::move(y)};
}

double golden_section(auto&& f, double lo, double hi) {
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    for (int it = 0; it < 200; ++it) {
        const double c = b - g * (b - a), d = a + g * (b - a);
        if (f(c) < f(d)) b = d;
        else a = c;
    }
    return 0.5 * (a + b);
}

} // namespace

TEST(SoftThreshold, ProxOptimality) {
    RandomStream rng(3);
    for (int trial = 0; trial < 500; ++trial) {
        const cplx z = 3.0 * rng.complex_gaussian();
        const double t = 2.0 * rng.uniform();
        const cplx w = soft_threshold(z, t);
        if (w == cplx{}) {
            EXPECT_LE(std::abs(z), t);
        } else {
            // z - w = t sgn(w)
            EXPECT_LT(std::abs(z - w - t * w / std::abs(w)), 1e-10);
        }
        // 1-D minimization along the ray of z, then random probes off the ray.
        auto obj = [&](cplx v) { return 0.5 * std::norm(v - z) + t * std::abs(v); };
        const double r = golden_section([&](double m) { return obj(std::polar(m, std::arg(z))); }, 0.0, std::abs(z));
        EXPECT_NEAR(std::abs(w), r, 1e-7);
        for (int p = 0; p < 5; ++p) EXPECT_LE(obj(w), obj(w + 0.1 * rng.complex_gaussian()) + 1e-15);
    }
}

TEST(DefaultLambda, Values) {
    RadarConfig cfg(8, 8, 64, DopplerMode::DopplerFree);
    EXPECT_EQ(paper_lambda(cfg, 0.0), 0.0);
    EXPECT_DOUBLE_EQ(paper_lambda(cfg, 1.0), 2.0 * std::sqrt(2.0 * 4096.0 * std::log(4096.0)));
    EXPECT_NEAR(paper_lambda(cfg, 1.0), 522.07, 0.01);
    EXPECT_DOUBLE_EQ(paper_lambda(cfg, 2.0), 2.0 * paper_lambda(cfg, 1.0));
    RadarConfig full(2, 2, 4);
    EXPECT_DOUBLE_EQ(paper_lambda(full, 1.0), 2.0 * std::sqrt(2.0 * 16.0 * std::log(64.0)));
    EXPECT_THROW(paper_lambda(cfg, -1.0), ParameterError);
}

TEST(Lasso, NullCases) {
    auto inst = make_instance(RadarConfig(2, 2, 16, DopplerMode::DopplerFree), 3, 0.1, 1);
    const auto zero = lasso(inst.op, cvec(cvec::Zero(inst.op.rows())), 1.0);
    EXPECT_EQ(zero.x_hat.norm(), 0.0);
    EXPECT_TRUE(zero.converged);
    const double lam_max = inst.op.adjoint(inst.y).cwiseAbs().maxCoeff();
    const auto big = lasso(inst.op, inst.y, lam_max);
    EXPECT_EQ(big.x_hat.norm(), 0.0);
    EXPECT_TRUE(big.recovered_support.empty());
    EXPECT_TRUE(check_lasso_optimality(inst.op, inst.y, lam_max, big.x_hat).passes(0.0));
    EXPECT_THROW(lasso(inst.op, inst.y, 0.0), ParameterError);
    SolverOptions bad;
    bad.relative_tolerance = 0.0;
    EXPECT_THROW(lasso(inst.op, inst.y, 1.0, bad), ParameterError);
}

TEST(Lasso, OneSparseNoiselessMatchesCoordinateDescent) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto inst = make_instance(RadarConfig(2, 2, 16, DopplerMode::DopplerFree), 1, 0.0, seed);
        const double lambda = 1e-2 * inst.op.adjoint(inst.y).cwiseAbs().maxCoeff();
        const auto res = lasso(inst.op, inst.y, lambda);
        ASSERT_TRUE(res.converged);
        ASSERT_EQ(res.recovered_support.size(), 1u);
        EXPECT_EQ(res.recovered_support[0], inst.scene.support()[0]);
        const cmat a = oracle::dense(inst.cfg, inst.sig);
        const cvec ref = oracle::lasso_cd(a, inst.y, lambda);
        EXPECT_LT((res.x_hat - ref).norm(), 1e-6 * ref.norm());
    }
}

TEST(Lasso, CertificateAndOracleObjective) {
    const RadarConfig configs[] = {RadarConfig(2, 2, 16, DopplerMode::DopplerFree), RadarConfig(2, 2, 8, DopplerMode::Full),
                                   RadarConfig(1, 4, 8, DopplerMode::DopplerFree), RadarConfig(2, 4, 16, DopplerMode::DopplerFree)};
    for (const auto& cfg : configs) {
        auto inst = make_instance(cfg, 3, 0.3, 17);
        const double lambda = 0.1 * inst.op.adjoint(inst.y).cwiseAbs().maxCoeff();
        SolverOptions opts;
        opts.max_iterations = 50000;
        const auto res = lasso(inst.op, inst.y, lambda, opts);
        ASSERT_TRUE(res.converged);
        EXPECT_TRUE(check_lasso_optimality(inst.op, inst.y, lambda, res.x_hat).passes(1e-6 * lambda));
        EXPECT_NEAR(res.residual_norm, (inst.op.forward(res.x_hat) - inst.y).norm(), 1e-12 * inst.y.norm());
        const cmat a = oracle::dense(cfg, inst.sig);
        const cvec ref = oracle::lasso_cd(a, inst.y, lambda);
        const double f_ref = oracle::lasso_objective(a, inst.y, ref, lambda);
        const double f = oracle::lasso_objective(a, inst.y, res.x_hat, lambda);
        EXPECT_LE(std::abs(f - f_ref), 1e-8 * f_ref) << cfg.grid_size();
        EXPECT_NEAR(res.final_objective, f, 1e-10 * f);
    }
}

TEST(Lasso, PerturbationBreaksCertificate) {
    auto inst = make_instance(RadarConfig(2, 2, 16, DopplerMode::DopplerFree), 3, 0.3, 4);
    const double lambda = 0.1 * inst.op.adjoint(inst.y).cwiseAbs().maxCoeff();
    const auto res = lasso(inst.op, inst.y, lambda);
    ASSERT_TRUE(check_lasso_optimality(inst.op, inst.y, lambda, res.x_hat).passes(1e-6 * lambda));
    for (std::int64_t k : {std::int64_t{0}, inst.cfg.linear_index(res.recovered_support.front())}) {
        cvec bumped = res.x_hat;
        bumped[k] += 1e-3;
        EXPECT_FALSE(check_lasso_optimality(inst.op, inst.y, lambda, bumped).passes(1e-6 * lambda));
    }
}

TEST(Lasso, BacktrackingIsMonotoneAndAgrees) {
    auto inst = make_instance(RadarConfig(2, 2, 16, DopplerMode::DopplerFree), 4, 0.3, 9);
    const double lambda = 0.05 * inst.op.adjoint(inst.y).cwiseAbs().maxCoeff();
    SolverOptions opts;
    opts.step_rule = StepRule::Backtracking;
    opts.record_objective = true;
    opts.max_iterations = 20000;
    const auto bt = lasso(inst.op, inst.y, lambda, opts);
    ASSERT_TRUE(bt.converged);
    ASSERT_FALSE(bt.objective_history.empty());
    for (std::size_t k = 1; k < bt.objective_history.size(); ++k)
        ASSERT_LE(bt.objective_history[k], bt.objective_history[k - 1]);
    const auto pg = lasso(inst.op, inst.y, lambda);
    EXPECT_NEAR(bt.final_objective, pg.final_objective, 1e-8 * pg.final_objective);
}

TEST(Lasso, IterationBudgetFlagsNonConvergence) {
    auto inst = make_instance(RadarConfig(2, 2, 16, DopplerMode::DopplerFree), 4, 0.3, 9);
    SolverOptions opts;
    opts.max_iterations = 2;
    const auto res = lasso(inst.op, inst.y, 1e-3, opts);
    EXPECT_FALSE(res.converged);
    EXPECT_EQ(res.iterations, 2);
}

TEST(Debias, ExactAndSingleton) {
    auto inst = make_instance(RadarConfig(2, 2, 16, DopplerMode::DopplerFree), 3, 0.0, 5);
    const auto& S = inst.scene.support();
    const cvec z = debias(inst.op, inst.sig, inst.y, S);
    for (std::size_t k = 0; k < S.size(); ++k)
        EXPECT_LT(std::abs(z[static_cast<std::int64_t>(k)] - inst.scene.coefficients()[k]), 1e-8);
    const auto t = S[0];
    const SupportSet single(inst.cfg, {t});
    const cvec c = inst.op.column(t);
    const cvec z1 = debias(inst.op, inst.sig, inst.y, single);
    EXPECT_LT(std::abs(z1[0] - c.dot(inst.y) / c.squaredNorm()), 1e-12 * std::abs(z1[0]));
}

TEST(Debias, NoisyMatchesPseudoinverse) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto inst = make_instance(RadarConfig(2, 2, 16, DopplerMode::DopplerFree), 2, 0.5, seed);
        const auto& S = inst.scene.support();
        const cvec z = debias(inst.op, inst.sig, inst.y, S);
        const cmat as = inst.op.columns(S.indices());
        const cvec ref = oracle::least_squares(as, inst.y);
        EXPECT_LT((z - ref).norm(), 1e-8 * ref.norm());
        const cvec aty = as.adjoint() * inst.y;
        EXPECT_LE((as.adjoint() * (as * z - inst.y)).cwiseAbs().maxCoeff(), 1e-8 * aty.cwiseAbs().maxCoeff());
    }
}

TEST(Debias, RankDeficientSupportRejected) {
    RadarConfig cfg(1, 1, 2, DopplerMode::DopplerFree);
    cvec s(2);
    s << 1.0, 1.0;  // both shifts coincide
    SignalSet sig({s}, SignalFamily::Rademacher, 0);
    MeasurementOperator op(cfg, sig);
    const SupportSet S(cfg, {{1, 1, 2}, {1, 2, 2}});
    EXPECT_THROW(debias(op, sig, cvec(cvec::Ones(2)), S), SingularityError);
}

TEST(Bpdn, LargeRhoGivesZero) {
    auto inst = make_instance(RadarConfig(2, 2, 16, DopplerMode::DopplerFree), 2, 0.1, 3);
    const auto res = basis_pursuit_denoise(inst.op, inst.y, inst.y.norm());
    EXPECT_EQ(res.x_hat.norm(), 0.0);
    EXPECT_TRUE(res.converged);
    EXPECT_THROW(basis_pursuit_denoise(inst.op, inst.y, -1.0), ParameterError);
}

TEST(Bpdn, NoiselessExactRecovery) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto inst = make_instance(RadarConfig(2, 2, 16, DopplerMode::DopplerFree), 2, 0.0, seed);
        const auto res = basis_pursuit_denoise(inst.op, inst.y, 0.0);
        const cvec x = inst.scene.dense(inst.cfg);
        ASSERT_TRUE(res.converged) << seed;
        EXPECT_LE((res.x_hat - x).norm(), 1e-6 * x.norm()) << seed;
        EXPECT_LE(res.x_hat.cwiseAbs().sum(), x.cwiseAbs().sum() + 1e-6);
        EXPECT_EQ(res.recovered_support, inst.scene.support().indices());
    }
}

TEST(Bpdn, NoisyResidualAndOracle) {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        auto inst = make_instance(RadarConfig(2, 2, 16, DopplerMode::DopplerFree), 3, 0.2, seed);
        const cvec x = inst.scene.dense(inst.cfg);
        const double rho = (inst.y - inst.op.forward(x)).norm();
        const auto res = basis_pursuit_denoise(inst.op, inst.y, rho);
        ASSERT_TRUE(res.converged);
        EXPECT_LE(std::abs(res.residual_norm - rho), std::max(1e-4 * inst.y.norm(), 1e-8));
        // x is feasible for this rho, so the minimal l1 norm is at most ||x||_1 (up to the residual slack).
        EXPECT_LE(res.x_hat.cwiseAbs().sum(), x.cwiseAbs().sum() * (1.0 + 1e-2));
        const cmat a = oracle::dense(inst.cfg, inst.sig);
        const cvec ref = oracle::lasso_cd(a, inst.y, res.lambda);
        const double f_ref = oracle::lasso_objective(a, inst.y, ref, res.lambda);
        EXPECT_LE(std::abs(oracle::lasso_objective(a, inst.y, res.x_hat, res.lambda) - f_ref), 1e-6 * f_ref);
    }
}

TEST(DeclareSuccess, Examples) {
    RadarConfig cfg(2, 2, 8, DopplerMode::DopplerFree);
    const auto scene = make_scene(SupportSet(cfg, {{1, 2, 8}, {3, 4, 8}}), 1.0, 2);
    const cvec x = scene.dense(cfg);
    const auto same = declare_success(cfg, scene, x, 0.5);
    EXPECT_TRUE(same.success);
    EXPECT_TRUE(same.support_exact);
    EXPECT_EQ(same.linf_error, 0.0);
    const auto zero = declare_success(cfg, scene, cvec(cvec::Zero(cfg.grid_size())), 0.5);
    EXPECT_FALSE(zero.success);
    EXPECT_FALSE(zero.support_exact);
    // Half-amplitude accuracy on every coordinate is success and preserves the support.
    cvec close = x;
    close[1] *= 0.6;
    close[5] = 0.45;
    const auto near = declare_success(cfg, scene, close, 0.5);
    EXPECT_TRUE(near.success);
    EXPECT_TRUE(near.support_exact);
    close[6] = 0.55;
    EXPECT_FALSE(declare_success(cfg, scene, close, 0.5).success);
    EXPECT_THROW(declare_success(cfg, scene, x, 0.0), ParameterError);
}
