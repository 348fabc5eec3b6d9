#include <gtest/gtest.h>

#include <set>

#include "mimocs/measurement_operator.hpp"
#include "mimocs/radar_config.hpp"
#include "mimocs/rng.hpp"
#include "mimocs/signals.hpp"
#include "oracles.hpp"

using namespace mimocs;

namespace {

cvec random_vector(std::int64_t n, std::uint64_t seed) {
    RandomStream rng(seed);
    cvec v(n);
    for (auto& x : v) x = rng.complex_gaussian();
    return v;
}

const SignalFamily kFamilies[] = {SignalFamily::ComplexGaussian, SignalFamily::Rademacher, SignalFamily::Steinhaus};

} // namespace

TEST(RadarConfig, FixedSpacingsAreExact) {
    for (int nt : {1, 2, 3, 8})
        for (int nr : {1, 2, 5, 8}) {
            RadarConfig cfg(nt, nr, 4);
            EXPECT_EQ(cfg.d_transmit(), (Rational{1, 2}));
            EXPECT_EQ(cfg.d_receive(), (Rational{nt, 2}));
            EXPECT_EQ(cfg.delta_beta(), (Rational{2, std::int64_t{nt} * nr}));
            // d_R dbeta N_R is an integer, so the receive phase is N_R-periodic.
            const Rational period = cfg.d_receive() * cfg.delta_beta() * Rational{nr, 1};
            EXPECT_EQ(period, (Rational{1, 1}));
            for (std::int64_t beta = 1; beta <= cfg.n_angles(); ++beta)
                for (int j = 1; j <= nr; ++j)
                    EXPECT_EQ(cfg.receive_phase(beta + nr, j), cfg.receive_phase(beta, j));
        }
}

TEST(RadarConfig, GridSizes) {
    RadarConfig full(2, 3, 5, DopplerMode::Full), free(2, 3, 5, DopplerMode::DopplerFree);
    EXPECT_EQ(full.grid_size(), 2 * 3 * 25);
    EXPECT_EQ(free.grid_size(), 2 * 3 * 5);
    EXPECT_EQ(full.n_measurements(), 15);
    EXPECT_EQ(free.n_measurements(), 15);
    EXPECT_DOUBLE_EQ(full.normalization(), std::sqrt(30.0));
    EXPECT_THROW(RadarConfig(0, 1, 1), ParameterError);
    EXPECT_THROW(RadarConfig(1, -2, 1), ParameterError);
}

TEST(RadarConfig, LinearizationIsBijective) {
    for (auto mode : {DopplerMode::Full, DopplerMode::DopplerFree}) {
        RadarConfig cfg(2, 3, 4, mode);
        std::set<std::int64_t> seen;
        for (std::int64_t k = 0; k < cfg.grid_size(); ++k) {
            const auto t = cfg.grid_index(k);
            ASSERT_TRUE(cfg.contains(t));
            ASSERT_EQ(cfg.linear_index(t), k);
            seen.insert(k);
        }
        EXPECT_EQ(static_cast<std::int64_t>(seen.size()), cfg.grid_size());
        EXPECT_THROW(cfg.grid_index(cfg.grid_size()), DomainError);
    }
    RadarConfig full(2, 2, 4);
    EXPECT_EQ(full.linear_index({2, 3, 4}), ((2 - 1) * 4 + (3 - 1)) * 4 + (4 - 1));
    RadarConfig free(2, 2, 4, DopplerMode::DopplerFree);
    EXPECT_EQ(free.linear_index({2, 3, 4}), (2 - 1) * 4 + (3 - 1));
    EXPECT_THROW(free.linear_index({1, 1, 1}), DomainError);
    EXPECT_THROW(full.linear_index({5, 1, 1}), DomainError);
}

TEST(SignalOps, CircularShift) {
    cvec s(4);
    s << 1, 2, 3, 4;
    EXPECT_EQ(circular_shift(s, 0), s);
    EXPECT_EQ(circular_shift(s, 4), s);
    cvec expected(4);
    expected << 4, 1, 2, 3;
    EXPECT_EQ(circular_shift(s, 1), expected);
    EXPECT_EQ(circular_shift(s, -3), expected);
    EXPECT_EQ(circular_shift(s, 1), oracle::shift_modulate(s, 1, 0));
}

TEST(SignalOps, Modulate) {
    const cvec s = random_vector(6, 3);
    EXPECT_EQ(modulate(s, 0), s);
    EXPECT_LT((modulate(s, 6) - s).norm(), 1e-14);
    cvec ones = cvec::Ones(2);
    const cvec m = modulate(ones, 1);
    EXPECT_NEAR(std::abs(m[0] - cplx(1, 0)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(m[1] - cplx(-1, 0)), 0.0, 1e-15);
    for (int f = -3; f < 9; ++f) EXPECT_LT((modulate(s, f) - oracle::shift_modulate(s, 0, f)).norm(), 1e-13);
}

TEST(Signals, RegenerationIsBitIdentical) {
    RadarConfig cfg(3, 2, 16);
    for (auto fam : kFamilies) {
        const auto a = generate_signals(cfg, fam, 99), b = generate_signals(cfg, fam, 99);
        for (int i = 0; i < 3; ++i) EXPECT_EQ(a[i], b[i]);
        const auto c = generate_signals(cfg, fam, 100);
        EXPECT_NE(a[0], c[0]);
    }
}

TEST(Signals, FamilyInvariants) {
    RadarConfig cfg(2, 1, 4096);
    const auto rad = generate_signals(cfg, SignalFamily::Rademacher, 5);
    const auto ste = generate_signals(cfg, SignalFamily::Steinhaus, 5);
    const auto gau = generate_signals(cfg, SignalFamily::ComplexGaussian, 5);
    for (int i = 0; i < 2; ++i)
        for (int k = 0; k < 4096; ++k) {
            ASSERT_TRUE(rad[i][k] == cplx(1, 0) || rad[i][k] == cplx(-1, 0));
            ASSERT_NEAR(std::abs(ste[i][k]), 1.0, 1e-15);
        }
    double p = 0.0, re2 = 0.0, im2 = 0.0;
    cplx mean{};
    for (int k = 0; k < 4096; ++k) {
        p += std::norm(gau[0][k]);
        re2 += gau[0][k].real() * gau[0][k].real();
        im2 += gau[0][k].imag() * gau[0][k].imag();
        mean += gau[0][k];
    }
    EXPECT_NEAR(p / 4096, 1.0, 0.05);
    EXPECT_NEAR(re2 / 4096, 0.5, 0.05);
    EXPECT_NEAR(im2 / 4096, 0.5, 0.05);
    EXPECT_LT(std::abs(mean / 4096.0), 0.05);
}

TEST(Signals, IncompatibleSetRejected) {
    RadarConfig cfg(2, 2, 8);
    const auto sig = generate_signals(RadarConfig(3, 2, 8), SignalFamily::Rademacher, 1);
    EXPECT_THROW(MeasurementOperator(cfg, sig), DomainError);
}

TEST(Column, MatchesDefinitionAllFamiliesAndModes) {
    for (auto mode : {DopplerMode::Full, DopplerMode::DopplerFree})
        for (auto fam : kFamilies)
            for (auto [nt, nr, n] : {std::tuple{1, 1, 4}, {2, 3, 5}, {3, 2, 4}, {4, 4, 8}}) {
                RadarConfig cfg(nt, nr, n, mode);
                const auto sig = generate_signals(cfg, fam, 11);
                MeasurementOperator op(cfg, sig);
                for (std::int64_t k = 0; k < cfg.grid_size(); k += 3) {
                    const auto t = cfg.grid_index(k);
                    const cvec ref = oracle::column(cfg, sig, t);
                    ASSERT_LT((op.column(t) - ref).norm(), 1e-12 * ref.norm()) << RadarConfig::describe(t);
                }
            }
}

TEST(Column, DegenerateArrayIsShiftModulate) {
    RadarConfig cfg(1, 1, 8);
    const auto sig = generate_signals(cfg, SignalFamily::ComplexGaussian, 2);
    MeasurementOperator op(cfg, sig);
    for (std::int64_t tau = 1; tau <= 8; ++tau)
        for (std::int64_t f = 1; f <= 8; ++f)
            EXPECT_LT((op.column({1, tau, f}) - modulate(circular_shift(sig[0], tau), f)).norm(), 1e-13);
}

TEST(Column, OutOfGridRejected) {
    RadarConfig cfg(2, 2, 4);
    MeasurementOperator op(cfg, generate_signals(cfg, SignalFamily::Steinhaus, 1));
    EXPECT_THROW(op.column({0, 1, 1}), DomainError);
    EXPECT_THROW(op.column({1, 5, 1}), DomainError);
    RadarConfig free(2, 2, 4, DopplerMode::DopplerFree);
    MeasurementOperator opf(free, generate_signals(free, SignalFamily::Steinhaus, 1));
    EXPECT_THROW(opf.column({1, 1, 2}), DomainError);
}

TEST(Column, Periodicity) {
    RadarConfig cfg(2, 3, 5);
    const auto sig = generate_signals(cfg, SignalFamily::ComplexGaussian, 8);
    MeasurementOperator op(cfg, sig);
    const std::int64_t na = cfg.n_angles(), n = cfg.n_samples();
    for (std::int64_t k = 0; k < cfg.grid_size(); k += 7) {
        const auto t = cfg.grid_index(k);
        const cvec c = op.column(t);
        for (GridIndex u : {GridIndex{t.beta + na, t.tau, t.f}, GridIndex{t.beta, t.tau + n, t.f},
                            GridIndex{t.beta, t.tau, t.f - n}, GridIndex{t.beta - 2 * na, t.tau - n, t.f + n}}) {
            EXPECT_LT((oracle::column(cfg, sig, u) - c).norm(), 1e-12 * c.norm());
            EXPECT_LT((op.column(cfg.wrap(u)) - c).norm(), 1e-14 * c.norm());
        }
    }
}

TEST(Column, ExpectedSquaredNormMonteCarlo) {
    RadarConfig cfg(2, 2, 8);
    const int draws = 10000;
    const GridIndex t{3, 5, 2};
    double sum = 0.0, sum2 = 0.0;
    for (int d = 0; d < draws; ++d) {
        MeasurementOperator op(cfg, generate_signals(cfg, SignalFamily::ComplexGaussian, 1000 + d));
        const double v = op.column(t).squaredNorm();
        sum += v;
        sum2 += v * v;
    }
    const double mean = sum / draws, sd = std::sqrt(sum2 / draws - mean * mean);
    EXPECT_NEAR(mean, 2.0 * 2.0 * 8.0, 5.0 * sd / std::sqrt(static_cast<double>(draws)));
}

TEST(Column, CrossClassInnerProductsVanish) {
    for (auto fam : kFamilies) {
        RadarConfig cfg(2, 4, 8);
        MeasurementOperator op(cfg, generate_signals(cfg, fam, 21));
        RandomStream rng(4);
        for (int trial = 0; trial < 300; ++trial) {
            const auto a = cfg.grid_index(rng.uniform_int(0, cfg.grid_size() - 1));
            const auto b = cfg.grid_index(rng.uniform_int(0, cfg.grid_size() - 1));
            if (cfg.angle_class(a.beta) == cfg.angle_class(b.beta)) continue;
            const cvec ca = op.column(a), cb = op.column(b);
            ASSERT_LE(std::abs(ca.dot(cb)), 1e-12 * ca.norm() * cb.norm());
        }
    }
}

TEST(Forward, SimpleCases) {
    RadarConfig cfg(2, 2, 8);
    MeasurementOperator op(cfg, generate_signals(cfg, SignalFamily::ComplexGaussian, 6));
    EXPECT_EQ(op.forward(cvec(cvec::Zero(cfg.grid_size()))).norm(), 0.0);
    for (std::int64_t k : {0, 17, 255}) {
        const auto t = cfg.grid_index(k);
        const cvec e = cvec::Unit(cfg.grid_size(), k);
        EXPECT_LT((op.forward(e) - op.column(t)).norm(), 1e-12 * op.column(t).norm());
        const SparseEntry one{t, 1.0};
        EXPECT_LT((op.forward(std::span(&one, 1)) - op.column(t)).norm(), 1e-12 * op.column(t).norm());
    }
    EXPECT_THROW(op.forward(cvec(cvec::Zero(5))), DomainError);
    EXPECT_THROW(op.adjoint(cvec(cvec::Zero(5))), DomainError);
}

TEST(Forward, SparseAndDenseMatchOracleMatrix) {
    for (auto mode : {DopplerMode::Full, DopplerMode::DopplerFree}) {
        RadarConfig cfg(2, 2, 8, mode);
        const auto sig = generate_signals(cfg, SignalFamily::ComplexGaussian, 7);
        MeasurementOperator op(cfg, sig);
        const cmat a = oracle::dense(cfg, sig);
        RandomStream rng(77);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<SparseEntry> entries;
            cvec x = cvec::Zero(cfg.grid_size());
            std::set<std::int64_t> used;
            while (used.size() < 3) used.insert(rng.uniform_int(0, cfg.grid_size() - 1));
            for (auto k : used) {
                x[k] = rng.complex_gaussian();
                entries.push_back({cfg.grid_index(k), x[k]});
            }
            const cvec ref = a * x;
            EXPECT_LT((op.forward(entries) - ref).norm(), 1e-10 * ref.norm());
            EXPECT_LT((op.forward(x) - ref).norm(), 1e-10 * ref.norm());
        }
    }
}

TEST(Adjoint, SimpleCases) {
    RadarConfig cfg(2, 2, 8);
    MeasurementOperator op(cfg, generate_signals(cfg, SignalFamily::Rademacher, 6));
    EXPECT_EQ(op.adjoint(cvec(cvec::Zero(cfg.n_measurements()))).norm(), 0.0);
    for (std::int64_t k : {0, 99, 200}) {
        const auto t = cfg.grid_index(k);
        const cvec c = op.column(t);
        EXPECT_NEAR(std::abs(op.adjoint(c)[k] - c.squaredNorm()), 0.0, 1e-10 * c.squaredNorm());
    }
}

TEST(Adjoint, InnerProductIdentity) {
    for (auto mode : {DopplerMode::Full, DopplerMode::DopplerFree}) {
        RadarConfig cfg(2, 2, 8, mode);
        MeasurementOperator op(cfg, generate_signals(cfg, SignalFamily::Steinhaus, 9));
        for (std::uint64_t t = 0; t < 50; ++t) {
            const cvec x = random_vector(cfg.grid_size(), 2 * t), y = random_vector(cfg.n_measurements(), 2 * t + 1);
            EXPECT_LE(std::abs(op.forward(x).dot(y) - x.dot(op.adjoint(y))), 1e-10 * x.norm() * y.norm());
        }
    }
}

TEST(Densify, SmallestConfigColumnsAreShifts) {
    RadarConfig cfg(1, 1, 2, DopplerMode::DopplerFree);
    const auto sig = generate_signals(cfg, SignalFamily::ComplexGaussian, 3);
    const cmat a = MeasurementOperator(cfg, sig).densify();
    ASSERT_EQ(a.rows(), 2);
    ASSERT_EQ(a.cols(), 2);
    const cvec& s = sig[0];
    // tau = 1 swaps the samples, tau = 2 is the zero shift.
    EXPECT_LT((a.col(0) - circular_shift(s, 1)).norm(), 1e-15);
    EXPECT_LT((a.col(1) - s).norm(), 1e-15);
    cvec swapped(2);
    swapped << s[1], s[0];
    EXPECT_EQ(circular_shift(s, 1), swapped);
}

TEST(Densify, ShapeColumnsAndCap) {
    RadarConfig cfg(2, 2, 4);
    const auto sig = generate_signals(cfg, SignalFamily::ComplexGaussian, 3);
    MeasurementOperator op(cfg, sig);
    const cmat a = op.densify();
    EXPECT_EQ(a.rows(), 8);
    EXPECT_EQ(a.cols(), 64);
    for (std::int64_t k = 0; k < cfg.grid_size(); ++k) {
        const cvec e = cvec::Unit(cfg.grid_size(), k);
        EXPECT_EQ(cvec(a * e), op.column(cfg.grid_index(k)));
    }
    EXPECT_THROW(op.densify(100), SizeError);
    RadarConfig big(8, 8, 64);
    MeasurementOperator opb(big, generate_signals(big, SignalFamily::Rademacher, 1));
    EXPECT_THROW(opb.densify(), SizeError);
}

TEST(XTheta, DegenerateAndConsistent) {
    RadarConfig one(1, 1, 4);
    const cmat x = build_x_theta(one, {1, 2, 3});
    for (int c = 0; c < 4; ++c) {
        const cvec e = cvec::Unit(4, c);
        EXPECT_LT((x * e - modulate(circular_shift(e, 2), 3)).norm(), 1e-14);
    }
    for (auto [nt, nr, n] : {std::tuple{2, 2, 4}, {3, 2, 5}, {2, 4, 4}}) {
        RadarConfig cfg(nt, nr, n);
        const auto sig = generate_signals(cfg, SignalFamily::ComplexGaussian, 5);
        MeasurementOperator op(cfg, sig);
        for (std::int64_t k = 0; k < cfg.grid_size(); k += 5) {
            const auto t = cfg.grid_index(k);
            const cmat xt = build_x_theta(cfg, t);
            EXPECT_LT((xt * sig.stacked() - op.column(t)).norm(), 1e-12 * std::max(1.0, op.column(t).norm()));
            EXPECT_LT((xt - oracle::x_theta(nt, nr, n, t.beta, t.tau, t.f)).norm(), 1e-12);
        }
    }
    RadarConfig big(8, 8, 64);
    EXPECT_THROW(build_x_theta(big, {1, 1, 1}), SizeError);
}

TEST(Isotropy, MeanSquaredNormOfScaledOperatorIsOne) {
    RadarConfig cfg(2, 2, 8);
    cvec x = cvec::Zero(cfg.grid_size());
    x[3] = {0.6, 0.0};
    x[77] = {0.0, 0.48};
    x[200] = {-0.64, 0.0};
    x /= x.norm();
    const int m = 10000;
    double sum = 0.0;
    for (int d = 0; d < m; ++d) {
        MeasurementOperator op(cfg, generate_signals(cfg, SignalFamily::ComplexGaussian, 50000 + d));
        sum += op.forward(x).squaredNorm() / (cfg.normalization() * cfg.normalization());
    }
    EXPECT_LE(std::abs(sum / m - 1.0), 5.0 / std::sqrt(static_cast<double>(m)));
}

TEST(Rng, DerivedStreamsAreDistinctAndStable) {
    EXPECT_EQ(derive_seed(1, StreamTag::Noise, {2, 3}), derive_seed(1, StreamTag::Noise, {2, 3}));
    EXPECT_NE(derive_seed(1, StreamTag::Noise, {2, 3}), derive_seed(1, StreamTag::Noise, {3, 2}));
    EXPECT_NE(derive_seed(1, StreamTag::Noise), derive_seed(1, StreamTag::Signals));
    EXPECT_NE(derive_seed(1, StreamTag::Noise), derive_seed(2, StreamTag::Noise));
    RandomStream a(7, StreamTag::Trial, {1}), b(7, StreamTag::Trial, {1});
    for (int k = 0; k < 10; ++k) EXPECT_EQ(a.complex_gaussian(), b.complex_gaussian());
}

TEST(Phases, UnitPhaseIsExactAtQuarterTurns) {
    EXPECT_EQ(unit_phase(0, 5), cplx(1, 0));
    EXPECT_EQ(unit_phase(1, 4), cplx(0, 1));
    EXPECT_EQ(unit_phase(2, 4), cplx(-1, 0));
    EXPECT_EQ(unit_phase(-1, 4), cplx(0, -1));
    EXPECT_EQ(unit_phase(7, 7), cplx(1, 0));
    EXPECT_LT(std::abs(unit_phase(1, 3) - oracle::cis(1.0 / 3.0)), 1e-15);
}
