#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mimocs/errors.hpp"
#include "mimocs/measurement_operator.hpp"
#include "mimocs/parallel.hpp"
#include "mimocs/radar_config.hpp"
#include "mimocs/rng.hpp"
#include "mimocs/signals.hpp"
#include "mimocs/support.hpp"

namespace mimocs {

/// Gram matrix of the normalized columns on a support, <A~_theta, A~_theta'>.
struct GramReport {
    cmat gram;
    /// ||A~_S* A~_S - Id||_{2->2}
    double deviation = 0.0;
    /// Same quantity per angle class (0 for empty classes).
    std::vector<double> block_deviations;
    /// Largest normalized off-diagonal magnitude inside one class.
    double coherence_within = 0.0;
};

/// Closed-form entry <A~_theta, A~_theta'> from the signal samples:
/// zero across angle classes, and within a class
///   (N_T N_t)^-1 sum_{i,j} e^{2 pi i d_T dbeta [beta'(j-1) - beta(i-1)]}
///       sum_{a,b: a-b = tau'-tau mod N_t} e^{2 pi i (f'-f)(tau+a-1)/N_t} conj(s_{i,a}) s_{j,b}.
inline cplx gram_entry_closed_form(const RadarConfig& cfg, const SignalSet& sig, const GridIndex& t,
                                   const GridIndex& tp) {
    if (cfg.angle_class(t.beta) != cfg.angle_class(tp.beta)) return {};
    const std::int64_t nt = cfg.n_samples();
    const int ntx = cfg.n_transmit();
    cplx total{};
    for (int i = 1; i <= ntx; ++i) {
        const auto& si = sig[static_cast<std::size_t>(i - 1)];
        const cplx phase_i = std::conj(cfg.transmit_phase(t.beta, i));
        for (int j = 1; j <= ntx; ++j) {
            const auto& sj = sig[static_cast<std::size_t>(j - 1)];
            const cplx phase_ij = phase_i * cfg.transmit_phase(tp.beta, j);
            cplx inner{};
            for (std::int64_t a = 0; a < nt; ++a) {
                const std::int64_t b = positive_mod(a - tp.tau + t.tau, nt);
                inner += unit_phase((tp.f - t.f) * (t.tau + a), nt) * std::conj(si[a]) * sj[b];
            }
            total += phase_ij * inner;
        }
    }
    return total / (static_cast<double>(ntx) * static_cast<double>(nt));
}

/// Largest |eigenvalue| of (gram - Id) by a Hermitian eigensolve.
inline double spectral_deviation(const cmat& gram) {
    if (gram.rows() != gram.cols()) throw DomainError("spectral_deviation: matrix is not square");
    if (gram.size() == 0) return 0.0;
    const double scale = std::max(1.0, gram.cwiseAbs().maxCoeff());
    if ((gram - gram.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw DomainError("spectral_deviation: matrix is not Hermitian");
    const cmat h = 0.5 * (gram + gram.adjoint()) - cmat::Identity(gram.rows(), gram.cols());
    Eigen::SelfAdjointEigenSolver<cmat> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// ||gram - Id|| by power iteration on (gram - Id)^2, for matrices too large
/// to eigensolve and as an independent check of spectral_deviation.
inline double spectral_deviation_power(const cmat& gram, std::uint64_t seed = 1, int max_iterations = 20000,
                                       double tolerance = 1e-13) {
    if (gram.rows() != gram.cols()) throw DomainError("spectral_deviation_power: matrix is not square");
    if (gram.size() == 0) return 0.0;
    const cmat h = gram - cmat::Identity(gram.rows(), gram.cols());
    RandomStream rng(seed, StreamTag::PowerIteration);
    cvec v(gram.rows());
    for (auto& e : v) e = rng.complex_gaussian();
    v.normalize();
    double estimate = 0.0;
    for (int it = 0; it < max_iterations; ++it) {
        cvec w = h.adjoint() * (h * v);
        const double nrm = w.norm();
        if (nrm == 0.0) return 0.0;
        const double next = std::sqrt(nrm);
        v = w / nrm;
        if (std::abs(next - estimate) <= tolerance * next) return next;
        estimate = next;
    }
    return estimate;
}

/// Spectral deviation with the eigensolve/power-iteration split at 4096.
inline double operator_deviation(const cmat& gram) {
    return gram.rows() <= 4096 ? spectral_deviation(gram) : spectral_deviation_power(gram);
}

namespace detail {

inline GramReport finish_gram_report(const SupportSet& support, cmat gram) {
    GramReport rep;
    rep.block_deviations.assign(static_cast<std::size_t>(support.n_classes()), 0.0);
    for (std::int64_t r = 0; r < support.n_classes(); ++r) {
        const auto& members = support.angle_class(r);
        if (members.empty()) continue;
        const auto n = static_cast<std::int64_t>(members.size());
        cmat block(n, n);
        for (std::int64_t p = 0; p < n; ++p)
            for (std::int64_t q = 0; q < n; ++q)
                block(p, q) = gram(static_cast<std::int64_t>(members[p]), static_cast<std::int64_t>(members[q]));
        rep.block_deviations[static_cast<std::size_t>(r)] = spectral_deviation(block);
        for (std::int64_t p = 0; p < n; ++p)
            for (std::int64_t q = p + 1; q < n; ++q) {
                const double denom = std::sqrt(std::abs(block(p, p)) * std::abs(block(q, q)));
                if (denom > 0.0) rep.coherence_within = std::max(rep.coherence_within, std::abs(block(p, q)) / denom);
            }
    }
    rep.deviation = *std::max_element(rep.block_deviations.begin(), rep.block_deviations.end());
    rep.gram = std::move(gram);
    return rep;
}

} // namespace detail

inline GramReport gram_closed_form(const RadarConfig& cfg, const SignalSet& sig, const SupportSet& support) {
    if (support.empty()) throw DomainError("gram_closed_form: support set is empty");
    sig.check_compatible(cfg);
    const auto n = static_cast<std::int64_t>(support.size());
    cmat g = cmat::Zero(n, n);
    for (std::int64_t p = 0; p < n; ++p) {
        g(p, p) = gram_entry_closed_form(cfg, sig, support[p], support[p]).real();
        for (std::int64_t q = p + 1; q < n; ++q) {
            g(p, q) = gram_entry_closed_form(cfg, sig, support[p], support[q]);
            g(q, p) = std::conj(g(p, q));
        }
    }
    return detail::finish_gram_report(support, std::move(g));
}

/// Gram matrix from explicitly built normalized columns.
inline cmat gram_direct(const MeasurementOperator& op, const SupportSet& support) {
    const cmat cols = op.columns(support.indices()) / op.config().normalization();
    return cols.adjoint() * cols;
}

/// The matrix Y^{(i,a),(j,b)} over the given indices (all from one angle
/// class), 1-based i, j in [N_T] and a, b in [N_t]:
///   [Y]_{theta,theta'} = [a-b = tau'-tau mod N_t] (N_T N_t)^-1
///       e^{2 pi i (f'-f)(tau+a-1)/N_t} e^{2 pi i d_T dbeta [beta'(j-1) - beta(i-1)]}.
inline cmat y_matrix(const RadarConfig& cfg, const std::vector<GridIndex>& indices, int i, std::int64_t a, int j,
                     std::int64_t b) {
    const auto n = static_cast<std::int64_t>(indices.size());
    const std::int64_t nt = cfg.n_samples();
    cmat y = cmat::Zero(n, n);
    for (std::int64_t p = 0; p < n; ++p)
        for (std::int64_t q = 0; q < n; ++q) {
            const auto& t = indices[p];
            const auto& tp = indices[q];
            if (positive_mod(a - b - (tp.tau - t.tau), nt) != 0) continue;
            y(p, q) = unit_phase((tp.f - t.f) * (t.tau + a - 1), nt) * std::conj(cfg.transmit_phase(t.beta, i)) *
                      cfg.transmit_phase(tp.beta, j) / (static_cast<double>(cfg.n_transmit()) * nt);
        }
    return y;
}

/// Literal evaluation of the five sufficient conditions for exact support
/// recovery by the LASSO, on the normalized model y~ = A~ x + n~.
struct ConditionsReport {
    bool c1 = false, c2 = false, c3 = false, c4 = false, c5 = false;
    /// ||(A~_S* A~_S)^-1||
    double c1_value = std::numeric_limits<double>::infinity();
    /// ||A~*_{S^c} A~_S G^-1 sgn(x_S)||_inf
    double c2_value = std::numeric_limits<double>::quiet_NaN();
    /// ||G^-1 A~_S* n~||_inf
    double c3_value = std::numeric_limits<double>::quiet_NaN();
    /// ||A~*_{S^c} (Id - Pi_S) n~||_inf
    double c4_value = std::numeric_limits<double>::quiet_NaN();
    /// ||G^-1 sgn(x_S)||_inf
    double c5_value = std::numeric_limits<double>::quiet_NaN();
    double mu = 0.0;

    bool all() const { return c1 && c2 && c3 && c4 && c5; }
};

inline ConditionsReport check_conditions(const RadarConfig& cfg, const SignalSet& sig, const TargetScene& scene,
                                         const cvec& noise, double sigma) {
    const auto& support = scene.support();
    if (support.empty()) throw DomainError("check_conditions: scene has empty support");
    if (noise.size() != cfg.n_measurements()) throw DomainError("check_conditions: noise length mismatch");
    const MeasurementOperator op(cfg, sig);
    const double norm = cfg.normalization();
    const auto n = static_cast<std::int64_t>(support.size());

    ConditionsReport rep;
    rep.mu = sigma / norm * std::sqrt(2.0 * std::log(static_cast<double>(cfg.grid_size())));

    const cmat g = gram_closed_form(cfg, sig, support).gram;
    Eigen::SelfAdjointEigenSolver<cmat> es(g);
    const double lmin = es.eigenvalues().minCoeff();
    const double lmax = es.eigenvalues().maxCoeff();
    if (!(lmin > 1e-12 * std::max(lmax, 1.0))) return rep;
    rep.c1_value = 1.0 / lmin;
    rep.c1 = rep.c1_value <= 2.0;
    auto solve = [&](const cvec& rhs) -> cvec {
        return es.eigenvectors() * (es.eigenvalues().cwiseInverse().asDiagonal() * (es.eigenvectors().adjoint() * rhs));
    };

    auto apply_s = [&](const cvec& z) {  // A~_S z
        std::vector<SparseEntry> e;
        for (std::int64_t k = 0; k < n; ++k) e.push_back({support[k], z[k]});
        return cvec(op.forward(e) / norm);
    };
    auto restrict_s = [&](const cvec& full) {
        cvec out(n);
        for (std::int64_t k = 0; k < n; ++k) out[k] = full[support.linear_indices()[k]];
        return out;
    };
    auto max_off_support = [&](const cvec& full) {
        double m = 0.0;
        for (std::int64_t p = 0; p < full.size(); ++p)
            if (!support.contains_linear(p)) m = std::max(m, std::abs(full[p]));
        return m;
    };

    cvec sgn(n);
    for (std::int64_t k = 0; k < n; ++k) sgn[k] = scene.coefficients()[k] / std::abs(scene.coefficients()[k]);
    const cvec scaled_noise = noise / norm;

    const cvec ginv_sgn = solve(sgn);
    rep.c2_value = max_off_support(op.adjoint(apply_s(ginv_sgn)) / norm);
    rep.c2 = rep.c2_value < 0.25;

    const cvec as_noise = restrict_s(op.adjoint(scaled_noise) / norm);
    const cvec coeff = solve(as_noise);
    rep.c3_value = coeff.cwiseAbs().maxCoeff();
    rep.c3 = rep.c3_value <= 2.0 * rep.mu;

    const cvec residual = scaled_noise - apply_s(coeff);
    rep.c4_value = max_off_support(op.adjoint(residual) / norm);
    rep.c4 = rep.c4_value <= std::sqrt(2.0) * rep.mu;

    rep.c5_value = ginv_sgn.cwiseAbs().maxCoeff();
    rep.c5 = rep.c5_value <= 3.0;
    return rep;
}

/// Number of k-subsets of an n-set, saturating at max().
inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    unsigned __int128 r = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i;
        if (r > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
    }
    return static_cast<std::uint64_t>(r);
}

/// Exact restricted isometry constant of A~ by enumerating every support of
/// size s: delta_s = max_S ||A~_S* A~_S - Id||.
inline double exact_rip_constant(const RadarConfig& cfg, const SignalSet& sig, std::int64_t s,
                                 std::uint64_t support_cap = 2'000'000) {
    const std::int64_t n = cfg.grid_size();
    if (s < 1 || s > n) throw ParameterError("exact_rip_constant: s must lie in [1, N]");
    const auto count = binomial(static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(s));
    if (count > support_cap)
        throw SizeError("exact_rip_constant: C(" + std::to_string(n) + "," + std::to_string(s) +
                        ") supports exceed the enumeration cap " + std::to_string(support_cap));
    const MeasurementOperator op(cfg, sig);
    const cmat a = op.densify() / cfg.normalization();
    const cmat full = a.adjoint() * a;

    std::vector<std::int64_t> pick(static_cast<std::size_t>(s));
    for (std::int64_t k = 0; k < s; ++k) pick[k] = k;
    double delta = 0.0;
    cmat sub(s, s);
    for (;;) {
        for (std::int64_t p = 0; p < s; ++p)
            for (std::int64_t q = 0; q < s; ++q) sub(p, q) = full(pick[p], pick[q]);
        delta = std::max(delta, spectral_deviation(sub));
        std::int64_t k = s - 1;
        while (k >= 0 && pick[k] == n - s + k) --k;
        if (k < 0) break;
        ++pick[k];
        for (std::int64_t q = k + 1; q < s; ++q) pick[q] = pick[q - 1] + 1;
    }
    return delta;
}

/// Empirical survival curve P(||A~_S* A~_S - Id|| >= delta).
struct TailProbeResult {
    std::vector<double> deltas;
    std::vector<double> survival;
    /// Per-trial deviations, in trial order.
    std::vector<double> deviations;
    double median = 0.0;
};

/// 50 log-spaced points in [1e-3, 2].
inline std::vector<double> default_delta_grid() {
    std::vector<double> grid(50);
    const double lo = std::log(1e-3), hi = std::log(2.0);
    for (int k = 0; k < 50; ++k) grid[k] = std::exp(lo + (hi - lo) * k / 49.0);
    return grid;
}

inline double median_of(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Draws n_trials independent (signals, support) pairs and records the
/// deviation of the normalized Gram from identity. eta = nullopt samples
/// unconstrained supports.
inline TailProbeResult tail_probe_opnorm(const RadarConfig& cfg, SignalFamily family, std::int64_t s,
                                         std::optional<std::int64_t> eta, std::int64_t n_trials, std::uint64_t seed,
                                         int threads = default_thread_count()) {
    if (n_trials < 1) throw ParameterError("tail_probe_opnorm: n_trials must be positive");
    // Validate the sampler parameters before spawning work.
    if (eta) (void)sample_balanced_support(cfg, s, *eta, seed);
    else (void)sample_unconstrained_support(cfg, s, seed);

    TailProbeResult res;
    res.deviations.assign(static_cast<std::size_t>(n_trials), 0.0);
    parallel_for(n_trials, threads, [&](std::int64_t t) {
        const auto trial_seed = derive_seed(seed, StreamTag::Probe, {static_cast<std::uint64_t>(t)});
        const SignalSet sig = generate_signals(cfg, family, trial_seed);
        const SupportSet support =
            eta ? sample_balanced_support(cfg, s, *eta, trial_seed) : sample_unconstrained_support(cfg, s, trial_seed);
        res.deviations[static_cast<std::size_t>(t)] = gram_closed_form(cfg, sig, support).deviation;
    });
    res.deltas = default_delta_grid();
    for (double d : res.deltas) {
        const auto hits = std::count_if(res.deviations.begin(), res.deviations.end(), [&](double v) { return v >= d; });
        res.survival.push_back(static_cast<double>(hits) / static_cast<double>(n_trials));
    }
    res.median = median_of(res.deviations);
    return res;
}

} // namespace mimocs
