#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mimocs/analysis.hpp"
#include "mimocs/errors.hpp"
#include "mimocs/measurement_operator.hpp"
#include "mimocs/rng.hpp"
#include "mimocs/support.hpp"

namespace mimocs {

enum class StepRule { PowerIterationLipschitz, Backtracking };

struct SolverOptions {
    int max_iterations = 5000;
    double relative_tolerance = 1e-8;
    StepRule step_rule = StepRule::PowerIterationLipschitz;
    /// Regularization weight for lasso(); basis_pursuit_denoise() sets it internally.
    double lambda = 0.0;
    /// Residual bound for basis_pursuit_denoise().
    double rho = 0.0;
    /// The optimality certificate must hold to kkt_factor * lambda.
    double kkt_factor = 1e-6;
    /// Keep the objective after every iteration in SolverResult::objective_history.
    bool record_objective = false;

    void validate() const {
        if (!(relative_tolerance > 0.0)) throw ParameterError("SolverOptions: relative_tolerance must be positive");
        if (max_iterations < 1) throw ParameterError("SolverOptions: max_iterations must be at least 1");
        if (lambda < 0.0 || rho < 0.0) throw ParameterError("SolverOptions: lambda and rho must be nonnegative");
    }
};

struct SolverResult {
    cvec x_hat;
    int iterations = 0;
    double final_objective = 0.0;
    /// ||A x_hat - y||_2, recomputed from x_hat at return.
    double residual_norm = 0.0;
    bool converged = false;
    /// Nonzero pattern of x_hat.
    std::vector<GridIndex> recovered_support;
    /// Lambda of the final LASSO solve (for BPDN, the value bisection settled on).
    double lambda = 0.0;
    std::vector<double> objective_history;
};

/// Prox of t|.| on C: z -> sgn(z) max(|z| - t, 0).
inline cplx soft_threshold(cplx z, double t) {
    const double mag = std::abs(z);
    if (mag <= t) return {};
    return z * ((mag - t) / mag);
}

inline cvec soft_threshold(const cvec& z, double t) {
    cvec out(z.size());
    for (std::int64_t k = 0; k < z.size(); ++k) out[k] = soft_threshold(z[k], t);
    return out;
}

/// 2 sigma sqrt(2 N_T N_R N_t ln N).
inline double paper_lambda(const RadarConfig& cfg, double sigma) {
    if (sigma < 0.0) throw ParameterError("paper_lambda: sigma must be nonnegative");
    const double ntnrnt = static_cast<double>(cfg.n_transmit()) * cfg.n_receive() * cfg.n_samples();
    return 2.0 * sigma * std::sqrt(2.0 * ntnrnt * std::log(static_cast<double>(cfg.grid_size())));
}

inline double lasso_objective(const cvec& residual, const cvec& x, double lambda) {
    return 0.5 * residual.squaredNorm() + lambda * x.cwiseAbs().sum();
}

/// KKT certificate for min 1/2||Az - y||^2 + lambda ||z||_1 with g = A*(A x - y):
/// zero coordinates need |g| <= lambda, support coordinates g = -lambda sgn(x).
struct LassoCertificate {
    /// max over zero coordinates of |g| - lambda (-inf if there are none).
    double zero_violation = -std::numeric_limits<double>::infinity();
    /// max over the support of |g + lambda sgn(x)| (0 if empty).
    double support_violation = 0.0;

    bool passes(double tolerance) const { return zero_violation <= tolerance && support_violation <= tolerance; }
};

inline LassoCertificate lasso_certificate_from_gradient(const cvec& g, const cvec& x, double lambda) {
    LassoCertificate c;
    for (std::int64_t k = 0; k < x.size(); ++k) {
        const double mag = std::abs(x[k]);
        if (mag == 0.0) c.zero_violation = std::max(c.zero_violation, std::abs(g[k]) - lambda);
        else c.support_violation = std::max(c.support_violation, std::abs(g[k] + lambda * (x[k] / mag)));
    }
    return c;
}

inline LassoCertificate check_lasso_optimality(const MeasurementOperator& op, const cvec& y, double lambda,
                                               const cvec& x_hat) {
    return lasso_certificate_from_gradient(op.adjoint(op.forward(x_hat) - y), x_hat, lambda);
}

inline LassoCertificate check_lasso_optimality(const RadarConfig& cfg, const SignalSet& sig, const cvec& y,
                                               double lambda, const cvec& x_hat) {
    return check_lasso_optimality(MeasurementOperator(cfg, sig), y, lambda, x_hat);
}

/// Largest eigenvalue of A*A from `iterations` power steps (a lower bound).
inline double power_iteration_norm_sq(const MeasurementOperator& op, int iterations = 20, std::uint64_t seed = 0x5eed) {
    RandomStream rng(seed, StreamTag::PowerIteration);
    cvec v(op.cols());
    for (auto& e : v) e = rng.complex_gaussian();
    v.normalize();
    double estimate = 0.0;
    for (int it = 0; it < iterations; ++it) {
        cvec w = op.adjoint(op.forward(v));
        const double nrm = w.norm();
        if (nrm == 0.0) break;
        estimate = std::max(estimate, nrm);
        v = w / nrm;
    }
    return estimate;
}

namespace detail {

inline std::vector<GridIndex> nonzero_pattern(const RadarConfig& cfg, const cvec& x) {
    std::vector<GridIndex> out;
    for (std::int64_t k = 0; k < x.size(); ++k)
        if (x[k] != cplx{}) out.push_back(cfg.grid_index(k));
    return out;
}

inline void finish_result(const MeasurementOperator& op, const cvec& y, double lambda, SolverResult& res) {
    const cvec r = op.forward(res.x_hat) - y;
    res.residual_norm = r.norm();
    res.final_objective = lasso_objective(r, res.x_hat, lambda);
    res.recovered_support = nonzero_pattern(op.config(), res.x_hat);
    res.lambda = lambda;
}

/// Accelerated proximal gradient with a fixed step 1/L, L from power
/// iteration, and gradient-based adaptive restart.
inline SolverResult lasso_fista(const MeasurementOperator& op, const cvec& y, double lambda, const SolverOptions& opts,
                                const cvec& start, double lipschitz) {
    SolverResult res;
    const double step = 1.0 / lipschitz;
    const double kkt_tol = opts.kkt_factor * lambda;
    cvec x = start;
    cvec ax = op.forward(x);
    cvec z = x, az = ax;
    double t = 1.0;
    int since_check = 0;
    for (int it = 1; it <= opts.max_iterations; ++it) {
        const cvec grad = op.adjoint(az - y);
        cvec x_new = soft_threshold(z - step * grad, step * lambda);
        cvec ax_new = op.forward(x_new);
        const cvec dx = x_new - x;
        const bool restart = (z - x_new).dot(dx).real() > 0.0;
        const double t_new = restart ? 1.0 : 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double momentum = restart ? 0.0 : (t - 1.0) / t_new;
        z = x_new + momentum * dx;
        az = ax_new + momentum * (ax_new - ax);
        t = t_new;
        const double change = dx.norm();
        x = std::move(x_new);
        ax = std::move(ax_new);
        res.iterations = it;
        if (opts.record_objective) res.objective_history.push_back(lasso_objective(ax - y, x, lambda));

        ++since_check;
        const bool small_step = change <= opts.relative_tolerance * std::max(x.norm(), 1e-300);
        if ((small_step && since_check >= 5) || since_check >= 25) {
            since_check = 0;
            const auto cert = lasso_certificate_from_gradient(op.adjoint(ax - y), x, lambda);
            if (cert.passes(kkt_tol)) {
                res.converged = true;
                break;
            }
        }
    }
    res.x_hat = std::move(x);
    return res;
}

/// Monotone FISTA with backtracking on the Lipschitz estimate; the objective
/// never increases from one iterate to the next.
inline SolverResult lasso_backtracking(const MeasurementOperator& op, const cvec& y, double lambda,
                                       const SolverOptions& opts, const cvec& start, double initial_lipschitz) {
    SolverResult res;
    const double kkt_tol = opts.kkt_factor * lambda;
    double lip = std::max(initial_lipschitz, 1e-12);
    cvec x = start;
    cvec ax = op.forward(x);
    double fx = lasso_objective(ax - y, x, lambda);
    cvec z = x, az = ax;
    double t = 1.0;
    int since_check = 0;
    for (int it = 1; it <= opts.max_iterations; ++it) {
        const cvec rz = az - y;
        const double fz_smooth = 0.5 * rz.squaredNorm();
        const cvec grad = op.adjoint(rz);
        cvec u, au;
        for (int bt = 0; bt < 60; ++bt) {
            u = soft_threshold(z - grad / lip, lambda / lip);
            au = op.forward(u);
            const cvec d = u - z;
            const double model = fz_smooth + grad.dot(d).real() + 0.5 * lip * d.squaredNorm();
            if (0.5 * (au - y).squaredNorm() <= model * (1.0 + 1e-14) + 1e-300) break;
            lip *= 2.0;
        }
        const double fu = lasso_objective(au - y, u, lambda);
        const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        cvec x_new, ax_new;
        double f_new;
        if (fu <= fx) {
            x_new = u;
            ax_new = au;
            f_new = fu;
        } else {
            x_new = x;
            ax_new = ax;
            f_new = fx;
        }
        z = x_new + (t / t_new) * (u - x_new) + ((t - 1.0) / t_new) * (x_new - x);
        az = ax_new + (t / t_new) * (au - ax_new) + ((t - 1.0) / t_new) * (ax_new - ax);
        t = t_new;
        const double change = (x_new - x).norm();
        x = std::move(x_new);
        ax = std::move(ax_new);
        fx = f_new;
        res.iterations = it;
        if (opts.record_objective) res.objective_history.push_back(fx);

        ++since_check;
        const bool small_step = change <= opts.relative_tolerance * std::max(x.norm(), 1e-300);
        if ((small_step && since_check >= 5) || since_check >= 25) {
            since_check = 0;
            if (lasso_certificate_from_gradient(op.adjoint(ax - y), x, lambda).passes(kkt_tol)) {
                res.converged = true;
                break;
            }
        }
    }
    res.x_hat = std::move(x);
    return res;
}

} // namespace detail

/// Solves min_z 1/2 ||A z - y||^2 + lambda ||z||_1 over complex z.
/// Non-convergence is reported through SolverResult::converged.
inline SolverResult lasso(const MeasurementOperator& op, const cvec& y, double lambda, const SolverOptions& opts = {},
                          const std::optional<cvec>& warm_start = std::nullopt,
                          std::optional<double> lipschitz = std::nullopt) {
    opts.validate();
    if (!(lambda > 0.0)) throw ParameterError("lasso: lambda must be positive");
    if (y.size() != op.rows()) throw DomainError("lasso: measurement length mismatch");
    if (warm_start && warm_start->size() != op.cols()) throw DomainError("lasso: warm start length mismatch");

    const cvec aty = op.adjoint(y);
    if (aty.cwiseAbs().maxCoeff() <= lambda) {
        // Zero is optimal: |(A* y)_theta| <= lambda everywhere.
        SolverResult res;
        res.x_hat = cvec::Zero(op.cols());
        res.converged = true;
        detail::finish_result(op, y, lambda, res);
        return res;
    }
    const cvec start = warm_start ? *warm_start : cvec(cvec::Zero(op.cols()));
    SolverResult res;
    if (opts.step_rule == StepRule::PowerIterationLipschitz) {
        const double lip = lipschitz ? *lipschitz : 1.05 * power_iteration_norm_sq(op);
        res = detail::lasso_fista(op, y, lambda, opts, start, lip);
    } else {
        const double lip0 = lipschitz ? *lipschitz : 1e-3 * op.config().normalization() * op.config().normalization();
        res = detail::lasso_backtracking(op, y, lambda, opts, start, lip0);
    }
    detail::finish_result(op, y, lambda, res);
    return res;
}

inline SolverResult lasso(const RadarConfig& cfg, const SignalSet& sig, const cvec& y, double lambda,
                          const SolverOptions& opts = {}) {
    return lasso(MeasurementOperator(cfg, sig), y, lambda, opts);
}

/// Least squares on a fixed support, argmin ||A_S z - y||_2, through the
/// normal equations with the closed-form Gram matrix. Throws SingularityError
/// when the Gram condition number exceeds 1e12.
inline cvec debias(const MeasurementOperator& op, const SignalSet& sig, const cvec& y, const SupportSet& support) {
    const auto& cfg = op.config();
    if (support.empty()) return cvec(0);
    if (y.size() != op.rows()) throw DomainError("debias: measurement length mismatch");
    const double scale = cfg.normalization() * cfg.normalization();
    const cmat gram = scale * gram_closed_form(cfg, sig, support).gram;
    Eigen::SelfAdjointEigenSolver<cmat> es(gram);
    const double lmin = es.eigenvalues().minCoeff();
    const double lmax = es.eigenvalues().maxCoeff();
    if (!(lmin > 0.0) || lmax / lmin > 1e12)
        throw SingularityError("debias: columns on the support are numerically dependent (condition " +
                               std::to_string(lmax / std::max(lmin, 0.0)) + ")");
    auto solve = [&](const cvec& rhs) -> cvec {
        return es.eigenvectors() * (es.eigenvalues().cwiseInverse().asDiagonal() * (es.eigenvectors().adjoint() * rhs));
    };
    const cmat as = op.columns(support.indices());
    const cvec rhs = as.adjoint() * y;
    cvec z = solve(rhs);
    // One refinement step against the explicit columns.
    z += solve(as.adjoint() * (y - as * z));
    return z;
}

inline cvec debias(const RadarConfig& cfg, const SignalSet& sig, const cvec& y, const SupportSet& support) {
    return debias(MeasurementOperator(cfg, sig), sig, y, support);
}

namespace detail {

/// For rho = 0: least squares on the support of x, accepted when it
/// reproduces y and is certified as a minimizer of ||z||_1 s.t. Az = y, either
/// by v = A_S (A_S* A_S)^-1 sgn(z) with |A* v| <= 1 off the support, or by weak
/// duality with the scaled LASSO residual v = (y - A x)/||A*(y - A x)||_inf:
/// ||z||_1 - Re<v, y> <= gap_tol ||z||_1.
inline std::optional<cvec> polish_exact(const MeasurementOperator& op, const cvec& y, const cvec& x,
                                        double residual_target, double gap_tol = 1e-6) {
    const auto& cfg = op.config();
    auto pattern = nonzero_pattern(cfg, x);
    for (int pass = 0; pass < 2; ++pass) {
        if (pattern.empty() || static_cast<std::int64_t>(pattern.size()) > op.rows()) return std::nullopt;
        const SupportSet support(cfg, pattern);
        const cmat as = op.columns(support.indices());
        const cmat gram = as.adjoint() * as;
        Eigen::SelfAdjointEigenSolver<cmat> es(gram);
        const double lmin = es.eigenvalues().minCoeff();
        if (!(lmin > 1e-12 * es.eigenvalues().maxCoeff())) return std::nullopt;
        auto solve = [&](const cvec& rhs) -> cvec {
            return es.eigenvectors() *
                   (es.eigenvalues().cwiseInverse().asDiagonal() * (es.eigenvectors().adjoint() * rhs));
        };
        cvec zs = solve(as.adjoint() * y);
        zs += solve(as.adjoint() * (y - as * zs));
        if ((as * zs - y).norm() > residual_target) return std::nullopt;

        // Coefficients at rounding level mean the true support is smaller.
        const double cutoff = 1e-10 * zs.cwiseAbs().maxCoeff();
        std::vector<GridIndex> kept;
        for (std::size_t k = 0; k < support.size(); ++k)
            if (std::abs(zs[static_cast<std::int64_t>(k)]) > cutoff) kept.push_back(support[k]);
        if (kept.size() < support.size() && pass == 0) {
            pattern = std::move(kept);
            continue;
        }

        cvec sgn(zs.size());
        for (std::int64_t k = 0; k < zs.size(); ++k) {
            if (zs[k] == cplx{}) return std::nullopt;
            sgn[k] = zs[k] / std::abs(zs[k]);
        }
        const cvec dual = op.adjoint(as * solve(sgn));
        bool certified = true;
        for (std::int64_t p = 0; p < dual.size() && certified; ++p)
            if (!support.contains_linear(p) && std::abs(dual[p]) > 1.0 + 1e-9) certified = false;
        if (!certified) {
            const cvec v = y - op.forward(x);
            const double scale = op.adjoint(v).cwiseAbs().maxCoeff();
            const double l1 = zs.cwiseAbs().sum();
            if (!(scale > 0.0) || l1 - v.dot(y).real() / scale > gap_tol * l1) return std::nullopt;
        }
        cvec out = cvec::Zero(op.cols());
        for (std::size_t k = 0; k < support.size(); ++k)
            out[support.linear_indices()[k]] = zs[static_cast<std::int64_t>(k)];
        return out;
    }
    return std::nullopt;
}

} // namespace detail

/// min ||z||_1 subject to ||A z - y||_2 <= rho, by bisection on the LASSO
/// weight with warm starts, until the residual is within
/// max(1e-4 ||y||, 1e-8) of rho. For rho = 0 the weight is driven down
/// until the residual falls below 1e-6 ||y||.
inline SolverResult basis_pursuit_denoise(const MeasurementOperator& op, const cvec& y, double rho,
                                          const SolverOptions& opts = {}) {
    opts.validate();
    if (rho < 0.0) throw ParameterError("basis_pursuit_denoise: rho must be nonnegative");
    if (y.size() != op.rows()) throw DomainError("basis_pursuit_denoise: measurement length mismatch");
    const double ynorm = y.norm();
    SolverResult best;
    if (rho >= ynorm) {
        best.x_hat = cvec::Zero(op.cols());
        best.converged = true;
        detail::finish_result(op, y, op.adjoint(y).cwiseAbs().maxCoeff(), best);
        return best;
    }
    const double lam_max = op.adjoint(y).cwiseAbs().maxCoeff();
    const double lip = opts.step_rule == StepRule::PowerIterationLipschitz ? 1.05 * power_iteration_norm_sq(op) : 0.0;
    auto solve_at = [&](double lam, const cvec& warm) {
        return opts.step_rule == StepRule::PowerIterationLipschitz ? lasso(op, y, lam, opts, warm, lip)
                                                                   : lasso(op, y, lam, opts, warm);
    };
    int total_iterations = 0;

    if (rho <= 1e-6 * ynorm) {
        const double target = 1e-6 * ynorm;
        cvec warm = cvec::Zero(op.cols());
        for (double lam = 0.5 * lam_max; lam > 1e-14 * lam_max; lam *= 0.1) {
            SolverResult r = solve_at(lam, warm);
            total_iterations += r.iterations;
            warm = r.x_hat;
            if (auto polished = detail::polish_exact(op, y, r.x_hat, std::max(target, rho))) {
                r.x_hat = std::move(*polished);
                detail::finish_result(op, y, lam, r);
                r.converged = true;
                r.iterations = total_iterations;
                return r;
            }
            if (r.converged && r.residual_norm <= std::max(target, rho)) {
                r.iterations = total_iterations;
                return r;
            }
            best = std::move(r);
        }
        best.converged = false;
        best.iterations = total_iterations;
        return best;
    }

    const double tol = std::max(1e-4 * ynorm, 1e-8);
    // Walk down from lam_max until the residual drops below rho.
    double hi = lam_max, lo = 0.0;
    cvec warm_hi = cvec::Zero(op.cols());
    SolverResult lo_result;
    for (double lam = 0.5 * lam_max; lam > 1e-14 * lam_max; lam *= 0.1) {
        SolverResult r = solve_at(lam, warm_hi);
        total_iterations += r.iterations;
        if (std::abs(r.residual_norm - rho) <= tol && r.converged) {
            r.iterations = total_iterations;
            return r;
        }
        if (r.residual_norm < rho) {
            lo = lam;
            lo_result = std::move(r);
            break;
        }
        hi = lam;
        warm_hi = r.x_hat;
    }
    if (lo == 0.0) {
        best.x_hat = warm_hi;
        detail::finish_result(op, y, hi, best);
        best.iterations = total_iterations;
        return best;
    }
    for (int bisect = 0; bisect < 100; ++bisect) {
        const double mid = std::sqrt(lo * hi);
        SolverResult r = solve_at(mid, lo_result.x_hat);
        total_iterations += r.iterations;
        if (std::abs(r.residual_norm - rho) <= tol) {
            r.iterations = total_iterations;
            return r;
        }
        if (r.residual_norm < rho) {
            lo = mid;
            lo_result = std::move(r);
        } else {
            hi = mid;
        }
        if (hi / lo < 1.0 + 1e-12) break;
    }
    lo_result.converged = false;
    lo_result.iterations = total_iterations;
    return lo_result;
}

inline SolverResult basis_pursuit_denoise(const RadarConfig& cfg, const SignalSet& sig, const cvec& y, double rho,
                                          const SolverOptions& opts = {}) {
    return basis_pursuit_denoise(MeasurementOperator(cfg, sig), y, rho, opts);
}

struct SuccessReport {
    /// ||x - x_hat||_inf <= threshold
    bool success = false;
    /// supp(hard_threshold(x_hat, threshold)) == supp(x)
    bool support_exact = false;
    double linf_error = 0.0;
};

inline SuccessReport declare_success(const RadarConfig& cfg, const TargetScene& truth, const cvec& x_hat,
                                     double threshold) {
    if (!(threshold > 0.0)) throw ParameterError("declare_success: threshold must be positive");
    if (x_hat.size() != cfg.grid_size()) throw DomainError("declare_success: estimate length mismatch");
    const cvec x = truth.dense(cfg);
    SuccessReport rep;
    rep.linf_error = (x - x_hat).cwiseAbs().maxCoeff();
    rep.success = rep.linf_error <= threshold;
    rep.support_exact = true;
    for (std::int64_t k = 0; k < x.size(); ++k)
        if ((std::abs(x_hat[k]) > threshold) != (x[k] != cplx{})) {
            rep.support_exact = false;
            break;
        }
    return rep;
}

} // namespace mimocs
