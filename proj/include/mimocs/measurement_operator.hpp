#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "mimocs/errors.hpp"
#include "mimocs/radar_config.hpp"
#include "mimocs/signals.hpp"

namespace mimocs {

/// Default cap on the number of entries of any materialized dense matrix.
inline constexpr std::int64_t kDenseEntryCap = 65536;

/// One nonzero of a sparse scene.
struct SparseEntry {
    GridIndex index;
    cplx value;
};

/// Matrix-free MIMO radar measurement operator A (m x N, m = N_R N_t).
///
/// Column A_theta stacks over receivers j the blocks
///   exp(2 pi i d_R beta dbeta (j-1)) * M_f T_tau c_beta,
/// where c_beta = sum_i exp(2 pi i d_T beta dbeta (i-1)) s_i. The receive
/// phase only depends on the angle class of beta, so products are computed
/// per class: circular convolutions (FFT) inside a class, then a length-N_R
/// phase sum across classes.
///
/// Instances own FFT scratch state: share the config and signals between
/// threads, not the operator.
class MeasurementOperator {
public:
    MeasurementOperator(const RadarConfig& cfg, const SignalSet& sig) : cfg_(cfg) {
        sig.check_compatible(cfg);
        const auto nt = cfg.n_samples();
        const auto na = cfg.n_angles();
        combined_.resize(na);
        spectra_.resize(na);
        for (std::int64_t b = 0; b < na; ++b) {
            cvec c = cvec::Zero(nt);
            for (int i = 0; i < cfg.n_transmit(); ++i) c += cfg.transmit_phase(b + 1, i + 1) * sig[i];
            combined_[b] = c;
            spectra_[b].resize(nt);
            fft_.fwd(spectra_[b].data(), c.data(), nt);
        }
        class_phase_.resize(cfg.n_classes() * cfg.n_receive());
        for (std::int64_t r = 0; r < cfg.n_classes(); ++r)
            for (std::int64_t j = 0; j < cfg.n_receive(); ++j)
                class_phase_[r * cfg.n_receive() + j] = unit_phase(r * j, cfg.n_receive());
    }

    const RadarConfig& config() const { return cfg_; }
    std::int64_t rows() const { return cfg_.n_measurements(); }
    std::int64_t cols() const { return cfg_.grid_size(); }

    /// c_beta for 1-based beta.
    const cvec& combined_signal(std::int64_t beta) const { return combined_.at(beta - 1); }

    cvec column(const GridIndex& theta) const {
        if (!cfg_.contains(theta))
            throw DomainError("grid index " + RadarConfig::describe(theta) + " is outside the grid");
        const auto nt = cfg_.n_samples();
        const cvec block = modulate(circular_shift(combined_signal(theta.beta), theta.tau), theta.f);
        cvec out(rows());
        for (int j = 0; j < cfg_.n_receive(); ++j)
            out.segment(std::int64_t{j} * nt, nt) = cfg_.receive_phase(theta.beta, j + 1) * block;
        return out;
    }

    /// A x for a dense coefficient vector indexed in grid linear order.
    cvec forward(const cvec& x) const {
        if (x.size() != cols())
            throw DomainError("forward: x has length " + std::to_string(x.size()) + ", expected " +
                              std::to_string(cols()));
        const auto nt = cfg_.n_samples();
        const auto nc = cfg_.n_classes();
        std::vector<cplx> accum(static_cast<std::size_t>(nc * nt), cplx{});
        std::vector<cplx> u(nt), uhat(nt);

        if (cfg_.doppler_mode() == DopplerMode::DopplerFree) {
            // Frequency domain accumulation: class spectrum += C_beta * U_beta.
            for (std::int64_t b = 0; b < cfg_.n_angles(); ++b) {
                const auto seg = x.segment(b * nt, nt);
                if (seg.isZero(0.0)) continue;
                for (std::int64_t p = 0; p < nt; ++p) u[(p + 1) % nt] = seg[p];
                fft_.fwd(uhat.data(), u.data(), nt);
                cplx* acc = accum.data() + cfg_.angle_class(b + 1) * nt;
                const auto& cs = spectra_[b];
                for (std::int64_t k = 0; k < nt; ++k) acc[k] += cs[k] * uhat[k];
            }
            for (std::int64_t r = 0; r < nc; ++r) {
                fft_.inv(u.data(), accum.data() + r * nt, nt);
                std::copy(u.begin(), u.end(), accum.begin() + r * nt);
            }
        } else {
            // out[k] = sum_tau c[k - tau] X_tau[k], X_tau[k] = sum_f x[tau, f] e^{2 pi i f k / N_t}.
            std::vector<cplx> xt(nt * nt);
            for (std::int64_t b = 0; b < cfg_.n_angles(); ++b) {
                const auto seg = x.segment(b * nt * nt, nt * nt);
                if (seg.isZero(0.0)) continue;
                const auto& c = combined_[b];
                cplx* acc = accum.data() + cfg_.angle_class(b + 1) * nt;
                for (std::int64_t pt = 0; pt < nt; ++pt) {
                    const auto row = seg.segment(pt * nt, nt);
                    if (row.isZero(0.0)) continue;
                    for (std::int64_t pf = 0; pf < nt; ++pf) u[(pf + 1) % nt] = row[pf];
                    fft_.inv(uhat.data(), u.data(), nt);
                    const std::int64_t shift = (pt + 1) % nt;
                    const double scale = static_cast<double>(nt);
                    for (std::int64_t k = 0; k < nt; ++k)
                        acc[k] += scale * uhat[k] * c[positive_mod(k - shift, nt)];
                }
            }
        }
        return spread_classes(accum);
    }

    /// A x for a sparse scene, summing columns over the support.
    cvec forward(std::span<const SparseEntry> entries) const {
        cvec y = cvec::Zero(rows());
        for (const auto& e : entries) y += e.value * column(e.index);
        return y;
    }

    /// A* y, (A* y)_theta = <A_theta, y>.
    cvec adjoint(const cvec& y) const {
        if (y.size() != rows())
            throw DomainError("adjoint: y has length " + std::to_string(y.size()) + ", expected " +
                              std::to_string(rows()));
        const auto nt = cfg_.n_samples();
        const auto nc = cfg_.n_classes();
        const auto nr = cfg_.n_receive();
        // w_r = sum_j conj(phase(r, j)) y_j
        std::vector<cplx> w(static_cast<std::size_t>(nc * nt), cplx{});
        for (std::int64_t r = 0; r < nc; ++r)
            for (std::int64_t j = 0; j < nr; ++j) {
                const cplx ph = std::conj(class_phase_[r * nr + j]);
                for (std::int64_t k = 0; k < nt; ++k) w[r * nt + k] += ph * y[j * nt + k];
            }

        cvec out(cols());
        std::vector<cplx> g(nt), ghat(nt);
        if (cfg_.doppler_mode() == DopplerMode::DopplerFree) {
            std::vector<cplx> what(static_cast<std::size_t>(nc * nt));
            for (std::int64_t r = 0; r < nc; ++r) fft_.fwd(what.data() + r * nt, w.data() + r * nt, nt);
            for (std::int64_t b = 0; b < cfg_.n_angles(); ++b) {
                const cplx* wh = what.data() + cfg_.angle_class(b + 1) * nt;
                const auto& cs = spectra_[b];
                for (std::int64_t k = 0; k < nt; ++k) ghat[k] = std::conj(cs[k]) * wh[k];
                fft_.inv(g.data(), ghat.data(), nt);
                for (std::int64_t p = 0; p < nt; ++p) out[b * nt + p] = g[(p + 1) % nt];
            }
        } else {
            for (std::int64_t b = 0; b < cfg_.n_angles(); ++b) {
                const cplx* wr = w.data() + cfg_.angle_class(b + 1) * nt;
                const auto& c = combined_[b];
                for (std::int64_t pt = 0; pt < nt; ++pt) {
                    const std::int64_t shift = (pt + 1) % nt;
                    for (std::int64_t k = 0; k < nt; ++k) g[k] = std::conj(c[positive_mod(k - shift, nt)]) * wr[k];
                    fft_.fwd(ghat.data(), g.data(), nt);
                    for (std::int64_t pf = 0; pf < nt; ++pf) out[(b * nt + pt) * nt + pf] = ghat[(pf + 1) % nt];
                }
            }
        }
        return out;
    }

    /// Dense m x N matrix; column order equals the grid linear order.
    cmat densify(std::int64_t entry_cap = kDenseEntryCap) const {
        if (rows() * cols() > entry_cap)
            throw SizeError("densify: " + std::to_string(rows()) + "x" + std::to_string(cols()) +
                            " exceeds the cap of " + std::to_string(entry_cap) + " entries");
        cmat a(rows(), cols());
        for (std::int64_t n = 0; n < cols(); ++n) a.col(n) = column(cfg_.grid_index(n));
        return a;
    }

    /// Columns of A restricted to the given indices.
    cmat columns(std::span<const GridIndex> support) const {
        cmat a(rows(), static_cast<std::int64_t>(support.size()));
        for (std::size_t n = 0; n < support.size(); ++n) a.col(static_cast<std::int64_t>(n)) = column(support[n]);
        return a;
    }

private:
    cvec spread_classes(const std::vector<cplx>& per_class) const {
        const auto nt = cfg_.n_samples();
        const auto nr = cfg_.n_receive();
        cvec y = cvec::Zero(rows());
        for (std::int64_t j = 0; j < nr; ++j)
            for (std::int64_t r = 0; r < cfg_.n_classes(); ++r) {
                const cplx ph = class_phase_[r * nr + j];
                for (std::int64_t k = 0; k < nt; ++k) y[j * nt + k] += ph * per_class[r * nt + k];
            }
        return y;
    }

    RadarConfig cfg_;
    std::vector<cvec> combined_;
    std::vector<std::vector<cplx>> spectra_;
    std::vector<cplx> class_phase_;
    mutable Eigen::FFT<double> fft_;
};

/// X_theta: N_R x N_T block matrix of N_t x N_t blocks
/// exp(2 pi i d_R beta dbeta (i-1)) exp(2 pi i d_T beta dbeta (j-1)) M_f T_tau,
/// so that X_theta applied to the stacked signal vector gives A_theta.
inline cmat build_x_theta(const RadarConfig& cfg, const GridIndex& theta, std::int64_t entry_cap = kDenseEntryCap) {
    if (!cfg.contains(theta))
        throw DomainError("grid index " + RadarConfig::describe(theta) + " is outside the grid");
    const std::int64_t nt = cfg.n_samples();
    const std::int64_t rows = cfg.n_receive() * nt;
    const std::int64_t cols = cfg.n_transmit() * nt;
    if (rows * cols > entry_cap)
        throw SizeError("build_x_theta: " + std::to_string(rows) + "x" + std::to_string(cols) +
                        " exceeds the cap of " + std::to_string(entry_cap) + " entries");
    cmat mt = cmat::Zero(nt, nt);
    for (std::int64_t k = 0; k < nt; ++k) mt(k, positive_mod(k - theta.tau, nt)) = unit_phase(theta.f * k, nt);
    cmat x(rows, cols);
    for (int i = 0; i < cfg.n_receive(); ++i)
        for (int j = 0; j < cfg.n_transmit(); ++j)
            x.block(std::int64_t{i} * nt, std::int64_t{j} * nt, nt, nt) =
                cfg.receive_phase(theta.beta, i + 1) * cfg.transmit_phase(theta.beta, j + 1) * mt;
    return x;
}

} // namespace mimocs
