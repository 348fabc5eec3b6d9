#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <string>
#include <string_view>

#include "mimocs/errors.hpp"

namespace mimocs {

using cplx = std::complex<double>;

/// Exact rational number with a positive, reduced denominator.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    constexpr Rational() = default;
    constexpr Rational(std::int64_t n, std::int64_t d = 1) : num(n), den(d) {
        if (den < 0) {
            num = -num;
            den = -den;
        }
        const auto g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
    }

    constexpr double value() const { return static_cast<double>(num) / static_cast<double>(den); }

    friend constexpr Rational operator*(Rational a, Rational b) {
        return Rational(a.num * b.num, a.den * b.den);
    }
    friend constexpr bool operator==(const Rational&, const Rational&) = default;
};

/// exp(2*pi*i * num/den), with the argument reduced mod 1 in exact integer
/// arithmetic so that integer-periodic phases are reproduced bit-exactly.
inline cplx unit_phase(std::int64_t num, std::int64_t den) {
    std::int64_t r = num % den;
    if (r < 0) r += den;
    if (r == 0) return {1.0, 0.0};
    if ((4 * r) % den == 0) {
        switch ((4 * r) / den) {
        case 1: return {0.0, 1.0};
        case 2: return {-1.0, 0.0};
        default: return {0.0, -1.0};
        }
    }
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(r) / static_cast<double>(den);
    return std::polar(1.0, angle);
}

inline std::int64_t positive_mod(std::int64_t a, std::int64_t n) {
    const auto r = a % n;
    return r < 0 ? r + n : r;
}

enum class DopplerMode { Full, DopplerFree };

inline std::string_view to_string(DopplerMode m) {
    return m == DopplerMode::Full ? "full" : "free";
}

inline DopplerMode parse_doppler_mode(std::string_view s) {
    if (s == "full") return DopplerMode::Full;
    if (s == "free" || s == "doppler-free" || s == "dopplerfree") return DopplerMode::DopplerFree;
    throw ParameterError("unknown doppler mode '" + std::string(s) + "' (expected full|free)");
}

/// A point (beta, tau, f) of the angle-delay-Doppler grid, 1-based as in
/// the model: beta in [1, N_T N_R], tau in [1, N_t], f in [1, N_t].
struct GridIndex {
    std::int64_t beta = 1;
    std::int64_t tau = 1;
    std::int64_t f = 1;

    friend constexpr bool operator==(const GridIndex&, const GridIndex&) = default;
    friend constexpr auto operator<=>(const GridIndex&, const GridIndex&) = default;
};

/// Model dimensions of the co-located MIMO radar.
///
/// The antenna spacings are fixed to d_T = 1/2 and d_R = N_T/2 (in
/// wavelengths) and the angular step to 2/(N_T N_R), so that the transmit
/// phase step is 1/(N_T N_R) and the receive phase step is 1/N_R per
/// antenna. In Doppler-free mode the grid only contains f = N_t, which is
/// the zero Doppler shift modulo N_t.
class RadarConfig {
public:
    RadarConfig(int n_transmit, int n_receive, int n_samples, DopplerMode mode = DopplerMode::Full)
        : n_transmit_(n_transmit), n_receive_(n_receive), n_samples_(n_samples), mode_(mode) {
        if (n_transmit < 1 || n_receive < 1 || n_samples < 1)
            throw ParameterError("RadarConfig: N_T, N_R and N_t must be positive");
    }

    int n_transmit() const { return n_transmit_; }
    int n_receive() const { return n_receive_; }
    int n_samples() const { return n_samples_; }
    DopplerMode doppler_mode() const { return mode_; }

    Rational d_transmit() const { return {1, 2}; }
    Rational d_receive() const { return {n_transmit_, 2}; }
    Rational delta_beta() const { return {2, std::int64_t{n_transmit_} * n_receive_}; }

    std::int64_t n_angles() const { return std::int64_t{n_transmit_} * n_receive_; }
    std::int64_t n_doppler() const { return mode_ == DopplerMode::Full ? n_samples_ : 1; }
    std::int64_t n_classes() const { return n_receive_; }

    /// N: number of grid points.
    std::int64_t grid_size() const { return n_angles() * n_samples_ * n_doppler(); }
    /// m = N_R N_t.
    std::int64_t n_measurements() const { return std::int64_t{n_receive_} * n_samples_; }
    /// Scale of the normalized operator, A~ = A / sqrt(N_T N_R N_t).
    double normalization() const {
        return std::sqrt(static_cast<double>(n_transmit_) * n_receive_ * n_samples_);
    }

    /// The Doppler index used for every grid point in Doppler-free mode.
    std::int64_t zero_doppler() const { return n_samples_; }

    /// Angle class of beta: beta' ~ beta iff beta' - beta is a multiple of N_R.
    std::int64_t angle_class(std::int64_t beta) const { return positive_mod(beta, n_receive_); }

    /// exp(2 pi i d_T beta dbeta (i-1)) for transmitter i (1-based).
    cplx transmit_phase(std::int64_t beta, std::int64_t i) const {
        const Rational step = d_transmit() * delta_beta();
        return unit_phase(step.num * beta * (i - 1), step.den);
    }

    /// exp(2 pi i d_R beta dbeta (j-1)) for receiver j (1-based).
    cplx receive_phase(std::int64_t beta, std::int64_t j) const {
        const Rational step = d_receive() * delta_beta();
        return unit_phase(step.num * beta * (j - 1), step.den);
    }

    bool contains(const GridIndex& t) const {
        const bool f_ok = mode_ == DopplerMode::Full ? (t.f >= 1 && t.f <= n_samples_)
                                                     : t.f == zero_doppler();
        return t.beta >= 1 && t.beta <= n_angles() && t.tau >= 1 && t.tau <= n_samples_ && f_ok;
    }

    /// Maps any integer triple onto its periodic representative in the grid.
    GridIndex wrap(const GridIndex& t) const {
        GridIndex w{positive_mod(t.beta - 1, n_angles()) + 1, positive_mod(t.tau - 1, n_samples_) + 1,
                    positive_mod(t.f - 1, n_samples_) + 1};
        if (mode_ == DopplerMode::DopplerFree && w.f != zero_doppler())
            throw DomainError("grid index has nonzero Doppler in Doppler-free mode");
        return w;
    }

    /// ((beta-1) N_t + (tau-1)) N_t + (f-1) in full mode; f dropped when Doppler-free.
    std::int64_t linear_index(const GridIndex& t) const {
        if (!contains(t)) throw DomainError("grid index " + describe(t) + " is outside the grid");
        const std::int64_t bt = (t.beta - 1) * n_samples_ + (t.tau - 1);
        return mode_ == DopplerMode::Full ? bt * n_samples_ + (t.f - 1) : bt;
    }

    GridIndex grid_index(std::int64_t linear) const {
        if (linear < 0 || linear >= grid_size())
            throw DomainError("linear index " + std::to_string(linear) + " is outside the grid");
        GridIndex t;
        if (mode_ == DopplerMode::Full) {
            t.f = linear % n_samples_ + 1;
            linear /= n_samples_;
        } else {
            t.f = zero_doppler();
        }
        t.tau = linear % n_samples_ + 1;
        t.beta = linear / n_samples_ + 1;
        return t;
    }

    static std::string describe(const GridIndex& t) {
        return "(" + std::to_string(t.beta) + "," + std::to_string(t.tau) + "," + std::to_string(t.f) + ")";
    }

    friend bool operator==(const RadarConfig&, const RadarConfig&) = default;

private:
    int n_transmit_;
    int n_receive_;
    int n_samples_;
    DopplerMode mode_;
};

} // namespace mimocs
