#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mimocs/errors.hpp"
#include "mimocs/radar_config.hpp"
#include "mimocs/rng.hpp"

namespace mimocs {

using cvec = Eigen::VectorXcd;
using cmat = Eigen::MatrixXcd;

enum class SignalFamily { ComplexGaussian, Rademacher, Steinhaus };

inline std::string_view to_string(SignalFamily f) {
    switch (f) {
    case SignalFamily::ComplexGaussian: return "gaussian";
    case SignalFamily::Rademacher: return "rademacher";
    case SignalFamily::Steinhaus: return "steinhaus";
    }
    return "?";
}

inline SignalFamily parse_signal_family(std::string_view s) {
    if (s == "gaussian" || s == "complex-gaussian") return SignalFamily::ComplexGaussian;
    if (s == "rademacher") return SignalFamily::Rademacher;
    if (s == "steinhaus") return SignalFamily::Steinhaus;
    throw ParameterError("unknown signal family '" + std::string(s) +
                         "' (expected gaussian|rademacher|steinhaus)");
}

/// [T_tau s]_k = s_{k - tau}, indices taken modulo N_t.
inline cvec circular_shift(const cvec& s, std::int64_t tau) {
    const auto n = static_cast<std::int64_t>(s.size());
    cvec out(n);
    if (n == 0) return out;
    const auto shift = positive_mod(tau, n);
    for (std::int64_t k = 0; k < n; ++k) out[k] = s[positive_mod(k - shift, n)];
    return out;
}

/// [M_f s]_k = exp(2 pi i f (k-1)/N_t) s_k with 1-based k.
inline cvec modulate(const cvec& s, std::int64_t f) {
    const auto n = static_cast<std::int64_t>(s.size());
    cvec out(n);
    for (std::int64_t k = 0; k < n; ++k) out[k] = unit_phase(f * k, n) * s[k];
    return out;
}

/// The N_T probing signals. Immutable once generated.
class SignalSet {
public:
    SignalSet(std::vector<cvec> signals, SignalFamily family, std::uint64_t seed)
        : signals_(std::move(signals)), family_(family), seed_(seed) {
        if (signals_.empty()) throw ParameterError("SignalSet: at least one signal required");
        for (const auto& s : signals_)
            if (s.size() != signals_.front().size())
                throw DomainError("SignalSet: signals must share one length");
    }

    int n_transmit() const { return static_cast<int>(signals_.size()); }
    int n_samples() const { return static_cast<int>(signals_.front().size()); }
    const cvec& operator[](std::size_t i) const { return signals_[i]; }
    const std::vector<cvec>& signals() const { return signals_; }
    SignalFamily family() const { return family_; }
    std::uint64_t seed() const { return seed_; }

    /// Stacked vector (s_1^T, ..., s_{N_T}^T)^T.
    cvec stacked() const {
        cvec out(std::int64_t{n_transmit()} * n_samples());
        for (int i = 0; i < n_transmit(); ++i) out.segment(std::int64_t{i} * n_samples(), n_samples()) = signals_[i];
        return out;
    }

    void check_compatible(const RadarConfig& cfg) const {
        if (cfg.n_transmit() != n_transmit() || cfg.n_samples() != n_samples())
            throw DomainError("SignalSet dimensions (" + std::to_string(n_transmit()) + "x" +
                              std::to_string(n_samples()) + ") do not match the radar configuration");
    }

private:
    std::vector<cvec> signals_;
    SignalFamily family_;
    std::uint64_t seed_;
};

inline SignalSet generate_signals(const RadarConfig& cfg, SignalFamily family, std::uint64_t seed) {
    std::vector<cvec> signals;
    signals.reserve(cfg.n_transmit());
    for (int i = 0; i < cfg.n_transmit(); ++i) {
        RandomStream rng(seed, StreamTag::Signals, {static_cast<std::uint64_t>(i)});
        cvec s(cfg.n_samples());
        for (auto& v : s) {
            switch (family) {
            case SignalFamily::ComplexGaussian: v = rng.complex_gaussian(); break;
            case SignalFamily::Rademacher: v = rng.rademacher(); break;
            case SignalFamily::Steinhaus: v = rng.steinhaus(); break;
            }
        }
        signals.push_back(std::move(s));
    }
    return SignalSet(std::move(signals), family, seed);
}

} // namespace mimocs
