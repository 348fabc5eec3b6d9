#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "mimocs/errors.hpp"
#include "mimocs/measurement_operator.hpp"
#include "mimocs/radar_config.hpp"
#include "mimocs/rng.hpp"

namespace mimocs {

/// A finite set of distinct grid indices, kept sorted in linear order, with
/// the partition into angle classes.
class SupportSet {
public:
    SupportSet(const RadarConfig& cfg, std::vector<GridIndex> indices) : n_classes_(cfg.n_classes()) {
        std::vector<std::int64_t> lin;
        lin.reserve(indices.size());
        for (const auto& t : indices) lin.push_back(cfg.linear_index(t));
        std::vector<std::size_t> order(indices.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return lin[a] < lin[b]; });
        for (std::size_t k = 1; k < order.size(); ++k)
            if (lin[order[k]] == lin[order[k - 1]])
                throw DomainError("support contains duplicate index " + RadarConfig::describe(indices[order[k]]));
        indices_.reserve(indices.size());
        linear_.reserve(indices.size());
        for (auto k : order) {
            indices_.push_back(indices[k]);
            linear_.push_back(lin[k]);
        }
        classes_.assign(static_cast<std::size_t>(n_classes_), {});
        for (std::size_t k = 0; k < indices_.size(); ++k)
            classes_[static_cast<std::size_t>(cfg.angle_class(indices_[k].beta))].push_back(k);
    }

    std::size_t size() const { return indices_.size(); }
    bool empty() const { return indices_.empty(); }
    const std::vector<GridIndex>& indices() const { return indices_; }
    const std::vector<std::int64_t>& linear_indices() const { return linear_; }
    const GridIndex& operator[](std::size_t k) const { return indices_[k]; }

    /// Positions (into indices()) of the members of angle class r in [0, N_R).
    const std::vector<std::size_t>& angle_class(std::int64_t r) const { return classes_.at(static_cast<std::size_t>(r)); }
    std::int64_t n_classes() const { return n_classes_; }

    std::vector<std::int64_t> class_sizes() const {
        std::vector<std::int64_t> sizes;
        for (const auto& c : classes_) sizes.push_back(static_cast<std::int64_t>(c.size()));
        return sizes;
    }

    bool contains_linear(std::int64_t lin) const { return std::binary_search(linear_.begin(), linear_.end(), lin); }

    friend bool operator==(const SupportSet& a, const SupportSet& b) { return a.linear_ == b.linear_; }

private:
    std::int64_t n_classes_;
    std::vector<GridIndex> indices_;
    std::vector<std::int64_t> linear_;
    std::vector<std::vector<std::size_t>> classes_;
};

/// eta = N_R max_r |S_r| / |S| as an exact rational, with the class sizes.
struct BalancednessReport {
    Rational eta;
    std::vector<std::int64_t> class_sizes;
};

inline BalancednessReport balancedness(const RadarConfig& cfg, const SupportSet& support) {
    if (support.empty()) throw DomainError("balancedness: support set is empty");
    auto sizes = support.class_sizes();
    const auto largest = *std::max_element(sizes.begin(), sizes.end());
    return {Rational(cfg.n_classes() * largest, static_cast<std::int64_t>(support.size())), std::move(sizes)};
}

namespace detail {

/// k distinct values drawn uniformly from [0, n), in draw order (partial Fisher-Yates
/// on a sparse swap map, so memory stays O(k)).
inline std::vector<std::int64_t> sample_without_replacement(std::int64_t n, std::int64_t k, RandomStream& rng) {
    std::vector<std::pair<std::int64_t, std::int64_t>> swapped;
    auto lookup = [&](std::int64_t i) {
        for (const auto& [from, to] : swapped)
            if (from == i) return to;
        return i;
    };
    auto assign = [&](std::int64_t i, std::int64_t v) {
        for (auto& [from, to] : swapped)
            if (from == i) {
                to = v;
                return;
            }
        swapped.emplace_back(i, v);
    };
    std::vector<std::int64_t> out;
    out.reserve(static_cast<std::size_t>(k));
    for (std::int64_t i = 0; i < k; ++i) {
        const auto j = rng.uniform_int(i, n - 1);
        const auto vi = lookup(i);
        const auto vj = lookup(j);
        out.push_back(vj);
        assign(j, vi);
        assign(i, vj);
    }
    return out;
}

/// The n-th member (0-based) of angle class r: beta = r + N_R q (shifted into [1, N_T N_R]).
inline GridIndex class_member(const RadarConfig& cfg, std::int64_t r, std::int64_t n) {
    const std::int64_t per_beta = cfg.n_samples() * cfg.n_doppler();
    const std::int64_t q = n / per_beta;
    const std::int64_t rest = n % per_beta;
    std::int64_t beta = r + cfg.n_receive() * q;
    if (beta == 0) beta = cfg.n_angles();
    GridIndex t;
    t.beta = beta;
    if (cfg.doppler_mode() == DopplerMode::Full) {
        t.tau = rest / cfg.n_samples() + 1;
        t.f = rest % cfg.n_samples() + 1;
    } else {
        t.tau = rest + 1;
        t.f = cfg.zero_doppler();
    }
    return t;
}

} // namespace detail

/// Number of grid points in each angle class, N / N_R.
inline std::int64_t class_capacity(const RadarConfig& cfg) { return cfg.grid_size() / cfg.n_classes(); }

/// Throws ParameterError unless a support of size s with balancedness exactly
/// eta can be built: eta | N_R, (N_R/eta) | s, and eta s / N_R fits in a class.
inline void check_balanced_feasible(const RadarConfig& cfg, std::int64_t s, std::int64_t eta) {
    const std::int64_t nr = cfg.n_receive();
    if (s < 1) throw ParameterError("sparsity must be positive");
    if (eta < 1 || eta > nr || nr % eta != 0)
        throw ParameterError("eta = " + std::to_string(eta) + " must divide N_R = " + std::to_string(nr));
    const std::int64_t n_used = nr / eta;
    if (s % n_used != 0)
        throw ParameterError("sparsity " + std::to_string(s) + " is not divisible by N_R/eta = " +
                             std::to_string(n_used) + ", so eta = " + std::to_string(eta) +
                             " cannot be met exactly");
    if (s / n_used > class_capacity(cfg))
        throw ParameterError("eta*s/N_R = " + std::to_string(s / n_used) + " exceeds the angle-class capacity " +
                             std::to_string(class_capacity(cfg)));
}

/// Support of size s with balancedness exactly eta_target: N_R/eta classes are chosen
/// uniformly, and each receives eta s / N_R indices uniformly without replacement.
inline SupportSet sample_balanced_support(const RadarConfig& cfg, std::int64_t s, std::int64_t eta_target,
                                          std::uint64_t seed) {
    check_balanced_feasible(cfg, s, eta_target);
    const std::int64_t nr = cfg.n_receive();
    const std::int64_t n_used = nr / eta_target;
    const std::int64_t per_class = s / n_used;

    RandomStream rng(seed, StreamTag::Support);
    auto classes = detail::sample_without_replacement(nr, n_used, rng);
    std::vector<GridIndex> indices;
    indices.reserve(static_cast<std::size_t>(s));
    for (auto r : classes)
        for (auto n : detail::sample_without_replacement(class_capacity(cfg), per_class, rng))
            indices.push_back(detail::class_member(cfg, r, n));
    return SupportSet(cfg, std::move(indices));
}

/// Support of size s with class sizes differing by at most one, the least
/// attainable eta = N_R ceil(s/N_R) / s. The s mod N_R larger classes are
/// chosen uniformly.
inline SupportSet sample_most_balanced_support(const RadarConfig& cfg, std::int64_t s, std::uint64_t seed) {
    const std::int64_t nr = cfg.n_receive();
    if (s < 1) throw ParameterError("sparsity must be positive");
    const std::int64_t base = s / nr, extra = s % nr;
    if (base + (extra > 0 ? 1 : 0) > class_capacity(cfg))
        throw ParameterError("sparsity " + std::to_string(s) + " exceeds N_R times the angle-class capacity");
    RandomStream rng(seed, StreamTag::Support);
    std::vector<std::int64_t> sizes(static_cast<std::size_t>(nr), base);
    for (auto r : detail::sample_without_replacement(nr, extra, rng)) ++sizes[static_cast<std::size_t>(r)];
    std::vector<GridIndex> indices;
    indices.reserve(static_cast<std::size_t>(s));
    for (std::int64_t r = 0; r < nr; ++r)
        for (auto n : detail::sample_without_replacement(class_capacity(cfg), sizes[static_cast<std::size_t>(r)], rng))
            indices.push_back(detail::class_member(cfg, r, n));
    return SupportSet(cfg, std::move(indices));
}

/// Uniform s-subset of the whole grid.
inline SupportSet sample_unconstrained_support(const RadarConfig& cfg, std::int64_t s, std::uint64_t seed) {
    if (s < 0 || s > cfg.grid_size())
        throw ParameterError("sparsity " + std::to_string(s) + " is outside [0, N = " +
                             std::to_string(cfg.grid_size()) + "]");
    RandomStream rng(seed, StreamTag::Support);
    std::vector<GridIndex> indices;
    indices.reserve(static_cast<std::size_t>(s));
    if (2 * s > cfg.grid_size()) {
        // Dense regime: shuffle everything and keep a prefix.
        std::vector<std::int64_t> all(static_cast<std::size_t>(cfg.grid_size()));
        std::iota(all.begin(), all.end(), std::int64_t{0});
        for (std::int64_t i = 0; i < s; ++i) std::swap(all[i], all[rng.uniform_int(i, cfg.grid_size() - 1)]);
        for (std::int64_t i = 0; i < s; ++i) indices.push_back(cfg.grid_index(all[i]));
    } else {
        for (auto n : detail::sample_without_replacement(cfg.grid_size(), s, rng)) indices.push_back(cfg.grid_index(n));
    }
    return SupportSet(cfg, std::move(indices));
}

/// Sparse target scene: support plus one nonzero coefficient per index,
/// stored in the support's (linear) order.
class TargetScene {
public:
    TargetScene(SupportSet support, std::vector<cplx> coefficients)
        : support_(std::move(support)), coefficients_(std::move(coefficients)) {
        if (coefficients_.size() != support_.size())
            throw DomainError("TargetScene: one coefficient per support index required");
        for (const auto& c : coefficients_)
            if (c == cplx{}) throw DomainError("TargetScene: coefficients must be nonzero");
    }

    const SupportSet& support() const { return support_; }
    const std::vector<cplx>& coefficients() const { return coefficients_; }
    std::size_t sparsity() const { return support_.size(); }

    std::vector<SparseEntry> entries() const {
        std::vector<SparseEntry> out;
        out.reserve(support_.size());
        for (std::size_t k = 0; k < support_.size(); ++k) out.push_back({support_[k], coefficients_[k]});
        return out;
    }

    cvec dense(const RadarConfig& cfg) const {
        cvec x = cvec::Zero(cfg.grid_size());
        for (std::size_t k = 0; k < support_.size(); ++k) x[support_.linear_indices()[k]] = coefficients_[k];
        return x;
    }

private:
    SupportSet support_;
    std::vector<cplx> coefficients_;
};

/// Scene with constant magnitude `amplitude` and Steinhaus phases.
inline TargetScene make_scene(const SupportSet& support, double amplitude, std::uint64_t seed) {
    if (!(amplitude > 0.0)) throw ParameterError("make_scene: amplitude must be positive");
    RandomStream rng(seed, StreamTag::Phases);
    std::vector<cplx> coeffs;
    coeffs.reserve(support.size());
    for (std::size_t k = 0; k < support.size(); ++k)
        coeffs.push_back(std::polar(amplitude, 2.0 * std::numbers::pi * rng.uniform()));
    return TargetScene(support, std::move(coeffs));
}

/// Minimum magnitude for support recovery by the LASSO, taken with equality:
/// 8 sigma sqrt(2 ln N) / sqrt(N_T N_R N_t).
inline double threshold_amplitude(const RadarConfig& cfg, double sigma) {
    return 8.0 * sigma * std::sqrt(2.0 * std::log(static_cast<double>(cfg.grid_size()))) / cfg.normalization();
}

} // namespace mimocs
