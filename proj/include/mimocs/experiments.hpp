#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mimocs/errors.hpp"
#include "mimocs/io.hpp"
#include "mimocs/measurement_operator.hpp"
#include "mimocs/parallel.hpp"
#include "mimocs/radar_config.hpp"
#include "mimocs/rng.hpp"
#include "mimocs/signals.hpp"
#include "mimocs/solvers.hpp"
#include "mimocs/support.hpp"

namespace mimocs {

/// Balancedness target of a sweep; nullopt draws unconstrained supports.
using EtaSpec = std::optional<std::int64_t>;

inline std::string eta_label(const EtaSpec& eta) { return eta ? std::to_string(*eta) : std::string("free"); }

inline EtaSpec parse_eta(const std::string& text) {
    if (text == "free") return std::nullopt;
    std::size_t used = 0;
    std::int64_t v = 0;
    try {
        v = std::stoll(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != text.size() || used == 0) throw ParameterError("eta must be an integer or 'free', got '" + text + "'");
    return v;
}

/// Sorting key: integer etas ascending, then "free".
inline std::int64_t eta_order(const EtaSpec& eta) { return eta ? *eta : INT64_MAX; }

struct ThresholdRule {
    enum Kind { HalfAmplitude, Fixed } kind = HalfAmplitude;
    double value = 0.0;

    static ThresholdRule half_amplitude() { return {}; }
    static ThresholdRule fixed(double t) { return {Fixed, t}; }
    double threshold(double amplitude) const { return kind == HalfAmplitude ? 0.5 * amplitude : value; }
};

struct ExperimentSpec {
    RadarConfig cfg{8, 8, 64, DopplerMode::DopplerFree};
    SignalFamily family = SignalFamily::ComplexGaussian;
    double sigma = 1.0;
    std::vector<std::int64_t> sparsity_grid;
    std::vector<EtaSpec> eta_list;
    std::int64_t trials = 200;
    std::uint64_t master_seed = 1;
    ThresholdRule success_threshold_rule;
    SolverOptions solver;
    int threads = default_thread_count();

    void validate() const {
        if (trials < 1) throw ParameterError("trials must be at least 1");
        if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ParameterError("sigma must be a finite nonnegative number");
        if (sparsity_grid.empty()) throw ParameterError("sparsity grid is empty");
        if (eta_list.empty()) throw ParameterError("eta list is empty");
        for (std::size_t k = 1; k < sparsity_grid.size(); ++k)
            if (sparsity_grid[k] <= sparsity_grid[k - 1])
                throw ParameterError("sparsity grid must be strictly increasing");
        if (success_threshold_rule.kind == ThresholdRule::Fixed && !(success_threshold_rule.value > 0.0))
            throw ParameterError("a fixed success threshold must be positive");
        solver.validate();
        for (const auto& eta : eta_list)
            for (auto s : sparsity_grid) {
                try {
                    if (eta) {
                        check_balanced_feasible(cfg, s, *eta);
                    } else if (s < 1 || s > cfg.grid_size()) {
                        throw ParameterError("sparsity " + std::to_string(s) + " is outside [1, N]");
                    }
                } catch (const ParameterError& e) {
                    throw ParameterError("infeasible grid entry (s = " + std::to_string(s) +
                                         ", eta = " + eta_label(eta) + "): " + e.what());
                }
            }
    }
};

struct TrialRecord {
    std::int64_t s = 0;
    EtaSpec eta;
    std::int64_t index = 0;
    bool success = false;
    bool support_exact = false;
    bool converged = false;
    int iterations = 0;
    double linf_error = 0.0;
    double amplitude = 0.0;
    double lambda = 0.0;
    double seconds = 0.0;

    bool operator==(const TrialRecord& o) const {
        return s == o.s && eta == o.eta && index == o.index && success == o.success &&
               support_exact == o.support_exact && converged == o.converged && iterations == o.iterations &&
               linf_error == o.linf_error && amplitude == o.amplitude && lambda == o.lambda;
    }
};

/// Seed of one trial; every random object in the trial derives from it.
inline std::uint64_t trial_seed(std::uint64_t master, std::int64_t s, const EtaSpec& eta, std::int64_t index) {
    const std::uint64_t eta_code = eta ? static_cast<std::uint64_t>(*eta) : 0;
    return derive_seed(master, StreamTag::Trial,
                       {static_cast<std::uint64_t>(s), eta_code, static_cast<std::uint64_t>(index)});
}

/// Amplitude of the scene coefficients. Without noise the threshold amplitude
/// is zero, so unit amplitude is used instead.
inline double scene_amplitude(const RadarConfig& cfg, double sigma) {
    return sigma > 0.0 ? threshold_amplitude(cfg, sigma) : 1.0;
}

/// One Monte Carlo trial: fresh signals, support, scene and noise, then LASSO
/// and the success test. A non-convergent solve counts as a failure.
inline TrialRecord run_trial(const ExperimentSpec& spec, std::int64_t s, const EtaSpec& eta, std::int64_t index) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto& cfg = spec.cfg;
    const std::uint64_t seed = trial_seed(spec.master_seed, s, eta, index);

    const auto sig = generate_signals(cfg, spec.family, seed);
    const MeasurementOperator op(cfg, sig);
    const auto support = eta ? sample_balanced_support(cfg, s, *eta, seed) : sample_unconstrained_support(cfg, s, seed);
    const double amplitude = scene_amplitude(cfg, spec.sigma);
    const auto scene = make_scene(support, amplitude, seed);

    cvec y = op.forward(scene.entries());
    if (spec.sigma > 0.0) {
        RandomStream noise(seed, StreamTag::Noise);
        for (auto& v : y) v += spec.sigma * noise.complex_gaussian();
    }

    double lambda = paper_lambda(cfg, spec.sigma);
    if (!(lambda > 0.0)) lambda = 1e-3 * op.adjoint(y).cwiseAbs().maxCoeff();

    TrialRecord rec;
    rec.s = s;
    rec.eta = eta;
    rec.index = index;
    rec.amplitude = amplitude;
    rec.lambda = lambda;
    const auto res = lasso(op, y, lambda, spec.solver);
    const auto rep = declare_success(cfg, scene, res.x_hat, spec.success_threshold_rule.threshold(amplitude));
    rec.converged = res.converged;
    rec.iterations = res.iterations;
    rec.linf_error = rep.linf_error;
    rec.support_exact = rep.support_exact;
    rec.success = res.converged && rep.success;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

struct ExperimentRow {
    std::int64_t s = 0;
    EtaSpec eta;
    std::int64_t trials = 0;
    std::int64_t successes = 0;
    double success_rate = 0.0;
    std::int64_t nonconverged = 0;
    double mean_iterations = 0.0;
    /// Summed per-trial wall time in seconds.
    double wall_time = 0.0;
};

struct ExperimentResult {
    std::vector<ExperimentRow> rows;

    const ExperimentRow* find(std::int64_t s, const EtaSpec& eta) const {
        for (const auto& r : rows)
            if (r.s == s && r.eta == eta) return &r;
        return nullptr;
    }
};

inline void sort_rows(std::vector<ExperimentRow>& rows) {
    std::sort(rows.begin(), rows.end(), [](const ExperimentRow& a, const ExperimentRow& b) {
        if (eta_order(a.eta) != eta_order(b.eta)) return eta_order(a.eta) < eta_order(b.eta);
        return a.s < b.s;
    });
}

/// Runs every (eta, s, trial) task on a shared work queue and aggregates
/// with integer sums, so the counts do not depend on the thread count.
inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    const auto n_s = static_cast<std::int64_t>(spec.sparsity_grid.size());
    const auto n_eta = static_cast<std::int64_t>(spec.eta_list.size());
    const std::int64_t n_tasks = n_eta * n_s * spec.trials;
    std::vector<TrialRecord> records(static_cast<std::size_t>(n_tasks));
    parallel_for(n_tasks, spec.threads, [&](std::int64_t task) {
        const auto point = task / spec.trials;
        const auto e = spec.eta_list[static_cast<std::size_t>(point / n_s)];
        const auto s = spec.sparsity_grid[static_cast<std::size_t>(point % n_s)];
        records[static_cast<std::size_t>(task)] = run_trial(spec, s, e, task % spec.trials);
    });

    ExperimentResult result;
    for (std::int64_t point = 0; point < n_eta * n_s; ++point) {
        ExperimentRow row;
        row.eta = spec.eta_list[static_cast<std::size_t>(point / n_s)];
        row.s = spec.sparsity_grid[static_cast<std::size_t>(point % n_s)];
        row.trials = spec.trials;
        std::int64_t iterations = 0;
        for (std::int64_t t = 0; t < spec.trials; ++t) {
            const auto& r = records[static_cast<std::size_t>(point * spec.trials + t)];
            row.successes += r.success ? 1 : 0;
            row.nonconverged += r.converged ? 0 : 1;
            iterations += r.iterations;
            row.wall_time += r.seconds;
        }
        row.success_rate = static_cast<double>(row.successes) / static_cast<double>(row.trials);
        row.mean_iterations = static_cast<double>(iterations) / static_cast<double>(row.trials);
        result.rows.push_back(row);
    }
    sort_rows(result.rows);
    return result;
}

inline constexpr const char* kCsvHeader = "s,eta,trials,successes,success_rate";

inline std::string format_csv(const ExperimentResult& result) {
    auto rows = result.rows;
    sort_rows(rows);
    std::string out = std::string(kCsvHeader) + "\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%lld,%s,%lld,%lld,%.6f\n", static_cast<long long>(r.s),
                      eta_label(r.eta).c_str(), static_cast<long long>(r.trials),
                      static_cast<long long>(r.successes), r.success_rate);
        out += buf;
    }
    return out;
}

inline void emit_csv(const ExperimentResult& result, const std::filesystem::path& path) {
    io::write_file(path, format_csv(result));
}

/// Parses a CSV written by format_csv. success_rate is recomputed from the
/// counts and checked against the printed value.
inline ExperimentResult parse_csv(const std::string& text, const std::string& origin = "<csv>") {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || io::KeyValueFile::trim(line) != kCsvHeader)
        throw IoError(origin, "missing CSV header");
    ExperimentResult result;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (io::KeyValueFile::trim(line).empty()) continue;
        const auto fields = io::split_list(line);
        if (fields.size() != 5) throw IoError(origin, "line " + std::to_string(lineno) + ": expected 5 fields");
        ExperimentRow r;
        try {
            r.s = std::stoll(fields[0]);
            r.eta = parse_eta(fields[1]);
            r.trials = std::stoll(fields[2]);
            r.successes = std::stoll(fields[3]);
            const double printed = std::stod(fields[4]);
            r.success_rate = static_cast<double>(r.successes) / static_cast<double>(r.trials);
            if (std::abs(printed - r.success_rate) > 5e-7) throw IoError(origin, "inconsistent success_rate");
        } catch (const IoError&) {
            throw;
        } catch (const std::exception&) {
            throw IoError(origin, "line " + std::to_string(lineno) + ": malformed row");
        }
        if (r.trials < 1 || r.successes < 0 || r.successes > r.trials)
            throw IoError(origin, "line " + std::to_string(lineno) + ": counts out of range");
        result.rows.push_back(r);
    }
    return result;
}

// Experiment configuration files: flat `key = value`, lists comma-separated.
// Keys: nt, nr, ntime, doppler, family, sigma, sparsity, eta, trials, seed,
// threshold ("half" or a number), threads, max_iterations, tolerance.

inline void apply_key_values(ExperimentSpec& spec, const io::KeyValueFile& kv) {
    try {
        if (kv.contains("nt") || kv.contains("nr") || kv.contains("ntime") || kv.contains("doppler"))
            spec.cfg = RadarConfig(static_cast<int>(std::stoll(kv.get_or("nt", std::to_string(spec.cfg.n_transmit())))),
                                   static_cast<int>(std::stoll(kv.get_or("nr", std::to_string(spec.cfg.n_receive())))),
                                   static_cast<int>(std::stoll(kv.get_or("ntime", std::to_string(spec.cfg.n_samples())))),
                                   parse_doppler_mode(kv.get_or("doppler", std::string(to_string(spec.cfg.doppler_mode())))));
        if (kv.contains("family")) spec.family = parse_signal_family(kv.get("family"));
        if (kv.contains("sigma")) spec.sigma = kv.get_double("sigma");
        if (kv.contains("sparsity")) {
            spec.sparsity_grid.clear();
            for (const auto& v : io::split_list(kv.get("sparsity"))) spec.sparsity_grid.push_back(std::stoll(v));
        }
        if (kv.contains("eta")) {
            spec.eta_list.clear();
            for (const auto& v : io::split_list(kv.get("eta"))) spec.eta_list.push_back(parse_eta(v));
        }
        if (kv.contains("trials")) spec.trials = kv.get_int("trials");
        if (kv.contains("seed")) spec.master_seed = kv.get_uint("seed");
        if (kv.contains("threads")) spec.threads = static_cast<int>(kv.get_int("threads"));
        if (kv.contains("max_iterations")) spec.solver.max_iterations = static_cast<int>(kv.get_int("max_iterations"));
        if (kv.contains("tolerance")) spec.solver.relative_tolerance = kv.get_double("tolerance");
        if (kv.contains("threshold")) {
            const auto t = kv.get("threshold");
            spec.success_threshold_rule = t == "half" ? ThresholdRule::half_amplitude()
                                                      : ThresholdRule::fixed(std::stod(t));
        }
    } catch (const ParameterError&) {
        throw;
    } catch (const std::exception& e) {
        throw ParameterError(std::string("experiment config: malformed value (") + e.what() + ")");
    }
}

inline io::KeyValueFile to_key_values(const ExperimentSpec& spec) {
    io::KeyValueFile kv;
    kv.set("nt", spec.cfg.n_transmit());
    kv.set("nr", spec.cfg.n_receive());
    kv.set("ntime", spec.cfg.n_samples());
    kv.set("doppler", std::string(to_string(spec.cfg.doppler_mode())));
    kv.set("family", std::string(to_string(spec.family)));
    kv.set("sigma", spec.sigma);
    std::string grid, etas;
    for (auto s : spec.sparsity_grid) grid += (grid.empty() ? "" : ",") + std::to_string(s);
    for (const auto& e : spec.eta_list) etas += (etas.empty() ? "" : ",") + eta_label(e);
    kv.set("sparsity", grid);
    kv.set("eta", etas);
    kv.set("trials", spec.trials);
    kv.set("seed", spec.master_seed);
    kv.set("threshold", spec.success_threshold_rule.kind == ThresholdRule::HalfAmplitude
                            ? std::string("half")
                            : io::KeyValueFile::format_double(spec.success_threshold_rule.value));
    kv.set("max_iterations", spec.solver.max_iterations);
    kv.set("tolerance", spec.solver.relative_tolerance);
    return kv;
}

/// Binomial standard error of a rate estimated from n trials.
inline double binomial_se(double p, std::int64_t n) { return std::sqrt(p * (1.0 - p) / static_cast<double>(n)); }

/// Largest s on the row's curve with success_rate >= 0.5, or 0 if none.
inline std::int64_t transition_point(const ExperimentResult& result, const EtaSpec& eta) {
    std::int64_t best = 0;
    for (const auto& r : result.rows)
        if (r.eta == eta && r.success_rate >= 0.5) best = std::max(best, r.s);
    return best;
}

} // namespace mimocs
