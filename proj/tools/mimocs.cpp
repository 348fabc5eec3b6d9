// mimocs: command-line front end for instance generation, recovery,
// Gram analysis and Monte Carlo experiments.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mimocs/mimocs.hpp"

namespace fs = std::filesystem;
using namespace mimocs;

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kNoConvergence = 3, kIo = 4 };

/// Thrown for problems the user can fix on the command line (exit 2).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::uint64_t seed = 1;
    std::string config;
    std::string out = ".";
    int threads = default_thread_count();
    int verbosity = 1;
};

/// Model options shared by most subcommands. Values come from --config
/// first and explicit flags override them.
struct ModelFlags {
    int nt = 2, nr = 2, ntime = 16;
    std::string doppler = "free";
    std::string family = "gaussian";
    double sigma = 1.0;
    std::int64_t s = 4;
    std::string eta = "free";
    std::int64_t trials = 200;

    CLI::Option *o_nt{}, *o_nr{}, *o_ntime{}, *o_doppler{}, *o_family{}, *o_sigma{}, *o_s{}, *o_eta{}, *o_trials{};

    void add(CLI::App& sub, bool with_sparsity, bool with_trials) {
        o_nt = sub.add_option("--nt", nt, "number of transmit antennas N_T")->check(CLI::PositiveNumber);
        o_nr = sub.add_option("--nr", nr, "number of receive antennas N_R")->check(CLI::PositiveNumber);
        o_ntime = sub.add_option("--ntime", ntime, "samples per signal N_t")->check(CLI::PositiveNumber);
        o_doppler = sub.add_option("--doppler", doppler, "grid mode: full or free")->check(CLI::IsMember({"full", "free"}));
        o_family = sub.add_option("--family", family, "signal family: gaussian, rademacher or steinhaus")
                       ->check(CLI::IsMember({"gaussian", "rademacher", "steinhaus"}));
        o_sigma = sub.add_option("--sigma", sigma, "noise standard deviation")->check(CLI::NonNegativeNumber);
        if (with_sparsity) {
            o_s = sub.add_option("--s", s, "sparsity")->check(CLI::PositiveNumber);
            o_eta = sub.add_option("--eta", eta, "balancedness target (integer) or free");
        }
        if (with_trials) o_trials = sub.add_option("--trials", trials, "number of random trials")->check(CLI::PositiveNumber);
    }

    void apply(const io::KeyValueFile& kv) {
        auto pick = [&](CLI::Option* o, const char* key, auto& target) {
            if (o && o->count() == 0 && kv.contains(key)) {
                using T = std::decay_t<decltype(target)>;
                if constexpr (std::is_same_v<T, std::string>) target = kv.get(key);
                else if constexpr (std::is_same_v<T, double>) target = kv.get_double(key);
                else target = static_cast<T>(kv.get_int(key));
            }
        };
        pick(o_nt, "nt", nt);
        pick(o_nr, "nr", nr);
        pick(o_ntime, "ntime", ntime);
        pick(o_doppler, "doppler", doppler);
        pick(o_family, "family", family);
        pick(o_sigma, "sigma", sigma);
        pick(o_s, "s", s);
        pick(o_eta, "eta", eta);
        pick(o_trials, "trials", trials);
    }

    RadarConfig config() const { return RadarConfig(nt, nr, ntime, parse_doppler_mode(doppler)); }
    SignalFamily signal_family() const { return parse_signal_family(family); }
    EtaSpec eta_spec() const { return parse_eta(eta); }
};

void add_globals(CLI::App& sub, Globals& g) {
    sub.add_option("--seed", g.seed, "master seed");
    sub.add_option("--config", g.config, "key = value configuration file");
    sub.add_option("--out", g.out, "output directory");
    sub.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
    sub.add_option("--verbosity", g.verbosity, "0 quiet, 1 normal, 2 detailed")->check(CLI::Range(0, 2));
}

std::optional<io::KeyValueFile> load_config(const Globals& g) {
    if (g.config.empty()) return std::nullopt;
    if (!fs::exists(g.config)) throw UsageError("config file not found: " + g.config);
    return io::read_key_values(g.config);
}

fs::path prepare_out(const Globals& g) {
    fs::path dir(g.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError(dir.string(), "cannot create output directory: " + ec.message());
    return dir;
}

void log(const Globals& g, int level, const std::string& msg) {
    if (g.verbosity >= level) std::cout << msg << "\n";
}

std::string fmt(double v) { return io::KeyValueFile::format_double(v); }

std::string format_index(const GridIndex& t) {
    return std::to_string(t.beta) + ":" + std::to_string(t.tau) + ":" + std::to_string(t.f);
}

// Scene files: one `beta,tau,f,re,im` line per target.
std::string format_scene(const std::vector<GridIndex>& idx, const std::vector<cplx>& coeffs) {
    std::string out = "# beta,tau,f,re,im\n";
    char buf[160];
    for (std::size_t k = 0; k < idx.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%lld,%lld,%lld,%.17g,%.17g\n", static_cast<long long>(idx[k].beta),
                      static_cast<long long>(idx[k].tau), static_cast<long long>(idx[k].f), coeffs[k].real(),
                      coeffs[k].imag());
        out += buf;
    }
    return out;
}

TargetScene parse_scene(const RadarConfig& cfg, const fs::path& path) {
    std::vector<GridIndex> idx;
    std::vector<cplx> coeffs;
    std::istringstream in(io::read_file(path));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto f = io::split_list(line);
        if (f.size() != 5) throw IoError(path.string(), "expected beta,tau,f,re,im");
        idx.push_back({std::stoll(f[0]), std::stoll(f[1]), std::stoll(f[2])});
        coeffs.emplace_back(std::stod(f[3]), std::stod(f[4]));
    }
    // SupportSet sorts its indices, so reorder coefficients to match.
    SupportSet support(cfg, idx);
    std::vector<cplx> sorted(coeffs.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const auto lin = cfg.linear_index(idx[k]);
        const auto& li = support.linear_indices();
        sorted[static_cast<std::size_t>(std::lower_bound(li.begin(), li.end(), lin) - li.begin())] = coeffs[k];
    }
    return TargetScene(std::move(support), std::move(sorted));
}

/// Handcrafted support: one `beta,tau,f` line per index.
SupportSet read_support(const RadarConfig& cfg, const fs::path& path) {
    if (!fs::exists(path)) throw UsageError("support file not found: " + path.string());
    std::vector<GridIndex> idx;
    std::istringstream in(io::read_file(path));
    std::string line;
    while (std::getline(in, line)) {
        if (io::KeyValueFile::trim(line).empty() || line[0] == '#') continue;
        const auto f = io::split_list(line);
        if (f.size() < 3) throw IoError(path.string(), "expected beta,tau,f");
        idx.push_back({std::stoll(f[0]), std::stoll(f[1]), std::stoll(f[2])});
    }
    return SupportSet(cfg, std::move(idx));
}

SupportSet draw_support(const RadarConfig& cfg, std::int64_t s, const EtaSpec& eta, std::uint64_t seed) {
    return eta ? sample_balanced_support(cfg, s, *eta, seed) : sample_unconstrained_support(cfg, s, seed);
}

struct Bundle {
    RadarConfig cfg;
    SignalSet sig;
    TargetScene scene;
    cvec y;
    double sigma;
    double amplitude;
};

Bundle load_bundle(const fs::path& dir) {
    for (const char* name : {"config.txt", "scene.txt", "measurements.txt"})
        if (!fs::exists(dir / name)) throw UsageError("instance bundle is missing " + (dir / name).string());
    const auto kv = io::read_key_values(dir / "config.txt");
    const RadarConfig cfg(static_cast<int>(kv.get_int("nt")), static_cast<int>(kv.get_int("nr")),
                          static_cast<int>(kv.get_int("ntime")), parse_doppler_mode(kv.get("doppler")));
    const auto family = parse_signal_family(kv.get("family"));
    std::optional<SignalSet> sig;
    if (kv.get_or("materialized", "false") == "true") {
        if (!fs::exists(dir / "signals.txt")) throw UsageError("instance bundle is missing signals.txt");
        const cvec stacked = io::read_complex_vector(dir / "signals.txt");
        if (stacked.size() != std::int64_t{cfg.n_transmit()} * cfg.n_samples())
            throw IoError((dir / "signals.txt").string(), "signal array has the wrong length");
        std::vector<cvec> rows;
        for (int i = 0; i < cfg.n_transmit(); ++i) rows.push_back(stacked.segment(std::int64_t{i} * cfg.n_samples(), cfg.n_samples()));
        sig.emplace(std::move(rows), family, kv.get_uint("signal_seed"));
    } else {
        sig.emplace(generate_signals(cfg, family, kv.get_uint("signal_seed")));
    }
    auto scene = parse_scene(cfg, dir / "scene.txt");
    cvec y = io::read_complex_vector(dir / "measurements.txt");
    if (y.size() != cfg.n_measurements())
        throw IoError((dir / "measurements.txt").string(), "measurement vector has the wrong length");
    return {cfg, std::move(*sig), std::move(scene), std::move(y), kv.get_double("sigma"), kv.get_double("amplitude")};
}

int cmd_generate(const Globals& g, ModelFlags& m, bool materialize, bool binary, const std::string& support_file) {
    if (auto kv = load_config(g)) m.apply(*kv);
    const auto cfg = m.config();
    auto eta = m.eta_spec();
    std::optional<SupportSet> given;
    if (!support_file.empty()) {
        given.emplace(read_support(cfg, support_file));
        if (given->empty()) throw UsageError("support file is empty");
        m.s = static_cast<std::int64_t>(given->size());
        eta = std::nullopt;
    }
    if (eta) check_balanced_feasible(cfg, m.s, *eta);
    const auto sig = generate_signals(cfg, m.signal_family(), g.seed);
    const MeasurementOperator op(cfg, sig);
    const auto support = given ? *given : draw_support(cfg, m.s, eta, g.seed);
    const double amplitude = scene_amplitude(cfg, m.sigma);
    const auto scene = make_scene(support, amplitude, g.seed);
    cvec y = op.forward(scene.entries());
    if (m.sigma > 0.0) {
        RandomStream noise(g.seed, StreamTag::Noise);
        for (auto& v : y) v += m.sigma * noise.complex_gaussian();
    }

    const auto dir = prepare_out(g);
    io::KeyValueFile kv;
    kv.set("nt", cfg.n_transmit());
    kv.set("nr", cfg.n_receive());
    kv.set("ntime", cfg.n_samples());
    kv.set("doppler", std::string(to_string(cfg.doppler_mode())));
    kv.set("family", std::string(to_string(sig.family())));
    kv.set("signal_seed", g.seed);
    kv.set("seed", g.seed);
    kv.set("sigma", m.sigma);
    kv.set("s", m.s);
    kv.set("eta", given ? std::string("given") : eta_label(eta));
    kv.set("amplitude", amplitude);
    kv.set("materialized", materialize);
    kv.set("array_format", std::string(binary ? "binary" : "text"));
    io::write_key_values(dir / "config.txt", kv, "mimocs instance");
    io::write_file(dir / "scene.txt", format_scene(scene.support().indices(), scene.coefficients()));
    io::write_complex_vector(dir / "measurements.txt", y, binary);
    if (materialize) io::write_complex_vector(dir / "signals.txt", sig.stacked(), binary);
    log(g, 1, "wrote instance (N = " + std::to_string(cfg.grid_size()) + ", m = " + std::to_string(cfg.n_measurements()) +
                  ", s = " + std::to_string(m.s) + ") to " + dir.string());
    return kOk;
}

int cmd_solve(const Globals& g, const std::string& in_dir, const std::string& solver, std::optional<double> lambda,
              std::optional<double> rho) {
    const fs::path src(in_dir.empty() ? g.out : in_dir);
    const auto b = load_bundle(src);
    const MeasurementOperator op(b.cfg, b.sig);
    SolverOptions opts;

    SolverResult res;
    double rho_used = 0.0;
    if (solver == "lasso") {
        double lam = lambda ? *lambda : paper_lambda(b.cfg, b.sigma);
        if (!(lam > 0.0)) lam = 1e-3 * op.adjoint(b.y).cwiseAbs().maxCoeff();
        res = lasso(op, b.y, lam, opts);
    } else {
        rho_used = rho ? *rho : b.sigma * std::sqrt(b.cfg.n_measurements() + 2.0 * std::sqrt(b.cfg.n_measurements()));
        res = basis_pursuit_denoise(op, b.y, rho_used, opts);
    }
    const double threshold = 0.5 * b.amplitude;
    const auto rep = declare_success(b.cfg, b.scene, res.x_hat, threshold);
    const cvec noise = b.y - op.forward(b.scene.entries());
    const auto cond = check_conditions(b.cfg, b.sig, b.scene, noise, b.sigma);

    io::KeyValueFile kv;
    kv.set("solver", solver);
    kv.set("lambda", res.lambda);
    if (solver == "bpdn") kv.set("rho", rho_used);
    kv.set("converged", res.converged);
    kv.set("iterations", res.iterations);
    kv.set("final_objective", res.final_objective);
    kv.set("residual_norm", res.residual_norm);
    kv.set("support_size", res.recovered_support.size());
    std::string supp;
    for (const auto& t : res.recovered_support) supp += (supp.empty() ? "" : ",") + format_index(t);
    kv.set("recovered_support", supp);
    kv.set("threshold", threshold);
    kv.set("success", rep.success);
    kv.set("support_exact", rep.support_exact);
    kv.set("linf_error", rep.linf_error);
    kv.set("relative_l2_error", (res.x_hat - b.scene.dense(b.cfg)).norm() / b.scene.dense(b.cfg).norm());
    kv.set("mu", cond.mu);
    const std::pair<bool, double> cs[] = {{cond.c1, cond.c1_value}, {cond.c2, cond.c2_value}, {cond.c3, cond.c3_value},
                                          {cond.c4, cond.c4_value}, {cond.c5, cond.c5_value}};
    for (int k = 0; k < 5; ++k) {
        kv.set("condition" + std::to_string(k + 1), cs[k].first);
        kv.set("condition" + std::to_string(k + 1) + "_value", cs[k].second);
    }
    kv.set("conditions_all", cond.all());

    const auto dir = prepare_out(g);
    io::write_key_values(dir / "result.txt", kv, "mimocs solve");
    std::vector<cplx> vals;
    for (const auto& t : res.recovered_support) vals.push_back(res.x_hat[b.cfg.linear_index(t)]);
    io::write_file(dir / "estimate.txt", format_scene(res.recovered_support, vals));

    log(g, 1, solver + ": converged=" + (res.converged ? std::string("true") : std::string("false")) +
                  " iterations=" + std::to_string(res.iterations) + " support=" +
                  std::to_string(res.recovered_support.size()) + " success=" + (rep.success ? "true" : "false"));
    log(g, 2, kv.to_string());
    return res.converged ? kOk : kNoConvergence;
}

int cmd_analyze(const Globals& g, ModelFlags& m, const std::string& in_dir) {
    std::optional<Bundle> bundle;
    if (!in_dir.empty()) bundle.emplace(load_bundle(in_dir));
    if (!bundle)
        if (auto kv = load_config(g)) m.apply(*kv);
    const RadarConfig cfg = bundle ? bundle->cfg : m.config();
    const SignalSet sig = bundle ? bundle->sig : generate_signals(cfg, m.signal_family(), g.seed);
    const SupportSet support = bundle ? bundle->scene.support() : draw_support(cfg, m.s, m.eta_spec(), g.seed);

    const auto rep = gram_closed_form(cfg, sig, support);
    const auto bal = balancedness(cfg, support);
    io::KeyValueFile kv;
    kv.set("nt", cfg.n_transmit());
    kv.set("nr", cfg.n_receive());
    kv.set("ntime", cfg.n_samples());
    kv.set("doppler", std::string(to_string(cfg.doppler_mode())));
    kv.set("s", support.size());
    kv.set("eta", bal.eta.den == 1 ? std::to_string(bal.eta.num)
                                  : std::to_string(bal.eta.num) + "/" + std::to_string(bal.eta.den));
    kv.set("eta_value", bal.eta.value());
    std::string sizes, blocks;
    for (auto c : bal.class_sizes) sizes += (sizes.empty() ? "" : ",") + std::to_string(c);
    for (auto d : rep.block_deviations) blocks += (blocks.empty() ? "" : ",") + fmt(d);
    kv.set("class_sizes", sizes);
    kv.set("gram_deviation", rep.deviation);
    kv.set("block_deviations", blocks);
    kv.set("coherence_within", rep.coherence_within);
    if (bundle) {
        const MeasurementOperator op(cfg, sig);
        const cvec noise = bundle->y - op.forward(bundle->scene.entries());
        const auto cond = check_conditions(cfg, sig, bundle->scene, noise, bundle->sigma);
        kv.set("mu", cond.mu);
        kv.set("conditions_all", cond.all());
        kv.set("condition1_value", cond.c1_value);
        kv.set("condition2_value", cond.c2_value);
        kv.set("condition3_value", cond.c3_value);
        kv.set("condition4_value", cond.c4_value);
        kv.set("condition5_value", cond.c5_value);
    }
    const auto dir = prepare_out(g);
    io::write_key_values(dir / "analysis.txt", kv, "mimocs analyze");
    log(g, 1, "||A_S* A_S - Id|| = " + fmt(rep.deviation) + ", eta = " + fmt(bal.eta.value()));
    log(g, 2, kv.to_string());
    return kOk;
}

int cmd_rip(const Globals& g, ModelFlags& m, std::uint64_t cap) {
    if (auto kv = load_config(g)) m.apply(*kv);
    const auto cfg = m.config();
    const auto sig = generate_signals(cfg, m.signal_family(), g.seed);
    const double delta = exact_rip_constant(cfg, sig, m.s, cap);
    io::KeyValueFile kv;
    kv.set("nt", cfg.n_transmit());
    kv.set("nr", cfg.n_receive());
    kv.set("ntime", cfg.n_samples());
    kv.set("doppler", std::string(to_string(cfg.doppler_mode())));
    kv.set("family", std::string(to_string(sig.family())));
    kv.set("seed", g.seed);
    kv.set("s", m.s);
    kv.set("delta", delta);
    const auto dir = prepare_out(g);
    io::write_key_values(dir / "rip.txt", kv, "mimocs rip");
    log(g, 1, "delta_" + std::to_string(m.s) + " = " + fmt(delta));
    return kOk;
}

int cmd_tailprobe(const Globals& g, ModelFlags& m) {
    if (auto kv = load_config(g)) m.apply(*kv);
    const auto cfg = m.config();
    const auto eta = m.eta_spec();
    if (eta) check_balanced_feasible(cfg, m.s, *eta);
    const auto res = tail_probe_opnorm(cfg, m.signal_family(), m.s, eta, m.trials, g.seed, g.threads);
    std::string csv = "delta,survival\n";
    for (std::size_t k = 0; k < res.deltas.size(); ++k) csv += fmt(res.deltas[k]) + "," + fmt(res.survival[k]) + "\n";
    const auto dir = prepare_out(g);
    io::write_file(dir / "tailprobe.csv", csv);
    log(g, 1, "median ||A_S* A_S - Id|| = " + fmt(res.median) + " over " + std::to_string(m.trials) + " trials");
    return kOk;
}

std::vector<std::int64_t> parse_int_list(const std::string& text) {
    std::vector<std::int64_t> out;
    for (const auto& v : io::split_list(text)) {
        std::size_t used = 0;
        const auto x = std::stoll(v, &used);
        if (used != v.size()) throw UsageError("not an integer: " + v);
        out.push_back(x);
    }
    return out;
}

int cmd_experiment(const Globals& g, CLI::App& sub, ModelFlags& m, const std::string& sparsity,
                   const std::string& etas, const std::string& threshold) {
    ExperimentSpec spec;
    spec.sparsity_grid.clear();
    for (std::int64_t s = 8; s <= 136; s += 8) spec.sparsity_grid.push_back(s);
    spec.eta_list = {1, 2, 4, 8, std::nullopt};
    if (auto kv = load_config(g)) apply_key_values(spec, *kv);

    // Explicit flags override the config file.
    if (m.o_nt->count() || m.o_nr->count() || m.o_ntime->count() || m.o_doppler->count())
        spec.cfg = RadarConfig(m.o_nt->count() ? m.nt : spec.cfg.n_transmit(),
                               m.o_nr->count() ? m.nr : spec.cfg.n_receive(),
                               m.o_ntime->count() ? m.ntime : spec.cfg.n_samples(),
                               m.o_doppler->count() ? parse_doppler_mode(m.doppler) : spec.cfg.doppler_mode());
    if (m.o_family->count()) spec.family = m.signal_family();
    if (m.o_sigma->count()) spec.sigma = m.sigma;
    if (m.o_trials->count()) spec.trials = m.trials;
    if (sub.get_option("--seed")->count() || g.config.empty()) spec.master_seed = g.seed;
    if (sub.get_option("--threads")->count() || g.config.empty()) spec.threads = g.threads;
    if (!sparsity.empty()) spec.sparsity_grid = parse_int_list(sparsity);
    if (!etas.empty()) {
        spec.eta_list.clear();
        for (const auto& e : io::split_list(etas)) spec.eta_list.push_back(parse_eta(e));
    }
    if (!threshold.empty())
        spec.success_threshold_rule =
            threshold == "half" ? ThresholdRule::half_amplitude() : ThresholdRule::fixed(std::stod(threshold));
    spec.validate();

    const auto dir = prepare_out(g);
    const auto result = run_experiment(spec);
    emit_csv(result, dir / "curves.csv");
    if (g.verbosity >= 1) {
        std::printf("%6s %5s %10s %9s %8s %9s %9s\n", "s", "eta", "successes", "rate", "nonconv", "mean_it", "wall_s");
        for (const auto& r : result.rows)
            std::printf("%6lld %5s %5lld/%-4lld %9.4f %8lld %9.1f %9.2f\n", static_cast<long long>(r.s),
                        eta_label(r.eta).c_str(), static_cast<long long>(r.successes),
                        static_cast<long long>(r.trials), r.success_rate, static_cast<long long>(r.nonconverged),
                        r.mean_iterations, r.wall_time);
        std::printf("wrote %s\n", (dir / "curves.csv").string().c_str());
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"MIMO radar compressed sensing: instances, recovery, analysis and experiments"};
    app.require_subcommand(1, 1);

    Globals g;
    ModelFlags m_gen, m_analyze, m_rip, m_tail, m_exp;
    bool materialize = false, binary = false;
    std::string in_dir, solver = "lasso", sparsity, etas, threshold, support_file;
    std::optional<double> lambda, rho;
    std::uint64_t rip_cap = 2'000'000;

    auto* gen = app.add_subcommand("generate", "write a random instance bundle");
    add_globals(*gen, g);
    m_gen.add(*gen, true, false);
    gen->add_flag("--materialize", materialize, "store the raw signal arrays as well as their seed");
    gen->add_flag("--binary", binary, "write complex arrays in the binary format");
    gen->add_option("--support", support_file, "file of beta,tau,f lines used instead of a random support");

    auto* solve = app.add_subcommand("solve", "recover the scene of an instance bundle");
    add_globals(*solve, g);
    solve->add_option("--in", in_dir, "instance bundle directory (default: --out)");
    solve->add_option("--solver", solver, "lasso or bpdn")->check(CLI::IsMember({"lasso", "bpdn"}));
    solve->add_option("--lambda", lambda, "LASSO weight (default 2 sigma sqrt(2 N_T N_R N_t ln N))")
        ->check(CLI::PositiveNumber);
    solve->add_option("--rho", rho, "BPDN residual bound")->check(CLI::NonNegativeNumber);

    auto* analyze = app.add_subcommand("analyze", "Gram matrix, balancedness and recovery conditions");
    add_globals(*analyze, g);
    m_analyze.add(*analyze, true, false);
    analyze->add_option("--in", in_dir, "analyze an instance bundle instead of a fresh draw");

    auto* rip = app.add_subcommand("rip", "exact restricted isometry constant by enumeration");
    add_globals(*rip, g);
    m_rip.add(*rip, true, false);
    rip->add_option("--cap", rip_cap, "maximum number of supports to enumerate");

    auto* tail = app.add_subcommand("tailprobe", "empirical tail of ||A_S* A_S - Id|| over random draws");
    add_globals(*tail, g);
    m_tail.add(*tail, true, true);

    auto* exp = app.add_subcommand("experiment", "Monte Carlo success rates over sparsity and eta");
    add_globals(*exp, g);
    m_exp.add(*exp, false, true);
    exp->add_option("--sparsity", sparsity, "comma-separated sparsity grid (default 8,16,...,136)");
    exp->add_option("--eta", etas, "comma-separated eta list, integers or free (default 1,2,4,8,free)");
    exp->add_option("--threshold", threshold, "success threshold: half (of the amplitude) or a number");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (gen->parsed()) return cmd_generate(g, m_gen, materialize, binary, support_file);
        if (solve->parsed()) return cmd_solve(g, in_dir, solver, lambda, rho);
        if (analyze->parsed()) return cmd_analyze(g, m_analyze, in_dir);
        if (rip->parsed()) return cmd_rip(g, m_rip, rip_cap);
        if (tail->parsed()) return cmd_tailprobe(g, m_tail);
        if (exp->parsed()) return cmd_experiment(g, *exp, m_exp, sparsity, etas, threshold);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    } catch (const SingularityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNoConvergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
