#include "spc/commands.hpp"

#include "spc/errors.hpp"
#include "spc/msa.hpp"
#include "spc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <tuple>

namespace spc {

namespace {

struct ProbeGrid {
    StepPlan plan;
    std::vector<double> t;
    std::vector<double> driven;
};

ProbeGrid probe_grid(const RunConfig& c, const ModeSystem& system)
{
    ProbeGrid g;
    const double horizon = *std::max_element(c.ensemble.probes.begin(), c.ensemble.probes.end());
    g.plan = plan_steps(system, c.noise, c.integrator, horizon);
    std::vector<std::size_t> steps;
    for (double t : c.ensemble.probes) {
        steps.push_back(g.plan.step_of(t));
    }
    std::sort(steps.begin(), steps.end());
    steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
    for (std::size_t s : steps) {
        g.t.push_back(g.plan.time_of(s));
        g.driven.push_back(g.plan.driven_time(g.plan.time_of(s)));
    }
    return g;
}

// Plain-oscillator frequency and effective epsilon of a single-mode scenario.
std::pair<double, double> single_mode_parameters(const RunConfig& c)
{
    if (c.scenario.model == SingleModeModel::Oscillator) {
        return {c.oscillator.omega, c.oscillator.epsilon};
    }
    const ModeIndex n{c.scenario.mode_nz};
    const double w = omega(c.cavity, n);
    const double wz = omega_z(c.cavity, n);
    return {w, 2.0 * c.cavity.epsilon * wz * wz / (w * w)};
}

std::vector<int> coupled_in_modes(const RunConfig& c)
{
    return std::get<CavityModes>(build_system(c)).in_modes;
}

void truncation_warning(const RunConfig& c, double T, std::vector<std::string>& warnings)
{
    if (c.cavity.nz_max < 2) {
        return;
    }
    const auto occ = msa::perturbative_occupation(c.cavity, c.noise, T);
    double total = 0.0;
    for (double x : occ) {
        total += x;
    }
    if (total > 0.0 && occ.back() > 0.01 * total) {
        warnings.push_back("truncation: predicted occupation of nz = " + std::to_string(c.cavity.nz_max) +
                           " is " + io::format_double(occ.back() / total) + " of the total; raise nz_max");
    }
}

void emit_warnings(const std::vector<std::string>& warnings, bool quiet, std::ostream& log)
{
    if (quiet) {
        return;
    }
    for (const auto& w : warnings) {
        log << "warning: " << w << '\n';
    }
}

int guarded(std::ostream& log, const std::function<int()>& body)
{
    try {
        return body();
    } catch (const ConfigError& e) {
        log << "error: " << e.what() << '\n';
        return exit_code::usage;
    } catch (const std::invalid_argument& e) {
        log << "error: " << e.what() << '\n';
        return exit_code::usage;
    } catch (const std::domain_error& e) {
        log << "error: " << e.what() << '\n';
        return exit_code::usage;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return exit_code::failed;
    }
}

void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body)
{
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    body(out);
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

void prepare_out(const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
    }
}

} // namespace

RunConfig resolve_config(const CommandOptions& options)
{
    if (options.config.empty()) {
        throw ConfigError("--config is required");
    }
    if (!std::filesystem::exists(options.config)) {
        throw ConfigError("config file not found: " + options.config.string());
    }
    RunConfig c = load_config(options.config);
    if (options.seed) {
        c.ensemble.master_seed = *options.seed;
    }
    if (options.workers) {
        c.ensemble.workers = *options.workers;
    }
    return c;
}

std::vector<io::PredictionRow> predictions(const RunConfig& c, std::vector<std::string>* warnings)
{
    std::vector<std::string> local;
    std::vector<std::string>& warn = warnings != nullptr ? *warnings : local;
    const ModeSystem system = build_system(c);
    const ProbeGrid grid = probe_grid(c, system);
    std::vector<io::PredictionRow> rows;
    auto add = [&](const std::string& q, const std::string& mode, const std::vector<double>& values) {
        for (std::size_t p = 0; p < grid.t.size(); ++p) {
            rows.push_back({grid.t[p], q, mode, values[p]});
        }
    };
    const std::size_t np = grid.t.size();

    switch (c.scenario.kind) {
    case ScenarioKind::SingleModeStochastic: {
        const auto [w, eps] = single_mode_parameters(c);
        const auto form =
            c.scenario.model == SingleModeModel::Oscillator ? msa::OscillatorForm::Plain : msa::OscillatorForm::CavitySingleMode;
        const double wz = form == msa::OscillatorForm::Plain ? w : omega_z(c.cavity, {c.scenario.mode_nz});
        const double eps_form = form == msa::OscillatorForm::Plain ? eps : c.cavity.epsilon;
        std::vector<double> beta2(np), re(np), im(np), kick(np), kick2(np);
        for (std::size_t p = 0; p < np; ++p) {
            beta2[p] = msa::msa_stochastic_beta2(w, wz, eps_form, c.noise, grid.driven[p], form);
            const auto q = msa::msa_mean_q(w, eps, c.noise, grid.t[p], msa::InitialData::Vacuum);
            re[p] = q.real();
            im[p] = q.imag();
            kick[p] = msa::msa_mean_q(w, eps, c.noise, grid.t[p], msa::InitialData::PositionKick).real();
            kick2[p] = msa::msa_mean_q2(w, eps, c.noise, grid.t[p]);
        }
        add("beta2", "1", beta2);
        add("mean_q_re", "1", re);
        add("mean_q_im", "1", im);
        add("kick_q", "1", kick);
        add("kick_q2", "1", kick2);
        if (w * grid.t.front() < 10.0) {
            warn.push_back("omega t = " + io::format_double(w * grid.t.front()) +
                           " at the first probe; the closed forms assume omega t >> 1");
        }
        break;
    }
    case ScenarioKind::SingleModeDeterministic: {
        const auto [w, eps] = single_mode_parameters(c);
        const bool resonant = std::abs(c.noise.omega_drive - 2.0 * w) <= 1e-6 * 2.0 * w;
        if (!resonant) {
            warn.push_back("drive is off the 2 omega resonance; the closed form predicts no growth");
        }
        std::vector<double> beta2(np, 0.0);
        for (std::size_t p = 0; p < np && resonant; ++p) {
            beta2[p] = msa::msa_deterministic_beta2(w, eps, grid.driven[p]);
        }
        add("beta2", "1", beta2);
        break;
    }
    case ScenarioKind::CoupledStochastic: {
        const auto rates = msa::slow_flow_rates(c.cavity, c.noise, c.scenario.rho_form);
        std::vector<double> total(np, 0.0);
        for (int n : coupled_in_modes(c)) {
            const auto sol = msa::solve_occupations(rates, c.cavity, {n}, grid.driven);
            if (sol.negative_total) {
                warn.push_back("slow flow for in-mode " + std::to_string(n) + " gives a negative particle number");
            }
            add("beta2_total", std::to_string(n), sol.beta2_total);
            for (std::size_t p = 0; p < np; ++p) {
                total[p] += sol.beta2_total[p];
            }
        }
        add("occupation_total", "all", total);
        truncation_warning(c, grid.driven.back(), warn);
        break;
    }
    case ScenarioKind::Cosmology: {
        const double m = c.cosmology.mass;
        for (std::size_t i = 0; i < c.cosmology.k_values.size(); ++i) {
            const double k = c.cosmology.k_values[i];
            const double w = std::sqrt(k * k + m * m);
            std::vector<double> beta2(np);
            for (std::size_t p = 0; p < np; ++p) {
                if (c.cosmology.coupling == CosmoCoupling::Frequency) {
                    beta2[p] = msa::cosmo_beta2(k, m, c.cosmology.epsilon, c.noise, grid.driven[p]);
                } else {
                    const double eps = c.cosmology.epsilon * m * m / (w * w);
                    beta2[p] = msa::msa_stochastic_beta2(w, w, eps, c.noise, grid.driven[p], msa::OscillatorForm::Plain);
                }
            }
            add("beta2", std::to_string(i + 1), beta2);
        }
        break;
    }
    }
    return rows;
}

int cmd_simulate(const CommandOptions& options, std::ostream& log)
{
    return guarded(log, [&] {
        const RunConfig c = resolve_config(options);
        const ModeSystem system = build_system(c);
        prepare_out(options.out);
        if (!options.quiet) {
            log << "simulate: " << to_string(c.scenario.kind) << ", " << c.ensemble.n_realizations
                << " realizations\n";
        }
        const EnsembleStats stats = run_ensemble(c.ensemble, system, c.noise, c.integrator, c.tolerances);
        io::SummaryExtras extras;
        if (c.scenario.kind == ScenarioKind::CoupledStochastic) {
            truncation_warning(c, stats.driven_times.back(), extras.warnings);
        }
        for (const auto& a : stats.aborted) {
            extras.warnings.push_back("realization " + std::to_string(a.realization) + " aborted: " + a.reason);
        }
        extras.invariants_ok = stats.violations.empty();
        write_file(options.out / "series.csv", [&](std::ostream& out) { io::write_series(out, io::series_rows(stats)); });
        write_file(options.out / "summary.json", [&](std::ostream& out) { out << io::summary_json(c, stats, extras) << '\n'; });

        if (options.dump_trajectory) {
            const double t_stop = stats.probe_times.back();
            const NoiseRealization real = synthesize(c.noise, stats.seeds.front(), t_stop + stats.plan.dt);
            const Trajectory traj = integrate(system, real, c.integrator, t_stop);
            write_file(options.out / "trajectory.csv", [&](std::ostream& out) { io::write_trajectory(out, traj); });
            const BogoliubovRecord rec = extract_bogoliubov(traj, traj.t.back());
            write_file(options.out / "bogoliubov.json",
                       [&](std::ostream& out) { out << io::bogoliubov_json(rec, stats.seeds.front()) << '\n'; });
        }
        emit_warnings(extras.warnings, options.quiet, log);
        if (!extras.invariants_ok) {
            log << "error: " << stats.violations.size() << " invariant violation(s); first: "
                << stats.violations.front().invariant << " = " << io::format_double(stats.violations.front().value)
                << " in realization " << stats.violations.front().realization << '\n';
            return exit_code::failed;
        }
        return exit_code::ok;
    });
}

int cmd_predict(const CommandOptions& options, std::ostream& log)
{
    return guarded(log, [&] {
        const RunConfig c = resolve_config(options);
        prepare_out(options.out);
        std::vector<std::string> warnings;
        const auto rows = predictions(c, &warnings);
        write_file(options.out / "prediction.csv", [&](std::ostream& out) { io::write_predictions(out, rows); });
        emit_warnings(warnings, options.quiet, log);
        return exit_code::ok;
    });
}

int cmd_spectrum(const CommandOptions& options, std::ostream& out, std::ostream& log)
{
    return guarded(log, [&] {
        const RunConfig c = resolve_config(options);
        validate(c.cavity);
        out << "nz,omega,omega_z\n";
        for (int n = 1; n <= c.cavity.nz_max; ++n) {
            out << n << ',' << io::format_double(omega(c.cavity, {n})) << ','
                << io::format_double(omega_z(c.cavity, {n})) << '\n';
        }
        return exit_code::ok;
    });
}

int cmd_noise_dump(const CommandOptions& options, std::ostream& out, std::ostream& log)
{
    return guarded(log, [&] {
        const RunConfig c = resolve_config(options);
        if (options.samples < 2) {
            throw ConfigError("noise-dump needs at least 2 samples");
        }
        const double horizon = *std::max_element(c.ensemble.probes.begin(), c.ensemble.probes.end());
        const double spacing = horizon / static_cast<double>(options.samples - 1);
        const NoiseRealization real =
            synthesize(c.noise, rng::realization_seed(c.ensemble.master_seed, 0), horizon);
        const int order = has_smooth_paths(c.noise) ? 2 : 0;
        io::write_noise(out, tabulate(real, spacing, options.samples, order));
        return exit_code::ok;
    });
}

CompareReport compare(const std::vector<io::SeriesRow>& simulated, const std::vector<io::PredictionRow>& predicted,
                      const ComparePolicy& policy)
{
    std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> index;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        index[{predicted[i].quantity, predicted[i].mode}].push_back(i);
    }
    std::vector<bool> used(predicted.size(), false);
    CompareReport report;
    for (const auto& s : simulated) {
        const auto it = index.find({s.quantity, s.mode});
        std::optional<std::size_t> match;
        if (it != index.end()) {
            for (std::size_t i : it->second) {
                if (std::abs(predicted[i].t - s.t) <= 1e-9 * std::max(1.0, std::abs(s.t))) {
                    match = i;
                    break;
                }
            }
        }
        if (!match) {
            ++report.unmatched_simulated;
            continue;
        }
        used[*match] = true;
        PointResult r;
        r.t = s.t;
        r.quantity = s.quantity;
        r.mode = s.mode;
        r.simulated = s.mean;
        r.predicted = predicted[*match].value;
        r.standard_error = s.standard_error.value_or(0.0);
        r.allowed = std::max(policy.k_sigma * r.standard_error, policy.rel_tol * std::abs(r.predicted) + policy.abs_tol);
        r.pass = std::abs(r.simulated - r.predicted) <= r.allowed;
        report.passed += r.pass ? 1 : 0;
        report.points.push_back(std::move(r));
    }
    report.unmatched_predicted = static_cast<std::size_t>(std::count(used.begin(), used.end(), false));
    if (report.points.empty()) {
        throw std::runtime_error("compare: no (t, quantity, mode) points in common");
    }
    report.pass_fraction = static_cast<double>(report.passed) / static_cast<double>(report.points.size());

    std::vector<const PointResult*> decisive;
    for (const auto& p : report.points) {
        if (std::abs(p.simulated - p.predicted) > 0.5 * p.allowed) {
            decisive.push_back(&p);
        }
    }
    std::sort(decisive.begin(), decisive.end(), [](const PointResult* a, const PointResult* b) {
        return std::tie(a->quantity, a->mode, a->t) < std::tie(b->quantity, b->mode, b->t);
    });
    RunsTest& rt = report.runs;
    rt.considered = decisive.size();
    for (std::size_t i = 0; i < decisive.size(); ++i) {
        const bool pos = decisive[i]->simulated > decisive[i]->predicted;
        rt.positive += pos ? 1 : 0;
        if (i == 0 || pos != (decisive[i - 1]->simulated > decisive[i - 1]->predicted)) {
            ++rt.runs;
        }
    }
    if (rt.considered >= 10) {
        const auto n = static_cast<double>(rt.considered);
        const auto np = static_cast<double>(rt.positive);
        const double nm = n - np;
        if (np == 0.0 || nm == 0.0) {
            rt.z = -std::numeric_limits<double>::infinity();
            rt.systematic = true;
        } else {
            const double mu = 2.0 * np * nm / n + 1.0;
            const double var = 2.0 * np * nm * (2.0 * np * nm - n) / (n * n * (n - 1.0));
            rt.z = var > 0.0 ? (static_cast<double>(rt.runs) - mu) / std::sqrt(var) : 0.0;
            rt.systematic = rt.z < -3.0;
        }
    }
    report.ok = report.pass_fraction >= policy.min_pass_fraction && !rt.systematic;
    return report;
}

int cmd_compare(const CompareOptions& options, std::ostream& out, std::ostream& log)
{
    ComparePolicy policy;
    std::vector<io::SeriesRow> sim;
    std::vector<io::PredictionRow> pred;
    try {
        if (options.config) {
            policy = load_config(*options.config).compare;
        }
        sim = io::read_series(options.simulated);
        pred = io::read_predictions(options.predicted);
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return exit_code::usage;
    }
    if (options.k_sigma) {
        policy.k_sigma = *options.k_sigma;
    }
    if (options.rel_tol) {
        policy.rel_tol = *options.rel_tol;
    }
    if (options.abs_tol) {
        policy.abs_tol = *options.abs_tol;
    }
    CompareReport report;
    try {
        report = compare(sim, pred, policy);
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return exit_code::usage;
    }
    if (!options.quiet) {
        for (const auto& p : report.points) {
            if (!p.pass) {
                out << "FAIL t=" << io::format_double(p.t) << ' ' << p.quantity << '[' << p.mode
                    << "] simulated=" << io::format_double(p.simulated) << " predicted=" << io::format_double(p.predicted)
                    << " allowed=" << io::format_double(p.allowed) << '\n';
            }
        }
    }
    out << "points " << report.points.size() << ", passed " << report.passed << " ("
        << io::format_double(100.0 * report.pass_fraction) << "%), unmatched simulated " << report.unmatched_simulated
        << ", unmatched predicted " << report.unmatched_predicted << '\n';
    out << "runs test: " << report.runs.considered << " decisive points, " << report.runs.runs << " runs, z = "
        << io::format_double(report.runs.z) << (report.runs.systematic ? " (systematic)" : "") << '\n';
    out << (report.ok ? "compare: PASS" : "compare: FAIL") << '\n';
    return report.ok ? exit_code::ok : exit_code::failed;
}

} // namespace spc
