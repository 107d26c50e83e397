#include "spc/ensemble.hpp"

#include "spc/errors.hpp"
#include "spc/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace spc {

namespace {

constexpr std::size_t kMaxLoggedViolations = 1000;

const std::vector<std::string> kBankNames = {"beta2",  "alpha2", "mean_q_re", "mean_q_im", "abs_q2",       "q2_re",
                                             "q2_im",  "kick_q", "kick_qdot", "kick_q2",   "wronskian_dev"};
const std::vector<std::string> kPairNames = {"beta2", "alpha2", "mean_q_re", "mean_q_im", "abs_q2",
                                             "q2_re", "q2_im",  "kick_q",    "kick_q2"};

std::vector<QuantityKey> make_layout(const ModeEquations& eq)
{
    std::vector<QuantityKey> keys;
    const std::size_t k = eq.modes();
    if (eq.is_bank()) {
        for (const auto& name : kBankNames) {
            for (std::size_t i = 0; i < k; ++i) {
                keys.push_back({name, std::to_string(i + 1)});
            }
        }
        return keys;
    }
    const auto& in = eq.in_modes();
    for (const auto& name : kPairNames) {
        for (int n : in) {
            for (std::size_t i = 0; i < k; ++i) {
                keys.push_back({name, std::to_string(n) + ":" + std::to_string(i + 1)});
            }
        }
    }
    for (int n : in) {
        keys.push_back({"beta2_total", std::to_string(n)});
    }
    for (int n : in) {
        keys.push_back({"sum_rule_dev", std::to_string(n)});
    }
    for (std::size_t i = 0; i < k; ++i) {
        keys.push_back({"occupation", std::to_string(i + 1)});
    }
    keys.push_back({"occupation_total", "all"});
    return keys;
}

// Values in make_layout order for one snapshot.
void compute_values(const ModeEquations& eq, const ProbeSnapshot& snap, std::vector<double>& out)
{
    out.clear();
    const std::size_t k = eq.modes();
    const auto& w = eq.omega();
    const double t = snap.t;
    if (eq.is_bank()) {
        std::vector<double> v(kBankNames.size() * k);
        for (std::size_t i = 0; i < k; ++i) {
            const cplx Q = snap.state[i];
            const cplx P = snap.state[k + i];
            cplx a, b;
            decompose(w[i], t, Q, P, a, b);
            const double scale = std::sqrt(2.0 * w[i]);
            const double kq = scale * Q.real();
            const cplx q2 = Q * Q;
            const double vals[] = {std::norm(b), std::norm(a), Q.real(), Q.imag(), std::norm(Q), q2.real(), q2.imag(),
                                   kq,           scale * P.real(),        kq * kq,
                                   std::abs(wronskian(Q, P) - cplx(0.0, 1.0))};
            for (std::size_t j = 0; j < kBankNames.size(); ++j) {
                v[j * k + i] = vals[j];
            }
        }
        out = std::move(v);
        return;
    }
    const std::size_t blocks = eq.blocks();
    const std::size_t pairs = blocks * k;
    std::vector<double> v(kPairNames.size() * pairs + 2 * blocks + k + 1, 0.0);
    const std::size_t tot_off = kPairNames.size() * pairs;
    const std::size_t sr_off = tot_off + blocks;
    const std::size_t occ_off = sr_off + blocks;
    for (std::size_t bl = 0; bl < blocks; ++bl) {
        const std::size_t n = static_cast<std::size_t>(eq.in_modes()[bl] - 1);
        const double scale = std::sqrt(2.0 * w[n]);
        double beta_sum = 0.0;
        double rule = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const cplx Q = snap.state[bl * 2 * k + i];
            const cplx P = snap.state[bl * 2 * k + k + i];
            cplx a, b;
            decompose(w[i], t, Q, P, a, b);
            const double kq = scale * Q.real();
            const cplx q2 = Q * Q;
            const double vals[] = {std::norm(b), std::norm(a), Q.real(), Q.imag(), std::norm(Q), q2.real(), q2.imag(),
                                   kq,           kq * kq};
            for (std::size_t j = 0; j < kPairNames.size(); ++j) {
                v[j * pairs + bl * k + i] = vals[j];
            }
            beta_sum += std::norm(b);
            rule += std::norm(a) - std::norm(b);
            v[occ_off + i] += std::norm(b);
        }
        v[tot_off + bl] = beta_sum;
        v[sr_off + bl] = std::abs(rule - 1.0);
        v[occ_off + k] += beta_sum;
    }
    out = std::move(v);
}

struct Staged {
    std::vector<double> values;  // [q * probes + p]
    bool aborted = false;
    std::string reason;
};

} // namespace

void CompensatedSum::add(double x) noexcept
{
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
        comp_ += (sum_ - t) + x;
    } else {
        comp_ += (x - t) + sum_;
    }
    sum_ = t;
}

std::size_t EnsembleStats::index_of(const std::string& name, const std::string& mode) const
{
    for (std::size_t i = 0; i < quantities.size(); ++i) {
        if (quantities[i].name == name && quantities[i].mode == mode) {
            return i;
        }
    }
    throw std::out_of_range("no ensemble quantity " + name + " [" + mode + "]");
}

const ProbeStats& EnsembleStats::at(const std::string& name, const std::string& mode, std::size_t probe) const
{
    return stats.at(index_of(name, mode)).at(probe);
}

std::vector<double> EnsembleStats::means(const std::string& name, const std::string& mode) const
{
    std::vector<double> out;
    for (const auto& s : stats.at(index_of(name, mode))) {
        out.push_back(s.mean);
    }
    return out;
}

EnsembleStats run_ensemble(const EnsembleConfig& ensemble, const ModeSystem& system, const NoiseSpec& noise,
                           const IntegratorConfig& integrator, const InvariantTolerances& tolerances)
{
    validate(noise);
    if (ensemble.n_realizations < 1) {
        throw ConfigError("ensemble: n_realizations must be >= 1");
    }
    if (ensemble.probes.empty()) {
        throw ConfigError("ensemble: at least one probe time is required");
    }
    for (double t : ensemble.probes) {
        if (!(t > 0.0) || !std::isfinite(t)) {
            throw ConfigError("ensemble: probe times must be finite and > 0");
        }
    }
    const ModeEquations eq(system, integrator.path);
    if (eq.noise_order() > 0 && !has_smooth_paths(noise)) {
        throw UnsupportedDerivative("coupled runs need xi-dot and xi-ddot; use BandLimited or SpectralLines noise");
    }
    const double horizon = *std::max_element(ensemble.probes.begin(), ensemble.probes.end());
    EnsembleStats out;
    out.plan = plan_steps(system, noise, integrator, horizon);
    std::vector<std::size_t> steps;
    for (double t : ensemble.probes) {
        steps.push_back(out.plan.step_of(t));
    }
    std::sort(steps.begin(), steps.end());
    steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
    if (steps.front() == 0) {
        throw ConfigError("ensemble: a probe rounds to t = 0 on the step grid");
    }
    for (std::size_t s : steps) {
        out.probe_times.push_back(out.plan.time_of(s));
        out.driven_times.push_back(out.plan.driven_time(out.plan.time_of(s)));
    }
    out.quantities = make_layout(eq);
    const std::size_t nq = out.quantities.size();
    const std::size_t np = steps.size();
    const std::size_t n = ensemble.n_realizations;
    const double noise_horizon = out.plan.time_of(steps.back()) + out.plan.dt;

    out.n_requested = n;
    out.seeds.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.seeds[i] = rng::realization_seed(ensemble.master_seed, i);
    }

    std::vector<Staged> staged(n);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&]() {
        std::vector<double> values;
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) {
                return;
            }
            {
                std::lock_guard lock(failure_mutex);
                if (failure) {
                    return;
                }
            }
            try {
                const NoiseRealization real = synthesize(noise, out.seeds[i], noise_horizon);
                const auto snaps = evolve_probes(eq, real, out.plan, steps);
                Staged& st = staged[i];
                st.values.assign(nq * np, 0.0);
                for (std::size_t p = 0; p < np; ++p) {
                    compute_values(eq, snaps[p], values);
                    for (std::size_t q = 0; q < nq; ++q) {
                        st.values[q * np + p] = values[q];
                    }
                }
            } catch (const GeometryCollapse& e) {
                staged[i].aborted = true;
                staged[i].reason = e.what();
                staged[i].values.clear();
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        }
    };

    unsigned workers = ensemble.workers;
    if (workers == 0) {
        workers = std::max(1u, std::thread::hardware_concurrency());
    }
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back(worker);
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }

    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < n; ++i) {
        if (staged[i].aborted) {
            out.aborted.push_back({i, out.seeds[i], staged[i].reason});
        } else {
            kept.push_back(i);
        }
    }
    out.n_effective = kept.size();
    if (static_cast<double>(out.aborted.size()) > 0.01 * static_cast<double>(n) || kept.empty()) {
        throw std::runtime_error("ensemble: " + std::to_string(out.aborted.size()) + " of " + std::to_string(n) +
                                 " realizations aborted (limit 1%)");
    }

    // Per-realization invariants.
    for (std::size_t q = 0; q < nq; ++q) {
        const auto& key = out.quantities[q];
        const bool is_w = key.name == "wronskian_dev";
        const bool is_s = key.name == "sum_rule_dev";
        if (!is_w && !is_s) {
            continue;
        }
        const double tol = is_w ? tolerances.wronskian : tolerances.sum_rule;
        for (std::size_t i : kept) {
            for (std::size_t p = 0; p < np; ++p) {
                const double value = staged[i].values[q * np + p];
                double& worst = is_w ? out.max_wronskian_deviation : out.max_sum_rule_deviation;
                worst = std::max(worst, value);
                if (!(value <= tol) && out.violations.size() < kMaxLoggedViolations) {
                    out.violations.push_back({i, out.seeds[i], key.name, key.mode, out.probe_times[p], value});
                }
            }
        }
    }

    const auto m = static_cast<double>(kept.size());
    out.stats.assign(nq, std::vector<ProbeStats>(np));
    if (ensemble.keep_samples) {
        out.samples.assign(nq, std::vector<std::vector<double>>(np));
    }
    for (std::size_t q = 0; q < nq; ++q) {
        for (std::size_t p = 0; p < np; ++p) {
            CompensatedSum sum;
            double max_abs = 0.0;
            for (std::size_t i : kept) {
                const double x = staged[i].values[q * np + p];
                sum.add(x);
                max_abs = std::max(max_abs, std::abs(x));
            }
            const double mean = sum.value() / m;
            CompensatedSum sq;
            for (std::size_t i : kept) {
                const double d = staged[i].values[q * np + p] - mean;
                sq.add(d * d);
            }
            ProbeStats& ps = out.stats[q][p];
            ps.mean = mean;
            ps.max_abs = max_abs;
            if (kept.size() > 1) {
                ps.variance = std::max(0.0, sq.value() / (m - 1.0));
                ps.standard_error = std::sqrt(ps.variance / m);
            }
            if (ensemble.keep_samples) {
                auto& dst = out.samples[q][p];
                dst.reserve(kept.size());
                for (std::size_t i : kept) {
                    dst.push_back(staged[i].values[q * np + p]);
                }
            }
        }
    }
    return out;
}

EnsembleStats run_ensemble(const EnsembleConfig& ensemble, const CavityConfig& cavity, const NoiseSpec& noise,
                           const IntegratorConfig& integrator, ModeIndex n)
{
    return run_ensemble(ensemble, CavityModes{cavity, {n.nz}}, noise, integrator);
}

ConvergenceReport convergence_report(std::span<const EnsembleStats> sequence)
{
    ConvergenceReport report;
    if (sequence.size() < 2) {
        throw std::invalid_argument("convergence_report: need at least two ensembles");
    }
    for (const auto& s : sequence) {
        report.n.push_back(s.n_effective);
        if (s.quantities != sequence.front().quantities || s.probe_times.size() != sequence.front().probe_times.size()) {
            throw std::invalid_argument("convergence_report: ensembles do not share a layout");
        }
    }
    const auto& first = sequence.front();
    for (std::size_t q = 0; q < first.quantities.size(); ++q) {
        ConvergenceEntry entry;
        entry.key = first.quantities[q];
        std::vector<double> xs;
        std::vector<double> ys;
        bool all_zero = true;
        bool any_zero = false;
        for (const auto& s : sequence) {
            double log_sum = 0.0;
            for (const auto& ps : s.stats[q]) {
                const double se = ps.standard_error.value_or(0.0);
                if (se > 0.0) {
                    all_zero = false;
                    log_sum += std::log(se);
                } else {
                    any_zero = true;
                }
            }
            xs.push_back(std::log(static_cast<double>(s.n_effective)));
            ys.push_back(log_sum / static_cast<double>(s.stats[q].size()));
        }
        if (all_zero || any_zero) {
            entry.degenerate = true;
            entry.within_bounds = all_zero;
            report.ok = report.ok && entry.within_bounds;
            report.entries.push_back(entry);
            continue;
        }
        const double nx = static_cast<double>(xs.size());
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            mx += xs[i] / nx;
            my += ys[i] / nx;
        }
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sxy += (xs[i] - mx) * (ys[i] - my);
            sxx += (xs[i] - mx) * (xs[i] - mx);
        }
        entry.exponent = sxx > 0.0 ? sxy / sxx : 0.0;
        entry.within_bounds = entry.exponent >= -0.6 && entry.exponent <= -0.4;
        report.ok = report.ok && entry.within_bounds;
        report.entries.push_back(entry);
    }
    return report;
}

Estimate estimate_correlation(const NoiseSpec& noise, std::uint64_t master_seed, std::size_t n, double t, double u)
{
    if (n < 2 || !(t >= 0.0) || !(u >= 0.0)) {
        throw std::invalid_argument("estimate_correlation: need n >= 2 and t, u >= 0");
    }
    std::vector<double> products(n);
    for (std::size_t i = 0; i < n; ++i) {
        const NoiseRealization real = synthesize(noise, rng::realization_seed(master_seed, i), t + u + 1e-9);
        products[i] = real.eval(t, 0) * real.eval(t + u, 0);
    }
    CompensatedSum sum;
    for (double x : products) {
        sum.add(x);
    }
    const double mean = sum.value() / static_cast<double>(n);
    CompensatedSum sq;
    for (double x : products) {
        sq.add((x - mean) * (x - mean));
    }
    const double var = sq.value() / static_cast<double>(n - 1);
    return {mean, std::sqrt(var / static_cast<double>(n))};
}

} // namespace spc
