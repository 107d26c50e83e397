#pragma once

#include "spc/cavity.hpp"
#include "spc/mode_dynamics.hpp"
#include "spc/noise.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spc {

struct EnsembleConfig {
    std::size_t n_realizations = 1;
    std::uint64_t master_seed = 0;
    unsigned workers = 0;          ///< 0: hardware concurrency
    std::vector<double> probes;    ///< requested probe times; snapped to the step grid
    bool keep_samples = false;     ///< retain per-realization values in EnsembleStats::samples

    bool operator==(const EnsembleConfig&) const = default;
};

struct InvariantTolerances {
    double wronskian = 1e-8;
    double sum_rule = 1e-6;

    bool operator==(const InvariantTolerances&) const = default;
};

/**
 * @brief Name and mode label of an ensemble quantity.
 *
 * Mode labels: "i" for oscillator i or out-mode k, "n:k" for
 * in-mode n / out-mode k, "all" for family totals.
 */
struct QuantityKey {
    std::string name;
    std::string mode;

    bool operator==(const QuantityKey&) const = default;
};

struct ProbeStats {
    double mean = 0.0;
    double variance = 0.0;
    std::optional<double> standard_error;  ///< absent for a single realization
    double max_abs = 0.0;
};

struct AbortRecord {
    std::size_t realization = 0;
    std::uint64_t seed = 0;
    std::string reason;
};

struct InvariantViolation {
    std::size_t realization = 0;
    std::uint64_t seed = 0;
    std::string invariant;
    std::string mode;
    double t = 0.0;
    double value = 0.0;
};

struct EnsembleStats {
    StepPlan plan;
    std::vector<double> probe_times;
    std::vector<double> driven_times;
    std::vector<QuantityKey> quantities;
    std::vector<std::vector<ProbeStats>> stats;  ///< stats[q][p]
    std::size_t n_requested = 0;
    std::size_t n_effective = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<AbortRecord> aborted;
    std::vector<InvariantViolation> violations;
    double max_wronskian_deviation = 0.0;
    double max_sum_rule_deviation = 0.0;
    std::vector<std::vector<std::vector<double>>> samples;  ///< samples[q][p][i], if kept

    std::size_t index_of(const std::string& name, const std::string& mode) const;
    const ProbeStats& at(const std::string& name, const std::string& mode, std::size_t probe) const;
    std::vector<double> means(const std::string& name, const std::string& mode) const;
};

/**
 * @brief Run the ensemble and aggregate per-probe statistics.
 *
 * Realization i uses noise seed rng::realization_seed(master_seed, i).
 * Results are staged per index and folded in index order with
 * compensated sums, so the output does not depend on the worker count.
 * A realization that hits GeometryCollapse is excluded and reported;
 * more than 1% exclusions raise std::runtime_error.
 */
EnsembleStats run_ensemble(const EnsembleConfig& ensemble, const ModeSystem& system, const NoiseSpec& noise,
                           const IntegratorConfig& integrator, const InvariantTolerances& tolerances = {});

/// Cavity family with in-mode n.
EnsembleStats run_ensemble(const EnsembleConfig& ensemble, const CavityConfig& cavity, const NoiseSpec& noise,
                           const IntegratorConfig& integrator, ModeIndex n);

struct ConvergenceEntry {
    QuantityKey key;
    double exponent = 0.0;   ///< slope of log stderr against log N
    bool degenerate = false; ///< every stderr is zero
    bool within_bounds = false;
};

struct ConvergenceReport {
    std::vector<std::size_t> n;
    std::vector<ConvergenceEntry> entries;
    bool ok = true;
};

/// Fit the stderr scaling over a sequence of ensembles with increasing N; bounds [-0.6, -0.4].
ConvergenceReport convergence_report(std::span<const EnsembleStats> sequence);

struct Estimate {
    double mean = 0.0;
    double standard_error = 0.0;
};

/// (1/N) sum_i xi_i(t) xi_i(t + u) over realizations seeded like run_ensemble.
Estimate estimate_correlation(const NoiseSpec& noise, std::uint64_t master_seed, std::size_t n, double t, double u);

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x) noexcept;
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

} // namespace spc
