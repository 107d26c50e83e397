#pragma once

#include "spc/cavity.hpp"
#include "spc/ensemble.hpp"
#include "spc/mode_dynamics.hpp"
#include "spc/msa.hpp"
#include "spc/noise.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace spc {

enum class ScenarioKind { SingleModeStochastic, SingleModeDeterministic, CoupledStochastic, Cosmology };
enum class SingleModeModel { Oscillator, Cavity };

/// Frequency: Q'' + w^2 (1 + eps xi) Q = 0. Mass: Q'' + (k^2 + M^2 (1 + eps xi)) Q = 0.
enum class CosmoCoupling { Frequency, Mass };

std::string_view to_string(ScenarioKind kind);
std::string_view to_string(SingleModeModel model);
std::string_view to_string(CosmoCoupling coupling);

struct ScenarioConfig {
    ScenarioKind kind = ScenarioKind::SingleModeStochastic;
    SingleModeModel model = SingleModeModel::Oscillator;
    int mode_nz = 1;                 ///< single-mode cavity runs
    std::vector<int> in_modes_nz;    ///< coupled runs; empty means every retained mode
    msa::RhoForm rho_form = msa::RhoForm::Rederived;

    bool operator==(const ScenarioConfig&) const = default;
};

struct OscillatorConfig {
    double omega = 1.0;
    double epsilon = 0.0;

    bool operator==(const OscillatorConfig&) const = default;
};

struct CosmologyConfig {
    std::vector<double> k_values{0.0, 0.5, 1.0, 2.0};
    double mass = 1.0;
    double epsilon = 0.0;
    CosmoCoupling coupling = CosmoCoupling::Frequency;

    bool operator==(const CosmologyConfig&) const = default;
};

struct ComparePolicy {
    double k_sigma = 4.0;
    double rel_tol = 0.1;
    double abs_tol = 0.0;
    double min_pass_fraction = 0.95;

    bool operator==(const ComparePolicy&) const = default;
};

/**
 * @brief Parsed run configuration.
 *
 * JSON sections: cavity, noise, integrator, ensemble, scenario, and
 * optionally oscillator, cosmology, compare. Key names carry units.
 */
struct RunConfig {
    CavityConfig cavity;
    NoiseSpec noise;
    IntegratorConfig integrator;
    EnsembleConfig ensemble;
    InvariantTolerances tolerances;
    ScenarioConfig scenario;
    OscillatorConfig oscillator;
    CosmologyConfig cosmology;
    ComparePolicy compare;

    bool operator==(const RunConfig&) const = default;
};

/// Parse and validate; throws ConfigError naming the offending key.
RunConfig parse_config(std::string_view text);

/// Throws ConfigError if the file cannot be read.
RunConfig load_config(const std::filesystem::path& path);

/// Every field, pretty-printed; parse_config(config_to_json(c)) == c.
std::string config_to_json(const RunConfig& config);

/// Module-level validation plus cross-section checks.
void validate(const RunConfig& config);

/// The mode system a scenario integrates.
ModeSystem build_system(const RunConfig& config);

} // namespace spc
