#include "spc/config.hpp"

#include "spc/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace spc {

using nlohmann::json;

namespace {

// Reads keys from one JSON object and rejects any it did not consume.
class Section {
public:
    Section(const json& root, const std::string& name, bool required) : name_(name)
    {
        if (!root.contains(name)) {
            if (required) {
                throw ConfigError("config: missing section '" + name + "'");
            }
            return;
        }
        node_ = &root.at(name);
        if (!node_->is_object()) {
            throw ConfigError("config: section '" + name + "' must be an object");
        }
    }

    template <class T>
    void get(const std::string& key, T& out)
    {
        seen_.insert(key);
        if (node_ == nullptr || !node_->contains(key)) {
            return;
        }
        try {
            out = node_->at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError("config: " + name_ + "." + key + " has the wrong type");
        }
    }

    template <class T, class F>
    void get_enum(const std::string& key, T& out, F&& from_string)
    {
        std::string text;
        get(key, text);
        if (!text.empty()) {
            try {
                out = from_string(text);
            } catch (const ConfigError& e) {
                throw ConfigError("config: " + name_ + "." + key + ": " + e.what());
            }
        }
    }

    void finish() const
    {
        if (node_ == nullptr) {
            return;
        }
        for (const auto& item : node_->items()) {
            if (!seen_.contains(item.key())) {
                throw ConfigError("config: unknown key " + name_ + "." + item.key());
            }
        }
    }

private:
    std::string name_;
    const json* node_ = nullptr;
    std::set<std::string> seen_;
};

template <class T>
T from_name(std::string_view name, std::initializer_list<T> values, const char* what)
{
    for (T v : values) {
        if (name == to_string(v)) {
            return v;
        }
    }
    throw ConfigError(std::string("unknown ") + what + " '" + std::string(name) + "'");
}

ScenarioKind scenario_from_string(std::string_view name)
{
    return from_name(name,
                     {ScenarioKind::SingleModeStochastic, ScenarioKind::SingleModeDeterministic,
                      ScenarioKind::CoupledStochastic, ScenarioKind::Cosmology},
                     "scenario kind");
}

SingleModeModel model_from_string(std::string_view name)
{
    return from_name(name, {SingleModeModel::Oscillator, SingleModeModel::Cavity}, "model");
}

CosmoCoupling coupling_from_string(std::string_view name)
{
    return from_name(name, {CosmoCoupling::Frequency, CosmoCoupling::Mass}, "noise coupling");
}

IntegratorMethod method_from_string(std::string_view name)
{
    if (name == "RK4") {
        return IntegratorMethod::RK4;
    }
    throw ConfigError("unknown integrator method '" + std::string(name) + "'");
}

bool uses_cavity(const RunConfig& c)
{
    return c.scenario.kind == ScenarioKind::CoupledStochastic ||
           (c.scenario.model == SingleModeModel::Cavity && (c.scenario.kind == ScenarioKind::SingleModeStochastic ||
                                                            c.scenario.kind == ScenarioKind::SingleModeDeterministic));
}

void require(bool ok, const std::string& message)
{
    if (!ok) {
        throw ConfigError("config: " + message);
    }
}

} // namespace

std::string_view to_string(ScenarioKind kind)
{
    switch (kind) {
    case ScenarioKind::SingleModeStochastic:
        return "SingleModeStochastic";
    case ScenarioKind::SingleModeDeterministic:
        return "SingleModeDeterministic";
    case ScenarioKind::CoupledStochastic:
        return "CoupledStochastic";
    case ScenarioKind::Cosmology:
        return "Cosmology";
    }
    return "unknown";
}

std::string_view to_string(SingleModeModel model)
{
    return model == SingleModeModel::Oscillator ? "oscillator" : "cavity";
}

std::string_view to_string(CosmoCoupling coupling)
{
    return coupling == CosmoCoupling::Frequency ? "frequency" : "mass";
}

RunConfig parse_config(std::string_view text)
{
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: not valid JSON: ") + e.what());
    }
    require(root.is_object(), "top level must be an object");
    static const std::set<std::string> known = {"cavity",   "noise",     "integrator", "ensemble",
                                                "scenario", "oscillator", "cosmology",  "compare"};
    for (const auto& item : root.items()) {
        require(known.contains(item.key()), "unknown section '" + item.key() + "'");
    }

    RunConfig c;
    {
        Section s(root, "scenario", true);
        s.get_enum("kind", c.scenario.kind, scenario_from_string);
        s.get_enum("model", c.scenario.model, model_from_string);
        s.get("mode_nz", c.scenario.mode_nz);
        s.get("in_modes_nz", c.scenario.in_modes_nz);
        s.get_enum("rho_form", c.scenario.rho_form, msa::rho_form_from_string);
        s.finish();
    }
    {
        Section s(root, "cavity", uses_cavity(c));
        s.get("Lx_length", c.cavity.Lx);
        s.get("Ly_length", c.cavity.Ly);
        s.get("Lz0_length", c.cavity.Lz0);
        s.get("epsilon", c.cavity.epsilon);
        s.get("kx", c.cavity.kx);
        s.get("ky", c.cavity.ky);
        s.get("nz_max", c.cavity.nz_max);
        s.finish();
    }
    {
        Section s(root, "noise", true);
        s.get_enum("kind", c.noise.kind, noise_kind_from_string);
        s.get("sigma", c.noise.sigma);
        s.get("t_c_time", c.noise.t_c);
        s.get("nu_min_rad_per_time", c.noise.nu_min);
        s.get("nu_max_rad_per_time", c.noise.nu_max);
        s.get("n_components", c.noise.n_components);
        s.get("omega_drive_rad_per_time", c.noise.omega_drive);
        s.finish();
    }
    {
        Section s(root, "integrator", false);
        s.get("dt_time", c.integrator.dt);
        s.get_enum("method", c.integrator.method, method_from_string);
        s.get("record_stride", c.integrator.record_stride);
        s.get_enum("path", c.integrator.path, integration_path_from_string);
        s.get("ramp_time", c.integrator.ramp);
        s.get("drift_budget", c.integrator.drift_budget);
        s.finish();
    }
    {
        Section s(root, "ensemble", true);
        s.get("n_realizations", c.ensemble.n_realizations);
        s.get("master_seed", c.ensemble.master_seed);
        s.get("workers", c.ensemble.workers);
        s.get("probe_times_time", c.ensemble.probes);
        s.get("wronskian_tolerance", c.tolerances.wronskian);
        s.get("sum_rule_tolerance", c.tolerances.sum_rule);
        s.finish();
    }
    {
        const bool needed = c.scenario.model == SingleModeModel::Oscillator &&
                            (c.scenario.kind == ScenarioKind::SingleModeStochastic ||
                             c.scenario.kind == ScenarioKind::SingleModeDeterministic);
        Section s(root, "oscillator", needed);
        s.get("omega_rad_per_time", c.oscillator.omega);
        s.get("epsilon", c.oscillator.epsilon);
        s.finish();
    }
    {
        Section s(root, "cosmology", c.scenario.kind == ScenarioKind::Cosmology);
        s.get("k_values_per_length", c.cosmology.k_values);
        s.get("mass_rad_per_time", c.cosmology.mass);
        s.get("epsilon", c.cosmology.epsilon);
        s.get_enum("noise_coupling", c.cosmology.coupling, coupling_from_string);
        s.finish();
    }
    {
        Section s(root, "compare", false);
        s.get("k_sigma", c.compare.k_sigma);
        s.get("rel_tol", c.compare.rel_tol);
        s.get("abs_tol", c.compare.abs_tol);
        s.get("min_pass_fraction", c.compare.min_pass_fraction);
        s.finish();
    }
    validate(c);
    return c;
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config: cannot read " + path.string());
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

std::string config_to_json(const RunConfig& c)
{
    json root;
    root["scenario"] = {{"kind", to_string(c.scenario.kind)},
                        {"model", to_string(c.scenario.model)},
                        {"mode_nz", c.scenario.mode_nz},
                        {"in_modes_nz", c.scenario.in_modes_nz},
                        {"rho_form", msa::to_string(c.scenario.rho_form)}};
    root["cavity"] = {{"Lx_length", c.cavity.Lx}, {"Ly_length", c.cavity.Ly}, {"Lz0_length", c.cavity.Lz0},
                      {"epsilon", c.cavity.epsilon}, {"kx", c.cavity.kx},      {"ky", c.cavity.ky},
                      {"nz_max", c.cavity.nz_max}};
    root["noise"] = {{"kind", to_string(c.noise.kind)},
                     {"sigma", c.noise.sigma},
                     {"t_c_time", c.noise.t_c},
                     {"nu_min_rad_per_time", c.noise.nu_min},
                     {"nu_max_rad_per_time", c.noise.nu_max},
                     {"n_components", c.noise.n_components},
                     {"omega_drive_rad_per_time", c.noise.omega_drive}};
    root["integrator"] = {{"dt_time", c.integrator.dt},
                          {"method", "RK4"},
                          {"record_stride", c.integrator.record_stride},
                          {"path", to_string(c.integrator.path)},
                          {"ramp_time", c.integrator.ramp},
                          {"drift_budget", c.integrator.drift_budget}};
    root["ensemble"] = {{"n_realizations", c.ensemble.n_realizations},
                        {"master_seed", c.ensemble.master_seed},
                        {"workers", c.ensemble.workers},
                        {"probe_times_time", c.ensemble.probes},
                        {"wronskian_tolerance", c.tolerances.wronskian},
                        {"sum_rule_tolerance", c.tolerances.sum_rule}};
    root["oscillator"] = {{"omega_rad_per_time", c.oscillator.omega}, {"epsilon", c.oscillator.epsilon}};
    root["cosmology"] = {{"k_values_per_length", c.cosmology.k_values},
                         {"mass_rad_per_time", c.cosmology.mass},
                         {"epsilon", c.cosmology.epsilon},
                         {"noise_coupling", to_string(c.cosmology.coupling)}};
    root["compare"] = {{"k_sigma", c.compare.k_sigma},
                       {"rel_tol", c.compare.rel_tol},
                       {"abs_tol", c.compare.abs_tol},
                       {"min_pass_fraction", c.compare.min_pass_fraction}};
    return root.dump(2);
}

void validate(const RunConfig& c)
{
    validate(c.noise);
    validate(c.cavity);
    require(std::isfinite(c.oscillator.omega) && c.oscillator.omega > 0.0, "oscillator.omega_rad_per_time must be > 0");
    require(std::isfinite(c.oscillator.epsilon) && c.oscillator.epsilon >= 0.0, "oscillator.epsilon must be >= 0");
    require(!c.cosmology.k_values.empty(), "cosmology.k_values_per_length must not be empty");
    for (double k : c.cosmology.k_values) {
        require(std::isfinite(k) && k >= 0.0, "cosmology.k_values_per_length entries must be >= 0");
    }
    require(std::isfinite(c.cosmology.mass) && c.cosmology.mass > 0.0, "cosmology.mass_rad_per_time must be > 0");
    require(std::isfinite(c.cosmology.epsilon) && c.cosmology.epsilon >= 0.0, "cosmology.epsilon must be >= 0");
    require(c.ensemble.n_realizations >= 1, "ensemble.n_realizations must be >= 1");
    require(!c.ensemble.probes.empty(), "ensemble.probe_times_time must not be empty");
    for (double t : c.ensemble.probes) {
        require(std::isfinite(t) && t > 0.0, "ensemble.probe_times_time entries must be finite and > 0");
    }
    require(c.tolerances.wronskian > 0.0 && c.tolerances.sum_rule > 0.0, "invariant tolerances must be > 0");
    require(c.integrator.record_stride >= 1, "integrator.record_stride must be >= 1");
    require(std::isfinite(c.integrator.dt) && std::isfinite(c.integrator.ramp), "integrator times must be finite");
    require(c.integrator.drift_budget > 0.0, "integrator.drift_budget must be > 0");
    require(c.compare.k_sigma >= 0.0 && c.compare.rel_tol >= 0.0 && c.compare.abs_tol >= 0.0,
            "compare tolerances must be >= 0");
    require(c.compare.min_pass_fraction > 0.0 && c.compare.min_pass_fraction <= 1.0,
            "compare.min_pass_fraction must be in (0, 1]");

    const bool deterministic = c.scenario.kind == ScenarioKind::SingleModeDeterministic;
    require(deterministic == !is_stochastic(c.noise),
            deterministic ? "SingleModeDeterministic needs DeterministicSinusoid noise"
                          : "stochastic scenarios need a stochastic noise kind");
    if (deterministic) {
        require(c.ensemble.n_realizations == 1, "a deterministic run has exactly one realization");
    }
    if (c.scenario.kind != ScenarioKind::CoupledStochastic) {
        require(c.integrator.path == IntegrationPath::Linearized,
                "the Exact path is available for CoupledStochastic runs only");
    }
    switch (c.scenario.kind) {
    case ScenarioKind::SingleModeStochastic:
    case ScenarioKind::SingleModeDeterministic:
        if (c.scenario.model == SingleModeModel::Cavity) {
            require(c.scenario.mode_nz >= 1 && c.scenario.mode_nz <= c.cavity.nz_max,
                    "scenario.mode_nz must lie in 1..cavity.nz_max");
        }
        break;
    case ScenarioKind::CoupledStochastic:
        require(has_smooth_paths(c.noise),
                "CoupledStochastic needs smooth noise paths (BandLimited or SpectralLines)");
        for (int n : c.scenario.in_modes_nz) {
            require(n >= 1 && n <= c.cavity.nz_max, "scenario.in_modes_nz entries must lie in 1..cavity.nz_max");
        }
        break;
    case ScenarioKind::Cosmology:
        break;
    }
    // Constructing the equations runs the remaining module checks.
    const ModeEquations eq(build_system(c), c.integrator.path);
    (void)eq;
}

ModeSystem build_system(const RunConfig& c)
{
    switch (c.scenario.kind) {
    case ScenarioKind::SingleModeStochastic:
    case ScenarioKind::SingleModeDeterministic:
        if (c.scenario.model == SingleModeModel::Oscillator) {
            return plain_oscillator(c.oscillator.omega, c.oscillator.epsilon);
        } else {
            const ModeIndex n{c.scenario.mode_nz};
            const double wz = omega_z(c.cavity, n);
            return OscillatorBank{{Oscillator{omega(c.cavity, n), -2.0 * wz * wz}}, c.cavity.epsilon};
        }
    case ScenarioKind::CoupledStochastic: {
        CavityModes modes = all_in_modes(c.cavity);
        if (!c.scenario.in_modes_nz.empty()) {
            modes.in_modes = c.scenario.in_modes_nz;
        }
        return modes;
    }
    case ScenarioKind::Cosmology: {
        OscillatorBank bank;
        bank.epsilon = c.cosmology.epsilon;
        const double m2 = c.cosmology.mass * c.cosmology.mass;
        for (double k : c.cosmology.k_values) {
            const double w2 = k * k + m2;
            bank.oscillators.push_back({std::sqrt(w2), c.cosmology.coupling == CosmoCoupling::Frequency ? w2 : m2});
        }
        return bank;
    }
    }
    throw ConfigError("config: unknown scenario");
}

} // namespace spc
