#include "spc/mode_dynamics.hpp"

#include "spc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace spc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kRestTolerance = 1e-12;

// Quintic smoothstep and its first two derivatives.
void smoothstep(double x, double& s, double& ds, double& dds)
{
    x = std::clamp(x, 0.0, 1.0);
    const double x2 = x * x;
    s = x2 * x * (10.0 + x * (-15.0 + 6.0 * x));
    ds = 30.0 * x2 * (x - 1.0) * (x - 1.0);
    dds = 60.0 * x * (2.0 * x - 1.0) * (x - 1.0);
}

void check_in_modes(const CavityModes& modes)
{
    if (modes.in_modes.empty()) {
        throw ConfigError("cavity run needs at least one in-mode");
    }
    for (std::size_t i = 0; i < modes.in_modes.size(); ++i) {
        const int n = modes.in_modes[i];
        if (n < 1 || n > modes.cavity.nz_max) {
            throw ConfigError("in-mode nz = " + std::to_string(n) + " outside the retained family");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (modes.in_modes[j] == n) {
                throw ConfigError("in-mode nz = " + std::to_string(n) + " listed twice");
            }
        }
    }
}

} // namespace

std::string_view to_string(IntegrationPath path)
{
    return path == IntegrationPath::Linearized ? "Linearized" : "Exact";
}

IntegrationPath integration_path_from_string(std::string_view name)
{
    if (name == "Linearized") {
        return IntegrationPath::Linearized;
    }
    if (name == "Exact") {
        return IntegrationPath::Exact;
    }
    throw ConfigError("integrator: unknown path '" + std::string(name) + "'");
}

OscillatorBank plain_oscillator(double omega, double epsilon)
{
    return OscillatorBank{{Oscillator{omega, omega * omega}}, epsilon};
}

CavityModes all_in_modes(const CavityConfig& cavity)
{
    CavityModes modes{cavity, {}};
    for (int n = 1; n <= cavity.nz_max; ++n) {
        modes.in_modes.push_back(n);
    }
    return modes;
}

ModeState vacuum_state(const CavityConfig& cavity, ModeIndex n)
{
    const auto k = static_cast<std::size_t>(cavity.nz_max);
    ModeState state{0.0, std::vector<cplx>(k), std::vector<cplx>(k)};
    const double w = omega(cavity, n);
    state.Q[static_cast<std::size_t>(n.nz - 1)] = 1.0 / std::sqrt(2.0 * w);
    state.Qdot[static_cast<std::size_t>(n.nz - 1)] = cplx(0.0, -std::sqrt(0.5 * w));
    return state;
}

ModeEquations::ModeEquations(const ModeSystem& system, IntegrationPath path) : path_(path)
{
    if (const auto* bank = std::get_if<OscillatorBank>(&system)) {
        if (path == IntegrationPath::Exact) {
            throw ConfigError("the exact path applies to cavity runs only");
        }
        if (bank->oscillators.empty()) {
            throw ConfigError("oscillator bank is empty");
        }
        if (!(bank->epsilon >= 0.0) || !std::isfinite(bank->epsilon)) {
            throw ConfigError("epsilon must be finite and >= 0");
        }
        bank_ = true;
        epsilon_ = bank->epsilon;
        for (const auto& osc : bank->oscillators) {
            if (!(osc.omega > 0.0) || !std::isfinite(osc.omega) || !std::isfinite(osc.coupling)) {
                throw ConfigError("oscillator frequency must be finite and > 0");
            }
            omega_.push_back(osc.omega);
            omega2_.push_back(osc.omega * osc.omega);
            coupling_.push_back(osc.coupling);
        }
        return;
    }

    const auto& modes = std::get<CavityModes>(system);
    validate(modes.cavity);
    check_in_modes(modes);
    const CavityTables tables(modes.cavity);
    epsilon_ = modes.cavity.epsilon;
    blocks_ = modes.in_modes.size();
    in_modes_ = modes.in_modes;
    omega_ = tables.omega;
    omega_perp2_ = omega_perp_squared(modes.cavity);
    const std::size_t k = omega_.size();
    for (std::size_t i = 0; i < k; ++i) {
        omega2_.push_back(omega_[i] * omega_[i]);
        omega_z2_.push_back(tables.omega_z[i] * tables.omega_z[i]);
    }
    g_ = tables.coupling;
    gtg_.assign(k * k, 0.0);
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) {
            double s = 0.0;
            for (std::size_t l = 0; l < k; ++l) {
                s += g_[l * k + a] * g_[l * k + b];
            }
            gtg_[a * k + b] = s;
        }
    }
    noise_order_ = k > 1 ? 2 : 0;
    requires_rest_ = k > 1 || path == IntegrationPath::Exact;
}

void ModeEquations::accel(const NoiseSample& s, const cplx* Q, const cplx* P, cplx* out) const
{
    if (bank_) {
        accel_bank(s, Q, out);
    } else if (path_ == IntegrationPath::Linearized) {
        accel_linearized(s, Q, P, out);
    } else {
        accel_exact(s, Q, P, out);
    }
}

void ModeEquations::accel_bank(const NoiseSample& s, const cplx* Q, cplx* out) const
{
    const std::size_t k = omega_.size();
    const double drive = epsilon_ * s.xi;
    for (std::size_t i = 0; i < k; ++i) {
        out[i] = -(omega2_[i] + drive * coupling_[i]) * Q[i];
    }
}

void ModeEquations::accel_linearized(const NoiseSample& s, const cplx* Q, const cplx* P, cplx* out) const
{
    const std::size_t k = omega_.size();
    const double e = epsilon_;
    for (std::size_t i = 0; i < k; ++i) {
        cplx acc = (-omega2_[i] + 2.0 * e * s.xi * omega_z2_[i]) * Q[i];
        if (k > 1) {
            cplx gp = 0.0;
            cplx gq = 0.0;
            const double* row = &g_[i * k];
            for (std::size_t m = 0; m < k; ++m) {
                gp += row[m] * P[m];
                gq += row[m] * Q[m];
            }
            acc += e * (2.0 * s.dxi * gp + s.ddxi * gq);
        }
        out[i] = acc;
    }
}

void ModeEquations::accel_exact(const NoiseSample& s, const cplx* Q, const cplx* P, cplx* out) const
{
    const std::size_t k = omega_.size();
    const double L = 1.0 + epsilon_ * s.xi;
    if (!(L > 0.0)) {
        throw GeometryCollapse("1 + epsilon xi(t) <= 0");
    }
    const double lambda = epsilon_ * s.dxi / L;
    const double dlambda = epsilon_ * s.ddxi / L - lambda * lambda;
    const double inv_l2 = 1.0 / (L * L);
    for (std::size_t i = 0; i < k; ++i) {
        cplx acc = -(omega_perp2_ + omega_z2_[i] * inv_l2) * Q[i];
        if (k > 1) {
            cplx gp = 0.0;
            cplx gq = 0.0;
            cplx hq = 0.0;
            const double* row = &g_[i * k];
            const double* hrow = &gtg_[i * k];
            for (std::size_t m = 0; m < k; ++m) {
                gp += row[m] * P[m];
                gq += row[m] * Q[m];
                hq += hrow[m] * Q[m];
            }
            acc += 2.0 * lambda * gp + dlambda * gq + lambda * lambda * hq;
        }
        out[i] = acc;
    }
}

void ModeEquations::derivative(const NoiseSample& s, std::span<const cplx> x, std::span<cplx> dx) const
{
    const std::size_t k = modes();
    for (std::size_t b = 0; b < blocks_; ++b) {
        const cplx* Q = x.data() + b * 2 * k;
        const cplx* P = Q + k;
        cplx* dQ = dx.data() + b * 2 * k;
        std::copy(P, P + k, dQ);
        accel(s, Q, P, dQ + k);
    }
}

std::vector<cplx> ModeEquations::initial_state() const
{
    const std::size_t k = modes();
    std::vector<cplx> x(state_size());
    if (bank_) {
        for (std::size_t i = 0; i < k; ++i) {
            x[i] = 1.0 / std::sqrt(2.0 * omega_[i]);
            x[k + i] = cplx(0.0, -std::sqrt(0.5 * omega_[i]));
        }
        return x;
    }
    for (std::size_t b = 0; b < blocks_; ++b) {
        const auto n = static_cast<std::size_t>(in_modes_[b] - 1);
        x[b * 2 * k + n] = 1.0 / std::sqrt(2.0 * omega_[n]);
        x[b * 2 * k + k + n] = cplx(0.0, -std::sqrt(0.5 * omega_[n]));
    }
    return x;
}

namespace {

ModeState cavity_rhs(const ModeState& state, const NoiseRealization& real, const CavityConfig& cavity,
                     IntegrationPath path)
{
    const ModeEquations eq(CavityModes{cavity, {1}}, path);
    const std::size_t k = eq.modes();
    if (state.Q.size() != k || state.Qdot.size() != k) {
        throw std::invalid_argument("state size does not match nz_max");
    }
    if (eq.noise_order() > 0 && !has_smooth_paths(real.spec())) {
        throw UnsupportedDerivative("coupled runs need xi-dot and xi-ddot; " + std::string(to_string(real.spec().kind)) +
                                    " paths are not smooth enough");
    }
    NoiseSample s{real.eval(state.t, 0), 0.0, 0.0};
    if (eq.noise_order() > 0) {
        s.dxi = real.eval(state.t, 1);
        s.ddxi = real.eval(state.t, 2);
    }
    ModeState out{state.t, state.Qdot, std::vector<cplx>(k)};
    eq.accel(s, state.Q.data(), state.Qdot.data(), out.Qdot.data());
    return out;
}

} // namespace

ModeState rhs_linearized(const ModeState& state, const NoiseRealization& real, const CavityConfig& cavity)
{
    return cavity_rhs(state, real, cavity, IntegrationPath::Linearized);
}

ModeState rhs_exact(const ModeState& state, const NoiseRealization& real, const CavityConfig& cavity)
{
    return cavity_rhs(state, real, cavity, IntegrationPath::Exact);
}

void Window::factors(double t, double& w, double& dw, double& ddw) const
{
    w = 1.0;
    dw = 0.0;
    ddw = 0.0;
    if (!(ramp > 0.0)) {
        return;
    }
    if (up && t < ramp) {
        double s = 0.0, ds = 0.0, dds = 0.0;
        smoothstep(t / ramp, s, ds, dds);
        w = s;
        dw = ds / ramp;
        ddw = dds / (ramp * ramp);
    }
    if (down_end >= 0.0 && t > down_end - ramp) {
        double s = 0.0, ds = 0.0, dds = 0.0;
        smoothstep((down_end - t) / ramp, s, ds, dds);
        const double d1 = -ds / ramp;
        const double d2 = dds / (ramp * ramp);
        const double w0 = w;
        const double dw0 = dw;
        const double ddw0 = ddw;
        w = w0 * s;
        dw = dw0 * s + w0 * d1;
        ddw = ddw0 * s + 2.0 * dw0 * d1 + w0 * d2;
    }
}

NoiseSample Window::apply(double t, const NoiseSample& raw) const
{
    double w = 1.0, dw = 0.0, ddw = 0.0;
    factors(t, w, dw, ddw);
    return {w * raw.xi, dw * raw.xi + w * raw.dxi, ddw * raw.xi + 2.0 * dw * raw.dxi + w * raw.ddxi};
}

std::size_t StepPlan::step_of(double t) const
{
    if (!(t >= 0.0)) {
        throw std::invalid_argument("negative time");
    }
    return static_cast<std::size_t>(std::llround(t / dt));
}

double StepPlan::driven_time(double t) const noexcept
{
    if (ramp_steps == 0) {
        return t;
    }
    return t - 2.0 * ramp() * (1.0 - kRampSquareMean);
}

double max_frequency(const ModeSystem& system)
{
    const ModeEquations eq(system, IntegrationPath::Linearized);
    return *std::max_element(eq.omega().begin(), eq.omega().end());
}

double min_frequency(const ModeSystem& system)
{
    const ModeEquations eq(system, IntegrationPath::Linearized);
    return *std::min_element(eq.omega().begin(), eq.omega().end());
}

StepPlan plan_steps(const ModeSystem& system, const NoiseSpec& noise, const IntegratorConfig& config, double horizon)
{
    const ModeEquations eq(system, config.path);
    if (!(horizon > 0.0)) {
        throw ConfigError("integration horizon must be > 0");
    }
    if (config.record_stride < 1) {
        throw ConfigError("record_stride must be >= 1");
    }
    const double w_max = *std::max_element(eq.omega().begin(), eq.omega().end());
    const double w_min = *std::min_element(eq.omega().begin(), eq.omega().end());

    StepPlan plan;
    if (config.dt > 0.0) {
        plan.dt = config.dt;
    } else {
        if (!(config.drift_budget > 0.0)) {
            throw ConfigError("drift_budget must be > 0");
        }
        const double by_period = kTwoPi / w_max / 64.0;
        const double by_drift = std::pow(72.0 * config.drift_budget / (horizon * std::pow(w_max, 6)), 0.2);
        double dt = std::min(by_period, by_drift);
        if (noise.kind == NoiseKind::OrnsteinUhlenbeck && noise.sigma > 0.0) {
            const double grid = ou_grid_step(noise);
            const double m = std::ceil(grid / dt - 1e-9);
            dt = grid / m;
        }
        plan.dt = dt;
    }
    if (plan.dt * w_max > 0.1) {
        throw ResolutionError("dt * omega_max = " + std::to_string(plan.dt * w_max) + " exceeds 0.1");
    }
    double ramp = config.ramp;
    if (ramp < 0.0) {
        ramp = eq.requires_rest() ? 5.0 * kTwoPi / w_min : 0.0;
    }
    plan.ramp_steps = static_cast<std::size_t>(std::llround(ramp / plan.dt));
    return plan;
}

Rk4Stepper::Rk4Stepper(const ModeEquations& eq, const NoiseSamples& table, double dt)
    : eq_(eq), table_(table), dt_(dt), k1_(eq.state_size()), k2_(eq.state_size()), k3_(eq.state_size()),
      k4_(eq.state_size()), tmp_(eq.state_size())
{
}

NoiseSample Rk4Stepper::sample(std::size_t half_index, const Window& w) const
{
    NoiseSample raw{table_.xi[half_index], 0.0, 0.0};
    if (!table_.dxi.empty()) {
        raw.dxi = table_.dxi[half_index];
    }
    if (!table_.ddxi.empty()) {
        raw.ddxi = table_.ddxi[half_index];
    }
    if (!(w.ramp > 0.0)) {
        return raw;
    }
    return w.apply(0.5 * dt_ * static_cast<double>(half_index), raw);
}

void Rk4Stepper::step(std::vector<cplx>& x, std::size_t i, const Window& w)
{
    const NoiseSample s0 = sample(2 * i, w);
    const NoiseSample s1 = sample(2 * i + 1, w);
    const NoiseSample s2 = sample(2 * i + 2, w);
    const std::size_t n = x.size();
    const double h = dt_;
    const double h2 = 0.5 * h;

    eq_.derivative(s0, x, k1_);
    for (std::size_t j = 0; j < n; ++j) {
        tmp_[j] = x[j] + h2 * k1_[j];
    }
    eq_.derivative(s1, tmp_, k2_);
    for (std::size_t j = 0; j < n; ++j) {
        tmp_[j] = x[j] + h2 * k2_[j];
    }
    eq_.derivative(s1, tmp_, k3_);
    for (std::size_t j = 0; j < n; ++j) {
        tmp_[j] = x[j] + h * k3_[j];
    }
    eq_.derivative(s2, tmp_, k4_);
    const double h6 = h / 6.0;
    for (std::size_t j = 0; j < n; ++j) {
        x[j] += h6 * (k1_[j] + 2.0 * (k2_[j] + k3_[j]) + k4_[j]);
    }
}

ModeState Trajectory::state(std::size_t record, std::size_t block) const
{
    const auto& x = states.at(record);
    ModeState s{t.at(record), std::vector<cplx>(modes), std::vector<cplx>(modes)};
    const std::size_t base = block * 2 * modes;
    for (std::size_t k = 0; k < modes; ++k) {
        s.Q[k] = x[base + k];
        s.Qdot[k] = x[base + modes + k];
    }
    return s;
}

Trajectory integrate(const ModeSystem& system, const NoiseRealization& real, const IntegratorConfig& config,
                     double t_stop)
{
    const ModeEquations eq(system, config.path);
    if (eq.noise_order() > 0 && !has_smooth_paths(real.spec())) {
        throw UnsupportedDerivative("coupled runs need smooth noise paths");
    }
    const StepPlan plan = plan_steps(system, real.spec(), config, t_stop);
    const std::size_t n = std::max<std::size_t>(1, plan.step_of(t_stop));
    const NoiseSamples table = tabulate(real, 0.5 * plan.dt, 2 * n + 1, eq.noise_order());
    Window window;
    if (plan.ramp_steps > 0) {
        window = Window{plan.ramp(), true, plan.time_of(n)};
    }

    Trajectory traj;
    traj.modes = eq.modes();
    traj.blocks = eq.blocks();
    traj.in_modes = eq.in_modes();
    traj.omega = eq.omega();
    traj.bank = eq.is_bank();
    traj.requires_rest = eq.requires_rest();
    traj.dt = plan.dt;

    Rk4Stepper stepper(eq, table, plan.dt);
    std::vector<cplx> x = eq.initial_state();
    const auto stride = static_cast<std::size_t>(config.record_stride);
    auto record = [&](std::size_t i) {
        traj.t.push_back(plan.time_of(i));
        traj.states.push_back(x);
        traj.drive.push_back(stepper.sample(2 * i, window));
    };
    record(0);
    for (std::size_t i = 0; i < n; ++i) {
        stepper.step(x, i, window);
        if ((i + 1) % stride == 0 || i + 1 == n) {
            record(i + 1);
        }
    }
    return traj;
}

Trajectory integrate(ModeIndex n, const NoiseRealization& real, const CavityConfig& cavity,
                     const IntegratorConfig& config, double t_stop)
{
    return integrate(CavityModes{cavity, {n.nz}}, real, config, t_stop);
}

void decompose(double omega, double t, cplx Q, cplx Qdot, cplx& alpha, cplx& beta)
{
    const double norm = 1.0 / std::sqrt(2.0 * omega);
    const cplx phase = std::polar(1.0, omega * t);
    const cplx iP = cplx(0.0, 1.0) * Qdot;
    alpha = phase * (omega * Q + iP) * norm;
    beta = std::conj(phase) * (omega * Q - iP) * norm;
}

namespace {

BogoliubovRecord decompose_state(bool bank, const std::vector<double>& omega, const std::vector<int>& in_modes,
                                 std::size_t blocks, std::span<const cplx> state, double t)
{
    const std::size_t k = omega.size();
    BogoliubovRecord rec;
    rec.T_stop = t;
    rec.cols = k;
    if (bank) {
        rec.rows = k;
        rec.alpha.assign(k * k, 0.0);
        rec.beta.assign(k * k, 0.0);
        for (std::size_t i = 0; i < k; ++i) {
            rec.in_modes.push_back(static_cast<int>(i + 1));
            decompose(omega[i], t, state[i], state[k + i], rec.alpha[i * k + i], rec.beta[i * k + i]);
        }
        return rec;
    }
    rec.rows = blocks;
    rec.in_modes = in_modes;
    rec.alpha.resize(rec.rows * k);
    rec.beta.resize(rec.rows * k);
    for (std::size_t b = 0; b < rec.rows; ++b) {
        const cplx* Q = state.data() + b * 2 * k;
        for (std::size_t i = 0; i < k; ++i) {
            decompose(omega[i], t, Q[i], Q[k + i], rec.alpha[b * k + i], rec.beta[b * k + i]);
        }
    }
    return rec;
}

} // namespace

BogoliubovRecord bogoliubov_from_state(const ModeEquations& eq, std::span<const cplx> state, double t)
{
    return decompose_state(eq.is_bank(), eq.omega(), eq.in_modes(), eq.blocks(), state, t);
}

BogoliubovRecord extract_bogoliubov(const Trajectory& trajectory, double T_stop)
{
    std::size_t idx = trajectory.t.size();
    for (std::size_t i = 0; i < trajectory.t.size(); ++i) {
        if (std::abs(trajectory.t[i] - T_stop) <= 0.5 * trajectory.dt) {
            idx = i;
            break;
        }
    }
    if (idx == trajectory.t.size()) {
        throw OutOfRange("extract_bogoliubov: T_stop not covered by the trajectory records");
    }
    const NoiseSample& d = trajectory.drive[idx];
    if (trajectory.requires_rest && (std::abs(d.xi) > kRestTolerance || std::abs(d.dxi) > kRestTolerance)) {
        throw ExtractionWindowError("wall not at rest at T_stop = " + std::to_string(trajectory.t[idx]));
    }
    return decompose_state(trajectory.bank, trajectory.omega, trajectory.in_modes, trajectory.blocks,
                           trajectory.states[idx], trajectory.t[idx]);
}

ParticleNumbers particle_number(const BogoliubovRecord& record)
{
    ParticleNumbers out;
    out.per_mode.assign(record.cols, 0.0);
    for (std::size_t n = 0; n < record.rows; ++n) {
        for (std::size_t k = 0; k < record.cols; ++k) {
            out.per_mode[k] += std::norm(record.b(n, k));
        }
    }
    for (double v : out.per_mode) {
        out.total += v;
    }
    return out;
}

double sum_rule_deviation(const BogoliubovRecord& record)
{
    double worst = 0.0;
    for (std::size_t n = 0; n < record.rows; ++n) {
        double s = 0.0;
        for (std::size_t k = 0; k < record.cols; ++k) {
            s +=std::norm(record.a(n, k)) - std::norm(record.b(n, k));
        }
        worst = std::max(worst, std::abs(s - 1.0));
    }
    return worst;
}

std::vector<ProbeSnapshot> evolve_probes(const ModeEquations& eq, const NoiseRealization& real,
                                         const StepPlan& plan, std::span<const std::size_t> probe_steps)
{
    std::vector<ProbeSnapshot> out;
    if (probe_steps.empty()) {
        return out;
    }
    for (std::size_t i = 0; i < probe_steps.size(); ++i) {
        if (probe_steps[i] == 0 || (i > 0 && probe_steps[i] <= probe_steps[i - 1])) {
            throw ConfigError("probe steps must be positive and strictly increasing");
        }
    }
    const std::size_t r = plan.ramp_steps;
    if (eq.requires_rest() && r == 0) {
        throw ConfigError("this system needs a nonzero window ramp for at-rest extraction");
    }
    if (r > 0 && probe_steps.front() < 2 * r) {
        throw ConfigError("first probe at t = " + std::to_string(plan.time_of(probe_steps.front())) +
                          " is earlier than two window ramps (" + std::to_string(2 * plan.ramp()) + ")");
    }
    if (eq.noise_order() > 0 && !has_smooth_paths(real.spec())) {
        throw UnsupportedDerivative("coupled runs need smooth noise paths");
    }

    const std::size_t last = probe_steps.back();
    const NoiseSamples table = tabulate(real, 0.5 * plan.dt, 2 * last + 1, eq.noise_order());
    Rk4Stepper stepper(eq, table, plan.dt);
    const Window main_window{plan.ramp(), r > 0, -1.0};

    std::vector<cplx> x = eq.initial_state();
    out.reserve(probe_steps.size());
    auto snapshot = [&](std::size_t step, std::vector<cplx> state) {
        const double t = plan.time_of(step);
        out.push_back(ProbeSnapshot{step, t, plan.driven_time(t), std::move(state)});
    };

    std::size_t next = 0;
    for (std::size_t s = 0; next < probe_steps.size(); ++s) {
        while (next < probe_steps.size() && probe_steps[next] - r == s) {
            const std::size_t p = probe_steps[next];
            if (r == 0) {
                snapshot(p, x);
            } else {
                std::vector<cplx> branch = x;
                const Window down{plan.ramp(), true, plan.time_of(p)};
                for (std::size_t i = s; i < p; ++i) {
                    stepper.step(branch, i, down);
                }
                snapshot(p, std::move(branch));
            }
            ++next;
        }
        if (next == probe_steps.size()) {
            break;
        }
        stepper.step(x, s, main_window);
    }
    return out;
}

} // namespace spc
