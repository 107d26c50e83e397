#pragma once

#include "spc/cavity.hpp"
#include "spc/noise.hpp"

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace spc {

using cplx = std::complex<double>;

enum class IntegrationPath { Linearized, Exact };
enum class IntegratorMethod { RK4 };

std::string_view to_string(IntegrationPath path);
IntegrationPath integration_path_from_string(std::string_view name);

/**
 * @brief Fixed-step integration settings.
 *
 * dt <= 0 selects the automatic step, ramp < 0 the automatic window
 * ramp. The automatic step is the smaller of a 64th of the shortest
 * period and the step at which RK4 amplitude drift over the horizon
 * stays below drift_budget; with OU noise it is then shortened to
 * divide the noise grid.
 */
struct IntegratorConfig {
    double dt = 0.0;
    IntegratorMethod method = IntegratorMethod::RK4;
    int record_stride = 1;
    IntegrationPath path = IntegrationPath::Linearized;
    double ramp = -1.0;
    double drift_budget = 1e-9;

    bool operator==(const IntegratorConfig&) const = default;
};

/// Q'' + (omega^2 + epsilon * coupling * xi(t)) Q = 0.
struct Oscillator {
    double omega;
    double coupling;
};

/// Independent oscillators sharing one noise path.
struct OscillatorBank {
    std::vector<Oscillator> oscillators;
    double epsilon = 0.0;
};

/// Truncated cavity family; in_modes holds the nz of each simulated in-mode.
struct CavityModes {
    CavityConfig cavity;
    std::vector<int> in_modes;
};

using ModeSystem = std::variant<OscillatorBank, CavityModes>;

/// Plain oscillator Q'' + omega^2 (1 + epsilon xi) Q = 0.
OscillatorBank plain_oscillator(double omega, double epsilon);

/// Cavity family with every retained mode as an in-mode.
CavityModes all_in_modes(const CavityConfig& cavity);

/// Complex amplitudes of one in-mode.
struct ModeState {
    double t = 0.0;
    std::vector<cplx> Q;
    std::vector<cplx> Qdot;
};

/// In-vacuum initial data for mode n of a cavity family.
ModeState vacuum_state(const CavityConfig& cavity, ModeIndex n);

struct NoiseSample {
    double xi = 0.0;
    double dxi = 0.0;
    double ddxi = 0.0;
};

/**
 * @brief Right-hand side of the mode equations.
 *
 * The integration state holds blocks() in-modes; each block is
 * (Q_1..Q_K, Qdot_1..Qdot_K), which as doubles is the interleaved
 * (Re, Im) layout. An oscillator bank is a single block.
 */
class ModeEquations {
public:
    ModeEquations(const ModeSystem& system, IntegrationPath path);

    std::size_t modes() const noexcept { return omega_.size(); }
    std::size_t blocks() const noexcept { return blocks_; }
    std::size_t block_size() const noexcept { return 2 * modes(); }
    std::size_t state_size() const noexcept { return blocks_ * block_size(); }

    /// Highest noise derivative the equations read.
    int noise_order() const noexcept { return noise_order_; }

    /// Bogoliubov extraction needs the wall at rest (derivative couplings or exact geometry).
    bool requires_rest() const noexcept { return requires_rest_; }

    bool is_bank() const noexcept { return bank_; }
    const std::vector<double>& omega() const noexcept { return omega_; }
    const std::vector<int>& in_modes() const noexcept { return in_modes_; }

    /// Qddot for one block.
    void accel(const NoiseSample& s, const cplx* Q, const cplx* P, cplx* out) const;

    /// Time derivative of the full state.
    void derivative(const NoiseSample& s, std::span<const cplx> x, std::span<cplx> dx) const;

    std::vector<cplx> initial_state() const;

private:
    void accel_bank(const NoiseSample& s, const cplx* Q, cplx* out) const;
    void accel_linearized(const NoiseSample& s, const cplx* Q, const cplx* P, cplx* out) const;
    void accel_exact(const NoiseSample& s, const cplx* Q, const cplx* P, cplx* out) const;

    bool bank_ = false;
    IntegrationPath path_ = IntegrationPath::Linearized;
    double epsilon_ = 0.0;
    std::size_t blocks_ = 1;
    int noise_order_ = 0;
    bool requires_rest_ = false;
    double omega_perp2_ = 0.0;
    std::vector<double> omega_;
    std::vector<double> omega2_;
    std::vector<double> coupling_;   // bank: per-oscillator coupling; cavity: 2 omega_z^2
    std::vector<double> omega_z2_;
    std::vector<double> g_;          // K x K row-major
    std::vector<double> gtg_;        // (G^T G), K x K
    std::vector<int> in_modes_;
};

/// Qddot of the linearized equations with static frequencies, evaluated at state.t.
ModeState rhs_linearized(const ModeState& state, const NoiseRealization& real, const CavityConfig& cavity);

/// Qddot of the full moving-wall equations, evaluated at state.t.
ModeState rhs_exact(const ModeState& state, const NoiseRealization& real, const CavityConfig& cavity);

/// C^2 quintic ramps: up on [0, ramp], down on [end - ramp, end].
struct Window {
    double ramp = 0.0;
    bool up = false;
    double down_end = -1.0;  ///< negative: no down ramp

    /// w, w', w'' at t.
    void factors(double t, double& w, double& dw, double& ddw) const;
    NoiseSample apply(double t, const NoiseSample& raw) const;
};

/// Integral of s(x)^2 over [0, 1] for the quintic smoothstep s.
inline constexpr double kRampSquareMean = 181.0 / 462.0;

struct StepPlan {
    double dt = 0.0;
    std::size_t ramp_steps = 0;

    double ramp() const noexcept { return dt * static_cast<double>(ramp_steps); }
    std::size_t step_of(double t) const;
    double time_of(std::size_t step) const noexcept { return dt * static_cast<double>(step); }

    /**
     * @brief Integral of w(t)^2 up to a probe extracted after a down ramp.
     *
     * Second-order growth rates scale with the squared drive amplitude,
     * so closed-form predictions for windowed runs are evaluated here.
     */
    double driven_time(double t) const noexcept;
};

double max_frequency(const ModeSystem& system);
double min_frequency(const ModeSystem& system);

/// Resolve dt and the window ramp; throws ResolutionError if dt * omega_max > 0.1.
StepPlan plan_steps(const ModeSystem& system, const NoiseSpec& noise, const IntegratorConfig& config, double horizon);

/// Classic RK4 step with noise read from a half-step table.
class Rk4Stepper {
public:
    Rk4Stepper(const ModeEquations& eq, const NoiseSamples& table, double dt);

    /// Advance x from step i to i + 1 under window w.
    void step(std::vector<cplx>& x, std::size_t i, const Window& w);

    NoiseSample sample(std::size_t half_index, const Window& w) const;

private:
    const ModeEquations& eq_;
    const NoiseSamples& table_;
    double dt_;
    std::vector<cplx> k1_, k2_, k3_, k4_, tmp_;
};

struct Trajectory {
    std::size_t modes = 0;
    std::size_t blocks = 0;
    std::vector<int> in_modes;
    std::vector<double> omega;
    bool bank = false;
    bool requires_rest = false;
    double dt = 0.0;
    std::vector<double> t;
    std::vector<std::vector<cplx>> states;
    std::vector<NoiseSample> drive;  ///< windowed noise at each record

    /// Block b of record i as a ModeState.
    ModeState state(std::size_t record, std::size_t block = 0) const;
};

/**
 * @brief Integrate from in-vacuum initial data to t_stop.
 *
 * With a nonzero ramp the drive is ramped up at 0 and down to rest at t_stop.
 */
Trajectory integrate(const ModeSystem& system, const NoiseRealization& real, const IntegratorConfig& config,
                     double t_stop);

/// Single in-mode form: cavity family, in-vacuum mode n.
Trajectory integrate(ModeIndex n, const NoiseRealization& real, const CavityConfig& cavity,
                     const IntegratorConfig& config, double t_stop);

/**
 * @brief Bogoliubov coefficients from Q = (alpha e^{-iwt} + beta e^{iwt}) / sqrt(2w).
 *
 * Rows are in-modes; for an oscillator bank each oscillator is its own
 * in-mode and the matrices are diagonal.
 */
struct BogoliubovRecord {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<int> in_modes;
    std::vector<cplx> alpha;
    std::vector<cplx> beta;
    double T_stop = 0.0;

    cplx a(std::size_t n, std::size_t k) const { return alpha[n * cols + k]; }
    cplx b(std::size_t n, std::size_t k) const { return beta[n * cols + k]; }
};

/// Decompose one (Q, Qdot) pair at time t.
void decompose(double omega, double t, cplx Q, cplx Qdot, cplx& alpha, cplx& beta);

BogoliubovRecord bogoliubov_from_state(const ModeEquations& eq, std::span<const cplx> state, double t);

/// Throws ExtractionWindowError if the wall is moving at T_stop in a run that needs rest.
BogoliubovRecord extract_bogoliubov(const Trajectory& trajectory, double T_stop);

struct ParticleNumbers {
    std::vector<double> per_mode;
    double total = 0.0;
};

ParticleNumbers particle_number(const BogoliubovRecord& record);

/// max over rows of |sum_k (|alpha|^2 - |beta|^2) - 1|.
double sum_rule_deviation(const BogoliubovRecord& record);

/// Q conj(Qdot) - conj(Q) Qdot.
inline cplx wronskian(cplx Q, cplx Qdot) { return Q * std::conj(Qdot) - std::conj(Q) * Qdot; }

/// Records at rest-extraction points of one realization.
struct ProbeSnapshot {
    std::size_t step = 0;
    double t = 0.0;
    double driven_time = 0.0;
    std::vector<cplx> state;
};

/**
 * @brief Run one realization and capture the state at each probe step.
 *
 * Without a ramp the state is read from the main run. With a ramp each
 * probe gets a branch that starts one ramp earlier, ramps the drive
 * down and ends at rest; the main run only ramps up.
 */
std::vector<ProbeSnapshot> evolve_probes(const ModeEquations& eq, const NoiseRealization& real,
                                         const StepPlan& plan, std::span<const std::size_t> probe_steps);

} // namespace spc
