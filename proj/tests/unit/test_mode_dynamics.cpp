#include "spc/ensemble.hpp"
#include "spc/errors.hpp"
#include "spc/mode_dynamics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace spc;

namespace {

constexpr double kPi = std::numbers::pi;

NoiseSpec band(double lo, double hi, double sigma = 1.0)
{
    NoiseSpec s;
    s.kind = NoiseKind::BandLimited;
    s.sigma = sigma;
    s.nu_min = lo;
    s.nu_max = hi;
    s.n_components = 64;
    return s;
}

NoiseSpec ou(double sigma, double t_c)
{
    NoiseSpec s;
    s.kind = NoiseKind::OrnsteinUhlenbeck;
    s.sigma = sigma;
    s.t_c = t_c;
    return s;
}

NoiseSpec sinusoid(double w)
{
    NoiseSpec s;
    s.kind = NoiseKind::DeterministicSinusoid;
    s.omega_drive = w;
    return s;
}

CavityConfig quasi_1d(double eps, int nz_max)
{
    return CavityConfig{1e6, 1e6, 1.0, eps, 1, 1, nz_max};
}

ModeState random_state(std::mt19937_64& gen, std::size_t k, double t)
{
    std::normal_distribution<double> n(0.0, 1.0);
    ModeState s{t, std::vector<cplx>(k), std::vector<cplx>(k)};
    for (std::size_t i = 0; i < k; ++i) {
        s.Q[i] = {n(gen), n(gen)};
        s.Qdot[i] = {n(gen), n(gen)};
    }
    return s;
}

double max_diff(const ModeState& a, const ModeState& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.Qdot.size(); ++i) {
        m = std::max(m, std::abs(a.Qdot[i] - b.Qdot[i]));
        m = std::max(m, std::abs(a.Q[i] - b.Q[i]));
    }
    return m;
}

double beta2_at(const ModeSystem& sys, const NoiseRealization& real, IntegratorConfig cfg, double t_stop,
                std::size_t row = 0)
{
    const Trajectory traj = integrate(sys, real, cfg, t_stop);
    const BogoliubovRecord rec = extract_bogoliubov(traj, traj.t.back());
    double sum = 0.0;
    for (std::size_t k = 0; k < rec.cols; ++k) {
        sum += std::norm(rec.b(row, k));
    }
    return sum;
}

} // namespace

// ---------------------------------------------------------------------------
// right-hand sides

TEST(RhsLinearized, FreeOscillatorAtZeroEpsilon)
{
    const CavityConfig c = quasi_1d(0.0, 3);
    const auto real = synthesize(band(1.0, 8.0), 1, 10.0);
    std::mt19937_64 gen(1);
    const ModeState s = random_state(gen, 3, 2.5);
    const ModeState d = rhs_linearized(s, real, c);
    for (int k = 0; k < 3; ++k) {
        const double w = omega(c, {k + 1});
        EXPECT_NEAR(std::abs(d.Qdot[static_cast<std::size_t>(k)] + w * w * s.Q[static_cast<std::size_t>(k)]), 0.0,
                    1e-12 * w * w);
        EXPECT_EQ(d.Q[static_cast<std::size_t>(k)], s.Qdot[static_cast<std::size_t>(k)]);
    }
}

TEST(RhsLinearized, SingleModeReducesToParametricOscillator)
{
    const CavityConfig c{1e6, 1e6, 1.0, 0.03, 1, 1, 1};
    const auto real = synthesize(ou(1.0, 0.5), 4, 10.0);
    std::mt19937_64 gen(2);
    const ModeState s = random_state(gen, 1, 3.3);
    const double w = omega(c, {1});
    const double wz = omega_z(c, {1});
    const cplx expected = (-w * w + 2.0 * 0.03 * real.eval(3.3, 0) * wz * wz) * s.Q[0];
    EXPECT_NEAR(std::abs(rhs_linearized(s, real, c).Qdot[0] - expected), 0.0, 1e-12 * std::abs(expected));
}

TEST(RhsLinearized, CouplingsVanishWithoutNoise)
{
    const CavityConfig c = quasi_1d(0.1, 2);
    const auto real = synthesize(band(1.0, 8.0, 0.0), 1, 10.0);
    std::mt19937_64 gen(3);
    const ModeState s = random_state(gen, 2, 1.0);
    const ModeState d = rhs_linearized(s, real, c);
    for (int k = 0; k < 2; ++k) {
        const double w = omega(c, {k + 1});
        EXPECT_EQ(d.Qdot[static_cast<std::size_t>(k)], -w * w * s.Q[static_cast<std::size_t>(k)]);
    }
}

TEST(RhsLinearized, CoupledRunRejectsRoughNoise)
{
    const CavityConfig c = quasi_1d(0.1, 2);
    const auto real = synthesize(ou(1.0, 0.5), 1, 10.0);
    std::mt19937_64 gen(3);
    EXPECT_THROW(rhs_linearized(random_state(gen, 2, 1.0), real, c), UnsupportedDerivative);
}

TEST(RhsExact, MatchesLinearizedAtZeroEpsilon)
{
    const CavityConfig c = quasi_1d(0.0, 3);
    const auto real = synthesize(band(1.0, 8.0), 5, 10.0);
    std::mt19937_64 gen(4);
    for (int i = 0; i < 10; ++i) {
        const ModeState s = random_state(gen, 3, 0.9 * i);
        EXPECT_LT(max_diff(rhs_exact(s, real, c), rhs_linearized(s, real, c)), 1e-9);
    }
}

TEST(RhsExact, DiffersFromLinearizedAtSecondOrder)
{
    const auto real = synthesize(band(1.0, 8.0), 6, 20.0);
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> when(0.0, 20.0);
    double worst_ratio = 1e300;
    double best_ratio = 0.0;
    for (int i = 0; i < 100; ++i) {
        const ModeState s = random_state(gen, 3, when(gen));
        const double d1 = max_diff(rhs_exact(s, real, quasi_1d(1e-4, 3)), rhs_linearized(s, real, quasi_1d(1e-4, 3)));
        const double d2 =
            max_diff(rhs_exact(s, real, quasi_1d(5e-5, 3)), rhs_linearized(s, real, quasi_1d(5e-5, 3)));
        worst_ratio = std::min(worst_ratio, d1 / d2);
        best_ratio = std::max(best_ratio, d1 / d2);
        EXPECT_GT(d1, 0.0);
    }
    EXPECT_GT(worst_ratio, 3.9);
    EXPECT_LT(best_ratio, 4.1);
}

TEST(RhsExact, SingleModeHasNoLambdaSquaredTerm)
{
    const CavityConfig c{1e6, 1e6, 1.0, 0.1, 1, 1, 1};
    const auto real = synthesize(band(1.0, 3.0), 2, 10.0);
    std::mt19937_64 gen(6);
    const ModeState s = random_state(gen, 1, 4.0);
    const double L = 1.0 + 0.1 * real.eval(4.0, 0);
    const double wz = omega_z(c, {1});
    const cplx expected = -(omega_perp_squared(c) + wz * wz / (L * L)) * s.Q[0];
    EXPECT_NEAR(std::abs(rhs_exact(s, real, c).Qdot[0] - expected), 0.0, 1e-10 * std::abs(expected));
}

TEST(RhsExact, CollapsedGeometryThrows)
{
    const CavityConfig c{1e6, 1e6, 1.0, 0.9, 1, 1, 2};
    const NoiseRealization real(sinusoid(1.0), 0, 10.0, NoiseRealization::Sinusoid{1.0});
    std::mt19937_64 gen(7);
    EXPECT_NO_THROW(rhs_exact(random_state(gen, 2, 1.5 * kPi), real, c));

    const auto wild = synthesize(band(1.0, 2.0, 50.0), 1, 50.0);
    bool thrown = false;
    for (double t = 0.0; t < 50.0 && !thrown; t += 0.1) {
        try {
            rhs_exact(random_state(gen, 2, t), wild, c);
        } catch (const GeometryCollapse&) {
            thrown = true;
        }
    }
    EXPECT_TRUE(thrown);
}

// ---------------------------------------------------------------------------
// initial data, integration and extraction

TEST(InitialData, VacuumInMode)
{
    const CavityConfig c = quasi_1d(0.0, 3);
    const ModeState s = vacuum_state(c, {2});
    const double w = omega(c, {2});
    EXPECT_EQ(s.Q[0], cplx(0.0));
    EXPECT_NEAR(s.Q[1].real(), 1.0 / std::sqrt(2.0 * w), 1e-15);
    EXPECT_NEAR(s.Qdot[1].imag(), -std::sqrt(w / 2.0), 1e-15);
    EXPECT_EQ(wronskian(s.Q[1], s.Qdot[1]), cplx(0.0, 1.0));
}

TEST(Integrate, FreeEvolutionIsExactPhase)
{
    const CavityConfig c = quasi_1d(0.0, 3);
    const auto real = synthesize(band(1.0, 8.0), 1, 200.0);
    for (int n = 1; n <= 3; ++n) {
        const double w = omega(c, {n});
        const double t_stop = 100.0 / w;
        IntegratorConfig cfg;
        cfg.dt = 0.004 / w;
        const Trajectory traj = integrate({n}, real, c, cfg, t_stop);
        const ModeState last = traj.state(traj.t.size() - 1);
        const cplx expected = std::polar(1.0 / std::sqrt(2.0 * w), -w * traj.t.back());
        EXPECT_LT(std::abs(last.Q[static_cast<std::size_t>(n - 1)] - expected) / std::abs(expected), 1e-8);
        for (int k = 1; k <= 3; ++k) {
            if (k != n) {
                EXPECT_EQ(last.Q[static_cast<std::size_t>(k - 1)], cplx(0.0));
            }
        }
    }
}

TEST(Extract, FreeRunIsIdentity)
{
    const CavityConfig c = quasi_1d(0.0, 3);
    const auto real = synthesize(band(1.0, 8.0), 1, 50.0);
    IntegratorConfig cfg;
    cfg.dt = 5e-4;
    const Trajectory traj = integrate(all_in_modes(c), real, cfg, 40.0);
    const BogoliubovRecord rec = extract_bogoliubov(traj, traj.t.back());
    for (std::size_t n = 0; n < 3; ++n) {
        for (std::size_t k = 0; k < 3; ++k) {
            EXPECT_NEAR(std::abs(rec.a(n, k) - (n == k ? cplx(1.0) : cplx(0.0))), 0.0, 1e-8);
            EXPECT_NEAR(std::abs(rec.b(n, k)), 0.0, 1e-10);
        }
    }
}

TEST(Extract, CoupledSumRule)
{
    const CavityConfig c = quasi_1d(0.02, 3);
    const auto real = synthesize(band(8.5, 10.5), 9, 80.0);
    const Trajectory traj = integrate(all_in_modes(c), real, IntegratorConfig{}, 60.0);
    const BogoliubovRecord rec = extract_bogoliubov(traj, traj.t.back());
    EXPECT_LT(sum_rule_deviation(rec), 1e-6);
    EXPECT_GT(particle_number(rec).total, 0.0);
}

TEST(Extract, ExactPathSumRule)
{
    CavityConfig c = quasi_1d(0.02, 3);
    const auto real = synthesize(band(8.5, 10.5), 9, 80.0);
    IntegratorConfig cfg;
    cfg.path = IntegrationPath::Exact;
    const Trajectory traj = integrate(all_in_modes(c), real, cfg, 60.0);
    EXPECT_LT(sum_rule_deviation(extract_bogoliubov(traj, traj.t.back())), 1e-6);
}

TEST(Extract, RefusesMovingWall)
{
    const CavityConfig c = quasi_1d(0.02, 2);
    const auto real = synthesize(band(1.0, 8.0), 9, 80.0);
    IntegratorConfig cfg;
    cfg.ramp = 0.0;
    const Trajectory traj = integrate(all_in_modes(c), real, cfg, 30.0);
    EXPECT_THROW(extract_bogoliubov(traj, traj.t.back()), ExtractionWindowError);
    EXPECT_THROW(extract_bogoliubov(traj, 1e6), OutOfRange);
}

TEST(Extract, DeterministicResonanceAtUnitSlowTime)
{
    // eps omega t / 4 = 1 with omega = 1, eps = 0.01.
    const NoiseRealization real = synthesize(sinusoid(2.0), 0, 401.0);
    const double b2 = beta2_at(plain_oscillator(1.0, 0.01), real, IntegratorConfig{}, 400.0);
    EXPECT_NEAR(b2 / std::pow(std::sinh(1.0), 2), 1.0, 0.02);
    EXPECT_NEAR(std::pow(std::sinh(1.0), 2), 1.38109, 1e-5);
}

TEST(Extract, DecomposeRoundTrip)
{
    const double w = 1.7;
    const double t = 3.1;
    const cplx alpha(1.2, -0.3);
    const cplx beta(0.4, 0.25);
    const cplx Q = (alpha * std::polar(1.0, -w * t) + beta * std::polar(1.0, w * t)) / std::sqrt(2.0 * w);
    const cplx P = cplx(0.0, -w) * (alpha * std::polar(1.0, -w * t) - beta * std::polar(1.0, w * t)) /
                   std::sqrt(2.0 * w);
    cplx a, b;
    decompose(w, t, Q, P, a, b);
    EXPECT_NEAR(std::abs(a - alpha), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(b - beta), 0.0, 1e-14);
}

TEST(ParticleNumber, Definitions)
{
    BogoliubovRecord zero{2, 2, {1, 2}, std::vector<cplx>(4, 0.0), std::vector<cplx>(4, 0.0), 1.0};
    const auto z = particle_number(zero);
    EXPECT_EQ(z.total, 0.0);
    EXPECT_EQ(z.per_mode, (std::vector<double>{0.0, 0.0}));

    BogoliubovRecord single{1, 1, {1}, {cplx(1.2)}, {cplx(0.3, 0.4)}, 1.0};
    EXPECT_NEAR(particle_number(single).total, 0.25, 1e-15);

    BogoliubovRecord two{2, 2, {1, 2}, std::vector<cplx>(4, 0.0),
                         {std::sqrt(0.1), std::sqrt(0.2), std::sqrt(0.05), std::sqrt(0.3)}, 1.0};
    const auto p = particle_number(two);
    EXPECT_NEAR(p.per_mode[0], 0.15, 1e-15);
    EXPECT_NEAR(p.per_mode[1], 0.5, 1e-15);
    EXPECT_NEAR(p.total, 0.65, 1e-15);
}

// ---------------------------------------------------------------------------
// invariants and convergence

TEST(Invariants, WronskianConservedAtDefaultStep)
{
    const auto real = synthesize(ou(1.0, 0.5), 21, 2001.0);
    const Trajectory traj = integrate(plain_oscillator(1.0, 0.05), real, IntegratorConfig{}, 2000.0);
    double worst = 0.0;
    for (std::size_t r = 0; r < traj.t.size(); r += 1000) {
        const ModeState s = traj.state(r);
        worst = std::max(worst, std::abs(wronskian(s.Q[0], s.Qdot[0]) - cplx(0.0, 1.0)));
    }
    const ModeState s = traj.state(traj.t.size() - 1);
    worst = std::max(worst, std::abs(wronskian(s.Q[0], s.Qdot[0]) - cplx(0.0, 1.0)));
    EXPECT_LT(worst, 1e-8);
}

TEST(Invariants, StepHalvingChangesBeta2Negligibly)
{
    const auto real = synthesize(ou(1.0, 0.5), 21, 2001.0);
    const ModeSystem sys = plain_oscillator(1.0, 0.05);
    const StepPlan plan = plan_steps(sys, real.spec(), IntegratorConfig{}, 2000.0);
    IntegratorConfig a;
    a.dt = plan.dt;
    IntegratorConfig b = a;
    b.dt = plan.dt / 2;
    const double coarse = beta2_at(sys, real, a, 2000.0);
    const double fine = beta2_at(sys, real, b, 2000.0);
    EXPECT_GT(fine, 0.1);
    EXPECT_LT(std::abs(coarse - fine) / fine, 1e-6);
}

TEST(Invariants, StepHalvingCoupled)
{
    // The ramp must span a whole number of steps at both resolutions.
    const CavityConfig c = quasi_1d(0.02, 3);
    const auto real = synthesize(band(8.5, 10.5), 31, 80.0);
    const ModeSystem sys = all_in_modes(c);
    const StepPlan plan = plan_steps(sys, real.spec(), IntegratorConfig{}, 60.0);
    IntegratorConfig a;
    a.ramp = 10.0;
    a.dt = a.ramp / std::ceil(a.ramp / plan.dt);
    IntegratorConfig b = a;
    b.dt = a.dt / 2;
    const double coarse = beta2_at(sys, real, a, 60.0);
    const double fine = beta2_at(sys, real, b, 60.0);
    EXPECT_LT(std::abs(coarse - fine) / fine, 1e-6);
}

TEST(Invariants, FourthOrderErrorRatio)
{
    const CavityConfig c = quasi_1d(0.02, 3);
    const auto real = synthesize(band(8.5, 10.5), 31, 80.0);
    const ModeSystem sys = all_in_modes(c);
    IntegratorConfig cfg;
    cfg.ramp = 10.0;
    double b[3];
    for (int i = 0; i < 3; ++i) {
        cfg.dt = 0.005 / std::pow(2.0, i);
        b[i] = beta2_at(sys, real, cfg, 40.0);
    }
    const double ratio = (b[0] - b[1]) / (b[1] - b[2]);
    EXPECT_GT(ratio, 12.0);
    EXPECT_LT(ratio, 20.0);
}

TEST(Invariants, LinearizedAndExactAgreeToThirdOrder)
{
    const auto real = synthesize(band(8.5, 10.5), 33, 80.0);
    IntegratorConfig lin;
    IntegratorConfig ex;
    ex.path = IntegrationPath::Exact;
    double diff[2];
    double size[2];
    const double eps[2] = {1e-3, 5e-4};
    for (int i = 0; i < 2; ++i) {
        const ModeSystem sys = all_in_modes(quasi_1d(eps[i], 3));
        const double bl = beta2_at(sys, real, lin, 60.0);
        const double be = beta2_at(sys, real, ex, 60.0);
        diff[i] = std::abs(be - bl);
        size[i] = bl;
    }
    // beta2 itself is second order; the path difference is third order or higher.
    EXPECT_NEAR(size[0] / size[1], 4.0, 0.1);
    EXPECT_GT(diff[0] / diff[1], 6.0);
    EXPECT_LT(diff[0], 0.1 * size[0]);
}

TEST(Invariants, EnsembleBeta2NondecreasingAcrossWindows)
{
    EnsembleConfig e;
    e.n_realizations = 64;
    e.master_seed = 3;
    e.workers = 1;
    e.probes = {22, 32, 42, 52, 62};
    const auto stats = run_ensemble(e, all_in_modes(quasi_1d(0.02, 3)), band(8.5, 10.5), IntegratorConfig{});
    const auto m = stats.means("occupation_total", "all");
    for (std::size_t i = 1; i < m.size(); ++i) {
        EXPECT_GE(m[i], m[i - 1]);
    }
}

// ---------------------------------------------------------------------------
// planning and windows

TEST(Plan, AutomaticStepRespectsPeriodAndDrift)
{
    const StepPlan p = plan_steps(plain_oscillator(1.0, 0.05), band(1.0, 3.0), IntegratorConfig{}, 1e-3);
    EXPECT_NEAR(p.dt, 2 * kPi / 64, 1e-15);
    const StepPlan q = plan_steps(plain_oscillator(1.0, 0.05), band(1.0, 3.0), IntegratorConfig{}, 2000.0);
    EXPECT_LT(q.dt, p.dt);
    EXPECT_NEAR(2000.0 * std::pow(q.dt, 5) / 72.0, 1e-9, 1e-12);
    EXPECT_EQ(q.ramp_steps, 0u);
}

TEST(Plan, OuStepDividesNoiseGrid)
{
    const StepPlan p = plan_steps(plain_oscillator(1.0, 0.05), ou(1.0, 0.5), IntegratorConfig{}, 2000.0);
    const double m = 0.01 / p.dt;
    EXPECT_NEAR(m, std::round(m), 1e-9);
    EXPECT_DOUBLE_EQ(p.dt, 0.005);
}

TEST(Plan, ResolutionGuard)
{
    IntegratorConfig cfg;
    cfg.dt = 0.2;
    EXPECT_THROW(plan_steps(plain_oscillator(1.0, 0.05), band(1.0, 3.0), cfg, 10.0), ResolutionError);
    cfg.dt = 0.1;
    EXPECT_NO_THROW(plan_steps(plain_oscillator(1.0, 0.05), band(1.0, 3.0), cfg, 10.0));
}

TEST(Plan, CoupledRunsGetFivePeriodRamp)
{
    const StepPlan p = plan_steps(all_in_modes(quasi_1d(0.02, 3)), band(8.5, 10.5), IntegratorConfig{}, 60.0);
    EXPECT_NEAR(p.ramp(), 10.0, p.dt);
}

TEST(Window, RampSquareMeanOracle)
{
    double s = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double x = (i + 0.5) / n;
        const double v = x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
        s += v * v / n;
    }
    EXPECT_NEAR(s, kRampSquareMean, 1e-10);
}

TEST(Window, VanishesWithTwoDerivativesAtEnds)
{
    const Window w{2.0, true, 10.0};
    double f, df, ddf;
    for (double t : {0.0, 10.0}) {
        w.factors(t, f, df, ddf);
        EXPECT_NEAR(f, 0.0, 1e-15);
        EXPECT_NEAR(df, 0.0, 1e-15);
        EXPECT_NEAR(ddf, 0.0, 1e-15);
    }
    w.factors(5.0, f, df, ddf);
    EXPECT_EQ(f, 1.0);
    const double h = 1e-5;
    double a, b, unused;
    w.factors(1.0 + h, a, unused, unused);
    w.factors(1.0 - h, b, unused, unused);
    w.factors(1.0, f, df, ddf);
    EXPECT_NEAR((a - b) / (2 * h), df, 1e-8);
}

TEST(Plan, DrivenTimeOfWindowedProbe)
{
    StepPlan p{0.01, 1000};
    EXPECT_NEAR(p.driven_time(50.0), 50.0 - 20.0 * (1.0 - 181.0 / 462.0), 1e-12);
    StepPlan bare{0.01, 0};
    EXPECT_EQ(bare.driven_time(50.0), 50.0);
}
