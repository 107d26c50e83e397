#include "spc/cavity.hpp"
#include "spc/errors.hpp"
#include "spc/msa.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

using namespace spc;
using namespace spc::msa;

namespace {

constexpr double kPi = std::numbers::pi;

NoiseSpec ou(double sigma, double t_c)
{
    NoiseSpec s;
    s.kind = NoiseKind::OrnsteinUhlenbeck;
    s.sigma = sigma;
    s.t_c = t_c;
    return s;
}

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

CavityConfig cube(double eps, int nz_max)
{
    return CavityConfig{1.0, 1.0, 1.0, eps, 1, 1, nz_max};
}

CavityConfig quasi_1d(double eps, int nz_max)
{
    return CavityConfig{1e6, 1e6, 1.0, eps, 1, 1, nz_max};
}

} // namespace

// OU with sigma = 1, t_c = 1/2: S(nu) = (1/2) / (1 - i nu / 2), so S(0) = 1/2 and S(2) = (1 + i) / 4.

TEST(StochasticBeta2, OuHandValue)
{
    // rate = w^2 eps^2 Re S(2) = 0.01 / 4; t = 1000 gives 1/2 (e^{2.5} - 1).
    const double b = msa_stochastic_beta2(1.0, 1.0, 0.1, ou(1.0, 0.5), 1000.0, OscillatorForm::Plain);
    EXPECT_NEAR(b, 0.5 * (std::exp(2.5) - 1.0), 1e-10);
    EXPECT_NEAR(b, 5.5912469, 1e-6);
}

TEST(StochasticBeta2, VanishesAtZeroTimeAndZeroNoise)
{
    EXPECT_EQ(msa_stochastic_beta2(1.0, 1.0, 0.1, ou(1.0, 0.5), 0.0, OscillatorForm::Plain), 0.0);
    EXPECT_EQ(msa_stochastic_beta2(1.0, 1.0, 0.1, ou(0.0, 0.5), 500.0, OscillatorForm::Plain), 0.0);
    EXPECT_EQ(msa_stochastic_beta2(1.0, 1.0, 0.0, ou(1.0, 0.5), 500.0, OscillatorForm::Plain), 0.0);
}

TEST(StochasticBeta2, SmallTimeIsLinear)
{
    const double rate = stochastic_rate(1.3, 1.3, 0.05, ou(1.0, 0.5), OscillatorForm::Plain);
    const double t = 1e-3;
    EXPECT_NEAR(msa_stochastic_beta2(1.3, 1.3, 0.05, ou(1.0, 0.5), t, OscillatorForm::Plain), 0.5 * rate * t,
                1e-6 * rate * t);
}

TEST(StochasticBeta2, CavityFormIsRescaledPlainForm)
{
    const NoiseSpec s = ou(1.0, 0.5);
    const double w = 1.4;
    const double wz = 0.9;
    const double eps = 0.03;
    const double eps_eff = 2.0 * eps * wz * wz / (w * w);
    EXPECT_NEAR(msa_stochastic_beta2(w, wz, eps, s, 700.0, OscillatorForm::CavitySingleMode),
                msa_stochastic_beta2(w, wz, eps_eff, s, 700.0, OscillatorForm::Plain), 1e-12);
}

TEST(StochasticBeta2, SigmaEpsilonRescalingInvariance)
{
    for (double t : {10.0, 300.0, 2000.0}) {
        const double a = msa_stochastic_beta2(1.0, 1.0, 0.05, ou(1.0, 0.5), t, OscillatorForm::Plain);
        const double b = msa_stochastic_beta2(1.0, 1.0, 0.025, ou(2.0, 0.5), t, OscillatorForm::Plain);
        EXPECT_NEAR(a, b, 1e-12 * std::max(1.0, a));
    }
}

TEST(StochasticBeta2, NondecreasingInTime)
{
    double last = 0.0;
    for (int i = 1; i <= 50; ++i) {
        const double b = msa_stochastic_beta2(1.0, 1.0, 0.05, band(1.5, 2.5), 40.0 * i, OscillatorForm::Plain);
        EXPECT_GE(b, last);
        last = b;
    }
}

TEST(DeterministicBeta2, SinhSquared)
{
    EXPECT_NEAR(msa_deterministic_beta2(1.0, 0.01, 400.0), std::pow(std::sinh(1.0), 2), 1e-14);
    EXPECT_NEAR(msa_deterministic_beta2(2.0, 0.01, 200.0), 1.3810978455418157, 1e-12);
    EXPECT_EQ(msa_deterministic_beta2(2.0, 0.01, 0.0), 0.0);
}

TEST(MeanQ, VacuumHandValues)
{
    // Re S(2) - S(0) = -1/4, so |<Q>| decays at eps^2 / 16; the frequency shifts by -eps^2 / 16.
    const double eps = 0.1;
    const double t = 800.0;
    const auto q = msa_mean_q(1.0, eps, ou(1.0, 0.5), t, InitialData::Vacuum);
    EXPECT_NEAR(std::abs(q), std::exp(-eps * eps * t / 16.0) / std::sqrt(2.0), 1e-12);
    const std::complex<double> expected =
        std::polar(std::exp(-eps * eps * t / 16.0), -(1.0 - eps * eps / 16.0) * t) / std::sqrt(2.0);
    EXPECT_NEAR(std::abs(q - expected), 0.0, 1e-10);
}

TEST(MeanQ, InitialValues)
{
    const auto v = msa_mean_q(2.0, 0.1, ou(1.0, 0.5), 0.0, InitialData::Vacuum);
    EXPECT_NEAR(v.real(), 0.5, 1e-15);
    EXPECT_EQ(v.imag(), 0.0);
    EXPECT_EQ(msa_mean_q(2.0, 0.1, ou(1.0, 0.5), 0.0, InitialData::PositionKick), std::complex<double>(1.0));
    EXPECT_NEAR(msa_mean_q2(2.0, 0.1, ou(1.0, 0.5), 0.0), 1.0, 1e-15);
}

TEST(MeanQ, KickIsRealPartOfScaledVacuum)
{
    const NoiseSpec s = ou(1.0, 0.5);
    for (double t : {3.0, 50.0, 900.0}) {
        const auto vac = msa_mean_q(1.7, 0.05, s, t, InitialData::Vacuum);
        const auto kick = msa_mean_q(1.7, 0.05, s, t, InitialData::PositionKick);
        EXPECT_NEAR(kick.real(), std::sqrt(2.0 * 1.7) * vac.real(), 1e-12);
    }
}

TEST(MeanQ2, HandValueAndNoiselessLimit)
{
    const double w = 1.0;
    const double eps = 0.1;
    const double t = 400.0;
    // w^2 eps^2 = 0.01: (1/2) e^{0.005 (1/4 - 1) t} cos((2 - 0.005 / 4) t) + (1/2) e^{0.01 t / 4}.
    const double expected = 0.5 * std::exp(0.005 * (0.25 - 1.0) * t) * std::cos((2.0 - 0.00125) * t) +
                            0.5 * std::exp(0.0025 * t);
    EXPECT_NEAR(msa_mean_q2(w, eps, ou(1.0, 0.5), t), expected, 1e-10);
    // cos^2(w t) without noise.
    EXPECT_NEAR(msa_mean_q2(1.3, 0.1, ou(0.0, 0.5), 7.0), std::pow(std::cos(1.3 * 7.0), 2), 1e-12);
}

TEST(Cosmology, MatchesOscillatorAndIsMonotone)
{
    const NoiseSpec s = ou(1.0, 0.5);
    const double M = 1.0;
    for (double k : {0.0, 0.5, 1.0, 2.0}) {
        const double w = std::sqrt(k * k + M * M);
        double last = -1.0;
        for (double eta : {0.0, 100.0, 500.0, 2000.0}) {
            const double b = cosmo_beta2(k, M, 0.05, s, eta);
            EXPECT_EQ(b, msa_stochastic_beta2(w, w, 0.05, s, eta, OscillatorForm::Plain));
            EXPECT_GT(b, last);
            last = b;
        }
    }
}

TEST(Perturbative, HandValueAndFlags)
{
    const CavityConfig c = quasi_1d(0.01, 3);
    const NoiseSpec s = band(8.0, 11.0);
    const double T = 100.0;
    const auto est = perturbative_beta2(c, s, {1}, {2}, T);
    const double vnk = v(c, {1}, {2});
    const double w1 = omega(c, {1});
    const double w2 = omega(c, {2});
    // Flat band: Re S = pi sigma^2 / (2 (nu_max - nu_min)) inside it.
    EXPECT_NEAR(est.value, 2.0 * 1e-4 * T * vnk * vnk * kPi / 6.0, 1e-6 * est.value);
    EXPECT_NEAR(est.omega_t, w1 * T, 1e-9);
    EXPECT_NEAR(est.validity, 1e-4 * w2 * T, 1e-12);
    EXPECT_TRUE(est.long_time);
    EXPECT_TRUE(est.perturbative);
    const auto occ = perturbative_occupation(c, s, T);
    double sum = 0.0;
    for (int n = 1; n <= 3; ++n) {
        sum += perturbative_beta2(c, s, {n}, {2}, T).value;
    }
    EXPECT_NEAR(occ[1], sum, 1e-15);
}

TEST(Perturbative, DeterministicResonanceWindow)
{
    const CavityConfig c = quasi_1d(0.01, 3);
    const double res = omega(c, {1}) + omega(c, {2});
    const double vnk = v(c, {1}, {2});
    EXPECT_NEAR(deterministic_beta2(c, res, {1}, {2}, 50.0), 0.25 * 1e-4 * vnk * vnk * 2500.0, 1e-12);
    EXPECT_EQ(deterministic_beta2(c, res * 1.01, {1}, {2}, 50.0), 0.0);
}

// ---------------------------------------------------------------------------
// slow flow

TEST(SlowFlow, SingleModeReproducesClosedForm)
{
    const CavityConfig c{1e6, 1e6, kPi, 0.05, 1, 1, 1};
    const NoiseSpec s = ou(1.0, 0.5);
    const SlowFlowRates r = slow_flow_rates(c, s);
    const std::vector<double> grid{0.0, 100.0, 400.0, 1200.0};
    const auto sol = solve_occupations(r, c, {1}, grid);
    const double w = omega(c, {1});
    const double wz = omega_z(c, {1});
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double expected = msa_stochastic_beta2(w, wz, 0.05, s, grid[i], OscillatorForm::CavitySingleMode);
        EXPECT_NEAR(sol.beta2_total[i], expected, 1e-8 * std::max(1.0, expected));
    }
    EXPECT_FALSE(sol.negative_total);
}

TEST(SlowFlow, ZeroedTransferDecouplesModes)
{
    const CavityConfig c = quasi_1d(0.02, 3);
    SlowFlowRates r = slow_flow_rates(c, band(8.5, 10.5));
    std::fill(r.rho.begin(), r.rho.end(), 0.0);
    const std::vector<double> grid{0.0, 20.0, 40.0, 60.0};
    for (int n = 1; n <= 3; ++n) {
        const auto sol = solve_occupations(r, c, {n}, grid);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double tau = 0.02 * 0.02 * grid[i];
            const double expected = 0.5 * std::expm1(-r.gamma[static_cast<std::size_t>(n - 1)] * tau);
            EXPECT_NEAR(sol.beta2_total[i], expected, 1e-8 * std::max(1.0, std::abs(expected)));
        }
    }
}

TEST(SlowFlow, RederivedTransferConservesWeightedOccupationUnderScattering)
{
    // Cube family: differences of the lowest three frequencies lie in [2, 5.1];
    // sums and doubled frequencies lie above 10.8.
    const CavityConfig c = cube(0.05, 3);
    const SlowFlowRates r = slow_flow_rates(c, band(1.0, 6.0));
    const std::vector<double> grid{0.0, 200.0, 800.0, 2000.0};
    for (int n = 1; n <= 3; ++n) {
        const auto sol = solve_occupations(r, c, {n}, grid);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            EXPECT_NEAR(sol.beta2_total[i], 0.0, 1e-10);
        }
        EXPECT_LT(sol.T.back()[static_cast<std::size_t>(n - 1)], sol.T.front()[static_cast<std::size_t>(n - 1)]);
    }
}

TEST(SlowFlow, DisplayedTransferDiffers)
{
    const CavityConfig c = cube(0.05, 3);
    const SlowFlowRates a = slow_flow_rates(c, band(1.0, 6.0), RhoForm::Rederived);
    const SlowFlowRates b = slow_flow_rates(c, band(1.0, 6.0), RhoForm::Displayed);
    EXPECT_EQ(a.gamma, b.gamma);
    EXPECT_NE(a.rho, b.rho);
    EXPECT_EQ(rho_form_from_string(to_string(RhoForm::Displayed)), RhoForm::Displayed);
    EXPECT_THROW(rho_form_from_string("displayed"), ConfigError);
}

TEST(SlowFlow, RederivedTransferHandValue)
{
    const CavityConfig c = quasi_1d(0.02, 2);
    const NoiseSpec s = band(1.0, 11.0);
    const SlowFlowRates r = slow_flow_rates(c, s);
    const double w1 = omega(c, {1});
    const double w2 = omega(c, {2});
    const double g2 = 16.0 / 9.0;
    const double d2 = std::pow(w2 * w2 - w1 * w1, 2);
    // Both w1 + w2 and w2 - w1 fall inside the flat band, Re S = pi / 20 there.
    const double expected = -g2 * d2 / (2.0 * w2 * w2) * 2.0 * kPi / 20.0;
    EXPECT_NEAR(r.rho_at(0, 1), expected, 1e-9 * std::abs(expected));
    EXPECT_EQ(r.rho_at(0, 0), 0.0);
}

TEST(SlowFlow, DiagonalRatesForSingleMode)
{
    const CavityConfig c{1e6, 1e6, 1.0, 0.05, 1, 1, 1};
    const NoiseSpec s = ou(1.0, 0.5);
    const SlowFlowRates r = slow_flow_rates(c, s);
    const double w = omega(c, {1});
    const double wz = omega_z(c, {1});
    const Spectrum S(s);
    const double diag = std::pow(wz, 4) / (w * w);
    EXPECT_NEAR(r.gamma[0], -4.0 * diag * S.re(2.0 * w), 1e-12);
    EXPECT_NEAR(std::abs(r.lambda[0] - diag * (S(0.0) - S(2.0 * w))), 0.0, 1e-12);
}

TEST(SlowFlow, RefusesDegenerateSpectrum)
{
    const CavityConfig c{1.0, 1.0, 1e7, 0.01, 1, 1, 3};
    EXPECT_THROW(slow_flow_rates(c, band(1.0, 2.0)), DegenerateSpectrum);
}

TEST(SlowFlow, MeanParticleNumberSumsInModes)
{
    const CavityConfig c = quasi_1d(0.02, 3);
    const SlowFlowRates r = slow_flow_rates(c, band(8.5, 10.5));
    const std::vector<double> grid{10.0, 30.0, 60.0};
    const std::vector<int> modes{1, 3};
    const auto total = mean_particle_number(r, c, modes, grid);
    const auto a = solve_occupations(r, c, {1}, grid);
    const auto b = solve_occupations(r, c, {3}, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        EXPECT_NEAR(total[i], a.beta2_total[i] + b.beta2_total[i], 1e-15);
    }
}

TEST(SlowFlow, ValidatesGrid)
{
    const CavityConfig c = quasi_1d(0.02, 2);
    const SlowFlowRates r = slow_flow_rates(c, band(8.5, 10.5));
    const std::vector<double> bad{10.0, 5.0};
    EXPECT_THROW(solve_occupations(r, c, {1}, bad), std::invalid_argument);
    const std::vector<double> ok{1.0};
    EXPECT_THROW(solve_occupations(r, c, {3}, ok), std::out_of_range);
    EXPECT_THROW(solve_occupations(r, quasi_1d(0.02, 3), {1}, ok), std::invalid_argument);
}
