#pragma once

#include "spc/cavity.hpp"
#include "spc/noise.hpp"

#include <complex>
#include <span>
#include <string_view>
#include <vector>

/// Closed-form predictions: perturbative, deterministic and stochastic multiple-scale results.
namespace spc::msa {

/// Plain oscillator Q'' + w^2(1 + eps xi)Q = 0, or the single-mode cavity equation.
enum class OscillatorForm { Plain, CavitySingleMode };

/// Vacuum: Q(0) = 1/sqrt(2w), Q'(0) = -i sqrt(w/2). PositionKick: Q(0) = 1, Q'(0) = 0.
enum class InitialData { Vacuum, PositionKick };

/**
 * @brief Convention for the intermode transfer matrix rho.
 *
 * Rederived: -g^2 (w_k^2 - w_m^2)^2 / (2 w_k^2) Re[S(w_k + w_m) + S(w_k - w_m)],
 * which conserves sum_k 2 w_k T_k under pure scattering.
 * Displayed: the alternative polynomial weighting kept for comparison.
 */
enum class RhoForm { Rederived, Displayed };

std::string_view to_string(RhoForm form);
RhoForm rho_form_from_string(std::string_view name);

struct PerturbativeEstimate {
    double value = 0.0;
    double omega_t = 0.0;     ///< min(w_n, w_k) T; the estimate needs this >> 1
    double validity = 0.0;    ///< eps^2 max(w_n, w_k) T; the estimate needs this <~ 1
    bool long_time = false;   ///< omega_t >= 10
    bool perturbative = false; ///< validity <= 1
};

/// 2 eps^2 T v_nk^2 Re S(w_n + w_k).
PerturbativeEstimate perturbative_beta2(const CavityConfig& cavity, const NoiseSpec& noise, ModeIndex n, ModeIndex k,
                                        double T);

/// <N_k> = sum_n of perturbative_beta2 over the retained family.
std::vector<double> perturbative_occupation(const CavityConfig& cavity, const NoiseSpec& noise, double T);

/// eps^2 v_nk^2 T^2 / 4 when |Omega - (w_n + w_k)| <= rel_window (w_n + w_k), else 0.
double deterministic_beta2(const CavityConfig& cavity, double Omega, ModeIndex n, ModeIndex k, double T,
                           double rel_window = 1e-6);

/// sinh^2(w eps t / 4).
double msa_deterministic_beta2(double omega, double epsilon, double t);

std::complex<double> msa_mean_q(double omega, double epsilon, const NoiseSpec& noise, double t, InitialData ics);

/// <Q^2> for Q(0) = 1, Q'(0) = 0.
double msa_mean_q2(double omega, double epsilon, const NoiseSpec& noise, double t);

/// Exponential rate of 2<|beta|^2> + 1.
double stochastic_rate(double omega, double omega_z, double epsilon, const NoiseSpec& noise, OscillatorForm form);

double msa_stochastic_beta2(double omega, double omega_z, double epsilon, const NoiseSpec& noise, double t,
                            OscillatorForm form);

struct SlowFlowRates {
    int size = 0;
    std::vector<std::complex<double>> lambda;
    std::vector<double> gamma;
    std::vector<double> rho;  ///< rho[m * size + k]

    double rho_at(int m, int k) const { return rho[static_cast<std::size_t>(m * size + k)]; }
};

/// Throws DegenerateSpectrum when two retained frequencies agree to 1e-6 relative.
SlowFlowRates slow_flow_rates(const CavityConfig& cavity, const NoiseSpec& noise, RhoForm form = RhoForm::Rederived);

struct OccupationSolution {
    std::vector<double> t;
    std::vector<std::vector<double>> T;  ///< T[i][k] at t[i]
    std::vector<double> beta2_total;     ///< sum_k <|beta_nk|^2>
    bool negative_total = false;
};

/**
 * @brief Integrate T_k' + gamma_k T_k + sum_m rho_mk T_m = 0 in tau = eps^2 t.
 *
 * RK4 with about 1e4 steps over the grid; grid points are hit exactly.
 */
OccupationSolution solve_occupations(const SlowFlowRates& rates, const CavityConfig& cavity, ModeIndex n,
                                     std::span<const double> t_grid);

/// <N>(t) summed over the given in-modes.
std::vector<double> mean_particle_number(const SlowFlowRates& rates, const CavityConfig& cavity,
                                         std::span<const int> in_modes, std::span<const double> t_grid);

/// 1/2 (exp((k^2 + M^2) Re S(2 sqrt(k^2 + M^2)) eps^2 eta) - 1).
double cosmo_beta2(double k, double M, double epsilon, const NoiseSpec& noise, double eta);

} // namespace spc::msa
