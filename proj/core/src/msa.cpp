#include "spc/msa.hpp"

#include "spc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace spc::msa {

namespace {

void check_epsilon(double epsilon)
{
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
        throw ConfigError("epsilon must be finite and >= 0");
    }
}

void check_omega(double omega)
{
    if (!(omega > 0.0) || !std::isfinite(omega)) {
        throw ConfigError("omega must be finite and > 0");
    }
}

// T' = A T with A_km = -gamma_k delta_km - rho_mk.
void slow_derivative(const SlowFlowRates& r, const std::vector<double>& T, std::vector<double>& out)
{
    const int n = r.size;
    for (int k = 0; k < n; ++k) {
        double acc = -r.gamma[static_cast<std::size_t>(k)] * T[static_cast<std::size_t>(k)];
        for (int m = 0; m < n; ++m) {
            acc -= r.rho_at(m, k) * T[static_cast<std::size_t>(m)];
        }
        out[static_cast<std::size_t>(k)] = acc;
    }
}

} // namespace

std::string_view to_string(RhoForm form)
{
    return form == RhoForm::Rederived ? "Rederived" : "Displayed";
}

RhoForm rho_form_from_string(std::string_view name)
{
    if (name == "Rederived") {
        return RhoForm::Rederived;
    }
    if (name == "Displayed") {
        return RhoForm::Displayed;
    }
    throw ConfigError("unknown rho form '" + std::string(name) + "'");
}

PerturbativeEstimate perturbative_beta2(const CavityConfig& cavity, const NoiseSpec& noise, ModeIndex n, ModeIndex k,
                                        double T)
{
    validate(cavity);
    const Spectrum S(noise);
    if (!(T >= 0.0)) {
        throw std::invalid_argument("perturbative_beta2: T must be >= 0");
    }
    const double wn = omega(cavity, n);
    const double wk = omega(cavity, k);
    const double vnk = v(cavity, n, k);
    const double eps = cavity.epsilon;
    PerturbativeEstimate out;
    out.value = 2.0 * eps * eps * T * vnk * vnk * S.re(wn + wk);
    out.omega_t = std::min(wn, wk) * T;
    out.validity = eps * eps * std::max(wn, wk) * T;
    out.long_time = out.omega_t >= 10.0;
    out.perturbative = out.validity <= 1.0;
    return out;
}

std::vector<double> perturbative_occupation(const CavityConfig& cavity, const NoiseSpec& noise, double T)
{
    std::vector<double> occupation(static_cast<std::size_t>(cavity.nz_max), 0.0);
    for (int k = 1; k <= cavity.nz_max; ++k) {
        for (int n = 1; n <= cavity.nz_max; ++n) {
            occupation[static_cast<std::size_t>(k - 1)] += perturbative_beta2(cavity, noise, {n}, {k}, T).value;
        }
    }
    return occupation;
}

double deterministic_beta2(const CavityConfig& cavity, double Omega, ModeIndex n, ModeIndex k, double T,
                           double rel_window)
{
    validate(cavity);
    const double resonance = omega(cavity, n) + omega(cavity, k);
    if (std::abs(Omega - resonance) > rel_window * resonance) {
        return 0.0;
    }
    const double eps = cavity.epsilon;
    const double vnk = v(cavity, n, k);
    return 0.25 * eps * eps * vnk * vnk * T * T;
}

double msa_deterministic_beta2(double omega, double epsilon, double t)
{
    const double s = std::sinh(omega * epsilon * t / 4.0);
    return s * s;
}

std::complex<double> msa_mean_q(double omega, double epsilon, const NoiseSpec& noise, double t, InitialData ics)
{
    check_omega(omega);
    check_epsilon(epsilon);
    const Spectrum S(noise);
    const std::complex<double> s2w = S(2.0 * omega);
    const double s0 = S(0.0).real();
    const double e2 = epsilon * epsilon;
    const double rate = 0.25 * omega * omega * (s2w.real() - s0) * e2;
    const double shifted = omega - 0.25 * omega * omega * e2 * s2w.imag();
    if (ics == InitialData::PositionKick) {
        return {std::exp(rate * t) * std::cos(shifted * t), 0.0};
    }
    return std::polar(std::exp(rate * t), -shifted * t) / std::sqrt(2.0 * omega);
}

double msa_mean_q2(double omega, double epsilon, const NoiseSpec& noise, double t)
{
    check_omega(omega);
    check_epsilon(epsilon);
    const Spectrum S(noise);
    const std::complex<double> s2w = S(2.0 * omega);
    const double s0 = S(0.0).real();
    const double w2e2 = omega * omega * epsilon * epsilon;
    const double oscillating =
        0.5 * std::exp(0.5 * w2e2 * (s2w.real() - 2.0 * s0) * t) * std::cos((2.0 * omega - 0.5 * w2e2 * s2w.imag()) * t);
    return oscillating + 0.5 * std::exp(w2e2 * s2w.real() * t);
}

double stochastic_rate(double omega, double omega_z, double epsilon, const NoiseSpec& noise, OscillatorForm form)
{
    check_omega(omega);
    check_epsilon(epsilon);
    const Spectrum S(noise);
    const double res = S.re(2.0 * omega);
    const double e2 = epsilon * epsilon;
    if (form == OscillatorForm::Plain) {
        return omega * omega * res * e2;
    }
    const double z2 = omega_z * omega_z;
    return 4.0 * z2 * z2 / (omega * omega) * res * e2;
}

double msa_stochastic_beta2(double omega, double omega_z, double epsilon, const NoiseSpec& noise, double t,
                            OscillatorForm form)
{
    return 0.5 * std::expm1(stochastic_rate(omega, omega_z, epsilon, noise, form) * t);
}

SlowFlowRates slow_flow_rates(const CavityConfig& cavity, const NoiseSpec& noise, RhoForm form)
{
    validate(cavity);
    const Spectrum S(noise);
    if (cavity.nz_max > 1 && min_relative_gap(cavity) < 1e-6) {
        throw DegenerateSpectrum("retained mode frequencies are degenerate to 1e-6");
    }
    const CavityTables tab(cavity);
    const int n = tab.size;
    SlowFlowRates r;
    r.size = n;
    r.lambda.assign(static_cast<std::size_t>(n), 0.0);
    r.gamma.assign(static_cast<std::size_t>(n), 0.0);
    r.rho.assign(static_cast<std::size_t>(n * n), 0.0);
    const std::complex<double> s0 = S(0.0);
    for (int k = 0; k < n; ++k) {
        const double wk = tab.omega[static_cast<std::size_t>(k)];
        const double wz2 = tab.omega_z[static_cast<std::size_t>(k)] * tab.omega_z[static_cast<std::size_t>(k)];
        const double diag = wz2 * wz2 / (wk * wk);
        std::complex<double> lambda = diag * (s0 - S(2.0 * wk));
        double gamma = -4.0 * diag * S.re(2.0 * wk);
        for (int m = 0; m < n; ++m) {
            if (m == k) {
                continue;
            }
            const double wm = tab.omega[static_cast<std::size_t>(m)];
            const double g2 = tab.g(k, m) * tab.g(k, m);
            const double d2 = (wk * wk - wm * wm) * (wk * wk - wm * wm);
            const std::complex<double> sp = S(wk + wm);
            const std::complex<double> sm = S(wk - wm);
            lambda -= g2 / (4.0 * wk * wm) * d2 * (sp - sm);
            gamma -= g2 / (2.0 * wk * wm) * d2 * (sp.real() - sm.real());
            double rho = 0.0;
            if (form == RhoForm::Rederived) {
                rho = -g2 * d2 / (2.0 * wk * wk) * (sp.real() + sm.real());
            } else {
                const double minus = (wm * wm - 2.0 * wm * wk - wk * wk) * (wm - wk) * (wm - wk) * S.re(wm - wk);
                const double plus = (wm * wm + 2.0 * wm * wk - wk * wk) * (wm + wk) * (wm + wk) * S.re(wm + wk);
                rho = -g2 / (2.0 * wk * wk) * (minus + plus);
            }
            r.rho[static_cast<std::size_t>(m * n + k)] = rho;
        }
        r.lambda[static_cast<std::size_t>(k)] = lambda;
        r.gamma[static_cast<std::size_t>(k)] = gamma;
    }
    return r;
}

OccupationSolution solve_occupations(const SlowFlowRates& rates, const CavityConfig& cavity, ModeIndex n,
                                     std::span<const double> t_grid)
{
    validate(cavity);
    if (rates.size != cavity.nz_max) {
        throw std::invalid_argument("solve_occupations: rates do not match the cavity family");
    }
    if (n.nz < 1 || n.nz > cavity.nz_max) {
        throw std::out_of_range("solve_occupations: in-mode outside the family");
    }
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (!(t_grid[i] >= 0.0) || (i > 0 && t_grid[i] < t_grid[i - 1])) {
            throw std::invalid_argument("solve_occupations: t_grid must be nonnegative and nondecreasing");
        }
    }
    const CavityTables tab(cavity);
    const auto size = static_cast<std::size_t>(rates.size);
    std::vector<double> T(size, 0.0);
    T[static_cast<std::size_t>(n.nz - 1)] = 1.0 / (2.0 * tab.omega[static_cast<std::size_t>(n.nz - 1)]);

    const double e2 = cavity.epsilon * cavity.epsilon;
    const double tau_end = t_grid.empty() ? 0.0 : e2 * t_grid.back();
    const double nominal = tau_end > 0.0 ? tau_end / 1e4 : 1.0;

    OccupationSolution out;
    std::vector<double> k1(size), k2(size), k3(size), k4(size), tmp(size);
    double tau = 0.0;
    for (double t : t_grid) {
        const double target = e2 * t;
        const double span = target - tau;
        if (span > 0.0) {
            const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(span / nominal - 1e-9)));
            const double h = span / static_cast<double>(steps);
            for (std::size_t s = 0; s < steps; ++s) {
                slow_derivative(rates, T, k1);
                for (std::size_t j = 0; j < size; ++j) tmp[j] = T[j] + 0.5 * h * k1[j];
                slow_derivative(rates, tmp, k2);
                for (std::size_t j = 0; j < size; ++j) tmp[j] = T[j] + 0.5 * h * k2[j];
                slow_derivative(rates, tmp, k3);
                for (std::size_t j = 0; j < size; ++j) tmp[j] = T[j] + h * k3[j];
                slow_derivative(rates, tmp, k4);
                for (std::size_t j = 0; j < size; ++j) {
                    T[j] += h / 6.0 * (k1[j] + 2.0 * (k2[j] + k3[j]) + k4[j]);
                }
            }
            tau = target;
        }
        double total = 0.0;
        for (std::size_t j = 0; j < size; ++j) {
            total += 2.0 * tab.omega[j] * T[j];
        }
        const double beta2 = 0.5 * (total - 1.0);
        if (beta2 < -1e-12) {
            out.negative_total = true;
        }
        out.t.push_back(t);
        out.T.push_back(T);
        out.beta2_total.push_back(beta2);
    }
    return out;
}

std::vector<double> mean_particle_number(const SlowFlowRates& rates, const CavityConfig& cavity,
                                         std::span<const int> in_modes, std::span<const double> t_grid)
{
    std::vector<double> total(t_grid.size(), 0.0);
    for (int n : in_modes) {
        const OccupationSolution sol = solve_occupations(rates, cavity, {n}, t_grid);
        for (std::size_t i = 0; i < total.size(); ++i) {
            total[i] += sol.beta2_total[i];
        }
    }
    return total;
}

double cosmo_beta2(double k, double M, double epsilon, const NoiseSpec& noise, double eta)
{
    const double w = std::sqrt(k * k + M * M);
    return msa_stochastic_beta2(w, w, epsilon, noise, eta, OscillatorForm::Plain);
}

} // namespace spc::msa
