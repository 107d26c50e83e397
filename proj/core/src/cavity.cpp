#include "spc/cavity.hpp"

#include "spc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace spc {

namespace {

void check_mode(const CavityConfig& config, ModeIndex mode)
{
    if (mode.nz < 1 || mode.nz > config.nz_max) {
        throw std::out_of_range("mode nz = " + std::to_string(mode.nz) + " outside [1, " +
                                std::to_string(config.nz_max) + "]");
    }
}

} // namespace

void validate(const CavityConfig& config)
{
    auto positive = [](double x) { return std::isfinite(x) && x > 0.0; };
    if (!positive(config.Lx) || !positive(config.Ly) || !positive(config.Lz0)) {
        throw ConfigError("cavity: lengths must be finite and > 0");
    }
    if (!(config.epsilon >= 0.0 && config.epsilon < 1.0)) {
        throw ConfigError("cavity: epsilon must lie in [0, 1)");
    }
    if (config.kx < 1 || config.ky < 1) {
        throw ConfigError("cavity: kx and ky must be >= 1");
    }
    if (config.nz_max < 1) {
        throw ConfigError("cavity: nz_max must be >= 1");
    }
}

double omega_perp_squared(const CavityConfig& config)
{
    const double px = config.kx / config.Lx;
    const double py = config.ky / config.Ly;
    return std::numbers::pi * std::numbers::pi * (px * px + py * py);
}

double omega(const CavityConfig& config, ModeIndex mode)
{
    check_mode(config, mode);
    const double wz = omega_z(config, mode);
    return std::sqrt(omega_perp_squared(config) + wz * wz);
}

double omega_z(const CavityConfig& config, ModeIndex mode)
{
    check_mode(config, mode);
    return std::numbers::pi * mode.nz / config.Lz0;
}

double g(const CavityConfig& config, ModeIndex k, ModeIndex j)
{
    check_mode(config, k);
    check_mode(config, j);
    if (k.nz == j.nz) {
        return 0.0;
    }
    const double sign = ((k.nz + j.nz) % 2 == 0) ? 1.0 : -1.0;
    const double kz = k.nz;
    const double jz = j.nz;
    return sign * 2.0 * kz * jz / (jz * jz - kz * kz);
}

double v(const CavityConfig& config, ModeIndex n, ModeIndex k)
{
    const double wn = omega(config, n);
    const double wk = omega(config, k);
    double value = g(config, k, n) * (wn * wn - wk * wk) / (2.0 * std::sqrt(wk * wn));
    if (n.nz == k.nz) {
        const double wz = omega_z(config, k);
        value += wz * wz / wk;
    }
    return value;
}

CavityTables::CavityTables(const CavityConfig& config) : size(config.nz_max)
{
    validate(config);
    const auto n = static_cast<std::size_t>(size);
    omega.resize(n);
    omega_z.resize(n);
    coupling.assign(n * n, 0.0);
    for (int k = 0; k < size; ++k) {
        omega[static_cast<std::size_t>(k)] = spc::omega(config, {k + 1});
        omega_z[static_cast<std::size_t>(k)] = spc::omega_z(config, {k + 1});
        for (int j = 0; j < size; ++j) {
            coupling[static_cast<std::size_t>(k * size + j)] = spc::g(config, {k + 1}, {j + 1});
        }
    }
}

double min_relative_gap(const CavityConfig& config)
{
    const CavityTables tables(config);
    double gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i < tables.size; ++i) {
        for (int j = i + 1; j < tables.size; ++j) {
            const double a = tables.omega[static_cast<std::size_t>(i)];
            const double b = tables.omega[static_cast<std::size_t>(j)];
            gap = std::min(gap, std::abs(a - b) / std::max(a, b));
        }
    }
    return gap;
}

} // namespace spc
