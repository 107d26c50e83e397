#pragma once

#include <vector>

namespace spc {

/// Rectangular cavity with one moving wall at z = Lz0 (1 + epsilon xi(t)).
struct CavityConfig {
    double Lx = 1.0;
    double Ly = 1.0;
    double Lz0 = 1.0;
    double epsilon = 0.0;
    int kx = 1;
    int ky = 1;
    int nz_max = 1;

    bool operator==(const CavityConfig&) const = default;
};

/// z quantum number of a mode in the fixed (kx, ky) family.
struct ModeIndex {
    int nz;
};

/// Throws ConfigError on non-positive lengths, epsilon outside [0, 1) or bad indices.
void validate(const CavityConfig& config);

double omega(const CavityConfig& config, ModeIndex mode);
double omega_z(const CavityConfig& config, ModeIndex mode);

/// Transverse part of omega^2, shared by the whole family.
double omega_perp_squared(const CavityConfig& config);

/// Intermode coupling; antisymmetric, zero on the diagonal.
double g(const CavityConfig& config, ModeIndex k, ModeIndex j);

/// Perturbative coupling v_nk.
double v(const CavityConfig& config, ModeIndex n, ModeIndex k);

/**
 * @brief Precomputed tables for modes nz = 1..nz_max (index nz - 1).
 *
 * coupling is row-major, coupling[k * size + j] = g(k, j).
 */
struct CavityTables {
    int size = 0;
    std::vector<double> omega;
    std::vector<double> omega_z;
    std::vector<double> coupling;

    explicit CavityTables(const CavityConfig& config);
    double g(int k, int j) const { return coupling[static_cast<std::size_t>(k * size + j)]; }
};

/// Smallest relative gap |w_i - w_j| / max(w_i, w_j) among retained modes.
double min_relative_gap(const CavityConfig& config);

} // namespace spc
