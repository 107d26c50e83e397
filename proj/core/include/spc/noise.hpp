#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace spc {

enum class NoiseKind { OrnsteinUhlenbeck, BandLimited, SpectralLines, DeterministicSinusoid };

std::string_view to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(std::string_view name);

/**
 * @brief Stationary zero-mean noise process.
 *
 * OrnsteinUhlenbeck: R(u) = sigma^2 exp(-|u|/t_c).
 * BandLimited: flat power spectral density on [nu_min, nu_max].
 * SpectralLines: Lorentzian density 1/(1 + nu^2 t_c^2) truncated to
 *   [nu_min, nu_max]; the band-limited counterpart of OU.
 * DeterministicSinusoid: xi(t) = sin(omega_drive t).
 */
struct NoiseSpec {
    NoiseKind kind = NoiseKind::OrnsteinUhlenbeck;
    double sigma = 1.0;
    double t_c = 1.0;
    double nu_min = 0.0;
    double nu_max = 0.0;
    int n_components = 256;
    double omega_drive = 0.0;

    bool operator==(const NoiseSpec&) const = default;
};

/// Throws ConfigError if a field used by @p spec.kind is out of range.
void validate(const NoiseSpec& spec);

bool is_stochastic(const NoiseSpec& spec) noexcept;

/// True when synthesized paths are C-infinity, so xi-dot and xi-ddot are faithful.
bool has_smooth_paths(const NoiseSpec& spec) noexcept;

/// Grid step of the exact OU discretization.
double ou_grid_step(const NoiseSpec& spec);

/// R(u) of the target process.
double correlation(const NoiseSpec& spec, double u);

/// One-sided transform S(nu) = int_0^inf R(u) e^{i nu u} du for nu >= 0.
std::complex<double> spectrum(const NoiseSpec& spec, double nu);

/// S(nu) for any real nu, using S(-nu) = conj(S(nu)).
class Spectrum {
public:
    explicit Spectrum(NoiseSpec spec);

    std::complex<double> operator()(double nu) const;
    double re(double nu) const { return (*this)(nu).real(); }
    double im(double nu) const { return (*this)(nu).imag(); }
    const NoiseSpec& spec() const noexcept { return spec_; }

private:
    NoiseSpec spec_;
};

struct SpectralLine {
    double amplitude;
    double frequency;
    double phase;
};

/// Natural cubic spline on a uniform grid starting at t = 0.
struct UniformSpline {
    double step = 0.0;
    std::vector<double> values;
    std::vector<double> second;  ///< second derivatives at the knots

    static UniformSpline natural(double step, std::vector<double> values);
    double eval(double t, int order) const;
};

/**
 * @brief One sampled path of a NoiseSpec.
 *
 * Immutable once built; safe to share across threads.
 */
class NoiseRealization {
public:
    struct Zero {};
    struct Lines {
        std::vector<SpectralLine> lines;
    };
    struct Sinusoid {
        double omega;
    };
    struct Path {
        UniformSpline spline;
    };
    using Data = std::variant<Zero, Lines, Sinusoid, Path>;

    NoiseRealization(NoiseSpec spec, std::uint64_t seed, double horizon, Data data);

    const NoiseSpec& spec() const noexcept { return spec_; }
    std::uint64_t seed() const noexcept { return seed_; }
    double horizon() const noexcept { return horizon_; }
    const Data& data() const noexcept { return data_; }

    /// Spectral components, empty unless the path is a sum of lines.
    std::span<const SpectralLine> components() const noexcept;

    /// xi (order 0), xi-dot (1) or xi-ddot (2) at @p t in [0, horizon].
    double eval(double t, int order) const;

private:
    NoiseSpec spec_;
    std::uint64_t seed_;
    double horizon_;
    Data data_;
};

NoiseRealization synthesize(const NoiseSpec& spec, std::uint64_t seed, double horizon);

inline double eval(const NoiseRealization& real, double t, int order) { return real.eval(t, order); }

/// xi and its derivatives at t_i = i * spacing, i < count.
struct NoiseSamples {
    double spacing = 0.0;
    std::vector<double> xi;
    std::vector<double> dxi;
    std::vector<double> ddxi;
};

/**
 * @brief Evaluate a realization on a uniform grid.
 *
 * Spectral sums are advanced by phasor rotation and re-anchored exactly
 * every 256 samples. Derivative tables above @p max_order are empty.
 */
NoiseSamples tabulate(const NoiseRealization& real, double spacing, std::size_t count, int max_order = 2);

} // namespace spc
