#include "spc/noise.hpp"

#include "spc/errors.hpp"
#include "spc/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

namespace spc {

namespace {

constexpr double kPi = std::numbers::pi;

void require(bool ok, const std::string& message)
{
    if (!ok) {
        throw ConfigError("noise: " + message);
    }
}

// Gauss-Legendre nodes and weights on [-1, 1], 10 points.
constexpr std::array<double, 5> kGlNodes = {0.1488743389816312, 0.4333953941292472, 0.6794095682990244,
                                            0.8650633666889845, 0.9739065285171717};
constexpr std::array<double, 5> kGlWeights = {0.2955242247147529, 0.2692667193099963, 0.2190863625159820,
                                              0.1494513491505806, 0.0666713443086881};

template <class F>
double gauss_legendre(F&& f, double lo, double hi, int panels)
{
    const double width = (hi - lo) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double mid = lo + (p + 0.5) * width;
        const double half = 0.5 * width;
        double s = 0.0;
        for (std::size_t i = 0; i < kGlNodes.size(); ++i) {
            s += kGlWeights[i] * (f(mid - half * kGlNodes[i]) + f(mid + half * kGlNodes[i]));
        }
        total += s * half;
    }
    return total;
}

// Lorentzian band in angle coordinates: theta = atan(nu * t_c).
struct LorentzBand {
    double theta_lo;
    double theta_hi;
    double t_c;
};

LorentzBand lorentz_band(const NoiseSpec& spec)
{
    return {std::atan(spec.nu_min * spec.t_c), std::atan(spec.nu_max * spec.t_c), spec.t_c};
}

// Probability density of line frequencies, restricted to nu >= 0.
double line_density(const NoiseSpec& spec, double nu)
{
    if (nu < spec.nu_min || nu > spec.nu_max) {
        return 0.0;
    }
    if (spec.kind == NoiseKind::BandLimited) {
        return 1.0 / (spec.nu_max - spec.nu_min);
    }
    const LorentzBand band = lorentz_band(spec);
    return band.t_c / ((band.theta_hi - band.theta_lo) * (1.0 + nu * nu * band.t_c * band.t_c));
}

// log|(nu + x)/(nu - x)|
double log_ratio(double nu, double x)
{
    return std::log(std::abs((nu + x) / (nu - x)));
}

std::vector<SpectralLine> draw_lines(const NoiseSpec& spec, std::uint64_t seed)
{
    rng::Stream stream(seed);
    const int n = spec.n_components;
    const double amplitude = spec.sigma * std::sqrt(2.0 / n);
    std::vector<SpectralLine> lines(static_cast<std::size_t>(n));
    const LorentzBand band = lorentz_band(spec);
    for (int j = 0; j < n; ++j) {
        const double u = (j + stream.uniform()) / n;
        const double phase = 2.0 * kPi * stream.uniform();
        double nu = 0.0;
        if (spec.kind == NoiseKind::BandLimited) {
            nu = spec.nu_min + u * (spec.nu_max - spec.nu_min);
        } else {
            nu = std::tan(band.theta_lo + u * (band.theta_hi - band.theta_lo)) / band.t_c;
        }
        lines[static_cast<std::size_t>(j)] = {amplitude, nu, phase};
    }
    return lines;
}

UniformSpline draw_ou_path(const NoiseSpec& spec, std::uint64_t seed, double horizon)
{
    rng::Stream stream(seed);
    const double h = ou_grid_step(spec);
    const auto knots = static_cast<std::size_t>(std::ceil(horizon / h)) + 2;
    const double phi = std::exp(-h / spec.t_c);
    const double q = spec.sigma * std::sqrt(-std::expm1(-2.0 * h / spec.t_c));
    std::vector<double> y(knots);
    y[0] = spec.sigma * stream.normal();
    for (std::size_t i = 1; i < knots; ++i) {
        y[i] = phi * y[i - 1] + q * stream.normal();
    }
    return UniformSpline::natural(h, std::move(y));
}

} // namespace

std::string_view to_string(NoiseKind kind)
{
    switch (kind) {
    case NoiseKind::OrnsteinUhlenbeck:
        return "OrnsteinUhlenbeck";
    case NoiseKind::BandLimited:
        return "BandLimited";
    case NoiseKind::SpectralLines:
        return "SpectralLines";
    case NoiseKind::DeterministicSinusoid:
        return "DeterministicSinusoid";
    }
    return "unknown";
}

NoiseKind noise_kind_from_string(std::string_view name)
{
    for (auto kind : {NoiseKind::OrnsteinUhlenbeck, NoiseKind::BandLimited, NoiseKind::SpectralLines,
                      NoiseKind::DeterministicSinusoid}) {
        if (name == to_string(kind)) {
            return kind;
        }
    }
    throw ConfigError("noise: unknown kind '" + std::string(name) + "'");
}

void validate(const NoiseSpec& spec)
{
    require(std::isfinite(spec.sigma) && spec.sigma >= 0.0, "sigma must be finite and >= 0");
    switch (spec.kind) {
    case NoiseKind::OrnsteinUhlenbeck:
        require(std::isfinite(spec.t_c) && spec.t_c > 0.0, "t_c must be > 0");
        break;
    case NoiseKind::SpectralLines:
        require(std::isfinite(spec.t_c) && spec.t_c > 0.0, "t_c must be > 0");
        [[fallthrough]];
    case NoiseKind::BandLimited:
        require(std::isfinite(spec.nu_max) && spec.nu_min >= 0.0 && spec.nu_min < spec.nu_max,
                "band must satisfy 0 <= nu_min < nu_max");
        require(spec.n_components >= 1, "n_components must be >= 1");
        break;
    case NoiseKind::DeterministicSinusoid:
        require(std::isfinite(spec.omega_drive) && spec.omega_drive >= 0.0, "omega_drive must be >= 0");
        break;
    }
}

bool is_stochastic(const NoiseSpec& spec) noexcept
{
    return spec.kind != NoiseKind::DeterministicSinusoid;
}

bool has_smooth_paths(const NoiseSpec& spec) noexcept
{
    return spec.kind != NoiseKind::OrnsteinUhlenbeck || spec.sigma == 0.0;
}

double ou_grid_step(const NoiseSpec& spec)
{
    return spec.t_c / 50.0;
}

double correlation(const NoiseSpec& spec, double u)
{
    validate(spec);
    if (!is_stochastic(spec)) {
        throw NotAStochasticProcess();
    }
    const double s2 = spec.sigma * spec.sigma;
    const double a = std::abs(u);
    switch (spec.kind) {
    case NoiseKind::OrnsteinUhlenbeck:
        return s2 * std::exp(-a / spec.t_c);
    case NoiseKind::BandLimited: {
        const double width = spec.nu_max - spec.nu_min;
        if (a * spec.nu_max < 1e-8) {
            const double m2 = (spec.nu_max * spec.nu_max + spec.nu_max * spec.nu_min + spec.nu_min * spec.nu_min) / 3.0;
            return s2 * (1.0 - 0.5 * m2 * a * a);
        }
        return s2 * (std::sin(spec.nu_max * a) - std::sin(spec.nu_min * a)) / (width * a);
    }
    case NoiseKind::SpectralLines: {
        const LorentzBand band = lorentz_band(spec);
        const double span = band.theta_hi - band.theta_lo;
        const int panels = 4 + static_cast<int>(std::ceil(2.0 * (spec.nu_max - spec.nu_min) * a / kPi));
        const double integral = gauss_legendre(
            [&](double theta) { return std::cos(a * std::tan(theta) / band.t_c); }, band.theta_lo, band.theta_hi,
            panels);
        return s2 * integral / span;
    }
    case NoiseKind::DeterministicSinusoid:
        break;
    }
    throw NotAStochasticProcess();
}

std::complex<double> spectrum(const NoiseSpec& spec, double nu)
{
    validate(spec);
    if (!is_stochastic(spec)) {
        throw NotAStochasticProcess();
    }
    if (!(nu >= 0.0)) {
        throw std::domain_error("spectrum: nu must be >= 0");
    }
    const double s2 = spec.sigma * spec.sigma;
    if (s2 == 0.0) {
        return {0.0, 0.0};
    }
    switch (spec.kind) {
    case NoiseKind::OrnsteinUhlenbeck: {
        const double x = nu * spec.t_c;
        const double den = 1.0 + x * x;
        return {s2 * spec.t_c / den, s2 * spec.t_c * x / den};
    }
    case NoiseKind::BandLimited: {
        const double re = 0.5 * kPi * s2 * line_density(spec, nu);
        const double im = nu == 0.0 ? 0.0
                                    : s2 / (2.0 * (spec.nu_max - spec.nu_min)) *
                                          (log_ratio(nu, spec.nu_max) - log_ratio(nu, spec.nu_min));
        return {re, im};
    }
    case NoiseKind::SpectralLines: {
        const LorentzBand band = lorentz_band(spec);
        const double re = 0.5 * kPi * s2 * line_density(spec, nu);
        if (nu == 0.0) {
            return {re, 0.0};
        }
        // PV int p(x) nu/(nu^2 - x^2) dx after partial fractions.
        const double t = band.t_c;
        const double norm = t / (band.theta_hi - band.theta_lo);
        const double pv = nu / (1.0 + t * t * nu * nu) *
                          (t * (band.theta_hi - band.theta_lo) +
                           (log_ratio(nu, spec.nu_max) - log_ratio(nu, spec.nu_min)) / (2.0 * nu));
        return {re, s2 * norm * pv};
    }
    case NoiseKind::DeterministicSinusoid:
        break;
    }
    throw NotAStochasticProcess();
}

Spectrum::Spectrum(NoiseSpec spec) : spec_(spec)
{
    validate(spec_);
    if (!is_stochastic(spec_)) {
        throw NotAStochasticProcess();
    }
}

std::complex<double> Spectrum::operator()(double nu) const
{
    return nu >= 0.0 ? spectrum(spec_, nu) : std::conj(spectrum(spec_, -nu));
}

UniformSpline UniformSpline::natural(double step, std::vector<double> values)
{
    const std::size_t n = values.size();
    if (n < 2 || !(step > 0.0)) {
        throw std::invalid_argument("spline: need >= 2 knots and a positive step");
    }
    std::vector<double> m(n, 0.0);
    if (n > 2) {
        // Thomas algorithm for m[i-1] + 4 m[i] + m[i+1] = rhs[i], natural ends.
        const std::size_t inner = n - 2;
        std::vector<double> c(inner);
        std::vector<double> d(inner);
        const double scale = 6.0 / (step * step);
        for (std::size_t k = 0; k < inner; ++k) {
            const std::size_t i = k + 1;
            const double rhs = scale * (values[i + 1] - 2.0 * values[i] + values[i - 1]);
            if (k == 0) {
                c[k] = 0.25;
                d[k] = rhs / 4.0;
            } else {
                const double denom = 4.0 - c[k - 1];
                c[k] = 1.0 / denom;
                d[k] = (rhs - d[k - 1]) / denom;
            }
        }
        m[inner] = d[inner - 1];
        for (std::size_t k = inner - 1; k-- > 0;) {
            m[k + 1] = d[k] - c[k] * m[k + 2];
        }
    }
    return UniformSpline{step, std::move(values), std::move(m)};
}

double UniformSpline::eval(double t, int order) const
{
    const double x = t / step;
    const std::size_t last = values.size() - 2;
    auto i = static_cast<std::size_t>(std::max(0.0, std::floor(x)));
    i = std::min(i, last);
    const double s = x - static_cast<double>(i);
    const double a = 1.0 - s;
    const double y0 = values[i];
    const double y1 = values[i + 1];
    const double m0 = second[i];
    const double m1 = second[i + 1];
    switch (order) {
    case 0:
        return a * y0 + s * y1 + step * step / 6.0 * ((a * a * a - a) * m0 + (s * s * s - s) * m1);
    case 1:
        return (y1 - y0) / step + step / 6.0 * (-(3.0 * a * a - 1.0) * m0 + (3.0 * s * s - 1.0) * m1);
    case 2:
        return a * m0 + s * m1;
    default:
        throw std::invalid_argument("spline: derivative order must be 0, 1 or 2");
    }
}

NoiseRealization::NoiseRealization(NoiseSpec spec, std::uint64_t seed, double horizon, Data data)
    : spec_(spec), seed_(seed), horizon_(horizon), data_(std::move(data))
{
}

std::span<const SpectralLine> NoiseRealization::components() const noexcept
{
    if (const auto* lines = std::get_if<Lines>(&data_)) {
        return lines->lines;
    }
    return {};
}

double NoiseRealization::eval(double t, int order) const
{
    if (order < 0 || order > 2) {
        throw std::invalid_argument("eval: order must be 0, 1 or 2");
    }
    const double slack = 1e-9 * std::max(1.0, horizon_);
    if (!(t >= -slack && t <= horizon_ + slack)) {
        throw OutOfRange("eval: t = " + std::to_string(t) + " outside [0, " + std::to_string(horizon_) + "]");
    }
    return std::visit(
        [&](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Zero>) {
                return 0.0;
            } else if constexpr (std::is_same_v<T, Sinusoid>) {
                const double w = d.omega;
                switch (order) {
                case 0:
                    return std::sin(w * t);
                case 1:
                    return w * std::cos(w * t);
                default:
                    return -w * w * std::sin(w * t);
                }
            } else if constexpr (std::is_same_v<T, Lines>) {
                double sum = 0.0;
                for (const auto& line : d.lines) {
                    const double arg = line.frequency * t + line.phase;
                    switch (order) {
                    case 0:
                        sum += line.amplitude * std::cos(arg);
                        break;
                    case 1:
                        sum -= line.amplitude * line.frequency * std::sin(arg);
                        break;
                    default:
                        sum -= line.amplitude * line.frequency * line.frequency * std::cos(arg);
                        break;
                    }
                }
                return sum;
            } else {
                return d.spline.eval(t, order);
            }
        },
        data_);
}

NoiseRealization synthesize(const NoiseSpec& spec, std::uint64_t seed, double horizon)
{
    validate(spec);
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw ConfigError("noise: horizon must be > 0");
    }
    if (spec.kind == NoiseKind::DeterministicSinusoid) {
        return {spec, seed, horizon, NoiseRealization::Sinusoid{spec.omega_drive}};
    }
    if (spec.sigma == 0.0) {
        return {spec, seed, horizon, NoiseRealization::Zero{}};
    }
    if (spec.kind == NoiseKind::OrnsteinUhlenbeck) {
        return {spec, seed, horizon, NoiseRealization::Path{draw_ou_path(spec, seed, horizon)}};
    }
    return {spec, seed, horizon, NoiseRealization::Lines{draw_lines(spec, seed)}};
}

NoiseSamples tabulate(const NoiseRealization& real, double spacing, std::size_t count, int max_order)
{
    NoiseSamples out;
    out.spacing = spacing;
    out.xi.assign(count, 0.0);
    out.dxi.assign(max_order >= 1 ? count : 0, 0.0);
    out.ddxi.assign(max_order >= 2 ? count : 0, 0.0);
    if (count == 0) {
        return out;
    }
    const double t_last = spacing * static_cast<double>(count - 1);
    if (t_last > real.horizon() * (1.0 + 1e-12) + 1e-12) {
        throw OutOfRange("tabulate: grid extends beyond the realization horizon");
    }

    if (const auto* lines = std::get_if<NoiseRealization::Lines>(&real.data())) {
        const std::size_t n = lines->lines.size();
        std::vector<double> zr(n);
        std::vector<double> zi(n);
        std::vector<double> rr(n);
        std::vector<double> ri(n);
        std::vector<double> a0(n);
        std::vector<double> a1(n);
        std::vector<double> a2(n);
        for (std::size_t j = 0; j < n; ++j) {
            const auto& line = lines->lines[j];
            rr[j] = std::cos(line.frequency * spacing);
            ri[j] = std::sin(line.frequency * spacing);
            a0[j] = line.amplitude;
            a1[j] = -line.amplitude * line.frequency;
            a2[j] = -line.amplitude * line.frequency * line.frequency;
        }
        constexpr std::size_t kReanchor = 256;
        for (std::size_t i = 0; i < count; ++i) {
            if (i % kReanchor == 0) {
                const double t = spacing * static_cast<double>(i);
                for (std::size_t j = 0; j < n; ++j) {
                    const double arg = lines->lines[j].frequency * t + lines->lines[j].phase;
                    zr[j] = std::cos(arg);
                    zi[j] = std::sin(arg);
                }
            }
            double x0 = 0.0;
            double x1 = 0.0;
            double x2 = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                x0 += a0[j] * zr[j];
                x1 += a1[j] * zi[j];
                x2 += a2[j] * zr[j];
                const double nr = zr[j] * rr[j] - zi[j] * ri[j];
                const double ni = zr[j] * ri[j] + zi[j] * rr[j];
                zr[j] = nr;
                zi[j] = ni;
            }
            out.xi[i] = x0;
            if (max_order >= 1) {
                out.dxi[i] = x1;
            }
            if (max_order >= 2) {
                out.ddxi[i] = x2;
            }
        }
        return out;
    }
    if (std::holds_alternative<NoiseRealization::Zero>(real.data())) {
        return out;
    }
    if (const auto* path = std::get_if<NoiseRealization::Path>(&real.data())) {
        const UniformSpline& sp = path->spline;
        for (std::size_t i = 0; i < count; ++i) {
            const double t = std::min(spacing * static_cast<double>(i), real.horizon());
            out.xi[i] = sp.eval(t, 0);
            if (max_order >= 1) {
                out.dxi[i] = sp.eval(t, 1);
            }
            if (max_order >= 2) {
                out.ddxi[i] = sp.eval(t, 2);
            }
        }
        return out;
    }
    for (std::size_t i = 0; i < count; ++i) {
        const double t = std::min(spacing * static_cast<double>(i), real.horizon());
        out.xi[i] = real.eval(t, 0);
        if (max_order >= 1) {
            out.dxi[i] = real.eval(t, 1);
        }
        if (max_order >= 2) {
            out.ddxi[i] = real.eval(t, 2);
        }
    }
    return out;
}

} // namespace spc
