#pragma once

#include <stdexcept>

namespace spc {

/// Invalid or inconsistent configuration. The CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Correlation or spectrum requested for a deterministic drive.
class NotAStochasticProcess : public std::logic_error {
public:
    NotAStochasticProcess() : std::logic_error("not-a-stochastic-process") {}
};

/// Time argument outside the synthesized horizon.
class OutOfRange : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// The coupled equations need xi-dot and xi-ddot but the noise kind is only piecewise smooth.
class UnsupportedDerivative : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// 1 + eps*xi(t) <= 0 on the exact path.
class GeometryCollapse : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bogoliubov extraction requested while the wall is still moving.
class ExtractionWindowError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// dt * max(omega) above the resolution guard.
class ResolutionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Two retained mode frequencies coincide; the coupled slow flow is undefined.
class DegenerateSpectrum : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

} // namespace spc
