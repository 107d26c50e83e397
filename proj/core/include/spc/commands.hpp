#pragma once

#include "spc/config.hpp"
#include "spc/io.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace spc {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int failed = 1;  ///< comparison failure or invariant violation
inline constexpr int usage = 2;   ///< usage, config or schema error
} // namespace exit_code

struct CommandOptions {
    std::filesystem::path config;
    std::filesystem::path out = ".";
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    bool quiet = false;
    bool dump_trajectory = false;  ///< simulate: trajectory.csv and bogoliubov.json for realization 0
    std::size_t samples = 1001;    ///< noise-dump grid points over [0, last probe]
};

/// Load the config and apply the --seed and --workers overrides.
RunConfig resolve_config(const CommandOptions& options);

/// series.csv and summary.json in options.out.
int cmd_simulate(const CommandOptions& options, std::ostream& log);

/// prediction.csv in options.out, on the probe grid simulate would use.
int cmd_predict(const CommandOptions& options, std::ostream& log);

/// Mode table of the configured cavity family.
int cmd_spectrum(const CommandOptions& options, std::ostream& out, std::ostream& log);

/// One realization (realization 0 of the configured master seed) as t, xi, dxi, ddxi.
int cmd_noise_dump(const CommandOptions& options, std::ostream& out, std::ostream& log);

/// Closed-form predictions for a resolved config on its snapped probe grid.
std::vector<io::PredictionRow> predictions(const RunConfig& config, std::vector<std::string>* warnings = nullptr);

struct PointResult {
    double t = 0.0;
    std::string quantity;
    std::string mode;
    double simulated = 0.0;
    double predicted = 0.0;
    double standard_error = 0.0;
    double allowed = 0.0;
    bool pass = false;
};

/**
 * @brief Wald-Wolfowitz runs test on the signs of decisive deviations.
 *
 * Only points with |deviation| > allowed / 2 enter, ordered by
 * (quantity, mode, t). With at least 10 of them the pattern is flagged
 * as systematic when z < -3 or when every sign agrees.
 */
struct RunsTest {
    std::size_t considered = 0;
    std::size_t positive = 0;
    std::size_t runs = 0;
    double z = 0.0;
    bool systematic = false;
};

struct CompareReport {
    std::vector<PointResult> points;
    std::size_t passed = 0;
    double pass_fraction = 0.0;
    std::size_t unmatched_simulated = 0;
    std::size_t unmatched_predicted = 0;
    RunsTest runs;
    bool ok = false;
};

/// Join on (t, quantity, mode) with t matched to 1e-9 relative; throws std::runtime_error if nothing joins.
CompareReport compare(const std::vector<io::SeriesRow>& simulated, const std::vector<io::PredictionRow>& predicted,
                      const ComparePolicy& policy);

struct CompareOptions {
    std::filesystem::path simulated;
    std::filesystem::path predicted;
    std::optional<std::filesystem::path> config;  ///< source of the default policy
    std::optional<double> k_sigma;
    std::optional<double> rel_tol;
    std::optional<double> abs_tol;
    bool quiet = false;
};

int cmd_compare(const CompareOptions& options, std::ostream& out, std::ostream& log);

} // namespace spc
