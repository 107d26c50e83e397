#pragma once

#include "spc/config.hpp"
#include "spc/ensemble.hpp"
#include "spc/mode_dynamics.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace spc::io {

inline constexpr const char* kSeriesHeader = "t,quantity,mode,mean,stderr";
inline constexpr const char* kPredictionHeader = "t,quantity,mode,value";
inline constexpr const char* kNoiseHeader = "t,xi,dxi,ddxi";

/// 17 significant digits; round-trips every finite double.
std::string format_double(double x);

struct SeriesRow {
    double t = 0.0;
    std::string quantity;
    std::string mode;
    double mean = 0.0;
    std::optional<double> standard_error;
};

struct PredictionRow {
    double t = 0.0;
    std::string quantity;
    std::string mode;
    double value = 0.0;
};

std::vector<SeriesRow> series_rows(const EnsembleStats& stats);

void write_series(std::ostream& out, const std::vector<SeriesRow>& rows);
void write_predictions(std::ostream& out, const std::vector<PredictionRow>& rows);

/// Throws std::runtime_error on a missing file, a wrong header or a malformed row.
std::vector<SeriesRow> read_series(const std::filesystem::path& path);
std::vector<PredictionRow> read_predictions(const std::filesystem::path& path);

struct SummaryExtras {
    std::vector<std::string> warnings;
    bool invariants_ok = true;
};

/// summary.json: config echo, seeds, per-probe statistics, invariants, aborts.
std::string summary_json(const RunConfig& config, const EnsembleStats& stats, const SummaryExtras& extras);

/// t, then Re/Im of Q and Qdot for every block and mode, every record.
void write_trajectory(std::ostream& out, const Trajectory& trajectory);

/// alpha and beta matrices with the seed they came from.
std::string bogoliubov_json(const BogoliubovRecord& record, std::uint64_t seed);

/// Derivative cells are empty where the table holds no derivatives.
void write_noise(std::ostream& out, const NoiseSamples& samples);

} // namespace spc::io
