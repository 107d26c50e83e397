#include "spc/io.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace spc::io {

using nlohmann::json;

namespace {

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

double parse_double(const std::string& text, const std::filesystem::path& path, std::size_t line)
{
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size()) {
        throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": not a number '" + text + "'");
    }
    return value;
}

std::vector<std::vector<std::string>> read_table(const std::filesystem::path& path, const std::string& header,
                                                 std::size_t columns)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || line != header) {
        throw std::runtime_error(path.string() + ": expected header '" + header + "'");
    }
    std::vector<std::vector<std::string>> rows;
    std::size_t number = 1;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty()) {
            continue;
        }
        auto cells = split(line);
        if (cells.size() != columns) {
            throw std::runtime_error(path.string() + ":" + std::to_string(number) + ": expected " +
                                     std::to_string(columns) + " columns");
        }
        rows.push_back(std::move(cells));
    }
    return rows;
}

json number_or_null(double x)
{
    return std::isfinite(x) ? json(x) : json(nullptr);
}

} // namespace

std::string format_double(double x)
{
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

std::vector<SeriesRow> series_rows(const EnsembleStats& stats)
{
    std::vector<SeriesRow> rows;
    for (std::size_t q = 0; q < stats.quantities.size(); ++q) {
        for (std::size_t p = 0; p < stats.probe_times.size(); ++p) {
            const ProbeStats& s = stats.stats[q][p];
            rows.push_back({stats.probe_times[p], stats.quantities[q].name, stats.quantities[q].mode, s.mean,
                            s.standard_error});
        }
    }
    return rows;
}

void write_series(std::ostream& out, const std::vector<SeriesRow>& rows)
{
    out << kSeriesHeader << '\n';
    for (const auto& r : rows) {
        out << format_double(r.t) << ',' << r.quantity << ',' << r.mode << ',' << format_double(r.mean) << ',';
        if (r.standard_error) {
            out << format_double(*r.standard_error);
        }
        out << '\n';
    }
}

void write_predictions(std::ostream& out, const std::vector<PredictionRow>& rows)
{
    out << kPredictionHeader << '\n';
    for (const auto& r : rows) {
        out << format_double(r.t) << ',' << r.quantity << ',' << r.mode << ',' << format_double(r.value) << '\n';
    }
}

std::vector<SeriesRow> read_series(const std::filesystem::path& path)
{
    std::vector<SeriesRow> out;
    std::size_t line = 1;
    for (const auto& c : read_table(path, kSeriesHeader, 5)) {
        ++line;
        SeriesRow r{parse_double(c[0], path, line), c[1], c[2], parse_double(c[3], path, line), std::nullopt};
        if (!c[4].empty()) {
            r.standard_error = parse_double(c[4], path, line);
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<PredictionRow> read_predictions(const std::filesystem::path& path)
{
    std::vector<PredictionRow> out;
    std::size_t line = 1;
    for (const auto& c : read_table(path, kPredictionHeader, 4)) {
        ++line;
        out.push_back({parse_double(c[0], path, line), c[1], c[2], parse_double(c[3], path, line)});
    }
    return out;
}

std::string summary_json(const RunConfig& config, const EnsembleStats& stats, const SummaryExtras& extras)
{
    json root;
    root["config"] = json::parse(config_to_json(config));
    root["seeds"] = stats.seeds;

    json st;
    st["n_requested"] = stats.n_requested;
    st["n_effective"] = stats.n_effective;
    st["dt_time"] = stats.plan.dt;
    st["ramp_time"] = stats.plan.ramp();
    st["probe_times_time"] = stats.probe_times;
    st["driven_times_time"] = stats.driven_times;
    json quantities = json::array();
    for (std::size_t q = 0; q < stats.quantities.size(); ++q) {
        json mean = json::array();
        json se = json::array();
        json max_abs = json::array();
        for (const auto& ps : stats.stats[q]) {
            mean.push_back(number_or_null(ps.mean));
            se.push_back(ps.standard_error ? number_or_null(*ps.standard_error) : json(nullptr));
            max_abs.push_back(number_or_null(ps.max_abs));
        }
        quantities.push_back({{"quantity", stats.quantities[q].name},
                              {"mode", stats.quantities[q].mode},
                              {"mean", mean},
                              {"stderr", se},
                              {"max_abs", max_abs}});
    }
    st["quantities"] = quantities;
    root["stats"] = st;

    json inv;
    inv["ok"] = extras.invariants_ok;
    inv["wronskian_tolerance"] = config.tolerances.wronskian;
    inv["sum_rule_tolerance"] = config.tolerances.sum_rule;
    inv["max_wronskian_deviation"] = stats.max_wronskian_deviation;
    inv["max_sum_rule_deviation"] = stats.max_sum_rule_deviation;
    json violations = json::array();
    for (const auto& v : stats.violations) {
        violations.push_back({{"realization", v.realization},
                              {"seed", v.seed},
                              {"invariant", v.invariant},
                              {"mode", v.mode},
                              {"t", v.t},
                              {"value", number_or_null(v.value)}});
    }
    inv["violations"] = violations;
    root["invariants"] = inv;

    json aborted = json::array();
    for (const auto& a : stats.aborted) {
        aborted.push_back({{"realization", a.realization}, {"seed", a.seed}, {"reason", a.reason}});
    }
    root["aborted"] = aborted;
    root["warnings"] = extras.warnings;
    return root.dump(2);
}

void write_trajectory(std::ostream& out, const Trajectory& trajectory)
{
    const std::size_t k = trajectory.modes;
    const bool bank = trajectory.bank;
    out << 't';
    for (std::size_t b = 0; b < trajectory.blocks; ++b) {
        for (std::size_t i = 0; i < k; ++i) {
            const std::string tag = bank ? std::to_string(i + 1)
                                         : std::to_string(trajectory.in_modes[b]) + "_" + std::to_string(i + 1);
            out << ",re_q_" << tag << ",im_q_" << tag << ",re_qdot_" << tag << ",im_qdot_" << tag;
        }
    }
    out << '\n';
    for (std::size_t r = 0; r < trajectory.t.size(); ++r) {
        out << format_double(trajectory.t[r]);
        const auto& x = trajectory.states[r];
        for (std::size_t b = 0; b < trajectory.blocks; ++b) {
            for (std::size_t i = 0; i < k; ++i) {
                const cplx q = x[b * 2 * k + i];
                const cplx p = x[b * 2 * k + k + i];
                out << ',' << format_double(q.real()) << ',' << format_double(q.imag()) << ','
                    << format_double(p.real()) << ',' << format_double(p.imag());
            }
        }
        out << '\n';
    }
}

std::string bogoliubov_json(const BogoliubovRecord& record, std::uint64_t seed)
{
    auto matrix = [&](const std::vector<cplx>& m) {
        json rows = json::array();
        for (std::size_t n = 0; n < record.rows; ++n) {
            json row = json::array();
            for (std::size_t k = 0; k < record.cols; ++k) {
                const cplx z = m[n * record.cols + k];
                row.push_back({z.real(), z.imag()});
            }
            rows.push_back(row);
        }
        return rows;
    };
    json root;
    root["seed"] = seed;
    root["T_stop"] = record.T_stop;
    root["in_modes"] = record.in_modes;
    root["alpha"] = matrix(record.alpha);
    root["beta"] = matrix(record.beta);
    return root.dump(2);
}

void write_noise(std::ostream& out, const NoiseSamples& samples)
{
    out << kNoiseHeader << '\n';
    for (std::size_t i = 0; i < samples.xi.size(); ++i) {
        out << format_double(samples.spacing * static_cast<double>(i)) << ',' << format_double(samples.xi[i]) << ',';
        if (!samples.dxi.empty()) {
            out << format_double(samples.dxi[i]);
        }
        out << ',';
        if (!samples.ddxi.empty()) {
            out << format_double(samples.ddxi[i]);
        }
        out << '\n';
    }
}

} // namespace spc::io
