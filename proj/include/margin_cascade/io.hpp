#ifndef MARGIN_CASCADE_IO_HPP
#define MARGIN_CASCADE_IO_HPP

/// \file io.hpp
///
/// Comma-separated output tables and the JSON summary.
///
/// Every table has a header row, one record per line, '\n' line endings and a
/// trailing newline. Reals are printed with printf "%.6f"; counts as integers.

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <type_traits>

#include <json.hpp>

#include "margin_cascade/cascade.hpp"
#include "margin_cascade/errors.hpp"
#include "margin_cascade/experiments.hpp"

namespace margin_cascade {

inline std::string format_real(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return buf;
}

/// step,market_index,active_investors,liquidations_this_step; rows t = 0..tau.
inline void write_timeseries(const cascade_result& result, std::ostream& out) {
    out << "step,market_index,active_investors,liquidations_this_step\n";
    for (std::size_t t = 0; t < result.index_trajectory.size(); ++t) {
        const std::size_t liquidations = t >= 2 ? result.steps[t - 2].liquidated.size() : 0;
        out << t << ',' << format_real(result.index_trajectory[t]) << ',' << result.active_trajectory[t] << ','
            << liquidations << '\n';
    }
}

inline void write_stats(std::ostream& out, const cell_stats& s) {
    out << format_real(s.tau.mean) << ',' << format_real(s.tau.stddev) << ',' << format_real(s.p_inf.mean) << ','
        << format_real(s.p_inf.stddev) << ',' << format_real(s.n_inf.mean) << ',' << format_real(s.n_inf.stddev);
}

inline constexpr const char* stats_header = "tau_mean,tau_std,p_inf_mean,p_inf_std,n_inf_mean,n_inf_std";

/// One row per swept value, in input order.
inline void write_grid(const sweep_result& result, std::ostream& out) {
    out << "axis,value,replicas," << stats_header << '\n';
    for (const auto& p : result.points) {
        out << axis_name(result.swept) << ',' << format_real(p.value) << ',' << p.runs.size() << ',';
        write_stats(out, p.stats);
        out << '\n';
    }
}

/// One row per cell, axis-1 major.
inline void write_grid(const phase_grid& grid, std::ostream& out) {
    out << "axis1,value1,axis2,value2,replicas," << stats_header << '\n';
    for (std::size_t i = 0; i < grid.rows.values.size(); ++i) {
        for (std::size_t j = 0; j < grid.cols.values.size(); ++j) {
            out << axis_name(grid.rows.param) << ',' << format_real(grid.rows.values[i]) << ','
                << axis_name(grid.cols.param) << ',' << format_real(grid.cols.values[j]) << ',' << grid.replicas
                << ',';
            write_stats(out, grid.at(i, j));
            out << '\n';
        }
    }
}

/// One row per populated margin-times value, ascending.
inline void write_grid(const butterfly_stats& stats, std::ostream& out) {
    out << "margin_times,samples,decline_mean,decline_std\n";
    for (const auto& b : stats.bins)
        out << b.degree << ',' << b.samples << ',' << format_real(b.relative_decline.mean) << ','
            << format_real(b.relative_decline.stddev) << '\n';
}

/// Writes `text` to `path`, or to stdout when path is "-".
inline void write_text(const std::string& path, const std::string& text) {
    if (path == "-") {
        std::fwrite(text.data(), 1, text.size(), stdout);
        std::fflush(stdout);
        return;
    }
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw io_error("cannot open '" + path + "' for writing");
    file << text;
    file.flush();
    if (!file) throw io_error("failed writing '" + path + "'");
}

template <class Table>
void write_to(const std::string& path, const Table& table) {
    std::ostringstream buf;
    if constexpr (std::is_same_v<Table, cascade_result>)
        write_timeseries(table, buf);
    else
        write_grid(table, buf);
    write_text(path, buf.str());
}

// ---------------------------------------------------------------------------
// JSON summaries (same fields as the tables)

inline nlohmann::json to_json(const summary& s) { return {{"mean", s.mean}, {"std", s.stddev}}; }

inline nlohmann::json to_json(const cell_stats& s) {
    return {{"tau", to_json(s.tau)}, {"p_inf", to_json(s.p_inf)}, {"n_inf", to_json(s.n_inf)}};
}

inline nlohmann::json summary_json(const cascade_result& r) {
    return {{"tau", r.tau},
            {"p_inf", r.p_inf},
            {"n_inf", r.n_inf},
            {"any_clamped", r.any_clamped},
            {"index_trajectory", r.index_trajectory},
            {"active_trajectory", r.active_trajectory}};
}

inline nlohmann::json summary_json(const sweep_result& r) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : r.points) points.push_back({{"value", p.value}, {"stats", to_json(p.stats)}});
    nlohmann::json out{{"axis", std::string(axis_name(r.swept))}, {"replicas", r.replicas}, {"points", points}};
    if (const auto c = detect_critical(r))
        out["critical"] = {{"value", c->value}, {"index", c->index}, {"mean_tau", c->mean_tau}, {"tie", c->tie}};
    else
        out["critical"] = nullptr;
    return out;
}

inline nlohmann::json summary_json(const phase_grid& g) {
    nlohmann::json cells = nlohmann::json::array();
    for (std::size_t i = 0; i < g.rows.values.size(); ++i)
        for (std::size_t j = 0; j < g.cols.values.size(); ++j)
            cells.push_back({{"value1", g.rows.values[i]}, {"value2", g.cols.values[j]}, {"stats", to_json(g.at(i, j))}});
    return {{"axis1", std::string(axis_name(g.rows.param))},
            {"axis2", std::string(axis_name(g.cols.param))},
            {"replicas", g.replicas},
            {"cells", cells}};
}

inline nlohmann::json summary_json(const butterfly_stats& b) {
    nlohmann::json bins = nlohmann::json::array();
    for (const auto& bin : b.bins)
        bins.push_back({{"margin_times", bin.degree}, {"samples", bin.samples}, {"decline", to_json(bin.relative_decline)}});
    return {{"replicas", b.replicas}, {"n_shares", b.n_shares}, {"bins", bins}};
}

}  // namespace margin_cascade

#endif  // MARGIN_CASCADE_IO_HPP
