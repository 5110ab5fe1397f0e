#ifndef MARGIN_CASCADE_EXPERIMENTS_HPP
#define MARGIN_CASCADE_EXPERIMENTS_HPP

/// \file experiments.hpp
///
/// Replica-averaged parameter sweeps, critical-point detection, phase diagrams and
/// the margin-times (butterfly) study.
///
/// Seeding: replica q of every experiment uses seed replica_seed(master, q), whatever
/// the parameter values of the cell. The same seed set is therefore shared along every
/// swept axis, so for k, r and v sweeps two cells in the same replica see the same
/// market and the same shock draws. Runs are independent and may execute on any
/// number of threads; aggregation is always in (value index, replica index) order.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "margin_cascade/cascade.hpp"
#include "margin_cascade/errors.hpp"
#include "margin_cascade/market.hpp"
#include "margin_cascade/random.hpp"

namespace margin_cascade {

enum class axis { k, r, v, s };

inline std::string_view axis_name(axis a) {
    switch (a) {
        case axis::k: return "k";
        case axis::r: return "r";
        case axis::v: return "v";
        case axis::s: return "s";
    }
    return "?";
}

inline std::optional<axis> parse_axis(std::string_view name) {
    if (name == "k") return axis::k;
    if (name == "r") return axis::r;
    if (name == "v") return axis::v;
    if (name == "s") return axis::s;
    return std::nullopt;
}

/// Copy of base with the axis parameter replaced; throws config_error if the
/// result is not a valid market_params.
inline market_params with_axis_value(market_params base, axis a, double value) {
    switch (a) {
        case axis::k: base.initial_margin_k = value; break;
        case axis::r: base.maintenance_r = value; break;
        case axis::v: base.volatility_v = value; break;
        case axis::s:
            if (!(value >= 1.0) || value != std::floor(value) || value > 1e9)
                throw config_error("diversity_s", "must be a positive integer, got " + std::to_string(value));
            base.diversity_s = static_cast<std::size_t>(value);
            break;
    }
    validate(base);
    return base;
}

inline std::uint64_t replica_seed(std::uint64_t master_seed, std::size_t replica) {
    return derive_seed(master_seed, 0x7265706c69636100ULL + replica);
}

struct summary {
    double mean = 0.0;
    double stddev = 0.0;  // sample (n - 1) standard deviation; 0 for n < 2
};

inline summary summarize(std::span<const double> xs) {
    summary out;
    if (xs.empty()) return out;
    double total = 0.0;
    for (const double x : xs) total += x;
    out.mean = total / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (const double x : xs) ss += (x - out.mean) * (x - out.mean);
        out.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return out;
}

struct run_context {
    market_params params;
    std::size_t value_index = 0;
    std::size_t replica = 0;
};

/// Called once per simulated run, possibly from several threads at once.
using run_observer = std::function<void(const run_context&, const bipartite_market&, const cascade_result&)>;

struct execution_options {
    /// 0 selects std::thread::hardware_concurrency().
    std::size_t threads = 0;
    run_observer observer;
};

/// Runs body(i) for i in [0, n) on a small worker pool.
template <class Body>
void parallel_for(std::size_t n, std::size_t threads, Body&& body) {
    if (threads == 0) threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> workers;
        workers.reserve(threads);
        for (std::size_t w = 0; w < threads; ++w) {
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        body(i);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                        next = n;
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

struct run_outcome {
    std::size_t tau = 1;
    double p_inf = 0.0;
    std::size_t n_inf = 0;
};

inline run_outcome run_one(const run_context& ctx, const execution_options& options) {
    auto market = build_market(ctx.params);
    const auto result = run_cascade(market, ctx.params);
    if (options.observer) options.observer(ctx, market, result);
    return {result.tau, result.p_inf, result.n_inf};
}

struct cell_stats {
    summary tau;
    summary p_inf;
    summary n_inf;
};

inline cell_stats aggregate(std::span<const run_outcome> runs) {
    std::vector<double> tau, p_inf, n_inf;
    for (const auto& r : runs) {
        tau.push_back(static_cast<double>(r.tau));
        p_inf.push_back(r.p_inf);
        n_inf.push_back(static_cast<double>(r.n_inf));
    }
    return {summarize(tau), summarize(p_inf), summarize(n_inf)};
}

// ---------------------------------------------------------------------------
// One-dimensional sweeps

struct sweep_spec {
    market_params base;
    axis swept = axis::k;
    std::vector<double> values;
    std::size_t replicas = 20;
    std::uint64_t master_seed = 0;
};

struct sweep_point {
    double value = 0.0;
    cell_stats stats;
    std::vector<run_outcome> runs;  // one per replica, in replica order
};

struct sweep_result {
    axis swept = axis::k;
    std::size_t replicas = 0;
    std::vector<sweep_point> points;
};

inline std::vector<market_params> validated_axis(const market_params& base, axis a,
                                                 std::span<const double> values, std::string_view field) {
    if (values.empty()) throw config_error(std::string(field), "value list must not be empty");
    std::vector<market_params> out;
    out.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        try {
            out.push_back(with_axis_value(base, a, values[i]));
        } catch (const config_error& e) {
            throw config_error(std::string(field) + "[" + std::to_string(i) + "]", e.what());
        }
    }
    return out;
}

inline sweep_result run_sweep(const sweep_spec& spec, const execution_options& options = {}) {
    if (spec.replicas < 1) throw config_error("replicas", "must be >= 1");
    const auto cells = validated_axis(spec.base, spec.swept, spec.values, "values");

    const std::size_t reps = spec.replicas;
    std::vector<run_outcome> runs(cells.size() * reps);
    parallel_for(runs.size(), options.threads, [&](std::size_t task) {
        const std::size_t vi = task / reps;
        const std::size_t q = task % reps;
        run_context ctx{cells[vi], vi, q};
        ctx.params.seed = replica_seed(spec.master_seed, q);
        runs[task] = run_one(ctx, options);
    });

    sweep_result out;
    out.swept = spec.swept;
    out.replicas = reps;
    for (std::size_t vi = 0; vi < cells.size(); ++vi) {
        sweep_point point;
        point.value = spec.values[vi];
        point.runs.assign(runs.begin() + static_cast<std::ptrdiff_t>(vi * reps),
                          runs.begin() + static_cast<std::ptrdiff_t>((vi + 1) * reps));
        point.stats = aggregate(point.runs);
        out.points.push_back(std::move(point));
    }
    return out;
}

struct critical_point {
    double value = 0.0;
    std::size_t index = 0;
    double mean_tau = 1.0;
    /// More than one value attained the maximum mean tau.
    bool tie = false;
};

/// Whether larger values of the axis lie on the stable side of the transition.
inline bool larger_is_stable(axis a) { return a == axis::k; }

/// Axis value with the largest mean tau, or nothing if no value ever cascaded.
/// Ties go to the stable side: largest k, smallest r, v or s.
inline std::optional<critical_point> detect_critical(const sweep_result& result) {
    if (result.points.empty()) return std::nullopt;
    double best = -1.0;
    for (const auto& p : result.points) best = std::max(best, p.stats.tau.mean);
    if (best <= 1.0) return std::nullopt;

    std::vector<std::size_t> argmax;
    for (std::size_t i = 0; i < result.points.size(); ++i)
        if (result.points[i].stats.tau.mean == best) argmax.push_back(i);

    auto pick = argmax.front();
    for (const auto i : argmax) {
        const double v = result.points[i].value;
        const double cur = result.points[pick].value;
        if (larger_is_stable(result.swept) ? v > cur : v < cur) pick = i;
    }
    return critical_point{result.points[pick].value, pick, best, argmax.size() > 1};
}

inline sweep_result diversification_sweep(std::span<const double> s_values, const market_params& base,
                                          std::size_t replicas, std::uint64_t master_seed,
                                          const execution_options& options = {}) {
    return run_sweep({base, axis::s, {s_values.begin(), s_values.end()}, replicas, master_seed}, options);
}

// ---------------------------------------------------------------------------
// Two-dimensional phase diagrams

struct grid_axis {
    axis param = axis::r;
    std::vector<double> values;
};

struct phase_grid {
    grid_axis rows;  // axis 1
    grid_axis cols;  // axis 2
    std::size_t replicas = 0;
    std::vector<cell_stats> cells;  // row-major, rows.values.size() x cols.values.size()

    const cell_stats& at(std::size_t row, std::size_t col) const { return cells[row * cols.values.size() + col]; }
};

inline phase_grid phase_diagram(const grid_axis& rows, const grid_axis& cols, const market_params& base,
                                std::size_t replicas, std::uint64_t master_seed,
                                const execution_options& options = {}) {
    if (rows.param == cols.param) throw config_error("phase.axis2", "must differ from axis1");
    if (replicas < 1) throw config_error("replicas", "must be >= 1");
    validated_axis(base, rows.param, rows.values, "axis1.values");
    validated_axis(base, cols.param, cols.values, "axis2.values");

    const std::size_t nr = rows.values.size();
    const std::size_t nc = cols.values.size();
    std::vector<market_params> cell_params;
    cell_params.reserve(nr * nc);
    for (std::size_t i = 0; i < nr; ++i) {
        const auto row_params = with_axis_value(base, rows.param, rows.values[i]);
        for (std::size_t j = 0; j < nc; ++j) cell_params.push_back(with_axis_value(row_params, cols.param, cols.values[j]));
    }

    std::vector<run_outcome> runs(cell_params.size() * replicas);
    parallel_for(runs.size(), options.threads, [&](std::size_t task) {
        const std::size_t cell = task / replicas;
        const std::size_t q = task % replicas;
        run_context ctx{cell_params[cell], cell, q};
        ctx.params.seed = replica_seed(master_seed, q);
        runs[task] = run_one(ctx, options);
    });

    phase_grid grid{rows, cols, replicas, {}};
    grid.cells.reserve(cell_params.size());
    for (std::size_t cell = 0; cell < cell_params.size(); ++cell)
        grid.cells.push_back(aggregate(std::span(runs).subspan(cell * replicas, replicas)));
    return grid;
}

/// Halfway between the lowest and highest mean p_inf on the grid.
inline double midpoint_index_level(const phase_grid& grid) {
    double lo = grid.cells.front().p_inf.mean, hi = lo;
    for (const auto& c : grid.cells) {
        lo = std::min(lo, c.p_inf.mean);
        hi = std::max(hi, c.p_inf.mean);
    }
    return 0.5 * (lo + hi);
}

/// For each axis-2 value, the first axis-1 value (in input order) whose mean p_inf
/// falls below `level`: the edge of the low-index (vulnerable) region. Empty where
/// the whole column stays above the level.
inline std::vector<std::optional<double>> vulnerable_boundary(const phase_grid& grid, double level) {
    std::vector<std::optional<double>> edge(grid.cols.values.size());
    for (std::size_t j = 0; j < grid.cols.values.size(); ++j) {
        for (std::size_t i = 0; i < grid.rows.values.size(); ++i) {
            if (grid.at(i, j).p_inf.mean < level) {
                edge[j] = grid.rows.values[i];
                break;
            }
        }
    }
    return edge;
}

// ---------------------------------------------------------------------------
// Margin times vs price decline

struct degree_bin {
    std::size_t degree = 0;
    std::size_t samples = 0;
    summary relative_decline;
};

struct butterfly_stats {
    std::size_t replicas = 0;
    std::size_t n_shares = 0;
    std::vector<degree_bin> bins;  // ascending degree, only populated degrees

    std::size_t total_samples() const {
        std::size_t total = 0;
        for (const auto& b : bins) total += b.samples;
        return total;
    }
};

/// Per-share (margin times, relative decline) pairs from one run, where the decline
/// is (p_{j,0} - p_{j,final}) / p_{j,0}.
struct share_outcomes {
    std::vector<std::size_t> degree;
    std::vector<double> relative_decline;
};

inline share_outcomes share_outcomes_of(const bipartite_market& market) {
    share_outcomes out;
    out.degree = compute_margin_times(market).counts;
    out.relative_decline.resize(market.n_shares);
    for (std::size_t j = 0; j < market.n_shares; ++j)
        out.relative_decline[j] = (market.initial_prices[j] - market.current_prices[j]) / market.initial_prices[j];
    return out;
}

inline butterfly_stats margin_times_study(const market_params& base, std::size_t replicas, std::uint64_t master_seed,
                                          const execution_options& options = {}) {
    validate(base);
    if (replicas < 1) throw config_error("replicas", "must be >= 1");

    std::vector<share_outcomes> per_replica(replicas);
    parallel_for(replicas, options.threads, [&](std::size_t q) {
        run_context ctx{base, 0, q};
        ctx.params.seed = replica_seed(master_seed, q);
        auto market = build_market(ctx.params);
        const auto result = run_cascade(market, ctx.params);
        if (options.observer) options.observer(ctx, market, result);
        per_replica[q] = share_outcomes_of(market);
    });

    std::map<std::size_t, std::vector<double>> by_degree;
    for (const auto& rep : per_replica)
        for (std::size_t j = 0; j < rep.degree.size(); ++j) by_degree[rep.degree[j]].push_back(rep.relative_decline[j]);

    butterfly_stats out{replicas, base.n_shares, {}};
    for (const auto& [degree, declines] : by_degree)
        out.bins.push_back({degree, declines.size(), summarize(declines)});
    return out;
}

}  // namespace margin_cascade

#endif  // MARGIN_CASCADE_EXPERIMENTS_HPP
