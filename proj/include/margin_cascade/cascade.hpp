#ifndef MARGIN_CASCADE_CASCADE_HPP
#define MARGIN_CASCADE_CASCADE_HPP

/// \file cascade.hpp
///
/// Shock, margin-call and fire-sale dynamics on a bipartite_market.
///
/// Timeline of one run:
///   t = 0  prices are the initial prices, every account active
///   t = 1  every share j drops by a fraction d_j ~ U[0, v/100]
///   t >= 2 synchronous step: every active account whose maintenance ratio
///          (collateral / frozen loan) is strictly below r is liquidated; each
///          liquidated account places one sell order on every share it holds;
///          p_j <- max(0, p_j - eta * orders_j)
/// The run stops at the first step that liquidates nobody; that probe step is not
/// counted, so tau = 1 + number of liquidating steps.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "margin_cascade/errors.hpp"
#include "margin_cascade/market.hpp"
#include "margin_cascade/random.hpp"

namespace margin_cascade {

/// Per-share decline fractions applied at t = 1.
struct shock_realization {
    std::vector<double> declines;

    friend bool operator==(const shock_realization&, const shock_realization&) = default;
};

struct step_report {
    std::size_t step_index = 0;
    std::vector<std::uint32_t> liquidated;  // ascending investor index
    std::vector<std::uint32_t> sell_orders;  // one entry per share
    double index_after = 0.0;
    /// True when at least one price was floored at zero in this step.
    bool clamped = false;

    friend bool operator==(const step_report&, const step_report&) = default;
};

struct cascade_result {
    std::size_t tau = 1;
    double p_inf = 0.0;
    std::size_t n_inf = 0;
    /// Index at t = 0, 1, ..., tau.
    std::vector<double> index_trajectory;
    /// Active accounts at t = 0, 1, ..., tau.
    std::vector<std::size_t> active_trajectory;
    /// Liquidating steps only (t = 2..tau); empty when tau == 1.
    std::vector<step_report> steps;
    shock_realization shock;
    bool any_clamped = false;

    friend bool operator==(const cascade_result&, const cascade_result&) = default;
};

/// Draws the t = 1 declines (shock stream, shares in index order, one uniform01 each)
/// and applies them.
inline shock_realization apply_initial_shock(bipartite_market& market, const market_params& params) {
    if (market.shocked) throw state_error("apply_initial_shock: market already shocked");
    if (!(params.volatility_v >= 0.0 && params.volatility_v <= 100.0))
        throw config_error("volatility_v", "must be in [0, 100]");

    const double range = params.volatility_v / 100.0;
    auto gen = make_engine(params.seed, shock_stream);
    shock_realization shock{std::vector<double>(market.n_shares)};
    for (std::size_t j = 0; j < market.n_shares; ++j) {
        const double d = uniform01(gen) * range;
        shock.declines[j] = d;
        market.current_prices[j] = market.initial_prices[j] * (1.0 - d);
    }
    market.shocked = true;
    return shock;
}

/// Applies explicit declines instead of drawing them.
inline void apply_shock(bipartite_market& market, const shock_realization& shock) {
    if (market.shocked) throw state_error("apply_shock: market already shocked");
    if (shock.declines.size() != market.n_shares) throw config_error("declines", "must have one entry per share");
    for (const double d : shock.declines)
        if (!(d >= 0.0 && d <= 1.0)) throw config_error("declines", "must lie in [0, 1]");
    for (std::size_t j = 0; j < market.n_shares; ++j)
        market.current_prices[j] = market.initial_prices[j] * (1.0 - shock.declines[j]);
    market.shocked = true;
}

/// Collateral value over the frozen margin loan for one active account.
inline double maintenance_margin(const bipartite_market& market, std::size_t investor) {
    if (investor >= market.n_investors)
        throw domain_error("maintenance_margin: investor " + std::to_string(investor) + " out of range");
    if (!market.is_active(investor))
        throw domain_error("maintenance_margin: investor " + std::to_string(investor) + " is liquidated");
    return sum_over(market.current_prices, market.holdings_of(investor)) / market.loan[investor];
}

/// One synchronous margin-call step. All ratios are evaluated against the prices
/// left by step t - 1 before any account is closed or any price moves.
inline step_report cascade_step(bipartite_market& market, const market_params& params, std::size_t t) {
    if (!market.shocked) throw state_error("cascade_step: initial shock not applied");
    if (t < 2) throw domain_error("cascade_step: step index must be >= 2");

    step_report report;
    report.step_index = t;
    for (std::size_t i = 0; i < market.n_investors; ++i) {
        if (market.active[i] && maintenance_margin(market, i) < params.maintenance_r)
            report.liquidated.push_back(static_cast<std::uint32_t>(i));
    }

    report.sell_orders.assign(market.n_shares, 0);
    for (const auto i : report.liquidated) {
        market.active[i] = 0;
        for (const auto j : market.holdings_of(i)) ++report.sell_orders[j];
    }
    market.n_active -= report.liquidated.size();

    if (!report.liquidated.empty()) {
        for (std::size_t j = 0; j < market.n_shares; ++j) {
            if (report.sell_orders[j] == 0) continue;
            const double next = market.current_prices[j] - params.price_impact_eta * report.sell_orders[j];
            if (next < 0.0) report.clamped = true;
            market.current_prices[j] = std::max(0.0, next);
        }
    }
    report.index_after = market_index(market);
    return report;
}

namespace detail {

template <class Shock>
cascade_result run_cascade_impl(bipartite_market& market, const market_params& params, Shock&& shock) {
    if (market.shocked) throw state_error("run_cascade: market already shocked");
    cascade_result result;
    result.index_trajectory.push_back(market_index(market));
    result.active_trajectory.push_back(market.n_active);

    result.shock = shock();
    result.index_trajectory.push_back(market_index(market));
    result.active_trajectory.push_back(market.n_active);

    for (std::size_t t = 2;; ++t) {
        auto report = cascade_step(market, params, t);
        if (report.liquidated.empty()) break;
        result.index_trajectory.push_back(report.index_after);
        result.active_trajectory.push_back(market.n_active);
        result.any_clamped = result.any_clamped || report.clamped;
        result.steps.push_back(std::move(report));
    }
    result.tau = 1 + result.steps.size();
    result.p_inf = result.index_trajectory.back();
    result.n_inf = result.active_trajectory.back();
    return result;
}

}  // namespace detail

/// Shocks a freshly built market (t = 1) and iterates cascade_step to the fixed point.
inline cascade_result run_cascade(bipartite_market& market, const market_params& params) {
    return detail::run_cascade_impl(market, params, [&] { return apply_initial_shock(market, params); });
}

/// Same as run_cascade, with the t = 1 declines given explicitly.
inline cascade_result run_cascade(bipartite_market& market, const market_params& params,
                                  const shock_realization& shock) {
    return detail::run_cascade_impl(market, params, [&] {
        apply_shock(market, shock);
        return shock;
    });
}

/// Convenience: build, shock and cascade one market.
inline cascade_result simulate(const market_params& params) {
    auto market = build_market(params);
    return run_cascade(market, params);
}

struct mean_field_prediction {
    /// (1 - mean_decline) / (1 - k) < r
    bool predicted_liquidation = false;
    /// 1 - (1 - mean_decline) / r; empty when r == 0.
    std::optional<double> k_mf;
    double mean_decline = 0.0;
};

/// Mean-field liquidation test for the average account with an explicit mean decline.
inline mean_field_prediction mean_field_onset_for_decline(double k, double r, double mean_decline) {
    if (!(k >= 0.0 && k < 1.0)) throw config_error("initial_margin_k", "must be in [0, 1)");
    if (!(r >= 0.0)) throw config_error("maintenance_r", "must be >= 0");
    if (!(mean_decline >= 0.0 && mean_decline <= 1.0)) throw config_error("mean_decline", "must be in [0, 1]");

    mean_field_prediction out;
    out.mean_decline = mean_decline;
    out.predicted_liquidation = (1.0 - mean_decline) / (1.0 - k) < r;
    if (r > 0.0) out.k_mf = 1.0 - (1.0 - mean_decline) / r;
    return out;
}

/// Mean-field test with the mean of U[0, v/100], i.e. v/200.
inline mean_field_prediction mean_field_onset(double k, double r, double v) {
    if (!(v >= 0.0 && v <= 100.0)) throw config_error("volatility_v", "must be in [0, 100]");
    return mean_field_onset_for_decline(k, r, v / 200.0);
}

}  // namespace margin_cascade

#endif  // MARGIN_CASCADE_CASCADE_HPP
