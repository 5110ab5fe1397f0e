#ifndef MARGIN_CASCADE_MARKET_HPP
#define MARGIN_CASCADE_MARKET_HPP

/// \file market.hpp
///
/// The bipartite margin market: N investors, M shares, each investor holding s
/// distinct shares bought on margin with initial margin k.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "margin_cascade/errors.hpp"
#include "margin_cascade/random.hpp"

namespace margin_cascade {

/// All model constants. Defaults are the reference configuration
/// (N = 20000, M = 1000, s = 20, eta = 5, v = 30).
struct market_params {
    std::size_t n_investors = 20000;
    std::size_t n_shares = 1000;
    std::size_t diversity_s = 20;
    double initial_margin_k = 0.5;
    double maintenance_r = 1.6;
    double volatility_v = 30.0;
    double price_impact_eta = 5.0;
    double price_median = 2000.0;
    double price_sigma = 0.5;
    std::uint64_t seed = 0;

    friend bool operator==(const market_params&, const market_params&) = default;
};

/// Throws config_error naming the first violated constraint.
inline void validate(const market_params& p) {
    auto finite = [](const char* field, double x) {
        if (!std::isfinite(x)) throw config_error(field, "must be finite");
    };
    if (p.n_investors < 1) throw config_error("n_investors", "must be >= 1");
    if (p.n_shares < 1) throw config_error("n_shares", "must be >= 1");
    if (p.diversity_s < 1) throw config_error("diversity_s", "must be >= 1");
    if (p.diversity_s > p.n_shares)
        throw config_error("diversity_s", "must be <= n_shares (" + std::to_string(p.n_shares) + ")");
    if (p.n_shares > UINT32_MAX) throw config_error("n_shares", "must fit in 32 bits");

    finite("initial_margin_k", p.initial_margin_k);
    if (p.initial_margin_k < 0.0) throw config_error("initial_margin_k", "must be >= 0");
    if (p.initial_margin_k >= 1.0) throw config_error("initial_margin_k", "must be < 1");

    finite("maintenance_r", p.maintenance_r);
    if (p.maintenance_r < 0.0) throw config_error("maintenance_r", "must be >= 0");

    finite("volatility_v", p.volatility_v);
    if (p.volatility_v < 0.0) throw config_error("volatility_v", "must be >= 0");
    if (p.volatility_v > 100.0) throw config_error("volatility_v", "must be <= 100");

    finite("price_impact_eta", p.price_impact_eta);
    if (p.price_impact_eta < 0.0) throw config_error("price_impact_eta", "must be >= 0");

    finite("price_median", p.price_median);
    if (!(p.price_median > 0.0)) throw config_error("price_median", "must be > 0");
    finite("price_sigma", p.price_sigma);
    if (!(p.price_sigma > 0.0)) throw config_error("price_sigma", "must be > 0");
}

/// Market state. Built by build_market() or make_market(); afterwards only the
/// cascade operations mutate current_prices / active.
struct bipartite_market {
    std::size_t n_investors = 0;
    std::size_t n_shares = 0;
    std::size_t diversity_s = 0;
    double initial_margin_k = 0.0;

    std::vector<double> initial_prices;
    std::vector<double> current_prices;
    /// Row-major N x s share indices; row i is the holding set of investor i.
    std::vector<std::uint32_t> holdings;
    /// (1 - k) * sum of initial prices over the holding set, frozen at t = 0.
    std::vector<double> loan;
    std::vector<std::uint8_t> active;
    std::size_t n_active = 0;
    bool shocked = false;

    std::span<const std::uint32_t> holdings_of(std::size_t investor) const {
        return {holdings.data() + investor * diversity_s, diversity_s};
    }

    bool is_active(std::size_t investor) const { return active[investor] != 0; }

    friend bool operator==(const bipartite_market&, const bipartite_market&) = default;
};

/// Number of investors holding each share at t = 0 (share-node degree).
struct margin_times {
    std::vector<std::size_t> counts;
};

/// Sum of the given prices over one holding set, in holding order.
inline double sum_over(std::span<const double> prices, std::span<const std::uint32_t> held) {
    double total = 0.0;
    for (const auto j : held) total += prices[j];
    return total;
}

/// Assembles a market from explicit prices and holdings. Checks that every row has
/// s distinct in-range entries and that prices are positive.
inline bipartite_market make_market(std::vector<double> initial_prices,
                                    std::size_t diversity_s,
                                    std::vector<std::uint32_t> holdings,
                                    double initial_margin_k) {
    const std::size_t m = initial_prices.size();
    if (m == 0) throw config_error("initial_prices", "must not be empty");
    if (diversity_s < 1 || diversity_s > m)
        throw config_error("diversity_s", "must be in [1, n_shares]");
    if (holdings.empty() || holdings.size() % diversity_s != 0)
        throw config_error("holdings", "size must be a positive multiple of diversity_s");
    if (!(initial_margin_k >= 0.0 && initial_margin_k < 1.0))
        throw config_error("initial_margin_k", "must be in [0, 1)");
    for (const double p : initial_prices)
        if (!(p > 0.0) || !std::isfinite(p)) throw config_error("initial_prices", "must be positive and finite");

    bipartite_market market;
    market.n_investors = holdings.size() / diversity_s;
    market.n_shares = m;
    market.diversity_s = diversity_s;
    market.initial_margin_k = initial_margin_k;
    market.initial_prices = std::move(initial_prices);
    market.current_prices = market.initial_prices;
    market.holdings = std::move(holdings);

    std::vector<std::uint32_t> row(diversity_s);
    for (std::size_t i = 0; i < market.n_investors; ++i) {
        const auto held = market.holdings_of(i);
        row.assign(held.begin(), held.end());
        std::sort(row.begin(), row.end());
        if (row.back() >= m) throw config_error("holdings", "share index out of range");
        if (std::adjacent_find(row.begin(), row.end()) != row.end())
            throw config_error("holdings", "duplicate share in holding set of investor " + std::to_string(i));
    }

    market.loan.resize(market.n_investors);
    for (std::size_t i = 0; i < market.n_investors; ++i)
        market.loan[i] = (1.0 - initial_margin_k) * sum_over(market.initial_prices, market.holdings_of(i));

    market.active.assign(market.n_investors, 1);
    market.n_active = market.n_investors;
    return market;
}

/// Builds a random market.
///
/// Draw order (see random.hpp for the per-draw word consumption):
///   - prices stream: for j = 0..M-1, p_j = median * exp(sigma * standard_normal)
///   - holdings stream: a permutation of 0..M-1 starts as the identity and persists
///     across investors; for investor i = 0..N-1 and slot q = 0..s-1,
///     pick = q + uniform_index(M - q), swap(perm[q], perm[pick]), holding q = perm[q].
///     This is a partial Fisher-Yates shuffle, so every holding set is a uniform
///     s-subset independent of the others.
inline bipartite_market build_market(const market_params& params) {
    validate(params);
    const std::size_t m = params.n_shares;
    const std::size_t s = params.diversity_s;

    auto price_gen = make_engine(params.seed, prices_stream);
    std::vector<double> prices(m);
    for (auto& p : prices) p = params.price_median * std::exp(params.price_sigma * standard_normal(price_gen));

    auto holding_gen = make_engine(params.seed, holdings_stream);
    std::vector<std::uint32_t> perm(m);
    std::iota(perm.begin(), perm.end(), std::uint32_t{0});
    std::vector<std::uint32_t> holdings(params.n_investors * s);
    for (std::size_t i = 0; i < params.n_investors; ++i) {
        for (std::size_t q = 0; q < s; ++q) {
            const auto pick = q + uniform_index(holding_gen, m - q);
            std::swap(perm[q], perm[pick]);
            holdings[i * s + q] = perm[q];
        }
    }
    return make_market(std::move(prices), s, std::move(holdings), params.initial_margin_k);
}

/// Arithmetic mean of the current prices.
inline double market_index(const bipartite_market& market) {
    double total = 0.0;
    for (const double p : market.current_prices) total += p;
    return total / static_cast<double>(market.current_prices.size());
}

inline margin_times compute_margin_times(const bipartite_market& market) {
    margin_times times{std::vector<std::size_t>(market.n_shares, 0)};
    for (const auto j : market.holdings) ++times.counts[j];
    return times;
}

}  // namespace margin_cascade

#endif  // MARGIN_CASCADE_MARKET_HPP
