// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   acceptance [--threads N]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "margin_cascade/margin_cascade.hpp"
#include "oracle/naive_cascade.hpp"

namespace mc = margin_cascade;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t master_seed = 2015;
constexpr std::size_t replicas = 20;

// ---------------------------------------------------------------------------
// Conservation / closed-form audit applied to every run the suite performs.

class run_audit {
public:
    void check(const mc::bipartite_market& market, const mc::cascade_result& result, double eta) {
        std::uint64_t orders = 0;
        for (const auto& step : result.steps)
            for (auto o : step.sell_orders) orders += o;
        const bool conserved = orders == market.diversity_s * (market.n_investors - result.n_inf);

        bool closed_form = true;
        if (!result.any_clamped) {
            std::vector<std::uint64_t> sold(market.n_shares, 0);
            for (std::size_t i = 0; i < market.n_investors; ++i)
                if (!market.is_active(i))
                    for (auto j : market.holdings_of(i)) ++sold[j];
            for (std::size_t j = 0; j < market.n_shares && closed_form; ++j) {
                const double shocked = market.initial_prices[j] * (1.0 - result.shock.declines[j]);
                closed_form = market.current_prices[j] == shocked - eta * static_cast<double>(sold[j]);
            }
        }

        std::lock_guard lock(mutex_);
        ++runs_;
        if (!result.any_clamped) ++closed_form_runs_;
        if (!conserved) ++conservation_failures_;
        if (!closed_form) ++closed_form_failures_;
    }

    mc::run_observer observer() {
        return [this](const mc::run_context& ctx, const mc::bipartite_market& m, const mc::cascade_result& r) {
            check(m, r, ctx.params.price_impact_eta);
        };
    }

    std::size_t runs() const { return runs_; }
    std::size_t closed_form_runs() const { return closed_form_runs_; }
    std::size_t conservation_failures() const { return conservation_failures_; }
    std::size_t closed_form_failures() const { return closed_form_failures_; }

private:
    std::mutex mutex_;
    std::size_t runs_ = 0, closed_form_runs_ = 0, conservation_failures_ = 0, closed_form_failures_ = 0;
};

struct outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

mc::market_params reference(double k, double r) {
    mc::market_params p;  // N = 20000, M = 1000, s = 20, v = 30, eta = 5
    p.initial_margin_k = k;
    p.maintenance_r = r;
    return p;
}

// ---------------------------------------------------------------------------

outcome critical_margin(const mc::execution_options& exec) {
    const auto ks = mc::expand_range(0.40, 0.65, 0.005);
    const auto sweep = mc::run_sweep({reference(0.5, 1.6), mc::axis::k, ks, replicas, master_seed}, exec);
    const auto c = mc::detect_critical(sweep);
    if (!c) return {false, "no cascade anywhere on the k grid"};
    const bool pass = c->value >= 0.48 && c->value <= 0.53;
    return {pass, "k_c = " + fmt("%.3f", c->value) + " (mean tau " + fmt("%.2f", c->mean_tau) +
                      (c->tie ? ", tie" : "") + "), window [0.48, 0.53]"};
}

outcome no_cascade_regime(const mc::execution_options& exec) {
    const auto sweep = mc::run_sweep({reference(0.6, 1.6), mc::axis::k, {0.6}, replicas, master_seed}, exec);
    const auto quiet = std::count_if(sweep.points[0].runs.begin(), sweep.points[0].runs.end(),
                                     [](const mc::run_outcome& r) { return r.tau == 1; });
    return {quiet >= 18, std::to_string(quiet) + "/20 replicas with tau = 1 at k = 0.6 (need >= 18)"};
}

outcome collapse_plateau(const mc::execution_options& exec) {
    const auto sweep =
        mc::run_sweep({reference(0.5, 1.6), mc::axis::k, {0.40, 0.45, 0.50}, replicas, master_seed}, exec);
    double lo = INFINITY, hi = -INFINITY;
    std::string values;
    for (const auto& p : sweep.points) {
        lo = std::min(lo, p.stats.p_inf.mean);
        hi = std::max(hi, p.stats.p_inf.mean);
        values += fmt("%.2f ", p.stats.p_inf.mean);
    }
    const double spread = (hi - lo) / hi;
    return {spread < 0.05, "mean p_inf = " + values + "relative spread " + fmt("%.4f", spread) + " (< 0.05)"};
}

outcome diversification(const mc::execution_options& exec) {
    const std::vector<double> s_values = {2, 5, 10, 20, 40};
    const auto sweep = mc::diversification_sweep(s_values, reference(0.4, 1.7), replicas, master_seed, exec);
    bool monotone = true;
    std::string values;
    for (std::size_t i = 0; i < sweep.points.size(); ++i) {
        values += fmt("%.2f ", sweep.points[i].stats.p_inf.mean);
        if (i > 0 && sweep.points[i].stats.p_inf.mean > sweep.points[i - 1].stats.p_inf.mean) monotone = false;
    }
    return {monotone, "mean p_inf over s = 2,5,10,20,40: " + values};
}

outcome phase_boundary(const mc::execution_options& exec) {
    const mc::grid_axis rs{mc::axis::r, mc::expand_range(1.2, 2.0, 0.05)};
    const mc::grid_axis ks{mc::axis::k, mc::expand_range(0.3, 0.7, 0.02)};
    const auto grid = mc::phase_diagram(rs, ks, reference(0.5, 1.6), replicas, master_seed, exec);
    const double level = mc::midpoint_index_level(grid);
    const auto edge = mc::vulnerable_boundary(grid, level);

    bool monotone = true;
    std::size_t defined = 0;
    double last = -INFINITY;
    std::string trace;
    for (std::size_t j = 0; j < edge.size(); ++j) {
        trace += fmt("%.2f:", ks.values[j]) + (edge[j] ? fmt("%.2f", *edge[j]) : std::string("-")) + " ";
        if (!edge[j]) continue;
        ++defined;
        if (*edge[j] < last) monotone = false;
        last = *edge[j];
    }
    const bool pass = monotone && defined >= 2;
    return {pass, "r_c(k) at level " + fmt("%.1f", level) + ": " + trace};
}

outcome small_diversity_stable(const mc::execution_options& exec) {
    auto base = reference(0.5, 1.6);
    base.diversity_s = 2;
    const mc::grid_axis rs{mc::axis::r, mc::expand_range(1.2, 2.0, 0.05)};
    const mc::grid_axis vs{mc::axis::v, mc::expand_range(10, 50, 5)};
    const auto grid = mc::phase_diagram(rs, vs, base, replicas, master_seed, exec);
    std::size_t cascading = 0;
    double max_tau = 1.0;
    for (const auto& c : grid.cells) {
        cascading += c.tau.mean != 1.0;
        max_tau = std::max(max_tau, c.tau.mean);
    }
    return {cascading == 0, std::to_string(cascading) + "/" + std::to_string(grid.cells.size()) +
                                " cells with mean tau > 1 (max " + fmt("%.2f", max_tau) + ") on r 1.2..2.0 x v 10..50"};
}

outcome oracle_equivalence(run_audit& audit) {
    std::size_t runs = 0, cascades = 0, deep = 0, mismatches = 0;
    for (std::size_t n = 1; n <= 6; ++n) {
        for (std::size_t m = 1; m <= 3; ++m) {
            for (std::size_t s = 1; s <= m; ++s) {
                for (double median : {20.0, 2000.0}) {
                    for (std::uint64_t seed = 0; seed < 3; ++seed) {
                        for (int ki = 0; ki < 10; ++ki) {
                            for (int ri = 0; ri < 10; ++ri) {
                                mc::market_params p;
                                p.n_investors = n;
                                p.n_shares = m;
                                p.diversity_s = s;
                                p.price_median = median;
                                p.initial_margin_k = 0.1 * ki;
                                p.maintenance_r = 1.0 + 0.5 * ri;
                                p.seed = seed * 1000 + n * 100 + m * 10 + s;

                                auto market = mc::build_market(p);
                                const auto p0 = market.initial_prices;
                                std::vector<std::vector<int>> holds(n);
                                for (std::size_t i = 0; i < n; ++i)
                                    for (auto j : market.holdings_of(i)) holds[i].push_back(static_cast<int>(j));
                                const auto res = mc::run_cascade(market, p);
                                audit.check(market, res, p.price_impact_eta);
                                const auto ref = naive::simulate(p0, holds, p.initial_margin_k, p.maintenance_r,
                                                                 p.price_impact_eta, res.shock.declines);

                                std::vector<int> active(res.active_trajectory.begin(), res.active_trajectory.end());
                                bool same = res.tau == static_cast<std::size_t>(ref.tau) && res.p_inf == ref.p_inf &&
                                            res.n_inf == static_cast<std::size_t>(ref.n_inf) &&
                                            res.index_trajectory == ref.index && active == ref.active &&
                                            res.steps.size() == ref.liquidated.size();
                                for (std::size_t t = 0; same && t < res.steps.size(); ++t)
                                    same = std::vector<int>(res.steps[t].liquidated.begin(),
                                                            res.steps[t].liquidated.end()) == ref.liquidated[t];
                                ++runs;
                                cascades += res.tau > 1;
                                deep += res.tau > 2;
                                mismatches += !same;
                            }
                        }
                    }
                }
            }
        }
    }
    return {mismatches == 0, std::to_string(runs) + " runs, " + std::to_string(mismatches) + " mismatches (" +
                                 std::to_string(cascades) + " with tau > 1, " + std::to_string(deep) + " with tau > 2)"};
}

outcome monotone_couplings(run_audit& audit) {
    std::size_t violations = 0;
    auto run = [&](double k, double r, std::uint64_t seed) {
        auto p = reference(k, r);
        p.seed = seed;
        auto market = mc::build_market(p);
        const auto res = mc::run_cascade(market, p);
        audit.check(market, res, p.price_impact_eta);
        return res.p_inf;
    };
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        double last = INFINITY;
        for (double r : {1.3, 1.5, 1.7, 1.9}) {
            const double p = run(0.5, r, seed);
            violations += p > last;
            last = p;
        }
        last = -INFINITY;
        for (double k : {0.40, 0.48, 0.56, 0.64}) {
            const double p = run(k, 1.6, seed);
            violations += p < last;
            last = p;
        }
    }
    return {violations == 0, "10 seeds x (4 r + 4 k) runs, " + std::to_string(violations) + " order violations"};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

outcome determinism(mc::execution_options exec) {
    const auto dir = fs::temp_directory_path() / "margin_cascade_acceptance";
    fs::create_directories(dir);
    const std::vector<std::string> docs = {
        R"({"experiment": "run", "seed": 11, "market": {"initial_margin_k": 0.505, "maintenance_r": 1.6}})",
        R"({"experiment": "sweep", "seed": 12, "replicas": 3,
            "sweep": {"axis": "k", "range": {"from": 0.45, "to": 0.55, "step": 0.025}}})",
        R"({"experiment": "phase", "seed": 13, "replicas": 2,
            "market": {"n_investors": 4000, "n_shares": 200},
            "phase": {"axis1": {"axis": "r", "values": [1.4, 1.6, 1.8]}, "axis2": {"axis": "v", "values": [20, 40]}}})",
        R"({"experiment": "diversify", "seed": 14, "replicas": 2, "market": {"initial_margin_k": 0.4, "maintenance_r": 1.7},
            "diversify": {"values": [2, 10, 40]}})",
        R"({"experiment": "margin-times", "seed": 15, "replicas": 2,
            "market": {"initial_margin_k": 0.5, "maintenance_r": 1.8, "volatility_v": 50}})",
    };
    std::size_t differing = 0;
    for (std::size_t d = 0; d < docs.size(); ++d) {
        std::string outputs[2], summaries[2];
        for (int pass = 0; pass < 2; ++pass) {
            auto cfg = mc::parse_config(docs[d]);
            cfg.output = (dir / ("out" + std::to_string(d) + "_" + std::to_string(pass) + ".csv")).string();
            const auto summary = (dir / ("sum" + std::to_string(d) + "_" + std::to_string(pass) + ".json")).string();
            exec.threads = pass == 0 ? 1 : 3;
            mc::execute(cfg, exec, summary);
            outputs[pass] = slurp(cfg.output);
            summaries[pass] = slurp(summary);
        }
        differing += outputs[0] != outputs[1] || summaries[0] != summaries[1] || outputs[0].empty();
    }
    fs::remove_all(dir);
    return {differing == 0, std::to_string(docs.size()) + " configs executed twice (1 and 3 threads), " +
                                std::to_string(differing) + " with differing bytes"};
}

}  // namespace

int main(int argc, char** argv) {
    std::size_t threads = 0;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--threads" && i + 1 < argc) threads = std::strtoull(argv[++i], nullptr, 10);
    }

    run_audit audit;
    mc::execution_options exec;
    exec.threads = threads;
    exec.observer = audit.observer();

    struct criterion {
        const char* name;
        std::function<outcome()> body;
    };
    const std::vector<criterion> criteria = {
        {"AC1 critical initial margin k_c", [&] { return critical_margin(exec); }},
        {"AC2 no cascade at k = 0.6", [&] { return no_cascade_regime(exec); }},
        {"AC3 p_inf plateau for k in 0.40..0.50", [&] { return collapse_plateau(exec); }},
        {"AC4 p_inf non-increasing in s", [&] { return diversification(exec); }},
        {"AC5 r_c(k) non-decreasing on r-k grid", [&] { return phase_boundary(exec); }},
        {"AC6 s = 2 r-v grid has mean tau = 1", [&] { return small_diversity_stable(exec); }},
        {"AC7 naive-oracle equivalence", [&] { return oracle_equivalence(audit); }},
        {"AC8 monotone couplings in r and k", [&] { return monotone_couplings(audit); }},
        {"AC9 sell-order conservation and closed form",
         [&] {
             const bool pass = audit.conservation_failures() == 0 && audit.closed_form_failures() == 0;
             return outcome{pass, std::to_string(audit.runs()) + " runs audited (" +
                                      std::to_string(audit.closed_form_runs()) + " unclamped), " +
                                      std::to_string(audit.conservation_failures()) + " conservation and " +
                                      std::to_string(audit.closed_form_failures()) + " closed-form failures"};
         }},
        {"AC10 byte-identical outputs", [&] { return determinism(exec); }},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        outcome o;
        try {
            o = c.body();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("[%s] %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs);
        std::fflush(stdout);
        failures += !o.pass;
    }
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
