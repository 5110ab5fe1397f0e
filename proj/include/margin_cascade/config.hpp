#ifndef MARGIN_CASCADE_CONFIG_HPP
#define MARGIN_CASCADE_CONFIG_HPP

/// \file config.hpp
///
/// JSON run configuration. Schema (every key optional unless noted):
///
///   {
///     "experiment": "run" | "sweep" | "phase" | "diversify" | "margin-times",
///     "seed": <u64>,                       master seed (run: the market seed itself)
///     "replicas": <n >= 1>,                default 20
///     "output": "<path>",                  default "-" (stdout)
///     "market": { "n_investors", "n_shares", "diversity_s", "initial_margin_k",
///                 "maintenance_r", "volatility_v", "price_impact_eta",
///                 "price_median", "price_sigma" },
///     "sweep":     { "axis": "k|r|v|s", <values> },          required for sweep
///     "phase":     { "axis1": { "axis": ..., <values> },
///                    "axis2": { "axis": ..., <values> } },   required for phase
///     "diversify": { <values> }                              required for diversify
///   }
///
/// <values> is either "values": [x, ...] or "range": {"from": a, "to": b, "step": h}.
/// A range expands to a, a+h, ..., with both endpoints included when (b-a)/h is an
/// integer (up to 1e-9 relative slack); each value is rounded to 12 decimals.
/// Unknown keys are errors. Blocks for experiments other than the selected one are errors.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "margin_cascade/errors.hpp"
#include "margin_cascade/experiments.hpp"
#include "margin_cascade/market.hpp"

namespace margin_cascade {

enum class experiment { run, sweep, phase, diversify, margin_times };

inline std::string_view experiment_name(experiment e) {
    switch (e) {
        case experiment::run: return "run";
        case experiment::sweep: return "sweep";
        case experiment::phase: return "phase";
        case experiment::diversify: return "diversify";
        case experiment::margin_times: return "margin-times";
    }
    return "?";
}

inline std::optional<experiment> parse_experiment(std::string_view name) {
    for (auto e : {experiment::run, experiment::sweep, experiment::phase, experiment::diversify,
                   experiment::margin_times})
        if (experiment_name(e) == name) return e;
    return std::nullopt;
}

struct run_config {
    experiment kind = experiment::run;
    market_params market;
    std::uint64_t master_seed = 0;
    std::size_t replicas = 20;
    std::string output = "-";

    /// sweep / diversify: the swept axis and its values.
    std::optional<sweep_spec> sweep;
    /// phase: both axes.
    std::optional<grid_axis> phase_axis1;
    std::optional<grid_axis> phase_axis2;
};

/// Inclusive arithmetic range from..to with the given step.
inline std::vector<double> expand_range(double from, double to, double step, const std::string& field = "range") {
    if (!std::isfinite(from) || !std::isfinite(to) || !std::isfinite(step))
        throw config_error(field, "from/to/step must be finite");
    if (!(step > 0.0)) throw config_error(field + ".step", "must be > 0");
    if (to < from) throw config_error(field + ".to", "must be >= from");
    const double span = (to - from) / step;
    if (span > 1e6) throw config_error(field, "expands to more than 1e6 values");
    const auto n = static_cast<std::size_t>(std::floor(span + 1e-9 * std::max(1.0, span))) + 1;
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i)
        values[i] = std::round((from + static_cast<double>(i) * step) * 1e12) / 1e12;
    return values;
}

namespace detail {

using json = nlohmann::json;

inline void reject_unknown(const json& obj, const std::string& path, std::initializer_list<std::string_view> known) {
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (auto k : known) ok = ok || item.key() == k;
        if (!ok) throw config_error(path.empty() ? item.key() : path + "." + item.key(), "unknown key");
    }
}

inline const json& require_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw config_error(path, "must be an object");
    return j;
}

inline double get_real(const json& j, const std::string& path) {
    if (!j.is_number()) throw config_error(path, "must be a number");
    return j.get<double>();
}

inline std::uint64_t get_count(const json& j, const std::string& path) {
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer()) throw config_error(path, "must be non-negative");
    if (j.is_number_float()) {
        const double x = j.get<double>();
        if (x >= 0.0 && x == std::floor(x) && x < 1.8e19) return static_cast<std::uint64_t>(x);
    }
    throw config_error(path, "must be a non-negative integer");
}

inline std::vector<double> get_values(const json& block, const std::string& path) {
    const bool has_values = block.contains("values");
    const bool has_range = block.contains("range");
    if (has_values == has_range) throw config_error(path, "exactly one of 'values' or 'range' is required");
    if (has_values) {
        const auto& arr = block.at("values");
        if (!arr.is_array() || arr.empty()) throw config_error(path + ".values", "must be a non-empty array");
        std::vector<double> out;
        for (std::size_t i = 0; i < arr.size(); ++i)
            out.push_back(get_real(arr[i], path + ".values[" + std::to_string(i) + "]"));
        return out;
    }
    const auto& range = require_object(block.at("range"), path + ".range");
    reject_unknown(range, path + ".range", {"from", "to", "step"});
    for (auto key : {"from", "to", "step"})
        if (!range.contains(key)) throw config_error(path + ".range." + key, "missing");
    return expand_range(get_real(range.at("from"), path + ".range.from"), get_real(range.at("to"), path + ".range.to"),
                        get_real(range.at("step"), path + ".range.step"), path + ".range");
}

inline axis get_axis(const json& block, const std::string& path) {
    if (!block.contains("axis")) throw config_error(path + ".axis", "missing");
    const auto& a = block.at("axis");
    if (!a.is_string()) throw config_error(path + ".axis", "must be a string");
    const auto parsed = parse_axis(a.get<std::string>());
    if (!parsed) throw config_error(path + ".axis", "must be one of k, r, v, s");
    return *parsed;
}

inline grid_axis get_grid_axis(const json& j, const market_params& base, const std::string& path) {
    const auto& block = require_object(j, path);
    reject_unknown(block, path, {"axis", "values", "range"});
    grid_axis out{get_axis(block, path), get_values(block, path)};
    validated_axis(base, out.param, out.values, path + ".values");
    return out;
}

inline void read_market(const json& j, market_params& m) {
    const auto& block = require_object(j, "market");
    reject_unknown(block, "market",
                   {"n_investors", "n_shares", "diversity_s", "initial_margin_k", "maintenance_r", "volatility_v",
                    "price_impact_eta", "price_median", "price_sigma"});
    auto count = [&](const char* key, std::size_t& field) {
        if (block.contains(key)) field = static_cast<std::size_t>(get_count(block.at(key), std::string("market.") + key));
    };
    auto real = [&](const char* key, double& field) {
        if (block.contains(key)) field = get_real(block.at(key), std::string("market.") + key);
    };
    count("n_investors", m.n_investors);
    count("n_shares", m.n_shares);
    count("diversity_s", m.diversity_s);
    real("initial_margin_k", m.initial_margin_k);
    real("maintenance_r", m.maintenance_r);
    real("volatility_v", m.volatility_v);
    real("price_impact_eta", m.price_impact_eta);
    real("price_median", m.price_median);
    real("price_sigma", m.price_sigma);
    try {
        validate(m);
    } catch (const config_error& e) {
        throw config_error("market." + e.field(), std::string(e.what()).substr(e.field().size() + 2));
    }
}

}  // namespace detail

/// Parses and validates a configuration document. `selected` is the experiment named
/// on the command line, if any; it must agree with the document's "experiment" key
/// when both are present.
inline run_config parse_config(std::string_view text, std::optional<experiment> selected = std::nullopt) {
    using detail::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw config_error("<document>", std::string("malformed JSON: ") + e.what());
    }
    detail::require_object(doc, "<document>");
    detail::reject_unknown(doc, "",
                           {"experiment", "seed", "replicas", "output", "market", "sweep", "phase", "diversify"});

    run_config cfg;
    std::optional<experiment> declared;
    if (doc.contains("experiment")) {
        const auto& e = doc.at("experiment");
        if (!e.is_string()) throw config_error("experiment", "must be a string");
        declared = parse_experiment(e.get<std::string>());
        if (!declared) throw config_error("experiment", "must be one of run, sweep, phase, diversify, margin-times");
    }
    if (declared && selected && *declared != *selected)
        throw config_error("experiment", "document selects '" + std::string(experiment_name(*declared)) +
                                             "' but command selects '" + std::string(experiment_name(*selected)) + "'");
    if (!declared && !selected) throw config_error("experiment", "missing");
    cfg.kind = declared ? *declared : *selected;

    if (doc.contains("seed")) cfg.master_seed = detail::get_count(doc.at("seed"), "seed");
    if (doc.contains("replicas")) {
        cfg.replicas = static_cast<std::size_t>(detail::get_count(doc.at("replicas"), "replicas"));
        if (cfg.replicas < 1) throw config_error("replicas", "must be >= 1");
    }
    if (doc.contains("output")) {
        if (!doc.at("output").is_string()) throw config_error("output", "must be a string");
        cfg.output = doc.at("output").get<std::string>();
    }
    if (doc.contains("market")) detail::read_market(doc.at("market"), cfg.market);
    cfg.market.seed = cfg.master_seed;

    const auto needs = [&](const char* block, experiment owner) {
        if (cfg.kind == owner && !doc.contains(block))
            throw config_error(block, "required for experiment '" + std::string(experiment_name(owner)) + "'");
        if (cfg.kind != owner && doc.contains(block))
            throw config_error(block, "not used by experiment '" + std::string(experiment_name(cfg.kind)) + "'");
    };
    needs("sweep", experiment::sweep);
    needs("phase", experiment::phase);
    needs("diversify", experiment::diversify);

    if (cfg.kind == experiment::sweep) {
        const auto& block = detail::require_object(doc.at("sweep"), "sweep");
        detail::reject_unknown(block, "sweep", {"axis", "values", "range"});
        sweep_spec spec{cfg.market, detail::get_axis(block, "sweep"), detail::get_values(block, "sweep"),
                        cfg.replicas, cfg.master_seed};
        validated_axis(spec.base, spec.swept, spec.values, "sweep.values");
        cfg.sweep = std::move(spec);
    } else if (cfg.kind == experiment::diversify) {
        const auto& block = detail::require_object(doc.at("diversify"), "diversify");
        detail::reject_unknown(block, "diversify", {"values", "range"});
        sweep_spec spec{cfg.market, axis::s, detail::get_values(block, "diversify"), cfg.replicas, cfg.master_seed};
        validated_axis(spec.base, spec.swept, spec.values, "diversify.values");
        cfg.sweep = std::move(spec);
    } else if (cfg.kind == experiment::phase) {
        const auto& block = detail::require_object(doc.at("phase"), "phase");
        detail::reject_unknown(block, "phase", {"axis1", "axis2"});
        for (auto key : {"axis1", "axis2"})
            if (!block.contains(key)) throw config_error(std::string("phase.") + key, "missing");
        cfg.phase_axis1 = detail::get_grid_axis(block.at("axis1"), cfg.market, "phase.axis1");
        cfg.phase_axis2 = detail::get_grid_axis(block.at("axis2"), cfg.market, "phase.axis2");
        if (cfg.phase_axis1->param == cfg.phase_axis2->param)
            throw config_error("phase.axis2.axis", "must differ from phase.axis1.axis");
    }
    return cfg;
}

/// Built-in configuration used when no document is given. Reference market
/// parameters, 20 replicas, and per-experiment defaults:
///   run           k = 0.5, r = 1.6
///   sweep         k from 0.40 to 0.65 step 0.005, r = 1.6
///   phase         r from 1.2 to 2.0 step 0.05 by k from 0.3 to 0.7 step 0.02
///   diversify     s in {2, 5, 10, 20, 40}, k = 0.4, r = 1.7
///   margin-times  k = 0.5, r = 1.8, v = 50
inline run_config default_config(experiment kind) {
    run_config cfg;
    cfg.kind = kind;
    switch (kind) {
        case experiment::run: break;
        case experiment::sweep:
            cfg.sweep = sweep_spec{cfg.market, axis::k, expand_range(0.40, 0.65, 0.005), cfg.replicas, cfg.master_seed};
            break;
        case experiment::phase:
            cfg.phase_axis1 = grid_axis{axis::r, expand_range(1.2, 2.0, 0.05)};
            cfg.phase_axis2 = grid_axis{axis::k, expand_range(0.3, 0.7, 0.02)};
            break;
        case experiment::diversify:
            cfg.market.initial_margin_k = 0.4;
            cfg.market.maintenance_r = 1.7;
            cfg.sweep = sweep_spec{cfg.market, axis::s, {2, 5, 10, 20, 40}, cfg.replicas, cfg.master_seed};
            break;
        case experiment::margin_times:
            cfg.market.maintenance_r = 1.8;
            cfg.market.volatility_v = 50.0;
            break;
    }
    return cfg;
}

/// Applies a new master seed / replica count to every block that carries one.
inline void override_seed(run_config& cfg, std::uint64_t seed) {
    cfg.master_seed = seed;
    cfg.market.seed = seed;
    if (cfg.sweep) {
        cfg.sweep->master_seed = seed;
        cfg.sweep->base.seed = seed;
    }
}

inline void override_replicas(run_config& cfg, std::size_t replicas) {
    if (replicas < 1) throw config_error("replicas", "must be >= 1");
    cfg.replicas = replicas;
    if (cfg.sweep) cfg.sweep->replicas = replicas;
}

}  // namespace margin_cascade

#endif  // MARGIN_CASCADE_CONFIG_HPP
