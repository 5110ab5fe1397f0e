#ifndef MARGIN_CASCADE_DRIVER_HPP
#define MARGIN_CASCADE_DRIVER_HPP

#include <string>

#include "margin_cascade/config.hpp"
#include "margin_cascade/experiments.hpp"
#include "margin_cascade/io.hpp"

namespace margin_cascade {

/// Runs the experiment selected by cfg, writes its table to cfg.output and, when
/// summary_path is non-empty, the JSON summary next to it.
inline void execute(const run_config& cfg, const execution_options& options = {},
                    const std::string& summary_path = {}) {
    auto emit = [&](const auto& result) {
        write_to(cfg.output, result);
        if (!summary_path.empty()) write_text(summary_path, summary_json(result).dump(2) + "\n");
    };
    switch (cfg.kind) {
        case experiment::run:
            emit(simulate(cfg.market));
            break;
        case experiment::sweep:
        case experiment::diversify:
            emit(run_sweep(*cfg.sweep, options));
            break;
        case experiment::phase:
            emit(phase_diagram(*cfg.phase_axis1, *cfg.phase_axis2, cfg.market, cfg.replicas, cfg.master_seed, options));
            break;
        case experiment::margin_times:
            emit(margin_times_study(cfg.market, cfg.replicas, cfg.master_seed, options));
            break;
    }
}

}  // namespace margin_cascade

#endif  // MARGIN_CASCADE_DRIVER_HPP
