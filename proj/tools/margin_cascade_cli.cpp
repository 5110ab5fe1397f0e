// Command-line driver: margin_cascade <run|sweep|phase|diversify|margin-times> [options]

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "margin_cascade/margin_cascade.hpp"

namespace mc = margin_cascade;

namespace {

struct cli_options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> replicas;
    std::string out;
    std::string summary_path;
    std::size_t threads = 0;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw mc::config_error("--config", "cannot read '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void run_command(mc::experiment kind, const cli_options& opts) {
    auto cfg = opts.config_path.empty() ? mc::default_config(kind) : mc::parse_config(read_file(opts.config_path), kind);
    if (opts.seed) mc::override_seed(cfg, *opts.seed);
    if (opts.replicas) mc::override_replicas(cfg, *opts.replicas);
    if (!opts.out.empty()) cfg.output = opts.out;

    mc::execution_options exec;
    exec.threads = opts.threads;
    mc::execute(cfg, exec, opts.summary_path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Margin-trading cascading failure simulator"};
    app.require_subcommand(1);

    cli_options opts;
    std::optional<mc::experiment> chosen;

    const std::pair<mc::experiment, const char*> commands[] = {
        {mc::experiment::run, "Single cascade; writes the per-step time series"},
        {mc::experiment::sweep, "Replica-averaged sweep of one parameter"},
        {mc::experiment::phase, "Two-parameter phase diagram"},
        {mc::experiment::diversify, "Sweep over the diversity s"},
        {mc::experiment::margin_times, "Price decline by margin times (share degree)"},
    };
    for (const auto& [kind, help] : commands) {
        auto* sub = app.add_subcommand(std::string(mc::experiment_name(kind)), help);
        sub->add_option("--config", opts.config_path, "JSON configuration file");
        sub->add_option("--seed", opts.seed, "Master seed (overrides the config)");
        sub->add_option("--out", opts.out, "Output table path, '-' for stdout");
        sub->add_option("--replicas", opts.replicas, "Replicas per cell (overrides the config)");
        sub->add_option("--summary", opts.summary_path, "Also write a JSON summary to this path");
        sub->add_option("--threads", opts.threads, "Worker threads, 0 = all cores");
        sub->callback([&chosen, kind = kind] { chosen = kind; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "margin_cascade: error: " << e.what() << '\n';
        return 2;
    }

    try {
        run_command(*chosen, opts);
    } catch (const std::exception& e) {
        std::cerr << "margin_cascade: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
