#include "gfsim/cli.hpp"

#include <CLI11.hpp>

int main(int argc, char** argv) {
    CLI::App app{"gfsim - grid-forming converter dynamics toolkit"};
    app.set_help_flag("--help", "print help");
    app.require_subcommand(1);

    std::string config;
    gfsim::CliOptions options;
    options.record_every = gfsim::record_every_from_env();
    double step_h = 0.0;
    double horizon = 0.0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->set_help_flag("--help", "print help");
        cmd->add_option("config", config, "scenario configuration file")->required();
        cmd->add_option("--out", options.out_dir, "output directory")->capture_default_str();
    };

    CLI::App* sim = app.add_subcommand("simulate", "run one scenario");
    add_common(sim);
    sim->add_option("--h", step_h, "integration step override [s]");
    sim->add_option("--horizon", horizon, "post-event horizon override [s]");

    CLI::App* swp = app.add_subcommand("sweep", "run the scenario's sweep grid");
    add_common(swp);

    CLI::App* ana = app.add_subcommand("analyze2c", "two-converter certification");
    add_common(ana);

    CLI11_PARSE(app, argc, argv);

    if (sim->parsed()) {
        if (step_h > 0.0) options.step_h = step_h;
        if (horizon > 0.0) options.horizon_s = horizon;
        return gfsim::cmd_simulate(config, options);
    }
    if (swp->parsed()) return gfsim::cmd_sweep(config, options);
    return gfsim::cmd_analyze_two_converter(config, options);
}
