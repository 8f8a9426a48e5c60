// Command-line front end: parses flags, then hands one subcommand to the
// orchestration layer.  Every flag can also come from the environment with
// the EXBOUND_ prefix (EXBOUND_CONFIG, EXBOUND_OUT, EXBOUND_WORKERS,
// EXBOUND_LOG_LEVEL); explicit flags win over environment values.
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "exbound/config.hpp"
#include "exbound/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{std::string(exbound::kToolName) +
                 " - early-exercise boundary and pricing toolkit"};
    app.set_version_flag("--version", std::string(exbound::kToolName) + " " +
                                          exbound::kToolVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    int workers = 0;
    std::string log_level = "info";

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path,
                        "configuration file (see configs/schema.md)")
            ->envname("EXBOUND_CONFIG")
            ->required();
        cmd->add_option("--out", out_dir,
                        "output directory (defaults to the config's "
                        "output.directory, then ./out)")
            ->envname("EXBOUND_OUT");
        cmd->add_option("--workers", workers,
                        "parallel sweep entries; 0 = hardware threads")
            ->envname("EXBOUND_WORKERS")
            ->check(CLI::NonNegativeNumber);
        cmd->add_option("--log-level", log_level,
                        "stderr verbosity: error|warn|info|debug")
            ->envname("EXBOUND_LOG_LEVEL")
            ->check(CLI::IsMember({"error", "warn", "info", "debug"}));
    };

    add_common(app.add_subcommand(
        "regimes", "classify the exercise-region topology over time"));
    add_common(app.add_subcommand(
        "boundary", "solve the early-exercise boundaries"));
    add_common(app.add_subcommand(
        "price", "boundary solve plus a put pricing grid"));
    add_common(app.add_subcommand(
        "hedge",
        "digital-option decomposition of the premium (mean-reverting model)"));
    add_common(app.add_subcommand(
        "verify", "compare the solver against the finite-difference oracle"));
    add_common(app.add_subcommand(
        "sweep", "repeat boundary+price across a volatility list"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        // Help/version exit with 0; every other parse problem is a
        // configuration error by the documented exit-code contract.
        return code == 0 ? exbound::kExitOk : exbound::kExitConfig;
    }

    exbound::RunOptions opt;
    opt.config_path = config_path;
    opt.out_dir = out_dir;
    opt.workers = workers;
    try {
        opt.log_level = exbound::parse_log_level(log_level);
    } catch (const exbound::ConfigError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return exbound::kExitConfig;
    }

    const std::string sub = app.get_subcommands().front()->get_name();
    return exbound::run_subcommand(sub, opt);
}
