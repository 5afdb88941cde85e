#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "funnel/cli/app.hpp"

int main(int argc, char** argv) {
    CLI::App app{"funnelctl: funnel control with input saturation, simulation and verification"};
    app.require_subcommand(1);

    std::string which, out, config, grid, trace;

    auto* rep = app.add_subcommand("replicate", "run a built-in scenario (case1, case2, blowup) and its checks");
    rep->add_option("case", which, "scenario")->required()->check(CLI::IsMember({"case1", "case2", "blowup"}));
    rep->add_option("--out", out, "output directory (default: replicate-<case>)");

    auto* run = app.add_subcommand("run", "simulate a config and check the trace");
    run->add_option("--config", config, "YAML config")->required();
    run->add_option("--out", out, "output directory")->required();

    auto* sw = app.add_subcommand("sweep", "run a config over a parameter grid");
    sw->add_option("--config", config, "YAML config")->required();
    sw->add_option("--grid", grid, "grid spec: key=v1,v2;key2=v3 with dotted config paths")->required();
    sw->add_option("--out", out, "output directory")->required();

    auto* ver = app.add_subcommand("verify", "check a stored trace against funnel parameters");
    ver->add_option("--trace", trace, "trace CSV")->required();
    ver->add_option("--params", config, "YAML config holding the controller section")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : funnel::cli::exit_config;
    }

    try {
        if (*rep) return funnel::cli::cmd_replicate(which, out.empty() ? "replicate-" + which : out);
        if (*run) return funnel::cli::cmd_run(config, out);
        if (*sw) return funnel::cli::cmd_sweep(config, grid, out);
        if (*ver) return funnel::cli::cmd_verify(trace, config);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
