// memheat <subcommand> --config <file> [--out <dir>] [--jobs <n>] [--cache <dir>]

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "memheat/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"memheat: kernel, mild solutions and decay rates for the fully nonlocal heat equation"};
    app.require_subcommand(1);

    std::string config, out = ".", cache;
    int jobs = 0;
    const char* names[][2] = {
        {"exponents", "tabulate theta, sigma*, sigma(p), p_c, q_c"},
        {"profile", "build (or load) the kernel profile and write it as CSV"},
        {"kernel-check", "check the two-sided profile bounds"},
        {"simulate", "measure norm series for every region, p and gamma"},
        {"verify", "compare measured rates with the predicted rate rows"},
        {"ksz", "subcritical limit check against M_inf Y"},
    };
    for (auto& [name, help] : names) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config, "experiment config file")->required();
        sub->add_option("--out", out, "output directory");
        sub->add_option("--jobs", jobs, "worker threads (0: all cores)");
        sub->add_option("--cache", cache, "profile cache directory");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : memheat::kExitUsage;
    }
    const std::string sub = app.get_subcommands().front()->get_name();
    return memheat::run_config(sub, config, out, cache, jobs, std::cerr);
}
