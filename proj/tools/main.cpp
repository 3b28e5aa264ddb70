#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "aniheat/aniheat.hpp"

namespace {

struct CommonOptions {
    std::string config_path;
    std::string out;
    int threads = 1;
    std::uint64_t seed = 0;
    bool seed_given = false;
    bool verbose = false;
};

void add_common(CLI::App* cmd, CommonOptions& opt) {
    cmd->add_option("--config", opt.config_path, "experiment config JSON")->required();
    cmd->add_option("--out", opt.out, "output directory (overrides the config)");
    cmd->add_option("--threads", opt.threads, "worker threads for net members")
        ->check(CLI::Range(1, 64));
    cmd->add_option("--seed", opt.seed, "override the config seed")
        ->each([&opt](const std::string&) { opt.seed_given = true; });
    cmd->add_flag("--verbose", opt.verbose, "chatty progress output");
}

std::filesystem::path resolve_out(const aniheat::ExperimentConfig& cfg, const CommonOptions& opt,
                                  bool required) {
    if (!opt.out.empty()) return opt.out;
    if (!cfg.output_dir.empty()) return cfg.output_dir;
    if (required)
        throw aniheat::ConfigError("no output directory: pass --out or set \"output\" in the config");
    return {};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string(aniheat::kToolName) +
                 " - exact Gaussian propagators, Duhamel solves, estimate checks and very weak "
                 "solution nets for the anisotropic heat equation"};
    app.set_version_flag("--version", aniheat::kToolVersion);
    app.require_subcommand(1);

    CommonOptions opt;
    CLI::App* solve = app.add_subcommand("solve", "classical Duhamel solve of the Cauchy problem");
    CLI::App* net = app.add_subcommand("net", "very weak run: per-eps solves, classification, "
                                              "consistency");
    CLI::App* verify = app.add_subcommand("verify", "run the invariant battery against the config");
    add_common(solve, opt);
    add_common(net, opt);
    add_common(verify, opt);

    CLI11_PARSE(app, argc, argv);

    try {
        aniheat::ExperimentConfig cfg = aniheat::ExperimentConfig::load(opt.config_path);
        if (opt.seed_given) cfg.seed = opt.seed;
        if (solve->parsed())
            return aniheat::run_solve(cfg, resolve_out(cfg, opt, true), opt.threads, opt.verbose,
                                      std::cout);
        if (net->parsed())
            return aniheat::run_net(cfg, resolve_out(cfg, opt, true), opt.threads, opt.verbose,
                                    std::cout);
        const std::filesystem::path out = resolve_out(cfg, opt, false);
        return aniheat::run_verify(cfg, out.empty() ? std::nullopt : std::optional(out), opt.threads,
                                   opt.verbose, std::cout);
    } catch (const aniheat::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const aniheat::Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
