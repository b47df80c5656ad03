/// @file scns_cli.cpp
/// @brief Command-line front end: run, check, converge, dump-theta, dump-basis.

#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "scns/commands.hpp"

namespace {

std::string key_footer() {
    std::ostringstream os;
    os << "\nConfig keys (flat 'key = value' lines under [section] headers, '#' comments):\n";
    for (const auto& [k, doc] : scns::config_key_docs()) os << "  " << k << "\n      " << doc << '\n';
    os << "\nExit codes: 0 ok, 1 runtime failure, 2 configuration error.\n";
    return os.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Regularised stochastic chemotaxis-fluid scheme: simulation and estimate checks"};
    app.footer(key_footer());
    app.require_subcommand(1);

    scns::CommandOptions opt;
    int paths = 0, n_steps = 0, workers = -1;
    std::uint64_t seed = 0;
    std::string out, grid;

    struct Sub {
        const char* name;
        const char* help;
    };
    const Sub subs[] = {
        {"run", "integrate an ensemble and write trajectories, summaries and seeds"},
        {"check", "run the invariant and estimate suite; nonzero exit on a hard failure"},
        {"converge", "refinement study over converge.N_list on coupled Brownian paths"},
        {"dump-theta", "tabulate the truncation family theta_m and the cutoff F_m"},
        {"dump-basis", "compute the discrete Stokes basis and write its modes"},
    };
    for (const auto& s : subs) {
        CLI::App* sc = app.add_subcommand(s.name, s.help);
        sc->add_option("--config", opt.config_path, "config file")->check(CLI::ExistingFile);
        sc->add_option("--paths", paths, "number of paths (overrides ensemble.paths)")->check(CLI::PositiveNumber);
        sc->add_option("--seed", seed, "base seed (overrides ensemble.seed)");
        sc->add_option("--out", out, "output directory (overrides output.dir)");
        sc->add_option("--n-steps", n_steps, "time steps (overrides scheme.N)")->check(CLI::PositiveNumber);
        sc->add_option("--grid", grid, "cells: N or AxB[xC] (overrides grid.cells)");
        sc->add_option("--workers", workers, "worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
        sc->add_flag("--quiet", opt.quiet, "suppress console output");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : scns::kExitConfig;
    }

    CLI::App* chosen = app.get_subcommands().front();
    if (chosen->count("--paths")) opt.paths = paths;
    if (chosen->count("--seed")) opt.seed = seed;
    if (chosen->count("--out")) opt.out = out;
    if (chosen->count("--n-steps")) opt.n_steps = n_steps;
    if (chosen->count("--grid")) opt.grid = grid;
    if (chosen->count("--workers")) opt.workers = workers;
    return scns::run_command(chosen->get_name(), opt, std::cout, std::cerr);
}
