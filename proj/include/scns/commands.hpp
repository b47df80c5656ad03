/// @file commands.hpp
/// @brief Subcommands behind the command-line tool. Each returns the process
///        exit code: 0 ok, 1 runtime failure, 2 configuration error.

#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "scns/config.hpp"

namespace scns {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

/// Command-line overrides applied on top of the config file.
struct CommandOptions {
    std::string config_path;  ///< empty: built-in defaults
    std::optional<int> paths;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> n_steps;
    std::optional<std::string> grid;
    std::optional<int> workers;
    bool quiet = false;
};

/// Loads the config and applies overrides; throws ConfigError.
RunConfig resolve_config(const CommandOptions& opt);

/// One-line header carried by every output file.
std::string output_header(const RunConfig& rc, const std::string& command);

int cmd_run(const CommandOptions& opt, std::ostream& out, std::ostream& err);
int cmd_check(const CommandOptions& opt, std::ostream& out, std::ostream& err);
int cmd_converge(const CommandOptions& opt, std::ostream& out, std::ostream& err);
int cmd_dump_theta(const CommandOptions& opt, std::ostream& out, std::ostream& err);
int cmd_dump_basis(const CommandOptions& opt, std::ostream& out, std::ostream& err);

/// Dispatches by name ("run", "check", "converge", "dump-theta", "dump-basis").
int run_command(const std::string& name, const CommandOptions& opt, std::ostream& out, std::ostream& err);

}  // namespace scns
