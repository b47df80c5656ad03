/// @file config.hpp
/// @brief Run configuration: a flat `key = value` format with [sections],
///        initial-data presets and a canonical hash of the resolved settings.

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "scns/params.hpp"
#include "scns/stepper.hpp"

namespace scns {

/// Malformed or out-of-range configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raw parsed file: "section.key" -> value text (quotes stripped).
using ConfigMap = std::map<std::string, std::string>;

/// Parses the text format; `source` names the input in error messages.
ConfigMap parse_config_text(const std::string& text, const std::string& source = "config");

/// A scalar initial field or potential.
struct FieldPreset {
    /// "zero", "constant", "gaussian-bump", "checkerboard" (scalars);
    /// "linear" is additionally allowed for the potential.
    std::string preset = "zero";
    double amplitude = 0.0;
    double offset = 0.0;
    std::array<double, 3> center{0.5, 0.5, 0.5};  ///< fractions of the box
    double width = 0.15;                          ///< fraction of the shortest side
    int tiles = 4;                                ///< checkerboard tiles per axis
    int axis = -1;                                ///< linear potential axis (-1: last)
};

struct VelocityPreset {
    std::string preset = "zero";  ///< "zero" or "modes"
    double amplitude = 0.0;       ///< coefficient of mode i is amplitude / (i + 1)
    int count = 0;                ///< number of modes set (0: all)
};

struct RunConfig {
    SchemeParams scheme;  ///< grid and Phi filled in by to_params()
    int dim = 2;
    std::array<int, 3> cells{32, 32, 1};
    std::array<double, 3> lengths{1.0, 1.0, 1.0};
    FieldPreset c0, n0, phi;
    VelocityPreset u0;
    std::string kernels = "auto";
    std::string basis_cache;

    int paths = 1;
    std::uint64_t seed = 0;
    int workers = 0;  ///< not part of the resolved config or its hash
    int keep_trajectories = 1;
    bool increments = true;
    std::vector<int> N_list = {16, 32, 64, 128};
    int cancellation_samples = 100;
    std::string out_dir = "out";  ///< not part of the resolved config or its hash
    bool break_skew = false;

    /// Canonical text of every setting except workers and the output
    /// directory (neither affects results), sorted by key.
    std::string resolved_text() const;
    /// FNV-1a of resolved_text(), hex.
    std::string hash() const;
    /// SchemeParams with grid and Phi; throws ConfigError on bad values.
    SchemeParams to_params() const;
    Grid grid() const;
};

/// Builds a RunConfig from parsed keys; unknown keys and bad values throw ConfigError.
RunConfig config_from_map(const ConfigMap& m);
RunConfig load_config(const std::string& path);

/// Parses "32", "32x32" or "16x16x8".
std::array<int, 3> parse_grid_spec(const std::string& spec, int& dim);

/// Evaluates a preset on the cells of `g`.
ScalarField make_field(const Grid& g, const FieldPreset& p);
/// Initial state for a built scheme.
PathState make_initial_state(const Scheme& s, const RunConfig& rc);

/// Every recognised key with its meaning (used by --help and the docs).
const std::vector<std::pair<std::string, std::string>>& config_key_docs();

}  // namespace scns
