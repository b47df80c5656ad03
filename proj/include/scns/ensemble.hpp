/// @file ensemble.hpp
/// @brief Monte-Carlo driver: independent paths on worker threads, ordered
///        reduction into expectation estimates, and refinement studies in N.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "scns/diagnostics.hpp"
#include "scns/stepper.hpp"

namespace scns {

struct EnsembleSpec {
    SchemePtr scheme;
    PathState init;
    int path_count = 1;
    std::uint64_t base_seed = 0;
    int workers = 0;  ///< 0: hardware concurrency
    SummaryOptions summary;
    /// Refinement studies: strictly increasing, each dividing the largest with
    /// a power-of-two ratio.
    std::vector<int> N_list;
    /// Number of leading paths whose full trajectories are retained.
    int keep_trajectories = 0;
    /// Optional per-path observer (called from worker threads).
    std::function<void(const Trajectory&)> on_path;
};

/// Raised when more than 10% of the paths fail.
struct EnsembleFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EnsembleResult {
    std::vector<PathSummary> paths;            ///< ordered by path index
    std::map<std::string, Statistic> stats;    ///< over the successful paths
    int failures = 0;
    std::vector<Trajectory> trajectories;      ///< the first keep_trajectories paths
};

/// Validates the spec; throws std::invalid_argument.
void validate(const EnsembleSpec& spec);

/// Runs path_count paths with seeds (base_seed, index). Aggregates are
/// reduced in index order, independent of workers and completion order.
EnsembleResult run_ensemble(const EnsembleSpec& spec);

/// Reduction used by run_ensemble (exposed for testing).
std::map<std::string, Statistic> aggregate(const std::vector<PathSummary>& paths);

struct ConvergenceRow {
    int N = 0;
    double h = 0.0;
    std::map<std::string, Statistic> stats;
    int failures = 0;
};

struct ConvergenceResult {
    std::vector<ConvergenceRow> rows;
    std::vector<std::string> quantities;
    std::map<std::string, double> slopes;  ///< log-log slope of the mean against h
    /// Successive ratios mean(N_{i+1}) / mean(N_i).
    std::map<std::string, std::vector<double>> ratios;
    /// Quantities whose mean increases beyond two combined standard errors.
    std::vector<std::string> non_monotone;

    std::string to_csv() const;       ///< N, h, mean/se per quantity; slope rows
    std::string to_long_csv() const;  ///< quantity, N, h, mean, se
};

/// Every path draws one fine Brownian path at N_max 2^noise_refine_log2
/// sub-steps and is integrated at every N by pairwise coarsening; gaps and
/// error-term integrals are recorded per N.
ConvergenceResult convergence_study(const EnsembleSpec& spec);

/// Least-squares slope of log y against log x; NaN if any y <= 0.
double loglog_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace scns
