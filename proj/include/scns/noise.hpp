/// @file noise.hpp
/// @brief Reproducible Wiener increments for the velocity noise W and the
///        concentration noise beta (both dim-valued).
///
/// Every Gaussian draw is a pure function of the key
///   (base_seed, path_index, step, process, component),
/// hashed with the splitmix64 finaliser and mapped through Box-Muller. Paths
/// can therefore be generated in any order, on any thread, with identical
/// results.
///
/// Refinement mode draws increments on a fine grid of N_fine steps and builds
/// every coarser resolution by repeated pairwise summation, so all step counts
/// of a convergence study share one Brownian path (and N = k is obtained from
/// N = 2k bit-for-bit by summing pairs).

#pragma once

#include <cstdint>
#include <vector>

namespace scns {

struct PathSeed {
    std::uint64_t base_seed = 0;
    std::uint64_t path_index = 0;
};

enum class Process : int { W = 0, Beta = 1 };

/// splitmix64 finaliser.
std::uint64_t splitmix64(std::uint64_t x);

/// Standard normal draw for one key.
double standard_normal(const PathSeed& seed, std::uint64_t step, Process process, int component);

/// Increments on a uniform grid of N steps of size h.
struct Increments {
    int N = 0;
    int dim = 0;
    double h = 0.0;
    std::vector<double> dW;  ///< N * dim, step-major
    std::vector<double> dB;  ///< N * dim, step-major

    /// Increment over (t_{l-1}, t_l] for l in 1..N.
    std::vector<double> dW_step(int l) const;
    std::vector<double> dB_step(int l) const;
};

/// Direct mode: N(0, h) increments keyed by step index at this resolution.
Increments sample_increments(const PathSeed& seed, int N, double h, int dim);

/// Fine-resolution path for refinement studies and sub-step diagnostics.
struct BrownianPath {
    int N_fine = 0;
    int dim = 0;
    double T = 0.0;
    Increments fine;

    /// Increments at resolution N (N_fine / N must be a power of two).
    Increments coarsen(int N) const;
    /// W(t) and beta(t) at fine knot j (cumulative sums, W(0) = 0).
    std::vector<double> W_at(int j) const;
    std::vector<double> B_at(int j) const;
    /// All knots at once: (N_fine + 1) * dim values each.
    void cumulative(std::vector<double>& W, std::vector<double>& B) const;
};

BrownianPath sample_path(const PathSeed& seed, int N_fine, double T, int dim);

/// True when N divides N_fine with a power-of-two ratio.
bool refinable(int N, int N_fine);

}  // namespace scns
