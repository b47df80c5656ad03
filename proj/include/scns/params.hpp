/// @file params.hpp
/// @brief Physical and numerical constants of the scheme.

#pragma once

#include <string>
#include <vector>

#include "scns/fields.hpp"

namespace scns {

struct SchemeParams {
    // physical constants
    double vartheta = 0.05;  ///< fluid viscosity
    double mu = 0.05;        ///< chemical diffusion
    double delta = 0.05;     ///< organism diffusion
    double alpha = 0.0;      ///< velocity noise intensity
    double gamma = 0.0;      ///< concentration noise intensity
    // discretisation
    int m = 8;               ///< regularisation index (modes of H_m, theta_m, F_m)
    int N = 64;              ///< time steps
    double T = 0.5;          ///< final time
    Grid grid = Grid::cube(2, 32);
    ScalarField Phi;         ///< gravitational potential (zero if empty)
    // solver controls
    double fp_tol = 1e-10;
    int fp_max_iters = 50;
    /// CG tolerance; kept well below fp_tol so solver noise cannot mimic
    /// (or mask) Picard convergence.
    double tol_linear = 1e-13;
    int fp_max_halvings = 3;
    /// Brownian paths are drawn with 2^noise_refine_log2 sub-steps per step.
    int noise_refine_log2 = 2;

    double eta() const { return vartheta + 0.5 * alpha * alpha; }
    double eps() const { return mu + 0.5 * gamma * gamma; }
    double eps_m() const { return 8.0 / m; }
    double h() const { return T / N; }

    /// Throws std::invalid_argument for violated hard constraints; returns
    /// human-readable warnings for soft ones (the noise-size hypothesis).
    std::vector<std::string> validate() const;
    /// Phi, or a zero field when unset.
    ScalarField potential() const;
};

/// The warning issued when gamma^2 >= eps/484 (empty string otherwise).
std::string gamma_hypothesis_warning(const SchemeParams& p);

}  // namespace scns
