/// @file stepper.hpp
/// @brief One semi-implicit Euler step (velocity, concentration and density
///        solves inside a damped Picard loop) and whole-path integration.
///
/// Step l maps (u^{l-1}, c^{l-1}, n^{l-1}) and the increments over
/// (t_{l-1}, t_l] to (u^l, c^l, n^l). With frozen iterates (c_bar, n_bar):
///   (I + eta h Lambda + h C(u^{l-1})) u = u^{l-1} + h B_0(theta(n_bar), Phi)
///                                         + alpha F(u^{l-1}) dW
///   (I + h eps A_1) c = c^{l-1} - h B_1(u, c_bar) - h theta^eps(n_bar) c_bar
///                       + gamma F^1(c^{l-1}) g(c^{l-1}) dB
///   (I + h delta A_1) n = n^{l-1} - h B_1(u, n_bar) + h B_3(theta(n_bar), c)
/// and the loop iterates (c_bar, n_bar) <- (c, n) to a fixed point.

#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "scns/fields.hpp"
#include "scns/noise.hpp"
#include "scns/operators.hpp"
#include "scns/params.hpp"
#include "scns/stokes.hpp"

namespace scns {

/// Immutable data shared by all paths: parameters, basis tensors, grad Phi.
struct Scheme {
    SchemeParams p;
    std::shared_ptr<const OperatorSet> ops;
    VelocityField gradPhi;
    double gradPhi_inf = 0.0;  ///< sqrt(sum_a max_faces |d_a Phi|^2)

    /// Validates p, builds (or loads) the basis and operator tensors.
    static std::shared_ptr<const Scheme> build(const SchemeParams& p, const BasisOptions& bopt = {},
                                               bool skew = true);
    /// Copy of `base` with N time steps; shares the basis and tensors.
    static std::shared_ptr<const Scheme> with_steps(const Scheme& base, int N);
    const BasisPtr& basis() const { return ops->basis(); }
};
using SchemePtr = std::shared_ptr<const Scheme>;

struct PathState {
    int step = 0;
    double t = 0.0;
    SpectralVelocity u;
    ScalarField c;
    ScalarField n;
};

/// Left side, right side and relative residual of one energy identity.
struct LedgerLine {
    double lhs = 0.0;
    double rhs = 0.0;
    double residual = 0.0;  ///< |lhs - rhs| / (sum of |terms|), 0 when all terms vanish
};

struct EnergyLedger {
    LedgerLine u, c, n;
    // individual terms, reused by the pathwise and expectation estimates
    double u_increment_sq = 0.0;  ///< ||u^i - u^{i-1}||^2
    double u_grad_sq = 0.0;       ///< ||grad u^i||^2
    double u_buoyancy = 0.0;      ///< 2h (B_0, u^i)
    double u_noise = 0.0;         ///< 2 alpha (F(u^{i-1}) dW, u^i)
    double c_increment_sq = 0.0;
    double c_grad_sq = 0.0;
    double c_reaction = 0.0;      ///< 2h (theta^eps(n^i) c^i, c^i)
    double c_noise = 0.0;         ///< 2 gamma F^1 (g(c^{i-1}) dB, c^i)
    double n_increment_sq = 0.0;
    double n_grad_sq = 0.0;
    double n_chemotaxis = 0.0;    ///< 2h (B_3, n^i)
};

struct StepReport {
    int iterations = 0;
    double fp_residual = 0.0;             ///< final relative H^1 change
    std::vector<double> fp_history;       ///< relative H^1 change per iteration
    double omega = 1.0;                   ///< final damping factor
    double velocity_residual = 0.0;       ///< relative residual of the dense solve
    double linear_residual_c = 0.0;
    double linear_residual_n = 0.0;
    int cg_iterations_c = 0;
    int cg_iterations_n = 0;
    /// re-substitution of the accepted triple into the three step equations
    double resub_u = 0.0, resub_c = 0.0, resub_n = 0.0;
    EnergyLedger ledger;
};

struct FixedPointFailure : std::runtime_error {
    FixedPointFailure(const std::string& what, std::vector<double> hist)
        : std::runtime_error(what), history(std::move(hist)) {}
    std::vector<double> history;
};

// ---------------------------------------------------------------------------
// The three frozen-coefficient solves
// ---------------------------------------------------------------------------

/// Velocity solve; `residual` (optional) receives the relative residual.
SpectralVelocity solve_velocity(const Scheme& s, const SpectralVelocity& u_prev, const ScalarField& n_bar,
                                const std::vector<double>& dW, double* residual = nullptr);

ScalarField solve_c(const Scheme& s, const ScalarField& c_prev, const SpectralVelocity& u_new,
                    const ScalarField& c_bar, const ScalarField& n_bar, const std::vector<double>& dB,
                    SolveStats* stats = nullptr);

ScalarField solve_n(const Scheme& s, const ScalarField& n_prev, const SpectralVelocity& u_new,
                    const ScalarField& c_new, const ScalarField& n_bar, SolveStats* stats = nullptr);

/// Picard iteration for one step. Throws FixedPointFailure (with the residual
/// history) when the cap is reached, SolverFailure on linear-solver failure.
PathState fixed_point_step(const Scheme& s, const PathState& prev, const std::vector<double>& dW,
                           const std::vector<double>& dB, StepReport* report = nullptr);

/// Energy identities of one accepted step.
EnergyLedger compute_ledger(const Scheme& s, const PathState& prev, const PathState& next,
                            const std::vector<double>& dW, const std::vector<double>& dB);

// ---------------------------------------------------------------------------
// Paths
// ---------------------------------------------------------------------------

struct Trajectory {
    PathSeed seed;
    std::vector<PathState> states;   ///< states[0..N] (fewer if the path failed)
    std::vector<StepReport> reports; ///< reports[l-1] belongs to step l
    Increments increments;           ///< increments at the scheme resolution
    std::optional<BrownianPath> fine;///< fine Brownian path (sub-step diagnostics)
    bool failed = false;
    int failed_step = 0;
    std::string failure;
    std::vector<double> failure_history;
};

/// Initial state from grid data; u0 is projected onto H_m.
PathState initial_state(const Scheme& s, const VelocityField& u0, const ScalarField& c0,
                        const ScalarField& n0);
PathState initial_state(const Scheme& s, const SpectralVelocity& u0, const ScalarField& c0,
                        const ScalarField& n0);

/// Integrates N steps with the given increments (increments.N == p.N).
Trajectory run_path(const Scheme& s, const PathState& init, const Increments& inc);
/// Draws the noise from `seed` at 2^noise_refine_log2 sub-steps per step and
/// integrates; the fine path is retained in the trajectory.
Trajectory run_path(const Scheme& s, const PathSeed& seed, const PathState& init);
/// Same, with a caller-provided fine path (refinement studies).
Trajectory run_path(const Scheme& s, const PathSeed& seed, const PathState& init,
                    const BrownianPath& fine);

}  // namespace scns
