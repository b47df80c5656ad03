/// @file diagnostics.hpp
/// @brief Time interpolants of a trajectory, the continuous-time error terms,
///        per-path summary functionals and the estimate checker.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scns/stepper.hpp"

namespace scns {

// ---------------------------------------------------------------------------
// Interpolants
// ---------------------------------------------------------------------------

enum class Var { u, c, n };
/// linear: u_N; right: u-hat (u^l on (t_{l-1}, t_l]); left: u-check (u^{l-1} on [t_{l-1}, t_l)).
enum class InterpKind { linear, right, left };
enum class GapPair { linear_right, linear_left };

/// Evaluates an interpolant of a complete trajectory at t in [0, T].
/// Times within 1e-9 h of a knot snap to it. Throws std::domain_error outside [0, T].
SpectralVelocity eval_interpolant_u(const Trajectory& tr, InterpKind kind, double t);
ScalarField eval_interpolant_scalar(const Trajectory& tr, InterpKind kind, Var var, double t);

/// int_0^T ||X_N - X-hat_N||^2 dt (or X-check) in closed form: (h/3) sum ||X^l - X^{l-1}||^2.
/// Norms: L2 for u and n, H^1 for c.
double interpolant_gap(const Trajectory& tr, Var var, GapPair pair = GapPair::linear_right);

// ---------------------------------------------------------------------------
// Error terms
// ---------------------------------------------------------------------------

/// The three error processes at one time (u in mode coefficients).
struct ErrorVectors {
    Eigen::VectorXd u;
    ScalarField c;
    ScalarField n;
};

struct ErrorNorms {
    double u = 0.0;  ///< ||E^u||_{0,2}
    double c = 0.0;  ///< ||E^c||_{0,2}
    double n = 0.0;  ///< ||E^n|| in the dual norm (f, (I + A_1)^{-1} f)^(1/2)
};

/// Dual norm ||f||^2 = (f, (I + A_1)^{-1} f).
double dual_norm(const ScalarField& f);

/// Error terms at time t. The trajectory must be complete and carry its fine
/// Brownian path; W(t) between fine knots is interpolated linearly.
ErrorVectors error_term_vectors(const Scheme& s, const Trajectory& tr, double t);
ErrorNorms error_terms(const Scheme& s, const Trajectory& tr, double t);

/// int_0^T ||E(t)||^2 dt: trapezoid rule over the fine sub-points of every
/// step (using the limit from the right at each left knot); the deterministic
/// E^n integral is evaluated in closed form.
ErrorNorms error_term_integrals(const Scheme& s, const Trajectory& tr);

// ---------------------------------------------------------------------------
// Per-path summaries
// ---------------------------------------------------------------------------

struct SummaryOptions {
    bool error_terms = false;       ///< needs the fine path
    bool increments = true;         ///< increment sums h sum ||X^{l+j} - X^l||^4
    std::vector<int> js = {1, 2, 4, 8};
};

/// Named scalar functionals of one path (see summarize_path for the keys).
struct PathSummary {
    std::uint64_t path_index = 0;
    bool failed = false;
    int failed_step = 0;
    std::string failure;
    std::map<std::string, double> values;
};

PathSummary summarize_path(const Scheme& s, const Trajectory& tr, const SummaryOptions& opt = {});

/// h sum_{l=0}^{N-j} ||X^{l+j} - X^l||^4 (L2 for u, dual norm for c and n).
double increment_sum(const Trajectory& tr, Var var, int j);

/// C_imp = T (m+1)^2 |O| / (eta lambda_1): the constant of the pathwise velocity bound.
double velocity_bound_constant(const Scheme& s);

// ---------------------------------------------------------------------------
// Estimate checks
// ---------------------------------------------------------------------------

struct Statistic {
    std::size_t count = 0;
    double mean = 0.0;
    double variance = 0.0;  ///< unbiased; 0 when count == 1
    double se = 0.0;        ///< standard error; 0 and se_defined = false when count == 1
    bool se_defined = false;
};

Statistic make_statistic(const std::vector<double>& xs);

struct EstimateEntry {
    std::string name;
    std::string kind;  ///< "pathwise", "expectation", "invariant" or "reported"
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;  ///< rhs - lhs
    bool pass = true;
    bool hard = false;  ///< failing hard entries make `check` exit nonzero
    std::string note;
};

struct EstimateReport {
    std::vector<EstimateEntry> entries;
    std::map<std::string, double> constants;  ///< C_imp, grad Phi sup, ...
    std::size_t paths = 0;

    bool all_pass() const;
    bool hard_pass() const;
    std::string to_json() const;
    std::string to_table() const;
};

/// Appends an entry with pass <=> lhs <= rhs (1 + 1e-8).
EstimateEntry& add_entry(EstimateReport& r, std::string name, std::string kind, double lhs, double rhs,
                         bool hard, std::string note = {});

/// Initial-data norms used on the right-hand sides.
struct InitialNorms {
    double u_l2sq = 0.0;
    double c_l2sq = 0.0;
    double c_h2sq = 0.0;  ///< ||c_0||^2 + ||grad c_0||^2 + ||A_1 c_0||^2
    double n_l2sq = 0.0;
    double n_mass = 0.0;
};
InitialNorms initial_norms(const PathState& init);

/// Expectation and pathwise estimates plus hard invariants over an ensemble
/// of path summaries. Expectation entries require >= 30 paths and are
/// otherwise only reported.
EstimateReport check_estimates(const std::vector<PathSummary>& paths, const Scheme& s, const PathState& init);

/// Exact-cancellation suite over `samples` random inputs: (B(w,v),v),
/// (F(u)dW,u), (g(c)dB,c) and (B_3(theta n, c), 1), each relative to the
/// natural product of norms.
struct CancellationResult {
    double convection = 0.0;
    double noise_f = 0.0;
    double noise_g = 0.0;
    double chemotaxis_mass = 0.0;
};
CancellationResult cancellation_suite(const OperatorSet& ops, int samples, std::uint64_t seed);

}  // namespace scns
