/// @file stepper.cpp
/// @brief Frozen-coefficient solves, the damped Picard loop, energy ledgers.

#include "scns/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace scns {

// ---------------------------------------------------------------------------
// Scheme
// ---------------------------------------------------------------------------

SchemePtr Scheme::build(const SchemeParams& p, const BasisOptions& bopt, bool skew) {
    p.validate();
    auto s = std::make_shared<Scheme>();
    s->p = p;
    s->p.Phi = p.potential();
    BasisPtr basis = compute_basis(p.grid, p.m, bopt);
    s->ops = std::make_shared<OperatorSet>(basis, p.m, skew);
    s->gradPhi = grad(s->p.Phi);
    // Discrete vector sup: sqrt(sum_a max_faces |d_a Phi|^2) bounds every face
    // field theta * grad Phi in L2 by (m+1) |O|^(1/2) ||grad Phi||_inf.
    double sq = 0.0;
    for (int a = 0; a < p.grid.dim; ++a) {
        double mx = 0.0;
        for (double x : s->gradPhi.f[a]) mx = std::max(mx, std::abs(x));
        sq += mx * mx;
    }
    s->gradPhi_inf = std::sqrt(sq);
    return s;
}

SchemePtr Scheme::with_steps(const Scheme& base, int N) {
    auto s = std::make_shared<Scheme>(base);
    s->p.N = N;
    s->p.validate();
    return s;
}

namespace {

double combined_h1(const ScalarField& a, const ScalarField& b) {
    const double x = h1_norm(a), y = h1_norm(b);
    return std::sqrt(x * x + y * y);
}

double rel_residual(double r, double scale) { return r / (1.0 + scale); }

/// Per-step data that does not depend on the Picard iterate.
struct StepContext {
    const Scheme& s;
    const PathState& prev;
    double h;
    Eigen::MatrixXd M;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
    Eigen::VectorXd rhs0;     // u^{l-1} + alpha F(u^{l-1}) dW
    ScalarField noise_c;      // gamma F^1(c^{l-1}) g(c^{l-1}) dB

    StepContext(const Scheme& sch, const PathState& pr, const std::vector<double>& dW,
                const std::vector<double>& dB)
        : s(sch), prev(pr), h(sch.p.h()) {
        const auto& ops = *s.ops;
        const int m = ops.m();
        M = Eigen::MatrixXd::Identity(m, m);
        for (int i = 0; i < m; ++i) M(i, i) += s.p.eta() * h * ops.basis()->eigenvalues[i];
        M += h * ops.convection_matrix(prev.u);
        lu.compute(M);
        rhs0 = prev.u.coeffs;
        if (s.p.alpha != 0.0) rhs0 += s.p.alpha * (ops.noise_f_matrix(dW) * prev.u.coeffs);
        noise_c = ScalarField(prev.c.grid);
        if (s.p.gamma != 0.0) {
            noise_c = noise_g(ops, prev.c, dB);
            noise_c *= s.p.gamma * f1_cutoff(s.p.m, prev.c);
        }
    }

    Eigen::VectorXd velocity_rhs(const ScalarField& n_bar) const {
        Eigen::VectorXd rhs = rhs0;
        if (s.gradPhi_inf != 0.0) rhs += h * buoyancy_grad(*s.ops, n_bar, s.gradPhi).coeffs;
        return rhs;
    }

    SpectralVelocity velocity(const ScalarField& n_bar, double* residual) const {
        const Eigen::VectorXd rhs = velocity_rhs(n_bar);
        Eigen::VectorXd x = lu.solve(rhs);
        const double r = (M * x - rhs).norm() / std::max(rhs.norm(), std::numeric_limits<double>::min());
        if (residual) *residual = rhs.norm() == 0.0 ? 0.0 : r;
        if (rhs.norm() != 0.0 && !(r <= 1e-10))
            throw SolverFailure("velocity: dense solve residual too large", r);
        return SpectralVelocity(s.basis(), std::move(x));
    }

    ScalarField psi(const VelocityField& uf, const ScalarField& c_bar, const ScalarField& n_bar) const {
        const auto& ops = *s.ops;
        ScalarField out = prev.c;
        const ScalarField conv = convect_scalar_faces(ops, uf, c_bar);
        const ScalarField reac = reaction(ops, n_bar, c_bar);
        for (std::size_t i = 0; i < out.v.size(); ++i)
            out.v[i] += -h * conv.v[i] - h * reac.v[i] + noise_c.v[i];
        return out;
    }

    ScalarField zeta(const VelocityField& uf, const ScalarField& c_new, const ScalarField& n_bar) const {
        const auto& ops = *s.ops;
        ScalarField out = prev.n;
        const ScalarField conv = convect_scalar_faces(ops, uf, n_bar);
        const ScalarField chem = chemotaxis_flux(ops, n_bar, c_new);
        for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += -h * conv.v[i] + h * chem.v[i];
        return out;
    }
};

}  // namespace

// ---------------------------------------------------------------------------
// Public solves
// ---------------------------------------------------------------------------

SpectralVelocity solve_velocity(const Scheme& s, const SpectralVelocity& u_prev, const ScalarField& n_bar,
                                const std::vector<double>& dW, double* residual) {
    PathState prev;
    prev.u = u_prev;
    prev.c = ScalarField(n_bar.grid);
    prev.n = ScalarField(n_bar.grid);
    const std::vector<double> zero(s.p.grid.dim, 0.0);
    StepContext ctx(s, prev, dW, zero);
    return ctx.velocity(n_bar, residual);
}

ScalarField solve_c(const Scheme& s, const ScalarField& c_prev, const SpectralVelocity& u_new,
                    const ScalarField& c_bar, const ScalarField& n_bar, const std::vector<double>& dB,
                    SolveStats* stats) {
    PathState prev;
    prev.u = SpectralVelocity(s.basis());
    prev.c = c_prev;
    prev.n = ScalarField(c_prev.grid);
    const std::vector<double> zero(s.p.grid.dim, 0.0);
    StepContext ctx(s, prev, zero, dB);
    const ScalarField rhs = ctx.psi(reconstruct(u_new), c_bar, n_bar);
    ScalarField x = c_bar;
    const SolveStats st = solve_helmholtz_into(ctx.h * s.p.eps(), 0.0, rhs, x, s.p.tol_linear);
    if (stats) *stats = st;
    return x;
}

ScalarField solve_n(const Scheme& s, const ScalarField& n_prev, const SpectralVelocity& u_new,
                    const ScalarField& c_new, const ScalarField& n_bar, SolveStats* stats) {
    PathState prev;
    prev.u = SpectralVelocity(s.basis());
    prev.c = ScalarField(n_prev.grid);
    prev.n = n_prev;
    const std::vector<double> zero(s.p.grid.dim, 0.0);
    StepContext ctx(s, prev, zero, zero);
    const ScalarField rhs = ctx.zeta(reconstruct(u_new), c_new, n_bar);
    ScalarField x = n_bar;
    const SolveStats st = solve_helmholtz_into(ctx.h * s.p.delta, 0.0, rhs, x, s.p.tol_linear);
    if (stats) *stats = st;
    return x;
}

// ---------------------------------------------------------------------------
// Fixed point
// ---------------------------------------------------------------------------

PathState fixed_point_step(const Scheme& s, const PathState& prev, const std::vector<double>& dW,
                           const std::vector<double>& dB, StepReport* report) {
    const SchemeParams& p = s.p;
    StepContext ctx(s, prev, dW, dB);
    const double tau_c = ctx.h * p.eps();
    const double tau_n = ctx.h * p.delta;

    StepReport rep;
    ScalarField c_bar = prev.c, n_bar = prev.n;
    ScalarField c = prev.c, n = prev.n;  // warm starts for CG
    SpectralVelocity u;
    VelocityField uf;
    double omega = 1.0, prev_change = std::numeric_limits<double>::infinity();
    int halvings = 0;
    bool converged = false;
    for (int it = 1; it <= p.fp_max_iters; ++it) {
        u = ctx.velocity(n_bar, &rep.velocity_residual);
        uf = reconstruct(u);
        const SolveStats sc = solve_helmholtz_into(tau_c, 0.0, ctx.psi(uf, c_bar, n_bar), c, p.tol_linear);
        const SolveStats sn = solve_helmholtz_into(tau_n, 0.0, ctx.zeta(uf, c, n_bar), n, p.tol_linear);
        rep.cg_iterations_c += sc.iterations;
        rep.cg_iterations_n += sn.iterations;
        rep.linear_residual_c = sc.relative_residual;
        rep.linear_residual_n = sn.relative_residual;

        const double change = combined_h1(c - c_bar, n - n_bar);
        const double scale = 1.0 + combined_h1(c_bar, n_bar);
        rep.fp_history.push_back(change / scale);
        rep.iterations = it;
        if (change <= p.fp_tol * scale) {
            converged = true;
            break;
        }
        if (change > prev_change && halvings < p.fp_max_halvings) {
            omega *= 0.5;
            ++halvings;
        }
        prev_change = change;
        for (std::size_t i = 0; i < c.v.size(); ++i) {
            c_bar.v[i] += omega * (c.v[i] - c_bar.v[i]);
            n_bar.v[i] += omega * (n.v[i] - n_bar.v[i]);
        }
    }
    rep.omega = omega;
    rep.fp_residual = rep.fp_history.empty() ? 0.0 : rep.fp_history.back();
    if (!converged)
        throw FixedPointFailure("fixed point: no convergence in " + std::to_string(p.fp_max_iters) +
                                    " iterations",
                                rep.fp_history);

    PathState next;
    next.step = prev.step + 1;
    next.t = next.step * ctx.h;
    next.u = std::move(u);
    next.c = std::move(c);
    next.n = std::move(n);

    // Re-substitute the accepted triple (c_bar = c, n_bar = n) into all three equations.
    {
        const Eigen::VectorXd rhs = ctx.velocity_rhs(next.n);
        rep.resub_u = rel_residual((ctx.M * next.u.coeffs - rhs).norm(), rhs.norm());
        ScalarField out;
        const ScalarField psi = ctx.psi(uf, next.c, next.n);
        apply_helmholtz(tau_c, 0.0, next.c, out);
        rep.resub_c = rel_residual(l2_norm(out - psi), l2_norm(psi));
        const ScalarField z = ctx.zeta(uf, next.c, next.n);
        apply_helmholtz(tau_n, 0.0, next.n, out);
        rep.resub_n = rel_residual(l2_norm(out - z), l2_norm(z));
    }
    rep.ledger = compute_ledger(s, prev, next, dW, dB);
    if (report) *report = std::move(rep);
    return next;
}

// ---------------------------------------------------------------------------
// Energy ledgers
// ---------------------------------------------------------------------------

namespace {

LedgerLine close_line(double lhs, double rhs, double abs_sum) {
    LedgerLine l;
    l.lhs = lhs;
    l.rhs = rhs;
    l.residual = abs_sum > 0.0 ? std::abs(lhs - rhs) / abs_sum : 0.0;
    return l;
}

}  // namespace

EnergyLedger compute_ledger(const Scheme& s, const PathState& prev, const PathState& next,
                            const std::vector<double>& dW, const std::vector<double>& dB) {
    const SchemeParams& p = s.p;
    const auto& ops = *s.ops;
    const double h = p.h();
    EnergyLedger L;

    // velocity
    {
        const double a = next.u.coeffs.squaredNorm(), b = prev.u.coeffs.squaredNorm();
        L.u_increment_sq = (next.u.coeffs - prev.u.coeffs).squaredNorm();
        L.u_grad_sq = next.u.grad_sq();
        const double diss = 2.0 * h * p.eta() * L.u_grad_sq;
        L.u_buoyancy = s.gradPhi_inf != 0.0
                           ? 2.0 * h * buoyancy_grad(ops, next.n, s.gradPhi).coeffs.dot(next.u.coeffs)
                           : 0.0;
        L.u_noise = p.alpha != 0.0
                        ? 2.0 * p.alpha * (ops.noise_f_matrix(dW) * prev.u.coeffs).dot(next.u.coeffs)
                        : 0.0;
        L.u = close_line(a - b + L.u_increment_sq + diss, L.u_buoyancy + L.u_noise,
                         a + b + L.u_increment_sq + diss + std::abs(L.u_buoyancy) + std::abs(L.u_noise));
    }
    // concentration
    {
        const double a = l2_inner(next.c, next.c), b = l2_inner(prev.c, prev.c);
        L.c_increment_sq = l2_inner(next.c - prev.c, next.c - prev.c);
        L.c_grad_sq = grad_norm(next.c) * grad_norm(next.c);
        const double diss = 2.0 * h * p.eps() * L.c_grad_sq;
        L.c_reaction = 2.0 * h * l2_inner(reaction(ops, next.n, next.c), next.c);
        L.c_noise = p.gamma != 0.0 ? 2.0 * p.gamma * f1_cutoff(p.m, prev.c) *
                                         l2_inner(noise_g(ops, prev.c, dB), next.c)
                                   : 0.0;
        L.c = close_line(a - b + L.c_increment_sq + diss + L.c_reaction, L.c_noise,
                         a + b + L.c_increment_sq + diss + std::abs(L.c_reaction) + std::abs(L.c_noise));
    }
    // density
    {
        const double a = l2_inner(next.n, next.n), b = l2_inner(prev.n, prev.n);
        L.n_increment_sq = l2_inner(next.n - prev.n, next.n - prev.n);
        L.n_grad_sq = grad_norm(next.n) * grad_norm(next.n);
        const double diss = 2.0 * h * p.delta * L.n_grad_sq;
        L.n_chemotaxis = 2.0 * h * l2_inner(chemotaxis_flux(ops, next.n, next.c), next.n);
        L.n = close_line(a - b + L.n_increment_sq + diss, L.n_chemotaxis,
                         a + b + L.n_increment_sq + diss + std::abs(L.n_chemotaxis));
    }
    return L;
}

// ---------------------------------------------------------------------------
// Paths
// ---------------------------------------------------------------------------

PathState initial_state(const Scheme& s, const SpectralVelocity& u0, const ScalarField& c0,
                        const ScalarField& n0) {
    require_same_grid(c0.grid, s.p.grid, "initial c");
    require_same_grid(n0.grid, s.p.grid, "initial n");
    if (u0.basis != s.basis()) throw StructuralError("initial u: basis mismatch");
    PathState st;
    st.u = u0;
    st.c = c0;
    st.n = n0;
    return st;
}

PathState initial_state(const Scheme& s, const VelocityField& u0, const ScalarField& c0,
                        const ScalarField& n0) {
    return initial_state(s, pi_m(u0, s.basis()), c0, n0);
}

Trajectory run_path(const Scheme& s, const PathState& init, const Increments& inc) {
    if (inc.N != s.p.N || inc.dim != s.p.grid.dim)
        throw StructuralError("run_path: increments do not match the scheme resolution");
    Trajectory tr;
    tr.increments = inc;
    tr.states.reserve(static_cast<std::size_t>(s.p.N) + 1);
    tr.reports.reserve(static_cast<std::size_t>(s.p.N));
    PathState st = init;
    st.step = 0;
    st.t = 0.0;
    tr.states.push_back(st);
    for (int l = 1; l <= s.p.N; ++l) {
        StepReport rep;
        try {
            st = fixed_point_step(s, tr.states.back(), inc.dW_step(l), inc.dB_step(l), &rep);
        } catch (const FixedPointFailure& e) {
            tr.failed = true;
            tr.failed_step = l;
            tr.failure = e.what();
            tr.failure_history = e.history;
            return tr;
        } catch (const SolverFailure& e) {
            tr.failed = true;
            tr.failed_step = l;
            tr.failure = e.what();
            return tr;
        }
        tr.states.push_back(st);
        tr.reports.push_back(std::move(rep));
    }
    return tr;
}

Trajectory run_path(const Scheme& s, const PathSeed& seed, const PathState& init,
                    const BrownianPath& fine) {
    Trajectory tr = run_path(s, init, fine.coarsen(s.p.N));
    tr.seed = seed;
    tr.fine = fine;
    return tr;
}

Trajectory run_path(const Scheme& s, const PathSeed& seed, const PathState& init) {
    const int N_fine = s.p.N << s.p.noise_refine_log2;
    return run_path(s, seed, init, sample_path(seed, N_fine, s.p.T, s.p.grid.dim));
}

}  // namespace scns
