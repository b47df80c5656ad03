/// @file test_diagnostics.cpp
/// @brief Interpolants and their gaps, error terms against direct
///        quadrature and re-assembly, statistics and estimate reports.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "scns/diagnostics.hpp"

using namespace scns;

namespace {

SchemeParams small_params(double alpha = 0.2, double gamma = 0.005) {
    SchemeParams p;
    p.grid = Grid::cube(2, 8);
    p.m = 4;
    p.N = 8;
    p.T = 0.1;
    p.alpha = alpha;
    p.gamma = gamma;
    p.Phi = ScalarField(p.grid);
    for (std::size_t i = 0; i < p.Phi.v.size(); ++i) p.Phi.v[i] = p.grid.cell_center(i)[1];
    return p;
}

ScalarField bump(const Grid& g, double amp, double off, double cx, double cy) {
    ScalarField f(g);
    for (std::size_t i = 0; i < f.v.size(); ++i) {
        const auto x = g.cell_center(i);
        f.v[i] = off + amp * std::exp(-((x[0] - cx) * (x[0] - cx) + (x[1] - cy) * (x[1] - cy)) / 0.0625);
    }
    return f;
}

PathState smooth_init(const Scheme& s) {
    SpectralVelocity u(s.basis());
    for (int i = 0; i < s.basis()->m; ++i) u.coeffs[i] = 0.3 / (i + 1);
    const Grid& g = s.p.grid;
    return initial_state(s, u, bump(g, 1.0, 0.1, 0.4, 0.6), bump(g, 0.5, 1.0, 0.6, 0.4));
}

PathState zero_init(const Scheme& s) {
    return initial_state(s, SpectralVelocity(s.basis()), ScalarField(s.p.grid), ScalarField(s.p.grid));
}

struct Fixture {
    SchemePtr s = Scheme::build(small_params());
    Trajectory tr = run_path(*s, PathSeed{4, 2}, smooth_init(*s));
};

const Fixture& fx() {
    static const Fixture f;
    return f;
}

double l2sq(const ScalarField& f) { return l2_inner(f, f); }

}  // namespace

TEST_CASE("interpolants: knots, midpoints and one-sided values") {
    const auto& [s, tr] = fx();
    REQUIRE_FALSE(tr.failed);
    const double h = s->p.h();
    for (int l = 0; l <= s->p.N; ++l) {
        CHECK(eval_interpolant_u(tr, InterpKind::linear, l * h).coeffs == tr.states[l].u.coeffs);
        CHECK(eval_interpolant_scalar(tr, InterpKind::linear, Var::c, l * h).v == tr.states[l].c.v);
    }
    const int l = 3;
    const ScalarField mid = eval_interpolant_scalar(tr, InterpKind::linear, Var::n, (l + 0.5) * h);
    const ScalarField avg = 0.5 * (tr.states[l].n + tr.states[l + 1].n);
    CHECK(l2_norm(mid - avg) <= 1e-14 * l2_norm(avg));
    const auto umid = eval_interpolant_u(tr, InterpKind::linear, (l + 0.25) * h);
    CHECK((umid.coeffs - (0.75 * tr.states[l].u.coeffs + 0.25 * tr.states[l + 1].u.coeffs)).norm() <= 1e-14);
    // right-constant takes u^{l+1} on (t_l, t_{l+1}], left-constant u^l on [t_l, t_{l+1})
    CHECK(eval_interpolant_scalar(tr, InterpKind::right, Var::c, (l + 0.3) * h).v == tr.states[l + 1].c.v);
    CHECK(eval_interpolant_scalar(tr, InterpKind::left, Var::c, (l + 0.3) * h).v == tr.states[l].c.v);
    CHECK(eval_interpolant_scalar(tr, InterpKind::right, Var::c, l * h).v == tr.states[l].c.v);
    CHECK(eval_interpolant_scalar(tr, InterpKind::left, Var::c, l * h).v == tr.states[l].c.v);
    CHECK(eval_interpolant_scalar(tr, InterpKind::left, Var::c, s->p.T).v == tr.states[s->p.N - 1].c.v);
    CHECK(eval_interpolant_u(tr, InterpKind::right, 0.0).coeffs == tr.states[0].u.coeffs);
    CHECK_THROWS_AS(eval_interpolant_u(tr, InterpKind::linear, -0.01), std::domain_error);
    CHECK_THROWS_AS(eval_interpolant_u(tr, InterpKind::linear, s->p.T * 1.01), std::domain_error);
    CHECK_THROWS_AS(eval_interpolant_scalar(tr, InterpKind::linear, Var::u, 0.0), std::invalid_argument);
}

TEST_CASE("interpolant gaps: closed form against numerical quadrature") {
    const auto& [s, tr] = fx();
    const double h = s->p.h();
    // Simpson's rule is exact for the quadratic integrand on each interval
    auto simpson = [&](auto&& f) {
        double acc = 0.0;
        for (int l = 0; l < s->p.N; ++l) {
            const double a = l * h, b = (l + 1) * h;
            acc += h / 6.0 * (f(a + 1e-7 * h, l) + 4.0 * f(0.5 * (a + b), l) + f(b, l));
        }
        return acc;
    };
    for (GapPair pair : {GapPair::linear_right, GapPair::linear_left}) {
        const InterpKind k = pair == GapPair::linear_right ? InterpKind::right : InterpKind::left;
        const double qn = simpson([&](double t, int l) {
            // the constant interpolant is evaluated inside the interval
            const double ti = std::clamp(t, l * h + 1e-6 * h, (l + 1) * h - 1e-6 * h);
            const ScalarField d = eval_interpolant_scalar(tr, InterpKind::linear, Var::n, t) -
                                  eval_interpolant_scalar(tr, k, Var::n, ti);
            return l2sq(d);
        });
        CHECK(interpolant_gap(tr, Var::n, pair) == doctest::Approx(qn).epsilon(1e-4));
        const double qu = simpson([&](double t, int l) {
            const double ti = std::clamp(t, l * h + 1e-6 * h, (l + 1) * h - 1e-6 * h);
            return (eval_interpolant_u(tr, InterpKind::linear, t).coeffs - eval_interpolant_u(tr, k, ti).coeffs)
                .squaredNorm();
        });
        CHECK(interpolant_gap(tr, Var::u, pair) == doctest::Approx(qu).epsilon(1e-4));
        const double qc = simpson([&](double t, int l) {
            const double ti = std::clamp(t, l * h + 1e-6 * h, (l + 1) * h - 1e-6 * h);
            const double x = h1_norm(eval_interpolant_scalar(tr, InterpKind::linear, Var::c, t) -
                                     eval_interpolant_scalar(tr, k, Var::c, ti));
            return x * x;
        });
        CHECK(interpolant_gap(tr, Var::c, pair) == doctest::Approx(qc).epsilon(1e-4));
    }
}

TEST_CASE("interpolant gaps: single jump and constant trajectories") {
    const auto& [s, tr0] = fx();
    Trajectory tr = tr0;
    for (auto& st : tr.states) st = tr0.states[0];
    CHECK(interpolant_gap(tr, Var::u) == 0.0);
    CHECK(interpolant_gap(tr, Var::c) == 0.0);
    CHECK(interpolant_gap(tr, Var::n) == 0.0);
    // one jump J between knots 2 and 3 (and held afterwards)
    const ScalarField J = bump(s->p.grid, 0.4, 0.0, 0.5, 0.5);
    for (std::size_t l = 3; l < tr.states.size(); ++l) tr.states[l].c = tr.states[0].c + J;
    const double hj = h1_norm(J);
    CHECK(interpolant_gap(tr, Var::c) == doctest::Approx(s->p.h() / 3.0 * hj * hj).epsilon(1e-13));
    CHECK(interpolant_gap(tr, Var::c, GapPair::linear_left) == interpolant_gap(tr, Var::c));
}

TEST_CASE("error terms: integrals agree with pointwise quadrature") {
    const auto& [s, tr] = fx();
    REQUIRE(tr.fine.has_value());
    const double h = s->p.h();
    const int r = tr.fine->N_fine / s->p.N;
    const double hf = h / r;
    // trapezoid over the fine sub-points, right limits at each left knot
    double iu = 0.0, ic = 0.0;
    for (int l = 0; l < s->p.N; ++l)
        for (int j = 0; j <= r; ++j) {
            const double t = l * h + j * hf + (j == 0 ? 1e-7 * h : 0.0);
            const double w = (j == 0 || j == r) ? 0.5 * hf : hf;
            const ErrorNorms e = error_terms(*s, tr, std::min(t, s->p.T));
            iu += w * e.u * e.u;
            ic += w * e.c * e.c;
        }
    const ErrorNorms I = error_term_integrals(*s, tr);
    CHECK(I.u == doctest::Approx(iu).epsilon(1e-4));
    CHECK(I.c == doctest::Approx(ic).epsilon(1e-4));
    CHECK(I.u > 0.0);
    CHECK(I.c > 0.0);
    // E^n ramps linearly on the first window and is constant after it
    const double zn = error_terms(*s, tr, s->p.T).n;
    CHECK(error_terms(*s, tr, 0.5 * h).n == doctest::Approx(0.5 * zn).epsilon(1e-9));
    CHECK(error_terms(*s, tr, 3 * h).n == doctest::Approx(zn).epsilon(1e-9));
    CHECK(error_terms(*s, tr, 0.0).n == 0.0);
    CHECK(I.n == doctest::Approx(zn * zn * (h / 3.0 + s->p.T - h)).epsilon(1e-9));
}

TEST_CASE("error terms: re-assembly of the first-window residuals") {
    const auto& [s, tr] = fx();
    const auto& ops = *s->ops;
    const double h = s->p.h();
    const PathState& s1 = tr.states[1];
    const VelocityField u1 = reconstruct(s1.u);
    // for t >= h at a knot the bracket vanishes and E = Z
    ScalarField Rn = neumann_laplacian(s1.n);
    Rn *= s->p.delta;
    Rn += convect_scalar_faces(ops, u1, s1.n);
    Rn += chemotaxis_flux(ops, s1.n, s1.c);
    for (int l : {1, 4, 8}) {
        const ErrorVectors ev = error_term_vectors(*s, tr, l * h);
        CHECK(l2_norm(ev.n + h * Rn) <= 1e-12 * (1 + l2_norm(h * Rn)));
    }
    const ErrorVectors e2 = error_term_vectors(*s, tr, 2 * h), e5 = error_term_vectors(*s, tr, 5 * h);
    CHECK((e2.u - e5.u).norm() <= 1e-14 * (1 + e2.u.norm()));
    CHECK(l2_norm(e2.c - e5.c) <= 1e-14 * (1 + l2_norm(e2.c)));
}

TEST_CASE("error terms vanish on the zero path and need the fine path") {
    const auto s = Scheme::build(small_params());
    const Trajectory tr = run_path(*s, PathSeed{1, 1}, zero_init(*s));
    const ErrorNorms I = error_term_integrals(*s, tr);
    CHECK(I.u == 0.0);
    CHECK(I.c == 0.0);
    CHECK(I.n == 0.0);
    Trajectory bare = tr;
    bare.fine.reset();
    CHECK_THROWS_AS(error_term_integrals(*s, bare), std::invalid_argument);
    Trajectory failed = tr;
    failed.failed = true;
    CHECK_THROWS_AS(interpolant_gap(failed, Var::u), std::invalid_argument);
}

TEST_CASE("increment sums and the dual norm") {
    const auto& [s, tr] = fx();
    double ref = 0.0;
    for (int l = 0; l + 2 <= s->p.N; ++l) ref += std::pow((tr.states[l + 2].u.coeffs - tr.states[l].u.coeffs).norm(), 4);
    CHECK(increment_sum(tr, Var::u, 2) == doctest::Approx(s->p.h() * ref).epsilon(1e-13));
    CHECK_THROWS_AS(increment_sum(tr, Var::u, 0), std::invalid_argument);
    CHECK_THROWS_AS(increment_sum(tr, Var::u, s->p.N + 1), std::invalid_argument);
    // constants: (I + A_1)^{-1} k = k, so the dual norm equals the L2 norm
    const ScalarField k(s->p.grid, 2.5);
    CHECK(dual_norm(k) == doctest::Approx(l2_norm(k)).epsilon(1e-10));
    const ScalarField b = bump(s->p.grid, 1.0, -0.3, 0.2, 0.2);
    CHECK(dual_norm(b) < l2_norm(b));
    CHECK(dual_norm(b) > 0.0);
}

TEST_CASE("path summaries carry the documented keys") {
    const auto& [s, tr] = fx();
    SummaryOptions opt;
    opt.error_terms = true;
    const PathSummary ps = summarize_path(*s, tr, opt);
    for (const char* key : {"u.pathwise_lhs", "c.max_l2sq", "n.mass_drift", "ledger.u.max_residual", "resub.max",
                            "fp.max_iterations", "gap.u", "gap.c", "gap.n", "err.u", "err.c", "err.n",
                            "inc.u.j1", "inc.n.j8"})
        CHECK_MESSAGE(ps.values.count(key) == 1, key);
    CHECK(ps.values.at("gap.c") == interpolant_gap(tr, Var::c));
    Trajectory bad = tr;
    bad.failed = true;
    bad.failed_step = 3;
    const PathSummary pf = summarize_path(*s, bad);
    CHECK(pf.failed);
    CHECK(pf.failed_step == 3);
    CHECK(pf.values.empty());
    // C_imp = T (m+1)^2 |O| / (eta lambda_1)
    const double c = velocity_bound_constant(*s);
    CHECK(c == doctest::Approx(s->p.T * 25.0 / (s->p.eta() * s->basis()->eigenvalues[0])));
}

TEST_CASE("statistics and report entries") {
    const Statistic one = make_statistic({3.0});
    CHECK(one.count == 1);
    CHECK(one.mean == 3.0);
    CHECK_FALSE(one.se_defined);
    CHECK(one.se == 0.0);
    const Statistic st = make_statistic({1.0, 2.0, 3.0, 4.0});
    CHECK(st.mean == 2.5);
    CHECK(st.variance == doctest::Approx(5.0 / 3.0));
    CHECK(st.se == doctest::Approx(std::sqrt(5.0 / 12.0)));
    CHECK(make_statistic({}).count == 0);

    EstimateReport r;
    CHECK(add_entry(r, "a", "invariant", 1.0, 1.0, true).pass);
    CHECK(add_entry(r, "b", "invariant", 1.0 + 1e-9, 1.0, true).pass);
    CHECK_FALSE(add_entry(r, "c", "pathwise", 1.1, 1.0, false).pass);
    CHECK(r.hard_pass());
    CHECK_FALSE(r.all_pass());
    CHECK_FALSE(add_entry(r, "d", "invariant", NAN, 1.0, true).pass);
    CHECK_FALSE(r.hard_pass());
    CHECK(r.entries[2].margin == doctest::Approx(-0.1));
    CHECK(r.to_table().find("FAIL") != std::string::npos);
    CHECK(r.to_json().find("\"hard_pass\": false") != std::string::npos);
}

TEST_CASE("estimates hold on the zero ensemble") {
    const auto s = Scheme::build(small_params());
    const PathState z = zero_init(*s);
    std::vector<PathSummary> paths;
    for (std::uint64_t i = 0; i < 3; ++i) paths.push_back(summarize_path(*s, run_path(*s, PathSeed{0, i}, z)));
    const EstimateReport rep = check_estimates(paths, *s, z);
    for (const auto& e : rep.entries) CHECK_MESSAGE(e.pass, e.name);
    CHECK(rep.paths == 3);
    CHECK(rep.constants.count("C_imp") == 1);
}

TEST_CASE("cancellation suite and its negative control") {
    const auto s = Scheme::build(small_params());
    const CancellationResult c = cancellation_suite(*s->ops, 20, 11);
    CHECK(c.convection <= 1e-10);
    CHECK(c.noise_f <= 1e-10);
    CHECK(c.noise_g <= 1e-10);
    CHECK(c.chemotaxis_mass <= 1e-10);
    const auto raw = Scheme::build(small_params(), {}, false);
    const CancellationResult b = cancellation_suite(*raw->ops, 20, 11);
    CHECK(std::max({b.convection, b.noise_f, b.noise_g}) > 1e-6);
}
