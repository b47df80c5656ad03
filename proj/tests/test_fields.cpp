/// @file test_fields.cpp
/// @brief Grid validation, quadrature, discrete calculus identities and the
///        Helmholtz-Neumann solver, checked against brute-force oracles.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles/grid_oracle.hpp"
#include "scns/fields.hpp"

using namespace scns;

namespace {

const Grid& grid2() {
    static const Grid g = Grid::make(2, {9, 7, 1}, {1.0, 0.8, 1.0});
    return g;
}
const Grid& grid3() {
    static const Grid g = Grid::make(3, {5, 4, 6}, {1.0, 0.5, 1.5});
    return g;
}

}  // namespace

TEST_CASE("grid validation") {
    CHECK_THROWS_AS(Grid::make(1, {8, 8, 1}, {1, 1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(Grid::make(2, {3, 8, 1}, {1, 1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(Grid::make(2, {8, 8, 1}, {1, -1, 1}), std::invalid_argument);
    CHECK_NOTHROW(Grid::make(2, {4, 4, 1}, {1, 1, 1}));
    const Grid g = Grid::make(2, {8, 4, 1}, {2.0, 1.0, 1.0});
    CHECK(g.dx[0] == doctest::Approx(0.25));
    CHECK(g.cells() == 32);
    CHECK(g.faces(0) == 9 * 4);
    CHECK(g.faces(1) == 8 * 5);
    CHECK(g.domain_volume() == doctest::Approx(2.0));
    CHECK(g.hash() == Grid::make(2, {8, 4, 1}, {2.0, 1.0, 1.0}).hash());
    CHECK(g.hash() != Grid::make(2, {8, 4, 1}, {2.0, 1.5, 1.0}).hash());
}

TEST_CASE("l2_inner: unit constants and random fields") {
    const Grid g = Grid::cube(2, 8);
    const ScalarField one(g, 1.0), minus(g, -1.0);
    CHECK(l2_inner(one, one) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(l2_inner(one, minus) == doctest::Approx(-1.0).epsilon(1e-14));
    std::mt19937_64 rng(1);
    for (const Grid* gp : {&grid2(), &grid3()}) {
        const auto a = oracle::random_scalar(*gp, rng), b = oracle::random_scalar(*gp, rng);
        CHECK(l2_inner(a, b) == doctest::Approx(oracle::l2_inner(a, b)).epsilon(1e-13));
        CHECK(l2_inner(a, b) == doctest::Approx(l2_inner(b, a)).epsilon(1e-15));
        const auto u = oracle::random_velocity(*gp, rng), w = oracle::random_velocity(*gp, rng);
        CHECK(l2_inner(u, w) == doctest::Approx(oracle::l2_inner(u, w)).epsilon(1e-13));
    }
}

TEST_CASE("grad, div and the Neumann Laplacian agree with the brute-force stencils") {
    std::mt19937_64 rng(2);
    for (const Grid* gp : {&grid2(), &grid3()}) {
        const Grid& g = *gp;
        const auto phi = oracle::random_scalar(g, rng);
        const VelocityField gr = grad(phi), gr_ref = oracle::grad(phi);
        for (int a = 0; a < g.dim; ++a)
            for (std::size_t i = 0; i < gr.f[a].size(); ++i)
                CHECK(gr.f[a][i] == doctest::Approx(gr_ref.f[a][i]).epsilon(1e-14));
        CHECK(gr.max_abs_wall_normal() == 0.0);

        const auto v = oracle::random_velocity(g, rng);
        const ScalarField dv = div(v), dv_ref = oracle::div(v);
        for (std::size_t i = 0; i < dv.v.size(); ++i)
            CHECK(dv.v[i] == doctest::Approx(dv_ref.v[i]).epsilon(1e-13));

        const Eigen::VectorXd lap_ref = oracle::neumann_matrix(g) * oracle::vec(phi);
        const ScalarField lap = neumann_laplacian(phi);
        CHECK((oracle::vec(lap) - lap_ref).norm() <= 1e-12 * lap_ref.norm());
    }
}

TEST_CASE("grad of constants and of x") {
    const Grid g = Grid::cube(2, 8);
    CHECK(grad(ScalarField(g, 3.0)).max_abs() == 0.0);
    ScalarField x(g);
    for (std::size_t i = 0; i < x.v.size(); ++i) x.v[i] = g.cell_center(i)[0];
    const VelocityField gx = grad(x);
    for (std::size_t f = 0; f < gx.f[0].size(); ++f)
        if (!g.is_wall_face(0, f)) CHECK(gx.f[0][f] == doctest::Approx(1.0).epsilon(1e-12));
    for (double v : gx.f[1]) CHECK(v == doctest::Approx(0.0));
    // linearity
    std::mt19937_64 rng(3);
    const auto phi = oracle::random_scalar(g, rng);
    const VelocityField a = grad(2.5 * phi), b = 2.5 * grad(phi);
    CHECK(l2_norm(a - b) <= 1e-14 * l2_norm(b));
}

TEST_CASE("adjointness, Green identity, symmetry and semidefiniteness") {
    std::mt19937_64 rng(4);
    for (const Grid* gp : {&grid2(), &grid3()}) {
        const Grid& g = *gp;
        for (int trial = 0; trial < 20; ++trial) {
            const auto phi = oracle::random_scalar(g, rng), psi = oracle::random_scalar(g, rng);
            const auto v = oracle::random_velocity(g, rng);
            const double adj = l2_inner(grad(phi), v) + l2_inner(phi, div(v));
            CHECK(std::abs(adj) <= 1e-12 * l2_norm(phi) * l2_norm(v));
            const double green = l2_inner(neumann_laplacian(phi), psi) - l2_inner(grad(phi), grad(psi));
            CHECK(std::abs(green) <= 1e-12 * l2_norm(grad(phi)) * l2_norm(grad(psi)) + 1e-12);
            const double sym = l2_inner(neumann_laplacian(phi), psi) - l2_inner(neumann_laplacian(psi), phi);
            CHECK(std::abs(sym) <= 1e-12 * l2_norm(phi) * l2_norm(psi) * 100.0);
            CHECK(l2_inner(neumann_laplacian(phi), phi) >= 0.0);
            const double h1 = h1_norm(phi);
            CHECK(h1 * h1 == doctest::Approx(l2_inner(phi, phi) + grad_norm(phi) * grad_norm(phi)).epsilon(1e-13));
        }
        CHECK(neumann_laplacian(ScalarField(g, 2.0)).v == ScalarField(g, 0.0).v);
        CHECK(max_abs(div(VelocityField(g))) == 0.0);
    }
}

TEST_CASE("velocity Laplacian is symmetric positive definite on no-slip fields") {
    std::mt19937_64 rng(6);
    const Grid& g = grid2();
    for (int trial = 0; trial < 10; ++trial) {
        const auto u = oracle::random_velocity(g, rng), w = oracle::random_velocity(g, rng);
        const double a = l2_inner(velocity_laplacian(u), w), b = l2_inner(velocity_laplacian(w), u);
        CHECK(a == doctest::Approx(b).epsilon(1e-12));
        CHECK(velocity_grad_norm_sq(u) > 0.0);
        CHECK(velocity_laplacian(u).max_abs_wall_normal() == 0.0);
    }
}

TEST_CASE("Helmholtz solver") {
    std::mt19937_64 rng(7);
    const Grid& g = grid2();
    SUBCASE("constants are reproduced") {
        const ScalarField x = solve_helmholtz(0.7, 0.0, ScalarField(g, 2.5));
        for (double v : x.v) CHECK(v == doctest::Approx(2.5).epsilon(1e-12));
    }
    SUBCASE("tau -> 0 gives the identity") {
        const auto b = oracle::random_scalar(g, rng);
        const ScalarField x = solve_helmholtz(1e-14, 0.0, b);
        CHECK(l2_norm(x - b) <= 1e-10 * l2_norm(b));
    }
    SUBCASE("residual oracle against the dense operator") {
        for (double kappa : {0.0, 0.5}) {
            const auto b = oracle::random_scalar(g, rng);
            SolveStats st;
            const ScalarField x = solve_helmholtz(0.3, kappa, b, 1e-12, 0, &st);
            const Eigen::MatrixXd M =
                (1.0 + kappa) * Eigen::MatrixXd::Identity(g.cells(), g.cells()) + 0.3 * oracle::neumann_matrix(g);
            const Eigen::VectorXd r = M * oracle::vec(x) - oracle::vec(b);
            CHECK(r.norm() <= 1e-11 * oracle::vec(b).norm());
            CHECK(st.relative_residual <= 1e-12);
            CHECK(st.iterations > 0);
            // exact mass balance from the residual fold-back
            CHECK(std::abs(r.sum()) <= 1e-13 * std::abs(oracle::vec(b).sum()) + 1e-13);
        }
    }
    SUBCASE("iteration cap raises SolverFailure") {
        const auto b = oracle::random_scalar(g, rng);
        CHECK_THROWS_AS(solve_helmholtz(10.0, 0.0, b, 1e-14, 2), SolverFailure);
    }
    SUBCASE("Neumann Poisson returns a mean-free solution") {
        const auto b = oracle::random_scalar(g, rng);
        ScalarField p;
        solve_neumann_poisson_into(b, p, 1e-12);
        CHECK(std::abs(integral(p)) <= 1e-12);
        ScalarField bm = b;
        const double mean = integral(b) / g.domain_volume();
        for (double& v : bm.v) v -= mean;
        CHECK(l2_norm(neumann_laplacian(p) - bm) <= 1e-10 * l2_norm(bm));
    }
}

TEST_CASE("structural errors on grid mismatch") {
    const ScalarField a(Grid::cube(2, 8)), b(Grid::cube(2, 6));
    CHECK_THROWS_AS(l2_inner(a, b), StructuralError);
    ScalarField c = a;
    CHECK_THROWS_AS(c += b, StructuralError);
}

TEST_CASE("serialization round trips") {
    std::mt19937_64 rng(8);
    const Grid& g = grid3();
    const auto f = oracle::random_scalar(g, rng);
    std::stringstream ss;
    write_binary(ss, f);
    const ScalarField back = read_binary(ss);
    CHECK(back.grid == g);
    CHECK(back.v == f.v);
    const auto v = oracle::random_velocity(g, rng);
    std::stringstream sv;
    write_binary(sv, v);
    const VelocityField vb = read_binary_velocity(sv);
    for (int a = 0; a < 3; ++a) CHECK(vb.f[a] == v.f[a]);
    CHECK(grid_from_json(grid_json(g)) == g);
    std::ostringstream csv;
    write_csv(csv, ScalarField(Grid::cube(2, 4), 1.5));
    std::istringstream in(csv.str());
    std::string line;
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty() && line[0] != '#' && line[0] != 'i') ++rows;
    CHECK(rows == 16);
}
