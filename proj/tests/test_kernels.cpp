/// @file test_kernels.cpp
/// @brief Scalar/SIMD kernel equivalence and runtime selection.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "scns/fields.hpp"
#include "scns/kernels.hpp"

using namespace scns;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    std::vector<double> v(n);
    for (auto& x : v) x = nd(rng);
    return v;
}

/// Restores the automatic selection when a test case ends.
struct SelectionGuard {
    ~SelectionGuard() { kernels::select("auto"); }
};

}  // namespace

TEST_CASE("scalar backend is always available and selectable") {
    SelectionGuard guard;
    const auto names = kernels::available_backends();
    REQUIRE(!names.empty());
    CHECK(names.front() == "scalar");
    CHECK(kernels::select("scalar"));
    CHECK(std::string(kernels::active().name) == "scalar");
    CHECK_FALSE(kernels::select("no-such-backend"));
    CHECK(std::string(kernels::active().name) == "scalar");
    CHECK(kernels::select("auto"));
}

TEST_CASE("every backend matches the scalar reference") {
    std::mt19937_64 rng(11);
    const auto& ref = kernels::scalar_table();
    for (const auto& name : kernels::available_backends()) {
        const kernels::Table& k = name == "avx2" ? kernels::avx2_table() : kernels::scalar_table();
        CAPTURE(name);
        // lengths exercise the vector body and every remainder
        for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 31u, 64u, 1000u, 1027u}) {
            CAPTURE(n);
            const auto x = random_vec(n, rng), y = random_vec(n, rng), z = random_vec(n, rng);
            // elementwise kernels agree bitwise
            auto y1 = y, y2 = y;
            ref.axpy(0.37, x.data(), y1.data(), n);
            k.axpy(0.37, x.data(), y2.data(), n);
            CHECK(y1 == y2);
            y1 = y, y2 = y;
            ref.xpay(x.data(), -1.25, y1.data(), n);
            k.xpay(x.data(), -1.25, y2.data(), n);
            CHECK(y1 == y2);
            auto o1 = z, o2 = z;
            ref.stencil2(o1.data(), x.data(), y.data(), z.data(), 3.5, n);
            k.stencil2(o2.data(), x.data(), y.data(), z.data(), 3.5, n);
            CHECK(o1 == o2);
            o1 = z, o2 = z;
            ref.stencil1(o1.data(), x.data(), y.data(), 2.25, n);
            k.stencil1(o2.data(), x.data(), y.data(), 2.25, n);
            CHECK(o1 == o2);
            // reductions agree to rounding
            double scale = 0.0;
            for (std::size_t i = 0; i < n; ++i) scale += std::abs(x[i] * y[i]);
            CHECK(std::abs(ref.dot(x.data(), y.data(), n) - k.dot(x.data(), y.data(), n)) <=
                  1e-14 * (1.0 + scale));
        }
    }
}

TEST_CASE("field operations give the same results under every backend") {
    SelectionGuard guard;
    std::mt19937_64 rng(5);
    const Grid g = Grid::make(2, {13, 9, 1}, {1.0, 0.7, 1.0});
    ScalarField rhs(g);
    for (auto& x : rhs.v) x = std::normal_distribution<double>()(rng);

    REQUIRE(kernels::select("scalar"));
    const ScalarField lap_ref = neumann_laplacian(rhs);
    const ScalarField sol_ref = solve_helmholtz(0.3, 0.0, rhs, 1e-13);
    for (const auto& name : kernels::available_backends()) {
        CAPTURE(name);
        REQUIRE(kernels::select(name));
        CHECK(neumann_laplacian(rhs).v == lap_ref.v);  // elementwise: bitwise
        const ScalarField sol = solve_helmholtz(0.3, 0.0, rhs, 1e-13);
        CHECK(l2_norm(sol - sol_ref) <= 1e-11 * l2_norm(sol_ref));
    }
}
