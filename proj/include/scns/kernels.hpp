/// @file kernels.hpp
/// @brief Inner-loop numeric kernels with a scalar reference and SIMD variants.
///
/// The conjugate-gradient Helmholtz solver and the Neumann stencil spend all of
/// their time in a handful of contiguous loops. Each loop has a portable scalar
/// reference implementation and an AVX2 variant; the active table is chosen at
/// runtime from the CPU features (or forced by name, for testing).
///
/// Elementwise kernels (axpy, xpay, stencils) use the same operation order as
/// the scalar reference and no fused multiply-add, so they agree bitwise.
/// Reductions (dot) reorder additions and agree to rounding only.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace scns::kernels {

struct Table {
    const char* name;
    /// sum_i x[i]*y[i]
    double (*dot)(const double* x, const double* y, std::size_t n);
    /// y[i] += a*x[i]
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    /// y[i] = x[i] + a*y[i]
    void (*xpay)(const double* x, double a, double* y, std::size_t n);
    /// out[i] += w*((x[i] - xm[i]) + (x[i] - xp[i]))  (two-sided second difference)
    void (*stencil2)(double* out, const double* x, const double* xm, const double* xp, double w,
                     std::size_t n);
    /// out[i] += w*(x[i] - xn[i])  (one-sided difference at a Neumann wall)
    void (*stencil1)(double* out, const double* x, const double* xn, double w, std::size_t n);
};

/// Portable reference table.
const Table& scalar_table();

/// AVX2 table; only valid when avx2_available() is true.
const Table& avx2_table();

bool avx2_available();

/// Table currently used by the library.
const Table& active();

/// Select a backend by name: "auto", "scalar" or "avx2". Returns false (and
/// leaves the selection unchanged) for unknown or unsupported names.
bool select(const std::string& name);

/// Names of all backends usable on this machine.
std::vector<std::string> available_backends();

}  // namespace scns::kernels
