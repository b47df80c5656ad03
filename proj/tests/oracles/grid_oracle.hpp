/// @file grid_oracle.hpp
/// @brief Brute-force reference implementations of the MAC-grid calculus.
///
/// Everything here is written from the stencil definitions with explicit
/// multi-index loops and dense matrices, independent of the library's flat
/// index arithmetic. Only the storage layout (cell and face ordering) is
/// shared, because results must be compared entry by entry.

#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>

#include "scns/fields.hpp"

namespace oracle {

using scns::Grid;
using scns::ScalarField;
using scns::VelocityField;

inline int nz(const Grid& g) { return g.dim == 3 ? g.n[2] : 1; }

/// Visits every cell as (i, j, k, flat index).
inline void each_cell(const Grid& g, const std::function<void(int, int, int, std::size_t)>& fn) {
    std::size_t idx = 0;
    for (int k = 0; k < nz(g); ++k)
        for (int j = 0; j < g.n[1]; ++j)
            for (int i = 0; i < g.n[0]; ++i) fn(i, j, k, idx++);
}

/// Visits every face normal to `a` as (i, j, k, flat index).
inline void each_face(const Grid& g, int a, const std::function<void(int, int, int, std::size_t)>& fn) {
    const int e0 = g.n[0] + (a == 0), e1 = g.n[1] + (a == 1), e2 = g.dim == 3 ? g.n[2] + (a == 2) : 1;
    std::size_t idx = 0;
    for (int k = 0; k < e2; ++k)
        for (int j = 0; j < e1; ++j)
            for (int i = 0; i < e0; ++i) fn(i, j, k, idx++);
}

inline std::size_t cell_at(const Grid& g, std::array<int, 3> c) {
    return static_cast<std::size_t>(c[0]) + static_cast<std::size_t>(g.n[0]) *
                                                (static_cast<std::size_t>(c[1]) +
                                                 static_cast<std::size_t>(g.n[1]) * c[2]);
}

inline std::size_t face_at(const Grid& g, int a, std::array<int, 3> c) {
    const std::size_t e0 = g.n[0] + (a == 0), e1 = g.n[1] + (a == 1);
    return static_cast<std::size_t>(c[0]) + e0 * (static_cast<std::size_t>(c[1]) + e1 * c[2]);
}

/// Sum f_c^2 vol-weighted.
inline double l2_inner(const ScalarField& a, const ScalarField& b) {
    const Grid& g = a.grid;
    double vol = 1.0;
    for (int d = 0; d < g.dim; ++d) vol *= g.length[d] / g.n[d];
    double s = 0.0;
    each_cell(g, [&](int, int, int, std::size_t id) { s += a.v[id] * b.v[id] * vol; });
    return s;
}

/// Face quadrature: full cell volume on interior faces, half of it on wall faces.
inline double l2_inner(const VelocityField& a, const VelocityField& b) {
    const Grid& g = a.grid;
    double vol = 1.0;
    for (int d = 0; d < g.dim; ++d) vol *= g.length[d] / g.n[d];
    double s = 0.0;
    for (int ax = 0; ax < g.dim; ++ax)
        each_face(g, ax, [&](int i, int j, int k, std::size_t id) {
            const int c = ax == 0 ? i : ax == 1 ? j : k;
            const double w = (c == 0 || c == g.n[ax]) ? 0.5 * vol : vol;
            s += w * a.f[ax][id] * b.f[ax][id];
        });
    return s;
}

/// Face gradient (phi_hi - phi_lo)/dx on interior faces, zero on walls.
inline VelocityField grad(const ScalarField& phi) {
    const Grid& g = phi.grid;
    VelocityField out(g);
    for (int ax = 0; ax < g.dim; ++ax) {
        const double dx = g.length[ax] / g.n[ax];
        each_face(g, ax, [&](int i, int j, int k, std::size_t id) {
            std::array<int, 3> c{i, j, k};
            if (c[ax] == 0 || c[ax] == g.n[ax]) return;
            std::array<int, 3> lo = c;
            lo[ax] -= 1;
            out.f[ax][id] = (phi.v[cell_at(g, c)] - phi.v[cell_at(g, lo)]) / dx;
        });
    }
    return out;
}

/// Cell divergence sum_a (v_hi - v_lo)/dx_a.
inline ScalarField div(const VelocityField& v) {
    const Grid& g = v.grid;
    ScalarField out(g);
    each_cell(g, [&](int i, int j, int k, std::size_t id) {
        double s = 0.0;
        for (int ax = 0; ax < g.dim; ++ax) {
            std::array<int, 3> hi{i, j, k};
            hi[ax] += 1;
            s += (v.f[ax][face_at(g, ax, hi)] - v.f[ax][face_at(g, ax, {i, j, k})]) / (g.length[ax] / g.n[ax]);
        }
        out.v[id] = s;
    });
    return out;
}

/// Dense matrix of -Delta_h with reflected (Neumann) ghosts:
/// every pair of adjacent cells contributes (x_p - x_q)/dx^2 to row p.
inline Eigen::MatrixXd neumann_matrix(const Grid& g) {
    const std::size_t n = g.cells();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    each_cell(g, [&](int i, int j, int k, std::size_t p) {
        for (int ax = 0; ax < g.dim; ++ax) {
            const double w = 1.0 / std::pow(g.length[ax] / g.n[ax], 2);
            for (int s : {-1, 1}) {
                std::array<int, 3> q{i, j, k};
                q[ax] += s;
                if (q[ax] < 0 || q[ax] >= g.n[ax]) continue;  // ghost equals the cell itself
                const std::size_t qi = cell_at(g, q);
                A(p, p) += w;
                A(p, qi) -= w;
            }
        }
    });
    return A;
}

inline Eigen::VectorXd vec(const ScalarField& f) {
    return Eigen::Map<const Eigen::VectorXd>(f.v.data(), static_cast<Eigen::Index>(f.v.size()));
}

inline ScalarField field(const Grid& g, const Eigen::VectorXd& x) {
    ScalarField f(g);
    for (std::size_t i = 0; i < f.v.size(); ++i) f.v[i] = x[static_cast<Eigen::Index>(i)];
    return f;
}

/// Random scalar field with entries N(0, 1).
inline ScalarField random_scalar(const Grid& g, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    ScalarField f(g);
    for (auto& x : f.v) x = nd(rng);
    return f;
}

/// Random velocity with zero wall-normal faces.
inline VelocityField random_velocity(const Grid& g, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    VelocityField v(g);
    for (int ax = 0; ax < g.dim; ++ax)
        each_face(g, ax, [&](int i, int j, int k, std::size_t id) {
            const int c = ax == 0 ? i : ax == 1 ? j : k;
            v.f[ax][id] = (c == 0 || c == g.n[ax]) ? 0.0 : nd(rng);
        });
    return v;
}

/// Face value with the velocity ghost rules: wall-normal faces beyond the
/// wall are zero, tangential neighbours across a wall are odd reflections.
inline double face_value(const Grid& g, const VelocityField& v, int ax, std::array<int, 3> c,
                         std::array<int, 3> from) {
    for (int b = 0; b < g.dim; ++b) {
        if (b == ax) {
            if (c[b] <= 0 || c[b] >= g.n[b]) return 0.0;
        } else if (c[b] < 0 || c[b] >= g.n[b]) {
            return -v.f[ax][face_at(g, ax, from)];
        }
    }
    return v.f[ax][face_at(g, ax, c)];
}

/// Raw trilinear form b(w, v, z) = sum over interior faces of
/// vol * (w interpolated to the face) . (centred grad of v_j) * z_j.
inline double trilinear(const VelocityField& w, const VelocityField& v, const VelocityField& z) {
    const Grid& g = v.grid;
    double vol = 1.0;
    for (int d = 0; d < g.dim; ++d) vol *= g.length[d] / g.n[d];
    double s = 0.0;
    for (int j = 0; j < g.dim; ++j)
        each_face(g, j, [&](int i0, int i1, int i2, std::size_t id) {
            const std::array<int, 3> c{i0, i1, i2};
            if (c[j] == 0 || c[j] == g.n[j]) return;
            double acc = 0.0;
            for (int b = 0; b < g.dim; ++b) {
                double wb = 0.0;
                if (b == j) {
                    wb = w.f[j][id];
                } else {
                    // average of the four b-faces around this j-face
                    for (int side = 0; side < 2; ++side)
                        for (int up = 0; up < 2; ++up) {
                            std::array<int, 3> fc = c;
                            fc[j] -= side;
                            fc[b] += up;
                            wb += 0.25 * w.f[b][face_at(g, b, fc)];
                        }
                }
                std::array<int, 3> lo = c, hi = c;
                lo[b] -= 1;
                hi[b] += 1;
                const double d = (face_value(g, v, j, hi, c) - face_value(g, v, j, lo, c)) /
                                 (2.0 * g.length[b] / g.n[b]);
                acc += wb * d;
            }
            s += vol * acc * z.f[j][id];
        });
    return s;
}

}  // namespace oracle
