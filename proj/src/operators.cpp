/// @file operators.cpp
/// @brief Grid stencils for transport terms and their spectral tensors.

#include "scns/operators.hpp"

#include <cmath>

namespace scns {

namespace {

/// Calls fn(face, lo_cell, hi_cell) for every interior face normal to axis a.
template <class Fn>
void for_interior_faces(const Grid& g, int a, Fn&& fn) {
    const std::size_t cs = g.cell_stride(a);
    for (int i2 = 0; i2 < g.n[2]; ++i2)
        for (int i1 = 0; i1 < g.n[1]; ++i1)
            for (int i0 = 0; i0 < g.n[0]; ++i0) {
                const std::array<int, 3> c{i0, i1, i2};
                if (c[a] == 0) continue;
                const std::size_t hi = g.cell_index(i0, i1, i2);
                fn(g.face_index(a, i0, i1, i2), hi - cs, hi);
            }
}

/// Centred derivative along b of the face array normal to j, evaluated at face
/// coordinates c; wall-normal neighbours are zero, tangential ghosts odd.
double face_diff(const Grid& g, const std::vector<double>& v, int j, const std::array<int, 3>& c,
                 std::size_t fi, int b) {
    const std::size_t s = g.face_stride(j, b);
    double lo, hi;
    if (b == j) {
        lo = (c[j] - 1 == 0) ? 0.0 : v[fi - s];
        hi = (c[j] + 1 == g.n[j]) ? 0.0 : v[fi + s];
    } else {
        lo = (c[b] == 0) ? -v[fi] : v[fi - s];
        hi = (c[b] == g.n[b] - 1) ? -v[fi] : v[fi + s];
    }
    return (hi - lo) / (2.0 * g.dx[b]);
}

/// Component b of w interpolated to the face normal to j at coordinates c.
double face_interp(const Grid& g, const VelocityField& w, int j, int b, const std::array<int, 3>& c,
                   std::size_t fi) {
    if (b == j) return w.f[j][fi];
    double s = 0.0;
    for (int side = 0; side < 2; ++side) {
        std::array<int, 3> cell = c;
        cell[j] -= side;  // the two cells sharing this face
        for (int up = 0; up < 2; ++up) {
            std::array<int, 3> fc = cell;
            fc[b] += up;  // the two b-faces of that cell
            s += w.f[b][g.face_index(b, fc[0], fc[1], fc[2])];
        }
    }
    return 0.25 * s;
}

/// Non-skew control: cell-centred velocity times centred differences,
/// one-sided at the walls.
ScalarField advective_transport_nonskew(const VelocityField& u, const ScalarField& phi) {
    const Grid& g = phi.grid;
    ScalarField out(g);
    for (std::size_t ci = 0; ci < out.v.size(); ++ci) {
        const auto c = g.cell_coords(ci);
        double acc = 0.0;
        for (int a = 0; a < g.dim; ++a) {
            const std::size_t lo = g.face_index(a, c[0], c[1], c[2]);
            const double uc = 0.5 * (u.f[a][lo] + u.f[a][lo + g.face_stride(a, a)]);
            const std::size_t s = g.cell_stride(a);
            double d;
            if (c[a] == 0)
                d = (phi.v[ci + s] - phi.v[ci]) / g.dx[a];
            else if (c[a] == g.n[a] - 1)
                d = (phi.v[ci] - phi.v[ci - s]) / g.dx[a];
            else
                d = (phi.v[ci + s] - phi.v[ci - s]) / (2.0 * g.dx[a]);
            acc += uc * d;
        }
        out.v[ci] = acc;
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Grid-space building blocks
// ---------------------------------------------------------------------------

VelocityField advect_faces(const VelocityField& w, const VelocityField& v) {
    require_same_grid(w.grid, v.grid, "advect_faces");
    const Grid& g = v.grid;
    VelocityField out(g);
    for (int j = 0; j < g.dim; ++j) {
        for (std::size_t fi = 0; fi < v.f[j].size(); ++fi) {
            const auto c = g.face_coords(j, fi);
            if (c[j] == 0 || c[j] == g.n[j]) continue;
            double acc = 0.0;
            for (int b = 0; b < g.dim; ++b)
                acc += face_interp(g, w, j, b, c, fi) * face_diff(g, v.f[j], j, c, fi, b);
            out.f[j][fi] = acc;
        }
    }
    return out;
}

VelocityField face_derivative(const VelocityField& v, int k) {
    const Grid& g = v.grid;
    VelocityField out(g);
    for (int j = 0; j < g.dim; ++j) {
        for (std::size_t fi = 0; fi < v.f[j].size(); ++fi) {
            const auto c = g.face_coords(j, fi);
            if (c[j] == 0 || c[j] == g.n[j]) continue;
            out.f[j][fi] = face_diff(g, v.f[j], j, c, fi, k);
        }
    }
    return out;
}

ScalarField skew_transport(const VelocityField& u, const ScalarField& phi) {
    require_same_grid(u.grid, phi.grid, "skew_transport");
    const Grid& g = phi.grid;
    ScalarField out(g);
    for (int a = 0; a < g.dim; ++a) {
        const double w = 0.5 / g.dx[a];  // F_f / (2V) = u_f / (2 dx_a)
        const auto& ua = u.f[a];
        for_interior_faces(g, a, [&](std::size_t f, std::size_t lo, std::size_t hi) {
            const double q = w * ua[f];
            out.v[lo] += q * phi.v[hi];  // outflow of lo through its high face
            out.v[hi] -= q * phi.v[lo];  // inflow of hi through its low face
        });
    }
    return out;
}

NoiseFields NoiseFields::unit(const Grid& grid) {
    NoiseFields nf;
    for (int k = 0; k < grid.dim; ++k) {
        VelocityField gk(grid);
        for (std::size_t f = 0; f < gk.f[k].size(); ++f)
            if (!grid.is_wall_face(k, f)) gk.f[k][f] = 1.0;
        nf.g.push_back(std::move(gk));
    }
    return nf;
}

// ---------------------------------------------------------------------------
// OperatorSet
// ---------------------------------------------------------------------------

OperatorSet::OperatorSet(BasisPtr basis, int theta_m, bool skew)
    : basis_(std::move(basis)), theta_(theta_m), nf_(NoiseFields::unit(basis_->grid)), skew_(skew) {
    const int m = basis_->m;
    const Grid& g = basis_->grid;
    const double V = g.cell_volume();
    std::vector<VelocityField> modes;
    for (int i = 0; i < m; ++i) modes.push_back(basis_->mode(i));
    const DofMap& dm = *basis_->dofmap;

    // conv_[k](i, j) = (N(e_k) e_j, e_i), then skew-symmetrised.
    conv_.assign(m, Eigen::MatrixXd::Zero(m, m));
    for (int k = 0; k < m; ++k) {
        Eigen::MatrixXd N(basis_->dofs(), m);
        for (int j = 0; j < m; ++j) N.col(j) = dm.to_vector(advect_faces(modes[k], modes[j]));
        Eigen::MatrixXd T = V * (basis_->modes.transpose() * N);
        conv_[k] = skew_ ? Eigen::MatrixXd(0.5 * (T - T.transpose())) : T;
    }
    // deriv_[k](i, j) = (d_k e_j, e_i), then skew-symmetrised.
    deriv_.assign(g.dim, Eigen::MatrixXd::Zero(m, m));
    for (int k = 0; k < g.dim; ++k) {
        Eigen::MatrixXd D(basis_->dofs(), m);
        for (int j = 0; j < m; ++j) D.col(j) = dm.to_vector(face_derivative(modes[j], k));
        Eigen::MatrixXd T = V * (basis_->modes.transpose() * D);
        deriv_[k] = skew_ ? Eigen::MatrixXd(0.5 * (T - T.transpose())) : T;
    }
}

Eigen::MatrixXd OperatorSet::convection_matrix(const SpectralVelocity& w) const {
    if (w.basis != basis_) throw StructuralError("convection: basis mismatch");
    const int m = basis_->m;
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(m, m);
    for (int k = 0; k < m; ++k)
        if (w.coeffs[k] != 0.0) C += w.coeffs[k] * conv_[k];
    return C;
}

Eigen::MatrixXd OperatorSet::noise_f_matrix(const std::vector<double>& dW) const {
    if (static_cast<int>(dW.size()) != grid().dim) throw StructuralError("noise_f: dW length != dim");
    const int m = basis_->m;
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(m, m);
    for (int k = 0; k < grid().dim; ++k) F += dW[k] * deriv_[k];
    return F;
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

SpectralVelocity convect_velocity(const OperatorSet& ops, const SpectralVelocity& u_adv,
                                  const SpectralVelocity& u) {
    require_same_basis(u_adv, u, "convect_velocity");
    return SpectralVelocity(u.basis, ops.convection_matrix(u_adv) * u.coeffs);
}

VelocityField buoyancy_field(const OperatorSet& ops, const ScalarField& n, const VelocityField& gradPhi) {
    require_same_grid(n.grid, gradPhi.grid, "buoyancy");
    const Grid& g = n.grid;
    const ScalarField th = ops.theta().apply(n);
    VelocityField out(g);
    for (int a = 0; a < g.dim; ++a)
        for_interior_faces(g, a, [&](std::size_t f, std::size_t lo, std::size_t hi) {
            out.f[a][f] = 0.5 * (th.v[lo] + th.v[hi]) * gradPhi.f[a][f];
        });
    return out;
}

SpectralVelocity buoyancy_grad(const OperatorSet& ops, const ScalarField& n,
                               const VelocityField& gradPhi) {
    // The modes are discretely solenoidal with zero wall-normal faces, hence
    // orthogonal to every discrete gradient: pi_m o P_L equals pi_m exactly.
    return pi_m(buoyancy_field(ops, n, gradPhi), ops.basis());
}

SpectralVelocity buoyancy(const OperatorSet& ops, const ScalarField& n, const ScalarField& Phi) {
    return buoyancy_grad(ops, n, grad(Phi));
}

ScalarField convect_scalar_faces(const OperatorSet& ops, const VelocityField& u, const ScalarField& phi) {
    return ops.skew() ? skew_transport(u, phi) : advective_transport_nonskew(u, phi);
}

ScalarField convect_scalar(const OperatorSet& ops, const SpectralVelocity& u, const ScalarField& phi) {
    return convect_scalar_faces(ops, reconstruct(u), phi);
}

ScalarField reaction(const OperatorSet& ops, const ScalarField& n, const ScalarField& c) {
    require_same_grid(n.grid, c.grid, "reaction");
    ScalarField out(c.grid);
    const auto& th = ops.theta();
    for (std::size_t i = 0; i < c.v.size(); ++i) out.v[i] = th.eps_value(n.v[i]) * c.v[i];
    return out;
}

ScalarField chemotaxis_flux(const OperatorSet& ops, const ScalarField& n, const ScalarField& c) {
    require_same_grid(n.grid, c.grid, "chemotaxis_flux");
    const Grid& g = c.grid;
    const ScalarField th = ops.theta().apply(n);
    ScalarField out(g);
    for (int a = 0; a < g.dim; ++a) {
        const double w = 1.0 / (g.dx[a] * g.dx[a]);
        for_interior_faces(g, a, [&](std::size_t, std::size_t lo, std::size_t hi) {
            const double q = w * 0.5 * (th.v[lo] + th.v[hi]) * (c.v[hi] - c.v[lo]);
            out.v[lo] -= q;  // -div of the flux theta grad c
            out.v[hi] += q;
        });
    }
    return out;
}

SpectralVelocity noise_f(const OperatorSet& ops, const SpectralVelocity& u,
                         const std::vector<double>& dW) {
    if (u.basis != ops.basis()) throw StructuralError("noise_f: basis mismatch");
    return SpectralVelocity(u.basis, ops.noise_f_matrix(dW) * u.coeffs);
}

ScalarField noise_g(const OperatorSet& ops, const ScalarField& c, const std::vector<double>& dB) {
    const Grid& g = c.grid;
    if (static_cast<int>(dB.size()) != g.dim) throw StructuralError("noise_g: dB length != dim");
    VelocityField v(g);
    for (int k = 0; k < g.dim; ++k) {
        VelocityField gk = ops.noise_fields().g[k];
        gk *= dB[k];
        v += gk;
    }
    return ops.skew() ? skew_transport(v, c) : advective_transport_nonskew(v, c);
}

}  // namespace scns
