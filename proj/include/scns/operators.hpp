/// @file operators.hpp
/// @brief Transport, reaction, chemotaxis and noise operators.
///
/// Every transport term is discretised in a skew (or conservative) form, so
/// the cancellations the energy estimates rely on hold to rounding:
///   (B^m(w, v), v) = 0, (noise_f(u, dW), u) = 0, (B_1(u, phi), phi) = 0,
///   (noise_g(c, dB), c) = 0, (B_3(theta(n), c), 1) = 0.
///
/// Velocity operators act in the spectral space H_m and are precomputed per
/// basis as small dense matrices; scalar operators act on the cell grid.

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "scns/fields.hpp"
#include "scns/stokes.hpp"
#include "scns/truncation.hpp"

namespace scns {

/// The dim transport fields g_k of the c-noise.
struct NoiseFields {
    std::vector<VelocityField> g;

    /// g_k = unit field on interior faces normal to axis k, zero on wall faces.
    static NoiseFields unit(const Grid& grid);
};

/// Precomputed spectral tensors for one basis.
class OperatorSet {
public:
    /// `skew = false` is a negative-control hook: it uses the raw advective
    /// forms, which do not cancel exactly.
    OperatorSet(BasisPtr basis, int theta_m, bool skew = true);

    const BasisPtr& basis() const { return basis_; }
    const Grid& grid() const { return basis_->grid; }
    const ThetaFamily& theta() const { return theta_; }
    const NoiseFields& noise_fields() const { return nf_; }
    bool skew() const { return skew_; }
    int m() const { return basis_->m; }

    /// Matrix C(w) with C(w) v = coeffs of B^m(w, v).
    Eigen::MatrixXd convection_matrix(const SpectralVelocity& w) const;
    /// Matrix sum_k dW_k F_k with F_k v = coeffs of the k-th directional derivative.
    Eigen::MatrixXd noise_f_matrix(const std::vector<double>& dW) const;

private:
    BasisPtr basis_;
    ThetaFamily theta_;
    NoiseFields nf_;
    bool skew_;
    std::vector<Eigen::MatrixXd> conv_;   // per advecting mode k
    std::vector<Eigen::MatrixXd> deriv_;  // per axis k
};

// ---------------------------------------------------------------------------
// Grid-space building blocks
// ---------------------------------------------------------------------------

/// (w . grad) v on interior faces: w interpolated to each face, centred
/// differences, odd tangential reflection at the walls.
VelocityField advect_faces(const VelocityField& w, const VelocityField& v);
/// Centred derivative d/dx_k of each face component, same wall treatment.
VelocityField face_derivative(const VelocityField& v, int k);
/// Skew-form scalar transport (1/(2V)) sum_faces F_f phi_neighbour, with F the
/// outward face flux of `u`. Exactly skew for any face field `u`.
ScalarField skew_transport(const VelocityField& u, const ScalarField& phi);

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// B^m(u_adv, u) in skew-symmetrised form.
SpectralVelocity convect_velocity(const OperatorSet& ops, const SpectralVelocity& u_adv,
                                  const SpectralVelocity& u);

/// Face field theta_m(n) * grad Phi (theta averaged to faces).
VelocityField buoyancy_field(const OperatorSet& ops, const ScalarField& n, const VelocityField& gradPhi);
/// B_0^m(theta_m(n), Phi) = pi_m(P_L(theta_m(n) grad Phi)).
SpectralVelocity buoyancy(const OperatorSet& ops, const ScalarField& n, const ScalarField& Phi);
/// Same with a precomputed grad Phi.
SpectralVelocity buoyancy_grad(const OperatorSet& ops, const ScalarField& n,
                               const VelocityField& gradPhi);

/// B_1(u, phi) = u . grad phi (skew form).
ScalarField convect_scalar(const OperatorSet& ops, const SpectralVelocity& u, const ScalarField& phi);
/// Same with the face velocity supplied directly.
ScalarField convect_scalar_faces(const OperatorSet& ops, const VelocityField& u, const ScalarField& phi);

/// B_2(theta^eps(n), c) = (theta_m(n) + 8/m) c.
ScalarField reaction(const OperatorSet& ops, const ScalarField& n, const ScalarField& c);

/// B_3(theta_m(n), c) = -div(theta_m(n) grad c) in flux form (no wall flux).
ScalarField chemotaxis_flux(const OperatorSet& ops, const ScalarField& n, const ScalarField& c);

/// pi_m P_L (sum_k dW_k d_k u), skew-symmetrised.
SpectralVelocity noise_f(const OperatorSet& ops, const SpectralVelocity& u,
                         const std::vector<double>& dW);

/// sum_k dB_k g_k . grad c (skew form).
ScalarField noise_g(const OperatorSet& ops, const ScalarField& c, const std::vector<double>& dB);

}  // namespace scns
