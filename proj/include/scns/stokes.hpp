/// @file stokes.hpp
/// @brief Leray projection, the discrete Stokes eigenbasis spanning H_m, and
///        the Galerkin projection pi_m.
///
/// The discrete velocity space is the set of interior face values (wall-normal
/// faces are pinned to zero). Its divergence-free subspace is the null space of
/// the cell divergence; the basis modes are the lowest eigenvectors of the
/// no-slip vector Laplacian restricted to that subspace, L2-orthonormal.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "scns/fields.hpp"

namespace scns {

/// Bijection between interior faces and a flat degree-of-freedom vector.
class DofMap {
public:
    explicit DofMap(const Grid& g);
    const Grid& grid() const { return grid_; }
    std::size_t size() const { return axis_.size(); }
    int axis(std::size_t d) const { return axis_[d]; }
    std::size_t face(std::size_t d) const { return face_[d]; }

    Eigen::VectorXd to_vector(const VelocityField& v) const;
    VelocityField to_field(const Eigen::Ref<const Eigen::VectorXd>& x) const;

private:
    Grid grid_;
    std::vector<int> axis_;
    std::vector<std::size_t> face_;
};

struct StokesBasis {
    Grid grid;
    int m = 0;
    /// Ascending, strictly positive.
    std::vector<double> eigenvalues;
    /// One column per mode, in DofMap order (L2-normalised).
    Eigen::MatrixXd modes;
    /// Dimension of the discretely divergence-free subspace.
    std::size_t solenoidal_dim = 0;
    /// Sharp sup-norm constant: ||sum c_i e_i||_inf <= c_inf * |c|_2.
    double c_inf = 0.0;
    /// max_i ||e_i||_inf (reported alongside c_inf).
    double max_mode_sup = 0.0;

    /// Face <-> vector mapping for `grid`.
    std::shared_ptr<const DofMap> dofmap;

    std::size_t dofs() const { return static_cast<std::size_t>(modes.rows()); }
    VelocityField mode(int i) const;
};

using BasisPtr = std::shared_ptr<const StokesBasis>;

/// Coefficients of a velocity in H_m.
struct SpectralVelocity {
    BasisPtr basis;
    Eigen::VectorXd coeffs;

    SpectralVelocity() = default;
    explicit SpectralVelocity(BasisPtr b) : basis(std::move(b)), coeffs(Eigen::VectorXd::Zero(basis->m)) {}
    SpectralVelocity(BasisPtr b, Eigen::VectorXd c) : basis(std::move(b)), coeffs(std::move(c)) {}

    /// Euclidean norm of coefficients (= L2 norm of the reconstruction).
    double l2() const { return coeffs.norm(); }
    /// ||grad u||^2 = sum lambda_i c_i^2.
    double grad_sq() const;
};

void require_same_basis(const SpectralVelocity& a, const SpectralVelocity& b, const char* what);

/// v - grad p with A_1 p = -div v; tol is the Poisson solver's relative tolerance.
VelocityField leray_project(const VelocityField& v, double tol = 1e-12);

struct BasisOptions {
    /// Directory for the disk cache; empty disables caching. When unset the
    /// environment variable SCNS_BASIS_CACHE is used, if present.
    std::string cache_dir;
    bool use_env_cache = true;
    /// Relative eigenvalue gap below which modes are treated as degenerate.
    double cluster_tol = 1e-9;
};

/// Computes (or loads from cache) the m lowest Stokes modes on `grid`.
BasisPtr compute_basis(const Grid& grid, int m, const BasisOptions& opt = {});

/// Cache file stem (without extension) for a (grid, m) pair.
std::string basis_cache_stem(const Grid& grid, int m);
void save_basis(const StokesBasis& b, const std::string& dir);
/// Returns nullptr when no valid cache entry exists.
BasisPtr load_basis(const Grid& grid, int m, const std::string& dir);

SpectralVelocity pi_m(const VelocityField& v, const BasisPtr& basis);
VelocityField reconstruct(const SpectralVelocity& u);
/// Face values of the reconstruction, DofMap order.
Eigen::VectorXd reconstruct_dofs(const SpectralVelocity& u);
/// Spectral Stokes operator: multiplies coefficients by eigenvalues.
SpectralVelocity apply_stokes(const SpectralVelocity& u);

}  // namespace scns
