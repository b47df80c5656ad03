/// @file fields.hpp
/// @brief Box grids, cell-centred scalar fields, MAC face velocity fields and
///        the discrete calculus built on them.
///
/// Layout conventions
///   - cells are indexed i0 + n0*(i1 + n1*i2) (axis 0 fastest);
///   - the faces normal to axis a carry indices i_a in [0, n_a] and i_b in
///     [0, n_b) for b != a, flattened the same way with extent n_a + 1 on axis a;
///   - faces with i_a == 0 or i_a == n_a lie on the wall and stay zero for
///     no-slip fields.
///
/// Inner products are quadrature sums: cell volume per cell for scalars, cell
/// volume per interior face (half of it on wall faces) for velocities.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace scns {

/// Raised when two operands live on different grids or have the wrong shape.
struct StructuralError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Raised when an iterative or direct solver does not meet its tolerance.
struct SolverFailure : std::runtime_error {
    SolverFailure(const std::string& what, double residual_)
        : std::runtime_error(what), residual(residual_) {}
    double residual;
};

struct Grid {
    int dim = 2;
    std::array<int, 3> n{1, 1, 1};
    std::array<double, 3> length{1.0, 1.0, 1.0};
    std::array<double, 3> dx{1.0, 1.0, 1.0};

    /// Validates dim in {2,3}, >= 4 cells per axis, >= 16 cells, lengths > 0.
    static Grid make(int dim, std::array<int, 3> cells, std::array<double, 3> lengths);
    /// Unit box with the same cell count on every axis.
    static Grid cube(int dim, int cells_per_axis);

    std::size_t cells() const;
    double cell_volume() const;
    double domain_volume() const;

    /// Number of faces normal to `axis`, wall faces included.
    std::size_t faces(int axis) const;
    /// Extent of the face array along `b` for faces normal to `axis`.
    int face_extent(int axis, int b) const { return n[b] + (b == axis ? 1 : 0); }
    /// Flat stride along `b` in the face array normal to `axis`.
    std::size_t face_stride(int axis, int b) const;
    /// Flat stride along `axis` in the cell array.
    std::size_t cell_stride(int axis) const;

    std::size_t cell_index(int i0, int i1, int i2 = 0) const {
        return static_cast<std::size_t>(i0) +
               static_cast<std::size_t>(n[0]) *
                   (static_cast<std::size_t>(i1) + static_cast<std::size_t>(n[1]) * i2);
    }
    std::size_t face_index(int axis, int i0, int i1, int i2 = 0) const {
        const std::size_t e0 = face_extent(axis, 0), e1 = face_extent(axis, 1);
        return static_cast<std::size_t>(i0) +
               e0 * (static_cast<std::size_t>(i1) + e1 * static_cast<std::size_t>(i2));
    }
    /// Multi-index of a face.
    std::array<int, 3> face_coords(int axis, std::size_t idx) const;
    std::array<int, 3> cell_coords(std::size_t idx) const;
    /// True for faces on the wall normal to their own axis.
    bool is_wall_face(int axis, std::size_t idx) const;

    /// Physical centre of a cell / face.
    std::array<double, 3> cell_center(std::size_t idx) const;
    std::array<double, 3> face_center(int axis, std::size_t idx) const;

    /// Stable content hash of the geometry (used to key caches and headers).
    std::uint64_t hash() const;

    bool operator==(const Grid& o) const {
        return dim == o.dim && n == o.n && length == o.length;
    }
    bool operator!=(const Grid& o) const { return !(*this == o); }
};

struct ScalarField {
    Grid grid;
    std::vector<double> v;

    ScalarField() = default;
    explicit ScalarField(const Grid& g, double value = 0.0) : grid(g), v(g.cells(), value) {}

    std::size_t size() const { return v.size(); }
    double& operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }

    ScalarField& operator+=(const ScalarField& o);
    ScalarField& operator-=(const ScalarField& o);
    ScalarField& operator*=(double a);
    bool all_finite() const;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double s, ScalarField a);

struct VelocityField {
    Grid grid;
    std::array<std::vector<double>, 3> f;

    VelocityField() = default;
    explicit VelocityField(const Grid& g);

    VelocityField& operator+=(const VelocityField& o);
    VelocityField& operator-=(const VelocityField& o);
    VelocityField& operator*=(double a);
    bool all_finite() const;
    /// Max |value| over all faces and components.
    double max_abs() const;
    /// Max |value| over wall faces normal to their axis (zero for no-slip fields).
    double max_abs_wall_normal() const;
};

VelocityField operator+(VelocityField a, const VelocityField& b);
VelocityField operator-(VelocityField a, const VelocityField& b);
VelocityField operator*(double s, VelocityField a);

// ---------------------------------------------------------------------------
// Inner products and norms
// ---------------------------------------------------------------------------

double l2_inner(const ScalarField& a, const ScalarField& b);
double l2_inner(const VelocityField& a, const VelocityField& b);
double l2_norm(const ScalarField& a);
double l2_norm(const VelocityField& a);
/// Quadrature integral sum_c a_c * cellVolume.
double integral(const ScalarField& a);
double max_abs(const ScalarField& a);
/// ||grad phi||_{0,2}
double grad_norm(const ScalarField& phi);
/// ||phi||_{1,2} = sqrt(||phi||^2 + ||grad phi||^2)
double h1_norm(const ScalarField& phi);

// ---------------------------------------------------------------------------
// Discrete calculus
// ---------------------------------------------------------------------------

/// Face gradient with reflected (Neumann) ghosts: wall faces get zero.
VelocityField grad(const ScalarField& phi);
/// Cell divergence; minus the adjoint of grad on fields with zero wall faces.
ScalarField div(const VelocityField& v);
/// A_1 phi = -Delta_h phi with Neumann ghosts (symmetric positive semidefinite).
ScalarField neumann_laplacian(const ScalarField& phi);
/// out = (1 + kappa) x + tau * A_1 x.
void apply_helmholtz(double tau, double kappa, const ScalarField& x, ScalarField& out);
/// -Delta_h on face velocities with no-slip walls: wall-normal faces are
/// fixed at zero, tangential ghosts are reflected with a sign change.
VelocityField velocity_laplacian(const VelocityField& v);
/// ||grad v||^2 := (-Delta_h v, v), the Dirichlet form of velocity_laplacian.
double velocity_grad_norm_sq(const VelocityField& v);

struct SolveStats {
    int iterations = 0;
    double relative_residual = 0.0;
};

/// Solves ((1 + kappa) I + tau A_1) x = rhs by conjugate gradients to
/// relative residual <= tol, with at most max_iters iterations (0 means
/// 10 * cells). `x` on entry is the initial guess; it is resized/zeroed when
/// it lives on another grid. After convergence the mean of the residual is
/// folded back into x, which makes the discrete mass of the solution exact.
/// Throws SolverFailure when the cap is reached.
SolveStats solve_helmholtz_into(double tau, double kappa, const ScalarField& rhs, ScalarField& x,
                                double tol = 1e-10, int max_iters = 0);

/// Solves A_1 p = rhs - mean(rhs) for the mean-free p (pure Neumann problem).
SolveStats solve_neumann_poisson_into(const ScalarField& rhs, ScalarField& x, double tol = 1e-12,
                                      int max_iters = 0);

/// Convenience wrapper starting from a zero initial guess.
ScalarField solve_helmholtz(double tau, double kappa, const ScalarField& rhs, double tol = 1e-10,
                            int max_iters = 0, SolveStats* stats = nullptr);

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// JSON description of a grid.
std::string grid_json(const Grid& g);
/// Parses grid_json output.
Grid grid_from_json(const std::string& text);

/// One row per cell: i0,i1[,i2],value (17 significant digits).
void write_csv(std::ostream& os, const ScalarField& f);
/// One JSON header line, then little-endian doubles in cell order.
void write_binary(std::ostream& os, const ScalarField& f);
ScalarField read_binary(std::istream& is);
void write_binary(std::ostream& os, const VelocityField& f);
VelocityField read_binary_velocity(std::istream& is);

void require_same_grid(const Grid& a, const Grid& b, const char* what);

}  // namespace scns
