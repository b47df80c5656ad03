/// @file fields.cpp
/// @brief Grid geometry, field arithmetic, MAC calculus, CG Helmholtz solver.

#include "scns/fields.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "scns/kernels.hpp"

namespace scns {

// ---------------------------------------------------------------------------
// Grid
// ---------------------------------------------------------------------------

Grid Grid::make(int dim, std::array<int, 3> cells, std::array<double, 3> lengths) {
    if (dim != 2 && dim != 3) throw std::invalid_argument("grid: dim must be 2 or 3");
    Grid g;
    g.dim = dim;
    std::size_t total = 1;
    for (int a = 0; a < 3; ++a) {
        if (a < dim) {
            if (cells[a] < 4) throw std::invalid_argument("grid: need at least 4 cells per axis");
            if (!(lengths[a] > 0.0) || !std::isfinite(lengths[a]))
                throw std::invalid_argument("grid: box lengths must be positive");
            g.n[a] = cells[a];
            g.length[a] = lengths[a];
            g.dx[a] = lengths[a] / cells[a];
            total *= static_cast<std::size_t>(cells[a]);
        } else {
            g.n[a] = 1;
            g.length[a] = 1.0;
            g.dx[a] = 1.0;
        }
    }
    if (total < 16) throw std::invalid_argument("grid: need at least 16 cells");
    return g;
}

Grid Grid::cube(int dim, int cells_per_axis) {
    return make(dim, {cells_per_axis, cells_per_axis, cells_per_axis}, {1.0, 1.0, 1.0});
}

std::size_t Grid::cells() const {
    return static_cast<std::size_t>(n[0]) * n[1] * n[2];
}

double Grid::cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < dim; ++a) v *= dx[a];
    return v;
}

double Grid::domain_volume() const {
    double v = 1.0;
    for (int a = 0; a < dim; ++a) v *= length[a];
    return v;
}

std::size_t Grid::faces(int axis) const {
    if (axis >= dim) return 0;
    std::size_t c = 1;
    for (int b = 0; b < 3; ++b) c *= static_cast<std::size_t>(face_extent(axis, b));
    return c;
}

std::size_t Grid::face_stride(int axis, int b) const {
    std::size_t s = 1;
    for (int c = 0; c < b; ++c) s *= static_cast<std::size_t>(face_extent(axis, c));
    return s;
}

std::size_t Grid::cell_stride(int axis) const {
    std::size_t s = 1;
    for (int c = 0; c < axis; ++c) s *= static_cast<std::size_t>(n[c]);
    return s;
}

std::array<int, 3> Grid::face_coords(int axis, std::size_t idx) const {
    std::array<int, 3> c{0, 0, 0};
    for (int b = 0; b < 3; ++b) {
        const auto e = static_cast<std::size_t>(face_extent(axis, b));
        c[b] = static_cast<int>(idx % e);
        idx /= e;
    }
    return c;
}

std::array<int, 3> Grid::cell_coords(std::size_t idx) const {
    std::array<int, 3> c{0, 0, 0};
    for (int b = 0; b < 3; ++b) {
        c[b] = static_cast<int>(idx % static_cast<std::size_t>(n[b]));
        idx /= static_cast<std::size_t>(n[b]);
    }
    return c;
}

bool Grid::is_wall_face(int axis, std::size_t idx) const {
    const int ia = face_coords(axis, idx)[axis];
    return ia == 0 || ia == n[axis];
}

std::array<double, 3> Grid::cell_center(std::size_t idx) const {
    const auto c = cell_coords(idx);
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int a = 0; a < dim; ++a) x[a] = (c[a] + 0.5) * dx[a];
    return x;
}

std::array<double, 3> Grid::face_center(int axis, std::size_t idx) const {
    const auto c = face_coords(axis, idx);
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int a = 0; a < dim; ++a) x[a] = (a == axis ? c[a] : c[a] + 0.5) * dx[a];
    return x;
}

std::uint64_t Grid::hash() const {
    // FNV-1a over the defining integers and the bit patterns of the lengths.
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint64_t word) {
        for (int b = 0; b < 8; ++b) {
            h ^= (word >> (8 * b)) & 0xffU;
            h *= 1099511628211ULL;
        }
    };
    mix(static_cast<std::uint64_t>(dim));
    for (int a = 0; a < dim; ++a) {
        mix(static_cast<std::uint64_t>(n[a]));
        mix(std::bit_cast<std::uint64_t>(length[a]));
    }
    return h;
}

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
    if (a != b) throw StructuralError(std::string(what) + ": grid mismatch");
}

// ---------------------------------------------------------------------------
// Field arithmetic
// ---------------------------------------------------------------------------

ScalarField& ScalarField::operator+=(const ScalarField& o) {
    require_same_grid(grid, o.grid, "scalar +=");
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += o.v[i];
    return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
    require_same_grid(grid, o.grid, "scalar -=");
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= o.v[i];
    return *this;
}

ScalarField& ScalarField::operator*=(double a) {
    for (double& x : v) x *= a;
    return *this;
}

bool ScalarField::all_finite() const {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(double s, ScalarField a) { return a *= s; }

VelocityField::VelocityField(const Grid& g) : grid(g) {
    for (int a = 0; a < g.dim; ++a) f[a].assign(g.faces(a), 0.0);
}

VelocityField& VelocityField::operator+=(const VelocityField& o) {
    require_same_grid(grid, o.grid, "velocity +=");
    for (int a = 0; a < grid.dim; ++a)
        for (std::size_t i = 0; i < f[a].size(); ++i) f[a][i] += o.f[a][i];
    return *this;
}

VelocityField& VelocityField::operator-=(const VelocityField& o) {
    require_same_grid(grid, o.grid, "velocity -=");
    for (int a = 0; a < grid.dim; ++a)
        for (std::size_t i = 0; i < f[a].size(); ++i) f[a][i] -= o.f[a][i];
    return *this;
}

VelocityField& VelocityField::operator*=(double s) {
    for (int a = 0; a < grid.dim; ++a)
        for (double& x : f[a]) x *= s;
    return *this;
}

bool VelocityField::all_finite() const {
    for (int a = 0; a < grid.dim; ++a)
        for (double x : f[a])
            if (!std::isfinite(x)) return false;
    return true;
}

double VelocityField::max_abs() const {
    double m = 0.0;
    for (int a = 0; a < grid.dim; ++a)
        for (double x : f[a]) m = std::max(m, std::abs(x));
    return m;
}

double VelocityField::max_abs_wall_normal() const {
    double m = 0.0;
    for (int a = 0; a < grid.dim; ++a)
        for (std::size_t i = 0; i < f[a].size(); ++i)
            if (grid.is_wall_face(a, i)) m = std::max(m, std::abs(f[a][i]));
    return m;
}

VelocityField operator+(VelocityField a, const VelocityField& b) { return a += b; }
VelocityField operator-(VelocityField a, const VelocityField& b) { return a -= b; }
VelocityField operator*(double s, VelocityField a) { return a *= s; }

// ---------------------------------------------------------------------------
// Inner products
// ---------------------------------------------------------------------------

double l2_inner(const ScalarField& a, const ScalarField& b) {
    require_same_grid(a.grid, b.grid, "l2_inner");
    return a.grid.cell_volume() * kernels::active().dot(a.v.data(), b.v.data(), a.v.size());
}

double l2_inner(const VelocityField& a, const VelocityField& b) {
    require_same_grid(a.grid, b.grid, "l2_inner");
    const Grid& g = a.grid;
    double interior = 0.0, wall = 0.0;
    for (int ax = 0; ax < g.dim; ++ax) {
        for (std::size_t i = 0; i < a.f[ax].size(); ++i) {
            const double p = a.f[ax][i] * b.f[ax][i];
            if (g.is_wall_face(ax, i))
                wall += p;
            else
                interior += p;
        }
    }
    return g.cell_volume() * (interior + 0.5 * wall);
}

double l2_norm(const ScalarField& a) { return std::sqrt(std::max(0.0, l2_inner(a, a))); }
double l2_norm(const VelocityField& a) { return std::sqrt(std::max(0.0, l2_inner(a, a))); }

double integral(const ScalarField& a) {
    double s = 0.0;
    for (double x : a.v) s += x;
    return s * a.grid.cell_volume();
}

double max_abs(const ScalarField& a) {
    double m = 0.0;
    for (double x : a.v) m = std::max(m, std::abs(x));
    return m;
}

double grad_norm(const ScalarField& phi) { return l2_norm(grad(phi)); }

double h1_norm(const ScalarField& phi) {
    const double a = l2_norm(phi), b = grad_norm(phi);
    return std::sqrt(a * a + b * b);
}

// ---------------------------------------------------------------------------
// Calculus
// ---------------------------------------------------------------------------

VelocityField grad(const ScalarField& phi) {
    const Grid& g = phi.grid;
    VelocityField out(g);
    for (int a = 0; a < g.dim; ++a) {
        const double inv = 1.0 / g.dx[a];
        const std::size_t cs = g.cell_stride(a);
        for (std::size_t fi = 0; fi < out.f[a].size(); ++fi) {
            const auto c = g.face_coords(a, fi);
            if (c[a] == 0 || c[a] == g.n[a]) continue;  // reflected ghost: zero normal derivative
            const std::size_t hi = g.cell_index(c[0], c[1], c[2]);
            out.f[a][fi] = (phi.v[hi] - phi.v[hi - cs]) * inv;
        }
    }
    return out;
}

ScalarField div(const VelocityField& v) {
    const Grid& g = v.grid;
    ScalarField out(g);
    for (int a = 0; a < g.dim; ++a) {
        const double inv = 1.0 / g.dx[a];
        const std::size_t fs = g.face_stride(a, a);
        for (std::size_t ci = 0; ci < out.v.size(); ++ci) {
            const auto c = g.cell_coords(ci);
            const std::size_t lo = g.face_index(a, c[0], c[1], c[2]);
            out.v[ci] += (v.f[a][lo + fs] - v.f[a][lo]) * inv;
        }
    }
    return out;
}

namespace {

/// out += sum_a w_a * (Neumann second difference of x along a).
void add_neumann_stencil(const Grid& g, const double* x, double* out, double scale) {
    const auto& K = kernels::active();
    for (int a = 0; a < g.dim; ++a) {
        const double w = scale / (g.dx[a] * g.dx[a]);
        const std::size_t s = g.cell_stride(a);
        const std::size_t na = static_cast<std::size_t>(g.n[a]);
        const std::size_t outer = g.cells() / (na * s);
        for (std::size_t k = 0; k < outer; ++k) {
            const std::size_t base = k * na * s;
            // first slab: only the +a neighbour exists
            K.stencil1(out + base, x + base, x + base + s, w, s);
            // interior slabs: contiguous block of (n_a - 2) * s cells
            const std::size_t in = base + s;
            K.stencil2(out + in, x + in, x + in - s, x + in + s, w, (na - 2) * s);
            // last slab: only the -a neighbour exists
            const std::size_t last = base + (na - 1) * s;
            K.stencil1(out + last, x + last, x + last - s, w, s);
        }
    }
}

}  // namespace

ScalarField neumann_laplacian(const ScalarField& phi) {
    ScalarField out(phi.grid);
    add_neumann_stencil(phi.grid, phi.v.data(), out.v.data(), 1.0);
    return out;
}

void apply_helmholtz(double tau, double kappa, const ScalarField& x, ScalarField& out) {
    if (out.grid != x.grid || out.v.size() != x.v.size()) out = ScalarField(x.grid);
    const double s = 1.0 + kappa;
    for (std::size_t i = 0; i < x.v.size(); ++i) out.v[i] = s * x.v[i];
    add_neumann_stencil(x.grid, x.v.data(), out.v.data(), tau);
}

VelocityField velocity_laplacian(const VelocityField& v) {
    const Grid& g = v.grid;
    VelocityField out(g);
    for (int a = 0; a < g.dim; ++a) {
        const auto& u = v.f[a];
        for (std::size_t fi = 0; fi < u.size(); ++fi) {
            const auto c = g.face_coords(a, fi);
            if (c[a] == 0 || c[a] == g.n[a]) continue;
            double acc = 0.0;
            for (int b = 0; b < g.dim; ++b) {
                const double w = 1.0 / (g.dx[b] * g.dx[b]);
                const std::size_t s = g.face_stride(a, b);
                if (b == a) {
                    // wall-normal neighbours on the wall are pinned to zero
                    const double lo = (c[a] - 1 == 0) ? 0.0 : u[fi - s];
                    const double hi = (c[a] + 1 == g.n[a]) ? 0.0 : u[fi + s];
                    acc += w * (2.0 * u[fi] - lo - hi);
                } else {
                    // tangential: odd reflection across the wall (no-slip at the wall)
                    const double lo = (c[b] == 0) ? -u[fi] : u[fi - s];
                    const double hi = (c[b] == g.n[b] - 1) ? -u[fi] : u[fi + s];
                    acc += w * (2.0 * u[fi] - lo - hi);
                }
            }
            out.f[a][fi] = acc;
        }
    }
    return out;
}

double velocity_grad_norm_sq(const VelocityField& v) { return l2_inner(velocity_laplacian(v), v); }

// ---------------------------------------------------------------------------
// Conjugate gradients
// ---------------------------------------------------------------------------

namespace {

/// CG on sigma*I + tau*A_1. With sigma == 0 the operator is singular on
/// constants; the caller guarantees a mean-free right-hand side and the
/// iterate is kept mean-free.
SolveStats cg_core(double sigma, double tau, const ScalarField& rhs, ScalarField& x, double tol,
                   int max_iters) {
    const Grid& g = rhs.grid;
    const std::size_t n = rhs.v.size();
    if (x.grid != g || x.v.size() != n) x = ScalarField(g);
    const auto& K = kernels::active();
    const int cap = max_iters > 0 ? max_iters : static_cast<int>(10 * n);
    auto apply = [&](const ScalarField& in, ScalarField& out) {
        for (std::size_t i = 0; i < n; ++i) out.v[i] = sigma * in.v[i];
        add_neumann_stencil(g, in.v.data(), out.v.data(), tau);
    };
    auto remove_mean = [&](std::vector<double>& w) {
        double mean = 0.0;
        for (double wi : w) mean += wi;
        mean /= static_cast<double>(n);
        for (double& wi : w) wi -= mean;
        return mean;
    };
    if (sigma == 0.0) remove_mean(x.v);

    const double bnorm = std::sqrt(K.dot(rhs.v.data(), rhs.v.data(), n));
    SolveStats st;
    if (bnorm == 0.0) {
        std::fill(x.v.begin(), x.v.end(), 0.0);
        return st;
    }
    ScalarField r(g), p(g), Ap(g);
    auto true_residual = [&]() {
        apply(x, Ap);
        for (std::size_t i = 0; i < n; ++i) r.v[i] = rhs.v[i] - Ap.v[i];
        return std::sqrt(K.dot(r.v.data(), r.v.data(), n));
    };

    double rnorm = true_residual();
    int it = 0;
    // Outer restarts guard against drift between recursive and true residual.
    while (rnorm > tol * bnorm) {
        p.v = r.v;
        double rr = rnorm * rnorm;
        while (it < cap) {
            apply(p, Ap);
            const double pAp = K.dot(p.v.data(), Ap.v.data(), n);
            if (!(pAp > 0.0)) break;
            const double alpha = rr / pAp;
            K.axpy(alpha, p.v.data(), x.v.data(), n);
            K.axpy(-alpha, Ap.v.data(), r.v.data(), n);
            ++it;
            const double rr_new = K.dot(r.v.data(), r.v.data(), n);
            if (std::sqrt(rr_new) <= tol * bnorm) break;
            K.xpay(r.v.data(), rr_new / rr, p.v.data(), n);
            rr = rr_new;
        }
        if (sigma == 0.0) remove_mean(x.v);
        const double prev = rnorm;
        rnorm = true_residual();
        if (it >= cap && rnorm > tol * bnorm)
            throw SolverFailure("cg: iteration cap reached", rnorm / bnorm);
        if (rnorm > tol * bnorm && rnorm >= prev)
            throw SolverFailure("cg: stagnation", rnorm / bnorm);
    }
    if (sigma > 0.0) {
        // Fold the residual mean back in: the operator maps constants to sigma
        // times themselves, so this zeroes the residual's mass exactly.
        const double mean = remove_mean(r.v);
        const double shift = mean / sigma;
        for (double& xi : x.v) xi += shift;
    }
    st.iterations = it;
    st.relative_residual = std::sqrt(K.dot(r.v.data(), r.v.data(), n)) / bnorm;
    return st;
}

}  // namespace

SolveStats solve_helmholtz_into(double tau, double kappa, const ScalarField& rhs, ScalarField& x,
                                double tol, int max_iters) {
    if (!(tau >= 0.0) || !(kappa >= 0.0)) throw std::invalid_argument("helmholtz: tau, kappa >= 0");
    if (!rhs.all_finite()) throw std::invalid_argument("helmholtz: non-finite right-hand side");
    return cg_core(1.0 + kappa, tau, rhs, x, tol, max_iters);
}

SolveStats solve_neumann_poisson_into(const ScalarField& rhs, ScalarField& x, double tol,
                                      int max_iters) {
    if (!rhs.all_finite()) throw std::invalid_argument("poisson: non-finite right-hand side");
    ScalarField b = rhs;
    double mean = 0.0;
    for (double bi : b.v) mean += bi;
    mean /= static_cast<double>(b.v.size());
    for (double& bi : b.v) bi -= mean;
    return cg_core(0.0, 1.0, b, x, tol, max_iters);
}

ScalarField solve_helmholtz(double tau, double kappa, const ScalarField& rhs, double tol,
                            int max_iters, SolveStats* stats) {
    ScalarField x(rhs.grid);
    const SolveStats st = solve_helmholtz_into(tau, kappa, rhs, x, tol, max_iters);
    if (stats) *stats = st;
    return x;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

std::string grid_json(const Grid& g) {
    nlohmann::json j;
    j["dim"] = g.dim;
    j["cells"] = std::vector<int>(g.n.begin(), g.n.begin() + g.dim);
    j["lengths"] = std::vector<double>(g.length.begin(), g.length.begin() + g.dim);
    return j.dump();
}

namespace {

Grid grid_from_json_obj(const nlohmann::json& j) {
    const int dim = j.at("dim").get<int>();
    const auto cells = j.at("cells").get<std::vector<int>>();
    const auto lens = j.at("lengths").get<std::vector<double>>();
    if (static_cast<int>(cells.size()) != dim || static_cast<int>(lens.size()) != dim)
        throw StructuralError("grid json: axis count mismatch");
    std::array<int, 3> c{1, 1, 1};
    std::array<double, 3> l{1.0, 1.0, 1.0};
    for (int a = 0; a < dim; ++a) {
        c[a] = cells[a];
        l[a] = lens[a];
    }
    return Grid::make(dim, c, l);
}

void write_le_doubles(std::ostream& os, const std::vector<double>& v) {
    static_assert(std::endian::native == std::endian::little, "little-endian host required");
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_le_doubles(std::istream& is, std::vector<double>& v) {
    is.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!is) throw StructuralError("binary field: truncated payload");
}

nlohmann::json read_header(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw StructuralError("binary field: missing header");
    return nlohmann::json::parse(line);
}

}  // namespace

Grid grid_from_json(const std::string& text) { return grid_from_json_obj(nlohmann::json::parse(text)); }

void write_csv(std::ostream& os, const ScalarField& f) {
    const Grid& g = f.grid;
    os << (g.dim == 2 ? "i0,i1,value\n" : "i0,i1,i2,value\n");
    std::ostringstream line;
    line.precision(17);
    for (std::size_t i = 0; i < f.v.size(); ++i) {
        const auto c = g.cell_coords(i);
        line.str("");
        line << c[0] << ',' << c[1];
        if (g.dim == 3) line << ',' << c[2];
        line << ',' << f.v[i] << '\n';
        os << line.str();
    }
}

void write_binary(std::ostream& os, const ScalarField& f) {
    nlohmann::json h;
    h["kind"] = "scalar";
    h["grid"] = nlohmann::json::parse(grid_json(f.grid));
    h["count"] = f.v.size();
    h["encoding"] = "float64-le";
    os << h.dump() << '\n';
    write_le_doubles(os, f.v);
}

ScalarField read_binary(std::istream& is) {
    const auto h = read_header(is);
    if (h.at("kind") != "scalar") throw StructuralError("binary field: not a scalar field");
    ScalarField f(grid_from_json_obj(h.at("grid")));
    if (h.at("count").get<std::size_t>() != f.v.size())
        throw StructuralError("binary field: count mismatch");
    read_le_doubles(is, f.v);
    return f;
}

void write_binary(std::ostream& os, const VelocityField& f) {
    nlohmann::json h;
    h["kind"] = "velocity";
    h["grid"] = nlohmann::json::parse(grid_json(f.grid));
    std::vector<std::size_t> counts;
    for (int a = 0; a < f.grid.dim; ++a) counts.push_back(f.f[a].size());
    h["counts"] = counts;
    h["encoding"] = "float64-le";
    os << h.dump() << '\n';
    for (int a = 0; a < f.grid.dim; ++a) write_le_doubles(os, f.f[a]);
}

VelocityField read_binary_velocity(std::istream& is) {
    const auto h = read_header(is);
    if (h.at("kind") != "velocity") throw StructuralError("binary field: not a velocity field");
    VelocityField f(grid_from_json_obj(h.at("grid")));
    const auto counts = h.at("counts").get<std::vector<std::size_t>>();
    for (int a = 0; a < f.grid.dim; ++a) {
        if (counts.at(a) != f.f[a].size()) throw StructuralError("binary field: count mismatch");
        read_le_doubles(is, f.f[a]);
    }
    return f;
}

}  // namespace scns
