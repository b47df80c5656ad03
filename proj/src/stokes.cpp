/// @file stokes.cpp
/// @brief Null-space construction of the solenoidal subspace and dense
///        eigendecomposition of the restricted no-slip Laplacian.

#include "scns/stokes.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace scns {

// ---------------------------------------------------------------------------
// DofMap
// ---------------------------------------------------------------------------

DofMap::DofMap(const Grid& g) : grid_(g) {
    for (int a = 0; a < g.dim; ++a)
        for (std::size_t f = 0; f < g.faces(a); ++f)
            if (!g.is_wall_face(a, f)) {
                axis_.push_back(a);
                face_.push_back(f);
            }
}

Eigen::VectorXd DofMap::to_vector(const VelocityField& v) const {
    require_same_grid(grid_, v.grid, "dof map");
    Eigen::VectorXd x(static_cast<Eigen::Index>(size()));
    for (std::size_t d = 0; d < size(); ++d) x[static_cast<Eigen::Index>(d)] = v.f[axis_[d]][face_[d]];
    return x;
}

VelocityField DofMap::to_field(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (static_cast<std::size_t>(x.size()) != size()) throw StructuralError("dof map: size mismatch");
    VelocityField v(grid_);
    for (std::size_t d = 0; d < size(); ++d) v.f[axis_[d]][face_[d]] = x[static_cast<Eigen::Index>(d)];
    return v;
}

VelocityField StokesBasis::mode(int i) const { return dofmap->to_field(modes.col(i)); }

double SpectralVelocity::grad_sq() const {
    double s = 0.0;
    for (int i = 0; i < coeffs.size(); ++i) s += basis->eigenvalues[i] * coeffs[i] * coeffs[i];
    return s;
}

void require_same_basis(const SpectralVelocity& a, const SpectralVelocity& b, const char* what) {
    if (!a.basis || a.basis != b.basis) throw StructuralError(std::string(what) + ": basis mismatch");
}

// ---------------------------------------------------------------------------
// Leray projection
// ---------------------------------------------------------------------------

VelocityField leray_project(const VelocityField& v, double tol) {
    ScalarField rhs = div(v);
    rhs *= -1.0;
    ScalarField p(v.grid);
    solve_neumann_poisson_into(rhs, p, tol);
    VelocityField out = v;
    out -= grad(p);
    return out;
}

// ---------------------------------------------------------------------------
// Basis cache
// ---------------------------------------------------------------------------

namespace {

constexpr int kBasisFormat = 1;

std::string resolve_cache_dir(const BasisOptions& opt) {
    if (!opt.cache_dir.empty()) return opt.cache_dir;
    if (opt.use_env_cache)
        if (const char* env = std::getenv("SCNS_BASIS_CACHE")) return env;
    return {};
}

void canonicalise(StokesBasis& b, double cluster_tol) {
    const double V = b.grid.cell_volume();
    const Eigen::Index m = b.modes.cols();
    // Deterministic modified Gram-Schmidt in index order inside each cluster of
    // (numerically) equal eigenvalues, then a sign convention per mode.
    Eigen::Index start = 0;
    while (start < m) {
        Eigen::Index end = start + 1;
        while (end < m && std::abs(b.eigenvalues[end] - b.eigenvalues[start]) <=
                              cluster_tol * std::abs(b.eigenvalues[start]))
            ++end;
        for (Eigen::Index i = start; i < end; ++i) {
            for (Eigen::Index j = start; j < i; ++j)
                b.modes.col(i) -= (V * b.modes.col(j).dot(b.modes.col(i))) * b.modes.col(j);
            b.modes.col(i) /= std::sqrt(V * b.modes.col(i).squaredNorm());
        }
        start = end;
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        auto col = b.modes.col(i);
        const double peak = col.cwiseAbs().maxCoeff();
        for (Eigen::Index d = 0; d < col.size(); ++d)
            if (std::abs(col[d]) > 1e-6 * peak) {
                if (col[d] < 0.0) col *= -1.0;
                break;
            }
    }
}

void measure_sup(StokesBasis& b) {
    b.c_inf = std::sqrt(b.modes.rowwise().squaredNorm().maxCoeff());
    b.max_mode_sup = b.modes.cwiseAbs().maxCoeff();
}

}  // namespace

std::string basis_cache_stem(const Grid& grid, int m) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "basis_%016llx_m%d",
                  static_cast<unsigned long long>(grid.hash()), m);
    return buf;
}

void save_basis(const StokesBasis& b, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const std::string stem = (fs::path(dir) / basis_cache_stem(b.grid, b.m)).string();
    nlohmann::json h;
    h["format"] = kBasisFormat;
    h["grid"] = nlohmann::json::parse(grid_json(b.grid));
    h["grid_hash"] = b.grid.hash();
    h["m"] = b.m;
    h["dofs"] = b.dofs();
    h["solenoidal_dim"] = b.solenoidal_dim;
    h["eigenvalues"] = b.eigenvalues;
    h["c_inf"] = b.c_inf;
    h["max_mode_sup"] = b.max_mode_sup;
    // Write to temporaries and rename so concurrent readers never see partial files.
    const std::string tag = "." + std::to_string(reinterpret_cast<std::uintptr_t>(&b)) + ".tmp";
    {
        std::ofstream bin(stem + ".bin" + tag, std::ios::binary);
        bin.write(reinterpret_cast<const char*>(b.modes.data()),
                  static_cast<std::streamsize>(b.modes.size() * sizeof(double)));
    }
    {
        std::ofstream js(stem + ".json" + tag);
        js << h.dump(1) << '\n';
    }
    fs::rename(stem + ".bin" + tag, stem + ".bin");
    fs::rename(stem + ".json" + tag, stem + ".json");
}

BasisPtr load_basis(const Grid& grid, int m, const std::string& dir) {
    namespace fs = std::filesystem;
    const std::string stem = (fs::path(dir) / basis_cache_stem(grid, m)).string();
    std::ifstream js(stem + ".json");
    std::ifstream bin(stem + ".bin", std::ios::binary);
    if (!js || !bin) return nullptr;
    try {
        const auto h = nlohmann::json::parse(js);
        if (h.at("format").get<int>() != kBasisFormat) return nullptr;
        if (grid_from_json(h.at("grid").dump()) != grid) return nullptr;
        if (h.at("m").get<int>() != m) return nullptr;
        auto b = std::make_shared<StokesBasis>();
        b->grid = grid;
        b->m = m;
        b->dofmap = std::make_shared<DofMap>(grid);
        const auto nd = h.at("dofs").get<std::size_t>();
        if (nd != b->dofmap->size()) return nullptr;
        b->eigenvalues = h.at("eigenvalues").get<std::vector<double>>();
        if (static_cast<int>(b->eigenvalues.size()) != m) return nullptr;
        b->solenoidal_dim = h.at("solenoidal_dim").get<std::size_t>();
        b->modes.resize(static_cast<Eigen::Index>(nd), m);
        bin.read(reinterpret_cast<char*>(b->modes.data()),
                 static_cast<std::streamsize>(b->modes.size() * sizeof(double)));
        if (!bin) return nullptr;
        measure_sup(*b);
        return b;
    } catch (const std::exception&) {
        return nullptr;
    }
}

// ---------------------------------------------------------------------------
// Eigenbasis
// ---------------------------------------------------------------------------

BasisPtr compute_basis(const Grid& grid, int m, const BasisOptions& opt) {
    if (m < 1) throw std::invalid_argument("stokes: m must be >= 1");
    const std::string cache = resolve_cache_dir(opt);
    if (!cache.empty())
        if (auto b = load_basis(grid, m, cache)) return b;

    auto dm = std::make_shared<DofMap>(grid);
    const auto nd = static_cast<Eigen::Index>(dm->size());
    const auto nc = static_cast<Eigen::Index>(grid.cells());

    // Transposed divergence: column c holds the divergence stencil of cell c.
    Eigen::MatrixXd Dt = Eigen::MatrixXd::Zero(nd, nc);
    for (Eigen::Index d = 0; d < nd; ++d) {
        const int a = dm->axis(static_cast<std::size_t>(d));
        const auto c = grid.face_coords(a, dm->face(static_cast<std::size_t>(d)));
        const auto hi = static_cast<Eigen::Index>(grid.cell_index(c[0], c[1], c[2]));
        const auto lo = hi - static_cast<Eigen::Index>(grid.cell_stride(a));
        Dt(d, hi) -= 1.0 / grid.dx[a];  // low face of the cell above
        Dt(d, lo) += 1.0 / grid.dx[a];  // high face of the cell below
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Dt);
    const Eigen::Index rank = qr.rank();
    const Eigen::Index ns = nd - rank;
    if (m > ns)
        throw std::invalid_argument("stokes: m exceeds the divergence-free subspace dimension (" +
                                    std::to_string(ns) + ")");
    Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(nd, ns);
    Z.bottomRows(ns).setIdentity();
    Z = qr.householderQ() * Z;  // orthonormal basis of ker(div)

    Eigen::MatrixXd LZ(nd, ns);
    for (Eigen::Index j = 0; j < ns; ++j)
        LZ.col(j) = dm->to_vector(velocity_laplacian(dm->to_field(Z.col(j))));
    Eigen::MatrixXd S = Z.transpose() * LZ;
    S = 0.5 * (S + S.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    if (es.info() != Eigen::Success) throw SolverFailure("stokes: eigensolver failed", 0.0);

    auto b = std::make_shared<StokesBasis>();
    b->grid = grid;
    b->m = m;
    b->dofmap = dm;
    b->solenoidal_dim = static_cast<std::size_t>(ns);
    b->eigenvalues.resize(m);
    for (int i = 0; i < m; ++i) {
        b->eigenvalues[i] = es.eigenvalues()[i];
        if (!(b->eigenvalues[i] > 0.0))
            throw SolverFailure("stokes: non-positive eigenvalue", b->eigenvalues[i]);
    }
    b->modes = (Z * es.eigenvectors().leftCols(m)) / std::sqrt(grid.cell_volume());
    canonicalise(*b, opt.cluster_tol);
    measure_sup(*b);
    if (!cache.empty()) {
        try {
            save_basis(*b, cache);
        } catch (const std::exception&) {
            // caching is an optimisation; ignore I/O failures
        }
    }
    return b;
}

// ---------------------------------------------------------------------------
// Projection and reconstruction
// ---------------------------------------------------------------------------

SpectralVelocity pi_m(const VelocityField& v, const BasisPtr& basis) {
    require_same_grid(v.grid, basis->grid, "pi_m");
    // Modes vanish on wall faces, so only interior faces (weight = cell volume) contribute.
    const Eigen::VectorXd x = basis->dofmap->to_vector(v);
    Eigen::VectorXd c = basis->grid.cell_volume() * (basis->modes.transpose() * x);
    return SpectralVelocity(basis, std::move(c));
}

Eigen::VectorXd reconstruct_dofs(const SpectralVelocity& u) { return u.basis->modes * u.coeffs; }

VelocityField reconstruct(const SpectralVelocity& u) {
    return u.basis->dofmap->to_field(reconstruct_dofs(u));
}

SpectralVelocity apply_stokes(const SpectralVelocity& u) {
    SpectralVelocity out(u.basis, u.coeffs);
    for (int i = 0; i < out.coeffs.size(); ++i) out.coeffs[i] *= u.basis->eigenvalues[i];
    return out;
}

}  // namespace scns
