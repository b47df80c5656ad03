/// @file config.cpp
/// @brief Config parsing, validation, presets and the canonical dump.

#include "scns/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace scns {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

/// Removes a trailing comment that is not inside double quotes.
std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (!quoted && line[i] == '#') return line.substr(0, i);
    }
    return line;
}

std::string fmt(double x) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

double to_double(const std::string& key, const std::string& v) {
    double x = 0.0;
    const char* b = v.data();
    const char* e = b + v.size();
    auto r = std::from_chars(b, e, x);
    if (r.ec != std::errc() || r.ptr != e || !std::isfinite(x))
        throw ConfigError(key + ": expected a finite number, got '" + v + "'");
    return x;
}

long long to_int(const std::string& key, const std::string& v) {
    long long x = 0;
    const char* b = v.data();
    const char* e = b + v.size();
    auto r = std::from_chars(b, e, x);
    if (r.ec != std::errc() || r.ptr != e) throw ConfigError(key + ": expected an integer, got '" + v + "'");
    return x;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

/// "[a, b, c]" or "a" -> items.
std::vector<std::string> to_list(const std::string& v) {
    std::string s = trim(v);
    if (!s.empty() && s.front() == '[') {
        if (s.back() != ']') throw ConfigError("unterminated list '" + v + "'");
        s = s.substr(1, s.size() - 2);
    }
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string list_text(const std::vector<std::string>& xs) {
    std::string s = "[";
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + xs[i];
    return s + "]";
}

const std::set<std::string> kScalarPresets = {"zero", "constant", "gaussian-bump", "checkerboard"};

}  // namespace

// ---------------------------------------------------------------------------
// Key documentation
// ---------------------------------------------------------------------------

const std::vector<std::pair<std::string, std::string>>& config_key_docs() {
    static const std::vector<std::pair<std::string, std::string>> docs = {
        {"scheme.vartheta", "fluid viscosity (> 0)"},
        {"scheme.mu", "chemical diffusion (> 0)"},
        {"scheme.delta", "organism diffusion (> 0)"},
        {"scheme.alpha", "velocity transport-noise intensity"},
        {"scheme.gamma", "concentration transport-noise intensity (warning unless gamma^2 < eps/484)"},
        {"scheme.m", "regularisation index: Stokes modes, truncation and cutoff level (>= 1)"},
        {"scheme.N", "number of time steps (>= 1)"},
        {"scheme.T", "final time (> 0)"},
        {"grid.dim", "2 or 3"},
        {"grid.cells", "cells per axis: integer, list, or AxB[xC]"},
        {"grid.lengths", "box side lengths: number or list"},
        {"solver.fp_tol", "Picard stopping tolerance on the relative H^1 change"},
        {"solver.fp_max_iters", "Picard iteration cap per step"},
        {"solver.fp_max_halvings", "maximum halvings of the Picard damping factor"},
        {"solver.tol_linear", "relative residual tolerance of the CG solves"},
        {"solver.noise_refine_log2", "Brownian sub-steps per step = 2^value"},
        {"solver.kernels", "auto | scalar | avx2"},
        {"solver.basis_cache", "directory for cached Stokes bases (empty: SCNS_BASIS_CACHE or none)"},
        {"initial.c.preset", "zero | constant | gaussian-bump | checkerboard"},
        {"initial.c.amplitude", "preset amplitude"},
        {"initial.c.offset", "value added everywhere"},
        {"initial.c.center", "bump centre as box fractions, list"},
        {"initial.c.width", "bump standard deviation as a fraction of the shortest side"},
        {"initial.c.tiles", "checkerboard tiles per axis"},
        {"initial.n.*", "same keys as initial.c"},
        {"initial.u.preset", "zero | modes"},
        {"initial.u.amplitude", "mode i gets coefficient amplitude / (i + 1)"},
        {"initial.u.count", "number of modes set (0: all m)"},
        {"potential.preset", "zero | constant | gaussian-bump | checkerboard | linear"},
        {"potential.*", "amplitude, offset, center, width, tiles as for initial fields; axis for linear"},
        {"ensemble.paths", "number of Monte-Carlo paths"},
        {"ensemble.seed", "base seed; path i uses the stream (seed, i)"},
        {"ensemble.workers", "worker threads (0: all cores); does not affect results"},
        {"ensemble.keep_trajectories", "leading paths whose step-by-step CSVs are written"},
        {"ensemble.increments", "record the increment sums h sum |X^{l+j}-X^l|^4"},
        {"converge.N_list", "step counts for the refinement study, e.g. [16, 32, 64, 128]"},
        {"check.cancellation_samples", "random inputs per exact-cancellation check"},
        {"output.dir", "output directory"},
        {"debug.break_skew", "negative control: replace skew forms by raw advective forms"},
    };
    return docs;
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

ConfigMap parse_config_text(const std::string& text, const std::string& source) {
    ConfigMap out;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string s = trim(strip_comment(line));
        if (s.empty()) continue;
        const std::string where = source + ":" + std::to_string(lineno);
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError(where + ": malformed section header '" + s + "'");
            section = trim(s.substr(1, s.size() - 2));
            if (section.empty()) throw ConfigError(where + ": empty section name");
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value', got '" + s + "'");
        std::string key = trim(s.substr(0, eq));
        std::string val = trim(s.substr(eq + 1));
        if (key.empty()) throw ConfigError(where + ": empty key");
        if (val.size() >= 2 && val.front() == '"' && val.back() == '"') val = val.substr(1, val.size() - 2);
        const std::string full = section.empty() ? key : section + "." + key;
        if (out.count(full)) throw ConfigError(where + ": duplicate key '" + full + "'");
        out[full] = val;
    }
    return out;
}

std::array<int, 3> parse_grid_spec(const std::string& spec, int& dim) {
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : spec) {
        if (ch == 'x' || ch == 'X') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    parts.push_back(cur);
    std::array<int, 3> cells{1, 1, 1};
    if (parts.size() == 1) {
        const int n = static_cast<int>(to_int("grid", trim(parts[0])));
        for (int a = 0; a < dim; ++a) cells[a] = n;
        return cells;
    }
    if (parts.size() > 3) throw ConfigError("grid: at most three extents, got '" + spec + "'");
    dim = static_cast<int>(parts.size());
    for (int a = 0; a < dim; ++a) cells[a] = static_cast<int>(to_int("grid", trim(parts[a])));
    return cells;
}

namespace {

FieldPreset read_field(const ConfigMap& m, const std::string& prefix, std::set<std::string>& used,
                       bool allow_linear) {
    FieldPreset p;
    auto get = [&](const std::string& k) -> const std::string* {
        auto it = m.find(prefix + k);
        if (it == m.end()) return nullptr;
        used.insert(it->first);
        return &it->second;
    };
    if (auto v = get("preset")) p.preset = *v;
    if (!kScalarPresets.count(p.preset) && !(allow_linear && p.preset == "linear"))
        throw ConfigError(prefix + "preset: unknown preset '" + p.preset + "'");
    if (auto v = get("amplitude")) p.amplitude = to_double(prefix + "amplitude", *v);
    if (auto v = get("offset")) p.offset = to_double(prefix + "offset", *v);
    if (auto v = get("width")) p.width = to_double(prefix + "width", *v);
    if (!(p.width > 0.0)) throw ConfigError(prefix + "width: must be > 0");
    if (auto v = get("tiles")) p.tiles = static_cast<int>(to_int(prefix + "tiles", *v));
    if (p.tiles < 1) throw ConfigError(prefix + "tiles: must be >= 1");
    if (auto v = get("axis")) p.axis = static_cast<int>(to_int(prefix + "axis", *v));
    if (auto v = get("center")) {
        const auto xs = to_list(*v);
        if (xs.empty() || xs.size() > 3) throw ConfigError(prefix + "center: expected 1-3 numbers");
        for (std::size_t i = 0; i < xs.size(); ++i) p.center[i] = to_double(prefix + "center", xs[i]);
    }
    return p;
}

void dump_field(std::ostringstream& os, const FieldPreset& p) {
    os << "preset = \"" << p.preset << "\"\n";
    os << "amplitude = " << fmt(p.amplitude) << '\n';
    os << "offset = " << fmt(p.offset) << '\n';
    os << "center = [" << fmt(p.center[0]) << ", " << fmt(p.center[1]) << ", " << fmt(p.center[2]) << "]\n";
    os << "width = " << fmt(p.width) << '\n';
    os << "tiles = " << p.tiles << '\n';
    os << "axis = " << p.axis << '\n';
}

}  // namespace

RunConfig config_from_map(const ConfigMap& m) {
    RunConfig rc;
    std::set<std::string> used;
    auto get = [&](const std::string& k) -> const std::string* {
        auto it = m.find(k);
        if (it == m.end()) return nullptr;
        used.insert(k);
        return &it->second;
    };
    auto num = [&](const std::string& k, double& dst) {
        if (auto v = get(k)) dst = to_double(k, *v);
    };
    auto integer = [&](const std::string& k, int& dst) {
        if (auto v = get(k)) dst = static_cast<int>(to_int(k, *v));
    };
    SchemeParams& p = rc.scheme;
    num("scheme.vartheta", p.vartheta);
    num("scheme.mu", p.mu);
    num("scheme.delta", p.delta);
    num("scheme.alpha", p.alpha);
    num("scheme.gamma", p.gamma);
    integer("scheme.m", p.m);
    integer("scheme.N", p.N);
    num("scheme.T", p.T);

    integer("grid.dim", rc.dim);
    if (rc.dim != 2 && rc.dim != 3) throw ConfigError("grid.dim: must be 2 or 3");
    if (rc.dim == 2) rc.cells[2] = 1;
    if (auto v = get("grid.cells")) {
        const auto xs = to_list(*v);
        if (xs.size() == 1) {
            rc.cells = parse_grid_spec(xs[0], rc.dim);
        } else {
            if (xs.size() != static_cast<std::size_t>(rc.dim))
                throw ConfigError("grid.cells: expected " + std::to_string(rc.dim) + " extents");
            for (int a = 0; a < rc.dim; ++a) rc.cells[a] = static_cast<int>(to_int("grid.cells", xs[a]));
        }
    } else {
        for (int a = 0; a < rc.dim; ++a) rc.cells[a] = 32;
    }
    if (auto v = get("grid.lengths")) {
        const auto xs = to_list(*v);
        if (xs.size() == 1) {
            for (int a = 0; a < 3; ++a) rc.lengths[a] = to_double("grid.lengths", xs[0]);
        } else {
            if (xs.size() != static_cast<std::size_t>(rc.dim))
                throw ConfigError("grid.lengths: expected 1 or " + std::to_string(rc.dim) + " values");
            for (int a = 0; a < rc.dim; ++a) rc.lengths[a] = to_double("grid.lengths", xs[a]);
        }
    }

    num("solver.fp_tol", p.fp_tol);
    integer("solver.fp_max_iters", p.fp_max_iters);
    integer("solver.fp_max_halvings", p.fp_max_halvings);
    num("solver.tol_linear", p.tol_linear);
    integer("solver.noise_refine_log2", p.noise_refine_log2);
    if (auto v = get("solver.kernels")) rc.kernels = *v;
    if (rc.kernels != "auto" && rc.kernels != "scalar" && rc.kernels != "avx2")
        throw ConfigError("solver.kernels: expected auto, scalar or avx2");
    if (auto v = get("solver.basis_cache")) rc.basis_cache = *v;

    rc.c0 = read_field(m, "initial.c.", used, false);
    rc.n0 = read_field(m, "initial.n.", used, false);
    rc.phi = read_field(m, "potential.", used, true);
    if (auto v = get("initial.u.preset")) rc.u0.preset = *v;
    if (rc.u0.preset != "zero" && rc.u0.preset != "modes")
        throw ConfigError("initial.u.preset: expected zero or modes");
    num("initial.u.amplitude", rc.u0.amplitude);
    integer("initial.u.count", rc.u0.count);
    if (rc.u0.count < 0) throw ConfigError("initial.u.count: must be >= 0");

    integer("ensemble.paths", rc.paths);
    if (rc.paths < 1) throw ConfigError("ensemble.paths: must be >= 1");
    if (auto v = get("ensemble.seed")) {
        const long long s = to_int("ensemble.seed", *v);
        if (s < 0) throw ConfigError("ensemble.seed: must be >= 0");
        rc.seed = static_cast<std::uint64_t>(s);
    }
    integer("ensemble.workers", rc.workers);
    if (rc.workers < 0) throw ConfigError("ensemble.workers: must be >= 0");
    integer("ensemble.keep_trajectories", rc.keep_trajectories);
    if (rc.keep_trajectories < 0) throw ConfigError("ensemble.keep_trajectories: must be >= 0");
    if (auto v = get("ensemble.increments")) rc.increments = to_bool("ensemble.increments", *v);
    if (auto v = get("converge.N_list")) {
        rc.N_list.clear();
        for (const auto& x : to_list(*v)) rc.N_list.push_back(static_cast<int>(to_int("converge.N_list", x)));
    }
    integer("check.cancellation_samples", rc.cancellation_samples);
    if (rc.cancellation_samples < 1) throw ConfigError("check.cancellation_samples: must be >= 1");
    if (auto v = get("output.dir")) rc.out_dir = *v;
    if (auto v = get("debug.break_skew")) rc.break_skew = to_bool("debug.break_skew", *v);

    for (const auto& [k, v] : m)
        if (!used.count(k)) throw ConfigError("unknown key '" + k + "' (see --help for the list of keys)");
    (void)rc.to_params();  // surface parameter errors at load time
    return rc;
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return config_from_map(parse_config_text(ss.str(), path));
}

// ---------------------------------------------------------------------------
// Resolution
// ---------------------------------------------------------------------------

Grid RunConfig::grid() const {
    try {
        return Grid::make(dim, cells, lengths);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("grid: ") + e.what());
    }
}

SchemeParams RunConfig::to_params() const {
    SchemeParams p = scheme;
    p.grid = grid();
    p.Phi = phi.preset == "zero" ? ScalarField() : make_field(p.grid, phi);
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("scheme: ") + e.what());
    }
    for (std::size_t i = 0; i < N_list.size(); ++i) {
        if (N_list[i] < 1) throw ConfigError("converge.N_list: entries must be >= 1");
        if (i > 0 && N_list[i] <= N_list[i - 1]) throw ConfigError("converge.N_list: must be strictly increasing");
    }
    if (!N_list.empty())
        for (int N : N_list)
            if (!refinable(N, N_list.back()))
                throw ConfigError("converge.N_list: every entry must divide the largest by a power of two");
    return p;
}

std::string RunConfig::resolved_text() const {
    const SchemeParams& p = scheme;
    std::ostringstream os;
    os << "[scheme]\n"
       << "vartheta = " << fmt(p.vartheta) << "\nmu = " << fmt(p.mu) << "\ndelta = " << fmt(p.delta)
       << "\nalpha = " << fmt(p.alpha) << "\ngamma = " << fmt(p.gamma) << "\nm = " << p.m << "\nN = " << p.N
       << "\nT = " << fmt(p.T) << "\n\n[grid]\ndim = " << dim << "\ncells = [";
    for (int a = 0; a < dim; ++a) os << (a ? ", " : "") << cells[a];
    os << "]\nlengths = [";
    for (int a = 0; a < dim; ++a) os << (a ? ", " : "") << fmt(lengths[a]);
    os << "]\n\n[solver]\nfp_tol = " << fmt(p.fp_tol) << "\nfp_max_iters = " << p.fp_max_iters
       << "\nfp_max_halvings = " << p.fp_max_halvings << "\ntol_linear = " << fmt(p.tol_linear)
       << "\nnoise_refine_log2 = " << p.noise_refine_log2 << "\nkernels = \"" << kernels << "\"\nbasis_cache = \""
       << basis_cache << "\"\n\n[initial.c]\n";
    dump_field(os, c0);
    os << "\n[initial.n]\n";
    dump_field(os, n0);
    os << "\n[initial.u]\npreset = \"" << u0.preset << "\"\namplitude = " << fmt(u0.amplitude)
       << "\ncount = " << u0.count << "\n\n[potential]\n";
    dump_field(os, phi);
    std::vector<std::string> ns;
    for (int N : N_list) ns.push_back(std::to_string(N));
    os << "\n[ensemble]\npaths = " << paths << "\nseed = " << seed << "\nkeep_trajectories = " << keep_trajectories
       << "\nincrements = " << (increments ? "true" : "false") << "\n\n[converge]\nN_list = " << list_text(ns)
       << "\n\n[check]\ncancellation_samples = " << cancellation_samples << "\n\n[debug]\nbreak_skew = "
       << (break_skew ? "true" : "false") << '\n';
    return os.str();
}

std::string RunConfig::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : resolved_text()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

ScalarField make_field(const Grid& g, const FieldPreset& p) {
    ScalarField f(g);
    double shortest = g.length[0];
    for (int a = 1; a < g.dim; ++a) shortest = std::min(shortest, g.length[a]);
    const double sigma = p.width * shortest;
    const int axis = p.axis < 0 ? g.dim - 1 : p.axis;
    if (p.preset == "linear" && axis >= g.dim) throw ConfigError("potential.axis: out of range");
    for (std::size_t i = 0; i < f.v.size(); ++i) {
        const auto x = g.cell_center(i);
        double val = 0.0;
        if (p.preset == "constant") {
            val = p.amplitude;
        } else if (p.preset == "gaussian-bump") {
            double r2 = 0.0;
            for (int a = 0; a < g.dim; ++a) {
                const double d = x[a] - p.center[a] * g.length[a];
                r2 += d * d;
            }
            val = p.amplitude * std::exp(-r2 / (2.0 * sigma * sigma));
        } else if (p.preset == "checkerboard") {
            int parity = 0;
            for (int a = 0; a < g.dim; ++a)
                parity += static_cast<int>(std::floor(x[a] / g.length[a] * p.tiles));
            val = (parity % 2 == 0) ? p.amplitude : -p.amplitude;
        } else if (p.preset == "linear") {
            val = p.amplitude * x[axis];
        } else if (p.preset != "zero") {
            throw ConfigError("unknown preset '" + p.preset + "'");
        }
        f.v[i] = p.offset + val;
    }
    return f;
}

PathState make_initial_state(const Scheme& s, const RunConfig& rc) {
    const Grid& g = s.p.grid;
    SpectralVelocity u(s.basis());
    if (rc.u0.preset == "modes") {
        const int count = rc.u0.count == 0 ? s.p.m : std::min(rc.u0.count, s.p.m);
        for (int i = 0; i < count; ++i) u.coeffs[i] = rc.u0.amplitude / (i + 1.0);
    }
    return initial_state(s, u, make_field(g, rc.c0), make_field(g, rc.n0));
}

}  // namespace scns
