/// @file diagnostics.cpp
/// @brief Interpolants, error terms, summaries and estimate checks.

#include "scns/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace scns {

namespace {

int steps_of(const Trajectory& tr) { return static_cast<int>(tr.states.size()) - 1; }

void require_complete(const Trajectory& tr, const char* what) {
    if (tr.failed || tr.states.size() < 2 || steps_of(tr) != tr.increments.N)
        throw std::invalid_argument(std::string(what) + ": needs a complete trajectory");
}

/// Knot or interval location of t: (index, fraction in [0,1), is_knot).
struct Where {
    int l = 0;
    double frac = 0.0;
    bool knot = false;
};

Where locate(const Trajectory& tr, double t) {
    const int N = steps_of(tr);
    const double h = tr.increments.h;
    const double T = N * h;
    if (!(t >= -1e-12 * T && t <= T * (1.0 + 1e-12)))
        throw std::domain_error("interpolant: t must lie in [0, T]");
    const double x = std::clamp(t / h, 0.0, static_cast<double>(N));
    const double k = std::round(x);
    Where w;
    if (std::abs(x - k) <= 1e-9) {
        w.l = static_cast<int>(k);
        w.knot = true;
        return w;
    }
    w.l = static_cast<int>(std::floor(x));
    w.frac = x - w.l;
    return w;
}

const ScalarField& scalar_of(const PathState& st, Var var) {
    if (var == Var::c) return st.c;
    if (var == Var::n) return st.n;
    throw std::invalid_argument("interpolant: velocity requested from the scalar accessor");
}

/// Index of the state an interpolant takes at `w` (constant kinds only).
int constant_index(const Where& w, InterpKind kind, int N) {
    if (w.knot) {
        if (kind == InterpKind::right) return w.l;
        return std::min(w.l, N - 1);  // the last interval is closed on the right
    }
    return kind == InterpKind::right ? w.l + 1 : w.l;
}

double fourth(double x) { return x * x * x * x; }

}  // namespace

// ---------------------------------------------------------------------------
// Interpolants
// ---------------------------------------------------------------------------

SpectralVelocity eval_interpolant_u(const Trajectory& tr, InterpKind kind, double t) {
    require_complete(tr, "interpolant");
    const Where w = locate(tr, t);
    const int N = steps_of(tr);
    if (kind == InterpKind::linear) {
        if (w.knot) return tr.states[w.l].u;
        const auto& a = tr.states[w.l].u;
        const auto& b = tr.states[w.l + 1].u;
        return SpectralVelocity(a.basis, a.coeffs + w.frac * (b.coeffs - a.coeffs));
    }
    return tr.states[constant_index(w, kind, N)].u;
}

ScalarField eval_interpolant_scalar(const Trajectory& tr, InterpKind kind, Var var, double t) {
    require_complete(tr, "interpolant");
    const Where w = locate(tr, t);
    const int N = steps_of(tr);
    if (kind == InterpKind::linear) {
        if (w.knot) return scalar_of(tr.states[w.l], var);
        const auto& a = scalar_of(tr.states[w.l], var);
        const auto& b = scalar_of(tr.states[w.l + 1], var);
        ScalarField out = a;
        for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += w.frac * (b.v[i] - a.v[i]);
        return out;
    }
    return scalar_of(tr.states[constant_index(w, kind, N)], var);
}

double interpolant_gap(const Trajectory& tr, Var var, GapPair) {
    require_complete(tr, "interpolant_gap");
    // On each interval X_N - X-hat_N = (s/h - 1) (X^l - X^{l-1}) and
    // X_N - X-check_N = (s/h) (X^l - X^{l-1}); both integrate to (h/3)||.||^2.
    const double h = tr.increments.h;
    double sum = 0.0;
    for (int l = 1; l <= steps_of(tr); ++l) {
        const auto& a = tr.states[l - 1];
        const auto& b = tr.states[l];
        switch (var) {
            case Var::u: sum += (b.u.coeffs - a.u.coeffs).squaredNorm(); break;
            case Var::c: {
                const double x = h1_norm(b.c - a.c);
                sum += x * x;
                break;
            }
            case Var::n: {
                const ScalarField d = b.n - a.n;
                sum += l2_inner(d, d);
                break;
            }
        }
    }
    return h / 3.0 * sum;
}

// ---------------------------------------------------------------------------
// Error terms
// ---------------------------------------------------------------------------

double dual_norm(const ScalarField& f) {
    const ScalarField x = solve_helmholtz(1.0, 0.0, f, 1e-12);
    return std::sqrt(std::max(0.0, l2_inner(f, x)));
}

namespace {

/// Pieces of the error terms that depend only on the first step.
struct FirstWindow {
    Eigen::VectorXd Zu;  // -alpha F(dW^1) u^0 + h R_u
    ScalarField Zc;      // -gamma F^1(c^0) g(c^0) dB^1 - h R_c
    ScalarField Zn;      // -h R_n
};

FirstWindow first_window(const Scheme& s, const Trajectory& tr) {
    const auto& ops = *s.ops;
    const auto& p = s.p;
    const double h = p.h();
    const PathState& s0 = tr.states[0];
    const PathState& s1 = tr.states[1];
    const std::vector<double> dW1 = tr.increments.dW_step(1);
    const std::vector<double> dB1 = tr.increments.dB_step(1);
    FirstWindow fw;

    // R_u = eta A u^1 + B^m(u^0, u^1) - B_0^m(theta(n^1), Phi)
    Eigen::VectorXd Ru = p.eta() * (Eigen::Map<const Eigen::VectorXd>(s.basis()->eigenvalues.data(),
                                                                      ops.m())
                                        .cwiseProduct(s1.u.coeffs));
    Ru += ops.convection_matrix(s0.u) * s1.u.coeffs;
    if (s.gradPhi_inf != 0.0) Ru -= buoyancy_grad(ops, s1.n, s.gradPhi).coeffs;
    fw.Zu = h * Ru;
    if (p.alpha != 0.0) fw.Zu -= p.alpha * (ops.noise_f_matrix(dW1) * s0.u.coeffs);

    const VelocityField u1 = reconstruct(s1.u);
    // R_c = eps A_1 c^1 + B_1(u^1, c^1) - B_2(theta^eps(n^1), c^1), sign as displayed
    ScalarField Rc = neumann_laplacian(s1.c);
    Rc *= p.eps();
    Rc += convect_scalar_faces(ops, u1, s1.c);
    Rc -= reaction(ops, s1.n, s1.c);
    fw.Zc = -h * Rc;
    if (p.gamma != 0.0) {
        ScalarField g0 = noise_g(ops, s0.c, dB1);
        g0 *= p.gamma * f1_cutoff(p.m, s0.c);
        fw.Zc -= g0;
    }

    // R_n = delta A_1 n^1 + B_1(u^1, n^1) + B_3(theta(n^1), c^1), sign as displayed
    ScalarField Rn = neumann_laplacian(s1.n);
    Rn *= p.delta;
    Rn += convect_scalar_faces(ops, u1, s1.n);
    Rn += chemotaxis_flux(ops, s1.n, s1.c);
    fw.Zn = -h * Rn;
    return fw;
}

void require_fine(const Scheme& s, const Trajectory& tr) {
    require_complete(tr, "error terms");
    if (!tr.fine) throw std::invalid_argument("error terms: trajectory carries no fine Brownian path");
    if (!refinable(s.p.N, tr.fine->N_fine) || steps_of(tr) != s.p.N)
        throw std::invalid_argument("error terms: fine path does not refine the scheme grid");
}

/// Noise directions at state l: alpha F_k u^l and gamma F^1(c^l) g_k . grad c^l.
void noise_directions(const Scheme& s, const PathState& st, std::vector<Eigen::VectorXd>& au,
                      std::vector<ScalarField>& ac) {
    const auto& ops = *s.ops;
    const int dim = s.p.grid.dim;
    au.assign(dim, Eigen::VectorXd::Zero(ops.m()));
    ac.assign(dim, ScalarField(s.p.grid));
    const double fc = s.p.gamma != 0.0 ? s.p.gamma * f1_cutoff(s.p.m, st.c) : 0.0;
    for (int k = 0; k < dim; ++k) {
        std::vector<double> e(dim, 0.0);
        e[k] = 1.0;
        if (s.p.alpha != 0.0) au[k] = s.p.alpha * (ops.noise_f_matrix(e) * st.u.coeffs);
        if (fc != 0.0) {
            ac[k] = noise_g(ops, st.c, e);
            ac[k] *= fc;
        }
    }
}

}  // namespace

ErrorVectors error_term_vectors(const Scheme& s, const Trajectory& tr, double t) {
    require_fine(s, tr);
    const Where w = locate(tr, t);
    const int N = steps_of(tr);
    const int dim = s.p.grid.dim;
    const double h = s.p.h();
    const BrownianPath& bp = *tr.fine;
    const int r = bp.N_fine / N;

    // l_N(t): the first interval [t_l, t_{l+1}] containing t.
    int l = 0;
    std::vector<double> G(dim, 0.0), Gb(dim, 0.0);  // W(t_{l+1}) - W(t), beta likewise
    if (w.knot && w.l >= 1) {
        l = w.l - 1;  // the bracket vanishes at the right end of the interval
    } else {
        l = w.knot ? 0 : w.l;
        std::vector<double> W, B;
        bp.cumulative(W, B);
        const double y = std::clamp(t / (s.p.T / bp.N_fine), 0.0, static_cast<double>(bp.N_fine));
        const int j = std::min(static_cast<int>(std::floor(y)), bp.N_fine - 1);
        const double fr = y - j;
        const int end = (l + 1) * r;
        for (int k = 0; k < dim; ++k) {
            const double Wt = W[j * dim + k] + fr * (W[(j + 1) * dim + k] - W[j * dim + k]);
            const double Bt = B[j * dim + k] + fr * (B[(j + 1) * dim + k] - B[j * dim + k]);
            G[k] = W[end * dim + k] - Wt;
            Gb[k] = B[end * dim + k] - Bt;
        }
    }
    const double rho = std::min(t, h) / h;
    const FirstWindow fw = first_window(s, tr);
    std::vector<Eigen::VectorXd> au;
    std::vector<ScalarField> ac;
    noise_directions(s, tr.states[l], au, ac);

    ErrorVectors ev;
    ev.u = rho * fw.Zu;
    ev.c = rho * fw.Zc;
    ev.n = rho * fw.Zn;
    for (int k = 0; k < dim; ++k) {
        ev.u += G[k] * au[k];
        for (std::size_t i = 0; i < ev.c.v.size(); ++i) ev.c.v[i] += Gb[k] * ac[k].v[i];
    }
    return ev;
}

ErrorNorms error_terms(const Scheme& s, const Trajectory& tr, double t) {
    const ErrorVectors ev = error_term_vectors(s, tr, t);
    ErrorNorms en;
    en.u = ev.u.norm();
    en.c = l2_norm(ev.c);
    en.n = dual_norm(ev.n);
    return en;
}

ErrorNorms error_term_integrals(const Scheme& s, const Trajectory& tr) {
    require_fine(s, tr);
    const int N = steps_of(tr);
    const int dim = s.p.grid.dim;
    const double h = s.p.h();
    const double T = s.p.T;
    const BrownianPath& bp = *tr.fine;
    const int r = bp.N_fine / N;
    const double hf = h / r;
    std::vector<double> W, B;
    bp.cumulative(W, B);
    const FirstWindow fw = first_window(s, tr);

    ErrorNorms out;
    Eigen::MatrixXd Gu(dim + 1, dim + 1), Gc(dim + 1, dim + 1);
    std::vector<Eigen::VectorXd> au;
    std::vector<ScalarField> ac;
    Eigen::VectorXd xu(dim + 1), xc(dim + 1);
    for (int l = 0; l < N; ++l) {
        noise_directions(s, tr.states[l], au, ac);
        au.push_back(fw.Zu);
        ac.push_back(fw.Zc);
        for (int a = 0; a <= dim; ++a)
            for (int b = a; b <= dim; ++b) {
                Gu(a, b) = Gu(b, a) = au[a].dot(au[b]);
                Gc(a, b) = Gc(b, a) = l2_inner(ac[a], ac[b]);
            }
        const int end = (l + 1) * r;
        for (int j = 0; j <= r; ++j) {
            const int q = l * r + j;
            const double t = q * hf;
            const double wgt = (j == 0 || j == r) ? 0.5 * hf : hf;
            for (int k = 0; k < dim; ++k) {
                xu[k] = W[end * dim + k] - W[q * dim + k];
                xc[k] = B[end * dim + k] - B[q * dim + k];
            }
            xu[dim] = xc[dim] = std::min(t, h) / h;
            out.u += wgt * xu.dot(Gu * xu);
            out.c += wgt * xc.dot(Gc * xc);
        }
    }
    // E^n(t) = rho(t) Z_n with rho = min(t, h)/h: int rho^2 = h/3 + (T - h).
    const double zn = dual_norm(fw.Zn);
    out.n = zn * zn * (h / 3.0 + (T - h));
    out.u = std::max(out.u, 0.0);
    out.c = std::max(out.c, 0.0);
    return out;
}

// ---------------------------------------------------------------------------
// Summaries
// ---------------------------------------------------------------------------

double increment_sum(const Trajectory& tr, Var var, int j) {
    require_complete(tr, "increment_sum");
    const int N = steps_of(tr);
    if (j < 1 || j > N) throw std::invalid_argument("increment_sum: need 1 <= j <= N");
    const double h = tr.increments.h;
    double sum = 0.0;
    for (int l = 0; l + j <= N; ++l) {
        const auto& a = tr.states[l];
        const auto& b = tr.states[l + j];
        double x = 0.0;
        switch (var) {
            case Var::u: x = (b.u.coeffs - a.u.coeffs).norm(); break;
            case Var::c: x = dual_norm(b.c - a.c); break;
            case Var::n: x = dual_norm(b.n - a.n); break;
        }
        sum += fourth(x);
    }
    return h * sum;
}

double velocity_bound_constant(const Scheme& s) {
    const auto& p = s.p;
    const double lambda1 = s.basis()->eigenvalues.front();
    const double m1 = p.m + 1.0;
    return p.T * m1 * m1 * p.grid.domain_volume() / (p.eta() * lambda1);
}

PathSummary summarize_path(const Scheme& s, const Trajectory& tr, const SummaryOptions& opt) {
    PathSummary ps;
    ps.path_index = tr.seed.path_index;
    if (tr.failed) {
        ps.failed = true;
        ps.failed_step = tr.failed_step;
        ps.failure = tr.failure;
        return ps;
    }
    const auto& p = s.p;
    const double h = p.h();
    const int N = steps_of(tr);
    auto& v = ps.values;

    double max_u2 = 0, sum_du2 = 0, sum_gu2 = 0, max_u_coeff = 0;
    double max_c2 = 0, sum_dc2 = 0, sum_gc2 = 0, max_gc2 = 0, sum_dgc2 = 0, sum_Ac2 = 0;
    double max_n2 = 0, sum_dn2 = 0, sum_gn2 = 0, beta_sq = 0;
    double mono = -std::numeric_limits<double>::infinity(), mass_drift = 0;
    double led_u = 0, led_c = 0, led_n = 0, led_sum_u = 0, led_sum_c = 0, led_sum_n = 0;
    double resub = 0, resub_u = 0, resub_c = 0, resub_n = 0;
    int max_it = 0, total_it = 0;
    const double mass0 = integral(tr.states[0].n);
    for (const auto& st : tr.states) max_u_coeff = std::max(max_u_coeff, st.u.coeffs.cwiseAbs().maxCoeff());
    for (int l = 1; l <= N; ++l) {
        const auto& a = tr.states[l - 1];
        const auto& b = tr.states[l];
        const auto& rep = tr.reports[l - 1];
        const auto& L = rep.ledger;
        max_u2 = std::max(max_u2, b.u.coeffs.squaredNorm());
        sum_du2 += L.u_increment_sq;
        sum_gu2 += L.u_grad_sq;
        const double c2 = l2_inner(b.c, b.c);
        max_c2 = std::max(max_c2, c2);
        sum_dc2 += L.c_increment_sq;
        sum_gc2 += L.c_grad_sq;
        max_gc2 = std::max(max_gc2, L.c_grad_sq);
        const double gdc = grad_norm(b.c - a.c);
        sum_dgc2 += gdc * gdc;
        const ScalarField Ac = neumann_laplacian(b.c);
        sum_Ac2 += l2_inner(Ac, Ac);
        max_n2 = std::max(max_n2, l2_inner(b.n, b.n));
        sum_dn2 += L.n_increment_sq;
        sum_gn2 += L.n_grad_sq;
        for (double x : tr.increments.dB_step(l)) beta_sq += x * x;
        mono = std::max(mono, l2_norm(b.c) - l2_norm(a.c));
        mass_drift = std::max(mass_drift, std::abs(integral(b.n) - mass0));
        led_u = std::max(led_u, L.u.residual);
        led_c = std::max(led_c, L.c.residual);
        led_n = std::max(led_n, L.n.residual);
        led_sum_u += L.u.residual;
        led_sum_c += L.c.residual;
        led_sum_n += L.n.residual;
        resub_u = std::max(resub_u, rep.resub_u);
        resub_c = std::max(resub_c, rep.resub_c);
        resub_n = std::max(resub_n, rep.resub_n);
        max_it = std::max(max_it, rep.iterations);
        total_it += rep.iterations;
    }
    resub = std::max({resub_u, resub_c, resub_n});
    const double eta = p.eta(), eps = p.eps();

    v["u.max_l2sq"] = max_u2;
    v["u.sum_inc_sq"] = sum_du2;
    v["u.h_eta_sum_grad_sq"] = h * eta * sum_gu2;
    v["u.pathwise_lhs"] = max_u2 + sum_du2 + h * eta * sum_gu2;
    v["u.max_abs_coeff"] = max_u_coeff;

    v["c.max_l2sq"] = max_c2;
    v["c.max_l2_4"] = max_c2 * max_c2;
    v["c.sum_inc_sq"] = sum_dc2;
    v["c.h_sum_grad_sq"] = h * sum_gc2;
    v["c.h_sum_grad_sq_sq"] = (h * sum_gc2) * (h * sum_gc2);
    v["c.s2_lhs"] = max_c2 + 0.5 * sum_dc2 + h * eps * sum_gc2;
    v["c.s3_lhs"] = max_c2 * max_c2 + eps * eps * (h * sum_gc2) * (h * sum_gc2);
    v["c.s4_lhs"] = max_gc2 + 0.5 * sum_dgc2 + h * sum_Ac2;
    v["c.s22_lhs"] = max_c2 + 0.5 * sum_dc2 + 2.0 * h * eps * sum_gc2;
    v["c.max_norm_increase"] = mono;
    v["beta.sum_sq"] = beta_sq;

    v["n.max_l2sq"] = max_n2;
    v["n.sum_inc_sq"] = sum_dn2;
    v["n.h_delta_sum_grad_sq"] = h * p.delta * sum_gn2;
    v["n.s5_lhs"] = max_n2 + sum_dn2 + h * p.delta * sum_gn2;
    v["n.s6_lhs"] = max_n2 * max_n2 + sum_dn2 * sum_dn2 +
                    p.delta * p.delta * (h * sum_gn2) * (h * sum_gn2);
    v["n.mass_drift"] = mass_drift;

    v["ledger.u.max_residual"] = led_u;
    v["ledger.c.max_residual"] = led_c;
    v["ledger.n.max_residual"] = led_n;
    v["ledger.u.sum_residual"] = led_sum_u;
    v["ledger.c.sum_residual"] = led_sum_c;
    v["ledger.n.sum_residual"] = led_sum_n;
    v["resub.max"] = resub;
    v["resub.u"] = resub_u;
    v["resub.c"] = resub_c;
    v["resub.n"] = resub_n;
    v["fp.max_iterations"] = max_it;
    v["fp.mean_iterations"] = static_cast<double>(total_it) / N;

    v["gap.u"] = interpolant_gap(tr, Var::u);
    v["gap.c"] = interpolant_gap(tr, Var::c);
    v["gap.n"] = interpolant_gap(tr, Var::n);

    if (opt.increments) {
        for (int j : opt.js) {
            if (j > N) continue;
            const std::string sj = "j" + std::to_string(j);
            v["inc.u." + sj] = increment_sum(tr, Var::u, j);
            v["inc.c." + sj] = increment_sum(tr, Var::c, j);
            v["inc.n." + sj] = increment_sum(tr, Var::n, j);
        }
    }
    if (opt.error_terms) {
        const ErrorNorms e = error_term_integrals(s, tr);
        v["err.u"] = e.u;
        v["err.c"] = e.c;
        v["err.n"] = e.n;
    }
    return ps;
}

// ---------------------------------------------------------------------------
// Statistics and reports
// ---------------------------------------------------------------------------

Statistic make_statistic(const std::vector<double>& xs) {
    Statistic st;
    st.count = xs.size();
    if (xs.empty()) return st;
    double sum = 0.0;
    for (double x : xs) sum += x;
    st.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - st.mean) * (x - st.mean);
        st.variance = ss / static_cast<double>(xs.size() - 1);
        st.se = std::sqrt(st.variance / static_cast<double>(xs.size()));
        st.se_defined = true;
    }
    return st;
}

bool EstimateReport::all_pass() const {
    return std::all_of(entries.begin(), entries.end(), [](const EstimateEntry& e) { return e.pass; });
}

bool EstimateReport::hard_pass() const {
    return std::all_of(entries.begin(), entries.end(),
                       [](const EstimateEntry& e) { return e.pass || !e.hard; });
}

std::string EstimateReport::to_json() const {
    nlohmann::ordered_json j;
    j["paths"] = paths;
    j["all_pass"] = all_pass();
    j["hard_pass"] = hard_pass();
    j["constants"] = nlohmann::ordered_json::object();
    for (const auto& [k, x] : constants) j["constants"][k] = x;
    j["entries"] = nlohmann::ordered_json::array();
    for (const auto& e : entries) {
        nlohmann::ordered_json o;
        o["name"] = e.name;
        o["kind"] = e.kind;
        o["lhs"] = e.lhs;
        o["rhs"] = e.rhs;
        o["margin"] = e.margin;
        o["pass"] = e.pass;
        o["hard"] = e.hard;
        o["note"] = e.note;
        j["entries"].push_back(o);
    }
    return j.dump(2);
}

std::string EstimateReport::to_table() const {
    std::ostringstream os;
    os << std::left << std::setw(44) << "check" << std::setw(12) << "kind" << std::right << std::setw(15)
       << "lhs" << std::setw(15) << "rhs" << "  result\n";
    os << std::scientific << std::setprecision(6);
    for (const auto& e : entries) {
        os << std::left << std::setw(44) << e.name << std::setw(12) << e.kind << std::right << std::setw(15)
           << e.lhs << std::setw(15) << e.rhs << "  " << (e.pass ? "PASS" : (e.hard ? "FAIL" : "fail"));
        if (!e.note.empty()) os << "  (" << e.note << ")";
        os << '\n';
    }
    for (const auto& [k, x] : constants) os << "constant " << k << " = " << x << '\n';
    return os.str();
}

EstimateEntry& add_entry(EstimateReport& r, std::string name, std::string kind, double lhs, double rhs,
                         bool hard, std::string note) {
    EstimateEntry e;
    e.name = std::move(name);
    e.kind = std::move(kind);
    e.lhs = lhs;
    e.rhs = rhs;
    e.margin = rhs - lhs;
    e.pass = std::isfinite(lhs) && std::isfinite(rhs) && lhs <= rhs * (1.0 + 1e-8);
    e.hard = hard;
    e.note = std::move(note);
    r.entries.push_back(std::move(e));
    return r.entries.back();
}

InitialNorms initial_norms(const PathState& init) {
    InitialNorms in;
    in.u_l2sq = init.u.coeffs.squaredNorm();
    in.c_l2sq = l2_inner(init.c, init.c);
    const double g = grad_norm(init.c);
    const ScalarField Ac = neumann_laplacian(init.c);
    in.c_h2sq = in.c_l2sq + g * g + l2_inner(Ac, Ac);
    in.n_l2sq = l2_inner(init.n, init.n);
    in.n_mass = integral(init.n);
    return in;
}

namespace {

std::vector<double> column(const std::vector<PathSummary>& paths, const std::string& key) {
    std::vector<double> xs;
    for (const auto& p : paths)
        if (!p.failed) {
            auto it = p.values.find(key);
            if (it != p.values.end()) xs.push_back(it->second);
        }
    return xs;
}

double max_of(const std::vector<double>& xs) {
    double m = 0.0;
    for (double x : xs) m = std::max(m, x);
    return m;
}

/// Least-squares slope of log y against log x (NaN if any y <= 0).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(y[i] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
        const double a = std::log(x[i]), b = std::log(y[i]);
        sx += a;
        sy += b;
        sxx += a * a;
        sxy += a * b;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

EstimateReport check_estimates(const std::vector<PathSummary>& paths, const Scheme& s, const PathState& init) {
    const auto& p = s.p;
    EstimateReport r;
    std::size_t ok = 0;
    for (const auto& ps : paths) ok += ps.failed ? 0 : 1;
    r.paths = ok;
    const InitialNorms in = initial_norms(init);
    const double m = p.m, T = p.T, g2 = p.gamma * p.gamma;
    const double C_imp = velocity_bound_constant(s);
    const double K = (m + 1.0) * (m + 1.0) / p.delta;
    r.constants["C_imp"] = C_imp;
    r.constants["grad_phi_sup"] = s.gradPhi_inf;
    r.constants["lambda_1"] = s.basis()->eigenvalues.front();
    r.constants["domain_volume"] = p.grid.domain_volume();
    r.constants["K_n"] = K;
    r.constants["k_theta"] = s.ops->theta().k_theta();
    const bool expectation_ok = ok >= 30;
    const std::string few = expectation_ok ? "" : "fewer than 30 paths: reported only";
    const char* ekind = expectation_ok ? "expectation" : "reported";

    const auto failed = static_cast<double>(paths.size() - ok);
    add_entry(r, "paths.failure_fraction", "invariant", paths.empty() ? 0.0 : failed / paths.size(), 0.1, true);
    if (ok == 0) return r;

    // pathwise velocity bound
    add_entry(r, "velocity.pathwise_bound", "pathwise", max_of(column(paths, "u.pathwise_lhs")),
              in.u_l2sq + C_imp * s.gradPhi_inf * s.gradPhi_inf, p.alpha == 0.0,
              p.alpha == 0.0 ? "" : "alpha > 0: the transport-noise cross term is not sign-definite");

    // concentration, L2 level
    const double rhs2 = in.c_l2sq + 18.0 * g2 * m * m * T;
    {
        const Statistic st = make_statistic(column(paths, "c.max_l2sq"));
        add_entry(r, "concentration.E_max_l2sq", ekind, st.mean + 3.0 * st.se, rhs2, false, few);
        const Statistic full = make_statistic(column(paths, "c.s2_lhs"));
        add_entry(r, "concentration.l2_energy", ekind, full.mean + 3.0 * full.se, rhs2, false, few);
    }
    if (p.gamma == 0.0) {
        add_entry(r, "concentration.max_l2sq_pathwise", "pathwise", max_of(column(paths, "c.max_l2sq")),
                  in.c_l2sq, true, "gamma = 0");
        add_entry(r, "concentration.monotone", "pathwise", max_of(column(paths, "c.max_norm_increase")),
                  1e-14 * std::sqrt(in.c_l2sq), true, "per-step increase of ||c||, gamma = 0");
    }
    {
        // pathwise form before expectation: LHS <= |c0|^2 + 6 gamma^2 m^2 sum |d beta|^2
        double worst = -std::numeric_limits<double>::infinity();
        double worst_rhs = 0.0;
        for (const auto& ps : paths) {
            if (ps.failed) continue;
            const double rhs = in.c_l2sq + 6.0 * g2 * m * m * ps.values.at("beta.sum_sq");
            const double d = ps.values.at("c.s22_lhs") - rhs;
            if (d > worst) {
                worst = d;
                worst_rhs = rhs;
            }
        }
        add_entry(r, "concentration.l2_energy_pathwise", "pathwise", worst_rhs + worst, worst_rhs, false,
                  "worst path");
    }
    {
        const Statistic st = make_statistic(column(paths, "c.s3_lhs"));
        add_entry(r, "concentration.l2_fourth_moment", ekind, st.mean + 3.0 * st.se,
                  2.0 * in.c_l2sq * in.c_l2sq + 1944.0 * g2 * g2 * std::pow(m, 4) * T * T, false, few);
    }
    {
        const Statistic st = make_statistic(column(paths, "c.s4_lhs"));
        auto& e = add_entry(r, "concentration.h1_energy", "reported", st.mean, in.c_h2sq, false,
                            "right side has an unquantified constant; lhs vs |c0|_{2,2}^2 only");
        e.pass = true;
    }
    {
        // density: LHS - K h sum |grad c|^2 <= |n0|^2, with K = (m+1)^2 / delta
        std::vector<double> d5, d6;
        for (const auto& ps : paths) {
            if (ps.failed) continue;
            d5.push_back(ps.values.at("n.s5_lhs") - K * ps.values.at("c.h_sum_grad_sq"));
            d6.push_back(ps.values.at("n.s6_lhs") - 2.0 * K * K * ps.values.at("c.h_sum_grad_sq_sq"));
        }
        const Statistic s5 = make_statistic(d5), s6 = make_statistic(d6);
        add_entry(r, "density.l2_energy", ekind, s5.mean + 3.0 * s5.se, in.n_l2sq, false,
                  "lhs minus K h sum |grad c|^2");
        add_entry(r, "density.l2_fourth_moment", ekind, s6.mean + 3.0 * s6.se, 2.0 * in.n_l2sq * in.n_l2sq,
                  false, "lhs minus 2 K^2 (h sum |grad c|^2)^2");
    }

    // increment sums: measured growth in t_j
    for (const char* var : {"u", "c", "n"}) {
        std::vector<double> tj, mean;
        for (int j : {1, 2, 4, 8}) {
            const auto col = column(paths, std::string("inc.") + var + ".j" + std::to_string(j));
            if (col.empty()) continue;
            tj.push_back(j * p.h());
            mean.push_back(make_statistic(col).mean);
        }
        if (tj.size() < 2) continue;
        const double slope = loglog_slope(tj, mean);
        if (std::isnan(slope)) {
            auto& e = add_entry(r, std::string("increments.") + var + ".growth_slope", "reported", 0.0, 0.0,
                                false, "all increments vanish");
            e.pass = true;
            continue;
        }
        add_entry(r, std::string("increments.") + var + ".growth_slope", ekind, 1.6, slope, false,
                  "lhs = required lower bound, rhs = fitted log-log slope in t_j");
    }

    // hard invariants
    const double N = p.N;
    add_entry(r, "ledger.u.max_residual", "invariant", max_of(column(paths, "ledger.u.max_residual")), 1e-8, true);
    add_entry(r, "ledger.c.max_residual", "invariant", max_of(column(paths, "ledger.c.max_residual")), 1e-8, true);
    add_entry(r, "ledger.n.max_residual", "invariant", max_of(column(paths, "ledger.n.max_residual")), 1e-8, true);
    add_entry(r, "ledger.telescoping", "invariant",
              std::max({max_of(column(paths, "ledger.u.sum_residual")),
                        max_of(column(paths, "ledger.c.sum_residual")),
                        max_of(column(paths, "ledger.n.sum_residual"))}),
              N * 1e-10, true, "sum of per-step relative residuals");
    add_entry(r, "fixed_point.resubstitution", "invariant", max_of(column(paths, "resub.max")), 10.0 * p.fp_tol,
              true);
    add_entry(r, "fixed_point.iterations", "invariant", max_of(column(paths, "fp.max_iterations")),
              static_cast<double>(p.fp_max_iters), true);
    add_entry(r, "density.mass_drift", "invariant", max_of(column(paths, "n.mass_drift")), N * 1e-9, true);
    if (p.alpha == 0.0 && p.gamma == 0.0 && in.u_l2sq == 0.0 && s.gradPhi_inf == 0.0)
        add_entry(r, "velocity.stays_zero", "invariant", max_of(column(paths, "u.max_abs_coeff")), 0.0, true,
                  "u0 = 0, Phi = 0, no noise");
    return r;
}

// ---------------------------------------------------------------------------
// Cancellation suite
// ---------------------------------------------------------------------------

CancellationResult cancellation_suite(const OperatorSet& ops, int samples, std::uint64_t seed) {
    const Grid& g = ops.grid();
    const int m = ops.m();
    const int dim = g.dim;
    CancellationResult res;
    auto rel = [](double num, double a, double b) {
        const double d = a * b;
        return d > 0.0 ? std::abs(num) / d : 0.0;
    };
    for (int sIdx = 0; sIdx < samples; ++sIdx) {
        const PathSeed ps{seed, static_cast<std::uint64_t>(sIdx)};
        std::uint64_t key = 0;
        auto normal = [&](int comp) { return standard_normal(ps, key++, Process::W, comp); };
        SpectralVelocity w(ops.basis()), v(ops.basis());
        for (int i = 0; i < m; ++i) {
            w.coeffs[i] = normal(0);
            v.coeffs[i] = normal(1);
        }
        std::vector<double> dW(dim);
        for (int k = 0; k < dim; ++k) dW[k] = normal(2);
        ScalarField c(g), n(g);
        for (std::size_t i = 0; i < c.v.size(); ++i) {
            c.v[i] = normal(3);
            n.v[i] = 2.0 * normal(4) + 1.0;
        }

        const Eigen::VectorXd Bv = ops.convection_matrix(w) * v.coeffs;
        res.convection = std::max(res.convection, rel(Bv.dot(v.coeffs), Bv.norm(), v.coeffs.norm()));
        const Eigen::VectorXd Fv = ops.noise_f_matrix(dW) * v.coeffs;
        res.noise_f = std::max(res.noise_f, rel(Fv.dot(v.coeffs), Fv.norm(), v.coeffs.norm()));
        const ScalarField gc = noise_g(ops, c, dW);
        res.noise_g = std::max(res.noise_g, rel(l2_inner(gc, c), l2_norm(gc), l2_norm(c)));
        const ScalarField b3 = chemotaxis_flux(ops, n, c);
        res.chemotaxis_mass =
            std::max(res.chemotaxis_mass, rel(integral(b3), l2_norm(b3), std::sqrt(g.domain_volume())));
    }
    return res;
}

}  // namespace scns
