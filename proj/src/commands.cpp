/// @file commands.cpp
/// @brief run / check / converge / dump-theta / dump-basis.

#include "scns/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "scns/diagnostics.hpp"
#include "scns/ensemble.hpp"
#include "scns/kernels.hpp"
#include "scns/truncation.hpp"

#ifndef SCNS_VERSION
#define SCNS_VERSION "0.0.0"
#endif

namespace scns {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

void write_text(const fs::path& dir, const std::string& name, const std::string& text) {
    fs::create_directories(dir);
    const fs::path p = dir / name;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << text;
    if (!f) throw std::runtime_error("write failed: " + p.string());
}

json header_json(const RunConfig& rc, const std::string& command) {
    json h;
    h["tool"] = "scns";
    h["version"] = SCNS_VERSION;
    h["command"] = command;
    h["config_hash"] = rc.hash();
    h["seed"] = rc.seed;
    return h;
}

json stat_json(const Statistic& s) {
    json j;
    j["count"] = s.count;
    j["mean"] = s.mean;
    j["variance"] = s.variance;
    if (s.se_defined)
        j["se"] = s.se;
    else
        j["se"] = nullptr;  // undefined for a single path
    return j;
}

SchemePtr build_scheme(const RunConfig& rc) {
    BasisOptions bopt;
    bopt.cache_dir = rc.basis_cache;
    return Scheme::build(rc.to_params(), bopt, !rc.break_skew);
}

void print_warnings(const RunConfig& rc, std::ostream& err) {
    for (const auto& w : rc.to_params().validate()) err << w << '\n';
}

std::string paths_csv(const std::string& header, const std::vector<PathSummary>& paths) {
    std::set<std::string> keys;
    for (const auto& p : paths)
        for (const auto& [k, v] : p.values) keys.insert(k);
    std::ostringstream os;
    os << header << '\n' << std::setprecision(17) << "path,failed,failed_step";
    for (const auto& k : keys) os << ',' << k;
    os << '\n';
    for (const auto& p : paths) {
        os << p.path_index << ',' << (p.failed ? 1 : 0) << ',' << p.failed_step;
        for (const auto& k : keys) {
            auto it = p.values.find(k);
            os << ',';
            if (it != p.values.end()) os << it->second;
        }
        os << '\n';
    }
    return os.str();
}

std::string trajectory_csv(const std::string& header, const Trajectory& tr) {
    std::ostringstream os;
    os << header << '\n' << std::setprecision(17);
    os << "step,t,u_l2sq,u_grad_sq,c_l2sq,c_grad_sq,n_l2sq,n_mass,fp_iterations,fp_residual,omega,"
          "ledger_u,ledger_c,ledger_n,resub_u,resub_c,resub_n,cg_iterations_c,cg_iterations_n\n";
    for (std::size_t l = 0; l < tr.states.size(); ++l) {
        const auto& st = tr.states[l];
        const double gc = grad_norm(st.c);
        os << st.step << ',' << st.t << ',' << st.u.coeffs.squaredNorm() << ',' << st.u.grad_sq() << ','
           << l2_inner(st.c, st.c) << ',' << gc * gc << ',' << l2_inner(st.n, st.n) << ',' << integral(st.n);
        if (l == 0) {
            os << ",0,0,1,0,0,0,0,0,0,0,0\n";
            continue;
        }
        const auto& r = tr.reports[l - 1];
        os << ',' << r.iterations << ',' << r.fp_residual << ',' << r.omega << ',' << r.ledger.u.residual << ','
           << r.ledger.c.residual << ',' << r.ledger.n.residual << ',' << r.resub_u << ',' << r.resub_c << ','
           << r.resub_n << ',' << r.cg_iterations_c << ',' << r.cg_iterations_n << '\n';
    }
    return os.str();
}

std::string field_csv(const std::string& header, const ScalarField& f) {
    std::ostringstream os;
    os << header << '\n';
    write_csv(os, f);
    return os.str();
}

json failures_json(const std::vector<PathSummary>& paths) {
    json a = json::array();
    for (const auto& p : paths)
        if (p.failed) a.push_back({{"path", p.path_index}, {"step", p.failed_step}, {"reason", p.failure}});
    return a;
}

/// Runs the ensemble of the config and writes the shared run artefacts.
struct EnsembleRun {
    SchemePtr scheme;
    PathState init;
    EnsembleResult result;
    EstimateReport report;
};

EnsembleRun run_and_write(const RunConfig& rc, const CommandOptions& opt, const std::string& command) {
    EnsembleRun er;
    er.scheme = build_scheme(rc);
    er.init = make_initial_state(*er.scheme, rc);
    EnsembleSpec spec;
    spec.scheme = er.scheme;
    spec.init = er.init;
    spec.path_count = rc.paths;
    spec.base_seed = rc.seed;
    spec.workers = opt.workers.value_or(rc.workers);
    spec.summary.increments = rc.increments;
    spec.keep_trajectories = rc.keep_trajectories;
    er.result = run_ensemble(spec);
    er.report = check_estimates(er.result.paths, *er.scheme, er.init);

    const fs::path dir = rc.out_dir;
    const std::string hdr = output_header(rc, command);
    write_text(dir, "resolved_config.toml", hdr + "\n" + rc.resolved_text());
    write_text(dir, "paths.csv", paths_csv(hdr, er.result.paths));
    std::ostringstream seeds;
    seeds << hdr << "\npath,base_seed\n";
    for (int i = 0; i < rc.paths; ++i) seeds << i << ',' << rc.seed << '\n';
    write_text(dir, "seeds.csv", seeds.str());
    for (std::size_t i = 0; i < er.result.trajectories.size(); ++i) {
        const auto& tr = er.result.trajectories[i];
        const std::string id = std::to_string(i);
        write_text(dir, "trajectory_" + id + ".csv", trajectory_csv(hdr, tr));
        if (!tr.states.empty()) {
            write_text(dir, "final_c_" + id + ".csv", field_csv(hdr, tr.states.back().c));
            write_text(dir, "final_n_" + id + ".csv", field_csv(hdr, tr.states.back().n));
        }
    }
    json j;
    j["header"] = header_json(rc, command);
    j["warnings"] = rc.to_params().validate();
    j["paths"] = rc.paths;
    j["failures"] = er.result.failures;
    j["failed_paths"] = failures_json(er.result.paths);
    j["stats"] = json::object();
    for (const auto& [k, s] : er.result.stats) j["stats"][k] = stat_json(s);
    j["invariants_pass"] = er.report.hard_pass();
    j["estimates"] = json::parse(er.report.to_json());
    write_text(dir, "summary.json", j.dump(2) + "\n");
    return er;
}

template <class F>
int guarded(const CommandOptions& opt, std::ostream& err, const std::string& command, F body) {
    RunConfig rc;
    try {
        rc = resolve_config(opt);
        kernels::select(rc.kernels);
        print_warnings(rc, err);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    try {
        return body(rc);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        json j;
        j["header"] = header_json(rc, command);
        j["error"] = e.what();
        if (dynamic_cast<const EnsembleFailure*>(&e) != nullptr) j["kind"] = "ensemble";
        else if (auto* sf = dynamic_cast<const SolverFailure*>(&e)) {
            j["kind"] = "solver";
            j["residual"] = sf->residual;
        } else {
            j["kind"] = "runtime";
        }
        try {
            write_text(rc.out_dir, "error.json", j.dump(2) + "\n");
        } catch (...) {
        }
        err << "runtime failure: " << e.what() << '\n';
        return kExitRuntime;
    }
}

}  // namespace

RunConfig resolve_config(const CommandOptions& opt) {
    ConfigMap m;
    if (!opt.config_path.empty()) {
        std::ifstream f(opt.config_path);
        if (!f) throw ConfigError("cannot open config file '" + opt.config_path + "'");
        std::stringstream ss;
        ss << f.rdbuf();
        m = parse_config_text(ss.str(), opt.config_path);
    }
    if (opt.paths) m["ensemble.paths"] = std::to_string(*opt.paths);
    if (opt.seed) m["ensemble.seed"] = std::to_string(*opt.seed);
    if (opt.out) m["output.dir"] = *opt.out;
    if (opt.n_steps) m["scheme.N"] = std::to_string(*opt.n_steps);
    if (opt.grid) {
        m["grid.cells"] = *opt.grid;
        if (opt.grid->find_first_of("xX") != std::string::npos) m.erase("grid.dim");
    }
    RunConfig rc = config_from_map(m);
    if (opt.workers) rc.workers = *opt.workers;
    return rc;
}

std::string output_header(const RunConfig& rc, const std::string& command) {
    return "# scns version=" + std::string(SCNS_VERSION) + " command=" + command + " config_hash=" + rc.hash() +
           " seed=" + std::to_string(rc.seed);
}

int cmd_run(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
    return guarded(opt, err, "run", [&](const RunConfig& rc) {
        const EnsembleRun er = run_and_write(rc, opt, "run");
        const bool ok = er.result.failures == 0 && er.report.hard_pass();
        if (!opt.quiet) {
            out << "paths: " << rc.paths << ", failures: " << er.result.failures << '\n';
            for (const char* k : {"ledger.u.max_residual", "ledger.c.max_residual", "ledger.n.max_residual",
                                  "resub.max", "fp.max_iterations", "n.mass_drift"}) {
                auto it = er.result.stats.find(k);
                if (it != er.result.stats.end()) out << k << " mean " << it->second.mean << '\n';
            }
            out << "invariants: " << (er.report.hard_pass() ? "pass" : "FAIL") << '\n';
            out << "output: " << rc.out_dir << '\n';
        }
        if (!ok) {
            for (const auto& e : er.report.entries)
                if (e.hard && !e.pass) err << "invariant failed: " << e.name << " lhs=" << e.lhs << " rhs=" << e.rhs << '\n';
            if (er.result.failures) err << er.result.failures << " path(s) failed; see summary.json\n";
        }
        return ok ? kExitOk : kExitRuntime;
    });
}

int cmd_check(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
    return guarded(opt, err, "check", [&](const RunConfig& rc) {
        EnsembleRun er = run_and_write(rc, opt, "check");
        const CancellationResult cr = cancellation_suite(*er.scheme->ops, rc.cancellation_samples, rc.seed);
        add_entry(er.report, "cancellation.convection", "invariant", cr.convection, 1e-10, true);
        add_entry(er.report, "cancellation.noise_f", "invariant", cr.noise_f, 1e-10, true);
        add_entry(er.report, "cancellation.noise_g", "invariant", cr.noise_g, 1e-10, true);
        add_entry(er.report, "cancellation.chemotaxis_mass", "invariant", cr.chemotaxis_mass, 1e-10, true);
        const std::string hdr = output_header(rc, "check");
        json j;
        j["header"] = header_json(rc, "check");
        j["report"] = json::parse(er.report.to_json());
        write_text(rc.out_dir, "report.json", j.dump(2) + "\n");
        write_text(rc.out_dir, "report.txt", hdr + "\n" + er.report.to_table());
        if (!opt.quiet) out << er.report.to_table();
        if (!er.report.hard_pass()) {
            for (const auto& e : er.report.entries)
                if (e.hard && !e.pass) err << "invariant failed: " << e.name << " lhs=" << e.lhs << " rhs=" << e.rhs << '\n';
            return kExitRuntime;
        }
        return er.result.failures == 0 ? kExitOk : kExitRuntime;
    });
}

int cmd_converge(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
    return guarded(opt, err, "converge", [&](const RunConfig& rc) {
        if (rc.N_list.size() < 2) throw ConfigError("converge.N_list: need at least two entries");
        SchemeParams p = rc.to_params();
        p.N = rc.N_list.back();
        BasisOptions bopt;
        bopt.cache_dir = rc.basis_cache;
        EnsembleSpec spec;
        spec.scheme = Scheme::build(p, bopt, !rc.break_skew);
        spec.init = make_initial_state(*spec.scheme, rc);
        spec.path_count = rc.paths;
        spec.base_seed = rc.seed;
        spec.workers = opt.workers.value_or(rc.workers);
        spec.N_list = rc.N_list;
        const ConvergenceResult cr = convergence_study(spec);
        const std::string hdr = output_header(rc, "converge");
        write_text(rc.out_dir, "resolved_config.toml", hdr + "\n" + rc.resolved_text());
        write_text(rc.out_dir, "converge.csv", hdr + "\n" + cr.to_csv());
        write_text(rc.out_dir, "converge_long.csv", hdr + "\n" + cr.to_long_csv());
        json j;
        j["header"] = header_json(rc, "converge");
        j["N"] = rc.N_list;
        j["slopes"] = json::object();
        for (const auto& [k, s] : cr.slopes) j["slopes"][k] = s;
        j["ratios"] = json::object();
        for (const auto& [k, r] : cr.ratios) j["ratios"][k] = r;
        j["non_monotone"] = cr.non_monotone;
        write_text(rc.out_dir, "converge.json", j.dump(2) + "\n");
        if (!opt.quiet) {
            out << cr.to_csv();
            for (const auto& q : cr.non_monotone) out << "flag: " << q << " is not monotone in N\n";
        }
        return kExitOk;
    });
}

int cmd_dump_theta(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
    return guarded(opt, err, "dump-theta", [&](const RunConfig& rc) {
        const int m = rc.scheme.m;
        const ThetaFamily th(m);
        std::ostringstream os;
        os << output_header(rc, "dump-theta") << '\n' << std::setprecision(17);
        os << "x,theta,theta_prime,theta_second,theta_eps,f_cutoff\n";
        const int samples = 4001;
        const double lo = -1.0, hi = m + 4.0;
        for (int i = 0; i < samples; ++i) {
            const double x = lo + (hi - lo) * i / (samples - 1);
            os << x << ',' << th.value(x) << ',' << th.prime(x) << ',' << th.second(x) << ',' << th.eps_value(x)
               << ',';
            if (x > 0.0) os << f_cutoff(m, x);
            os << '\n';
        }
        write_text(rc.out_dir, "theta.csv", os.str());
        if (!opt.quiet) out << "m = " << m << ", k_theta = " << th.k_theta() << ", output: " << rc.out_dir << '\n';
        return kExitOk;
    });
}

int cmd_dump_basis(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
    return guarded(opt, err, "dump-basis", [&](const RunConfig& rc) {
        BasisOptions bopt;
        bopt.cache_dir = rc.basis_cache;
        const BasisPtr b = compute_basis(rc.grid(), rc.scheme.m, bopt);
        const std::string hdr = output_header(rc, "dump-basis");
        std::ostringstream ev;
        ev << hdr << '\n' << std::setprecision(17) << "index,eigenvalue\n";
        for (std::size_t i = 0; i < b->eigenvalues.size(); ++i) ev << i << ',' << b->eigenvalues[i] << '\n';
        write_text(rc.out_dir, "eigenvalues.csv", ev.str());
        std::ostringstream modes(std::ios::binary);
        for (int i = 0; i < b->m; ++i) write_binary(modes, b->mode(i));
        write_text(rc.out_dir, "modes.bin", modes.str());
        json j;
        j["header"] = header_json(rc, "dump-basis");
        j["grid"] = json::parse(grid_json(b->grid));
        j["m"] = b->m;
        j["solenoidal_dim"] = b->solenoidal_dim;
        j["c_inf"] = b->c_inf;
        j["max_mode_sup"] = b->max_mode_sup;
        j["eigenvalues"] = b->eigenvalues;
        write_text(rc.out_dir, "basis.json", j.dump(2) + "\n");
        if (!opt.quiet) {
            out << "m = " << b->m << ", solenoidal dimension = " << b->solenoidal_dim << ", c_inf = " << b->c_inf
                << '\n';
            for (std::size_t i = 0; i < b->eigenvalues.size(); ++i)
                out << "lambda_" << i + 1 << " = " << std::setprecision(12) << b->eigenvalues[i] << '\n';
        }
        return kExitOk;
    });
}

int run_command(const std::string& name, const CommandOptions& opt, std::ostream& out, std::ostream& err) {
    if (name == "run") return cmd_run(opt, out, err);
    if (name == "check") return cmd_check(opt, out, err);
    if (name == "converge") return cmd_converge(opt, out, err);
    if (name == "dump-theta") return cmd_dump_theta(opt, out, err);
    if (name == "dump-basis") return cmd_dump_basis(opt, out, err);
    err << "unknown command '" << name << "'\n";
    return kExitConfig;
}

}  // namespace scns
