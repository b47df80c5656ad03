/// @file ensemble.cpp
/// @brief Thread pool over path indices with ordered reduction.

#include "scns/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace scns {

namespace {

int worker_count(int requested, int jobs) {
    int w = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
    return std::clamp(w, 1, std::max(1, jobs));
}

/// Runs job(i) for i in [0, n) on `workers` threads; rethrows the first exception.
template <class Job>
void parallel_for(int n, int workers, Job job) {
    std::atomic<int> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    auto loop = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n) return;
            try {
                job(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!err) err = std::current_exception();
                next.store(n);
            }
        }
    };
    const int w = worker_count(workers, n);
    if (w == 1) {
        loop();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(w);
        for (int k = 0; k < w; ++k) pool.emplace_back(loop);
        for (auto& t : pool) t.join();
    }
    if (err) std::rethrow_exception(err);
}

void check_quota(int failures, int count, const std::string& where) {
    if (failures * 10 > count)
        throw EnsembleFailure(where + ": " + std::to_string(failures) + " of " + std::to_string(count) +
                              " paths failed (quota 10%)");
}

}  // namespace

void validate(const EnsembleSpec& spec) {
    if (!spec.scheme) throw std::invalid_argument("ensemble: scheme not set");
    if (spec.path_count < 1) throw std::invalid_argument("ensemble: path_count must be >= 1");
    if (spec.keep_trajectories < 0) throw std::invalid_argument("ensemble: keep_trajectories must be >= 0");
    for (std::size_t i = 1; i < spec.N_list.size(); ++i)
        if (spec.N_list[i] <= spec.N_list[i - 1])
            throw std::invalid_argument("ensemble: N list must be strictly increasing");
    if (!spec.N_list.empty()) {
        const int nmax = spec.N_list.back();
        for (int N : spec.N_list)
            if (!refinable(N, nmax))
                throw std::invalid_argument("ensemble: every N must divide the largest by a power of two");
    }
}

std::map<std::string, Statistic> aggregate(const std::vector<PathSummary>& paths) {
    std::map<std::string, std::vector<double>> cols;
    for (const auto& p : paths) {
        if (p.failed) continue;
        for (const auto& [k, v] : p.values) cols[k].push_back(v);
    }
    std::map<std::string, Statistic> out;
    for (const auto& [k, xs] : cols) out[k] = make_statistic(xs);
    return out;
}

EnsembleResult run_ensemble(const EnsembleSpec& spec) {
    validate(spec);
    const Scheme& s = *spec.scheme;
    EnsembleResult res;
    res.paths.resize(spec.path_count);
    const int keep = std::min(spec.keep_trajectories, spec.path_count);
    res.trajectories.resize(keep);
    parallel_for(spec.path_count, spec.workers, [&](int i) {
        const PathSeed seed{spec.base_seed, static_cast<std::uint64_t>(i)};
        Trajectory tr = run_path(s, seed, spec.init);
        tr.seed = seed;
        res.paths[i] = summarize_path(s, tr, spec.summary);
        res.paths[i].path_index = seed.path_index;
        if (spec.on_path) spec.on_path(tr);
        if (i < keep) res.trajectories[i] = std::move(tr);
    });
    for (const auto& p : res.paths) res.failures += p.failed ? 1 : 0;
    check_quota(res.failures, spec.path_count, "ensemble");
    res.stats = aggregate(res.paths);
    return res;
}

double loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = std::min(x.size(), y.size());
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(y[i] > 0.0) || !(x[i] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
        const double a = std::log(x[i]), b = std::log(y[i]);
        sx += a;
        sy += b;
        sxx += a * a;
        sxy += a * b;
    }
    const double dn = static_cast<double>(n);
    return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

ConvergenceResult convergence_study(const EnsembleSpec& spec) {
    validate(spec);
    if (spec.N_list.size() < 2) throw std::invalid_argument("convergence: need at least two N values");
    const Scheme& base = *spec.scheme;
    const int nN = static_cast<int>(spec.N_list.size());
    const int N_fine = spec.N_list.back() << base.p.noise_refine_log2;
    std::vector<SchemePtr> schemes;
    for (int N : spec.N_list) schemes.push_back(Scheme::with_steps(base, N));

    SummaryOptions opt = spec.summary;
    opt.error_terms = true;
    opt.increments = false;
    std::vector<std::vector<PathSummary>> sums(nN, std::vector<PathSummary>(spec.path_count));
    parallel_for(spec.path_count, spec.workers, [&](int i) {
        const PathSeed seed{spec.base_seed, static_cast<std::uint64_t>(i)};
        const BrownianPath fine = sample_path(seed, N_fine, base.p.T, base.p.grid.dim);
        for (int k = 0; k < nN; ++k) {
            const Trajectory tr = run_path(*schemes[k], seed, spec.init, fine);
            sums[k][i] = summarize_path(*schemes[k], tr, opt);
            sums[k][i].path_index = seed.path_index;
            if (spec.on_path) spec.on_path(tr);
        }
    });

    ConvergenceResult res;
    res.quantities = {"gap.u", "gap.c", "gap.n", "err.u", "err.c", "err.n"};
    for (int k = 0; k < nN; ++k) {
        ConvergenceRow row;
        row.N = spec.N_list[k];
        row.h = schemes[k]->p.h();
        for (const auto& p : sums[k]) row.failures += p.failed ? 1 : 0;
        check_quota(row.failures, spec.path_count, "convergence N=" + std::to_string(row.N));
        const auto all = aggregate(sums[k]);
        for (const auto& q : res.quantities) {
            auto it = all.find(q);
            row.stats[q] = it != all.end() ? it->second : Statistic{};
        }
        res.rows.push_back(std::move(row));
    }
    for (const auto& q : res.quantities) {
        std::vector<double> hs, ms;
        for (const auto& row : res.rows) {
            hs.push_back(row.h);
            ms.push_back(row.stats.at(q).mean);
        }
        res.slopes[q] = loglog_fit(hs, ms);
        bool flagged = false;
        for (std::size_t k = 1; k < res.rows.size(); ++k) {
            const Statistic& a = res.rows[k - 1].stats.at(q);
            const Statistic& b = res.rows[k].stats.at(q);
            res.ratios[q].push_back(a.mean > 0.0 ? b.mean / a.mean : std::numeric_limits<double>::quiet_NaN());
            if (b.mean > a.mean + 2.0 * std::sqrt(a.se * a.se + b.se * b.se)) flagged = true;
        }
        if (flagged) res.non_monotone.push_back(q);
    }
    return res;
}

std::string ConvergenceResult::to_csv() const {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "N,h";
    for (const auto& q : quantities) os << ',' << q << ".mean," << q << ".se";
    os << '\n';
    for (const auto& row : rows) {
        os << row.N << ',' << row.h;
        for (const auto& q : quantities) os << ',' << row.stats.at(q).mean << ',' << row.stats.at(q).se;
        os << '\n';
    }
    os << "slope,";
    for (const auto& q : quantities) os << ',' << slopes.at(q) << ',';
    os << '\n';
    return os.str();
}

std::string ConvergenceResult::to_long_csv() const {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "quantity,N,h,mean,se\n";
    for (const auto& q : quantities)
        for (const auto& row : rows)
            os << q << ',' << row.N << ',' << row.h << ',' << row.stats.at(q).mean << ','
               << row.stats.at(q).se << '\n';
    return os.str();
}

}  // namespace scns
