/// @file noise.cpp
/// @brief Counter-based Gaussian streams and pairwise coarsening.

#include "scns/noise.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace scns {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double standard_normal(const PathSeed& seed, std::uint64_t step, Process process, int component) {
    std::uint64_t h = splitmix64(seed.base_seed);
    h = splitmix64(h ^ seed.path_index);
    h = splitmix64(h ^ step);
    h = splitmix64(h ^ (static_cast<std::uint64_t>(process) << 32 | static_cast<std::uint32_t>(component)));
    const std::uint64_t a = splitmix64(h ^ 0x1ULL);
    const std::uint64_t b = splitmix64(h ^ 0x2ULL);
    // 53-bit uniforms; u1 in (0, 1] keeps the logarithm finite.
    const double u1 = (static_cast<double>(a >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<double> Increments::dW_step(int l) const {
    return {dW.begin() + (l - 1) * dim, dW.begin() + l * dim};
}

std::vector<double> Increments::dB_step(int l) const {
    return {dB.begin() + (l - 1) * dim, dB.begin() + l * dim};
}

Increments sample_increments(const PathSeed& seed, int N, double h, int dim) {
    if (N < 1 || !(h > 0.0) || dim < 1) throw std::invalid_argument("noise: need N >= 1, h > 0");
    Increments inc;
    inc.N = N;
    inc.dim = dim;
    inc.h = h;
    inc.dW.resize(static_cast<std::size_t>(N) * dim);
    inc.dB.resize(static_cast<std::size_t>(N) * dim);
    const double s = std::sqrt(h);
    for (int l = 0; l < N; ++l)
        for (int k = 0; k < dim; ++k) {
            inc.dW[l * dim + k] = s * standard_normal(seed, l, Process::W, k);
            inc.dB[l * dim + k] = s * standard_normal(seed, l, Process::Beta, k);
        }
    return inc;
}

bool refinable(int N, int N_fine) {
    if (N < 1 || N_fine < N || N_fine % N != 0) return false;
    const int r = N_fine / N;
    return (r & (r - 1)) == 0;
}

Increments BrownianPath::coarsen(int N) const {
    if (!refinable(N, N_fine)) throw std::invalid_argument("noise: N_fine / N must be a power of two");
    Increments cur = fine;
    while (cur.N > N) {
        Increments next;
        next.N = cur.N / 2;
        next.dim = dim;
        next.h = 2.0 * cur.h;
        next.dW.resize(static_cast<std::size_t>(next.N) * dim);
        next.dB.resize(static_cast<std::size_t>(next.N) * dim);
        for (int l = 0; l < next.N; ++l)
            for (int k = 0; k < dim; ++k) {
                next.dW[l * dim + k] = cur.dW[2 * l * dim + k] + cur.dW[(2 * l + 1) * dim + k];
                next.dB[l * dim + k] = cur.dB[2 * l * dim + k] + cur.dB[(2 * l + 1) * dim + k];
            }
        cur = std::move(next);
    }
    cur.h = T / N;
    return cur;
}

void BrownianPath::cumulative(std::vector<double>& W, std::vector<double>& B) const {
    W.assign(static_cast<std::size_t>(N_fine + 1) * dim, 0.0);
    B.assign(static_cast<std::size_t>(N_fine + 1) * dim, 0.0);
    for (int j = 0; j < N_fine; ++j)
        for (int k = 0; k < dim; ++k) {
            W[(j + 1) * dim + k] = W[j * dim + k] + fine.dW[j * dim + k];
            B[(j + 1) * dim + k] = B[j * dim + k] + fine.dB[j * dim + k];
        }
}

std::vector<double> BrownianPath::W_at(int j) const {
    std::vector<double> w(dim, 0.0);
    for (int i = 0; i < j; ++i)
        for (int k = 0; k < dim; ++k) w[k] += fine.dW[i * dim + k];
    return w;
}

std::vector<double> BrownianPath::B_at(int j) const {
    std::vector<double> b(dim, 0.0);
    for (int i = 0; i < j; ++i)
        for (int k = 0; k < dim; ++k) b[k] += fine.dB[i * dim + k];
    return b;
}

BrownianPath sample_path(const PathSeed& seed, int N_fine, double T, int dim) {
    if (!(T > 0.0)) throw std::invalid_argument("noise: T must be positive");
    BrownianPath p;
    p.N_fine = N_fine;
    p.dim = dim;
    p.T = T;
    p.fine = sample_increments(seed, N_fine, T / N_fine, dim);
    return p;
}

}  // namespace scns
