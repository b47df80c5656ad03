/// @file truncation.cpp
/// @brief Piecewise evaluation of theta_m and its exact derivatives.

#include "scns/truncation.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace scns {

double theta(int m, double x) {
    const double M = m;
    if (x <= 0.0) return 0.0;
    if (x <= 1.0 / M) {
        const double y = M * x;  // 3y^5 - 8y^4 + 6y^3 scaled by 1/m
        return y * y * y * (6.0 + y * (-8.0 + 3.0 * y)) / M;
    }
    if (x <= M) return x;
    if (x < M + 2.0) {
        const double s = 0.5 * (x - M);
        return M + s * (2.0 + s * s * (-2.0 + s));
    }
    return M + 1.0;
}

double theta_prime(int m, double x) {
    const double M = m;
    if (x <= 0.0) return 0.0;
    if (x <= 1.0 / M) {
        const double y = M * x;  // 15y^4 - 32y^3 + 18y^2
        return y * y * (18.0 + y * (-32.0 + 15.0 * y));
    }
    if (x <= M) return 1.0;
    if (x < M + 2.0) {
        const double s = 0.5 * (x - M);
        return (1.0 - s) * (1.0 - s) * (1.0 + 2.0 * s);
    }
    return 0.0;
}

double theta_second(int m, double x) {
    const double M = m;
    if (x <= 0.0) return 0.0;
    if (x <= 1.0 / M) {
        const double y = M * x;  // m (60y^3 - 96y^2 + 36y)
        return M * y * (36.0 + y * (-96.0 + 60.0 * y));
    }
    if (x <= M) return 0.0;
    if (x < M + 2.0) {
        const double s = 0.5 * (x - M);
        return -3.0 * s * (1.0 - s);
    }
    return 0.0;
}

double theta_eps(int m, double x) { return theta(m, x) + 8.0 / m; }

ThetaFamily::ThetaFamily(int m) : m_(m) {
    if (m < 1) throw std::invalid_argument("theta: m must be >= 1");
    const double M = m;
    // Hard startup assertion: the bridge is monotone with slope at most one.
    const int samples = 4096;
    for (int i = 0; i <= samples; ++i) {
        const double x = M + 2.0 * i / samples;
        const double d = theta_prime(m, x);
        if (d < 0.0 || d > 1.0)
            throw std::logic_error("theta: bridge slope outside [0,1] for m=" + std::to_string(m));
    }
    // K_theta: sup |theta'| and sup |theta''|/m over a dense sample covering all branches.
    double k = 0.0;
    auto probe = [&](double x) {
        k = std::max(k, std::abs(theta_prime(m, x)));
        k = std::max(k, std::abs(theta_second(m, x)) / M);
    };
    for (int i = 0; i <= samples; ++i) probe((1.0 / M) * i / samples);
    for (int i = 0; i <= samples; ++i) probe(M + 2.0 * i / samples);
    probe(0.5 * (1.0 / M + M));
    k_theta_ = k;
}

double ThetaFamily::value(double x) const { return theta(m_, x); }
double ThetaFamily::prime(double x) const { return theta_prime(m_, x); }
double ThetaFamily::second(double x) const { return theta_second(m_, x); }

ScalarField ThetaFamily::apply(const ScalarField& n) const {
    ScalarField out(n.grid);
    for (std::size_t i = 0; i < n.v.size(); ++i) out.v[i] = value(n.v[i]);
    return out;
}

ScalarField ThetaFamily::apply_prime(const ScalarField& n) const {
    ScalarField out(n.grid);
    for (std::size_t i = 0; i < n.v.size(); ++i) out.v[i] = prime(n.v[i]);
    return out;
}

ScalarField ThetaFamily::apply_eps(const ScalarField& n) const {
    ScalarField out(n.grid);
    for (std::size_t i = 0; i < n.v.size(); ++i) out.v[i] = eps_value(n.v[i]);
    return out;
}

double f_cutoff(int m, double x) {
    if (!(x > 0.0)) throw std::domain_error("F_m: argument must be positive");
    return std::min(1.0, m / x);
}

double f1_cutoff(int m, const ScalarField& c) { return f_cutoff(m, h1_norm(c) + 1.0); }

}  // namespace scns
