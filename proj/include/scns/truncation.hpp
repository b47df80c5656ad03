/// @file truncation.hpp
/// @brief The C^2 truncation family theta_m and the cutoffs F_m, F^1_m.
///
///   theta_m(x) = 0                              x <= 0
///              = 3 m^4 x^5 - 8 m^3 x^4 + 6 m^2 x^3   0 < x <= 1/m
///              = x                              1/m < x <= m
///              = quintic Hermite bridge         m < x < m + 2
///              = m + 1                          x >= m + 2
///
/// The bridge matches (value m, slope 1, curvature 0) at x = m and
/// (value m + 1, slope 0, curvature 0) at x = m + 2. With s = (x - m)/2 it is
/// m + 2s - 2s^3 + s^4, whose slope (1 - s)^2 (1 + 2s) lies in [0, 1].

#pragma once

#include "scns/fields.hpp"

namespace scns {

class ThetaFamily {
public:
    /// Builds the family for m >= 1 and checks 0 <= theta' <= 1 on the bridge
    /// (throws std::logic_error if violated). Measures K_theta.
    explicit ThetaFamily(int m);

    int m() const { return m_; }
    double operator()(double x) const { return value(x); }
    double value(double x) const;
    double prime(double x) const;
    double second(double x) const;
    /// theta_m(x) + 8/m
    double eps_value(double x) const { return value(x) + eps_m(); }
    double eps_m() const { return 8.0 / m_; }
    /// Measured constant with |theta'| <= K and |theta''| <= K m (dense sample).
    double k_theta() const { return k_theta_; }
    /// Largest |theta_m| (= m + 1).
    double sup() const { return m_ + 1.0; }

    /// Elementwise theta_m / theta_m' / theta_m + 8/m of a field.
    ScalarField apply(const ScalarField& n) const;
    ScalarField apply_prime(const ScalarField& n) const;
    ScalarField apply_eps(const ScalarField& n) const;

private:
    int m_;
    double k_theta_ = 0.0;
};

/// Free-function forms.
double theta(int m, double x);
double theta_prime(int m, double x);
double theta_second(int m, double x);
double theta_eps(int m, double x);

/// F_m(x) = min(1, m/x); throws std::domain_error for x <= 0.
double f_cutoff(int m, double x);
/// F_m(||c||_{1,2} + 1)
double f1_cutoff(int m, const ScalarField& c);

}  // namespace scns
