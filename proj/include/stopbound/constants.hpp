#pragma once

#include <stdexcept>

namespace stopbound {

/// Leading coefficient of the small-time boundary d(y) ~ -B y^2 for a
/// generator payoff behaving like |y|^beta at the edge of the initial
/// continuation set, with m_ratio the ratio of left to right coefficients.
struct AsymptoticConstant {
    double beta = 1.0;
    double m_ratio = 1.0;
    double B = 0.0;
    double alpha = 0.0;  // 1 / sqrt(B), the sqrt(-t) coefficient of b(t)
    double identity_residual = 0.0;
};

class OutOfRange : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// int_0^inf z^beta exp(-B z^2 / 2 + z) dz by adaptive quadrature.
double boundary_moment(double B, double beta);

/// Solves boundary_moment(B, beta) = m_ratio * Gamma(beta + 1) for B in [1e-3, 1e3].
AsymptoticConstant solve_B(double beta, double m_ratio = 1.0);

/// Analytic value of int_0^inf z exp(-B z^2 / 2 + z) dz.
double closed_form_moment(double B);

/// Positive root of a^3 Phi(a) = (1 - a^2) phi(a).
double stadje_alpha();

/// a^3 Phi(a) - (1 - a^2) phi(a)
double stadje_equation(double alpha);

}  // namespace stopbound
