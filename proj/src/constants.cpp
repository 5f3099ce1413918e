#include "stopbound/constants.hpp"

#include "stopbound/numerics.hpp"

#include <cmath>
#include <sstream>

namespace stopbound {

namespace {

constexpr double kBLow = 1e-3;
constexpr double kBHigh = 1e3;

}  // namespace

double boundary_moment(double B, double beta) {
    if (!(B > 0.0)) throw std::invalid_argument("boundary_moment requires B > 0");
    if (!(beta >= 0.0)) throw std::invalid_argument("boundary_moment requires beta >= 0");
    // Gaussian centred at 1/B with standard deviation 1/sqrt(B); 40 standard
    // deviations beyond the centre the integrand is below exp(-800) of its peak.
    const double centre = 1.0 / B;
    const double upper = centre + 40.0 / std::sqrt(B);
    const auto integrand = [=](double z) {
        return std::pow(z, beta) * std::exp(-0.5 * B * z * z + z);
    };
    QuadratureSpec spec;
    spec.relative_tolerance = 1e-11;
    spec.absolute_tolerance = 1e-300;
    spec.max_subdivisions = 5000;
    // Split at the peak so the panel tree resolves both flanks.
    const double split = std::min(centre, 0.5 * upper);
    return integrate_finite(integrand, 0.0, split, spec) +
           integrate_finite(integrand, split, upper, spec);
}

AsymptoticConstant solve_B(double beta, double m_ratio) {
    if (!(beta >= 0.0)) throw std::invalid_argument("solve_B requires beta >= 0");
    if (!(m_ratio > 0.0)) throw std::invalid_argument("solve_B requires m_ratio > 0");

    const double target = m_ratio * std::tgamma(beta + 1.0);
    // Compare on a log scale: the moment spans hundreds of decades on [1e-3, 1e3].
    const auto equation = [&](double B) { return std::log(boundary_moment(B, beta) / target); };
    RootBracket bracket{kBLow, kBHigh, equation(kBLow), equation(kBHigh)};
    try {
        bracket.validate();
    } catch (const BracketError&) {
        std::ostringstream msg;
        msg << "B_beta for beta = " << beta << ", m_ratio = " << m_ratio
            << " is not bracketed in [" << kBLow << ", " << kBHigh << "]";
        throw OutOfRange(msg.str());
    }
    const double B = find_root(equation, bracket, 1e-14);

    AsymptoticConstant result;
    result.beta = beta;
    result.m_ratio = m_ratio;
    result.B = B;
    result.alpha = 1.0 / std::sqrt(B);
    result.identity_residual = boundary_moment(B, beta) - target;
    return result;
}

double closed_form_moment(double B) {
    if (!(B > 0.0)) throw std::invalid_argument("closed_form_moment requires B > 0");
    // Completing the square: -B z^2/2 + z = -B (z - 1/B)^2 / 2 + 1/(2B).
    const double root_B = std::sqrt(B);
    return 1.0 / B +
           std::sqrt(2.0 * M_PI) * std::exp(0.5 / B) * norm_cdf(1.0 / root_B) / (B * root_B);
}

double stadje_equation(double alpha) {
    return alpha * alpha * alpha * norm_cdf(alpha) - (1.0 - alpha * alpha) * norm_pdf(alpha);
}

double stadje_alpha() {
    const auto bracket = RootBracket::make(stadje_equation, 0.1, 2.0);
    return find_root(stadje_equation, bracket, 1e-15);
}

}  // namespace stopbound
