#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace stopbound {

using ScalarFunction = std::function<double(double)>;

/// Maps (declared decay rate, envelope estimate, absolute tolerance) to the
/// length of the interval that is kept before truncating a semi-infinite
/// integral.
using CutoffPolicy = std::function<double(double decay_rate, double envelope, double abs_tol)>;

/// Default cutoff: keep L such that envelope * exp(-decay_rate * L) / decay_rate <= abs_tol.
double exponential_tail_cutoff(double decay_rate, double envelope, double abs_tol);

struct QuadratureSpec {
    double relative_tolerance = 1e-10;
    double absolute_tolerance = 1e-12;
    int max_subdivisions = 2000;
    CutoffPolicy semi_infinite_cutoff_policy = exponential_tail_cutoff;

    void validate() const;
};

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    int panels = 0;
};

/// Raised when adaptive subdivision runs out of panels before the requested
/// tolerance is met. Carries the best available estimate.
class ToleranceNotMet : public std::runtime_error {
public:
    ToleranceNotMet(double estimate, double error_bound, int panels);
    double estimate;
    double error_bound;
    int panels;
};

class InvalidDecay : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class BracketError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Globally adaptive Gauss-Kronrod (G10/K21) integration of f over [a, b].
/// Endpoints are never evaluated, so integrable endpoint singularities are fine.
QuadratureResult integrate_finite_detailed(const ScalarFunction& f, double a, double b,
                                           const QuadratureSpec& spec = {});

double integrate_finite(const ScalarFunction& f, double a, double b,
                        const QuadratureSpec& spec = {});

enum class Direction { PositiveInfinity, NegativeInfinity };

/// Integral of f from a towards +inf or -inf. The caller asserts that |f|
/// decays at least like exp(-decay_rate * |y - a|); the tail beyond the cutoff
/// chosen by spec.semi_infinite_cutoff_policy is dropped.
QuadratureResult integrate_semi_infinite_detailed(const ScalarFunction& f, double a,
                                                  Direction direction, double decay_rate,
                                                  const QuadratureSpec& spec = {});

double integrate_semi_infinite(const ScalarFunction& f, double a, Direction direction,
                               double decay_rate, const QuadratureSpec& spec = {});

double norm_cdf(double x);
double norm_pdf(double x);

struct RootBracket {
    double lo;
    double hi;
    double f_lo;
    double f_hi;

    /// Evaluates f at both ends. Throws BracketError if the signs agree.
    static RootBracket make(const ScalarFunction& f, double lo, double hi);
    void validate() const;
};

/// Bracketed root finding (TOMS 748). The result stays inside the bracket and
/// satisfies |f(x)| <= tol or lies in a final bracket of width <= tol.
double find_root(const ScalarFunction& f, const RootBracket& bracket, double tol = 1e-10);

}  // namespace stopbound
