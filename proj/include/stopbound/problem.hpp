#pragma once

#include "stopbound/numerics.hpp"

#include <filesystem>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stopbound {

/// Point mass of the generator payoff, for payoffs that satisfy the
/// generator relation only weakly (a kink in h gives an atom in h'').
struct Atom {
    double location;
    double weight;
};

/// One-dimensional, one-sided discounted stopping problem
///
///     V(t, y) = sup_{t <= tau <= 0} E[exp(-r tau) h(W_tau)]
///
/// written in the normalized frame where the initial continuation set is
/// (-inf, 0) and the continuation set is {y < b(t)}. `h_tilde` is
/// r h - h''/2; the residual machinery needs only h_tilde, its Laplace
/// transform over (-inf, 0) and b_inf. The payoff itself is optional and is
/// used by the dynamic-programming oracle.
///
/// Original coordinates are x = shift + orientation * y.
struct Problem {
    std::string label;
    double r = 1.0;
    ScalarFunction h_tilde;
    std::vector<Atom> atoms;
    /// c -> int_{-inf}^0 e^{cy} h_tilde(y) dy, including atoms at y < 0.
    ScalarFunction laplace_h_tilde;
    ScalarFunction payoff;
    double b_inf = std::numeric_limits<double>::infinity();
    double beta = 1.0;
    double m_ratio = 1.0;
    double shift = 0.0;
    double orientation = 1.0;

    double min_c() const;
    bool bounded() const;
    bool has_payoff() const;
    double to_original(double y) const;
    double to_normalized(double x) const;
    /// h_tilde expressed in original coordinates.
    double original_h_tilde(double x) const;
};

/// Problem with a drifted driver X_t = W_t + mu t.
struct DriftedProblem {
    double mu = 0.0;
    double r = 0.0;
    ScalarFunction h;
};

struct LocalBehaviour {
    double beta;
    double m_ratio;
};

struct PutParameters {
    double rho = 1.0;    // r / sigma^2
    double theta = 0.5;  // r / q, below 1 when dividends exceed the interest rate
};

class UnknownProblem : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class UnsupportedRegime : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ProblemFileError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// h(y) = y: h_tilde = r y, b_inf = 1/sqrt(2r).
Problem linear_problem(double r = 1.0);

/// h = x^3/3 with r = 0, mirrored (x = -y) so that h_tilde(y) = y in the
/// normalized frame; the boundary is alpha * sqrt(-t) with no finite b_inf.
Problem stadje_problem();

/// Canonical American put with dividends, after the log-moneyness translate
/// and drift removal.
Problem american_put_problem(const PutParameters& params);

/// labels: linear, stadje, american_put
Problem builtin(std::string_view label, const PutParameters& put = {});

/// Girsanov transform to a standard Brownian driver:
/// h'(y) = exp(mu y) h(y), r' = r + mu^2 / 2.
/// The transformed value satisfies V(t, x) = exp(-mu x + mu^2 t / 2) V'(t, x).
Problem remove_drift(const DriftedProblem& drifted);

/// Declared local power and side-coefficient ratio of h_tilde at 0.
LocalBehaviour h_tilde_local(const Problem& p);

/// Multiplies h_tilde, its transform, the atoms and the payoff by k > 0.
Problem scaled(const Problem& p, double k);

/// int_{-inf}^0 e^{cy} h_tilde(y) dy by quadrature, plus atoms at y < 0.
double numeric_laplace(const Problem& p, double c);

/// Smooth-fit boundary of the perpetual problem: root of
/// h'(b) = sqrt(2 r) h(b) in [lo, hi], derivative by central differences.
double perpetual_boundary(const ScalarFunction& payoff, double r, double lo, double hi);

/// Parses the flat key=value problem definition format.
Problem parse_problem_definition(std::string_view text);
Problem load_problem_file(const std::filesystem::path& path);

}  // namespace stopbound
