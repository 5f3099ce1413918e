#pragma once

#include "stopbound/problem.hpp"

#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace stopbound {

/// Boundary d sampled on nodes 0 = y_1 < ... < y_N = b_inf. d(y) is the last
/// time at which y is still in the continuation set, so values are
/// non-positive and non-increasing. On the segment [y_n, y_{n+1}) the
/// residual uses the left value d_n.
struct BoundaryGrid {
    std::vector<double> nodes;
    std::vector<double> values;

    std::size_t size() const { return nodes.size(); }
    /// Throws std::invalid_argument on broken invariants. Monotonicity of the
    /// values is checked up to `slack`.
    void validate(double slack = 0.0) const;
    /// Nodes only (strictly increasing, first node 0, at least two nodes).
    static void validate_nodes(std::span<const double> nodes);
};

struct CGrid {
    std::vector<double> values;

    void validate(double min_c) const;
};

struct ResidualVector {
    std::vector<double> c;
    std::vector<double> residual;
    std::vector<double> penalty;
    double objective = 0.0;
};

/// y_k = b_inf (k - 1) / (N - 1), k = 1..N
std::vector<double> uniform_nodes(double b_inf, int count);

/// c_l = sqrt(2r) + l / 10, l = 1..M
CGrid standard_cgrid(const Problem& p, int count);

/// F_c(x) = (c^2 x + 1 / (1 + c^2 x))^2, +inf where 1 + c^2 x <= 0.
/// F_c(x) >= 1 with equality exactly at x = 0.
double penalty(double c, double x);

/// w_n = int_{y_n}^{y_{n+1}} e^{cy} h_tilde(y) dy plus atoms in the segment.
std::vector<double> segment_weights(const Problem& p, std::span<const double> nodes, double c);

/// R(c; d) = L h_tilde(c) + sum_n e^{(c^2/2 - r) d_n} w_n
double residual(const Problem& p, const BoundaryGrid& grid, double c);

/// Residual for a boundary given as a function on [0, b_inf]. For problems
/// without a finite b_inf the integrand must decay at least like e^{-cy}.
double residual_continuous(const Problem& p, const ScalarFunction& d, double c);

ResidualVector objective(const Problem& p, const BoundaryGrid& grid, const CGrid& cgrid);

/// Thread-safe memo of segment weights for one problem and one node set.
class WeightCache {
public:
    WeightCache(const Problem& p, std::vector<double> nodes);

    const std::vector<double>& weights(double c);
    std::span<const double> nodes() const { return nodes_; }

private:
    const Problem& problem_;
    std::vector<double> nodes_;
    std::mutex mutex_;
    std::map<double, std::vector<double>> cache_;
};

/// Precomputed transforms, exponents and segment weights for a fixed node
/// set and c set. Immutable after construction, so concurrent evaluation is
/// safe. Residual evaluation is O(N M) multiply-adds.
class KernelTable {
public:
    KernelTable(const Problem& p, std::vector<double> nodes, std::vector<double> cvalues);

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t segment_count() const { return nodes_.size() - 1; }
    std::size_t c_count() const { return c_.size(); }
    std::span<const double> nodes() const { return nodes_; }
    std::span<const double> cvalues() const { return c_; }
    double c(std::size_t l) const { return c_[l]; }
    double laplace(std::size_t l) const { return laplace_[l]; }
    /// c_l^2 / 2 - r
    double exponent(std::size_t l) const { return exponent_[l]; }
    double weight(std::size_t l, std::size_t n) const { return weights_[l * segment_count() + n]; }

    /// Residual for c_l with per-segment boundary values (segment n uses
    /// segment_values[n]; extra trailing entries are ignored).
    double residual(std::size_t l, std::span<const double> segment_values) const;
    std::vector<double> residuals(std::span<const double> segment_values) const;
    ResidualVector evaluate(std::span<const double> grid_values) const;

private:
    std::vector<double> nodes_;
    std::vector<double> c_;
    std::vector<double> laplace_;
    std::vector<double> exponent_;
    std::vector<double> weights_;
};

/// Iterated-quadrature value of
///   int_{-inf}^0 int_{-inf}^{alpha sqrt(-s)} (-x) e^{cx + c^2 s / 2} dx ds,
/// the Fredholm residual of the square-root boundary for h_tilde(x) = -x, r = 0.
double stadje_double_integral(double alpha, double c);

/// Closed form of the same integral: (2/c^4) ((1 - alpha^2) - alpha^3 Phi(alpha)/phi(alpha)).
double stadje_closed_form_residual(double alpha, double c);

/// Max |residual| over cvalues for a problem with a known closed-form
/// boundary. Supported label: stadje (alpha defaults to stadje_alpha()).
double verify_closed_form(std::string_view label, std::span<const double> cvalues,
                          std::optional<double> alpha = std::nullopt);

}  // namespace stopbound
