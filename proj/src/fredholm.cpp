#include "stopbound/fredholm.hpp"

#include "stopbound/constants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace stopbound {

namespace {

QuadratureSpec weight_spec() {
    QuadratureSpec spec;
    spec.relative_tolerance = 1e-12;
    spec.absolute_tolerance = 1e-15;
    spec.max_subdivisions = 4000;
    return spec;
}

void require_admissible(const Problem& p, double c) {
    if (!(c > p.min_c())) {
        std::ostringstream msg;
        msg << "c = " << c << " is not above sqrt(2r) = " << p.min_c();
        throw std::invalid_argument(msg.str());
    }
}

}  // namespace

void BoundaryGrid::validate_nodes(std::span<const double> nodes) {
    if (nodes.size() < 2) throw std::invalid_argument("boundary grid needs at least two nodes");
    if (nodes.front() != 0.0) throw std::invalid_argument("first boundary node must be 0");
    for (std::size_t i = 1; i < nodes.size(); ++i)
        if (!(nodes[i] > nodes[i - 1])) throw std::invalid_argument("boundary nodes must be strictly increasing");
}

void BoundaryGrid::validate(double slack) const {
    validate_nodes(nodes);
    if (values.size() != nodes.size()) throw std::invalid_argument("boundary values and nodes differ in size");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] <= slack)) throw std::invalid_argument("boundary values must be non-positive");
        if (i > 0 && values[i] > values[i - 1] + slack)
            throw std::invalid_argument("boundary values must be non-increasing");
    }
}

void CGrid::validate(double min_c) const {
    if (values.empty()) throw std::invalid_argument("c grid is empty");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] > min_c)) throw std::invalid_argument("c grid values must exceed sqrt(2r)");
        if (i > 0 && !(values[i] > values[i - 1]))
            throw std::invalid_argument("c grid must be strictly increasing");
    }
}

std::vector<double> uniform_nodes(double b_inf, int count) {
    if (count < 2) throw std::invalid_argument("need at least two nodes");
    if (!(b_inf > 0.0) || !std::isfinite(b_inf)) throw std::invalid_argument("b_inf must be positive and finite");
    std::vector<double> nodes(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) nodes[static_cast<std::size_t>(k)] = b_inf * k / (count - 1);
    nodes.back() = b_inf;
    return nodes;
}

CGrid standard_cgrid(const Problem& p, int count) {
    if (count < 1) throw std::invalid_argument("need at least one c value");
    CGrid grid;
    for (int l = 1; l <= count; ++l) grid.values.push_back(p.min_c() + l / 10.0);
    return grid;
}

double penalty(double c, double x) {
    const double u = c * c * x;
    if (!(1.0 + u > 0.0)) return std::numeric_limits<double>::infinity();
    const double inner = u + 1.0 / (1.0 + u);
    return inner * inner;
}

std::vector<double> segment_weights(const Problem& p, std::span<const double> nodes, double c) {
    // Segment integrals are finite for any c; admissibility matters for the residual only.
    if (!std::isfinite(c)) throw std::invalid_argument("c must be finite");
    BoundaryGrid::validate_nodes(nodes);
    const auto spec = weight_spec();
    const auto integrand = [&](double y) { return std::exp(c * y) * p.h_tilde(y); };
    std::vector<double> weights(nodes.size() - 1);
    for (std::size_t n = 0; n + 1 < nodes.size(); ++n) {
        weights[n] = integrate_finite(integrand, nodes[n], nodes[n + 1], spec);
        const bool last = n + 2 == nodes.size();
        for (const auto& atom : p.atoms) {
            const bool inside = atom.location >= nodes[n] &&
                                (atom.location < nodes[n + 1] || (last && atom.location == nodes[n + 1]));
            if (inside) weights[n] += std::exp(c * atom.location) * atom.weight;
        }
    }
    return weights;
}

double residual(const Problem& p, const BoundaryGrid& grid, double c) {
    require_admissible(p, c);
    grid.validate(1e-12);
    const auto weights = segment_weights(p, grid.nodes, c);
    const double exponent = 0.5 * c * c - p.r;
    double total = p.laplace_h_tilde(c);
    for (std::size_t n = 0; n < weights.size(); ++n) total += std::exp(exponent * grid.values[n]) * weights[n];
    return total;
}

double residual_continuous(const Problem& p, const ScalarFunction& d, double c) {
    require_admissible(p, c);
    const double exponent = 0.5 * c * c - p.r;
    const auto integrand = [&](double y) { return std::exp(exponent * d(y) + c * y) * p.h_tilde(y); };
    double atoms = 0.0;
    for (const auto& atom : p.atoms)
        if (atom.location >= 0.0 && atom.location <= p.b_inf)
            atoms += std::exp(exponent * d(atom.location) + c * atom.location) * atom.weight;
    const auto spec = weight_spec();
    const double boundary_term = p.bounded()
                                     ? integrate_finite(integrand, 0.0, p.b_inf, spec)
                                     : integrate_semi_infinite(integrand, 0.0, Direction::PositiveInfinity, c, spec);
    return p.laplace_h_tilde(c) + boundary_term + atoms;
}

ResidualVector objective(const Problem& p, const BoundaryGrid& grid, const CGrid& cgrid) {
    cgrid.validate(p.min_c());
    grid.validate(1e-12);
    const KernelTable table(p, grid.nodes, cgrid.values);
    return table.evaluate(grid.values);
}

WeightCache::WeightCache(const Problem& p, std::vector<double> nodes) : problem_(p), nodes_(std::move(nodes)) {
    BoundaryGrid::validate_nodes(nodes_);
}

const std::vector<double>& WeightCache::weights(double c) {
    {
        std::lock_guard lock(mutex_);
        if (auto it = cache_.find(c); it != cache_.end()) return it->second;
    }
    auto computed = segment_weights(problem_, nodes_, c);
    std::lock_guard lock(mutex_);
    // std::map never invalidates references on insert.
    return cache_.try_emplace(c, std::move(computed)).first->second;
}

KernelTable::KernelTable(const Problem& p, std::vector<double> nodes, std::vector<double> cvalues)
    : nodes_(std::move(nodes)), c_(std::move(cvalues)) {
    BoundaryGrid::validate_nodes(nodes_);
    CGrid{c_}.validate(p.min_c());
    laplace_.resize(c_.size());
    exponent_.resize(c_.size());
    weights_.resize(c_.size() * segment_count());
    for (std::size_t l = 0; l < c_.size(); ++l) {
        laplace_[l] = p.laplace_h_tilde(c_[l]);
        exponent_[l] = 0.5 * c_[l] * c_[l] - p.r;
        const auto w = segment_weights(p, nodes_, c_[l]);
        std::copy(w.begin(), w.end(), weights_.begin() + static_cast<std::ptrdiff_t>(l * segment_count()));
    }
}

double KernelTable::residual(std::size_t l, std::span<const double> segment_values) const {
    const std::size_t segments = segment_count();
    const double* w = weights_.data() + l * segments;
    const double a = exponent_[l];
    double total = laplace_[l];
    for (std::size_t n = 0; n < segments; ++n) total += std::exp(a * segment_values[n]) * w[n];
    return total;
}

std::vector<double> KernelTable::residuals(std::span<const double> segment_values) const {
    if (segment_values.size() < segment_count()) throw std::invalid_argument("too few boundary values");
    std::vector<double> out(c_.size());
    for (std::size_t l = 0; l < c_.size(); ++l) out[l] = residual(l, segment_values);
    return out;
}

ResidualVector KernelTable::evaluate(std::span<const double> grid_values) const {
    ResidualVector result;
    result.c = c_;
    result.residual = residuals(grid_values);
    result.penalty.resize(c_.size());
    for (std::size_t l = 0; l < c_.size(); ++l) {
        result.penalty[l] = penalty(c_[l], result.residual[l]);
        result.objective += result.penalty[l];
    }
    return result;
}

double stadje_double_integral(double alpha, double c) {
    if (!(c > 0.0)) throw std::invalid_argument("c must be positive");
    QuadratureSpec spec;
    spec.relative_tolerance = 1e-11;
    // The inner integral changes sign at x = 1/c, so only an absolute target is reachable there.
    spec.absolute_tolerance = 1e-12;
    const auto inner = [&](double s) {
        const double upper = alpha * std::sqrt(-s);
        return integrate_semi_infinite([c](double x) { return -x * std::exp(c * x); }, upper,
                                       Direction::NegativeInfinity, c, spec);
    };
    return integrate_semi_infinite([&](double s) { return inner(s) * std::exp(0.5 * c * c * s); }, 0.0,
                                   Direction::NegativeInfinity, 0.25 * c * c, spec);
}

double stadje_closed_form_residual(double alpha, double c) {
    const double a3 = alpha * alpha * alpha;
    return 2.0 / (c * c * c * c) * ((1.0 - alpha * alpha) - a3 * norm_cdf(alpha) / norm_pdf(alpha));
}

double verify_closed_form(std::string_view label, std::span<const double> cvalues, std::optional<double> alpha) {
    if (label != "stadje")
        throw UnknownProblem("no closed-form boundary is known for '" + std::string(label) + "'");
    const double a = alpha.value_or(stadje_alpha());
    double worst = 0.0;
    for (double c : cvalues) worst = std::max(worst, std::abs(stadje_double_integral(a, c)));
    return worst;
}

}  // namespace stopbound
