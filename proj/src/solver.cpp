#include "stopbound/solver.hpp"

#include "stopbound/constants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stopbound {

void SolverConfig::validate() const {
    if (max_iterations < 1) throw std::invalid_argument("max_iterations must be positive");
    if (!(value_tolerance > 0.0) || !(coordinate_tolerance > 0.0))
        throw std::invalid_argument("solver tolerances must be positive");
    if (scan_points < 3) throw std::invalid_argument("scan_points must be at least 3");
    if (seed_mode == SeedMode::Custom && !custom_seed) throw std::invalid_argument("custom seed mode needs a grid");
}

BoundaryGrid seed(const Problem& p, const BoundaryEnvelope& envelope, const SolverConfig& cfg) {
    const auto& nodes = envelope.lower.nodes;
    BoundaryGrid g{nodes, std::vector<double>(nodes.size(), 0.0)};
    switch (cfg.seed_mode) {
        case SeedMode::Asymptotic: {
            const double B = solve_B(p.beta, p.m_ratio).B;
            for (std::size_t n = 0; n < nodes.size(); ++n) g.values[n] = -B * nodes[n] * nodes[n];
            break;
        }
        case SeedMode::EnvelopeMidpoint:
            for (std::size_t n = 0; n < nodes.size(); ++n)
                g.values[n] = 0.5 * (envelope.lower.values[n] + envelope.upper.values[n]);
            break;
        case SeedMode::Custom:
            if (!cfg.custom_seed || cfg.custom_seed->nodes != nodes)
                throw std::invalid_argument("custom seed must use the envelope nodes");
            g.values = cfg.custom_seed->values;
            break;
    }
    for (std::size_t n = 0; n < nodes.size(); ++n)
        g.values[n] = std::clamp(g.values[n], envelope.lower.values[n], envelope.upper.values[n]);
    g.values[0] = 0.0;
    for (std::size_t n = 1; n < nodes.size(); ++n) g.values[n] = std::min(g.values[n], g.values[n - 1]);
    g.values.back() = envelope.lower.values.back();
    return g;
}

namespace {

// Objective bookkeeping with residuals updated in O(M) per trial move.
class IncrementalObjective {
public:
    IncrementalObjective(const KernelTable& table, std::vector<double> values)
        : table_(table), values_(std::move(values)) {
        refresh();
    }

    void refresh() {
        residual_ = table_.residuals(values_);
        total_ = 0.0;
        for (std::size_t l = 0; l < residual_.size(); ++l) total_ += penalty(table_.c(l), residual_[l]);
    }

    double total() const { return total_; }
    const std::vector<double>& values() const { return values_; }

    double trial(std::size_t n, double v) const {
        const double old = values_[n];
        double sum = 0.0;
        for (std::size_t l = 0; l < residual_.size(); ++l) {
            const double a = table_.exponent(l);
            const double r = residual_[l] + (std::exp(a * v) - std::exp(a * old)) * table_.weight(l, n);
            sum += penalty(table_.c(l), r);
        }
        return sum;
    }

    void move(std::size_t n, double v, double new_total) {
        const double old = values_[n];
        for (std::size_t l = 0; l < residual_.size(); ++l) {
            const double a = table_.exponent(l);
            residual_[l] += (std::exp(a * v) - std::exp(a * old)) * table_.weight(l, n);
        }
        values_[n] = v;
        total_ = new_total;
    }

private:
    const KernelTable& table_;
    std::vector<double> values_;
    std::vector<double> residual_;
    double total_ = 0.0;
};

struct Candidate {
    double x;
    double f;
};

// Minimizes f over [lo, hi]: scan, then golden section around the best scan point.
Candidate minimize_1d(const std::function<double(double)>& f, double lo, double hi, double current, int scan,
                      double tol) {
    std::vector<Candidate> pts;
    pts.push_back({current, f(current)});
    for (int i = 0; i < scan; ++i) {
        const double x = lo + (hi - lo) * i / (scan - 1);
        pts.push_back({x, f(x)});
    }
    // Fine probes near the current value, where the optimum usually sits once
    // the sweep has settled.
    const double unit = std::max(tol, 1e-4 * std::max(1.0, std::abs(current)));
    for (int j = 0; j < 12; ++j)
        for (double sign : {-1.0, 1.0}) {
            const double x = current + sign * unit * std::ldexp(1.0, j);
            if (x > lo && x < hi) pts.push_back({x, f(x)});
        }
    std::sort(pts.begin(), pts.end(), [](const Candidate& a, const Candidate& b) { return a.x < b.x; });
    std::size_t best = 0;
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (pts[i].f < pts[best].f) best = i;

    double a = pts[best > 0 ? best - 1 : 0].x;
    double b = pts[best + 1 < pts.size() ? best + 1 : best].x;
    Candidate result = pts[best];
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - invphi * (b - a), x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        }
    }
    for (const Candidate c : {Candidate{x1, f1}, Candidate{x2, f2}})
        if (c.f < result.f) result = c;
    return result;
}

}  // namespace

SolveReport solve(const Problem& p, const CGrid& cgrid, const BoundaryEnvelope& envelope, const SolverConfig& cfg) {
    cfg.validate();
    envelope.validate();
    cgrid.validate(p.min_c());
    const auto& nodes = envelope.lower.nodes;
    const std::size_t N = nodes.size();
    const KernelTable table(p, nodes, cgrid.values);
    IncrementalObjective obj(table, seed(p, envelope, cfg).values);

    SolveReport report;
    report.trace.push_back(obj.total());
    const auto& lower = envelope.lower.values;
    const auto& upper = envelope.upper.values;

    for (int sweep = 1; sweep <= cfg.max_iterations; ++sweep) {
        const double before = obj.total();
        double largest_move = 0.0;
        for (std::size_t n = 1; n + 1 < N; ++n) {
            const auto& v = obj.values();
            const double lo = std::max(lower[n], v[n + 1]);
            const double hi = std::min(upper[n], v[n - 1]);
            if (!(hi > lo)) continue;
            const double current = v[n];
            const auto f = [&](double x) { return obj.trial(n, x); };
            const Candidate best =
                minimize_1d(f, lo, hi, current, cfg.scan_points, 0.1 * cfg.coordinate_tolerance);
            if (best.f < obj.total()) {
                largest_move = std::max(largest_move, std::abs(best.x - current));
                obj.move(n, best.x, best.f);
            }
        }
        obj.refresh();
        report.trace.push_back(obj.total());
        report.iterations = sweep;
        if (largest_move < cfg.coordinate_tolerance || before - obj.total() < cfg.value_tolerance) {
            report.converged = true;
            break;
        }
    }
    report.grid = BoundaryGrid{nodes, obj.values()};
    report.residuals = table.evaluate(report.grid.values);
    return report;
}

AsymptoticFit asymptotic_check(const BoundaryGrid& grid, const Problem& p, int count) {
    double num = 0.0, den = 0.0;
    int used = 0;
    for (std::size_t n = 0; n < grid.size() && used < count; ++n) {
        const double y = grid.nodes[n];
        if (!(y > 0.0)) continue;
        num += grid.values[n] * y * y;
        den += y * y * y * y;
        ++used;
    }
    if (used < 3) throw InsufficientData("asymptotic fit needs at least 3 positive nodes");
    AsymptoticFit fit;
    fit.B = -num / den;
    fit.reference = solve_B(p.beta, p.m_ratio).B;
    fit.relative_error = std::abs(fit.B - fit.reference) / fit.reference;
    fit.nodes_used = used;
    return fit;
}

}  // namespace stopbound
