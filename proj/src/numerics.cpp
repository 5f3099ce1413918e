#include "stopbound/numerics.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <sstream>
#include <vector>

namespace stopbound {

namespace {

using Kronrod = boost::math::quadrature::gauss_kronrod<double, 21>;
using Gauss = boost::math::quadrature::gauss<double, 10>;

struct Panel {
    double a;
    double b;
    double value;
    double error;
};

struct PanelOrder {
    bool operator()(const Panel& lhs, const Panel& rhs) const { return lhs.error < rhs.error; }
};

double checked(const ScalarFunction& f, double x) {
    const double y = f(x);
    if (!std::isfinite(y)) {
        std::ostringstream msg;
        msg << "integrand is not finite at x = " << x;
        throw std::domain_error(msg.str());
    }
    return y;
}

// One G10/K21 panel. Abscissae and weights come from Boost; the panel error
// is |K21 - G10| scaled to the panel width, floored at the rounding level.
Panel evaluate_panel(const ScalarFunction& f, double a, double b) {
    const auto& nodes = Kronrod::abscissa();
    const auto& kronrod_weights = Kronrod::weights();
    const auto& gauss_weights = Gauss::weights();
    const double mean = 0.5 * (a + b);
    const double half = 0.5 * (b - a);

    // 21 points: nodes[0] = 0 is a Kronrod-only node; odd indices are the
    // Gauss nodes of the embedded 10-point rule.
    const double centre = checked(f, mean);
    double kronrod = centre * kronrod_weights[0];
    double gauss = 0.0;
    double magnitude = std::abs(centre) * kronrod_weights[0];
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        const double fp = checked(f, mean + half * nodes[i]);
        const double fm = checked(f, mean - half * nodes[i]);
        kronrod += (fp + fm) * kronrod_weights[i];
        magnitude += (std::abs(fp) + std::abs(fm)) * kronrod_weights[i];
        if (i % 2 == 1) gauss += (fp + fm) * gauss_weights[i / 2];
    }
    const double value = half * kronrod;
    const double error = std::max(half * std::abs(kronrod - gauss),
                                  50.0 * std::numeric_limits<double>::epsilon() * half * magnitude);
    return {a, b, value, error};
}

}  // namespace

double exponential_tail_cutoff(double decay_rate, double envelope, double abs_tol) {
    const double floor_length = 1.0 / decay_rate;
    if (envelope <= 0.0) return floor_length;
    const double ratio = envelope / (decay_rate * abs_tol);
    if (ratio <= 1.0) return floor_length;
    return std::max(floor_length, std::log(ratio) / decay_rate);
}

void QuadratureSpec::validate() const {
    if (!(relative_tolerance > 0.0) || !(absolute_tolerance > 0.0))
        throw std::invalid_argument("quadrature tolerances must be strictly positive");
    if (max_subdivisions < 1) throw std::invalid_argument("max_subdivisions must be >= 1");
}

ToleranceNotMet::ToleranceNotMet(double estimate_, double error_bound_, int panels_)
    : std::runtime_error([&] {
          std::ostringstream msg;
          msg.precision(6);
          msg << "quadrature tolerance not met after " << panels_ << " panels: estimate "
              << estimate_ << ", error bound " << error_bound_;
          return msg.str();
      }()),
      estimate(estimate_),
      error_bound(error_bound_),
      panels(panels_) {}

QuadratureResult integrate_finite_detailed(const ScalarFunction& f, double a, double b,
                                           const QuadratureSpec& spec) {
    spec.validate();
    if (!(a <= b)) throw std::invalid_argument("integrate_finite requires a <= b");
    if (a == b) return {0.0, 0.0, 0};

    std::priority_queue<Panel, std::vector<Panel>, PanelOrder> queue;
    Panel first = evaluate_panel(f, a, b);
    double total = first.value;
    double total_error = first.error;
    queue.push(first);
    int panels = 1;

    const auto target = [&] {
        return std::max(spec.absolute_tolerance, spec.relative_tolerance * std::abs(total));
    };

    while (total_error > target()) {
        if (panels >= spec.max_subdivisions) throw ToleranceNotMet(total, total_error, panels);
        Panel worst = queue.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            // Panel cannot be split further in double precision.
            throw ToleranceNotMet(total, total_error, panels);
        }
        queue.pop();
        Panel left = evaluate_panel(f, worst.a, mid);
        Panel right = evaluate_panel(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        queue.push(left);
        queue.push(right);
        ++panels;
    }

    // Re-sum from the panels so the returned value does not carry the
    // cancellation error of the running updates.
    std::vector<Panel> all;
    all.reserve(queue.size());
    while (!queue.empty()) {
        all.push_back(queue.top());
        queue.pop();
    }
    std::sort(all.begin(), all.end(), [](const Panel& l, const Panel& r) { return l.a < r.a; });
    double value = 0.0;
    double error = 0.0;
    for (const auto& p : all) {
        value += p.value;
        error += p.error;
    }
    return {value, error, panels};
}

double integrate_finite(const ScalarFunction& f, double a, double b, const QuadratureSpec& spec) {
    return integrate_finite_detailed(f, a, b, spec).value;
}

QuadratureResult integrate_semi_infinite_detailed(const ScalarFunction& f, double a,
                                                  Direction direction, double decay_rate,
                                                  const QuadratureSpec& spec) {
    if (!(decay_rate > 0.0) || !std::isfinite(decay_rate))
        throw InvalidDecay("declared decay rate must be positive and finite");
    spec.validate();

    const double sign = direction == Direction::PositiveInfinity ? 1.0 : -1.0;
    // Envelope estimate for |f(a + s)| <= K exp(-decay_rate * s), sampled away
    // from the endpoint itself.
    double envelope = 0.0;
    for (int k = 1; k <= 16; ++k) {
        const double step = 0.5 * k;
        const double value = std::abs(f(a + sign * step / decay_rate));
        envelope = std::max(envelope, value * std::exp(step));
    }
    const double length = spec.semi_infinite_cutoff_policy(decay_rate, envelope,
                                                           spec.absolute_tolerance);
    if (direction == Direction::PositiveInfinity) return integrate_finite_detailed(f, a, a + length, spec);
    return integrate_finite_detailed(f, a - length, a, spec);
}

double integrate_semi_infinite(const ScalarFunction& f, double a, Direction direction,
                               double decay_rate, const QuadratureSpec& spec) {
    return integrate_semi_infinite_detailed(f, a, direction, decay_rate, spec).value;
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double norm_pdf(double x) {
    static const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * M_PI);
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

RootBracket RootBracket::make(const ScalarFunction& f, double lo, double hi) {
    RootBracket bracket{lo, hi, f(lo), f(hi)};
    bracket.validate();
    return bracket;
}

void RootBracket::validate() const {
    if (!(lo < hi)) throw BracketError("root bracket requires lo < hi");
    if (!std::isfinite(f_lo) || !std::isfinite(f_hi))
        throw BracketError("root bracket has non-finite end values");
    if (f_lo == 0.0 || f_hi == 0.0) return;
    if ((f_lo > 0.0) == (f_hi > 0.0)) {
        std::ostringstream msg;
        msg << "root not bracketed: f(" << lo << ") = " << f_lo << ", f(" << hi << ") = " << f_hi;
        throw BracketError(msg.str());
    }
}

double find_root(const ScalarFunction& f, const RootBracket& bracket, double tol) {
    bracket.validate();
    if (bracket.f_lo == 0.0) return bracket.lo;
    if (bracket.f_hi == 0.0) return bracket.hi;

    double best_x = bracket.lo;
    double best_f = std::abs(bracket.f_lo);
    if (std::abs(bracket.f_hi) < best_f) {
        best_x = bracket.hi;
        best_f = std::abs(bracket.f_hi);
    }
    const auto tracked = [&](double x) {
        const double y = f(x);
        if (std::abs(y) < best_f) {
            best_f = std::abs(y);
            best_x = x;
        }
        return y;
    };
    const auto done = [&](double lo, double hi) { return best_f <= tol || hi - lo <= tol; };

    std::uintmax_t max_iter = 500;
    const auto [lo, hi] = boost::math::tools::toms748_solve(tracked, bracket.lo, bracket.hi,
                                                             bracket.f_lo, bracket.f_hi, done,
                                                             max_iter);
    if (best_f <= tol) return best_x;
    return std::clamp(0.5 * (lo + hi), bracket.lo, bracket.hi);
}

}  // namespace stopbound
