#include "stopbound/oracle.hpp"

#include "stopbound/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace stopbound {

namespace {

// Probabilists' Gauss-Hermite rule, exact for polynomials of degree <= 9.
constexpr std::array<double, 5> kHermiteNodes{-2.856970013872806, -1.355626179974266, 0.0, 1.355626179974266,
                                              2.856970013872806};
constexpr std::array<double, 5> kHermiteWeights{0.011257411327721, 0.222075922005613, 0.533333333333333,
                                                0.222075922005613, 0.011257411327721};

// -zeta(1/2) / sqrt(2 pi)
constexpr double kBermudanGap = 0.5825971579390106;

std::size_t reflect(long idx, long n) {
    const long period = 2 * (n - 1);
    idx %= period;
    if (idx < 0) idx += period;
    if (idx >= n) idx = period - idx;
    return static_cast<std::size_t>(idx);
}

// Stencil for E[U(y_i + shift + sqrt(dt) Z)] on a uniform grid: the same
// relative offsets and weights apply to every i.
struct Stencil {
    std::vector<long> offset;
    std::vector<double> weight;
};

Stencil make_stencil(double shift, double sdt, double dy) {
    Stencil s;
    for (std::size_t j = 0; j < kHermiteNodes.size(); ++j) {
        const double pos = (shift + sdt * kHermiteNodes[j]) / dy;
        const double base = std::floor(pos);
        const double f = pos - base;
        // cubic Lagrange on base-1 .. base+2
        const std::array<double, 4> L{-f * (f - 1) * (f - 2) / 6.0, (f + 1) * (f - 1) * (f - 2) / 2.0,
                                      -(f + 1) * f * (f - 2) / 2.0, (f + 1) * f * (f - 1) / 6.0};
        for (int m = 0; m < 4; ++m) {
            s.offset.push_back(static_cast<long>(base) - 1 + m);
            s.weight.push_back(kHermiteWeights[j] * L[static_cast<std::size_t>(m)]);
        }
    }
    return s;
}

DPGrid induct(const ScalarFunction& payoff, double r, const DPConfig& cfg) {
    cfg.validate();
    DPGrid g;
    g.r = r;
    const std::size_t K = static_cast<std::size_t>(cfg.t_steps);
    const std::size_t n = static_cast<std::size_t>(cfg.x_steps) + 1;
    g.t.resize(K + 1);
    for (std::size_t k = 0; k <= K; ++k) g.t[k] = cfg.t_min * static_cast<double>(K - k) / static_cast<double>(K);
    g.y.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        g.y[i] = cfg.x_min + (cfg.x_max - cfg.x_min) * static_cast<double>(i) / static_cast<double>(n - 1);

    const double dt = g.dt();
    const double dy = g.dy();
    if (dy > std::sqrt(dt))
        throw ResolutionError("space step exceeds sqrt(dt); the one-step expectation would be interpolation noise");

    std::vector<double> h(n);
    for (std::size_t i = 0; i < n; ++i) h[i] = payoff(g.y[i]);

    const Stencil st = make_stencil(cfg.drift * dt, std::sqrt(dt), dy);
    const double discount = std::exp(-r * dt);
    std::size_t start = 0;  // last grid index with y <= 0
    while (start + 1 < n && g.y[start + 1] <= 0.0) ++start;

    // U_k = exp(r t_k) V_k satisfies U_k = max(h, exp(-r dt) E[U_{k+1}]).
    std::vector<double> U = h, cont(n);
    g.value.assign((K + 1) * n, 0.0);
    g.boundary.assign(K + 1, 0.0);
    g.raw_boundary.assign(K + 1, 0.0);
    std::copy(U.begin(), U.end(), g.value.begin() + static_cast<std::ptrdiff_t>(K * n));
    for (std::size_t k = K; k-- > 0;) {
        for (std::size_t i = 0; i < n; ++i) {
            double e = 0.0;
            for (std::size_t s = 0; s < st.offset.size(); ++s)
                e += st.weight[s] * U[reflect(static_cast<long>(i) + st.offset[s], static_cast<long>(n))];
            cont[i] = discount * e;
        }
        double b = g.y.back();
        for (std::size_t i = start + 1; i < n; ++i) {
            const double gap = h[i] - cont[i];
            if (gap > 0.0) {
                const double prev = h[i - 1] - cont[i - 1];
                b = prev > 0.0 ? g.y[i - 1] : g.y[i - 1] + dy * (-prev) / (gap - prev);
                break;
            }
        }
        g.raw_boundary[k] = b;
        g.boundary[k] = cfg.continuity_correction ? std::min(b + kBermudanGap * std::sqrt(dt), g.y.back()) : b;
        const double scale = std::exp(-r * g.t[k]);
        for (std::size_t i = 0; i < n; ++i) {
            U[i] = std::max(h[i], cont[i]);
            g.value[k * n + i] = scale * U[i];
        }
    }
    return g;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

void DPConfig::validate() const {
    if (t_steps < 16 || x_steps < 16) throw ResolutionError("grid resolutions must be at least 16");
    if (!(t_min < 0.0)) throw std::invalid_argument("t_min must be negative");
    if (!(x_min < 0.0 && x_max > 0.0)) throw std::invalid_argument("space grid must straddle 0");
}

double DPGrid::value_at(double time, double position) const {
    if (time < t.front() || time > t.back() || position < y.front() || position > y.back()) {
        std::ostringstream msg;
        msg << "(" << time << ", " << position << ") outside the DP grid";
        throw OutOfGrid(msg.str());
    }
    const double fk = std::min((time - t.front()) / dt(), static_cast<double>(t.size() - 1) - 1e-12);
    const double fi = std::min((position - y.front()) / dy(), static_cast<double>(y.size() - 1) - 1e-12);
    const auto k = static_cast<std::size_t>(fk);
    const auto i = static_cast<std::size_t>(fi);
    const double a = fk - static_cast<double>(k);
    const double b = fi - static_cast<double>(i);
    return (1 - a) * ((1 - b) * at(k, i) + b * at(k, i + 1)) + a * ((1 - b) * at(k + 1, i) + b * at(k + 1, i + 1));
}

DPGrid backward_induction(const Problem& p, const DPConfig& cfg) {
    if (!p.has_payoff()) throw std::invalid_argument("problem '" + p.label + "' has no payoff for the DP oracle");
    return induct(p.payoff, p.r, cfg);
}

DPGrid backward_induction(const DriftedProblem& p, const DPConfig& cfg) {
    DPConfig c = cfg;
    c.drift = p.mu;
    return induct(p.h, p.r, c);
}

DPConfig default_dp_config(const Problem& p, double t_min, int t_steps, int x_steps, double reach) {
    DPConfig cfg;
    cfg.t_min = t_min;
    cfg.t_steps = t_steps;
    cfg.x_steps = x_steps;
    const double spread = 4.0 * std::sqrt(-t_min);
    cfg.x_min = -spread;
    cfg.x_max = (p.bounded() ? p.b_inf : reach) + spread;
    return cfg;
}

ExtractedBoundary extract_d(const DPGrid& grid, const std::vector<double>& nodes) {
    const std::size_t K = grid.t.size() - 1;
    // The continuation region only grows backwards in time; remove DP noise.
    std::vector<double> b = grid.boundary;
    b[K] = 0.0;
    for (std::size_t k = K; k-- > 0;) b[k] = std::max(b[k], b[k + 1]);

    ExtractedBoundary out;
    out.grid.nodes = nodes;
    out.grid.values.assign(nodes.size(), 0.0);
    out.truncated.assign(nodes.size(), false);
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        const double y = nodes[j];
        if (y < grid.y.front() || y > grid.y.back()) throw OutOfGrid("node outside the DP space grid");
        if (y <= 0.0) continue;
        if (b[0] <= y) {
            out.grid.values[j] = grid.t.front();
            out.truncated[j] = true;
            continue;
        }
        // b[k] > y for k <= k_star
        std::size_t k_star = 0;
        while (k_star + 1 <= K && b[k_star + 1] > y) ++k_star;
        const double span = b[k_star] - b[k_star + 1];
        out.grid.values[j] = std::min(0.0, grid.t[k_star] + grid.dt() * (b[k_star] - y) / span);
    }
    return out;
}

MCReport mc_value(const Problem& p, double t0, double y0, const BoundaryGrid& boundary, const MCConfig& cfg) {
    if (!p.has_payoff()) throw std::invalid_argument("problem has no payoff");
    if (cfg.paths < 1000) throw std::invalid_argument("at least 1000 paths are required");
    if (!(t0 <= 0.0)) throw std::invalid_argument("t0 must be <= 0");
    if (cfg.steps < 1) throw std::invalid_argument("need at least one time step");
    BoundaryGrid::validate_nodes(boundary.nodes);

    const auto& nodes = boundary.nodes;
    const auto& values = boundary.values;
    const auto d = [&](double y) {
        if (y <= nodes.front()) return 0.0;
        if (y > nodes.back()) return -std::numeric_limits<double>::infinity();
        const auto it = std::upper_bound(nodes.begin(), nodes.end(), y);
        const auto i = static_cast<std::size_t>(it - nodes.begin());
        if (i >= nodes.size()) return values.back();
        const double w = (y - nodes[i - 1]) / (nodes[i] - nodes[i - 1]);
        return (1 - w) * values[i - 1] + w * values[i];
    };
    const double dt = -t0 / cfg.steps;
    const double sdt = std::sqrt(dt);

    std::vector<double> result(cfg.paths);
    parallel_for(cfg.paths, cfg.threads, [&](std::size_t path) {
        std::mt19937_64 rng(splitmix64(cfg.seed ^ splitmix64(path)));
        std::normal_distribution<double> z;
        double t = t0, y = y0;
        for (int s = 0; s < cfg.steps && t < d(y); ++s) {
            y += sdt * z(rng);
            t = s + 1 == cfg.steps ? 0.0 : t0 + (s + 1) * dt;
        }
        result[path] = std::exp(-p.r * t) * p.payoff(y);
    });

    // Shifted sums keep a constant sample exact.
    const double shift = result.front();
    double sum = 0.0;
    for (double v : result) sum += v - shift;
    const double mean = shift + sum / static_cast<double>(cfg.paths);
    double var = 0.0;
    for (double v : result) var += (v - shift) * (v - shift);
    var -= sum * sum / static_cast<double>(cfg.paths);
    var = std::max(var, 0.0);
    var /= static_cast<double>(cfg.paths - 1);
    return {mean, std::sqrt(var / static_cast<double>(cfg.paths)), cfg.paths, cfg.seed};
}

}  // namespace stopbound
