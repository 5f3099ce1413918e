#include "stopbound/bounds.hpp"

#include "stopbound/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stopbound {

void BoundaryEnvelope::validate(double slack) const {
    lower.validate(slack);
    upper.validate(slack);
    if (lower.nodes != upper.nodes) throw std::invalid_argument("envelope grids use different nodes");
    for (std::size_t n = 0; n < lower.size(); ++n)
        if (lower.values[n] > upper.values[n] + slack) throw std::invalid_argument("envelope lower above upper");
}

double BoundsConfig::effective_t_max(const Problem& p) const {
    if (t_max > 0.0) return t_max;
    if (!(p.r > 0.0)) throw std::invalid_argument("t_max must be given when r = 0");
    return 50.0 / p.r;
}

std::vector<double> certification_cvalues(const CGrid& cgrid, const BoundsConfig& cfg) {
    std::vector<double> c = cgrid.values;
    if (c.empty()) throw std::invalid_argument("c grid is empty");
    if (cfg.c_extension > 1.0 && cfg.extension_points > 0) {
        const double top = c.back();
        for (int j = 1; j <= cfg.extension_points; ++j)
            c.push_back(top * std::pow(cfg.c_extension, static_cast<double>(j) / cfg.extension_points));
    }
    return c;
}

namespace {

void require_bounded(const Problem& p) {
    if (!p.bounded()) throw std::invalid_argument("bounds need a finite b_inf");
}

// Bisection for the switch point of a predicate that is false below and true
// above (or the reverse). Returns the bracket [lo, hi] with pred(lo) != pred(hi).
template <class Pred>
std::pair<double, double> bisect(Pred&& pred, double lo, double hi, double tol) {
    const bool at_lo = pred(lo);
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (pred(mid) == at_lo ? lo : hi) = mid;
    }
    return {lo, hi};
}

bool all_nonnegative(const KernelTable& table, std::span<const double> seg) {
    for (std::size_t l = 0; l < table.c_count(); ++l)
        if (table.residual(l, seg) < 0.0) return false;
    return true;
}

bool all_nonpositive(const KernelTable& table, std::span<const double> seg) {
    for (std::size_t l = 0; l < table.c_count(); ++l)
        if (table.residual(l, seg) > 0.0) return false;
    return true;
}

void make_lower_monotone(std::vector<double>& v) {
    // d is non-increasing, so d(y_n) >= d(y_{n+1}) >= lower_{n+1}.
    for (std::size_t n = v.size() - 1; n-- > 0;) v[n] = std::max(v[n], v[n + 1]);
}

void make_upper_monotone(std::vector<double>& v) {
    for (std::size_t n = 1; n < v.size(); ++n) v[n] = std::min(v[n], v[n - 1]);
}

}  // namespace

BoundaryGrid lower_step(const Problem& p, const BoundaryGrid& upper, const CGrid& cgrid, const BoundsConfig& cfg,
                        std::vector<bool>* truncated) {
    require_bounded(p);
    upper.validate(1e-12);
    const double t_max = cfg.effective_t_max(p);
    const KernelTable table(p, upper.nodes, certification_cvalues(cgrid, cfg));
    const std::size_t N = upper.size();
    const std::size_t S = N - 1;

    BoundaryGrid out{upper.nodes, std::vector<double>(N, 0.0)};
    std::vector<char> cut(N, 0);
    parallel_for(N - 1, cfg.threads, [&](std::size_t i) {
        const std::size_t k = i + 1;
        std::vector<double> seg(S);
        const auto admissible = [&](double t) {
            for (std::size_t n = 0; n < S; ++n) seg[n] = n < k ? upper.values[n] : std::min(t, upper.values[n]);
            return all_nonnegative(table, seg);
        };
        const double hi = upper.values[k];
        if (admissible(-t_max)) {
            out.values[k] = -t_max;
            cut[k] = 1;
        } else if (!admissible(hi)) {
            out.values[k] = hi;
        } else {
            // Keep the inadmissible end: it never exceeds the infimum.
            out.values[k] = bisect(admissible, -t_max, hi, cfg.tolerance).first;
        }
    });
    make_lower_monotone(out.values);
    for (std::size_t n = 0; n < N; ++n) out.values[n] = std::min(out.values[n], upper.values[n]);
    if (truncated) {
        truncated->assign(N, false);
        for (std::size_t n = 0; n < N; ++n) (*truncated)[n] = out.values[n] <= -t_max;
    }
    return out;
}

BoundaryGrid upper_step(const Problem& p, const BoundaryGrid& lower, const CGrid& cgrid, const BoundsConfig& cfg) {
    require_bounded(p);
    lower.validate(1e-12);
    const KernelTable table(p, lower.nodes, certification_cvalues(cgrid, cfg));
    const std::size_t N = lower.size();
    const std::size_t S = N - 1;

    BoundaryGrid out{lower.nodes, std::vector<double>(N, 0.0)};
    parallel_for(N - 1, cfg.threads, [&](std::size_t i) {
        const std::size_t k = i + 1;
        std::vector<double> seg(S);
        const auto admissible = [&](double t) {
            for (std::size_t n = 0; n < S; ++n) {
                const double floor = lower.values[n + 1];
                seg[n] = n < k ? std::max(t, floor) : floor;
            }
            return all_nonpositive(table, seg);
        };
        const double lo = lower.values[k];
        if (admissible(0.0)) {
            out.values[k] = 0.0;
        } else if (!admissible(lo)) {
            out.values[k] = lo;
        } else {
            // Keep the inadmissible end: it never falls below the supremum.
            out.values[k] = bisect(admissible, lo, 0.0, cfg.tolerance).second;
        }
    });
    make_upper_monotone(out.values);
    for (std::size_t n = 0; n < N; ++n) out.values[n] = std::max(out.values[n], lower.values[n]);
    return out;
}

BoundaryEnvelope initial_envelope(const Problem& p, const std::vector<double>& nodes, const CGrid& cgrid,
                                  const BoundsConfig& cfg) {
    BoundaryEnvelope env;
    env.upper = BoundaryGrid{nodes, std::vector<double>(nodes.size(), 0.0)};
    env.lower = lower_step(p, env.upper, cgrid, cfg, &env.truncated);
    env.iteration = 0;
    return env;
}

BoundaryEnvelope iterate(const Problem& p, const std::vector<double>& nodes, const CGrid& cgrid, int k,
                         const BoundsConfig& cfg, const std::function<void(const BoundaryEnvelope&)>& on_round) {
    if (k < 1) throw std::invalid_argument("iteration count must be at least 1");
    BoundaryEnvelope env = initial_envelope(p, nodes, cgrid, cfg);
    for (int round = 1; round <= k; ++round) {
        if (round > 1) {
            std::vector<bool> cut;
            auto lower = lower_step(p, env.upper, cgrid, cfg, &cut);
            for (std::size_t n = 0; n < nodes.size(); ++n) {
                if (lower.values[n] > env.lower.values[n]) {
                    env.lower.values[n] = lower.values[n];
                    env.truncated[n] = cut[n];
                }
            }
        }
        auto upper = upper_step(p, env.lower, cgrid, cfg);
        for (std::size_t n = 0; n < nodes.size(); ++n)
            env.upper.values[n] = std::min(env.upper.values[n], upper.values[n]);
        env.iteration = round;
        if (on_round) on_round(env);
    }
    return env;
}

}  // namespace stopbound
