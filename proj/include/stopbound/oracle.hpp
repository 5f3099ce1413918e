#pragma once

#include "stopbound/fredholm.hpp"

#include <cstdint>
#include <vector>

namespace stopbound {

struct DPConfig {
    double t_min = -1.0;
    double x_min = -4.0;
    double x_max = 4.0;
    int t_steps = 400;
    int x_steps = 800;
    double drift = 0.0;  // mu for a driver W_t + mu t; 0 for standard problems
    /// Shift the extracted boundary outwards by 0.5826 sqrt(dt), the leading
    /// gap between Bermudan and continuous exercise boundaries.
    bool continuity_correction = true;

    void validate() const;
};

/// Bermudan backward induction on a space-time grid in the normalized frame.
/// V(t, y) = sup E[exp(-r tau) h(y + W_{tau - t} + mu (tau - t))], tau in [t, 0],
/// discounted to time 0 as in the representation.
struct DPGrid {
    std::vector<double> t;         // t_0 = t_min < ... < t_K = 0
    std::vector<double> y;         // uniform space grid
    std::vector<double> value;     // row-major, value[k * y.size() + i]
    std::vector<double> boundary;  // b(t_k): first y >= 0 where stopping beats continuing
    std::vector<double> raw_boundary;  // same before the continuity correction
    double r = 0.0;

    double dt() const { return t[1] - t[0]; }
    double dy() const { return y[1] - y[0]; }
    double at(std::size_t k, std::size_t i) const { return value[k * y.size() + i]; }
    /// Bilinear interpolation of V.
    double value_at(double time, double position) const;
};

class ResolutionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class OutOfGrid : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Requires p.payoff. The expectation over one step uses 5-point
/// Gauss-Hermite weights with cubic interpolation in space; the space grid
/// is reflected at its ends.
DPGrid backward_induction(const Problem& p, const DPConfig& cfg);

/// Same for a drifted problem (no drift removal).
DPGrid backward_induction(const DriftedProblem& p, const DPConfig& cfg);

/// Space-time box that covers [-4 sqrt|T|, b + 4 sqrt|T|] with the given
/// resolution; b is b_inf, or `reach` for unbounded problems.
DPConfig default_dp_config(const Problem& p, double t_min, int t_steps, int x_steps, double reach = 2.0);

struct ExtractedBoundary {
    BoundaryGrid grid;
    std::vector<bool> truncated;  // y never in the continuation region after t_min
};

/// d(y) = last time at which y is in the continuation region, linear in time
/// between slices. y = 0 maps to 0; nodes beyond b(t_min) map to t_min.
ExtractedBoundary extract_d(const DPGrid& grid, const std::vector<double>& nodes);

struct MCReport {
    double estimate = 0.0;
    double stderr_ = 0.0;
    std::uint64_t paths = 0;
    std::uint64_t seed = 0;
};

struct MCConfig {
    std::uint64_t paths = 10000;
    std::uint64_t seed = 1;
    int steps = 500;  // Euler steps over [t0, 0]
    unsigned threads = 1;
};

/// Value of the stopping rule "stop once t >= d(y)" started at (t0, y0),
/// with d linear between nodes, 0 left of the first node and -inf right of the
/// last one. Payoff is discounted by exp(-r tau). Each path draws from its
/// own generator seeded from (seed, path index), so the result does not
/// depend on the thread count.
MCReport mc_value(const Problem& p, double t0, double y0, const BoundaryGrid& boundary, const MCConfig& cfg);

}  // namespace stopbound
