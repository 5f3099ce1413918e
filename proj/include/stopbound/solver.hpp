#pragma once

#include "stopbound/bounds.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

namespace stopbound {

enum class SeedMode { Asymptotic, EnvelopeMidpoint, Custom };

struct SolverConfig {
    int max_iterations = 500;  // sweeps
    double value_tolerance = 1e-10;
    double coordinate_tolerance = 1e-7;
    SeedMode seed_mode = SeedMode::Asymptotic;
    std::optional<BoundaryGrid> custom_seed;
    int scan_points = 12;

    void validate() const;
};

struct SolveReport {
    BoundaryGrid grid;
    std::vector<double> trace;  // objective before the first sweep, then after each sweep
    ResidualVector residuals;
    int iterations = 0;
    bool converged = false;
};

class InsufficientData : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Starting grid inside the envelope, monotone, with d(0) = 0.
BoundaryGrid seed(const Problem& p, const BoundaryEnvelope& envelope, const SolverConfig& cfg = {});

/// Projected cyclic coordinate descent on the penalized objective. Node 1 is
/// pinned to 0 and node N (b_inf) is held at the envelope's lower value, so
/// the free coordinates are d_2 .. d_{N-1}. Each coordinate is minimized over
/// [max(lower_n, d_{n+1}), min(upper_n, d_{n-1})] by a scan followed by a
/// golden-section refinement and moved only on strict improvement.
SolveReport solve(const Problem& p, const CGrid& cgrid, const BoundaryEnvelope& envelope,
                  const SolverConfig& cfg = {});

struct AsymptoticFit {
    double B = 0.0;          // fitted, d ~ -B y^2
    double reference = 0.0;  // B_beta for the problem's local behaviour
    double relative_error = 0.0;
    int nodes_used = 0;
};

/// Least-squares fit of d_n = -B y_n^2 over the `count` smallest positive nodes.
AsymptoticFit asymptotic_check(const BoundaryGrid& grid, const Problem& p, int count = 8);

}  // namespace stopbound
