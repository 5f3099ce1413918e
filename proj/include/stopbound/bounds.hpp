#pragma once

#include "stopbound/fredholm.hpp"

#include <functional>
#include <vector>

namespace stopbound {

struct BoundaryEnvelope {
    BoundaryGrid lower;
    BoundaryGrid upper;
    int iteration = 0;
    /// Nodes whose lower bound hit -t_max.
    std::vector<bool> truncated;

    void validate(double slack = 1e-9) const;
};

struct BoundsConfig {
    double t_max = 0.0;             // 0 means 50 / r
    double tolerance = 1e-6;        // bisection width in time units
    double c_extension = 4.0;       // extra c values up to c_M * c_extension
    int extension_points = 8;       // geometric spacing
    unsigned threads = 1;

    double effective_t_max(const Problem& p) const;
};

/// The c values actually tested: cgrid plus a geometric extension above c_M.
std::vector<double> certification_cvalues(const CGrid& cgrid, const BoundsConfig& cfg);

/// Lower bound at each node x: the least t such that the boundary
/// y -> upper(y) for y < x, min(t, upper(y)) for y >= x has residual >= 0
/// for every tested c. Segments take the left-node upper value.
BoundaryGrid lower_step(const Problem& p, const BoundaryGrid& upper, const CGrid& cgrid,
                        const BoundsConfig& cfg = {}, std::vector<bool>* truncated = nullptr);

/// Upper bound at each node x: the greatest t such that the boundary
/// y -> max(t, lower(y)) for y <= x, lower(y) beyond has residual <= 0 for
/// every tested c. Segments take the right-node lower value, which is the
/// smallest value the true boundary can take on the segment.
BoundaryGrid upper_step(const Problem& p, const BoundaryGrid& lower, const CGrid& cgrid,
                        const BoundsConfig& cfg = {});

/// upper = 0, lower = lower_step(upper).
BoundaryEnvelope initial_envelope(const Problem& p, const std::vector<double>& nodes, const CGrid& cgrid,
                                  const BoundsConfig& cfg = {});

/// k >= 1 rounds: round 1 is the initial envelope followed by an upper step,
/// each further round is a lower step then an upper step. Every round is
/// intersected with the previous one, so envelopes never widen.
BoundaryEnvelope iterate(const Problem& p, const std::vector<double>& nodes, const CGrid& cgrid, int k,
                         const BoundsConfig& cfg = {},
                         const std::function<void(const BoundaryEnvelope&)>& on_round = {});

}  // namespace stopbound
