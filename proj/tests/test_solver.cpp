#include "doctest.h"

#include "stopbound/constants.hpp"
#include "stopbound/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

using namespace stopbound;

namespace {

BoundaryEnvelope open_envelope(const std::vector<double>& nodes) {
    BoundaryEnvelope env;
    env.lower = BoundaryGrid{nodes, std::vector<double>(nodes.size(), -100.0)};
    env.lower.values[0] = 0.0;
    env.upper = BoundaryGrid{nodes, std::vector<double>(nodes.size(), 0.0)};
    env.truncated.assign(nodes.size(), false);
    return env;
}

struct LinearRun {
    Problem p = builtin("linear");
    std::vector<double> nodes = uniform_nodes(p.b_inf, 60);
    CGrid cg = standard_cgrid(p, 40);
    BoundaryEnvelope env = iterate(p, nodes, cg, 2);
};

const LinearRun& linear_run() {
    static const LinearRun run;
    return run;
}

}  // namespace

TEST_CASE("asymptotic seed") {
    const auto p = builtin("linear");
    const std::vector<double> nodes{0.0, 0.1, 0.2, 0.5};
    const auto env = open_envelope(nodes);
    const auto s = seed(p, env);
    CHECK(s.values[0] == 0.0);
    CHECK(s.values[1] == doctest::Approx(-0.0245).epsilon(1e-3));
    CHECK(s.values[2] == doctest::Approx(-solve_B(1.0).B * 0.04));
    // the last node is held at the lower envelope
    CHECK(s.values[3] == -100.0);

    SUBCASE("clamped into a tight envelope and projected") {
        auto tight = env;
        tight.lower.values = {0.0, -0.01, -0.2, -1.0};
        tight.upper.values = {0.0, -0.005, -0.15, -0.3};
        const auto c = seed(p, tight);
        CHECK(c.values[1] == -0.01);
        CHECK(c.values[2] == -0.15);
        CHECK(c.values[3] == -1.0);
    }
    SUBCASE("midpoint") {
        SolverConfig cfg;
        cfg.seed_mode = SeedMode::EnvelopeMidpoint;
        auto e = env;
        e.lower.values = {0.0, -0.2, -0.4, -0.6};
        const auto m = seed(p, e, cfg);
        CHECK(m.values[1] == doctest::Approx(-0.1));
        CHECK(m.values[2] == doctest::Approx(-0.2));
    }
    SUBCASE("custom seed must match the nodes") {
        SolverConfig cfg;
        cfg.seed_mode = SeedMode::Custom;
        cfg.custom_seed = BoundaryGrid{{0.0, 1.0}, {0.0, -1.0}};
        CHECK_THROWS_AS(seed(p, env, cfg), std::invalid_argument);
    }
}

TEST_CASE("solving the linear problem") {
    const auto& run = linear_run();
    const auto report = solve(run.p, run.cg, run.env);
    const auto& d = report.grid.values;
    REQUIRE(d.size() == 60);
    CHECK(d[0] == 0.0);
    CHECK(report.trace.back() <= 40.0 * 1.01);
    CHECK(report.trace.back() >= 40.0);
    CHECK(report.residuals.objective == doctest::Approx(report.trace.back()).epsilon(1e-12));
    for (std::size_t n = 1; n < d.size(); ++n) {
        CHECK(d[n] <= d[n - 1]);
        CHECK(d[n] >= run.env.lower.values[n]);
        CHECK(d[n] <= run.env.upper.values[n]);
    }
    for (std::size_t k = 1; k < report.trace.size(); ++k) CHECK(report.trace[k] <= report.trace[k - 1] + 1e-12);
    // the boundary runs off to -infinity at b_inf
    CHECK(d[58] <= -1.0 / run.p.r);

    SUBCASE("deterministic") {
        const auto again = solve(run.p, run.cg, run.env);
        CHECK(again.grid.values == d);
        CHECK(again.trace == report.trace);
    }
}

TEST_CASE("a single free node matches a brute-force scan") {
    const auto p = builtin("linear");
    const std::vector<double> nodes{0.0, 0.4, p.b_inf};
    const auto cg = standard_cgrid(p, 10);
    const auto env = iterate(p, nodes, cg, 1);
    const auto report = solve(p, cg, env);
    const double lo = std::max(env.lower.values[1], env.lower.values[2]);
    const double hi = env.upper.values[1];
    REQUIRE(hi > lo);
    const KernelTable table(p, nodes, cg.values);
    double best_x = hi, best_f = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 10000; ++i) {
        const double x = lo + (hi - lo) * i / 10000.0;
        const double f = table.evaluate(std::vector<double>{0.0, x, env.lower.values[2]}).objective;
        if (f < best_f) {
            best_f = f;
            best_x = x;
        }
    }
    CHECK(report.trace.back() <= best_f + 1e-12);
    CHECK(std::abs(report.grid.values[1] - best_x) <= (hi - lo) / 10000.0 + 1e-7);
}

TEST_CASE("asymptotic fit") {
    const auto p = builtin("linear");
    const auto nodes = uniform_nodes(p.b_inf, 20);
    BoundaryGrid g{nodes, {}};
    for (double y : nodes) g.values.push_back(-2.0 * y * y);
    CHECK(std::abs(asymptotic_check(g, p).B - 2.0) <= 1e-10);

    const double a1 = stadje_alpha();
    for (std::size_t n = 0; n < nodes.size(); ++n) g.values[n] = -nodes[n] * nodes[n] / (a1 * a1);
    const auto fit = asymptotic_check(g, p, 5);
    CHECK(fit.B == doctest::Approx(2.4503).epsilon(1e-4));
    CHECK(fit.reference == doctest::Approx(2.4503).epsilon(1e-4));
    CHECK(fit.relative_error < 1e-4);
    CHECK(fit.nodes_used == 5);

    BoundaryGrid tiny{{0.0, 0.1, 0.2}, {0.0, -0.01, -0.04}};
    CHECK_THROWS_AS(asymptotic_check(tiny, p), InsufficientData);
}

TEST_CASE("configuration checks") {
    SolverConfig cfg;
    cfg.max_iterations = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.value_tolerance = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.seed_mode = SeedMode::Custom;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("scaling the generator leaves the boundary unchanged") {
    const auto& run = linear_run();
    const auto scaled_problem = scaled(run.p, 7.0);
    const SolverConfig cfg;
    const auto a = solve(run.p, run.cg, run.env, cfg);
    const auto b = solve(scaled_problem, run.cg, iterate(scaled_problem, run.nodes, run.cg, 2), cfg);
    double gap = 0.0;
    for (std::size_t n = 0; n < run.nodes.size(); ++n)
        gap = std::max(gap, std::abs(a.grid.values[n] - b.grid.values[n]));
    MESSAGE("objective difference " << b.trace.back() - a.trace.back() << ", boundary gap " << gap);
    CHECK(gap <= 10.0 * cfg.coordinate_tolerance);
}

TEST_CASE("asymptotic and midpoint seeds reach the same boundary") {
    const auto& run = linear_run();
    SolverConfig mid;
    mid.seed_mode = SeedMode::EnvelopeMidpoint;
    const auto a = solve(run.p, run.cg, run.env);
    const auto b = solve(run.p, run.cg, run.env, mid);
    double gap = 0.0;
    for (std::size_t n = 0; n < run.nodes.size(); ++n)
        gap = std::max(gap, std::abs(a.grid.values[n] - b.grid.values[n]));
    MESSAGE("objectives " << a.trace.back() << " and " << b.trace.back() << ", boundary gap " << gap);
    CHECK(gap <= 10.0 * mid.coordinate_tolerance);
}
