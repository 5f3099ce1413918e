// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include "stopbound/cli.hpp"
#include "stopbound/constants.hpp"
#include "stopbound/oracle.hpp"
#include "stopbound/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace stopbound;
namespace fs = std::filesystem;

namespace {

const fs::path work = fs::temp_directory_path() / "stopbound_acceptance";

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

int cli_run(std::vector<std::string> args) {
    args.insert(args.begin(), "stopbound");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    if (code == cli::UsageError) std::cerr << err.str();
    return code;
}

std::vector<std::vector<double>> read_csv(const fs::path& file) {
    std::ifstream in(file);
    std::string line;
    std::getline(in, line);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::istringstream fields(line);
        for (std::string f; std::getline(fields, f, ',');) row.push_back(std::stod(f));
        rows.push_back(row);
    }
    return rows;
}

BoundaryGrid read_boundary(const fs::path& file) {
    BoundaryGrid g;
    for (const auto& row : read_csv(file)) {
        g.nodes.push_back(row.at(0));
        g.values.push_back(row.at(1));
    }
    return g;
}

double sup_interior_gap(const BoundaryGrid& a, const BoundaryGrid& b) {
    double gap = 0.0;
    for (std::size_t n = 1; n + 1 < a.size(); ++n) gap = std::max(gap, std::abs(a.values[n] - b.values[n]));
    return gap;
}

int failures = 0;

void criterion(int id, const char* title, double limit_seconds, const std::function<void(Outcome&)>& body) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
        body(o);
    } catch (const std::exception& e) {
        o.require(false, std::string("exception: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (seconds > limit_seconds) {
        std::ostringstream what;
        what << "runtime " << seconds << " s over " << limit_seconds << " s";
        o.require(false, what.str());
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << id << ". " << title << " (" << std::fixed
              << std::setprecision(2) << seconds << " s)" << std::defaultfloat << std::setprecision(6)
              << o.detail.str() << std::endl;
}

}  // namespace

int main() {
    fs::remove_all(work);
    fs::create_directories(work);

    criterion(1, "universal constant B_1", 1.0, [](Outcome& o) {
        const auto dir = work / "constants";
        o.require(cli_run({"constants", "--beta", "1", "--out-dir", dir.string()}) == 0, "exit code");
        const auto rows = read_csv(dir / "constants.csv");
        const double B = rows.at(0).at(2);
        const double residual = rows.at(0).at(4);
        o.detail << " B=" << std::setprecision(8) << B << " identity residual=" << residual;
        o.require(std::abs(B - 2.4503) <= 1e-3, "B within 1e-3 of 2.4503");
        o.require(std::abs(residual) <= 1e-8, "identity residual <= 1e-8");
    });

    criterion(2, "constant table", 5.0, [](Outcome& o) {
        const std::vector<std::pair<double, double>> table{{0.0, 3.9084}, {0.5, 3.0133}, {2.0, 1.7814}, {3.0, 1.3984}};
        std::vector<double> all;
        for (double beta : {0.0, 0.5, 1.0, 2.0, 3.0}) all.push_back(solve_B(beta).B);
        for (const auto& [beta, expected] : table) {
            const double B = solve_B(beta).B;
            o.detail << " B(" << beta << ")=" << std::setprecision(6) << B;
            std::ostringstream what;
            what << "B(" << beta << ") within 1e-3 of " << expected;
            o.require(std::abs(B - expected) <= 1e-3, what.str());
        }
        for (std::size_t i = 1; i < all.size(); ++i) o.require(all[i] < all[i - 1], "strictly decreasing in beta");
    });

    criterion(3, "cross-identity alpha_1 = 1/sqrt(B_1)", 1.0, [](Outcome& o) {
        const double a = stadje_alpha();
        const double gap = std::abs(a - 1.0 / std::sqrt(solve_B(1.0).B));
        o.detail << " alpha=" << std::setprecision(8) << a << " gap=" << gap;
        o.require(std::abs(a - 0.638833) <= 5e-6, "alpha ~ 0.638833");
        o.require(gap <= 1e-4, "gap <= 1e-4");
    });

    criterion(4, "closed-form residual (verify --problem stadje)", 30.0, [](Outcome& o) {
        const auto dir = work / "stadje";
        o.require(cli_run({"verify", "--problem", "stadje", "--out-dir", dir.string()}) == 0, "exit code");
        std::ifstream table(dir / "verify.csv");
        int checks = 0;
        std::string line;
        for (std::getline(table, line); std::getline(table, line); ++checks)
            o.require(!line.empty() && line.back() == '1', "verify row: " + line);
        o.require(checks == 4, "four verify checks");
        const double at_alpha = verify_closed_form("stadje", std::vector<double>{1.0, 2.0, 4.0});
        const double wrong = std::abs(stadje_closed_form_residual(0.9, 1.0));
        const double below = stadje_double_integral(stadje_alpha() - 0.05, 1.0);
        const double above = stadje_double_integral(stadje_alpha() + 0.05, 1.0);
        o.detail << " max|R|=" << at_alpha << " |R(0.9)|=" << wrong;
        o.require(at_alpha <= 1e-5, "max residual <= 1e-5");
        o.require(wrong >= 1e-2, "wrong alpha rejected");
        o.require(below * above < 0.0, "sign change across alpha_1");
    });

    // Shared by criteria 5 to 7.
    const Problem linear = builtin("linear");
    const auto linear_dir = work / "linear";
    int solve_code = -1;

    criterion(5, "linear boundary reproduction (solve --problem linear)", 300.0, [&](Outcome& o) {
        solve_code = cli_run({"solve", "--problem", "linear", "--nodes", "60", "--cvals", "40", "--out-dir",
                              linear_dir.string()});
        o.require(solve_code == 0 || solve_code == 2, "solve ran");
        const auto grid = read_boundary(linear_dir / "boundary.csv");
        const double objective = read_csv(linear_dir / "trace.csv").back().at(1);
        const auto fit = asymptotic_check(grid, linear, 5);
        o.detail << " objective=" << std::setprecision(10) << objective << " sweeps-converged=" << (solve_code == 0)
                 << std::setprecision(6) << " B_fit=" << fit.B;
        o.require(objective <= 40.0 * 1.01, "objective within 1% of 40");
        o.require(grid.values.front() == 0.0, "d(0) = 0");
        bool monotone = true;
        for (std::size_t n = 1; n < grid.size(); ++n) monotone = monotone && grid.values[n] <= grid.values[n - 1];
        o.require(monotone, "monotone");
        o.require(std::abs(fit.B - 2.4503) <= 0.25 * 2.4503, "fit within 25% of B_1");
    });

    BoundaryGrid oracle_d;
    double oracle_dt = 0.0;
    criterion(6, "oracle agreement (linear)", 600.0, [&](Outcome& o) {
        const auto grid = backward_induction(linear, default_dp_config(linear, -10.0, 2000, 2000));
        oracle_dt = grid.dt();
        const auto solved = read_boundary(linear_dir / "boundary.csv");
        oracle_d = extract_d(grid, solved.nodes).grid;
        const double gap = sup_interior_gap(solved, oracle_d);
        const double limit = std::abs(grid.boundary.front() - std::sqrt(0.5));
        o.detail << " sup gap=" << gap << " (3 dt=" << 3.0 * oracle_dt << ") |b(T_min)-b_inf|=" << limit;
        o.require(gap <= 3.0 * oracle_dt, "sup gap within 3 time steps");
        o.require(limit <= 0.02, "b(T_min) within 0.02 of sqrt(1/2)");
    });

    criterion(7, "envelope validity (bounds --iterations 3)", 300.0, [&](Outcome& o) {
        const auto dir = work / "bounds";
        o.require(cli_run({"bounds", "--iterations", "3", "--out-dir", dir.string()}) == 0, "exit code");
        const auto rows = read_csv(dir / "envelope.csv");
        const std::size_t N = oracle_d.size();
        o.require(N > 0 && rows.size() == 3 * N, "three blocks on the oracle node grid");
        int outside = 0;
        bool shrinking = true;
        for (std::size_t round = 0; round < 3; ++round)
            for (std::size_t n = 0; n < N; ++n) {
                const auto& row = rows[round * N + n];
                if (n > 0 && n + 1 < N && (row[1] > oracle_d.values[n] + oracle_dt ||
                                           row[2] < oracle_d.values[n] - oracle_dt))
                    ++outside;
                if (round > 0) {
                    const auto& prev = rows[(round - 1) * N + n];
                    shrinking = shrinking && row[2] - row[1] <= prev[2] - prev[1] + 1e-12;
                }
            }
        o.detail << " nodes outside envelope=" << outside;
        o.require(outside == 0, "lower <= d <= upper");
        o.require(shrinking, "widths non-increasing");
    });

    criterion(8, "property suite", 120.0, [&](Outcome& o) {
        std::mt19937_64 rng(20240601);
        std::uniform_real_distribution<double> cdist(0.1, 10.0), xdist(-0.5, 5.0);
        int bad = 0;
        for (int i = 0; i < 1000; ++i) {
            const double c = cdist(rng);
            const double x = xdist(rng);
            const double f = penalty(c, x);
            if (!(f > 1.0) && x != 0.0) ++bad;
            if (penalty(c, 0.0) != 1.0) ++bad;
        }
        o.require(bad == 0, "penalty >= 1 with equality only at 0");

        // Residual moves with the sign of each segment weight.
        const auto nodes = uniform_nodes(linear.b_inf, 20);
        const auto cg = standard_cgrid(linear, 6);
        const KernelTable table(linear, nodes, cg.values);
        std::vector<double> d(nodes.size());
        for (std::size_t n = 0; n < d.size(); ++n) d[n] = -3.0 * nodes[n] * nodes[n];
        int wrong_sign = 0;
        for (std::size_t l = 0; l < cg.values.size(); ++l)
            for (std::size_t n = 0; n + 1 < nodes.size(); ++n) {
                auto bumped = d;
                bumped[n] += 1e-4;
                const double change = table.residual(l, bumped) - table.residual(l, d);
                if (change * table.weight(l, n) < 0.0) ++wrong_sign;
            }
        o.require(wrong_sign == 0, "residual monotone in each d_n");

        // Discrete residual converges to the continuous one as nodes are added.
        const auto smooth = [](double y) { return -2.0 * y * y; };
        const double exact = residual_continuous(linear, smooth, 2.0);
        double previous = INFINITY;
        for (int N : {20, 40, 80, 160}) {
            BoundaryGrid g;
            g.nodes = uniform_nodes(linear.b_inf, N);
            for (double y : g.nodes) g.values.push_back(smooth(y));
            const double err = std::abs(residual(linear, g, 2.0) - exact);
            o.require(err < previous, "quadrature self-convergence");
            previous = err;
        }

        // Determinism across thread counts and repeated runs.
        const auto stadje = builtin("stadje");
        const auto sgrid = backward_induction(stadje, default_dp_config(stadje, -1.0, 200, 400));
        const auto sd = extract_d(sgrid, uniform_nodes(sgrid.boundary.front(), 30)).grid;
        MCConfig one;
        one.paths = 4000;
        one.seed = 11;
        MCConfig many = one;
        many.threads = 4;
        const auto a = mc_value(stadje, -1.0, 0.0, sd, one);
        const auto b = mc_value(stadje, -1.0, 0.0, sd, many);
        o.require(a.estimate == b.estimate && a.stderr_ == b.stderr_, "MC thread determinism");

        const auto small = uniform_nodes(linear.b_inf, 16);
        const auto scg = standard_cgrid(linear, 12);
        BoundsConfig t1, t3;
        t3.threads = 3;
        const auto e1 = iterate(linear, small, scg, 2, t1);
        const auto e3 = iterate(linear, small, scg, 2, t3);
        SolverConfig sc;
        sc.max_iterations = 60;
        const auto s1 = solve(linear, scg, e1, sc);
        const auto s3 = solve(linear, scg, e3, sc);
        o.require(s1.grid.values == s3.grid.values && s1.trace == s3.trace, "solve determinism");
    });

    criterion(9, "American put (rho = 1, theta = 0.5)", 600.0, [&](Outcome& o) {
        const auto dir = work / "put";
        const int code = cli_run({"solve", "--problem", "american_put", "--rho", "1", "--theta", "0.5", "--out-dir",
                                  dir.string()});
        o.require(code == 0 || code == 2, "solve ran");
        const Problem put = american_put_problem({1.0, 0.5});
        const auto grid = read_boundary(dir / "boundary.csv");
        const double root = put.to_original(grid.nodes.front());
        o.require(std::abs(root - std::log(0.5)) <= 1e-12 && grid.values.front() == 0.0, "root at log(r/q)");

        const auto fit = asymptotic_check(grid, put, 5);
        o.detail << " B_fit=" << fit.B << " (B_1=" << fit.reference << ")";
        o.require(fit.relative_error <= 0.35, "fit within 35% of B_1");

        const auto dp = backward_induction(put, default_dp_config(put, -10.0, 2000, 2000));
        const auto od = extract_d(dp, grid.nodes).grid;
        const double gap = sup_interior_gap(grid, od);
        o.detail << " oracle gap=" << gap << " (3 dt=" << 3.0 * dp.dt() << ")";
        o.require(gap <= 3.0 * dp.dt(), "oracle within 3 time steps");

        const auto nodes = uniform_nodes(put.b_inf, 60);
        const auto cg = standard_cgrid(put, 40);
        const auto env = iterate(put, nodes, cg, 2, BoundsConfig{});
        SolverConfig mid;
        mid.seed_mode = SeedMode::EnvelopeMidpoint;
        const auto a = solve(put, cg, env);
        const auto b = solve(put, cg, env, mid);
        double spread = 0.0;
        for (std::size_t n = 0; n < nodes.size(); ++n)
            spread = std::max(spread, std::abs(a.grid.values[n] - b.grid.values[n]));
        o.detail << " multi-start spread=" << spread;
        o.require(spread <= 10.0 * mid.coordinate_tolerance, "multi-start agreement");
    });

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
