#include "stopbound/cli.hpp"

#include "stopbound/bounds.hpp"
#include "stopbound/constants.hpp"
#include "stopbound/oracle.hpp"
#include "stopbound/solver.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#ifndef STOPBOUND_VERSION
#define STOPBOUND_VERSION "0.0.0"
#endif

namespace stopbound::cli {

const char* version() { return STOPBOUND_VERSION; }

namespace {

namespace fs = std::filesystem;

struct Options {
    std::string problem = "linear";
    std::string problem_file;
    std::string out_dir = ".";
    int nodes = 60;
    int cvals = 40;
    double t_min = -10.0;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    double tolerance = 1e-7;
    double rho = 1.0;
    double theta = 0.5;
    int iterations = 2;
    std::vector<double> betas;
    double m_ratio = 1.0;
    int t_steps = 2000;
    int x_steps = 2000;
    int sweeps = 500;
    std::uint64_t paths = 0;
    std::string boundary_file;
};

class UsageProblem : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// CSV with a header row, '.' decimals and round-trip precision.
class CsvWriter {
public:
    CsvWriter(const fs::path& path, std::initializer_list<const char*> header) : path_(path), file_(path) {
        if (!file_) throw UsageProblem("cannot write '" + path.string() + "'");
        file_.imbue(std::locale::classic());
        file_ << std::setprecision(std::numeric_limits<double>::max_digits10);
        bool first = true;
        for (const char* h : header) {
            file_ << (first ? "" : ",") << h;
            first = false;
        }
        file_ << '\n';
    }

    template <class... T>
    void row(const T&... values) {
        bool first = true;
        ((file_ << (first ? "" : ",") << values, first = false), ...);
        file_ << '\n';
    }

private:
    fs::path path_;
    std::ofstream file_;
};

Problem load_problem(const Options& o) {
    if (!o.problem_file.empty()) return load_problem_file(o.problem_file);
    return builtin(o.problem, PutParameters{o.rho, o.theta});
}

fs::path prepare_out_dir(const Options& o) {
    fs::path dir(o.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw UsageProblem("cannot create output directory '" + dir.string() + "': " + ec.message());
    return dir;
}

void write_manifest(const fs::path& dir, const CLI::App& app, const std::string& command) {
    std::ofstream file(dir / "manifest.cfg");
    if (!file) throw UsageProblem("cannot write manifest in '" + dir.string() + "'");
    file << "# stopbound " << version() << " " << command << "\n";
    file << "# rerun: stopbound " << command << " --config " << (dir / "manifest.cfg").string() << "\n";
    file << "# fixed tolerances: quadrature rel 1e-12, envelope bisection 1e-6, solver value tolerance 1e-10\n";
    file << app.config_to_str(true, false);
}

struct Setup {
    Problem problem;
    std::vector<double> nodes;
    CGrid cgrid;
};

Setup make_setup(const Options& o) {
    if (o.nodes < 2) throw UsageProblem("--nodes must be at least 2");
    if (o.cvals < 1) throw UsageProblem("--cvals must be at least 1");
    Setup s{load_problem(o), {}, {}};
    if (!s.problem.bounded()) throw UsageProblem("problem '" + s.problem.label + "' has no finite b_inf");
    s.nodes = uniform_nodes(s.problem.b_inf, o.nodes);
    s.cgrid = standard_cgrid(s.problem, o.cvals);
    return s;
}

BoundsConfig bounds_config(const Options& o) {
    BoundsConfig cfg;
    cfg.threads = o.threads;
    return cfg;
}

SolverConfig solver_config(const Options& o) {
    SolverConfig cfg;
    cfg.max_iterations = o.sweeps;
    cfg.coordinate_tolerance = o.tolerance;
    return cfg;
}

DPConfig dp_config(const Options& o, const Problem& p) {
    if (!(o.t_min < 0.0)) throw UsageProblem("--t-min must be negative");
    return default_dp_config(p, o.t_min, o.t_steps, o.x_steps);
}

void write_boundary(const fs::path& dir, const BoundaryGrid& d, const BoundaryEnvelope& env) {
    CsvWriter csv(dir / "boundary.csv", {"y", "d", "d_lower", "d_upper"});
    for (std::size_t n = 0; n < d.size(); ++n)
        csv.row(d.nodes[n], d.values[n], env.lower.values[n], env.upper.values[n]);
}

void write_residuals(const fs::path& dir, const ResidualVector& rv) {
    CsvWriter csv(dir / "residuals.csv", {"c", "residual", "penalty"});
    for (std::size_t l = 0; l < rv.c.size(); ++l) csv.row(rv.c[l], rv.residual[l], rv.penalty[l]);
}

void write_plot(const fs::path& dir, const Problem& p, const BoundaryGrid& d, const BoundaryEnvelope& env, double B) {
    std::ofstream data(dir / "boundary_plot.dat");
    data << std::setprecision(12);
    data << "# y x_original d d_lower d_upper reference(-B*y^2) B=" << B << "\n";
    double lowest = 0.0;
    for (std::size_t n = 0; n < d.size(); ++n) {
        const double y = d.nodes[n];
        data << y << ' ' << p.to_original(y) << ' ' << d.values[n] << ' ' << env.lower.values[n] << ' '
             << env.upper.values[n] << ' ' << -B * y * y << '\n';
        if (n + 1 < d.size()) lowest = std::min(lowest, d.values[n]);
    }
    std::ofstream script(dir / "boundary.gp");
    script << "# gnuplot boundary.gp  (run inside the output directory)\n"
           << "set terminal pngcairo size 900,600\n"
           << "set output 'boundary.png'\n"
           << "set xlabel 'y'\n"
           << "set ylabel 'd(y)'\n"
           << "set key bottom left\n"
           << "set yrange [" << 1.25 * lowest << ":0.05]\n"
           << "plot 'boundary_plot.dat' using 1:3 with linespoints pt 7 ps 0.5 title 'solved d', \\\n"
           << "     '' using 1:4 with lines dt 2 title 'lower bound', \\\n"
           << "     '' using 1:5 with lines dt 2 title 'upper bound', \\\n"
           << "     '' using 1:6 with lines title sprintf('-B y^2, B = %.4f', " << B << ")\n";
}

std::ostream& fixed(std::ostream& os, int digits) { return os << std::fixed << std::setprecision(digits); }

// --- subcommands ---------------------------------------------------------

int cmd_constants(const Options& o, const CLI::App& app, bool write_csv, std::ostream& out) {
    std::vector<double> betas = o.betas;
    if (betas.empty()) betas = {0.0, 0.5, 1.0, 2.0, 3.0};
    std::vector<AsymptoticConstant> rows;
    for (double beta : betas) {
        if (!(beta >= 0.0)) throw UsageProblem("--beta must be >= 0");
        rows.push_back(solve_B(beta, o.m_ratio));
    }
    out << "beta      m_ratio   B           alpha       identity_residual\n";
    for (const auto& c : rows) {
        out << std::left << std::setw(10) << c.beta << std::setw(10) << c.m_ratio;
        fixed(out, 8) << std::setw(12) << c.B << std::setw(12) << c.alpha;
        out << std::scientific << std::setprecision(3) << c.identity_residual << std::defaultfloat << '\n';
    }
    if (write_csv) {
        const auto dir = prepare_out_dir(o);
        CsvWriter csv(dir / "constants.csv", {"beta", "m_ratio", "B", "alpha", "identity_residual"});
        for (const auto& c : rows) csv.row(c.beta, c.m_ratio, c.B, c.alpha, c.identity_residual);
        write_manifest(dir, app, "constants");
    }
    return Success;
}

int cmd_solve(const Options& o, const CLI::App& app, std::ostream& out) {
    const auto s = make_setup(o);
    const auto dir = prepare_out_dir(o);
    const auto env = iterate(s.problem, s.nodes, s.cgrid, o.iterations, bounds_config(o));
    const auto report = solve(s.problem, s.cgrid, env, solver_config(o));

    write_boundary(dir, report.grid, env);
    {
        CsvWriter csv(dir / "trace.csv", {"sweep", "objective"});
        for (std::size_t k = 0; k < report.trace.size(); ++k) csv.row(k, report.trace[k]);
    }
    write_residuals(dir, report.residuals);
    const double B = solve_B(s.problem.beta, s.problem.m_ratio).B;
    write_plot(dir, s.problem, report.grid, env, B);
    write_manifest(dir, app, "solve");

    out << "problem " << s.problem.label << ": N=" << s.nodes.size() << " M=" << s.cgrid.values.size()
        << " b_inf=" << s.problem.b_inf << " shift=" << s.problem.shift << "\n";
    out << "sweeps " << report.iterations << (report.converged ? " (converged)" : " (NOT converged)")
        << ", objective " << std::setprecision(10) << report.trace.back() << " (floor " << s.cgrid.values.size()
        << ")\n";
    try {
        const auto fit = asymptotic_check(report.grid, s.problem, 5);
        out << "asymptotic fit over 5 nodes: B=" << std::setprecision(6) << fit.B << " reference " << fit.reference
            << " relative error " << fit.relative_error << "\n";
    } catch (const InsufficientData& e) {
        out << "asymptotic fit skipped: " << e.what() << "\n";
    }
    out << "y x d\n" << std::setprecision(8);
    for (std::size_t n = 0; n < s.nodes.size(); ++n)
        out << s.nodes[n] << ' ' << s.problem.to_original(s.nodes[n]) << ' ' << report.grid.values[n] << '\n';
    out << "wrote " << (dir / "boundary.csv").string() << "\n";
    return report.converged ? Success : NotConverged;
}

int cmd_bounds(const Options& o, const CLI::App& app, std::ostream& out) {
    if (o.iterations < 1) throw UsageProblem("--iterations must be at least 1");
    const auto s = make_setup(o);
    const auto dir = prepare_out_dir(o);
    CsvWriter csv(dir / "envelope.csv", {"y", "d_lower", "d_upper", "iteration"});
    out << "iteration max_width mid_width\n";
    iterate(s.problem, s.nodes, s.cgrid, o.iterations, bounds_config(o), [&](const BoundaryEnvelope& e) {
        double widest = 0.0;
        for (std::size_t n = 0; n < e.lower.size(); ++n) {
            csv.row(e.lower.nodes[n], e.lower.values[n], e.upper.values[n], e.iteration);
            if (n + 1 < e.lower.size()) widest = std::max(widest, e.upper.values[n] - e.lower.values[n]);
        }
        const std::size_t mid = e.lower.size() / 2;
        out << e.iteration << ' ' << widest << ' ' << e.upper.values[mid] - e.lower.values[mid] << '\n';
    });
    write_manifest(dir, app, "bounds");
    return Success;
}

int cmd_oracle(const Options& o, const CLI::App& app, std::ostream& out) {
    const Problem p = load_problem(o);
    const auto dir = prepare_out_dir(o);
    const auto grid = backward_induction(p, dp_config(o, p));
    {
        CsvWriter csv(dir / "oracle_boundary.csv", {"t", "b"});
        for (std::size_t k = 0; k < grid.t.size(); ++k) csv.row(grid.t[k], grid.boundary[k]);
    }
    const double reach = p.bounded() ? p.b_inf : grid.boundary.front();
    const auto nodes = uniform_nodes(reach, std::max(o.nodes, 2));
    const auto d = extract_d(grid, nodes);
    {
        CsvWriter csv(dir / "oracle_d.csv", {"y", "d"});
        for (std::size_t n = 0; n < nodes.size(); ++n) csv.row(nodes[n], d.grid.values[n]);
    }
    out << "problem " << p.label << ": t_min=" << o.t_min << " dt=" << grid.dt() << " dy=" << grid.dy() << "\n";
    out << "b(t_min)=" << std::setprecision(8) << grid.boundary.front()
        << " (original x=" << p.to_original(grid.boundary.front()) << ")";
    if (p.bounded()) out << ", b_inf=" << p.b_inf;
    out << "\n";
    if (o.paths > 0) {
        MCConfig mc;
        mc.paths = o.paths;
        mc.seed = o.seed;
        mc.threads = o.threads;
        const double t0 = std::max(o.t_min, -1.0);
        const auto r = mc_value(p, t0, 0.0, d.grid, mc);
        CsvWriter csv(dir / "mc.csv", {"estimate", "stderr", "paths", "seed"});
        csv.row(r.estimate, r.stderr_, r.paths, r.seed);
        out << "mc value at (t=" << t0 << ", y=0): " << r.estimate << " +- " << r.stderr_ << ", DP "
            << grid.value_at(t0, 0.0) << "\n";
    }
    write_manifest(dir, app, "oracle");
    return Success;
}

std::vector<std::pair<double, double>> read_boundary_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageProblem("cannot open boundary file '" + path + "'");
    std::string line;
    std::getline(in, line);
    std::vector<std::pair<double, double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string y, d;
        if (!std::getline(fields, y, ',') || !std::getline(fields, d, ','))
            throw UsageProblem("boundary file '" + path + "': expected y,d columns");
        try {
            rows.emplace_back(std::stod(y), std::stod(d));
        } catch (const std::exception&) {
            throw UsageProblem("boundary file '" + path + "': bad number in '" + line + "'");
        }
    }
    return rows;
}

int cmd_residuals(const Options& o, const CLI::App& app, std::ostream& out) {
    const Problem p = load_problem(o);
    if (o.cvals < 1) throw UsageProblem("--cvals must be at least 1");
    const auto cgrid = standard_cgrid(p, o.cvals);
    BoundaryGrid grid;
    if (!o.boundary_file.empty()) {
        for (const auto& [y, d] : read_boundary_csv(o.boundary_file)) {
            grid.nodes.push_back(y);
            grid.values.push_back(d);
        }
    } else {
        if (!p.bounded()) throw UsageProblem("problem has no finite b_inf; pass --boundary-file");
        grid.nodes = uniform_nodes(p.b_inf, o.nodes);
        const double B = solve_B(p.beta, p.m_ratio).B;
        for (double y : grid.nodes) grid.values.push_back(-B * y * y);
    }
    const auto rv = objective(p, grid, cgrid);
    const auto dir = prepare_out_dir(o);
    write_residuals(dir, rv);
    write_manifest(dir, app, "residuals");
    double worst = 0.0;
    for (double r : rv.residual) worst = std::max(worst, std::abs(r));
    out << "objective " << std::setprecision(10) << rv.objective << " (floor " << rv.c.size() << "), max |residual| "
        << worst << "\n";
    return Success;
}

struct Check {
    std::string name;
    double value;
    double tolerance;
    bool pass;
};

int report_checks(const std::vector<Check>& checks, const fs::path& dir, std::ostream& out) {
    CsvWriter csv(dir / "verify.csv", {"check", "value", "tolerance", "pass"});
    bool all = true;
    out << std::left << std::setw(34) << "check" << std::setw(16) << "value" << std::setw(14) << "tolerance"
        << "status\n";
    for (const auto& c : checks) {
        csv.row(c.name, c.value, c.tolerance, c.pass ? 1 : 0);
        out << std::setw(34) << c.name << std::setw(16) << std::setprecision(8) << c.value << std::setw(14)
            << c.tolerance << (c.pass ? "pass" : "FAIL") << '\n';
        all = all && c.pass;
    }
    out << (all ? "verification passed\n" : "verification FAILED\n");
    return all ? Success : VerificationFailed;
}

int cmd_verify(const Options& o, const CLI::App& app, std::ostream& out) {
    const auto dir = prepare_out_dir(o);
    std::vector<Check> checks;
    const Problem p = load_problem(o);
    if (p.label == "stadje") {
        const double a1 = stadje_alpha();
        const std::vector<double> cs{1.0, 2.0, 4.0};
        const double worst = verify_closed_form("stadje", cs);
        checks.push_back({"max |residual| at alpha_1", worst, 1e-5, worst <= 1e-5});
        const std::vector<double> c1{1.0};
        const double wrong = verify_closed_form("stadje", c1, 0.9);
        checks.push_back({"|residual| at alpha = 0.9", wrong, 1e-2, wrong >= 1e-2});
        const double below = stadje_double_integral(a1 - 0.05, 1.0);
        const double above = stadje_double_integral(a1 + 0.05, 1.0);
        checks.push_back({"sign change across alpha_1", below * above, 0.0, below > 0.0 && above < 0.0});
        checks.push_back({"alpha_1 vs 1/sqrt(B_1)", std::abs(a1 - solve_B(1.0).alpha), 1e-4,
                          std::abs(a1 - solve_B(1.0).alpha) <= 1e-4});
    } else {
        const auto s = make_setup(o);
        const auto env = iterate(s.problem, s.nodes, s.cgrid, o.iterations, bounds_config(o));
        const auto report = solve(s.problem, s.cgrid, env, solver_config(o));
        const double floor = static_cast<double>(s.cgrid.values.size());
        const double excess = report.trace.back() / floor - 1.0;
        checks.push_back({"objective excess over M", excess, 0.01, excess <= 0.01});

        const auto grid = backward_induction(s.problem, dp_config(o, s.problem));
        const auto d = extract_d(grid, s.nodes);
        double gap = 0.0;
        for (std::size_t n = 1; n + 1 < s.nodes.size(); ++n)
            gap = std::max(gap, std::abs(report.grid.values[n] - d.grid.values[n]));
        checks.push_back({"sup gap to oracle (time)", gap, 3.0 * grid.dt(), gap <= 3.0 * grid.dt()});
        const double limit = std::abs(grid.boundary.front() - s.problem.b_inf);
        checks.push_back({"oracle b(t_min) vs b_inf", limit, 0.02, limit <= 0.02});

        const double tolerance = s.problem.label == "american_put" ? 0.35 : 0.25;
        const auto fit = asymptotic_check(report.grid, s.problem, 5);
        checks.push_back({"asymptotic B relative error", fit.relative_error, tolerance,
                          fit.relative_error <= tolerance});
        if (s.problem.label == "american_put") {
            const double root = std::abs(s.problem.to_original(s.nodes.front()) - std::log(o.theta));
            checks.push_back({"root at log(r/q)", root, 1e-12, root <= 1e-12 && report.grid.values[0] == 0.0});
            // Just before expiry the oracle boundary must sit at the root.
            const double near_expiry = grid.boundary[grid.boundary.size() - 2];
            const double allowed = 4.0 * std::sqrt(grid.dt());
            checks.push_back({"oracle root near expiry", near_expiry, allowed, std::abs(near_expiry) <= allowed});
        }
        write_boundary(dir, report.grid, env);
    }
    write_manifest(dir, app, "verify");
    return report_checks(checks, dir, out);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Optimal stopping boundaries from the Fredholm representation", "stopbound"};
    app.set_version_flag("--version", std::string(version()));
    app.set_config("--config", "", "Read flags from a key=value file (command line wins)");
    app.fallthrough();
    app.require_subcommand(1);

    app.add_option("--problem", o.problem, "Builtin problem: linear, stadje, american_put")->capture_default_str();
    app.add_option("--problem-file", o.problem_file, "Problem definition file (overrides --problem)");
    app.add_option("--out-dir", o.out_dir, "Output directory")->capture_default_str();
    app.add_option("--nodes", o.nodes, "Boundary nodes N")->capture_default_str();
    app.add_option("--cvals", o.cvals, "Number of c values M")->capture_default_str();
    app.add_option("--t-min", o.t_min, "Oracle horizon T_min < 0")->capture_default_str();
    app.add_option("--seed", o.seed, "Monte Carlo seed")->capture_default_str();
    app.add_option("--threads", o.threads, "Worker threads (results do not depend on it)")->capture_default_str();
    app.add_option("--tolerance", o.tolerance, "Solver coordinate tolerance")->capture_default_str();
    app.add_option("--rho", o.rho, "american_put: r / sigma^2")->capture_default_str();
    app.add_option("--theta", o.theta, "american_put: r / q, below 1")->capture_default_str();
    app.add_option("--iterations", o.iterations, "Envelope rounds")->capture_default_str();
    app.add_option("--beta", o.betas, "constants: local power(s) beta");
    app.add_option("--m-ratio", o.m_ratio, "constants: left/right coefficient ratio")->capture_default_str();
    app.add_option("--t-steps", o.t_steps, "Oracle time steps")->capture_default_str();
    app.add_option("--x-steps", o.x_steps, "Oracle space steps")->capture_default_str();
    app.add_option("--sweeps", o.sweeps, "Maximum coordinate-descent sweeps")->capture_default_str();
    app.add_option("--paths", o.paths, "oracle: Monte Carlo paths at (max(t_min,-1), 0); 0 skips")
        ->capture_default_str();
    app.add_option("--boundary-file", o.boundary_file, "residuals: CSV with y,d columns");

    auto* constants = app.add_subcommand("constants", "Universal constants B_beta");
    auto* solve_cmd = app.add_subcommand("solve", "Solve for the boundary on the node grid");
    auto* bounds_cmd = app.add_subcommand("bounds", "Iterated lower/upper envelope");
    auto* verify = app.add_subcommand("verify", "Closed-form and oracle checks");
    auto* oracle = app.add_subcommand("oracle", "Backward-induction reference boundary");
    auto* residuals = app.add_subcommand("residuals", "Residual vector for a given boundary");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? Success : UsageError;
    }

    try {
        if (constants->parsed())
            return cmd_constants(o, app, app.count("--out-dir") > 0, out);
        if (solve_cmd->parsed()) return cmd_solve(o, app, out);
        if (bounds_cmd->parsed()) return cmd_bounds(o, app, out);
        if (verify->parsed()) return cmd_verify(o, app, out);
        if (oracle->parsed()) return cmd_oracle(o, app, out);
        if (residuals->parsed()) return cmd_residuals(o, app, out);
    } catch (const UsageProblem& e) {
        err << "error: " << e.what() << "\n";
        return UsageError;
    } catch (const ProblemFileError& e) {
        err << "error: " << e.what() << "\n";
        return UsageError;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return UsageError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return UsageError;
    }
    return UsageError;
}

}  // namespace stopbound::cli
