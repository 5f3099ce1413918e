#include "stopbound/problem.hpp"

#include "stopbound/expression.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace stopbound {

double Problem::min_c() const { return std::sqrt(2.0 * r); }

bool Problem::bounded() const { return std::isfinite(b_inf); }

bool Problem::has_payoff() const { return static_cast<bool>(payoff); }

double Problem::to_original(double y) const { return shift + orientation * y; }

double Problem::to_normalized(double x) const { return (x - shift) / orientation; }

double Problem::original_h_tilde(double x) const { return h_tilde(to_normalized(x)); }

namespace {

double atoms_below_zero(const std::vector<Atom>& atoms, double c) {
    double total = 0.0;
    for (const auto& atom : atoms)
        if (atom.location < 0.0) total += std::exp(c * atom.location) * atom.weight;
    return total;
}

// int_s^0 e^{k y} dy
double exp_integral(double k, double s) {
    if (std::abs(k * s) < 1e-12) return -s;
    return -std::expm1(k * s) / k;
}

double one_sided_slope(const ScalarFunction& f, double side) {
    // Second-order one-sided difference at 0.
    const double h = 1e-5;
    return side * (-3.0 * f(0.0) + 4.0 * f(side * h) - f(2.0 * side * h)) / (2.0 * h);
}

double parse_number(const std::string& key, const std::string& text) {
    double value = 0.0;
    const char* begin = text.data();
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        throw ProblemFileError("key '" + key + "': cannot parse number '" + text + "'");
    return value;
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

}  // namespace

double numeric_laplace(const Problem& p, double c) {
    if (!(c > p.min_c())) throw std::invalid_argument("Laplace transform requires c > sqrt(2r)");
    // Finite for c > sqrt(2r) means h_tilde grows slower than e^{sqrt(2r)|y|}.
    const double decay = p.r > 0.0 ? c - p.min_c() : 0.5 * c;
    QuadratureSpec spec;
    spec.max_subdivisions = 20000;
    const double integral = integrate_semi_infinite(
        [&](double y) { return std::exp(c * y) * p.h_tilde(y); }, 0.0, Direction::NegativeInfinity,
        decay, spec);
    return integral + atoms_below_zero(p.atoms, c);
}

double perpetual_boundary(const ScalarFunction& payoff, double r, double lo, double hi) {
    if (!(r > 0.0)) throw std::invalid_argument("perpetual boundary requires r > 0");
    const double rate = std::sqrt(2.0 * r);
    const auto smooth_fit = [&](double b) {
        const double h = 1e-6 * std::max(1.0, std::abs(b));
        const double derivative = (payoff(b + h) - payoff(b - h)) / (2.0 * h);
        return derivative - rate * payoff(b);
    };
    return find_root(smooth_fit, RootBracket::make(smooth_fit, lo, hi), 1e-13);
}

Problem linear_problem(double r) {
    if (!(r > 0.0)) throw std::invalid_argument("linear problem requires r > 0");
    Problem p;
    p.label = "linear";
    p.r = r;
    p.h_tilde = [r](double y) { return r * y; };
    p.laplace_h_tilde = [r](double c) { return -r / (c * c); };
    p.payoff = [](double y) { return y; };
    p.b_inf = 1.0 / std::sqrt(2.0 * r);
    return p;
}

Problem stadje_problem() {
    Problem p;
    p.label = "stadje";
    p.r = 0.0;
    p.h_tilde = [](double y) { return y; };
    p.laplace_h_tilde = [](double c) { return -1.0 / (c * c); };
    p.payoff = [](double y) { return -y * y * y / 3.0; };
    p.orientation = -1.0;
    return p;
}

Problem american_put_problem(const PutParameters& params) {
    const double rho = params.rho;
    const double theta = params.theta;
    if (!(rho > 0.0)) throw std::invalid_argument("american_put requires rho > 0");
    if (!(theta > 0.0)) throw std::invalid_argument("american_put requires theta > 0");
    if (!(theta < 1.0))
        throw UnsupportedRegime(
            "american_put requires theta = r/q < 1; for q <= r the payoff kink sits on the edge "
            "of the initial continuation set and the Fredholm boundary analysis does not apply");

    // Canonical driver x_t = W_t + mu t with discount rho; removing the drift
    // gives discount rho + mu^2/2 and payoff e^{mu x} (1 - e^x)^+.
    const double mu = rho - rho / theta - 0.5;
    const double shift = std::log(theta);  // root of the generator payoff, log(r/q)

    Problem p;
    p.label = "american_put";
    p.r = rho + 0.5 * mu * mu;
    p.shift = shift;
    p.orientation = -1.0;
    p.payoff = [=](double y) {
        const double x = shift - y;
        return std::exp(mu * x) * std::max(-std::expm1(x), 0.0);
    };
    p.h_tilde = [=](double y) {
        const double x = shift - y;
        if (x >= 0.0) return 0.0;
        return rho * std::exp(mu * x) * (1.0 - std::exp(x) / theta);
    };
    // The kink of (1 - e^x)^+ at x = 0 puts mass -1/2 into h_tilde.
    p.atoms = {Atom{shift, -0.5}};
    p.laplace_h_tilde = [=](double c) {
        const double scale = rho * std::exp(mu * shift);
        return scale * (exp_integral(c - mu, shift) - exp_integral(c - mu - 1.0, shift)) -
               0.5 * std::exp(c * shift);
    };
    p.b_inf = perpetual_boundary(p.payoff, p.r, 1e-9, 50.0);
    p.beta = 1.0;
    p.m_ratio = one_sided_slope(p.h_tilde, -1.0) / one_sided_slope(p.h_tilde, 1.0);
    return p;
}

Problem builtin(std::string_view label, const PutParameters& put) {
    if (label == "linear") return linear_problem(1.0);
    if (label == "stadje") return stadje_problem();
    if (label == "american_put") return american_put_problem(put);
    throw UnknownProblem("unknown builtin problem '" + std::string(label) +
                         "' (expected linear, stadje or american_put)");
}

Problem remove_drift(const DriftedProblem& drifted) {
    const double mu = drifted.mu;
    const double r_new = drifted.r + 0.5 * mu * mu;
    if (!(r_new >= 0.0)) throw std::invalid_argument("transformed discount must be non-negative");
    const auto h = drifted.h;

    Problem p;
    p.label = "drift_removed";
    p.r = r_new;
    if (mu == 0.0) {
        p.payoff = h;
    } else {
        p.payoff = [h, mu](double y) { return std::exp(mu * y) * h(y); };
    }
    p.h_tilde = [payoff = p.payoff, r_new](double y) {
        const double step = 1e-4 * std::max(1.0, std::abs(y));
        const double second = (payoff(y + step) - 2.0 * payoff(y) + payoff(y - step)) / (step * step);
        return r_new * payoff(y) - 0.5 * second;
    };
    p.laplace_h_tilde = [self = p](double c) { return numeric_laplace(self, c); };
    return p;
}

LocalBehaviour h_tilde_local(const Problem& p) { return {p.beta, p.m_ratio}; }

Problem scaled(const Problem& p, double k) {
    if (!(k > 0.0)) throw std::invalid_argument("scale factor must be positive");
    Problem q = p;
    q.h_tilde = [f = p.h_tilde, k](double y) { return k * f(y); };
    q.laplace_h_tilde = [f = p.laplace_h_tilde, k](double c) { return k * f(c); };
    if (p.payoff) q.payoff = [f = p.payoff, k](double y) { return k * f(y); };
    for (auto& atom : q.atoms) atom.weight *= k;
    return q;
}

Problem parse_problem_definition(std::string_view text) {
    std::map<std::string, std::string> entries;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ProblemFileError("line " + std::to_string(line_number) + ": expected key=value");
        entries[trim(std::string_view(stripped).substr(0, eq))] =
            trim(std::string_view(stripped).substr(eq + 1));
    }

    static const std::vector<std::string> known{"label", "r",      "beta",  "m_ratio", "b_inf",
                                                "shift", "htilde_expr", "atoms", "h_expr"};
    for (const auto& [key, value] : entries)
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ProblemFileError("unknown key '" + key + "'");
    for (const char* required : {"r", "b_inf", "htilde_expr"})
        if (!entries.count(required)) throw ProblemFileError(std::string("missing key '") + required + "'");

    Problem p;
    p.label = entries.count("label") ? entries["label"] : "custom";
    p.r = parse_number("r", entries["r"]);
    if (!(p.r > 0.0)) throw ProblemFileError("key 'r': discount rate must be positive");
    const std::string b_inf_text = entries["b_inf"];
    p.b_inf = (b_inf_text == "inf") ? std::numeric_limits<double>::infinity() : parse_number("b_inf", b_inf_text);
    if (!(p.b_inf > 0.0)) throw ProblemFileError("key 'b_inf': must be positive");
    if (entries.count("beta")) p.beta = parse_number("beta", entries["beta"]);
    if (entries.count("m_ratio")) p.m_ratio = parse_number("m_ratio", entries["m_ratio"]);
    if (entries.count("shift")) p.shift = parse_number("shift", entries["shift"]);
    if (!(p.beta >= 0.0) || !(p.m_ratio > 0.0))
        throw ProblemFileError("beta must be >= 0 and m_ratio > 0");

    try {
        p.h_tilde = compile_expression(entries["htilde_expr"]);
        if (entries.count("h_expr")) p.payoff = compile_expression(entries["h_expr"]);
    } catch (const ExpressionError& e) {
        throw ProblemFileError(e.what());
    }

    if (entries.count("atoms")) {
        std::istringstream atoms(entries["atoms"]);
        std::string item;
        while (std::getline(atoms, item, ';')) {
            item = trim(item);
            if (item.empty()) continue;
            const auto colon = item.find(':');
            if (colon == std::string::npos)
                throw ProblemFileError("atom '" + item + "' must be location:weight");
            p.atoms.push_back({parse_number("atoms", trim(std::string_view(item).substr(0, colon))),
                               parse_number("atoms", trim(std::string_view(item).substr(colon + 1)))});
        }
    }
    p.laplace_h_tilde = [self = p](double c) { return numeric_laplace(self, c); };
    return p;
}

Problem load_problem_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ProblemFileError("cannot open problem file '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_problem_definition(buffer.str());
}

}  // namespace stopbound
