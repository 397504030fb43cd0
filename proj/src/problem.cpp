#include "fbsolve/problem.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace fbsolve {

void ProblemSpec::validate() const {
    if (order < 2)
        throw std::invalid_argument("ProblemSpec '" + name + "': order must be >= 2");
    if (!rhs)
        throw std::invalid_argument("ProblemSpec '" + name + "': rhs evaluator missing");
    std::set<int> seen;
    for (const auto& c : left_conditions) {
        if (c.deriv < 0 || c.deriv >= order)
            throw std::invalid_argument("ProblemSpec '" + name + "': left condition derivative index out of range");
        if (!seen.insert(c.deriv).second)
            throw std::invalid_argument("ProblemSpec '" + name + "': duplicate left condition derivative index");
    }
    for (const auto& c : asymptotic_conditions) {
        if (c.deriv < 0 || c.deriv >= order)
            throw std::invalid_argument("ProblemSpec '" + name + "': asymptotic condition derivative index out of range");
    }
    if (asymptotic_conditions.empty())
        throw std::invalid_argument("ProblemSpec '" + name +
                                    "': at least one condition at infinity is required");
    if (static_cast<int>(left_conditions.size() + asymptotic_conditions.size()) != order)
        throw std::invalid_argument("ProblemSpec '" + name +
                                    "': #left + #asymptotic conditions must equal the order");
}

std::vector<int> ProblemSpec::unknown_left_indices() const {
    std::set<int> fixed;
    for (const auto& c : left_conditions) fixed.insert(c.deriv);
    std::vector<int> out;
    for (int k = 0; k < order; ++k)
        if (!fixed.count(k)) out.push_back(k);
    return out;
}

FirstOrderSystem reduce_to_first_order(const ProblemSpec& spec) {
    spec.validate();
    FirstOrderSystem sys;
    sys.dim = spec.order;
    sys.origin = spec;
    const int n = spec.order;
    auto f = spec.rhs;
    sys.eval = [n, f](double x, const Vec& y, Vec& d) {
        for (int k = 0; k + 1 < n; ++k) d[k] = y[k + 1];
        d[n - 1] = -f(x, y);
    };
    return sys;
}

namespace {

double require_param(const Params& p, const std::string& key, const std::string& problem) {
    auto it = p.find(key);
    if (it == p.end())
        throw std::invalid_argument("builtin '" + problem + "': missing parameter " + key);
    return it->second;
}

double param_or(const Params& p, const std::string& key, double fallback) {
    auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
}

std::vector<double> ladder(int low_exp, int high_exp) {
    std::vector<double> out;
    for (int k = low_exp; k <= high_exp; ++k) out.push_back(std::pow(10.0, -k));
    return out;
}

ClosedFormSolution linear_exp_closed_form(double P) {
    ClosedFormSolution cf;
    cf.u_exact = [P](double x) { return 1.0 - std::exp(-P * x); };
    cf.u_fbf_exact = [P](double x, double eps) {
        return (P + eps) / P * (1.0 - std::exp(-P * x));
    };
    cf.x_eps_exact = [P](double eps) {
        if (eps == 0.0) return std::numeric_limits<double>::infinity();
        return -std::log(eps / (P + eps)) / P;
    };
    cf.internals["slope_at_0"] = [P](double eps) { return P + eps; };
    return cf;
}

// The free-boundary family of u'' + 2P u u' = 0 follows from the first
// integral u' + P u^2 = P + eps (pinned by the two conditions at x_eps):
//   u_eps(x) = a tanh(a P x),  a = sqrt((P+eps)/P),  tanh(a P x_eps) = 1/a.
ClosedFormSolution tanh_closed_form(double P) {
    ClosedFormSolution cf;
    cf.u_exact = [P](double x) { return std::tanh(P * x); };
    cf.u_fbf_exact = [P](double x, double eps) {
        const double a = std::sqrt((P + eps) / P);
        return a * std::tanh(a * P * x);
    };
    cf.x_eps_exact = [P](double eps) {
        if (eps == 0.0) return std::numeric_limits<double>::infinity();
        const double a = std::sqrt((P + eps) / P);
        return std::atanh(1.0 / a) / (a * P);
    };
    cf.internals["amplitude"] = [P](double eps) { return std::sqrt((P + eps) / P); };
    cf.internals["slope_at_0"] = [P](double eps) { return P + eps; };
    return cf;
}

Builtin make_linear_exp(const Params& params, bool autonomous) {
    const std::string nm = autonomous ? "linear_exp" : "nonautonomous_exp";
    const double P = require_param(params, "P", nm);
    if (P <= 0.0)
        throw std::invalid_argument("builtin '" + nm + "': P must be positive");
    Builtin b;
    b.spec.name = nm;
    b.spec.order = 2;
    b.spec.params = {{"P", P}};
    if (autonomous) {
        b.spec.rhs = [P](double, const Vec& y) { return P * y[1]; };
    } else {
        // u'' + P^2 exp(-P x) = 0 shares the exact solutions of linear_exp
        b.spec.rhs = [P](double x, const Vec&) { return P * P * std::exp(-P * x); };
    }
    b.spec.left_conditions = {{0, 0.0}};
    b.spec.asymptotic_conditions = {{0, 1.0}};
    b.closed_form = linear_exp_closed_form(P);
    b.info.default_ladder = ladder(1, 6);
    auto xe = b.closed_form->x_eps_exact;
    b.info.default_guess = [P, xe](double eps) {
        Vec g(2);
        g << 1.1 * (P + std::abs(eps)), 1.05 * xe(std::abs(eps));
        return g;
    };
    return b;
}

Builtin make_tanh(const Params& params) {
    const double P = require_param(params, "P", "tanh");
    if (P <= 0.0)
        throw std::invalid_argument("builtin 'tanh': P must be positive");
    Builtin b;
    b.spec.name = "tanh";
    b.spec.order = 2;
    b.spec.params = {{"P", P}};
    b.spec.rhs = [P](double, const Vec& y) { return 2.0 * P * y[0] * y[1]; };
    b.spec.left_conditions = {{0, 0.0}};
    b.spec.asymptotic_conditions = {{0, 1.0}};
    b.closed_form = tanh_closed_form(P);
    b.info.default_ladder = ladder(1, 6);
    auto xe = b.closed_form->x_eps_exact;
    b.info.default_guess = [P, xe](double eps) {
        Vec g(2);
        g << 1.1 * (P + std::abs(eps)), 1.05 * xe(std::abs(eps));
        return g;
    };
    return b;
}

// Flow around a slender parabola of revolution:
//   (1 + P1 x) u''' + (u/2 + P1) u'' = 0,
//   u(0) = P2, u'(0) = 0, u'(inf) = 1.
Builtin make_engine(const Params& params) {
    Builtin b;
    const double P1 = param_or(params, "P1", 2.0);
    const double P2 = param_or(params, "P2", 2.0);
    b.spec.name = "engine";
    b.spec.order = 3;
    b.spec.params = {{"P1", P1}, {"P2", P2}};
    b.spec.rhs = [P1](double x, const Vec& y) {
        return (0.5 * y[0] + P1) * y[2] / (1.0 + P1 * x);
    };
    b.spec.left_conditions = {{0, P2}, {1, 0.0}};
    b.spec.asymptotic_conditions = {{1, 1.0}};
    b.info.default_ladder = ladder(1, 9);
    b.info.default_guess = [](double) {
        Vec g(2);
        g << 1.0, 10.0;
        return g;
    };
    return b;
}

// Sakiadis boundary layer: u''' + u u''/2 = 0,
// u(0) = 0, u'(0) = 1, u'(inf) = 0. u'' < 0 throughout, so eps < 0.
Builtin make_sakiadis(const Params&) {
    Builtin b;
    b.spec.name = "sakiadis";
    b.spec.order = 3;
    b.spec.rhs = [](double, const Vec& y) { return 0.5 * y[0] * y[2]; };
    b.spec.left_conditions = {{0, 0.0}, {1, 1.0}};
    b.spec.asymptotic_conditions = {{1, 0.0}};
    b.info.default_eps_sign = -1.0;
    b.info.default_ladder = ladder(1, 6);
    b.info.default_guess = [](double) {
        Vec g(2);
        g << -0.5, 5.0;
        return g;
    };
    return b;
}

// Deflection of a semi-infinite pile in soft soil:
//   u'''' + P1 (1 - exp(-P2 u)) = 0,
//   u''(0) = 0, u'''(0) = P3, u(inf) = u'(inf) = 0.
Builtin make_pile(const Params& params) {
    Builtin b;
    const double P1 = param_or(params, "P1", 1.0);
    const double P2 = param_or(params, "P2", 0.5);
    const double P3 = param_or(params, "P3", 0.5);
    b.spec.name = "pile";
    b.spec.order = 4;
    b.spec.params = {{"P1", P1}, {"P2", P2}, {"P3", P3}};
    b.spec.rhs = [P1, P2](double, const Vec& y) {
        // clamp the exponent so stray iterates with large negative u
        // overflow to a finite (huge) value instead of inf
        const double w = std::min(-P2 * y[0], 500.0);
        return P1 * (1.0 - std::exp(w));
    };
    b.spec.left_conditions = {{2, 0.0}, {3, P3}};
    b.spec.asymptotic_conditions = {{0, 0.0}, {1, 0.0}};
    b.info.default_ladder = ladder(1, 4);
    b.info.default_solver = SolverKind::box;
    b.info.profile_init = true;
    b.info.default_guess = [](double) {
        Vec g(3);
        g << 1.0, -0.5, 8.0;
        return g;
    };
    return b;
}

}  // namespace

const std::vector<std::string>& builtin_names() {
    static const std::vector<std::string> names = {
        "linear_exp", "nonautonomous_exp", "tanh", "engine", "sakiadis", "pile"};
    return names;
}

Builtin builtin(const std::string& name, const Params& params) {
    Builtin b;
    if (name == "linear_exp") {
        b = make_linear_exp(params, true);
    } else if (name == "nonautonomous_exp") {
        b = make_linear_exp(params, false);
        b.spec.name = "nonautonomous_exp";
    } else if (name == "tanh") {
        b = make_tanh(params);
    } else if (name == "engine") {
        b = make_engine(params);
    } else if (name == "sakiadis") {
        b = make_sakiadis(params);
    } else if (name == "pile") {
        b = make_pile(params);
    } else {
        std::ostringstream msg;
        msg << "unknown problem '" << name << "'; valid names:";
        for (const auto& nm : builtin_names()) msg << " " << nm;
        throw std::invalid_argument(msg.str());
    }
    b.spec.validate();
    return b;
}

}  // namespace fbsolve
