#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace fbsolve {

using Vec = Eigen::VectorXd;

/// One boundary condition: value of the k-th derivative.
struct Condition {
    int deriv;     // derivative index, 0 = u itself
    double value;
};

using Params = std::map<std::string, double>;

/// An n-th order scalar ODE on [0, inf):
///   u^(n) + f(x, u, u', ..., u^(n-1)) = 0
/// with conditions at x = 0 and one or more conditions at infinity.
/// The sign convention keeps f exactly as written above.
struct ProblemSpec {
    std::string name;
    int order = 0;
    // f(x, derivs) where derivs = (u, u', ..., u^(n-1))
    std::function<double(double, const Vec&)> rhs;
    std::vector<Condition> left_conditions;
    std::vector<Condition> asymptotic_conditions;
    Params params;

    // Throws std::invalid_argument if the invariants do not hold:
    // order >= 2, derivative indices < order, no duplicate left index,
    // #left + #asymptotic == order.
    void validate() const;

    // Derivative indices at x = 0 that are NOT fixed by left_conditions,
    // ascending. These are the shooting unknowns (besides x_eps).
    std::vector<int> unknown_left_indices() const;
};

/// Companion-form reduction: y = (u, u', ..., u^(n-1)),
/// y' = (y2, ..., yn, -f(x, y)).
struct FirstOrderSystem {
    int dim = 0;
    std::function<void(double x, const Vec& y, Vec& dydx)> eval;
    ProblemSpec origin;

    Vec operator()(double x, const Vec& y) const {
        Vec d(dim);
        eval(x, y, d);
        return d;
    }
};

FirstOrderSystem reduce_to_first_order(const ProblemSpec& spec);

/// Exact solutions where available: the original BVP solution u(x),
/// and for the free-boundary restatement the family u_fbf(x; eps) with
/// its boundary x_eps(eps). u_fbf(., 0) coincides with u_exact.
struct ClosedFormSolution {
    std::function<double(double)> u_exact;
    std::function<double(double x, double eps)> u_fbf_exact;   // may be null
    std::function<double(double eps)> x_eps_exact;             // may be null
    // named internal constants of the closed form, as functions of eps
    std::map<std::string, std::function<double(double)>> internals;

    bool has_fbf() const { return static_cast<bool>(u_fbf_exact) && static_cast<bool>(x_eps_exact); }
};

enum class SolverKind { shoot, box };

/// Registry metadata: defaults that drive sweeps and the CLI.
struct ProblemInfo {
    double default_eps_sign = +1.0;
    std::vector<double> default_ladder;       // magnitudes, decreasing
    SolverKind default_solver = SolverKind::shoot;
    int default_grid = 1000;                  // box mesh intervals
    // initial shooting guess for the missing ICs (ascending) + x_eps
    std::function<Vec(double eps)> default_guess;
    // true: box solves start from the linear-decay profile rather than a
    // shooting presolve (used by the pile, where cold shooting diverges)
    bool profile_init = false;
};

struct Builtin {
    ProblemSpec spec;
    std::optional<ClosedFormSolution> closed_form;
    ProblemInfo info;
};

/// Construct one of the named built-in problems. Unknown names, missing
/// parameters and non-positive P (where positivity is required) throw
/// std::invalid_argument.
Builtin builtin(const std::string& name, const Params& params = {});

const std::vector<std::string>& builtin_names();

}  // namespace fbsolve
