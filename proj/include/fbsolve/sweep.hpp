#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fbsolve/kellerbox.hpp"
#include "fbsolve/problem.hpp"
#include "fbsolve/shoot.hpp"

namespace fbsolve {

struct SweepOptions {
    std::optional<SolverKind> solver;  // default: the problem's default solver
    std::optional<int> grid;           // box intervals; default: problem default
    NewtonOptions newton;
    IvpOptions ivp;
    bool independent = false;  // solve rows concurrently from cold guesses
};

struct SweepRow {
    double eps = 0.0;
    bool ok = false;
    SolveStatus status = SolveStatus::converged;
    std::string detail;
    SolutionGrid grid;  // meaningful when ok
};

struct OrderFit {
    double slope = 0.0;
    double L_fit = 0.0;
    int points_used = 0;
};

struct SweepReport {
    std::vector<SweepRow> rows;  // ordered by decreasing |eps|
    bool golden_rule_ok = true;  // vacuously true with < 2 successful rows
    std::vector<std::pair<int, int>> golden_violations;  // adjacent row indices
    std::optional<OrderFit> order_fit;  // present only with a closed form
    NewtonOptions newton_used;
};

/// eps-continuation with warm starts: the missing initial values are carried
/// from the previous row and x_eps is re-guessed from the measured tail decay
/// rate of the closing-condition components (falling back to plain carry).
/// eps_list must be one-signed with strictly decreasing magnitudes. A failed
/// first row aborts the sweep; later failures are recorded per row and the
/// chain continues from the last success.
SweepReport run_sweep(const Builtin& problem, const std::vector<double>& eps_list,
                      const SweepOptions& opts = {});

/// Smaller |eps| must widen the domain: ok iff x_eps is strictly increasing
/// across successful rows. Throws std::invalid_argument with fewer than two
/// successful rows.
std::pair<bool, std::vector<std::pair<int, int>>> check_golden_rule(const SweepReport& r);

/// Least-squares fit of log(max nodal |u_num - u_exact|) against log |eps|.
/// Rows whose error sits below 10x the solver tolerance are excluded as
/// floor-contaminated; fewer than 3 surviving points yields nullopt.
std::optional<OrderFit> estimate_order(const ClosedFormSolution& cf,
                                       const SweepReport& report,
                                       double residual_tol);

/// One solve at the requested eps. Small |eps| is reached through the
/// problem's default ladder with warm starts (the supported path); the
/// returned row is the final rung. `sweep_out`, when given, receives the
/// whole chain.
SolveResult solve_single(const Builtin& problem, double eps, const SweepOptions& opts = {},
                         SweepReport* sweep_out = nullptr);

}  // namespace fbsolve
