#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fbsolve/problem.hpp"

namespace fbsolve {

struct NewtonOptions {
    double residual_tol = 1e-10;  // RMS of the residual vector
    int max_iters = 50;
    double fd_step_scale = 1.4901161193847656e-08;  // sqrt(machine epsilon)
    int max_halvings = 45;
    double step_cap = 2.0;  // infinity-norm cap on the Newton step; <=0 disables
    // stagnation: abort when the residual shrank by less than this factor
    // over the trailing window
    double stagnation_factor = 0.99;
    int stagnation_window = 5;
};

enum class SolveStatus {
    converged,
    stagnation,
    max_iters,
    line_search_failed,
    free_boundary_collapse,
    diverged_initial,
    singular_system,
    no_consistent_sector,
};

const char* to_string(SolveStatus s);

struct SolutionGrid {
    std::vector<double> mesh;      // t nodes, strictly increasing, 0..1
    std::vector<Vec> states;       // per node: (u, u', ..., u^(n-1)) in x-units
    double x_eps = 0.0;
    double eps = 0.0;
    std::map<int, double> missing_ic;  // derivative index -> value at x = 0
    double residual_norm = 0.0;        // RMS of the exact right-condition residuals
    int iterations = 0;
    SolverKind solver_tag = SolverKind::shoot;
    std::optional<bool> monotone_ok;   // decay-hypothesis diagnostic
    std::vector<int> sector;           // abs-closing sign pattern, empty if smooth

    double u_at(int node) const { return states[node][0]; }
    const Vec& terminal_state() const { return states.back(); }
    double x_of(int node) const { return mesh[node] * x_eps; }
};

struct SolveResult {
    SolveStatus status = SolveStatus::converged;
    std::string detail;
    std::optional<SolutionGrid> grid;

    bool ok() const { return status == SolveStatus::converged && grid.has_value(); }
};

inline double rms_norm(const Vec& r) {
    return r.size() == 0 ? 0.0 : r.norm() / std::sqrt(static_cast<double>(r.size()));
}

}  // namespace fbsolve
