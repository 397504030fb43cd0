#pragma once

#include <optional>
#include <variant>

#include "fbsolve/fbf.hpp"
#include "fbsolve/solution.hpp"

namespace fbsolve {

/// Uniform mesh on [0, 1] with J intervals (J+1 nodes).
struct BoxMesh {
    int intervals;  // J
    int node_count() const { return intervals + 1; }
    double h() const { return 1.0 / intervals; }
    double node(int j) const { return static_cast<double>(j) / intervals; }
};

/// Flat unknown vector: nodal states then x_eps, length n*(J+1) + 1.
/// Midpoint (box) residuals per interval plus the boundary residuals, in
/// the order [left conditions; interval blocks; right conditions].
Vec assemble_residual(const NormalizedBvp& nb, const BoxMesh& mesh, const Vec& Z);

/// Initial iterate for the box Newton.
struct BoxInit {
    std::vector<Vec> states;  // one per node (may come from a coarser grid)
    std::vector<double> mesh; // t nodes of `states`
    double x_eps = 0.0;
};

BoxInit box_init_from_grid(const SolutionGrid& g);
/// Linear-decay profile between the boundary data (the pile's cold start):
/// u falls from u0_guess to the asymptotic value, higher derivatives ramp
/// from their left conditions to zero.
BoxInit box_init_profile(const FreeBvp& fb, double u0_guess, double x_eps_guess);

SolveResult solve_box(const NormalizedBvp& nb, const BoxMesh& mesh, const BoxInit& init,
                      const NewtonOptions& opts = {});

struct RefinementRow {
    int node_count;
    bool ok;
    double u0, du0, x_eps;
    Vec terminal_state;
    double residual_norm;
    int iterations;
};

struct RefinementStudy {
    int M = 0;
    int k_max = 0;
    std::vector<RefinementRow> rows;
    std::optional<int> failed_k;  // first failing level, if any
};

/// Mesh-doubling study: J = 2^k * M for k = 0..k_max, each level warm-started
/// from the previous level's interpolated solution.
RefinementStudy refinement_study(const NormalizedBvp& nb, int M, int k_max,
                                 const BoxInit& coarse_init, const NewtonOptions& opts = {});

}  // namespace fbsolve
