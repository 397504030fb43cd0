#pragma once

#include <optional>

#include "fbsolve/fbf.hpp"
#include "fbsolve/integrate.hpp"
#include "fbsolve/solution.hpp"

namespace fbsolve {

/// Right-condition residuals of the integrated terminal state for the
/// unknown vector (missing initial derivatives ascending, then x_eps).
/// `diverged` is set when the trajectory blew up; the returned vector is
/// then a large-norm sentinel so a damped Newton backs off.
Vec shooting_residual(const NormalizedBvp& nb, const Vec& unknowns,
                      const IvpOptions& ivp, bool* diverged = nullptr);

/// Newton on (missing ICs, x_eps) with forward-difference Jacobian columns
/// for the IC components and the analytic terminal-derivative column for
/// x_eps. Problems with an absolute-value closing condition are solved per
/// sign sector (warm sector first) and the first sector-consistent root wins.
SolveResult solve_shoot(const NormalizedBvp& nb, const Vec& guess,
                        const NewtonOptions& opts = {}, const IvpOptions& ivp = {});

}  // namespace fbsolve
