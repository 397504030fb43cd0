#include "fbsolve/shoot.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

namespace fbsolve {

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::converged: return "converged";
        case SolveStatus::stagnation: return "stagnation";
        case SolveStatus::max_iters: return "max_iters";
        case SolveStatus::line_search_failed: return "line_search_failed";
        case SolveStatus::free_boundary_collapse: return "free_boundary_collapse";
        case SolveStatus::diverged_initial: return "diverged_initial";
        case SolveStatus::singular_system: return "singular_system";
        case SolveStatus::no_consistent_sector: return "no_consistent_sector";
    }
    return "unknown";
}

namespace {

Vec assemble_y0(const NormalizedBvp& nb, const Vec& unknowns) {
    const int n = nb.order();
    Vec Y0 = Vec::Zero(n + 1);
    for (const auto& c : nb.free_bvp().left_known) Y0[c.deriv] = c.value;
    const auto& idx = nb.free_bvp().unknown_left_indices;
    for (size_t i = 0; i < idx.size(); ++i) Y0[idx[i]] = unknowns[i];
    Y0[n] = unknowns[unknowns.size() - 1];
    return Y0;
}

struct TerminalEval {
    bool diverged = false;
    Vec y_end;       // first n components at t = 1
    Vec residual;    // sector residuals (== exact when sector empty/consistent)
};

TerminalEval eval_terminal(const NormalizedBvp& nb, const Vec& unknowns,
                           const IvpOptions& ivp, const std::vector<int>& sector) {
    TerminalEval ev;
    const int n = nb.order();
    const Vec Y0 = assemble_y0(nb, unknowns);
    auto sys = [&nb](double t, const Vec& y, Vec& d) { nb.eval_aug(t, y, d); };
    Trajectory tr = integrate(sys, Y0, 0.0, 1.0, ivp);
    if (tr.status != IvpStatus::ok) {
        ev.diverged = true;
        ev.residual = Vec::Constant(nb.free_bvp().right_conditions.size(), 1e10);
        return ev;
    }
    ev.y_end = tr.back().head(n);
    ev.residual = sector.empty()
                      ? nb.right_residuals(ev.y_end, unknowns[unknowns.size() - 1])
                      : nb.right_residuals_sector(ev.y_end, unknowns[unknowns.size() - 1], sector);
    return ev;
}

// gradient of right condition i w.r.t. the terminal state and x_eps
void condition_gradient(const NormalizedBvp& nb, int i, const Vec& y_end,
                        double x_eps, const std::vector<int>& sector,
                        Vec& grad_y, double& d_xeps) {
    const auto& rc = nb.free_bvp().right_conditions[i];
    const int n = nb.order();
    grad_y = Vec::Zero(n);
    d_xeps = 0.0;
    switch (rc.kind) {
        case RightCondition::Kind::value:
            grad_y[rc.comp] = 1.0;
            return;
        case RightCondition::Kind::abs_sum:
            for (size_t j = 0; j < rc.abs_comps.size(); ++j) {
                const int c = rc.abs_comps[j];
                double s;
                if (!sector.empty()) s = sector[j];
                else s = y_end[c] >= 0.0 ? 1.0 : -1.0;
                grad_y[c] = s;
            }
            return;
        case RightCondition::Kind::custom: {
            const double base = rc.custom(y_end, x_eps, nb.eps());
            const double dd = 1e-7;
            Vec yp = y_end;
            for (int c = 0; c < n; ++c) {
                const double d = dd * std::max(1.0, std::abs(y_end[c]));
                yp[c] = y_end[c] + d;
                grad_y[c] = (rc.custom(yp, x_eps, nb.eps()) - base) / d;
                yp[c] = y_end[c];
            }
            const double d = dd * std::max(1.0, std::abs(x_eps));
            d_xeps = (rc.custom(y_end, x_eps + d, nb.eps()) - base) / d;
            return;
        }
    }
}

struct NewtonRun {
    SolveStatus status = SolveStatus::converged;
    Vec unknowns;
    Vec y_end;
    double residual_norm = 0.0;
    int iterations = 0;
    std::string detail;
};

NewtonRun newton_shoot(const NormalizedBvp& nb, Vec z, const NewtonOptions& opts,
                       const IvpOptions& ivp, const std::vector<int>& sector) {
    NewtonRun run;
    const int m = static_cast<int>(z.size());
    const int n = nb.order();

    TerminalEval ev = eval_terminal(nb, z, ivp, sector);
    if (ev.diverged) {
        run.status = SolveStatus::diverged_initial;
        run.detail = "trajectory diverged at the initial guess";
        run.residual_norm = std::numeric_limits<double>::infinity();
        return run;
    }
    double nr = rms_norm(ev.residual);
    std::vector<double> history = {nr};

    Eigen::MatrixXd J(m, m);
    for (int it = 0; it < opts.max_iters; ++it) {
        if (nr <= opts.residual_tol) {
            run.unknowns = z;
            run.y_end = ev.y_end;
            run.residual_norm = nr;
            run.iterations = it;
            return run;
        }

        // Jacobian: forward differences on the missing-IC components ...
        for (int j = 0; j + 1 < m; ++j) {
            const double d = opts.fd_step_scale * std::max(1.0, std::abs(z[j]));
            Vec zp = z;
            zp[j] += d;
            TerminalEval evp = eval_terminal(nb, zp, ivp, sector);
            if (evp.diverged)
                J.col(j) = Vec::Constant(m, 0.0);
            else
                J.col(j) = (evp.residual - ev.residual) / d;
        }
        // ... and the analytic terminal-derivative identity for x_eps:
        // the trajectory in x-units does not depend on x_eps, so
        // d y(1) / d x_eps = F(x_eps, y(1)).
        {
            const double xe = z[m - 1];
            Vec Fend(n);
            nb.x_system().eval(xe, ev.y_end, Fend);
            for (int i = 0; i < m; ++i) {
                Vec gy;
                double gx;
                condition_gradient(nb, i, ev.y_end, xe, sector, gy, gx);
                J(i, m - 1) = gy.dot(Fend) + gx;
            }
        }

        Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
        Vec step = lu.solve(-ev.residual);
        if (!step.allFinite()) {
            run.status = SolveStatus::singular_system;
            run.detail = "linear solve produced non-finite step";
            run.iterations = it;
            run.residual_norm = nr;
            return run;
        }
        const double sn = step.lpNorm<Eigen::Infinity>();
        if (opts.step_cap > 0.0 && sn > opts.step_cap) step *= opts.step_cap / sn;

        double lam = 1.0;
        bool accepted = false;
        bool any_admissible = false;
        TerminalEval trial;
        for (int h = 0; h <= opts.max_halvings; ++h) {
            Vec zt = z + lam * step;
            if (zt[m - 1] > 0.0) {
                any_admissible = true;
                trial = eval_terminal(nb, zt, ivp, sector);
                if (!trial.diverged) {
                    const double nt = rms_norm(trial.residual);
                    if (nt < nr) {
                        z = zt;
                        ev = trial;
                        nr = nt;
                        accepted = true;
                        break;
                    }
                }
            }
            lam *= 0.5;
        }
        if (!accepted) {
            run.status = any_admissible ? SolveStatus::line_search_failed
                                        : SolveStatus::free_boundary_collapse;
            run.detail = any_admissible
                             ? "no step length reduced the residual"
                             : "every trial step drove x_eps <= 0";
            run.iterations = it;
            run.residual_norm = nr;
            return run;
        }

        history.push_back(nr);
        const int w = opts.stagnation_window;
        if (static_cast<int>(history.size()) > w &&
            nr > opts.stagnation_factor * history[history.size() - 1 - w]) {
            run.status = SolveStatus::stagnation;
            std::ostringstream os;
            os << "residual decrease below factor " << opts.stagnation_factor << " over "
               << w << " iterations";
            run.detail = os.str();
            run.iterations = static_cast<int>(history.size()) - 1;
            run.residual_norm = nr;
            return run;
        }
    }
    run.status = nr <= opts.residual_tol ? SolveStatus::converged : SolveStatus::max_iters;
    run.unknowns = z;
    run.y_end = ev.y_end;
    run.residual_norm = nr;
    run.iterations = opts.max_iters;
    if (run.status == SolveStatus::max_iters) run.detail = "iteration budget exhausted";
    return run;
}

std::vector<std::vector<int>> sector_order(const NormalizedBvp& nb, const Vec& guess,
                                           const IvpOptions& ivp) {
    auto sectors = enumerate_sectors(nb.free_bvp());
    if (sectors.size() == 1) return sectors;  // smooth problem: single empty sector
    // rank by Hamming distance from the sign pattern at the warm-start terminal
    std::vector<int> warm;
    TerminalEval ev = eval_terminal(nb, guess, ivp, {});
    if (!ev.diverged) warm = sector_of(nb.free_bvp(), ev.y_end);
    if (!warm.empty()) {
        std::stable_sort(sectors.begin(), sectors.end(),
                         [&warm](const std::vector<int>& a, const std::vector<int>& b) {
                             int da = 0, db = 0;
                             for (size_t i = 0; i < warm.size(); ++i) {
                                 da += a[i] != warm[i];
                                 db += b[i] != warm[i];
                             }
                             return da < db;
                         });
    }
    return sectors;
}

}  // namespace

Vec shooting_residual(const NormalizedBvp& nb, const Vec& unknowns,
                      const IvpOptions& ivp, bool* diverged) {
    if (unknowns.size() != nb.free_bvp().unknown_count())
        throw std::invalid_argument("shooting_residual: unknown vector has wrong size");
    if (!(unknowns[unknowns.size() - 1] > 0.0))
        throw std::invalid_argument("shooting_residual: x_eps component must be positive");
    TerminalEval ev = eval_terminal(nb, unknowns, ivp, {});
    if (diverged) *diverged = ev.diverged;
    return ev.residual;
}

SolveResult solve_shoot(const NormalizedBvp& nb, const Vec& guess,
                        const NewtonOptions& opts, const IvpOptions& ivp) {
    SolveResult res;
    if (guess.size() != nb.free_bvp().unknown_count()) {
        res.status = SolveStatus::singular_system;
        res.detail = "guess dimension does not match the unknown count";
        return res;
    }
    if (!(guess[guess.size() - 1] > 0.0)) {
        res.status = SolveStatus::free_boundary_collapse;
        res.detail = "guess x_eps must be positive";
        return res;
    }

    NewtonRun best;
    bool have_failure = false;
    for (const auto& sector : sector_order(nb, guess, ivp)) {
        NewtonRun run = newton_shoot(nb, guess, opts, ivp, sector);
        if (run.status == SolveStatus::converged) {
            if (sector.empty() || sector_consistent(nb.free_bvp(), run.y_end, sector)) {
                // build the reported grid from the final trajectory
                const Vec Y0 = assemble_y0(nb, run.unknowns);
                auto sys = [&nb](double t, const Vec& y, Vec& d) { nb.eval_aug(t, y, d); };
                Trajectory tr = integrate(sys, Y0, 0.0, 1.0, ivp);
                SolutionGrid g;
                g.mesh = tr.t;
                g.states.reserve(tr.y.size());
                for (const auto& Y : tr.y) g.states.push_back(Y.head(nb.order()));
                g.x_eps = run.unknowns[run.unknowns.size() - 1];
                g.eps = nb.eps();
                const auto& idx = nb.free_bvp().unknown_left_indices;
                for (size_t i = 0; i < idx.size(); ++i) g.missing_ic[idx[i]] = run.unknowns[i];
                g.residual_norm = rms_norm(nb.right_residuals(run.y_end, g.x_eps));
                g.iterations = run.iterations;
                g.solver_tag = SolverKind::shoot;
                g.sector = sector;
                g.monotone_ok = monotone_decay_ok(nb.free_bvp(), g.states);
                res.status = SolveStatus::converged;
                res.grid = std::move(g);
                return res;
            }
            continue;  // converged into a different sector's territory: discard
        }
        if (!have_failure || run.residual_norm < best.residual_norm) {
            best = run;
            have_failure = true;
        }
    }
    if (have_failure) {
        res.status = best.status;
        res.detail = best.detail;
    } else {
        res.status = SolveStatus::no_consistent_sector;
        res.detail = "no sign sector produced a consistent root";
    }
    return res;
}

}  // namespace fbsolve
