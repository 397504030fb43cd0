#include "fbsolve/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <future>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace fbsolve {

namespace {

// Tail model for the warm start across eps rungs: the solution beyond the
// previous boundary is approximated by the decaying modes of the terminal
// linearization, y(x) ~ Re(V (c .* exp(lam (x - x0)))), with the mode
// coefficients fitted to the closing-condition components.
struct TailModel {
    Eigen::MatrixXcd V;
    Eigen::VectorXcd c;
    Eigen::VectorXcd lam;
    double x0 = 0.0;

    Vec eval(double x) const {
        Eigen::VectorXcd w = (lam.array() * (x - x0)).exp() * c.array();
        return (V * w).real();
    }
};

std::vector<int> closing_components(const FreeBvp& fb) {
    if (auto idx = fb.abs_condition_index())
        return fb.right_conditions[*idx].abs_comps;
    // class with one asymptotic condition: the eps-condition component
    const auto& rc = fb.right_conditions.back();
    if (rc.kind == RightCondition::Kind::value) return {rc.comp};
    return {};
}

std::optional<TailModel> fit_tail_model(const NormalizedBvp& nb, const SolutionGrid& g) {
    const int n = nb.order();
    const Vec& y_end = g.states.back();
    const double x_end = g.x_eps;
    // companion Jacobian of the x-space system at the terminal state
    Eigen::MatrixXd A(n, n);
    Vec F0(n), Fp(n);
    nb.x_system().eval(x_end, y_end, F0);
    for (int k = 0; k < n; ++k) {
        const double d = 1e-7 * std::max(1.0, std::abs(y_end[k]));
        Vec yp = y_end;
        yp[k] += d;
        nb.x_system().eval(x_end, yp, Fp);
        A.col(k) = (Fp - F0) / d;
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(A);
    if (es.info() != Eigen::Success) return std::nullopt;
    std::vector<int> stable;
    for (int i = 0; i < n; ++i)
        if (es.eigenvalues()[i].real() < -1e-8) stable.push_back(i);
    if (stable.empty()) return std::nullopt;

    TailModel tm;
    tm.x0 = x_end;
    tm.V.resize(n, stable.size());
    tm.lam.resize(stable.size());
    for (size_t i = 0; i < stable.size(); ++i) {
        tm.V.col(i) = es.eigenvectors().col(stable[i]);
        tm.lam[i] = es.eigenvalues()[stable[i]];
    }
    // fit the coefficients to the components the closing condition reads
    const auto comps = closing_components(nb.free_bvp());
    if (comps.empty()) return std::nullopt;
    Eigen::MatrixXcd M(comps.size(), stable.size());
    Eigen::VectorXcd rhs(comps.size());
    for (size_t i = 0; i < comps.size(); ++i) {
        M.row(i) = tm.V.row(comps[i]);
        rhs[i] = y_end[comps[i]];
    }
    tm.c = M.completeOrthogonalDecomposition().solve(rhs);
    if (!tm.c.allFinite()) return std::nullopt;
    return tm;
}

// closing residual along the model extension; first sign changes locate the
// new boundary
std::vector<double> scan_model(const NormalizedBvp& nb, const TailModel& tm,
                               double eps_new) {
    const auto& rcs = nb.free_bvp().right_conditions;
    const RightCondition& closing = rcs.back();
    auto value = [&](double x) {
        const Vec y = tm.eval(x);
        return closing.eval(y, x, eps_new);
    };
    std::vector<double> out;
    const double dx = 0.02;
    double prev = value(tm.x0);
    for (double x = tm.x0 + dx; x < tm.x0 + 200.0; x += dx) {
        const double v = value(x);
        if (std::isfinite(v) && ((v > 0) != (prev > 0))) {
            out.push_back(x - dx * v / (v - prev));
            if (out.size() >= 2) break;
        }
        prev = v;
    }
    return out;
}

std::vector<double> xeps_candidates(const NormalizedBvp& nb, const SolutionGrid& prev,
                                    double eps_new) {
    const FreeBvp& fb = nb.free_bvp();
    std::vector<double> cands;
    if (fb.abs_condition_index()) {
        if (auto tm = fit_tail_model(nb, prev))
            for (double x : scan_model(nb, *tm, eps_new)) cands.push_back(x);
    } else {
        // single closing component s: its terminal log-derivative is exact,
        // kappa = -s'/s with s' read off the x-space field
        const int comp = closing_components(fb)[0];
        const Vec& y_end = prev.states.back();
        Vec F(nb.order());
        nb.x_system().eval(prev.x_eps, y_end, F);
        const double s = y_end[comp], sp = F[comp];
        if (s != 0.0 && sp / s < -1e-12) {
            const double kappa = -sp / s;
            const double dxs = std::log(std::abs(prev.eps) / std::abs(eps_new)) / kappa;
            if (std::isfinite(dxs) && dxs > 0.0) cands.push_back(prev.x_eps + dxs);
        }
    }
    if (!cands.empty())  // hedge against model overshoot
        cands.push_back(0.5 * (cands.front() + prev.x_eps));
    cands.push_back(prev.x_eps);
    return cands;
}

Vec carried_guess(const SolutionGrid& prev, double xe) {
    Vec g(prev.missing_ic.size() + 1);
    int i = 0;
    for (const auto& [k, v] : prev.missing_ic) g[i++] = v;
    g[i] = xe;
    return g;
}

// x-space warm start: sample the previous solution at x = t * xe_new; the
// stretch beyond the old domain comes from the tail model when available,
// otherwise the terminal values are held
BoxInit box_warm_x(const SolutionGrid& prev, double xe_new,
                   const std::optional<TailModel>& tail) {
    BoxInit in;
    in.x_eps = xe_new;
    const size_t N = prev.mesh.size();
    in.mesh.resize(N);
    in.states.resize(N);
    for (size_t j = 0; j < N; ++j) {
        const double t = prev.mesh[j];
        in.mesh[j] = t;
        const double x = t * xe_new;
        if (x > prev.x_eps && tail) {
            in.states[j] = tail->eval(x);
            continue;
        }
        const double t_old = std::min(1.0, x / prev.x_eps);
        // locate on the previous (uniform) mesh
        const double pos = t_old * (N - 1);
        const size_t lo = std::min(N - 2, static_cast<size_t>(pos));
        const double w = std::clamp(pos - lo, 0.0, 1.0);
        in.states[j] = (1.0 - w) * prev.states[lo] + w * prev.states[lo + 1];
    }
    return in;
}

struct RowContext {
    const Builtin& problem;
    SolverKind solver;
    int grid;
    const NewtonOptions& newton;
    const IvpOptions& ivp;
};

SolveResult solve_cold(const RowContext& cx, double eps) {
    const FreeBvp fb = formulate(cx.problem.spec, eps);
    const NormalizedBvp nb = normalize(fb);
    const Vec guess = cx.problem.info.default_guess
                          ? cx.problem.info.default_guess(eps)
                          : Vec::Ones(nb.free_bvp().unknown_count());
    if (cx.solver == SolverKind::shoot)
        return solve_shoot(nb, guess, cx.newton, cx.ivp);
    // box: shooting presolve where the problem allows it, profile otherwise
    if (cx.problem.info.profile_init) {
        BoxInit init = box_init_profile(fb, guess[0], guess[guess.size() - 1]);
        return solve_box(nb, BoxMesh{cx.grid}, init, cx.newton);
    }
    SolveResult pre = solve_shoot(nb, guess, cx.newton, cx.ivp);
    if (!pre.ok()) return pre;
    return solve_box(nb, BoxMesh{cx.grid}, box_init_from_grid(*pre.grid), cx.newton);
}

SolveResult solve_warm(const RowContext& cx, double eps, const SolutionGrid& prev) {
    const NormalizedBvp nb = normalize(formulate(cx.problem.spec, eps));
    const std::optional<TailModel> tail =
        cx.solver == SolverKind::box ? fit_tail_model(nb, prev) : std::nullopt;
    SolveResult last;
    for (double xe : xeps_candidates(nb, prev, eps)) {
        if (cx.solver == SolverKind::shoot)
            last = solve_shoot(nb, carried_guess(prev, xe), cx.newton, cx.ivp);
        else
            last = solve_box(nb, BoxMesh{cx.grid}, box_warm_x(prev, xe, tail), cx.newton);
        if (last.ok()) return last;
    }
    return last;
}

void validate_ladder(const std::vector<double>& eps_list) {
    if (eps_list.empty()) throw std::invalid_argument("run_sweep: empty eps list");
    for (double e : eps_list)
        if (e == 0.0 || (e > 0) != (eps_list[0] > 0))
            throw std::invalid_argument("run_sweep: eps values must be nonzero and one-signed");
    for (size_t i = 0; i + 1 < eps_list.size(); ++i)
        if (std::abs(eps_list[i + 1]) >= std::abs(eps_list[i]))
            throw std::invalid_argument("run_sweep: |eps| must be strictly decreasing");
}

}  // namespace

SweepReport run_sweep(const Builtin& problem, const std::vector<double>& eps_list,
                      const SweepOptions& opts) {
    validate_ladder(eps_list);
    RowContext cx{problem,
                  opts.solver.value_or(problem.info.default_solver),
                  opts.grid.value_or(problem.info.default_grid),
                  opts.newton, opts.ivp};

    SweepReport rep;
    rep.newton_used = opts.newton;

    if (opts.independent) {
        std::vector<std::future<SolveResult>> futs;
        futs.reserve(eps_list.size());
        for (double eps : eps_list)
            futs.push_back(std::async(std::launch::async,
                                      [&cx, eps] { return solve_cold(cx, eps); }));
        for (size_t i = 0; i < eps_list.size(); ++i) {
            SolveResult r = futs[i].get();
            SweepRow row;
            row.eps = eps_list[i];
            row.ok = r.ok();
            row.status = r.status;
            row.detail = r.detail;
            if (r.ok()) row.grid = std::move(*r.grid);
            rep.rows.push_back(std::move(row));
        }
    } else {
        int last_ok = -1;
        for (size_t i = 0; i < eps_list.size(); ++i) {
            const double eps = eps_list[i];
            SolveResult r = last_ok >= 0 ? solve_warm(cx, eps, rep.rows[last_ok].grid)
                                         : solve_cold(cx, eps);
            SweepRow row;
            row.eps = eps;
            row.ok = r.ok();
            row.status = r.status;
            row.detail = r.detail;
            if (r.ok()) row.grid = std::move(*r.grid);
            rep.rows.push_back(std::move(row));
            if (rep.rows.back().ok) {
                last_ok = static_cast<int>(rep.rows.size()) - 1;
            } else if (i == 0) {
                break;  // nothing to warm-start from: abort the sweep
            }
        }
    }

    int successes = 0;
    for (const auto& r : rep.rows) successes += r.ok;
    if (successes >= 2) {
        auto [ok, viol] = check_golden_rule(rep);
        rep.golden_rule_ok = ok;
        rep.golden_violations = std::move(viol);
    }
    if (problem.closed_form && successes >= 3)
        rep.order_fit = estimate_order(*problem.closed_form, rep, opts.newton.residual_tol);
    return rep;
}

std::pair<bool, std::vector<std::pair<int, int>>> check_golden_rule(const SweepReport& r) {
    std::vector<int> ok_rows;
    for (size_t i = 0; i < r.rows.size(); ++i)
        if (r.rows[i].ok) ok_rows.push_back(static_cast<int>(i));
    if (ok_rows.size() < 2)
        throw std::invalid_argument("check_golden_rule: need at least 2 successful rows");
    std::vector<std::pair<int, int>> violations;
    for (size_t i = 0; i + 1 < ok_rows.size(); ++i) {
        const auto& a = r.rows[ok_rows[i]];
        const auto& b = r.rows[ok_rows[i + 1]];
        if (!(b.grid.x_eps > a.grid.x_eps))
            violations.emplace_back(ok_rows[i], ok_rows[i + 1]);
    }
    return {violations.empty(), violations};
}

std::optional<OrderFit> estimate_order(const ClosedFormSolution& cf,
                                       const SweepReport& report,
                                       double residual_tol) {
    if (!cf.u_exact) return std::nullopt;
    std::vector<double> le, leps;
    double L = 0.0;
    for (const auto& row : report.rows) {
        if (!row.ok) continue;
        double e = 0.0;
        for (size_t j = 0; j < row.grid.mesh.size(); ++j) {
            const double x = row.grid.mesh[j] * row.grid.x_eps;
            e = std::max(e, std::abs(row.grid.states[j][0] - cf.u_exact(x)));
        }
        if (e < 10.0 * residual_tol) continue;  // solver-floor contamination
        le.push_back(std::log(e));
        leps.push_back(std::log(std::abs(row.eps)));
        L = std::max(L, e / std::abs(row.eps));
    }
    if (le.size() < 3) return std::nullopt;
    const int m = static_cast<int>(le.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < m; ++i) {
        sx += leps[i]; sy += le[i]; sxx += leps[i] * leps[i]; sxy += leps[i] * le[i];
    }
    OrderFit fit;
    fit.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    fit.L_fit = L;
    fit.points_used = m;
    return fit;
}

SolveResult solve_single(const Builtin& problem, double eps, const SweepOptions& opts,
                         SweepReport* sweep_out) {
    if (eps == 0.0) throw std::invalid_argument("solve_single: eps must be nonzero");
    std::vector<double> ladder;
    const double sign = eps > 0 ? 1.0 : -1.0;
    for (double mag : problem.info.default_ladder)
        if (mag > std::abs(eps) * (1.0 + 1e-12)) ladder.push_back(sign * mag);
    ladder.push_back(eps);
    SweepReport rep = run_sweep(problem, ladder, opts);
    if (sweep_out) *sweep_out = rep;
    SolveResult out;
    const SweepRow& last = rep.rows.back();
    if (rep.rows.size() == ladder.size() && last.ok) {
        out.status = SolveStatus::converged;
        out.grid = last.grid;
    } else {
        out.status = last.ok ? SolveStatus::max_iters : last.status;
        out.detail = last.ok ? "chain aborted before the target eps" : last.detail;
    }
    return out;
}

}  // namespace fbsolve
