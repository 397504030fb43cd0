#include "fbsolve/kellerbox.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

namespace fbsolve {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// residual layout: [left conditions (L); n per interval (nJ); right conditions (R)]
struct Layout {
    int n, J, L, R;
    int unknowns() const { return n * (J + 1) + 1; }
    int xeps_col() const { return n * (J + 1); }
    int interval_row(int j) const { return L + n * j; }
    int right_row() const { return L + n * J; }
};

Layout layout_of(const NormalizedBvp& nb, const BoxMesh& mesh) {
    return {nb.order(), mesh.intervals,
            static_cast<int>(nb.free_bvp().left_known.size()),
            static_cast<int>(nb.free_bvp().right_conditions.size())};
}

Vec assemble(const NormalizedBvp& nb, const BoxMesh& mesh, const Vec& Z,
             const std::vector<int>& sector) {
    const Layout lo = layout_of(nb, mesh);
    const int n = lo.n, J = lo.J;
    const double h = mesh.h();
    Vec R(lo.unknowns());
    const double xe = Z[lo.xeps_col()];

    const auto& left = nb.free_bvp().left_known;
    for (int i = 0; i < lo.L; ++i) R[i] = Z[left[i].deriv] - left[i].value;

    Vec Ym(n + 1), F(n + 1);
    Ym[n] = xe;
    for (int j = 0; j < J; ++j) {
        const double tm = (j + 0.5) * h;
        for (int k = 0; k < n; ++k) Ym[k] = 0.5 * (Z[n * j + k] + Z[n * (j + 1) + k]);
        nb.eval_aug(tm, Ym, F);
        const int r0 = lo.interval_row(j);
        for (int k = 0; k < n; ++k)
            R[r0 + k] = (Z[n * (j + 1) + k] - Z[n * j + k]) / h - F[k];
    }

    const Vec y_end = Z.segment(n * J, n);
    Vec rr = sector.empty() ? nb.right_residuals(y_end, xe)
                            : nb.right_residuals_sector(y_end, xe, sector);
    R.segment(lo.right_row(), lo.R) = rr;
    return R;
}

SpMat jacobian(const NormalizedBvp& nb, const BoxMesh& mesh, const Vec& Z,
               const std::vector<int>& sector) {
    const Layout lo = layout_of(nb, mesh);
    const int n = lo.n, J = lo.J;
    const double h = mesh.h();
    const double xe = Z[lo.xeps_col()];
    const double dd = 1.4901161193847656e-08;

    std::vector<Triplet> trip;
    trip.reserve(static_cast<size_t>(J) * n * (2 * n + 1) + 4 * (n + 2));

    const auto& left = nb.free_bvp().left_known;
    for (int i = 0; i < lo.L; ++i) trip.emplace_back(i, left[i].deriv, 1.0);

    Vec Ym(n + 1), F0(n + 1), Fp(n + 1);
    Ym[n] = xe;
    Eigen::MatrixXd JF(n, n);
    Vec dFdxe(n);
    for (int j = 0; j < J; ++j) {
        const double tm = (j + 0.5) * h;
        for (int k = 0; k < n; ++k) Ym[k] = 0.5 * (Z[n * j + k] + Z[n * (j + 1) + k]);
        nb.eval_aug(tm, Ym, F0);
        for (int k = 0; k < n; ++k) {
            const double d = dd * std::max(1.0, std::abs(Ym[k]));
            const double save = Ym[k];
            Ym[k] += d;
            nb.eval_aug(tm, Ym, Fp);
            Ym[k] = save;
            for (int a = 0; a < n; ++a) JF(a, k) = (Fp[a] - F0[a]) / d;
        }
        {
            const double d = dd * std::max(1.0, std::abs(xe));
            Ym[n] = xe + d;
            nb.eval_aug(tm, Ym, Fp);
            Ym[n] = xe;
            for (int a = 0; a < n; ++a) dFdxe[a] = (Fp[a] - F0[a]) / d;
        }
        const int r0 = lo.interval_row(j);
        for (int a = 0; a < n; ++a) {
            trip.emplace_back(r0 + a, n * j + a, -1.0 / h);
            trip.emplace_back(r0 + a, n * (j + 1) + a, 1.0 / h);
            for (int b = 0; b < n; ++b) {
                trip.emplace_back(r0 + a, n * j + b, -0.5 * JF(a, b));
                trip.emplace_back(r0 + a, n * (j + 1) + b, -0.5 * JF(a, b));
            }
            trip.emplace_back(r0 + a, lo.xeps_col(), -dFdxe[a]);
        }
    }

    // right-condition rows by differentiating each condition at the terminal node
    const Vec y_end = Z.segment(n * J, n);
    const auto& rcs = nb.free_bvp().right_conditions;
    for (int i = 0; i < lo.R; ++i) {
        const int row = lo.right_row() + i;
        const auto& rc = rcs[i];
        if (rc.kind == RightCondition::Kind::value) {
            trip.emplace_back(row, n * J + rc.comp, 1.0);
        } else if (rc.kind == RightCondition::Kind::abs_sum) {
            for (size_t q = 0; q < rc.abs_comps.size(); ++q) {
                const int c = rc.abs_comps[q];
                double s;
                if (!sector.empty()) s = sector[q];
                else s = y_end[c] >= 0.0 ? 1.0 : -1.0;
                trip.emplace_back(row, n * J + c, s);
            }
        } else {
            const double base = rc.custom(y_end, xe, nb.eps());
            Vec yp = y_end;
            for (int c = 0; c < n; ++c) {
                const double d = 1e-7 * std::max(1.0, std::abs(y_end[c]));
                yp[c] = y_end[c] + d;
                trip.emplace_back(row, n * J + c, (rc.custom(yp, xe, nb.eps()) - base) / d);
                yp[c] = y_end[c];
            }
            const double d = 1e-7 * std::max(1.0, std::abs(xe));
            trip.emplace_back(row, lo.xeps_col(),
                              (rc.custom(y_end, xe + d, nb.eps()) - base) / d);
        }
    }

    SpMat A(lo.unknowns(), lo.unknowns());
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
}

Vec init_vector(const NormalizedBvp& nb, const BoxMesh& mesh, const BoxInit& init) {
    const int n = nb.order();
    const int J = mesh.intervals;
    Vec Z(n * (J + 1) + 1);
    // linear interpolation of the init states onto the mesh nodes
    const auto& tm = init.mesh;
    for (int j = 0; j <= J; ++j) {
        const double t = mesh.node(j);
        auto it = std::upper_bound(tm.begin(), tm.end(), t);
        size_t hi = std::min<size_t>(tm.size() - 1, std::distance(tm.begin(), it));
        size_t lo_i = hi == 0 ? 0 : hi - 1;
        double w = 0.0;
        if (hi != lo_i && tm[hi] > tm[lo_i]) w = (t - tm[lo_i]) / (tm[hi] - tm[lo_i]);
        for (int k = 0; k < n; ++k)
            Z[n * j + k] = (1.0 - w) * init.states[lo_i][k] + w * init.states[hi][k];
    }
    Z[n * (J + 1)] = init.x_eps;
    return Z;
}

struct BoxRun {
    SolveStatus status = SolveStatus::converged;
    Vec Z;
    double residual_norm = 0.0;
    int iterations = 0;
    std::string detail;
};

BoxRun newton_box(const NormalizedBvp& nb, const BoxMesh& mesh, Vec Z,
                  const NewtonOptions& opts, const std::vector<int>& sector) {
    BoxRun run;
    const Layout lo = layout_of(nb, mesh);
    Vec r = assemble(nb, mesh, Z, sector);
    double nr = rms_norm(r);
    std::vector<double> history = {nr};

    Eigen::SparseLU<SpMat> lu;
    for (int it = 0; it < opts.max_iters; ++it) {
        if (nr <= opts.residual_tol) {
            run.Z = std::move(Z);
            run.residual_norm = nr;
            run.iterations = it;
            return run;
        }
        SpMat A = jacobian(nb, mesh, Z, sector);
        lu.compute(A);
        if (lu.info() != Eigen::Success) {
            run.status = SolveStatus::singular_system;
            std::ostringstream os;
            os << "sparse LU failed (" << lu.lastErrorMessage() << ")";
            run.detail = os.str();
            run.iterations = it;
            run.residual_norm = nr;
            return run;
        }
        Vec step = lu.solve(-r);
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
        bool accepted = false, any_admissible = false;
        for (int hh = 0; hh <= opts.max_halvings; ++hh) {
            Vec Zt = Z + lam * step;
            if (Zt[lo.xeps_col()] > 0.0) {
                any_admissible = true;
                Vec rt = assemble(nb, mesh, Zt, sector);
                if (rt.allFinite()) {
                    const double nt = rms_norm(rt);
                    if (nt < nr) {
                        Z = std::move(Zt);
                        r = std::move(rt);
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
            run.detail = any_admissible ? "no step length reduced the residual"
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
            run.detail = "residual stopped decreasing";
            run.iterations = static_cast<int>(history.size()) - 1;
            run.residual_norm = nr;
            return run;
        }
    }
    run.status = SolveStatus::max_iters;
    run.detail = "iteration budget exhausted";
    run.iterations = opts.max_iters;
    run.residual_norm = nr;
    return run;
}

std::vector<std::vector<int>> box_sector_order(const NormalizedBvp& nb, const Vec& Z0,
                                               const BoxMesh& mesh) {
    auto sectors = enumerate_sectors(nb.free_bvp());
    if (sectors.size() == 1) return sectors;
    const int n = nb.order();
    const Vec y_end = Z0.segment(n * mesh.intervals, n);
    auto warm = sector_of(nb.free_bvp(), y_end);
    std::stable_sort(sectors.begin(), sectors.end(),
                     [&warm](const std::vector<int>& a, const std::vector<int>& b) {
                         int da = 0, db = 0;
                         for (size_t i = 0; i < warm.size(); ++i) {
                             da += a[i] != warm[i];
                             db += b[i] != warm[i];
                         }
                         return da < db;
                     });
    return sectors;
}

SolutionGrid grid_from(const NormalizedBvp& nb, const BoxMesh& mesh, const BoxRun& run) {
    const int n = nb.order();
    const int J = mesh.intervals;
    SolutionGrid g;
    g.mesh.resize(J + 1);
    g.states.resize(J + 1);
    for (int j = 0; j <= J; ++j) {
        g.mesh[j] = mesh.node(j);
        g.states[j] = run.Z.segment(n * j, n);
    }
    g.x_eps = run.Z[n * (J + 1)];
    g.eps = nb.eps();
    for (int k : nb.free_bvp().unknown_left_indices) g.missing_ic[k] = g.states[0][k];
    // full assembled residual with the exact (abs-form) closing condition;
    // equals the Newton system's residual at a sector-consistent root
    g.residual_norm = rms_norm(assemble(nb, mesh, run.Z, {}));
    g.iterations = run.iterations;
    g.solver_tag = SolverKind::box;
    g.monotone_ok = monotone_decay_ok(nb.free_bvp(), g.states);
    return g;
}

}  // namespace

Vec assemble_residual(const NormalizedBvp& nb, const BoxMesh& mesh, const Vec& Z) {
    if (Z.size() != nb.order() * (mesh.intervals + 1) + 1)
        throw std::invalid_argument("assemble_residual: unknown vector has wrong size");
    return assemble(nb, mesh, Z, {});
}

BoxInit box_init_from_grid(const SolutionGrid& g) {
    BoxInit in;
    in.states = g.states;
    in.mesh = g.mesh;
    in.x_eps = g.x_eps;
    return in;
}

BoxInit box_init_profile(const FreeBvp& fb, double u0_guess, double x_eps_guess) {
    const int n = fb.base.order;
    BoxInit in;
    in.x_eps = x_eps_guess;
    // terminal value of u: the asymptotic condition on derivative 0 if present
    double u_inf = 0.0;
    for (const auto& c : fb.base.asymptotic_conditions)
        if (c.deriv == 0) u_inf = c.value;
    double u0 = u0_guess;
    for (const auto& c : fb.left_known)
        if (c.deriv == 0) u0 = c.value;
    Vec left = Vec::Zero(n);
    for (const auto& c : fb.left_known) left[c.deriv] = c.value;
    left[0] = u0;
    if (n > 1 && left[1] == 0.0) left[1] = (u_inf - u0) / x_eps_guess;

    const int N = 33;
    in.mesh.resize(N);
    in.states.resize(N);
    for (int j = 0; j < N; ++j) {
        const double t = static_cast<double>(j) / (N - 1);
        in.mesh[j] = t;
        Vec y = left;
        y[0] = u0 + (u_inf - u0) * t;
        for (int k = 1; k < n; ++k) y[k] = left[k] * (1.0 - t);
        in.states[j] = y;
    }
    return in;
}

SolveResult solve_box(const NormalizedBvp& nb, const BoxMesh& mesh, const BoxInit& init,
                      const NewtonOptions& opts) {
    SolveResult res;
    if (mesh.intervals < 2) {
        res.status = SolveStatus::singular_system;
        res.detail = "mesh needs at least 2 intervals";
        return res;
    }
    if (!(init.x_eps > 0.0)) {
        res.status = SolveStatus::free_boundary_collapse;
        res.detail = "init x_eps must be positive";
        return res;
    }
    const Vec Z0 = init_vector(nb, mesh, init);

    BoxRun best;
    bool have_failure = false;
    for (const auto& sector : box_sector_order(nb, Z0, mesh)) {
        BoxRun run = newton_box(nb, mesh, Z0, opts, sector);
        if (run.status == SolveStatus::converged) {
            const Vec y_end = run.Z.segment(nb.order() * mesh.intervals, nb.order());
            if (sector.empty() || sector_consistent(nb.free_bvp(), y_end, sector)) {
                SolutionGrid g = grid_from(nb, mesh, run);
                g.sector = sector;
                res.status = SolveStatus::converged;
                res.grid = std::move(g);
                return res;
            }
            continue;
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

RefinementStudy refinement_study(const NormalizedBvp& nb, int M, int k_max,
                                 const BoxInit& coarse_init, const NewtonOptions& opts) {
    if (M < 2) throw std::invalid_argument("refinement_study: M >= 2 required");
    RefinementStudy study;
    study.M = M;
    study.k_max = k_max;
    BoxInit init = coarse_init;
    for (int k = 0; k <= k_max; ++k) {
        const BoxMesh mesh{M * (1 << k)};
        SolveResult r = solve_box(nb, mesh, init, opts);
        RefinementRow row;
        row.node_count = mesh.node_count();
        row.ok = r.ok();
        if (r.ok()) {
            const auto& g = *r.grid;
            row.u0 = g.states.front()[0];
            row.du0 = nb.order() > 1 ? g.states.front()[1] : 0.0;
            row.x_eps = g.x_eps;
            row.terminal_state = g.states.back();
            row.residual_norm = g.residual_norm;
            row.iterations = g.iterations;
            init = box_init_from_grid(g);
        } else {
            row.u0 = row.du0 = row.x_eps = row.residual_norm = 0.0;
            row.iterations = 0;
            if (!study.failed_k) study.failed_k = k;
            study.rows.push_back(row);
            break;  // later levels have no usable warm start
        }
        study.rows.push_back(row);
    }
    return study;
}

}  // namespace fbsolve
