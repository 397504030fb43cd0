#include "fbsolve/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "fbsolve/bench.hpp"
#include "fbsolve/sweep.hpp"

namespace fbsolve {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct CommonFlags {
    std::string problem;
    std::optional<double> P, P1, P2, P3;
    std::string solver;  // "", "shoot", "box"
    int grid = 0;
    double rtol = 1e-12, atol = 1e-14;
    double newton_tol = 0.0;
    int max_iters = 0;
    std::string out_path;
    std::string format = "table";

    Params params() const {
        Params p;
        if (P) p["P"] = *P;
        if (P1) p["P1"] = *P1;
        if (P2) p["P2"] = *P2;
        if (P3) p["P3"] = *P3;
        return p;
    }

    SweepOptions sweep_options(const Builtin& b) const {
        SweepOptions so;
        if (solver == "shoot") so.solver = SolverKind::shoot;
        else if (solver == "box") so.solver = SolverKind::box;
        if (grid > 0) so.grid = grid;
        so.ivp.rel_tol = rtol;
        so.ivp.abs_tol = atol;
        if (newton_tol > 0) so.newton.residual_tol = newton_tol;
        else so.newton.residual_tol =
                 (so.solver.value_or(b.info.default_solver) == SolverKind::box) ? 1e-9 : 1e-10;
        if (max_iters > 0) so.newton.max_iters = max_iters;
        return so;
    }
};

void add_common(CLI::App* cmd, CommonFlags& f, bool need_problem) {
    auto* p = cmd->add_option("--problem", f.problem, "problem name (see `fbsolve list`)");
    if (need_problem) p->required();
    auto opt_param = [cmd](const char* flag, std::optional<double>& slot, const char* desc) {
        cmd->add_option(flag,
                        [&slot](const CLI::results_t& r) {
                            try {
                                size_t used = 0;
                                slot = std::stod(r[0], &used);
                                return used == r[0].size();
                            } catch (...) {
                                return false;
                            }
                        },
                        desc);
    };
    opt_param("--P", f.P, "parameter P");
    opt_param("--P1", f.P1, "parameter P1");
    opt_param("--P2", f.P2, "parameter P2");
    opt_param("--P3", f.P3, "parameter P3");
    cmd->add_option("--solver", f.solver, "shoot | box")
        ->check(CLI::IsMember({"shoot", "box"}));
    cmd->add_option("--grid", f.grid, "box mesh intervals J");
    cmd->add_option("--rtol", f.rtol, "integrator relative tolerance");
    cmd->add_option("--atol", f.atol, "integrator absolute tolerance");
    cmd->add_option("--newton-tol", f.newton_tol, "Newton residual tolerance (RMS)");
    cmd->add_option("--max-iters", f.max_iters, "Newton iteration budget");
    cmd->add_option("--out", f.out_path, "write output to PATH instead of stdout");
    cmd->add_option("--format", f.format, "csv | table")
        ->check(CLI::IsMember({"csv", "table"}));
}

std::ostream& sink(const CommonFlags& f, std::ofstream& file, std::ostream& fallback) {
    if (f.out_path.empty()) return fallback;
    file.open(f.out_path);
    if (!file) throw CLI::ValidationError("--out", "cannot open " + f.out_path);
    return file;
}

std::vector<std::string> ic_columns(const SolutionGrid& g, const char* suffix) {
    std::vector<std::string> cols;
    for (const auto& [k, v] : g.missing_ic) {
        (void)v;
        cols.push_back("d" + std::to_string(k) + "u_dx" + std::to_string(k) + suffix);
    }
    return cols;
}

void write_sweep_csv(std::ostream& os, const SweepReport& rep) {
    // column set from the first successful row (all rows share the problem)
    const SweepRow* ok_row = nullptr;
    for (const auto& r : rep.rows)
        if (r.ok) { ok_row = &r; break; }
    os << "eps,x_eps";
    if (ok_row)
        for (const auto& c : ic_columns(ok_row->grid, "_at_0")) os << "," << c;
    os << ",residual_norm,iterations\n";
    for (const auto& r : rep.rows) {
        os << fmt17(r.eps) << ",";
        if (r.ok) {
            os << fmt17(r.grid.x_eps);
            for (const auto& [k, v] : r.grid.missing_ic) {
                (void)k;
                os << "," << fmt17(v);
            }
            os << "," << fmt17(r.grid.residual_norm) << "," << r.grid.iterations;
        } else {
            if (ok_row)
                for (size_t i = 0; i < ok_row->grid.missing_ic.size() + 2; ++i) os << ",";
            else
                os << ",,";
        }
        os << "\n";
    }
    os << "golden_rule," << (rep.golden_rule_ok ? "ok" : "violated") << "\n";
    if (rep.order_fit)
        os << "order_fit_slope," << fmt17(rep.order_fit->slope) << ",L_fit,"
           << fmt17(rep.order_fit->L_fit) << ",points," << rep.order_fit->points_used << "\n";
}

void write_sweep_table(std::ostream& os, const SweepReport& rep) {
    char buf[512];
    for (const auto& r : rep.rows) {
        if (r.ok) {
            std::ostringstream ics;
            for (const auto& [k, v] : r.grid.missing_ic)
                ics << "  d" << k << "u(0)=" << fmt17(v);
            std::snprintf(buf, sizeof buf, "eps=%-12g x_eps=%-22s%s  residual=%-11g iters=%d\n",
                          r.eps, fmt17(r.grid.x_eps).c_str(), ics.str().c_str(),
                          r.grid.residual_norm, r.grid.iterations);
        } else {
            std::snprintf(buf, sizeof buf, "eps=%-12g FAILED (%s: %s)\n", r.eps,
                          to_string(r.status), r.detail.c_str());
        }
        os << buf;
    }
    os << "golden rule: " << (rep.golden_rule_ok ? "ok" : "violated") << "\n";
    if (rep.order_fit)
        os << "order fit: slope=" << fmt17(rep.order_fit->slope)
           << " L=" << fmt17(rep.order_fit->L_fit)
           << " points=" << rep.order_fit->points_used << "\n";
}

int cmd_solve(const CommonFlags& f, double eps, std::ostream& out) {
    const Builtin b = builtin(f.problem, f.params());
    SweepOptions so = f.sweep_options(b);
    SolveResult r = solve_single(b, eps, so);
    std::ofstream file;
    std::ostream& os = sink(f, file, out);
    if (!r.ok()) {
        os << "solve failed: " << to_string(r.status) << " (" << r.detail << ")\n";
        return 1;
    }
    const auto& g = *r.grid;
    if (f.format == "csv") {
        SweepReport rep;
        SweepRow row;
        row.eps = eps;
        row.ok = true;
        row.grid = g;
        rep.rows.push_back(std::move(row));
        rep.golden_rule_ok = true;
        write_sweep_csv(os, rep);
    } else {
        os << "problem " << f.problem << " eps=" << fmt17(eps) << " ("
           << (g.solver_tag == SolverKind::box ? "box" : "shoot") << ")\n";
        os << "  x_eps = " << fmt17(g.x_eps) << "\n";
        for (const auto& [k, v] : g.missing_ic)
            os << "  d" << k << "u/dx" << k << "(0) = " << fmt17(v) << "\n";
        os << "  residual = " << g.residual_norm << "  iterations = " << g.iterations << "\n";
        if (g.monotone_ok)
            os << "  monotone decay hypothesis: " << (*g.monotone_ok ? "holds" : "violated")
               << " on the grid\n";
    }
    return 0;
}

int cmd_sweep(const CommonFlags& f, std::vector<double> ladder, std::ostream& out) {
    const Builtin b = builtin(f.problem, f.params());
    if (ladder.empty()) {
        for (double mag : b.info.default_ladder)
            ladder.push_back(b.info.default_eps_sign * mag);
    }
    SweepOptions so = f.sweep_options(b);
    SweepReport rep = run_sweep(b, ladder, so);
    std::ofstream file;
    std::ostream& os = sink(f, file, out);
    if (f.format == "csv") write_sweep_csv(os, rep);
    else write_sweep_table(os, rep);
    for (const auto& r : rep.rows)
        if (!r.ok) return 1;
    return 0;
}

int cmd_refine(const CommonFlags& f, double eps, int M, int kmax, std::ostream& out) {
    const Builtin b = builtin(f.problem, f.params());
    if (f.solver == "shoot")
        throw CLI::ValidationError("--solver", "the refinement study requires the box solver");
    SweepOptions so = f.sweep_options(b);
    so.solver = SolverKind::box;
    so.grid = M;
    SolveResult coarse = solve_single(b, eps, so);
    std::ofstream file;
    std::ostream& os = sink(f, file, out);
    if (!coarse.ok()) {
        os << "coarse solve failed: " << to_string(coarse.status) << " (" << coarse.detail
           << ")\n";
        return 1;
    }
    const NormalizedBvp nb = normalize(formulate(b.spec, eps));
    RefinementStudy st =
        refinement_study(nb, M, kmax, box_init_from_grid(*coarse.grid), so.newton);
    const int n = b.spec.order;
    if (f.format == "csv") {
        os << "node_count,u_at_0,du_dx_at_0,x_eps";
        for (int k = 0; k < n; ++k) os << ",d" << k << "u_dx" << k << "_at_x_eps";
        os << ",residual_norm,iterations\n";
        for (const auto& row : st.rows) {
            os << row.node_count << ",";
            if (row.ok) {
                os << fmt17(row.u0) << "," << fmt17(row.du0) << "," << fmt17(row.x_eps);
                for (int k = 0; k < n; ++k) os << "," << fmt17(row.terminal_state[k]);
                os << "," << fmt17(row.residual_norm) << "," << row.iterations;
            } else {
                for (int k = 0; k < n + 5; ++k) os << ",";
            }
            os << "\n";
        }
    } else {
        char buf[256];
        for (const auto& row : st.rows) {
            if (row.ok)
                std::snprintf(buf, sizeof buf, "%6d nodes  u(0)=%-22s u'(0)=%-22s x_eps=%s\n",
                              row.node_count, fmt17(row.u0).c_str(), fmt17(row.du0).c_str(),
                              fmt17(row.x_eps).c_str());
            else
                std::snprintf(buf, sizeof buf, "%6d nodes  FAILED\n", row.node_count);
            os << buf;
        }
    }
    return st.failed_k ? 1 : 0;
}

int cmd_bench(const CommonFlags& f, std::vector<std::string> names, std::ostream& out) {
    if (names.empty()) names = experiment_names();
    std::ofstream file;
    std::ostream& os = sink(f, file, out);
    bool all = true;
    for (const auto& name : names) {
        ExperimentResult r = run_experiment(name);
        if (f.format == "csv") {
            os << "experiment,cell,computed,expected,abs_delta,tolerance,provenance,verdict\n";
            for (const auto& c : r.cells) {
                os << r.name << ",\"" << c.label << "\",";
                if (c.solver_failed) os << ",";
                else os << fmt17(c.computed) << ",";
                os << fmt17(c.expected) << ",";
                if (c.solver_failed) os << ",";
                else os << fmt17(c.delta()) << ",";
                os << fmt17(c.tolerance) << "," << c.provenance << ","
                   << (c.pass() ? "pass" : "fail") << "\n";
            }
        } else {
            os << format_experiment(r) << "\n";
        }
        all = all && r.all_pass();
    }
    return all ? 0 : 1;
}

int cmd_list(std::ostream& out) {
    out << "problems:\n";
    for (const auto& nm : builtin_names()) out << "  " << nm << "\n";
    out << "experiments:\n";
    for (const auto& nm : experiment_names()) out << "  " << nm << "\n";
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"free-boundary solver for BVPs on semi-infinite intervals"};
    app.require_subcommand(1);

    CommonFlags f;
    double eps = 0.0;
    std::vector<double> ladder;
    int M = 125, kmax = 7;
    std::vector<std::string> bench_names;

    auto* solve = app.add_subcommand("solve", "solve one problem at one eps");
    add_common(solve, f, true);
    solve->add_option("--eps", eps, "boundary-derivative size")->required();

    auto* sweep = app.add_subcommand("sweep", "eps-continuation with warm starts");
    add_common(sweep, f, true);
    sweep->add_option("--eps-ladder", ladder, "comma list, decreasing |eps|")->delimiter(',');

    auto* refine = app.add_subcommand("refine", "mesh-doubling refinement study");
    add_common(refine, f, true);
    refine->add_option("--eps", eps, "boundary-derivative size");
    refine->add_option("--M", M, "coarsest interval count");
    refine->add_option("--kmax", kmax, "number of doublings");

    auto* bench = app.add_subcommand("bench", "reproduce the published tables");
    add_common(bench, f, false);
    bench->add_option("names", bench_names, "experiment names (default: all)");

    app.add_subcommand("list", "list problems and experiments");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {  // --help
            out << app.help();
            return 0;
        }
        err << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (solve->parsed()) return cmd_solve(f, eps, out);
        if (sweep->parsed()) return cmd_sweep(f, ladder, out);
        if (refine->parsed()) {
            if (eps == 0.0) eps = 1e-4;
            return cmd_refine(f, eps, M, kmax, out);
        }
        if (bench->parsed()) return cmd_bench(f, bench_names, out);
        return cmd_list(out);
    } catch (const CLI::ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace fbsolve
