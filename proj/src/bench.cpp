#include "fbsolve/bench.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace fbsolve {

namespace {

constexpr const char* kTable = "published-table";
constexpr const char* kClosed = "closed-form";
constexpr const char* kConsistency = "consistency";

std::string label(const char* fmt, double a, double b = 0.0) {
    char buf[128];
    std::snprintf(buf, sizeof buf, fmt, a, b);
    return buf;
}

NewtonOptions tight_newton() {
    NewtonOptions o;
    o.residual_tol = 1e-11;
    return o;
}

IvpOptions tight_ivp() {
    IvpOptions o;
    o.rel_tol = 1e-12;
    o.abs_tol = 1e-14;
    return o;
}

void add_failed(ExperimentResult& out, const std::string& lbl, const char* prov) {
    ExpectedCell c;
    c.label = lbl;
    c.provenance = prov;
    c.solver_failed = true;
    out.cells.push_back(std::move(c));
}

// -------- exact closed-form reproduction (linear / tanh benchmarks) --------

ExperimentResult exact_experiment(const std::string& problem, double cell_tol) {
    ExperimentResult out;
    out.name = "exact_" + (problem == "linear_exp" ? std::string("linear") : std::string("tanh"));
    for (double P : {0.1, 1.0, 10.0}) {
        Builtin b = builtin(problem, {{"P", P}});
        for (double eps : {1e-1, 1e-2, 1e-3}) {
            const NormalizedBvp nb = normalize(formulate(b.spec, eps));
            SolveResult r = solve_shoot(nb, b.info.default_guess(eps), tight_newton(), tight_ivp());
            const std::string tag = label("P=%g eps=%g", P, eps);
            if (!r.ok()) {
                add_failed(out, "max nodal |u-u_fbf| " + tag, kClosed);
                add_failed(out, "x_eps " + tag, kClosed);
                continue;
            }
            const auto& g = *r.grid;
            double maxerr = 0.0;
            for (size_t j = 0; j < g.mesh.size(); ++j) {
                const double x = g.mesh[j] * g.x_eps;
                maxerr = std::max(maxerr,
                                  std::abs(g.states[j][0] - b.closed_form->u_fbf_exact(x, eps)));
            }
            out.cells.push_back({"max nodal |u-u_fbf| " + tag, maxerr, 0.0, cell_tol, kClosed});
            out.cells.push_back({"x_eps " + tag, g.x_eps, b.closed_form->x_eps_exact(eps),
                                 cell_tol, kClosed});
            out.cells.push_back({"u'(0) " + tag, g.missing_ic.at(1), P + eps, cell_tol, kClosed});
        }
    }
    return out;
}

// -------- slender-body flow, published sweep --------

ExperimentResult table1_engine() {
    ExperimentResult out;
    out.name = "table1_engine";
    const Builtin b = builtin("engine", {{"P1", 2.0}, {"P2", 2.0}});
    SweepOptions so;
    so.newton = tight_newton();
    so.newton.residual_tol = 1e-10;
    so.ivp = tight_ivp();
    const std::vector<double> ladder = {1e-6, 1e-7, 1e-8, 1e-9};
    const double d2u[] = {1.441377749, 1.441372413, 1.441371875, 1.441371815};
    const double xe[] = {37.23, 45.62, 54.15, 62.75};
    SweepReport rep = run_sweep(b, ladder, so);
    for (size_t i = 0; i < ladder.size(); ++i) {
        const std::string tag = label("eps=%g", ladder[i]);
        if (i >= rep.rows.size() || !rep.rows[i].ok) {
            add_failed(out, "u''(0) " + tag, kTable);
            add_failed(out, "x_eps " + tag, kTable);
            continue;
        }
        const auto& g = rep.rows[i].grid;
        out.cells.push_back({"u''(0) " + tag, g.missing_ic.at(2), d2u[i], 5e-8, kTable});
        out.cells.push_back({"x_eps " + tag, g.x_eps, xe[i], 0.01 * xe[i], kTable});
    }
    out.cells.push_back({"golden rule", rep.golden_rule_ok ? 1.0 : 0.0, 1.0, 0.0, kConsistency});
    return out;
}

// -------- Sakiadis, published comparison --------

ExperimentResult table2_sakiadis() {
    ExperimentResult out;
    out.name = "table2_sakiadis";
    const Builtin b = builtin("sakiadis");
    SweepOptions so;
    so.newton = tight_newton();
    so.newton.residual_tol = 1e-10;
    so.ivp = tight_ivp();
    SweepReport rep = run_sweep(b, {-1e-4, -1e-5, -1e-6}, so);
    const SweepRow* best = nullptr;  // most-converged = smallest |eps| success
    const SweepRow* nearest10 = nullptr;
    for (const auto& row : rep.rows) {
        if (!row.ok) continue;
        best = &row;
        if (!nearest10 ||
            std::abs(row.grid.x_eps - 10.0) < std::abs(nearest10->grid.x_eps - 10.0))
            nearest10 = &row;
    }
    if (!best) {
        add_failed(out, "u''(0) vs our-source value", kTable);
        add_failed(out, "u''(0) vs shooting literature", kTable);
        add_failed(out, "x_eps near the reported truncation scale", kTable);
        return out;
    }
    const double c = best->grid.missing_ic.at(2);
    out.cells.push_back({label("u''(0) @ eps=%g vs -0.443761", best->eps), c, -0.443761,
                         5e-5, kTable});
    out.cells.push_back({label("u''(0) @ eps=%g vs -0.443747", best->eps), c, -0.443747,
                         5e-5, kTable});
    out.cells.push_back({label("x_eps nearest 10 (row eps=%g)", nearest10->eps),
                         nearest10->grid.x_eps, 10.0, 2.0, kTable});
    return out;
}

// -------- pile, published grid sweep --------

ExperimentResult table3_pile() {
    ExperimentResult out;
    out.name = "table3_pile";
    const Builtin b = builtin("pile");
    SweepOptions so;
    so.solver = SolverKind::box;
    so.grid = 1000;
    so.newton.residual_tol = 1e-9;
    SweepReport rep = run_sweep(b, {1e-1, 1e-2, 1e-3, 1e-4}, so);
    const double xe[] = {6.46, 8.84, 13.13, 17.75};
    const double u0[] = {1.41566, 1.42148, 1.42154, 1.42154};
    const double du0[] = {-0.805665, -0.808104, -0.808146, -0.808144};
    const double d2[] = {-5.9e-2, -4.4e-3, 8.9e-4, -7.0e-5};
    const double d3[] = {-4.1e-2, 5.6e-3, 1.1e-4, -3.0e-5};
    const double d2tol[] = {5e-4, 5e-5, 5e-6, 5e-7};  // half a printed unit
    const double d3tol[] = {5e-4, 5e-5, 5e-6, 5e-7};
    for (size_t i = 0; i < rep.rows.size(); ++i) {
        const std::string tag = label("eps=%g", rep.rows[i].eps);
        if (!rep.rows[i].ok) {
            add_failed(out, "u(0) " + tag, kTable);
            continue;
        }
        const auto& g = rep.rows[i].grid;
        out.cells.push_back({"u(0) " + tag, g.states.front()[0], u0[i], 1e-5, kTable});
        out.cells.push_back({"u'(0) " + tag, g.states.front()[1], du0[i], 1e-6, kTable});
        out.cells.push_back({"x_eps " + tag, g.x_eps, xe[i], 5e-3, kTable});
        out.cells.push_back({"u''(x_eps) " + tag, g.terminal_state()[2], d2[i], d2tol[i], kTable});
        out.cells.push_back({"u'''(x_eps) " + tag, g.terminal_state()[3], d3[i], d3tol[i], kTable});
    }
    out.cells.push_back({"golden rule", rep.golden_rule_ok ? 1.0 : 0.0, 1.0, 0.0, kConsistency});
    return out;
}

// -------- pile mesh refinement --------

ExperimentResult table4_pile_refinement() {
    ExperimentResult out;
    out.name = "table4_pile_refinement";
    const Builtin b = builtin("pile");
    SweepOptions so;
    so.solver = SolverKind::box;
    so.grid = 125;
    so.newton.residual_tol = 1e-9;
    SweepReport rep = run_sweep(b, {1e-1, 1e-2, 1e-3, 1e-4}, so);
    if (rep.rows.empty() || !rep.rows.back().ok) {
        add_failed(out, "coarse chain at eps=1e-4", kTable);
        return out;
    }
    const NormalizedBvp nb = normalize(formulate(b.spec, 1e-4));
    NewtonOptions no;
    no.residual_tol = 1e-9;
    RefinementStudy st =
        refinement_study(nb, 125, 7, box_init_from_grid(rep.rows.back().grid), no);
    const double u0[] = {1.421166, 1.421450, 1.421521, 1.421539,
                         1.421543, 1.421544, 1.421545, 1.421545};
    const double du0[] = {-0.807913, -0.808089, -0.808133, -0.808144,
                          -0.808147, -0.808148, -0.808148, -0.808148};
    for (size_t k = 0; k < st.rows.size(); ++k) {
        const auto& row = st.rows[k];
        const std::string tag = label("%g nodes", static_cast<double>(row.node_count));
        if (!row.ok) {
            add_failed(out, "u(0) @ " + tag, kTable);
            continue;
        }
        out.cells.push_back({"u(0) @ " + tag, row.u0, u0[k], 2e-6, kTable});
        out.cells.push_back({"u'(0) @ " + tag, row.du0, du0[k], 2e-6, kTable});
        if (row.node_count == 2001) {
            out.cells.push_back({"x_eps @ 2001 nodes", row.x_eps, 17.747988, 1e-3, kTable});
            out.cells.push_back({"u''(x_eps) @ 2001 nodes", row.terminal_state[2], -7e-5,
                                 5e-7, kTable});
            out.cells.push_back({"u'''(x_eps) @ 2001 nodes", row.terminal_state[3], -3e-5,
                                 5e-7, kTable});
        }
    }
    return out;
}

}  // namespace

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = {
        "exact_linear", "exact_tanh", "table1_engine", "table2_sakiadis",
        "table3_pile", "table4_pile_refinement"};
    return names;
}

ExperimentResult run_experiment(const std::string& name) {
    if (name == "exact_linear") return exact_experiment("linear_exp", 1e-8);
    if (name == "exact_tanh") return exact_experiment("tanh", 1e-7);
    if (name == "table1_engine") return table1_engine();
    if (name == "table2_sakiadis") return table2_sakiadis();
    if (name == "table3_pile") return table3_pile();
    if (name == "table4_pile_refinement") return table4_pile_refinement();
    std::ostringstream msg;
    msg << "unknown experiment '" << name << "'; valid names:";
    for (const auto& nm : experiment_names()) msg << " " << nm;
    throw std::invalid_argument(msg.str());
}

std::string format_experiment(const ExperimentResult& r) {
    std::ostringstream os;
    os << "experiment: " << r.name << "\n";
    size_t w = 10;
    for (const auto& c : r.cells) w = std::max(w, c.label.size());
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-*s  %22s %22s %12s %10s  %s\n",
                  static_cast<int>(w), "cell", "computed", "expected", "|delta|",
                  "tol", "verdict");
    os << buf;
    for (const auto& c : r.cells) {
        if (c.solver_failed) {
            std::snprintf(buf, sizeof buf, "%-*s  %22s %22.15g %12s %10.3g  FAIL (solver)\n",
                          static_cast<int>(w), c.label.c_str(), "-", c.expected, "-",
                          c.tolerance);
        } else {
            std::snprintf(buf, sizeof buf, "%-*s  %22.15g %22.15g %12.3e %10.3g  %s\n",
                          static_cast<int>(w), c.label.c_str(), c.computed, c.expected,
                          c.delta(), c.tolerance, c.pass() ? "pass" : "FAIL");
        }
        os << buf;
    }
    os << (r.all_pass() ? "ALL PASS" : "FAILURES PRESENT") << "\n";
    return os.str();
}

}  // namespace fbsolve
