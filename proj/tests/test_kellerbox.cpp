#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fbsolve/kellerbox.hpp"
#include "fbsolve/shoot.hpp"
#include "fbsolve/sweep.hpp"

using namespace fbsolve;

TEST_CASE("assembled residual has the square dimension count") {
    auto pile = builtin("pile");
    NormalizedBvp nb = normalize(formulate(pile.spec, 1e-4));
    BoxMesh mesh{1000};
    Vec Z = Vec::Ones(4 * 1001 + 1);
    Vec r = assemble_residual(nb, mesh, Z);
    CHECK(r.size() == 4 * 1001 + 1);
    Vec wrong = Vec::Ones(17);
    CHECK_THROWS_AS(assemble_residual(nb, mesh, wrong), std::invalid_argument);
}

TEST_CASE("constant field with matching boundary data gives an exactly zero residual") {
    // custom spec: u'' = 0 with boundary data making a constant state exact
    ProblemSpec s;
    s.name = "const";
    s.order = 2;
    s.rhs = [](double, const Vec&) { return 0.0; };
    s.left_conditions = {{1, 0.0}};
    s.asymptotic_conditions = {{0, 1.0}};
    s.validate();
    FreeBvp fb = formulate(s, 1e-3);
    // overwrite the eps-condition so the constant state is an exact root:
    // u(x_eps) = 1 and u'(x_eps) = 0 close the system at any x_eps
    fb.right_conditions[1].target = 0.0;
    NormalizedBvp nb = normalize(fb);
    BoxMesh mesh{8};
    Vec Z(2 * 9 + 1);
    for (int j = 0; j <= 8; ++j) {
        Z[2 * j] = 1.0;
        Z[2 * j + 1] = 0.0;
    }
    Z[2 * 9] = 3.0;
    Vec r = assemble_residual(nb, mesh, Z);
    CHECK(r.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("box residual of the sampled tanh closed form scales as h^2") {
    const double P = 1.0, eps = 1e-3;
    auto b = builtin("tanh", {{"P", P}});
    NormalizedBvp nb = normalize(formulate(b.spec, eps));
    const double a = std::sqrt((P + eps) / P);
    const double xe = b.closed_form->x_eps_exact(eps);
    auto sample = [&](int J) {
        BoxMesh mesh{J};
        Vec Z(2 * (J + 1) + 1);
        for (int j = 0; j <= J; ++j) {
            const double x = mesh.node(j) * xe;
            Z[2 * j] = a * std::tanh(a * P * x);
            Z[2 * j + 1] = a * a * P / std::pow(std::cosh(a * P * x), 2);
        }
        Z[2 * (J + 1)] = xe;
        Vec r = assemble_residual(nb, mesh, Z);
        return r.lpNorm<Eigen::Infinity>();
    };
    const double rA = sample(250);
    const double rB = sample(500);
    const double ratio = rA / rB;
    CAPTURE(rA);
    CAPTURE(rB);
    CHECK(ratio >= 3.5);
    CHECK(ratio <= 4.5);
}

TEST_CASE("linear problem: box error drops fourfold when J doubles") {
    const double P = 1.0, eps = 1e-2;
    auto b = builtin("linear_exp", {{"P", P}});
    NormalizedBvp nb = normalize(formulate(b.spec, eps));
    auto solve_err = [&](int J) {
        SolveResult pre = solve_shoot(nb, b.info.default_guess(eps));
        REQUIRE(pre.ok());
        SolveResult r = solve_box(nb, BoxMesh{J}, box_init_from_grid(*pre.grid));
        REQUIRE(r.ok());
        double e = 0.0;
        const auto& g = *r.grid;
        for (size_t j = 0; j < g.mesh.size(); ++j)
            e = std::max(e, std::abs(g.states[j][0] -
                                     b.closed_form->u_fbf_exact(g.mesh[j] * g.x_eps, eps)));
        return e;
    };
    const double e100 = solve_err(100);
    const double e200 = solve_err(200);
    CAPTURE(e100);
    CAPTURE(e200);
    CHECK(e100 / e200 >= 3.4);
    CHECK(e100 / e200 <= 4.6);
}

TEST_CASE("pile at 1001 nodes reproduces the published row at eps=1e-4") {
    auto b = builtin("pile");
    SweepOptions so;
    so.solver = SolverKind::box;
    so.grid = 1000;
    so.newton.residual_tol = 1e-9;
    SweepReport rep = run_sweep(b, {1e-1, 1e-2, 1e-3, 1e-4}, so);
    REQUIRE(rep.rows.size() == 4);
    REQUIRE(rep.rows.back().ok);
    const auto& g = rep.rows.back().grid;
    CHECK(g.states.front()[0] == doctest::Approx(1.42154).epsilon(1e-4));
    CHECK(g.states.front()[1] == doctest::Approx(-0.808144).epsilon(1e-4));
    CHECK(g.x_eps == doctest::Approx(17.75).epsilon(0.02));
    CHECK(g.solver_tag == SolverKind::box);
    // terminal derivative pair: signs and magnitudes from the published table
    CHECK(g.terminal_state()[2] == doctest::Approx(-7.0e-5).epsilon(0.05));
    CHECK(g.terminal_state()[3] == doctest::Approx(-3.0e-5).epsilon(0.05));
    CHECK_FALSE(g.monotone_ok.has_value());
}

TEST_CASE("refinement study doubles the mesh and settles monotonically") {
    auto b = builtin("pile");
    SweepOptions so;
    so.solver = SolverKind::box;
    so.grid = 125;
    so.newton.residual_tol = 1e-9;
    SweepReport rep = run_sweep(b, {1e-1, 1e-2, 1e-3, 1e-4}, so);
    REQUIRE(rep.rows.back().ok);
    NormalizedBvp nb = normalize(formulate(b.spec, 1e-4));
    NewtonOptions no;
    no.residual_tol = 1e-9;
    RefinementStudy st = refinement_study(nb, 125, 3, box_init_from_grid(rep.rows.back().grid), no);
    REQUIRE(st.rows.size() == 4);
    CHECK_FALSE(st.failed_k.has_value());
    const int expect_nodes[] = {126, 251, 501, 1001};
    for (int k = 0; k <= 3; ++k) {
        CHECK(st.rows[k].node_count == expect_nodes[k]);
        CHECK(st.rows[k].ok);
    }
    // settling: successive u(0) changes shrink
    for (size_t k = 2; k < st.rows.size(); ++k) {
        const double d_prev = std::abs(st.rows[k - 1].u0 - st.rows[k - 2].u0);
        const double d_cur = std::abs(st.rows[k].u0 - st.rows[k - 1].u0);
        CHECK(d_cur <= d_prev);
    }
    CHECK(st.rows[3].u0 == doctest::Approx(1.421539).epsilon(2e-6));
    CHECK_THROWS_AS(refinement_study(nb, 1, 2, box_init_from_grid(rep.rows.back().grid), no),
                    std::invalid_argument);
}

TEST_CASE("singular linearized systems are reported, not crashed on") {
    // a custom right condition that ignores the state makes a zero row
    auto lin = builtin("linear_exp", {{"P", 1.0}});
    FreeBvp fb = formulate(lin.spec, 1e-2);
    fb.right_conditions[1].kind = RightCondition::Kind::custom;
    fb.right_conditions[1].custom = [](const Vec&, double, double) { return 0.5; };
    NormalizedBvp nb = normalize(fb);
    BoxInit init;
    init.x_eps = 4.0;
    init.mesh = {0.0, 1.0};
    Vec a(2), bb(2);
    a << 0.0, 1.0;
    bb << 1.0, 0.0;
    init.states = {a, bb};
    SolveResult r = solve_box(nb, BoxMesh{16}, init);
    CHECK_FALSE(r.ok());
}
