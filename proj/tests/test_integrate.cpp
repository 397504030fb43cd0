#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fbsolve/fbf.hpp"
#include "fbsolve/integrate.hpp"

using namespace fbsolve;

TEST_CASE("zero field keeps the state constant") {
    auto sys = [](double, const Vec&, Vec& d) { d.setZero(); };
    Vec y0(3);
    y0 << 1.0, -2.0, 3.5;
    for (auto mode : {IvpOptions::Mode::fixed_step, IvpOptions::Mode::adaptive}) {
        IvpOptions o;
        o.mode = mode;
        o.step_count = 16;
        Trajectory tr = integrate(sys, y0, 0.0, 1.0, o);
        CHECK(tr.status == IvpStatus::ok);
        CHECK((tr.back() - y0).norm() == 0.0);
    }
}

TEST_CASE("adaptive run hits the closed-form terminal value of the linear FBF") {
    // normalized linear_exp (P=1, eps=1e-3) from the exact initial state:
    // u(0)=0, u'(0)=P+eps, x_eps = ln((P+eps)/eps); terminal u must be 1
    const double P = 1.0, eps = 1e-3;
    auto b = builtin("linear_exp", {{"P", P}});
    NormalizedBvp nb = normalize(formulate(b.spec, eps));
    Vec Y0(3);
    Y0 << 0.0, P + eps, std::log((P + eps) / eps);
    IvpOptions o;
    o.rel_tol = 1e-12;
    o.abs_tol = 1e-14;
    auto sys = [&nb](double t, const Vec& y, Vec& d) { nb.eval_aug(t, y, d); };
    Trajectory tr = integrate(sys, Y0, 0.0, 1.0, o);
    REQUIRE(tr.status == IvpStatus::ok);
    CHECK(std::abs(tr.back()[0] - 1.0) <= 1e-10);
    CHECK(std::abs(tr.back()[1] - eps) <= 1e-10);
}

TEST_CASE("augmented x_eps component stays bitwise constant in fixed mode") {
    auto b = builtin("tanh", {{"P", 1.0}});
    NormalizedBvp nb = normalize(formulate(b.spec, 1e-2));
    Vec Y0(3);
    Y0 << 0.0, 1.01, 2.983343;
    IvpOptions o;
    o.mode = IvpOptions::Mode::fixed_step;
    o.step_count = 64;
    auto sys = [&nb](double t, const Vec& y, Vec& d) { nb.eval_aug(t, y, d); };
    Trajectory tr = integrate(sys, Y0, 0.0, 1.0, o);
    REQUIRE(tr.status == IvpStatus::ok);
    for (const auto& y : tr.y) CHECK(y[2] == Y0[2]);
}

TEST_CASE("fixed-step scheme shows 4th-order convergence on both closed forms") {
    for (const char* name : {"linear_exp", "tanh"}) {
        const double P = 1.0, eps = 1e-3;
        auto b = builtin(name, {{"P", P}});
        NormalizedBvp nb = normalize(formulate(b.spec, eps));
        const double xe = b.closed_form->x_eps_exact(eps);
        Vec Y0(3);
        Y0 << 0.0, P + eps, xe;  // exact initial slope
        auto sys = [&nb](double t, const Vec& y, Vec& d) { nb.eval_aug(t, y, d); };

        auto run = [&](int N) {
            IvpOptions o;
            o.mode = IvpOptions::Mode::fixed_step;
            o.step_count = N;
            Trajectory tr = integrate(sys, Y0, 0.0, 1.0, o);
            REQUIRE(tr.status == IvpStatus::ok);
            double maxe = 0.0;
            for (size_t j = 0; j < tr.t.size(); ++j)
                maxe = std::max(maxe, std::abs(tr.y[j][0] -
                                               b.closed_form->u_fbf_exact(tr.t[j] * xe, eps)));
            return std::pair<double, double>{maxe, std::abs(tr.back()[0] - 1.0)};
        };
        const auto [e40, t40] = run(40);
        const auto [e80, t80] = run(80);
        const double order = std::log2(e40 / e80);
        CAPTURE(name);
        CAPTURE(e40);
        CAPTURE(e80);
        CHECK(order >= 3.7);
        CHECK(order <= 4.3);
        // terminal-value Richardson ratio sits in the 4th-order window too,
        // though endpoint cancellation inflates it somewhat off exactly 16
        const double ratio = t40 / t80;
        CHECK(ratio >= 12.0);
        CHECK(ratio <= 30.0);
    }
}

TEST_CASE("finite-time blow-up is reported as divergence, not NaN output") {
    // y' = y^2 from y(0)=1 blows up at t=1
    auto sys = [](double, const Vec& y, Vec& d) { d[0] = y[0] * y[0]; };
    Vec y0(1);
    y0 << 1.0;
    IvpOptions o;
    Trajectory tr = integrate(sys, y0, 0.0, 2.0, o);
    CHECK(tr.status == IvpStatus::diverged);
    CHECK(tr.t_stop < 1.1);
    for (const auto& y : tr.y) CHECK(std::isfinite(y[0]));

    o.mode = IvpOptions::Mode::fixed_step;
    o.step_count = 64;
    Trajectory tf = integrate(sys, y0, 0.0, 2.0, o);
    CHECK(tf.status == IvpStatus::diverged);
}

TEST_CASE("step budget exhaustion is reported") {
    auto sys = [](double, const Vec& y, Vec& d) { d[0] = y[0]; };
    Vec y0(1);
    y0 << 1.0;
    IvpOptions o;
    o.max_steps = 3;
    o.rel_tol = 1e-13;
    o.abs_tol = 1e-15;
    Trajectory tr = integrate(sys, y0, 0.0, 10.0, o);
    CHECK(tr.status == IvpStatus::max_steps_exceeded);
}

TEST_CASE("argument validation") {
    auto sys = [](double, const Vec&, Vec& d) { d.setZero(); };
    Vec y0(1);
    y0 << 0.0;
    CHECK_THROWS_AS(integrate(sys, y0, 1.0, 0.0, {}), std::invalid_argument);
    IvpOptions bad;
    bad.mode = IvpOptions::Mode::fixed_step;
    bad.step_count = 1;
    CHECK_THROWS_AS(integrate(sys, y0, 0.0, 1.0, bad), std::invalid_argument);
    bad.mode = IvpOptions::Mode::adaptive;
    bad.rel_tol = 0.0;
    CHECK_THROWS_AS(integrate(sys, y0, 0.0, 1.0, bad), std::invalid_argument);
}
