#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fbsolve/fbf.hpp"

using namespace fbsolve;

TEST_CASE("formulate builds the terminal condition pair for one asymptotic condition") {
    auto lin = builtin("linear_exp", {{"P", 1.0}});
    FreeBvp fb = formulate(lin.spec, 0.1);
    REQUIRE(fb.right_conditions.size() == 2);
    CHECK(fb.unknown_left_indices == std::vector<int>{1});

    // exact terminal state: u = 1, u' = 0.1 at x_eps = ln 11
    Vec y(2);
    y << 1.0, 0.1;
    Vec r = fb.right_residuals(y, std::log(11.0));
    CHECK(std::abs(r[0]) <= 1e-15);
    CHECK(std::abs(r[1]) <= 1e-15);
}

TEST_CASE("formulate transcribes the Sakiadis terminal conditions") {
    auto sak = builtin("sakiadis");
    FreeBvp fb = formulate(sak.spec, -1e-6);
    REQUIRE(fb.right_conditions.size() == 2);
    Vec y(3);
    y << 1.6, 0.25, -0.5;
    Vec r = fb.right_residuals(y, 5.0);
    CHECK(r[0] == doctest::Approx(0.25));          // u'(x_eps) - 0
    CHECK(r[1] == doctest::Approx(-0.5 + 1e-6));   // u''(x_eps) - eps
}

TEST_CASE("formulate squares the pile system with the abs closing condition") {
    auto pile = builtin("pile", {{"P1", 1.0}, {"P2", 0.5}, {"P3", 0.5}});
    FreeBvp fb = formulate(pile.spec, 1e-4);
    CHECK(fb.right_conditions.size() == 3);
    CHECK(fb.unknown_left_indices == std::vector<int>{0, 1});
    CHECK(fb.right_conditions.size() == fb.unknown_left_indices.size() + 1);
    auto idx = fb.abs_condition_index();
    REQUIRE(idx.has_value());
    CHECK(fb.right_conditions[*idx].abs_comps == std::vector<int>{2, 3});

    Vec y(4);
    y << 0.0, 0.0, -7e-5, -3e-5;
    Vec r = fb.right_residuals(y, 17.75);
    CHECK(std::abs(r[2]) <= 1e-18);  // |u''| + |u'''| equals eps exactly here
}

TEST_CASE("formulate rejects degenerate input") {
    auto lin = builtin("linear_exp", {{"P", 1.0}});
    CHECK_THROWS_AS(formulate(lin.spec, 0.0), std::invalid_argument);

    // asymptotic condition on the top derivative: no room for the eps-condition
    ProblemSpec s;
    s.name = "top-derivative";
    s.order = 2;
    s.rhs = [](double, const Vec&) { return 0.0; };
    s.left_conditions = {{0, 0.0}};
    s.asymptotic_conditions = {{1, 0.0}};
    s.validate();
    CHECK_THROWS_AS(formulate(s, 1e-3), std::invalid_argument);

    // the abs-sum closing condition needs a positive eps
    auto pile = builtin("pile");
    CHECK_THROWS_AS(formulate(pile.spec, -1e-4), std::invalid_argument);
}

TEST_CASE("condition counts square for every built-in") {
    for (const auto& name : builtin_names()) {
        Params p;
        if (name == "linear_exp" || name == "nonautonomous_exp" || name == "tanh")
            p["P"] = 1.0;
        auto b = builtin(name, p);
        const double eps = b.info.default_eps_sign * 1e-2;
        FreeBvp fb = formulate(b.spec, eps);
        CHECK(fb.right_conditions.size() == fb.unknown_left_indices.size() + 1);
    }
}

TEST_CASE("normalized system: x_eps component has zero derivative everywhere") {
    auto lin = builtin("linear_exp", {{"P", 1.0}});
    NormalizedBvp nb = normalize(formulate(lin.spec, 1e-2));
    Vec Y(3), out(3);
    Y << 0.3, 0.9, 4.2;
    for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        nb.eval_aug(t, Y, out);
        CHECK(out[2] == 0.0);
    }
    CHECK(nb.dim_aug() == 3);
    CHECK_FALSE(nb.admissible((Vec(3) << 0, 0, -1.0).finished()));
}

TEST_CASE("mapped closed-form solutions have zero defect under eval_aug") {
    // tanh FBF (P=1, eps=1e-3): Y(t) = (u(t xe), u'(t xe), xe) must satisfy
    // dY/dt = eval_aug to round-off; derivatives evaluated analytically
    const double P = 1.0, eps = 1e-3;
    auto th = builtin("tanh", {{"P", P}});
    NormalizedBvp nb = normalize(formulate(th.spec, eps));
    const double a = std::sqrt((P + eps) / P);
    const double xe = th.closed_form->x_eps_exact(eps);
    auto u = [&](double x) { return a * std::tanh(a * P * x); };
    auto du = [&](double x) { return a * a * P / std::pow(std::cosh(a * P * x), 2); };
    auto d2u = [&](double x) {
        return -2.0 * std::pow(a, 3) * P * P * std::tanh(a * P * x) /
               std::pow(std::cosh(a * P * x), 2);
    };
    Vec Y(3), out(3);
    for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const double x = t * xe;
        Y << u(x), du(x), xe;
        nb.eval_aug(t, Y, out);
        CHECK(std::abs(out[0] - xe * du(x)) <= 1e-12);
        CHECK(std::abs(out[1] - xe * d2u(x)) <= 1e-12);
        CHECK(out[2] == 0.0);
    }
    // and the terminal residuals vanish on the closed form
    Y << u(xe), du(xe), xe;
    Vec r = nb.right_residuals(Y.head(2), xe);
    CHECK(std::abs(r[0]) <= 1e-12);
    CHECK(std::abs(r[1]) <= 1e-12);
}

TEST_CASE("round trip: normalized evaluation matches the x-space system") {
    auto eng = builtin("engine");
    FreeBvp fb = formulate(eng.spec, 1e-6);
    NormalizedBvp nb = normalize(fb);
    const double xe = 37.0;
    Vec y(3);
    y << 2.4, 0.7, 0.9;
    Vec dx(3);
    nb.x_system().eval(xe * 0.3, y, dx);
    Vec Y(4), out(4);
    Y << y[0], y[1], y[2], xe;
    nb.eval_aug(0.3, Y, out);
    for (int k = 0; k < 3; ++k)
        CHECK(out[k] == doctest::Approx(xe * dx[k]).epsilon(1e-14));
}

TEST_CASE("sector machinery enumerates and checks sign patterns") {
    auto pile = builtin("pile");
    FreeBvp fb = formulate(pile.spec, 1e-2);
    auto sectors = enumerate_sectors(fb);
    CHECK(sectors.size() == 4);

    Vec y(4);
    y << 0.0, 0.0, -4.4e-3, 5.6e-3;
    auto s = sector_of(fb, y);
    CHECK(s == std::vector<int>{-1, +1});
    CHECK(sector_consistent(fb, y, s));
    CHECK_FALSE(sector_consistent(fb, y, {+1, +1}));

    // sector residual equals the exact abs residual when consistent
    auto idx = *fb.abs_condition_index();
    CHECK(fb.right_conditions[idx].eval_sector(y, s) ==
          doctest::Approx(fb.right_conditions[idx].eval(y, 8.84, 1e-2)).epsilon(1e-15));

    // smooth problems expose exactly one (empty) sector
    auto lin = builtin("linear_exp", {{"P", 1.0}});
    CHECK(enumerate_sectors(formulate(lin.spec, 0.1)).size() == 1);
    CHECK(enumerate_sectors(formulate(lin.spec, 0.1))[0].empty());
}

TEST_CASE("monotone-decay diagnostic") {
    auto lin = builtin("linear_exp", {{"P", 1.0}});
    FreeBvp fb = formulate(lin.spec, 1e-2);
    // synthetic monotone grid: u' = e^{-x} decreasing
    std::vector<Vec> mono, wiggle;
    for (int j = 0; j <= 10; ++j) {
        Vec y(2);
        y << 1.0 - std::exp(-0.3 * j), std::exp(-0.3 * j);
        mono.push_back(y);
        y << 0.0, std::cos(0.9 * j);
        wiggle.push_back(y);
    }
    auto ok = monotone_decay_ok(fb, mono);
    REQUIRE(ok.has_value());
    CHECK(*ok);
    auto bad = monotone_decay_ok(fb, wiggle);
    REQUIRE(bad.has_value());
    CHECK_FALSE(*bad);

    // two asymptotic conditions: hypothesis not applicable
    auto pile = builtin("pile");
    CHECK_FALSE(monotone_decay_ok(formulate(pile.spec, 1e-2), mono).has_value());
}
