#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fbsolve/bench.hpp"

using namespace fbsolve;

TEST_CASE("experiment registry") {
    CHECK(experiment_names().size() == 6);
    CHECK_THROWS_AS(run_experiment("table2_sakadis"), std::invalid_argument);
    CHECK_THROWS_WITH(run_experiment("nope"), doctest::Contains("valid names"));
}

TEST_CASE("every expected cell carries provenance and a positive tolerance") {
    // metadata completeness on the cheap experiments (the heavyweight table
    // reproductions run in the acceptance suite)
    for (const char* name : {"exact_linear", "exact_tanh", "table2_sakiadis"}) {
        ExperimentResult r = run_experiment(name);
        CAPTURE(name);
        CHECK_FALSE(r.cells.empty());
        for (const auto& c : r.cells) {
            CHECK_FALSE(c.provenance.empty());
            CHECK(c.tolerance >= 0.0);
            CHECK_FALSE(c.label.empty());
        }
    }
}

TEST_CASE("exact_linear passes across the documented parameter range") {
    ExperimentResult r = run_experiment("exact_linear");
    for (const auto& c : r.cells) {
        CAPTURE(c.label);
        CHECK(c.pass());
    }
    CHECK(r.all_pass());
}

TEST_CASE("exact_tanh passes across the documented parameter range") {
    ExperimentResult r = run_experiment("exact_tanh");
    for (const auto& c : r.cells) {
        CAPTURE(c.label);
        CHECK(c.pass());
    }
}

TEST_CASE("formatting marks failures and prints one row per cell") {
    ExperimentResult r;
    r.name = "demo";
    r.cells.push_back({"good", 1.0, 1.0, 1e-12, "closed-form", false});
    r.cells.push_back({"bad", 2.0, 1.0, 1e-12, "closed-form", false});
    std::string s = format_experiment(r);
    CHECK(s.find("good") != std::string::npos);
    CHECK(s.find("FAIL") != std::string::npos);
    CHECK(s.find("FAILURES PRESENT") != std::string::npos);
}
