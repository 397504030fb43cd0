#pragma once

#include <string>
#include <vector>

#include "fbsolve/sweep.hpp"

namespace fbsolve {

/// One compared quantity: |computed - expected| <= tolerance to pass.
/// Every cell records where its expected value comes from.
struct ExpectedCell {
    std::string label;
    double computed = 0.0;
    double expected = 0.0;
    double tolerance = 0.0;
    std::string provenance;  // "published-table" | "closed-form" | "consistency"
    bool solver_failed = false;

    double delta() const { return std::abs(computed - expected); }
    bool pass() const { return !solver_failed && delta() <= tolerance; }
};

struct ExperimentResult {
    std::string name;
    std::vector<ExpectedCell> cells;
    bool all_pass() const {
        for (const auto& c : cells)
            if (!c.pass()) return false;
        return !cells.empty();
    }
};

const std::vector<std::string>& experiment_names();

/// Run one named experiment with the problem defaults (grids, ladders and
/// parameters match the published tables). Unknown names throw
/// std::invalid_argument listing the valid ones.
ExperimentResult run_experiment(const std::string& name);

/// Aligned human-readable table of an experiment's cells.
std::string format_experiment(const ExperimentResult& r);

}  // namespace fbsolve
