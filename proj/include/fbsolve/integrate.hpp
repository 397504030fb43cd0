#pragma once

#include <functional>
#include <vector>

#include "fbsolve/problem.hpp"

namespace fbsolve {

using OdeFn = std::function<void(double t, const Vec& y, Vec& dydt)>;

struct IvpOptions {
    enum class Mode { fixed_step, adaptive };
    Mode mode = Mode::adaptive;
    int step_count = 200;        // fixed mode: uniform steps over the span
    double rel_tol = 1e-12;      // adaptive mode
    double abs_tol = 1e-14;
    int max_steps = 1000000;
    double divergence_threshold = 1e8;  // |y|_inf beyond this aborts
};

enum class IvpStatus { ok, diverged, max_steps_exceeded };

struct Trajectory {
    std::vector<double> t;
    std::vector<Vec> y;
    IvpStatus status = IvpStatus::ok;
    double t_stop = 0.0;   // where integration ended (== t1 on success)
    long rhs_evals = 0;

    const Vec& back() const { return y.back(); }
};

/// Integrate y' = f(t, y) from (t0, y0) to t1 > t0. Fixed mode advances with
/// the classical 4th-order one-step scheme on a uniform grid; adaptive mode
/// uses the Dormand-Prince 4(5) embedded pair with PI step-size control.
/// Non-finite or exploding states abort with IvpStatus::diverged so shooting
/// can damp instead of propagating NaNs.
Trajectory integrate(const OdeFn& sys, const Vec& y0, double t0, double t1,
                     const IvpOptions& opts);

}  // namespace fbsolve
