#include "fbsolve/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fbsolve {

namespace {

bool state_bad(const Vec& y, double limit) {
    for (int i = 0; i < y.size(); ++i) {
        if (!std::isfinite(y[i]) || std::abs(y[i]) > limit) return true;
    }
    return false;
}

Trajectory integrate_rk4(const OdeFn& sys, const Vec& y0, double t0, double t1,
                         const IvpOptions& opts) {
    Trajectory tr;
    const int N = opts.step_count;
    const double h = (t1 - t0) / N;
    Vec y = y0, k1(y0.size()), k2(y0.size()), k3(y0.size()), k4(y0.size()), tmp(y0.size());
    tr.t.reserve(N + 1);
    tr.y.reserve(N + 1);
    tr.t.push_back(t0);
    tr.y.push_back(y);
    for (int i = 0; i < N; ++i) {
        const double t = t0 + i * h;
        sys(t, y, k1);
        tmp = y + 0.5 * h * k1;
        sys(t + 0.5 * h, tmp, k2);
        tmp = y + 0.5 * h * k2;
        sys(t + 0.5 * h, tmp, k3);
        tmp = y + h * k3;
        sys(t + h, tmp, k4);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        tr.rhs_evals += 4;
        if (state_bad(y, opts.divergence_threshold)) {
            tr.status = IvpStatus::diverged;
            tr.t_stop = t + h;
            return tr;
        }
        tr.t.push_back(t0 + (i + 1) * h);
        tr.y.push_back(y);
    }
    tr.t_stop = t1;
    return tr;
}

// Dormand-Prince 4(5) coefficients (FSAL).
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// error weights: b - b_hat
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

Trajectory integrate_dp45(const OdeFn& sys, const Vec& y0, double t0, double t1,
                          const IvpOptions& opts) {
    Trajectory tr;
    const int dim = static_cast<int>(y0.size());
    Vec y = y0, ynew(dim), err(dim), ytmp(dim);
    Vec k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim);

    tr.t.push_back(t0);
    tr.y.push_back(y);

    sys(t0, y, k1);
    tr.rhs_evals++;
    if (state_bad(y, opts.divergence_threshold)) {
        tr.status = IvpStatus::diverged;
        tr.t_stop = t0;
        return tr;
    }

    const double span = t1 - t0;
    double h = span / 100.0;
    double t = t0;
    double err_prev = 1.0;
    bool rejected = false;
    const double safety = 0.9, alpha = 0.7 / 5.0, beta = 0.4 / 5.0;

    for (int step = 0; step < opts.max_steps; ++step) {
        if (t >= t1) {
            tr.t_stop = t1;
            return tr;
        }
        h = std::min(h, t1 - t);

        ytmp = y + h * (a21 * k1);
        sys(t + c2 * h, ytmp, k2);
        ytmp = y + h * (a31 * k1 + a32 * k2);
        sys(t + c3 * h, ytmp, k3);
        ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        sys(t + c4 * h, ytmp, k4);
        ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        sys(t + c5 * h, ytmp, k5);
        ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        sys(t + h, ytmp, k6);
        ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        sys(t + h, ynew, k7);
        tr.rhs_evals += 6;

        if (state_bad(ynew, opts.divergence_threshold)) {
            // shrink once in case a single step overshot; give up on tiny h
            if (h > 1e-12 * span) {
                h *= 0.25;
                rejected = true;
                continue;
            }
            tr.status = IvpStatus::diverged;
            tr.t_stop = t;
            return tr;
        }

        err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        double sq = 0.0;
        for (int i = 0; i < dim; ++i) {
            const double sc = opts.abs_tol +
                              opts.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            const double q = err[i] / sc;
            sq += q * q;
        }
        const double errn = std::sqrt(sq / dim);

        if (errn <= 1.0) {
            t += h;
            y.swap(ynew);
            k1.swap(k7);  // FSAL
            tr.t.push_back(t);
            tr.y.push_back(y);
            const double en = std::max(errn, 1e-10);
            double fac = safety * std::pow(en, -alpha) * std::pow(err_prev, beta);
            fac = std::clamp(fac, 0.2, rejected ? 1.0 : 5.0);
            h *= fac;
            err_prev = en;
            rejected = false;
        } else {
            h *= std::max(0.2, safety * std::pow(errn, -0.2));
            rejected = true;
            if (h < 1e-14 * span) {
                tr.status = IvpStatus::diverged;
                tr.t_stop = t;
                return tr;
            }
        }
    }
    tr.status = IvpStatus::max_steps_exceeded;
    tr.t_stop = t;
    return tr;
}

}  // namespace

Trajectory integrate(const OdeFn& sys, const Vec& y0, double t0, double t1,
                     const IvpOptions& opts) {
    if (!(t1 > t0)) throw std::invalid_argument("integrate: need t1 > t0");
    if (opts.mode == IvpOptions::Mode::fixed_step) {
        if (opts.step_count < 2) throw std::invalid_argument("integrate: step_count >= 2");
        return integrate_rk4(sys, y0, t0, t1, opts);
    }
    if (opts.rel_tol <= 0.0 || opts.abs_tol <= 0.0)
        throw std::invalid_argument("integrate: tolerances must be positive");
    return integrate_dp45(sys, y0, t0, t1, opts);
}

}  // namespace fbsolve
