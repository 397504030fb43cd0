#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "fbsolve/problem.hpp"

namespace fbsolve {

/// One condition at the free boundary x_eps. Two forms cover all problems:
///  - value:   y[comp] - target = 0                       (smooth)
///  - abs_sum: sum_i |y[comps[i]]| - target = 0           (kinked)
/// The abs_sum form is solved by sign-sector enumeration; `sector` fixes
/// the sign pattern and yields the smooth surrogate used inside Newton.
struct RightCondition {
    enum class Kind { value, abs_sum, custom };
    Kind kind = Kind::value;
    int comp = -1;
    double target = 0.0;
    std::vector<int> abs_comps;
    std::function<double(const Vec& y, double x_eps, double eps)> custom;

    double eval(const Vec& y, double x_eps, double eps) const;
    // abs_sum only: signs aligned with abs_comps
    double eval_sector(const Vec& y, const std::vector<int>& signs) const;
};

/// The eps-regularized restatement of a ProblemSpec on [0, x_eps]:
/// left conditions copied, asymptotic conditions moved to x_eps, and one
/// extra condition of size eps closing the square system.
struct FreeBvp {
    ProblemSpec base;
    double eps = 0.0;
    std::vector<Condition> left_known;
    std::vector<int> unknown_left_indices;
    std::vector<RightCondition> right_conditions;

    int order() const { return base.order; }
    int unknown_count() const { return static_cast<int>(unknown_left_indices.size()) + 1; }

    // index into right_conditions of the abs_sum condition, if any
    std::optional<int> abs_condition_index() const;

    Vec right_residuals(const Vec& y_right, double x_eps) const;
};

/// Append the eps-condition and mark x_eps unknown. With one asymptotic
/// condition at derivative r the terminal pair is d^r u = u_inf,
/// d^{r+1} u = eps (so r <= n-2 is required). With several, each
/// asymptotic condition moves to x_eps and the closing condition is
/// sum |d^k u(x_eps)| = eps over the remaining derivatives (eps > 0).
FreeBvp formulate(const ProblemSpec& spec, double eps);

/// Fixed-domain form on t in [0, 1]: Y = (y_1..y_n, x_eps), x = t * x_eps.
/// Derivative components keep x-units, so dY_k/dt = x_eps * Y_{k+1} and the
/// boundary residuals read off Y directly; the last component is constant.
class NormalizedBvp {
public:
    NormalizedBvp(FreeBvp fb);

    int order() const { return n_; }
    int dim_aug() const { return n_ + 1; }
    const FreeBvp& free_bvp() const { return fb_; }
    const FirstOrderSystem& x_system() const { return xsys_; }
    double eps() const { return fb_.eps; }

    void eval_aug(double t, const Vec& Y, Vec& out) const;
    bool admissible(const Vec& Y) const { return Y[n_] > 0.0; }

    // state (first n components of Y at t=0/t=1) condition residuals
    Vec left_residuals(const Vec& y0) const;
    Vec right_residuals(const Vec& y_end, double x_eps) const {
        return fb_.right_residuals(y_end, x_eps);
    }
    // smooth surrogate: abs_sum condition replaced by its sector form
    Vec right_residuals_sector(const Vec& y_end, double x_eps,
                               const std::vector<int>& sector) const;

private:
    FreeBvp fb_;
    FirstOrderSystem xsys_;
    int n_;
};

NormalizedBvp normalize(const FreeBvp& fb);

/// Sector bookkeeping for the abs_sum closing condition. An empty sector
/// means the problem is smooth (no abs_sum condition).
std::vector<std::vector<int>> enumerate_sectors(const FreeBvp& fb);
/// Sign pattern of the abs components at a terminal state (the natural
/// first sector to try from a warm start).
std::vector<int> sector_of(const FreeBvp& fb, const Vec& y_end);
/// True if every abs component's sign matches the sector (within slack).
bool sector_consistent(const FreeBvp& fb, const Vec& y_end,
                       const std::vector<int>& sector, double slack = 1e-11);

/// Post-solve diagnostic for the monotone-decay hypothesis behind the
/// formulation: with a single asymptotic condition at derivative r, checks
/// that the nodal values of d^{r+1}u move toward the boundary value
/// monotonically (sign-constant increments). Not applicable (nullopt) when
/// several asymptotic conditions exist.
std::optional<bool> monotone_decay_ok(const FreeBvp& fb,
                                      const std::vector<Vec>& states);

}  // namespace fbsolve
