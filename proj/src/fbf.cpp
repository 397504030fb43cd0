#include "fbsolve/fbf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fbsolve {

double RightCondition::eval(const Vec& y, double x_eps, double eps) const {
    switch (kind) {
        case Kind::value:
            return y[comp] - target;
        case Kind::abs_sum: {
            double s = 0.0;
            for (int c : abs_comps) s += std::abs(y[c]);
            return s - target;
        }
        case Kind::custom:
            return custom(y, x_eps, eps);
    }
    return 0.0;
}

double RightCondition::eval_sector(const Vec& y, const std::vector<int>& signs) const {
    double s = 0.0;
    for (size_t i = 0; i < abs_comps.size(); ++i) s += signs[i] * y[abs_comps[i]];
    return s - target;
}

std::optional<int> FreeBvp::abs_condition_index() const {
    for (size_t i = 0; i < right_conditions.size(); ++i)
        if (right_conditions[i].kind == RightCondition::Kind::abs_sum)
            return static_cast<int>(i);
    return std::nullopt;
}

Vec FreeBvp::right_residuals(const Vec& y_right, double x_eps) const {
    Vec r(right_conditions.size());
    for (size_t i = 0; i < right_conditions.size(); ++i)
        r[i] = right_conditions[i].eval(y_right, x_eps, eps);
    return r;
}

FreeBvp formulate(const ProblemSpec& spec, double eps) {
    spec.validate();
    if (eps == 0.0)
        throw std::invalid_argument("formulate: eps = 0 is degenerate (x_eps = infinity)");

    FreeBvp fb;
    fb.base = spec;
    fb.eps = eps;
    fb.left_known = spec.left_conditions;
    fb.unknown_left_indices = spec.unknown_left_indices();

    const auto& asym = spec.asymptotic_conditions;
    if (asym.size() == 1) {
        const int r = asym[0].deriv;
        if (r + 1 >= spec.order)
            throw std::invalid_argument(
                "formulate: asymptotic condition on the top derivative leaves no room "
                "for the eps-condition (r must be <= n-2)");
        RightCondition at_inf;
        at_inf.kind = RightCondition::Kind::value;
        at_inf.comp = r;
        at_inf.target = asym[0].value;
        RightCondition closing;
        closing.kind = RightCondition::Kind::value;
        closing.comp = r + 1;
        closing.target = eps;
        fb.right_conditions = {at_inf, closing};
    } else {
        // every asymptotic condition moves to x_eps; the closing condition
        // sums |d^k u| over the remaining derivative indices
        int rmax = 0;
        for (const auto& c : asym) rmax = std::max(rmax, c.deriv);
        if (rmax + 1 >= spec.order)
            throw std::invalid_argument(
                "formulate: no derivative indices left for the closing condition");
        if (eps < 0.0)
            throw std::invalid_argument(
                "formulate: the absolute-value closing condition requires eps > 0");
        for (const auto& c : asym) {
            RightCondition rc;
            rc.kind = RightCondition::Kind::value;
            rc.comp = c.deriv;
            rc.target = c.value;
            fb.right_conditions.push_back(rc);
        }
        RightCondition closing;
        closing.kind = RightCondition::Kind::abs_sum;
        closing.target = eps;
        for (int k = rmax + 1; k < spec.order; ++k) closing.abs_comps.push_back(k);
        fb.right_conditions.push_back(closing);
    }

    if (fb.right_conditions.size() != fb.unknown_left_indices.size() + 1)
        throw std::logic_error("formulate: condition count does not square the system");
    return fb;
}

NormalizedBvp::NormalizedBvp(FreeBvp fb)
    : fb_(std::move(fb)), xsys_(reduce_to_first_order(fb_.base)), n_(fb_.base.order) {}

void NormalizedBvp::eval_aug(double t, const Vec& Y, Vec& out) const {
    const double xe = Y[n_];
    const double x = xe * t;
    // chain rule: dY_k/dt = x_eps * d(y_k)/dx, x_eps itself constant
    for (int k = 0; k + 1 < n_; ++k) out[k] = xe * Y[k + 1];
    out[n_ - 1] = -xe * fb_.base.rhs(x, Y.head(n_));
    out[n_] = 0.0;
}

Vec NormalizedBvp::left_residuals(const Vec& y0) const {
    Vec r(fb_.left_known.size());
    for (size_t i = 0; i < fb_.left_known.size(); ++i)
        r[i] = y0[fb_.left_known[i].deriv] - fb_.left_known[i].value;
    return r;
}

Vec NormalizedBvp::right_residuals_sector(const Vec& y_end, double x_eps,
                                          const std::vector<int>& sector) const {
    Vec r(fb_.right_conditions.size());
    for (size_t i = 0; i < fb_.right_conditions.size(); ++i) {
        const auto& rc = fb_.right_conditions[i];
        if (rc.kind == RightCondition::Kind::abs_sum && !sector.empty())
            r[i] = rc.eval_sector(y_end, sector);
        else
            r[i] = rc.eval(y_end, x_eps, fb_.eps);
    }
    return r;
}

NormalizedBvp normalize(const FreeBvp& fb) { return NormalizedBvp(fb); }

std::vector<std::vector<int>> enumerate_sectors(const FreeBvp& fb) {
    auto idx = fb.abs_condition_index();
    if (!idx) return {{}};
    const int m = static_cast<int>(fb.right_conditions[*idx].abs_comps.size());
    std::vector<std::vector<int>> out;
    for (int mask = 0; mask < (1 << m); ++mask) {
        std::vector<int> s(m);
        for (int i = 0; i < m; ++i) s[i] = (mask >> i) & 1 ? -1 : +1;
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<int> sector_of(const FreeBvp& fb, const Vec& y_end) {
    auto idx = fb.abs_condition_index();
    if (!idx) return {};
    std::vector<int> s;
    for (int c : fb.right_conditions[*idx].abs_comps)
        s.push_back(y_end[c] >= 0.0 ? +1 : -1);
    return s;
}

bool sector_consistent(const FreeBvp& fb, const Vec& y_end,
                       const std::vector<int>& sector, double slack) {
    auto idx = fb.abs_condition_index();
    if (!idx) return true;
    const auto& comps = fb.right_conditions[*idx].abs_comps;
    for (size_t i = 0; i < comps.size(); ++i)
        if (sector[i] * y_end[comps[i]] < -slack) return false;
    return true;
}

std::optional<bool> monotone_decay_ok(const FreeBvp& fb,
                                      const std::vector<Vec>& states) {
    if (fb.base.asymptotic_conditions.size() != 1 || states.size() < 3)
        return std::nullopt;
    const int comp = fb.base.asymptotic_conditions[0].deriv + 1;  // d^{r+1}u
    int sign = 0;
    for (size_t j = 0; j + 1 < states.size(); ++j) {
        const double d = states[j + 1][comp] - states[j][comp];
        if (d == 0.0) continue;
        const int s = d > 0.0 ? +1 : -1;
        if (sign == 0) sign = s;
        else if (s != sign) return false;
    }
    return true;
}

}  // namespace fbsolve
