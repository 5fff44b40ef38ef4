#pragma once

/**
 * @file maps.hpp
 * @brief Full-branch circle maps, linear base endomorphisms and skew products.
 *
 * Circle points live in [0,1) with arithmetic mod 1. Every map is stored as
 * a list of increasing branches; branch b is defined on [lo_b, hi_b) and its
 * lift sends that interval onto [0,1). Branch endpoints belong to the branch
 * on their right, so a point has exactly one active branch and every point
 * has exactly degree-many preimages.
 *
 * Families:
 *  - Manneville-Pomeau f_p:  x + 2^p x^{1+p} on [0,1/2), x - 2^p (1-x)^{1+p}
 *    on [1/2,1). Indifferent fixed point at 0, C^{1+p} there.
 *  - C^2 intermittent f_alpha: g_alpha(y) = y + a y^{3+alpha} + b y^{4+alpha}
 *    on [0,1/2) and 1 - g_alpha(1-y) on [1/2,1), with a(alpha), b(alpha)
 *    chosen so that g_alpha(1/2) = 1.
 *  - Piecewise linear with slopes s_i and sum 1/s_i = 1 (uniformly expanding
 *    controls with closed-form pressure).
 *
 * Derivatives are analytic. The expansion excess Df - 1 is evaluated
 * separately so that log|Df| = log1p(Df - 1) keeps full relative precision
 * next to indifferent points.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "errors.hpp"

namespace thermo {

enum class Family { manneville_pomeau, c2_intermittent, piecewise_linear };
enum class Smoothness { c1p, c2 };

inline std::string to_string(Family f)
{
    switch (f) {
    case Family::manneville_pomeau: return "mp";
    case Family::c2_intermittent: return "c2";
    case Family::piecewise_linear: return "pwl";
    }
    return "?";
}

inline std::string to_string(Smoothness s) { return s == Smoothness::c1p ? "c1p" : "c2"; }

/// Reduce to the fundamental domain [0,1).
inline double wrap_unit(double x)
{
    double r = x - std::floor(x);
    return r >= 1.0 ? 0.0 : r;
}

/// Distance on the circle R/Z.
inline double circle_distance(double x, double y)
{
    double d = std::fabs(wrap_unit(x) - wrap_unit(y));
    return std::min(d, 1.0 - d);
}

struct BranchInterval {
    double lo;
    double hi;
    double length() const { return hi - lo; }
};

struct MapValue {
    double value;      ///< image point in [0,1)
    double derivative; ///< one-sided derivative of the active branch
};

struct Preimage {
    double point;
    double derivative;
    double log_derivative;
    int branch;
};

/// Newton settings for the inverse-branch solver.
inline constexpr double kNewtonTolerance = 1e-12;
inline constexpr int kNewtonMaxIter = 100;

class CircleMap {
public:
    Family family() const noexcept { return family_; }
    Smoothness smoothness() const noexcept { return smoothness_; }
    int degree() const noexcept { return static_cast<int>(intervals_.size()); }
    std::span<const BranchInterval> branch_intervals() const noexcept { return intervals_; }
    std::span<const double> indifferent_points() const noexcept { return indifferent_; }
    bool has_indifferent_points() const noexcept { return !indifferent_.empty(); }

    double p() const noexcept { return p_; }
    double alpha() const noexcept { return alpha_; }
    double coeff_a() const noexcept { return a_; }
    double coeff_b() const noexcept { return b_; }
    std::span<const double> slopes() const noexcept { return slopes_; }

    int branch_of(double x) const
    {
        x = wrap_unit(x);
        for (int b = degree() - 1; b > 0; --b)
            if (x >= intervals_[b].lo) return b;
        return 0;
    }

    /// Lift of branch b: increasing, lo_b -> 0 and hi_b -> 1.
    double branch_value(int b, double y) const
    {
        switch (family_) {
        case Family::manneville_pomeau:
            if (b == 0) return y + scale_ * std::pow(y, 1.0 + p_);
            return y - scale_ * std::pow(1.0 - y, 1.0 + p_);
        case Family::c2_intermittent:
            if (b == 0) return g_alpha(y);
            return 1.0 - g_alpha(1.0 - y);
        case Family::piecewise_linear:
            return slopes_[b] * (y - intervals_[b].lo);
        }
        return 0.0;
    }

    /// Df - 1 on branch b, evaluated without cancellation.
    double branch_excess(int b, double y) const
    {
        switch (family_) {
        case Family::manneville_pomeau: {
            double u = b == 0 ? y : 1.0 - y;
            return scale_ * (1.0 + p_) * std::pow(u, p_);
        }
        case Family::c2_intermittent: {
            double u = b == 0 ? y : 1.0 - y;
            return g_alpha_excess(u);
        }
        case Family::piecewise_linear:
            return slopes_[b] - 1.0;
        }
        return 0.0;
    }

    double branch_derivative(int b, double y) const { return 1.0 + branch_excess(b, y); }
    double branch_log_derivative(int b, double y) const { return std::log1p(branch_excess(b, y)); }

    MapValue evaluate(double x) const
    {
        x = wrap_unit(x);
        int b = branch_of(x);
        return {wrap_unit(branch_value(b, x)), branch_derivative(b, x)};
    }

    double log_derivative(double x) const
    {
        x = wrap_unit(x);
        return branch_log_derivative(branch_of(x), x);
    }

    /// Preimage of x under branch b by safeguarded Newton iteration.
    Preimage inverse_branch(int b, double x) const
    {
        x = wrap_unit(x);
        const BranchInterval iv = intervals_[b];
        double y;
        if (family_ == Family::piecewise_linear) {
            y = iv.lo + x / slopes_[b];
        } else if (x == 0.0) {
            y = iv.lo;
        } else {
            y = solve_branch(b, x);
        }
        double e = branch_excess(b, y);
        return {y, 1.0 + e, std::log1p(e), b};
    }

    /// Preimage point of a lifted value x in [0,1] under branch b; x = 1 maps
    /// to the right end of the branch interval.
    double inverse_branch_lifted(int b, double x) const
    {
        const BranchInterval iv = intervals_[b];
        if (x <= 0.0) return iv.lo;
        if (x >= 1.0) return iv.hi;
        if (family_ == Family::piecewise_linear) return iv.lo + x / slopes_[b];
        return solve_branch(b, x);
    }

    /// All preimages of x, one per branch, in branch order.
    std::vector<Preimage> inverse_branches(double x) const
    {
        std::vector<Preimage> out;
        out.reserve(intervals_.size());
        for (int b = 0; b < degree(); ++b) out.push_back(inverse_branch(b, x));
        return out;
    }

    friend CircleMap make_manneville_pomeau(double p);
    friend CircleMap make_c2_intermittent(double alpha);
    friend CircleMap make_piecewise_linear(std::vector<double> slopes);

private:
    CircleMap() = default;

    double g_alpha(double y) const
    {
        return y + a_ * std::pow(y, 3.0 + alpha_) + b_ * std::pow(y, 4.0 + alpha_);
    }

    double g_alpha_excess(double y) const
    {
        return std::pow(y, 2.0 + alpha_) * (a_ * (3.0 + alpha_) + b_ * (4.0 + alpha_) * y);
    }

    double solve_branch(int b, double x) const
    {
        const BranchInterval iv = intervals_[b];
        double lo = iv.lo;
        double hi = iv.hi;
        double y = lo + x * (hi - lo);
        for (int it = 0; it < kNewtonMaxIter; ++it) {
            double r = branch_value(b, y) - x;
            if (std::fabs(r) <= kNewtonTolerance) return y;
            if (r < 0.0)
                lo = y;
            else
                hi = y;
            if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon()) return 0.5 * (lo + hi);
            double next = y - r / branch_derivative(b, y);
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            y = next;
        }
        throw NumericalError("inverse branch solver did not converge on branch " + std::to_string(b),
                             b);
    }

    Family family_ = Family::piecewise_linear;
    Smoothness smoothness_ = Smoothness::c2;
    std::vector<BranchInterval> intervals_;
    std::vector<double> indifferent_;
    std::vector<double> slopes_;
    double p_ = 0.0;
    double scale_ = 0.0; // 2^p
    double alpha_ = 0.0;
    double a_ = 0.0;
    double b_ = 0.0;
};

inline CircleMap make_manneville_pomeau(double p)
{
    if (!(p > 0.0 && p < 1.0))
        throw DomainError("Manneville-Pomeau parameter p must lie in (0,1), got " + std::to_string(p));
    CircleMap m;
    m.family_ = Family::manneville_pomeau;
    m.smoothness_ = Smoothness::c1p;
    m.p_ = p;
    m.scale_ = std::pow(2.0, p);
    m.intervals_ = {{0.0, 0.5}, {0.5, 1.0}};
    m.indifferent_ = {0.0};
    return m;
}

/// Coefficients (a, b) of g_alpha; g_alpha(1/2) = 1 and Dg_alpha(0) = 1.
struct C2Coefficients {
    double a;
    double b;
};

inline C2Coefficients c2_coefficients(double alpha)
{
    double b = 1.0 / (std::pow(0.5, 3.0 + alpha) -
                      (4.0 + alpha) / (4.0 + 2.0 * alpha) * std::pow(0.5, 2.0 + alpha));
    double a = -b * (4.0 + alpha) / (4.0 + 2.0 * alpha);
    return {a, b};
}

inline CircleMap make_c2_intermittent(double alpha)
{
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw DomainError("C2 intermittent parameter alpha must lie in [0,1], got " +
                          std::to_string(alpha));
    CircleMap m;
    m.family_ = Family::c2_intermittent;
    m.smoothness_ = Smoothness::c2;
    m.alpha_ = alpha;
    auto [a, b] = c2_coefficients(alpha);
    m.a_ = a;
    m.b_ = b;
    m.intervals_ = {{0.0, 0.5}, {0.5, 1.0}};
    m.indifferent_ = {0.0};
    return m;
}

inline CircleMap make_piecewise_linear(std::vector<double> slopes)
{
    if (slopes.empty()) throw DomainError("piecewise linear map needs at least one slope");
    double total = 0.0;
    for (double s : slopes) {
        if (!(s > 1.0)) throw DomainError("piecewise linear slopes must exceed 1");
        total += 1.0 / s;
    }
    if (std::fabs(total - 1.0) > 1e-12)
        throw DomainError("piecewise linear slopes do not tile the circle: sum 1/s = " +
                          std::to_string(total));
    CircleMap m;
    m.family_ = Family::piecewise_linear;
    m.smoothness_ = Smoothness::c2;
    double lo = 0.0;
    for (std::size_t i = 0; i < slopes.size(); ++i) {
        double hi = i + 1 == slopes.size() ? 1.0 : lo + 1.0 / slopes[i];
        m.intervals_.push_back({lo, hi});
        lo = hi;
    }
    m.slopes_ = std::move(slopes);
    return m;
}

inline CircleMap make_doubling() { return make_piecewise_linear({2.0, 2.0}); }

// ---------------------------------------------------------------------------
// Base endomorphisms and skew products

/// The expanding circle endomorphism x -> k x mod 1.
struct BaseEndo {
    int k = 2;

    int degree() const noexcept { return k; }
    double lyapunov() const { return std::log(static_cast<double>(k)); }
    double entropy() const { return std::log(static_cast<double>(k)); }
    double apply(double x) const { return wrap_unit(k * x); }
    /// Preimage with branch index m: (x + m) / k.
    double preimage(double x, int m) const { return (wrap_unit(x) + m) / k; }
};

inline BaseEndo make_base_endo(int k)
{
    if (k < 2) throw DomainError("base multiplier k must be at least 2");
    return {k};
}

/// Same fiber map over every base point.
struct ConstantFiber {
    CircleMap map;
};

/// C^2 intermittent fibers with alpha(x) = alpha0 + eps * sin(2 pi x).
struct C2FiberFamily {
    double alpha0 = 0.5;
    double eps = 0.0;

    double alpha_at(double x) const
    {
        return alpha0 + eps * std::sin(2.0 * std::numbers::pi * x);
    }
};

using FiberRule = std::variant<ConstantFiber, C2FiberFamily>;

class SkewProduct {
public:
    const BaseEndo& base() const noexcept { return base_; }
    const FiberRule& fiber_rule() const noexcept { return rule_; }
    bool constant_fiber() const noexcept { return std::holds_alternative<ConstantFiber>(rule_); }

    CircleMap fiber_at(double x) const
    {
        if (auto c = std::get_if<ConstantFiber>(&rule_)) return c->map;
        return make_c2_intermittent(std::get<C2FiberFamily>(rule_).alpha_at(x));
    }

    int fiber_degree() const
    {
        if (auto c = std::get_if<ConstantFiber>(&rule_)) return c->map.degree();
        return 2;
    }

    int total_degree() const { return base_.degree() * fiber_degree(); }
    double entropy_base() const { return base_.entropy(); }
    double entropy_total() const { return std::log(static_cast<double>(total_degree())); }

    /// Whether some fiber has an indifferent point (so the plateau log k occurs).
    bool intermittent_fibers() const
    {
        if (auto c = std::get_if<ConstantFiber>(&rule_)) return c->map.has_indifferent_points();
        return true;
    }

    /// phi^c(x, y) = -log|Df_x(y)|.
    double geometric_potential(double x, double y) const { return -fiber_at(x).log_derivative(y); }

    std::pair<double, double> apply(double x, double y) const
    {
        return {base_.apply(x), fiber_at(x).evaluate(y).value};
    }

    friend SkewProduct make_skew_product(BaseEndo base, FiberRule rule);

private:
    SkewProduct(BaseEndo base, FiberRule rule) : base_(base), rule_(std::move(rule)) {}

    BaseEndo base_;
    FiberRule rule_;
};

inline SkewProduct make_skew_product(BaseEndo base, FiberRule rule)
{
    if (base.k < 2) throw DomainError("base multiplier k must be at least 2");
    if (auto fam = std::get_if<C2FiberFamily>(&rule)) {
        double lo = fam->alpha0 - std::fabs(fam->eps);
        double hi = fam->alpha0 + std::fabs(fam->eps);
        if (lo < 0.0 || hi > 1.0)
            throw DomainError("fiber rule alpha(x) leaves [0,1]: range [" + std::to_string(lo) +
                              ", " + std::to_string(hi) + "]");
    }
    return SkewProduct(base, std::move(rule));
}

} // namespace thermo
