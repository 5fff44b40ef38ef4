#pragma once

/**
 * @file pressure_curve.hpp
 * @brief Sampled pressure function t -> P(t) and its finite-difference data.
 */

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"

namespace thermo {

enum class Method { collocation, ulam };

enum class TransitionKind { kink, smooth, none };

inline std::string to_string(TransitionKind k)
{
    switch (k) {
    case TransitionKind::kink: return "kink";
    case TransitionKind::smooth: return "smooth";
    case TransitionKind::none: return "none";
    }
    return "?";
}

/// Left secant slopes (P(anchor) - P(anchor - eps)) / eps and their verdict.
struct SlopeReport {
    double anchor = 0.0;
    std::vector<double> offsets; ///< decreasing
    std::vector<double> slopes;
    /// |slope at smallest offset| / |slope at largest offset|.
    double retention = 0.0;
    /// Estimated lim_{eps -> 0} of the slopes (0 when they decay to zero).
    double limit_slope = 0.0;
    TransitionKind kind = TransitionKind::none;
};

inline std::string to_string(Method m) { return m == Method::collocation ? "collocation" : "ulam"; }

struct PressureCurve {
    std::vector<double> t;
    std::vector<double> P;
    std::vector<double> lambda_c; ///< -P'(t), central differences
    std::vector<double> sigma2;   ///< P''(t), central differences
    std::vector<bool> converged;
    std::vector<bool> near_plateau; ///< P(t) within the plateau tolerance

    /// Theoretical plateau: 0 for intermittent circle maps, log k for skew
    /// products with intermittent fibers, empty for uniformly expanding maps.
    std::optional<double> plateau;
    std::optional<double> t0;
    std::optional<SlopeReport> slopes;

    int total_degree = 1;
    bool skew_product = false;
    int N = 0;
    Method method = Method::collocation;

    /// Post-hoc invariant checks that failed on this curve.
    std::vector<std::string> violations;

    std::size_t size() const noexcept { return t.size(); }
    double h_top() const { return std::log(static_cast<double>(total_degree)); }
    double t_min() const { return t.front(); }
    double t_max() const { return t.back(); }

    bool covers(double s) const
    {
        constexpr double slack = 1e-9;
        return !t.empty() && s >= t.front() - slack && s <= t.back() + slack;
    }

    /// Piecewise-linear interpolation of P.
    double value_at(double s) const
    {
        if (!covers(s)) throw RangeError("t = " + std::to_string(s) + " outside the pressure curve range");
        if (s <= t.front()) return P.front();
        if (s >= t.back()) return P.back();
        std::size_t hi = 1;
        while (t[hi] < s) ++hi;
        std::size_t lo = hi - 1;
        double w = (s - t[lo]) / (t[hi] - t[lo]);
        return (1.0 - w) * P[lo] + w * P[hi];
    }
};

} // namespace thermo
