#pragma once

/**
 * @file multifractal.hpp
 * @brief Free energy, Legendre rate function, Lyapunov extremes and the
 *        entropy / dimension spectra of Lyapunov level sets.
 *
 * Everything is a grid transform of a PressureCurve. Beyond t0 the curve is
 * replaced by its theoretical plateau; the contact point (t0, plateau) is kept
 * as an extra node so that the linear part of the spectra is reproduced
 * exactly rather than up to the plateau tolerance.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "pressure_curve.hpp"

namespace thermo {

inline constexpr double kConvexityTolerance = 1e-6;
inline constexpr double kDegenerateWidth = 1e-6;
inline constexpr double kIntervalSlack = 1e-9;

struct LambdaExtremes {
    double lambda_min = 0.0;
    double lambda_max = 0.0;  ///< -P'(t_min), range-limited
    double lambda_mu0 = 0.0;  ///< -P'(0)
    double t_min_used = 0.0;
};

/// Data shared by the spectra of one curve.
struct SpectrumContext {
    LambdaExtremes extremes;
    std::optional<double> t0;
    double h_top = 0.0;
    double plateau_entropy = 0.0; ///< log k for skew products, 0 for circle maps
    bool skew_product = false;
};

/// E(s) = P(-s) - log deg(F) on the reflected grid, increasing in s.
struct FreeEnergy {
    std::vector<double> s;
    std::vector<double> E;
    std::vector<bool> raw; ///< false for the plateau contact node
    SpectrumContext context;
};

struct RateFunction {
    std::vector<double> s_grid;
    std::vector<double> I;
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    double lambda_mu0 = 0.0;
    std::optional<double> t0;
    double h_top = 0.0;
    double plateau_entropy = 0.0;
    double t_min_used = 0.0;
    bool degenerate = false;
    /// max |I(E'(s_j)) - (s_j E'(s_j) - E_j)| over interior raw nodes
    double variational_residual = 0.0;
    FreeEnergy free_energy;

    /// Discrete Legendre transform max_j (s t_j - E_j) at an arbitrary s.
    double at(double s) const
    {
        double best = -std::numeric_limits<double>::infinity();
        const auto& t = free_energy.s;
        const auto& E = free_energy.E;
        for (std::size_t j = 0; j < t.size(); ++j) best = std::max(best, s * t[j] - E[j]);
        return best;
    }
};

enum class SpectrumKind { entropy, hausdorff };
enum class FormulaBranch { rectangle, legendre, plateau };

inline std::string to_string(SpectrumKind k) { return k == SpectrumKind::entropy ? "entropy" : "hausdorff"; }

inline std::string to_string(FormulaBranch b)
{
    switch (b) {
    case FormulaBranch::rectangle: return "rectangle";
    case FormulaBranch::legendre: return "legendre";
    case FormulaBranch::plateau: return "plateau";
    }
    return "?";
}

struct SpectrumResult {
    double a = 0.0;
    double b = 0.0;
    SpectrumKind kind = SpectrumKind::entropy;
    double value = 0.0;
    double selection_point = 0.0;
    FormulaBranch formula_branch = FormulaBranch::legendre;
};

/// max_j (s x_j - y_j) for every s; the discrete convex conjugate.
inline std::vector<double> discrete_legendre(const std::vector<double>& x, const std::vector<double>& y,
                                             const std::vector<double>& s)
{
    std::vector<double> out(s.size(), -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j) out[i] = std::max(out[i], s[i] * x[j] - y[j]);
    return out;
}

namespace detail {

inline double interpolate(const std::vector<double>& x, const std::vector<double>& y, double at)
{
    if (at <= x.front()) return y.front();
    if (at >= x.back()) return y.back();
    std::size_t hi = 1;
    while (x[hi] < at) ++hi;
    double w = (at - x[hi - 1]) / (x[hi] - x[hi - 1]);
    return (1.0 - w) * y[hi - 1] + w * y[hi];
}

/// Raw points with t < t0, then the contact node (t0, plateau).
inline std::pair<std::vector<double>, std::vector<double>> below_transition(const PressureCurve& c)
{
    std::vector<double> t, P;
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (c.t0 && c.t[i] >= *c.t0) break;
        t.push_back(c.t[i]);
        P.push_back(c.P[i]);
    }
    if (c.t0) {
        t.push_back(*c.t0);
        P.push_back(*c.plateau);
    }
    return {t, P};
}

} // namespace detail

/// lambda_min: 0 for a smooth transition; for a kink the smallest chord slope
/// (P(t) - plateau) / (t0 - t) over grid t < t0; without a plateau inf of
/// lambda_c. lambda_max = -P'(t_min), lambda_mu0 = -P'(0).
inline LambdaExtremes lambda_extremes(const PressureCurve& c)
{
    if (c.size() < 3) throw DataError("pressure curve needs at least three points");
    if (!c.covers(0.0)) throw RangeError("pressure curve must contain t = 0 to evaluate lambda_mu0");
    LambdaExtremes x;
    x.t_min_used = c.t_min();
    x.lambda_max = c.lambda_c.front();
    x.lambda_mu0 = detail::interpolate(c.t, c.lambda_c, 0.0);
    if (c.plateau && c.t0) {
        if (c.slopes && c.slopes->kind == TransitionKind::smooth) {
            x.lambda_min = 0.0;
        } else {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < c.size() && c.t[i] < *c.t0; ++i)
                best = std::min(best, (c.P[i] - *c.plateau) / (*c.t0 - c.t[i]));
            x.lambda_min = std::isfinite(best) ? std::max(best, 0.0) : 0.0;
        }
    } else {
        x.lambda_min = *std::min_element(c.lambda_c.begin(), c.lambda_c.end());
    }
    return x;
}

inline SpectrumContext spectrum_context(const PressureCurve& c)
{
    SpectrumContext ctx;
    ctx.extremes = lambda_extremes(c);
    ctx.t0 = c.t0;
    ctx.h_top = c.h_top();
    ctx.skew_product = c.skew_product;
    ctx.plateau_entropy = c.plateau ? *c.plateau : 0.0;
    return ctx;
}

inline FreeEnergy free_energy(const PressureCurve& c, int total_degree)
{
    if (total_degree < 1) throw DomainError("total degree must be positive");
    if (c.plateau && !c.t0) throw RangeError("curve has a plateau but no detected t0; extend the t grid");
    auto [t, P] = detail::below_transition(c);
    FreeEnergy fe;
    const double logdeg = std::log(static_cast<double>(total_degree));
    for (std::size_t k = t.size(); k-- > 0;) {
        fe.s.push_back(-t[k]);
        fe.E.push_back(P[k] - logdeg);
        fe.raw.push_back(!(c.t0 && k + 1 == t.size()));
    }
    fe.context = spectrum_context(c);
    return fe;
}

inline FreeEnergy free_energy(const PressureCurve& c) { return free_energy(c, c.total_degree); }

/// Raw-node indices where the second difference of E is below -tol.
inline std::vector<std::size_t> convexity_defects(const FreeEnergy& fe, double tol = kConvexityTolerance)
{
    std::vector<std::size_t> bad;
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < fe.s.size(); ++j)
        if (fe.raw[j]) idx.push_back(j);
    for (std::size_t k = 1; k + 1 < idx.size(); ++k) {
        std::size_t a = idx[k - 1], b = idx[k], d = idx[k + 1];
        double left = (fe.E[b] - fe.E[a]) / (fe.s[b] - fe.s[a]);
        double right = (fe.E[d] - fe.E[b]) / (fe.s[d] - fe.s[b]);
        if (right - left < -tol * 0.5 * (fe.s[d] - fe.s[a])) bad.push_back(b);
    }
    return bad;
}

/// I(s) = max_t (s t - E(t)) on s in (lambda_min + delta, lambda_max - delta).
inline RateFunction rate_function(const FreeEnergy& fe, std::size_t points = 201)
{
    if (fe.s.size() < 3) throw DataError("free energy needs at least three nodes");
    auto bad = convexity_defects(fe);
    if (!bad.empty()) {
        std::string msg = "free energy is not convex at indices";
        for (auto i : bad) msg += " " + std::to_string(i);
        throw DataError(msg);
    }
    const auto& ctx = fe.context;
    RateFunction r;
    r.free_energy = fe;
    r.lambda_min = ctx.extremes.lambda_min;
    r.lambda_max = ctx.extremes.lambda_max;
    r.lambda_mu0 = ctx.extremes.lambda_mu0;
    r.t_min_used = ctx.extremes.t_min_used;
    r.t0 = ctx.t0;
    r.h_top = ctx.h_top;
    r.plateau_entropy = ctx.plateau_entropy;
    const double width = r.lambda_max - r.lambda_min;
    r.degenerate = width < kDegenerateWidth;
    if (!r.degenerate && points >= 2) {
        const double delta = width / static_cast<double>(points + 1);
        for (std::size_t i = 0; i < points; ++i)
            r.s_grid.push_back(r.lambda_min + delta * static_cast<double>(i + 1));
        r.I = discrete_legendre(fe.s, fe.E, r.s_grid);
    }
    for (std::size_t j = 1; j + 1 < fe.s.size(); ++j) {
        if (!fe.raw[j - 1] || !fe.raw[j] || !fe.raw[j + 1]) continue;
        double slope = (fe.E[j + 1] - fe.E[j - 1]) / (fe.s[j + 1] - fe.s[j - 1]);
        double lhs = r.at(slope);
        double rhs = fe.s[j] * slope - fe.E[j];
        r.variational_residual = std::max(r.variational_residual, std::fabs(lhs - rhs));
    }
    return r;
}

inline RateFunction rate_function(const PressureCurve& c, std::size_t points = 201)
{
    return rate_function(free_energy(c), points);
}

/// Entropy of the level set of Lyapunov exponents in [a, b].
inline SpectrumResult entropy_spectrum(const RateFunction& r, double a, double b)
{
    if (a > b) throw DomainError("entropy spectrum needs a <= b");
    if (a < -kIntervalSlack || b > r.lambda_max + kIntervalSlack)
        throw DomainError("interval [" + std::to_string(a) + ", " + std::to_string(b) +
                          "] leaves [0, lambda_max] = [0, " + std::to_string(r.lambda_max) + "]");
    SpectrumResult out;
    out.a = a;
    out.b = b;
    out.kind = SpectrumKind::entropy;
    if (!r.t0 && b < r.lambda_min - kIntervalSlack)
        throw DomainError("no exponents below lambda_min = " + std::to_string(r.lambda_min) +
                          " for a map without phase transition");
    if (r.t0 && b <= r.lambda_min) {
        out.formula_branch = FormulaBranch::rectangle;
        out.selection_point = b;
        out.value = b * *r.t0 + r.plateau_entropy;
        return out;
    }
    double lo = std::max(a, r.lambda_min);
    double d = std::clamp(r.lambda_mu0, lo, b);
    out.formula_branch = FormulaBranch::legendre;
    out.selection_point = d;
    out.value = r.h_top - r.at(d);
    return out;
}

/// tau_hat(a) = inf_t (P(t) + a t) with P replaced by the plateau beyond t0.
inline double tau_hat(const PressureCurve& c, double a)
{
    if (c.plateau && !c.t0) throw RangeError("curve has a plateau but no detected t0; extend the t grid");
    auto x = lambda_extremes(c);
    if (a < -kIntervalSlack || a > x.lambda_max + kIntervalSlack)
        throw DomainError("a = " + std::to_string(a) + " outside [0, lambda_max]");
    auto [t, P] = detail::below_transition(c);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < t.size(); ++k) best = std::min(best, P[k] + a * t[k]);
    if (c.t0)
        for (std::size_t i = 0; i < c.size(); ++i)
            if (c.t[i] > *c.t0) best = std::min(best, *c.plateau + a * c.t[i]);
    return best;
}

/// tau_check(a) = tau_hat(a) / a, defined for a > 0.
inline double tau_check(const PressureCurve& c, double a)
{
    if (!(a > 0.0))
        throw DomainError("tau_check is undefined at a <= 0; use the limit from the right (t0 when lambda_min > 0)");
    return tau_hat(c, a) / a;
}

/// Hausdorff dimension of the level set of exponents in [u, v] (circle maps).
inline SpectrumResult hausdorff_spectrum(const PressureCurve& c, double u, double v, std::size_t points = 201)
{
    if (c.skew_product) throw DomainError("Hausdorff spectrum is only available for circle maps");
    if (u > v) throw DomainError("hausdorff spectrum needs u <= v");
    if (!(u > 0.0))
        throw DomainError("interval contains a <= 0 where tau_check is undefined; query (eps, v] for the "
                          "one-sided limit");
    auto x = lambda_extremes(c);
    if (v > x.lambda_max + kIntervalSlack)
        throw DomainError("v = " + std::to_string(v) + " exceeds lambda_max = " + std::to_string(x.lambda_max));
    std::vector<double> grid;
    if (u == v || points < 2) {
        grid.push_back(u);
    } else {
        for (std::size_t i = 0; i < points; ++i)
            grid.push_back(u + (v - u) * static_cast<double>(i) / static_cast<double>(points - 1));
    }
    if (x.lambda_mu0 > u && x.lambda_mu0 < v) grid.push_back(x.lambda_mu0);
    SpectrumResult out;
    out.a = u;
    out.b = v;
    out.kind = SpectrumKind::hausdorff;
    out.value = -std::numeric_limits<double>::infinity();
    for (double a : grid) {
        double val = tau_check(c, a);
        if (val > out.value) {
            out.value = val;
            out.selection_point = a;
        }
    }
    bool on_plateau = c.t0 && out.selection_point <= x.lambda_min;
    out.formula_branch = on_plateau ? FormulaBranch::plateau : FormulaBranch::legendre;
    return out;
}

struct TauRow {
    double a;
    double tau_hat;
    double tau_check; ///< NaN at a = 0
};

/// (a, tau_hat, tau_check) on an even grid of [0, lambda_max].
inline std::vector<TauRow> tau_table(const PressureCurve& c, std::size_t points = 101)
{
    auto x = lambda_extremes(c);
    std::vector<TauRow> rows;
    for (std::size_t i = 0; i < points; ++i) {
        double a = x.lambda_max * static_cast<double>(i) / static_cast<double>(points - 1);
        double th = tau_hat(c, a);
        rows.push_back({a, th, a > 0.0 ? th / a : std::numeric_limits<double>::quiet_NaN()});
    }
    return rows;
}

} // namespace thermo
