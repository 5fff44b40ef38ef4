#pragma once

/**
 * @file pressure.hpp
 * @brief Pressure P(t) of the geometric potential -t log|Df|, its phase
 *        transition and independent cross-checks.
 *
 * P(t) = log rho(L_t) is read off the discretized transfer operator. For maps
 * with an indifferent fixed point the curve is strictly decreasing and convex
 * up to a parameter t0 and sits on the plateau (0 for circle maps, log k for
 * skew products over x -> kx) afterwards. The sweep records finite-difference
 * derivatives, locates t0 and classifies the approach to the plateau as a
 * kink (left derivative bounded away from 0) or smooth (left derivative 0).
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "maps.hpp"
#include "parallel.hpp"
#include "pressure_curve.hpp"
#include "transfer_operator.hpp"

namespace thermo {

/// P(t) - plateau below this counts as "on the plateau". Equal to the gap
/// certificate margin, so no point on the plateau can carry a certified gap.
inline constexpr double kPlateauTolerance = 1e-3;
inline constexpr double kMonotoneSlack = 1e-6;
inline constexpr double kConvexSlack = 1e-6;
/// Kink classifier: limiting slope must be at most this.
inline constexpr double kKinkSlope = -0.02;
/// Kink classifier: fraction of the slope retained from largest to smallest offset.
inline constexpr double kSlopeRetention = 0.65;

struct PressureOptions {
    std::size_t N = 4096;
    Method method = Method::collocation;
    double tol = 1e-10;
    long max_iter = 100000;
    double plateau_eps = kPlateauTolerance;
    double bisection_width = 1e-3;
    std::vector<double> slope_offsets = {0.16, 0.08, 0.04, 0.02};
};

struct PressureValue {
    double value = 0.0;
    bool converged = false;
    bool near_plateau = false;
    long iterations = 0;
};

using PressureEvaluator = std::function<double(double)>;

inline std::optional<double> theoretical_plateau(const CircleMap& map)
{
    if (map.has_indifferent_points()) return 0.0;
    return std::nullopt;
}

inline PressureValue pressure_from_matrix(const SparseMatrix& A, const PressureOptions& opt,
                                          std::optional<double> plateau)
{
    EigenData e = leading_eigenvalue(A, opt.tol, opt.max_iter);
    PressureValue v;
    v.value = std::log(e.rho);
    v.converged = e.converged;
    v.iterations = e.iterations;
    v.near_plateau = plateau && v.value - *plateau < opt.plateau_eps;
    return v;
}

inline PressureValue pressure_at(const OperatorStencil& st, double t, const PressureOptions& opt,
                                 std::optional<double> plateau)
{
    return pressure_from_matrix(assemble(st, t), opt, plateau);
}

/// log of the leading eigenvalue of the discretized L_t. The value is the raw
/// solver output; near_plateau flags points where the theory fixes P(t) to
/// the plateau.
inline PressureValue pressure_at(const CircleMap& map, double t, const PressureOptions& opt = {})
{
    return pressure_at(make_stencil(map, opt.N, opt.method), t, opt, theoretical_plateau(map));
}

inline std::vector<double> make_t_grid(double t_min, double t_max, double step)
{
    if (!(t_min < t_max)) throw DomainError("t grid needs t_min < t_max");
    if (!(step > 0.0)) throw DomainError("t grid needs step > 0");
    auto count = static_cast<std::size_t>(std::llround((t_max - t_min) / step)) + 1;
    if (count < 3) throw DomainError("t grid needs at least three points");
    std::vector<double> t(count);
    for (std::size_t i = 0; i < count; ++i) t[i] = t_min + static_cast<double>(i) * step;
    t.back() = std::min(t.back(), t_max + 1e-12);
    return t;
}

namespace detail {

inline void finite_differences(PressureCurve& c)
{
    const std::size_t n = c.size();
    c.lambda_c.assign(n, 0.0);
    c.sigma2.assign(n, 0.0);
    const auto& t = c.t;
    const auto& P = c.P;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        double hl = t[i] - t[i - 1];
        double hr = t[i + 1] - t[i];
        c.lambda_c[i] = -(P[i + 1] - P[i - 1]) / (hl + hr);
        c.sigma2[i] = 2.0 * ((P[i + 1] - P[i]) / hr - (P[i] - P[i - 1]) / hl) / (hl + hr);
    }
    // Second-order one-sided differences at the ends.
    double h0 = t[1] - t[0];
    double h1 = t[n - 1] - t[n - 2];
    c.lambda_c[0] = -(-3.0 * P[0] + 4.0 * P[1] - P[2]) / (2.0 * h0);
    c.lambda_c[n - 1] = -(3.0 * P[n - 1] - 4.0 * P[n - 2] + P[n - 3]) / (2.0 * h1);
    c.sigma2[0] = c.sigma2[1];
    c.sigma2[n - 1] = c.sigma2[n - 2];
}

inline void check_invariants(PressureCurve& c, double plateau_eps)
{
    const std::size_t n = c.size();
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (c.P[i + 1] > c.P[i] + kMonotoneSlack)
            c.violations.push_back("P increases between t = " + std::to_string(c.t[i]) + " and " +
                                   std::to_string(c.t[i + 1]));
    for (std::size_t i = 1; i + 1 < n; ++i)
        if (c.P[i + 1] - 2.0 * c.P[i] + c.P[i - 1] < -kConvexSlack)
            c.violations.push_back("negative second difference at t = " + std::to_string(c.t[i]));
    if (c.plateau) {
        for (std::size_t i = 0; i < n; ++i)
            if (c.P[i] < *c.plateau - kMonotoneSlack)
                c.violations.push_back("P below the plateau at t = " + std::to_string(c.t[i]));
        if (c.t0)
            for (std::size_t i = 0; i < n; ++i)
                if (c.t[i] >= *c.t0 && c.P[i] - *c.plateau > plateau_eps)
                    c.violations.push_back("P above the plateau tolerance after t0 at t = " +
                                           std::to_string(c.t[i]));
    }
    for (std::size_t i = 0; i < n; ++i)
        if (std::fabs(c.t[i]) < 1e-12 && std::fabs(c.P[i] - c.h_top()) > 1e-8)
            c.violations.push_back("P(0) differs from log(degree)");
    for (std::size_t i = 0; i < n; ++i)
        if (!c.converged[i]) c.violations.push_back("eigensolver stalled at t = " + std::to_string(c.t[i]));
}

} // namespace detail

/// Smallest t with P(t) - plateau < eps, refined by bisection between the
/// bracketing grid points. Fresh evaluations come from eval when given,
/// otherwise the curve is interpolated linearly.
inline double detect_transition(const PressureCurve& curve, const PressureEvaluator& eval = {},
                                double eps = kPlateauTolerance, double width = 1e-3)
{
    if (!curve.plateau)
        throw RangeError("curve has no plateau: the pressure never becomes constant (uniformly expanding map)");
    const double plateau = *curve.plateau;
    std::size_t first = curve.size();
    for (std::size_t i = 0; i < curve.size(); ++i) {
        if (curve.P[i] - plateau < eps) {
            first = i;
            break;
        }
    }
    if (first == curve.size())
        throw RangeError("plateau not reached on [" + std::to_string(curve.t_min()) + ", " +
                         std::to_string(curve.t_max()) + "]; widen the t grid to the right");
    if (first == 0)
        throw RangeError("curve starts on the plateau; widen the t grid to the left");
    double lo = curve.t[first - 1];
    double hi = curve.t[first];
    if (!eval) {
        double plo = curve.P[first - 1] - plateau;
        double phi = curve.P[first] - plateau;
        return lo + (hi - lo) * (plo - eps) / (plo - phi);
    }
    while (hi - lo > width) {
        double mid = 0.5 * (lo + hi);
        if (eval(mid) - plateau < eps)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

/// Secant slopes (P(anchor) - P(anchor - eps)) / eps for each offset.
///
/// Slopes converging to a nonzero limit keep most of their size as the offset
/// shrinks; slopes of a curve meeting the plateau tangentially shrink with the
/// offset. The verdict is "kink" when the slope at the smallest offset is at
/// most kKinkSlope and retains at least kSlopeRetention of the slope at the
/// largest offset, "smooth" otherwise, and "none" for curves without plateau.
inline SlopeReport left_slope_at_transition(const PressureCurve& curve, std::vector<double> offsets,
                                            const PressureEvaluator& eval = {},
                                            std::optional<double> anchor = std::nullopt)
{
    if (offsets.empty()) throw DomainError("slope classifier needs at least one offset");
    std::sort(offsets.begin(), offsets.end(), std::greater<>());
    if (offsets.back() <= 0.0) throw DomainError("slope offsets must be positive");
    SlopeReport r;
    if (anchor)
        r.anchor = *anchor;
    else if (curve.t0)
        r.anchor = *curve.t0;
    else
        throw RangeError("no transition detected and no anchor given");
    auto value = [&](double s) { return eval ? eval(s) : curve.value_at(s); };
    const double p0 = value(r.anchor);
    r.offsets = offsets;
    for (double eps : offsets) r.slopes.push_back((p0 - value(r.anchor - eps)) / eps);
    double first = r.slopes.front();
    double last = r.slopes.back();
    r.retention = first != 0.0 ? std::fabs(last) / std::fabs(first) : 0.0;
    if (!curve.plateau) {
        r.kind = TransitionKind::none;
        r.limit_slope = last;
        return r;
    }
    bool kink = last <= kKinkSlope && r.retention >= kSlopeRetention;
    r.kind = kink ? TransitionKind::kink : TransitionKind::smooth;
    r.limit_slope = kink ? last : 0.0;
    return r;
}

/// Derivatives, invariant checks and (when a plateau is present) transition
/// detection for an already sampled curve.
inline void finish_curve(PressureCurve& c, const PressureOptions& opt, const PressureEvaluator& eval)
{
    detail::finite_differences(c);
    c.near_plateau.assign(c.size(), false);
    if (c.plateau) {
        for (std::size_t i = 0; i < c.size(); ++i) c.near_plateau[i] = c.P[i] - *c.plateau < opt.plateau_eps;
        try {
            c.t0 = detect_transition(c, eval, opt.plateau_eps, opt.bisection_width);
            std::vector<double> offs;
            for (double e : opt.slope_offsets)
                if (*c.t0 - e >= c.t_min()) offs.push_back(e);
            if (!offs.empty()) c.slopes = left_slope_at_transition(c, offs, eval);
        } catch (const RangeError& e) {
            c.violations.push_back(e.what());
        }
    }
    detail::check_invariants(c, opt.plateau_eps);
}

/// Sweep P over an evenly spaced grid; every grid point is independent.
inline PressureCurve pressure_curve(const CircleMap& map, double t_min, double t_max, double step,
                                    const PressureOptions& opt = {})
{
    PressureCurve c;
    c.t = make_t_grid(t_min, t_max, step);
    c.P.assign(c.size(), 0.0);
    c.converged.assign(c.size(), false);
    c.plateau = theoretical_plateau(map);
    c.total_degree = map.degree();
    c.N = static_cast<int>(opt.N);
    c.method = opt.method;
    auto st = std::make_shared<OperatorStencil>(make_stencil(map, opt.N, opt.method));
    std::vector<char> conv(c.size(), 0);
    parallel_for(c.size(), [&](std::size_t i) {
        PressureValue v = pressure_at(*st, c.t[i], opt, c.plateau);
        c.P[i] = v.value;
        conv[i] = v.converged;
    });
    for (std::size_t i = 0; i < c.size(); ++i) c.converged[i] = conv[i] != 0;
    PressureEvaluator eval = [st, opt, plateau = c.plateau](double t) {
        return pressure_at(*st, t, opt, plateau).value;
    };
    finish_curve(c, opt, eval);
    return c;
}

// ---------------------------------------------------------------------------
// Periodic orbits

inline constexpr std::size_t kPeriodicBudget = 1'000'000;

namespace detail {

inline double log_sum_exp(const std::vector<double>& v)
{
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

/// Fixed point of the composed inverse branch G = h_{w_0} o ... o h_{w_{n-1}}
/// on [0,1] together with sum log|Df| along its orbit.
inline std::pair<double, double> periodic_point(const CircleMap& map, const std::vector<int>& word)
{
    auto compose = [&](double x, double& log_deriv) {
        log_deriv = 0.0;
        for (auto it = word.rbegin(); it != word.rend(); ++it) {
            x = map.inverse_branch_lifted(*it, x);
            log_deriv += map.branch_log_derivative(*it, x);
        }
        return x;
    };
    double lo = 0.0;
    double hi = 1.0;
    double ld = 0.0;
    // g(x) = G(x) - x is decreasing with g(0) >= 0 >= g(1).
    if (compose(0.0, ld) - 0.0 <= 0.0) return {0.0, ld};
    if (compose(1.0, ld) - 1.0 >= 0.0) return {1.0, ld};
    double x = 0.5;
    for (int it = 0; it < 200; ++it) {
        double gx = compose(x, ld) - x;
        if (std::fabs(gx) <= 1e-15) break;
        if (gx > 0.0)
            lo = x;
        else
            hi = x;
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon()) break;
        double slope = std::exp(-ld) - 1.0; // G' = 1 / Df^n
        double next = slope < 0.0 ? x - gx / slope : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        x = next;
    }
    compose(x, ld);
    return {x, ld};
}

} // namespace detail

/// (1/n) log sum_{f^n p = p} |Df^n(p)|^{-t}, one fixed point per word.
inline double periodic_orbit_pressure(const CircleMap& map, double t, int n)
{
    if (n < 1) throw DomainError("orbit length n must be >= 1");
    const int deg = map.degree();
    double words = std::pow(static_cast<double>(deg), n);
    if (words > static_cast<double>(kPeriodicBudget))
        throw BudgetError("periodic orbit enumeration needs " + std::to_string(words) +
                          " words, budget is " + std::to_string(kPeriodicBudget));
    const auto count = static_cast<std::size_t>(std::llround(words));
    std::vector<double> terms(count);
    parallel_for(count, [&](std::size_t idx) {
        std::vector<int> word(n);
        std::size_t r = idx;
        for (int i = n - 1; i >= 0; --i) {
            word[i] = static_cast<int>(r % deg);
            r /= deg;
        }
        auto [p, sum_log] = detail::periodic_point(map, word);
        (void)p;
        terms[idx] = -t * sum_log;
    });
    return detail::log_sum_exp(terms) / n;
}

// ---------------------------------------------------------------------------
// Equilibrium states

struct EquilibriumLyapunov {
    double value;   ///< sum_i log|Df|(x_i) mu_i
    bool converged;
    EigenData eigen;
};

inline EquilibriumLyapunov equilibrium_lyapunov(const CircleMap& map, double t, const PressureOptions& opt = {})
{
    OperatorDiscretization d = build_discretization(map, t, opt.N, opt.method);
    EigenOptions eo;
    eo.tol = opt.tol;
    eo.max_iter = opt.max_iter;
    eo.subleading = false;
    EigenData e = leading_eigen(d, eo);
    auto obs = log_derivative_on_grid(map, d.grid);
    auto avg = equilibrium_observable_average(e, obs);
    return {avg.value, avg.converged, std::move(e)};
}

// ---------------------------------------------------------------------------
// Skew products

inline constexpr double kSkewBudget = 1e8;

/// Collocation stencil of the skew-product operator on the N x N grid.
/// Row i * N + j is the point (x_i, y_j); the preimages are
/// ((x_i + m)/k, y') with f_{x'}(y') = y_j, interpolated bilinearly.
inline OperatorStencil make_skew_stencil(const SkewProduct& F, std::size_t N)
{
    check_grid_size(N);
    const double budget = static_cast<double>(N) * static_cast<double>(N) * F.total_degree();
    if (budget > kSkewBudget)
        throw BudgetError("joint skew-product grid needs N^2 * deg(F) = " + std::to_string(budget) +
                          " entries, budget is 1e8");
    const int k = F.base().k;
    const std::size_t rows = N * N;
    OperatorStencil st;
    st.method = Method::collocation;
    st.N = rows;
    st.degree = F.total_degree();
    st.grid = uniform_grid(N);
    st.row_ptr.assign(rows + 1, 0);

    // preimages[i][m] : fiber preimages of every y_j under f_{x'}, x' = (x_i + m)/k.
    struct FiberPre {
        std::size_t ix;
        double theta_x;
        std::vector<Preimage> pre; // N * fiber degree
    };
    const int fdeg = F.fiber_degree();
    std::vector<FiberPre> table(N * k);
    parallel_for(N * static_cast<std::size_t>(k), [&](std::size_t idx) {
        std::size_t i = idx / k;
        int m = static_cast<int>(idx % k);
        double xp = F.base().preimage(st.grid[i], m);
        CircleMap fiber = F.fiber_at(xp);
        auto [ix, tx] = locate(xp, N);
        FiberPre fp{ix, tx, {}};
        fp.pre.reserve(N * fdeg);
        for (std::size_t j = 0; j < N; ++j)
            for (int b = 0; b < fdeg; ++b) fp.pre.push_back(fiber.inverse_branch(b, st.grid[j]));
        table[idx] = std::move(fp);
    });

    const std::size_t per_row = static_cast<std::size_t>(k) * fdeg * 4;
    st.cols.reserve(rows * per_row);
    st.coef.reserve(rows * per_row);
    st.log_derivative.reserve(rows * per_row);
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = 0; j < N; ++j) {
            for (int m = 0; m < k; ++m) {
                const FiberPre& fp = table[i * k + m];
                for (int b = 0; b < fdeg; ++b) {
                    const Preimage& pr = fp.pre[j * fdeg + b];
                    auto [iy, ty] = locate(pr.point, N);
                    const std::size_t xs[2] = {fp.ix, (fp.ix + 1) % N};
                    const double wx[2] = {1.0 - fp.theta_x, fp.theta_x};
                    const std::size_t ys[2] = {iy, (iy + 1) % N};
                    const double wy[2] = {1.0 - ty, ty};
                    for (int a = 0; a < 2; ++a)
                        for (int c = 0; c < 2; ++c) {
                            double w = wx[a] * wy[c];
                            if (w == 0.0) continue;
                            st.cols.push_back(static_cast<std::uint32_t>(xs[a] * N + ys[c]));
                            st.coef.push_back(w);
                            st.log_derivative.push_back(pr.log_derivative);
                        }
                }
            }
            st.row_ptr[i * N + j + 1] = st.cols.size();
        }
    }
    return st;
}

/// Leading eigenvalue of the joint N x N collocation operator.
inline PressureValue joint_skew_pressure(const SkewProduct& F, double t, std::size_t N,
                                         const PressureOptions& opt = {})
{
    std::optional<double> plateau;
    if (F.intermittent_fibers()) plateau = F.entropy_base();
    return pressure_at(make_skew_stencil(F, N), t, opt, plateau);
}

/// P_F(t). Constant fibers factor as log k + P_f(t); x-dependent fibers use
/// the joint 2D operator with N points per axis.
inline PressureValue skew_pressure(const SkewProduct& F, double t, std::size_t N,
                                   const PressureOptions& opt = {})
{
    if (const auto* c = std::get_if<ConstantFiber>(&F.fiber_rule())) {
        PressureOptions o = opt;
        o.N = N;
        PressureValue v = pressure_at(c->map, t, o);
        v.value += F.entropy_base();
        return v;
    }
    return joint_skew_pressure(F, t, N, opt);
}

/// Pressure curve of a skew product: factorized for constant fibers (fiber grid
/// opt.N), joint 2D otherwise (opt.N points per axis).
inline PressureCurve skew_pressure_curve(const SkewProduct& F, double t_min, double t_max, double step,
                                         const PressureOptions& opt = {})
{
    const double shift = F.entropy_base();
    if (const auto* c = std::get_if<ConstantFiber>(&F.fiber_rule())) {
        PressureCurve fc = pressure_curve(c->map, t_min, t_max, step, opt);
        PressureCurve out = fc;
        for (double& p : out.P) p += shift;
        if (fc.plateau) out.plateau = *fc.plateau + shift;
        out.total_degree = F.total_degree();
        out.skew_product = true;
        return out;
    }
    PressureCurve c;
    c.t = make_t_grid(t_min, t_max, step);
    c.P.assign(c.size(), 0.0);
    c.converged.assign(c.size(), false);
    c.plateau = shift;
    c.total_degree = F.total_degree();
    c.skew_product = true;
    c.N = static_cast<int>(opt.N);
    c.method = Method::collocation;
    auto st = std::make_shared<OperatorStencil>(make_skew_stencil(F, opt.N));
    std::vector<char> conv(c.size(), 0);
    parallel_for(c.size(), [&](std::size_t i) {
        PressureValue v = pressure_at(*st, c.t[i], opt, c.plateau);
        c.P[i] = v.value;
        conv[i] = v.converged;
    });
    for (std::size_t i = 0; i < c.size(); ++i) c.converged[i] = conv[i] != 0;
    PressureEvaluator eval = [st, opt, plateau = c.plateau](double t) {
        return pressure_at(*st, t, opt, plateau).value;
    };
    finish_curve(c, opt, eval);
    return c;
}

} // namespace thermo
