#pragma once

/**
 * @file ldp.hpp
 * @brief Large deviations of Birkhoff averages of log|Df| under the measure
 *        of maximal entropy, by exhaustive n-cylinder enumeration.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "maps.hpp"
#include "multifractal.hpp"
#include "parallel.hpp"

namespace thermo {

inline constexpr double kCylinderBudget = 1e7;

struct CylinderEnsemble {
    int n = 0;
    int degree = 0;
    double anchor = 0.0;
    std::vector<double> representatives; ///< index = sum_k w_k deg^(n-1-k)
    std::vector<double> birkhoff_avg;

    std::size_t size() const noexcept { return birkhoff_avg.size(); }
    double weight() const { return std::pow(static_cast<double>(degree), -n); }
    double total_weight() const { return static_cast<double>(size()) * weight(); }
};

/// Fixed point of branch 0 when it is hyperbolic, else the branch-0 preimage of 1/2.
inline double default_anchor(const CircleMap& map)
{
    Preimage zero = map.inverse_branch(0, 0.0);
    bool indifferent = std::fabs(zero.derivative - 1.0) < 1e-12;
    if (!indifferent) return zero.point;
    return map.inverse_branch(0, 0.5).point;
}

namespace detail {

/// Average of log|Df| for a constant-slope word from its symbol counts.
inline double composition_average(const std::vector<int>& counts, const std::vector<double>& log_slopes, int n)
{
    double acc = 0.0;
    for (std::size_t b = 0; b < counts.size(); ++b) acc += counts[b] * log_slopes[b];
    return acc / n;
}

inline std::vector<double> log_slopes(const CircleMap& map)
{
    std::vector<double> out;
    for (double s : map.slopes()) out.push_back(std::log(s));
    return out;
}

inline void check_budget(int degree, int n)
{
    double words = std::pow(static_cast<double>(degree), n);
    if (words > kCylinderBudget)
        throw BudgetError("cylinder enumeration needs deg^n = " + std::to_string(words) +
                          " words, budget is 1e7");
}

} // namespace detail

/// Enumerate all deg^n cylinders. Each representative is the anchor pulled back
/// through the word; log|Df| is summed along that chain.
inline CylinderEnsemble enumerate_cylinders(const CircleMap& map, int n, std::optional<double> anchor = std::nullopt)
{
    if (n < 1) throw DomainError("word length n must be >= 1");
    const int deg = map.degree();
    detail::check_budget(deg, n);
    CylinderEnsemble ens;
    ens.n = n;
    ens.degree = deg;
    ens.anchor = anchor ? wrap_unit(*anchor) : default_anchor(map);
    std::size_t total = 1;
    for (int k = 0; k < n; ++k) total *= static_cast<std::size_t>(deg);
    ens.representatives.assign(total, 0.0);
    ens.birkhoff_avg.assign(total, 0.0);
    const bool pwl = map.family() == Family::piecewise_linear;
    const std::vector<double> logs = pwl ? detail::log_slopes(map) : std::vector<double>{};

    std::vector<std::size_t> place(n);
    place[n - 1] = 1;
    for (int k = n - 2; k >= 0; --k) place[k] = place[k + 1] * static_cast<std::size_t>(deg);

    // Partition by the last symbol of the word (the first inverse branch applied).
    parallel_for(static_cast<std::size_t>(deg), [&](std::size_t last) {
        std::vector<int> counts(deg, 0);
        struct Walk {
            const CircleMap& map;
            CylinderEnsemble& ens;
            const std::vector<std::size_t>& place;
            const std::vector<double>& logs;
            std::vector<int>& counts;
            bool pwl;
            int deg;

            void go(int k, int b, double x, double sum, std::size_t index)
            {
                Preimage pre = map.inverse_branch(b, x);
                sum += pre.log_derivative;
                index += static_cast<std::size_t>(b) * place[k];
                ++counts[b];
                if (k == 0) {
                    ens.representatives[index] = pre.point;
                    ens.birkhoff_avg[index] =
                        pwl ? detail::composition_average(counts, logs, ens.n) : sum / ens.n;
                } else {
                    for (int c = 0; c < deg; ++c) go(k - 1, c, pre.point, sum, index);
                }
                --counts[b];
            }
        } walk{map, ens, place, logs, counts, pwl, deg};
        walk.go(n - 1, static_cast<int>(last), ens.anchor, 0.0, 0);
    });
    return ens;
}

/// Symbol sequence of the forward orbit of x for n steps.
inline std::vector<int> itinerary(const CircleMap& map, double x, int n)
{
    std::vector<int> out;
    for (int k = 0; k < n; ++k) {
        out.push_back(map.branch_of(x));
        x = map.evaluate(x).value;
    }
    return out;
}

inline std::vector<int> word_of(std::size_t index, int degree, int n)
{
    std::vector<int> w(n);
    for (int k = n - 1; k >= 0; --k) {
        w[k] = static_cast<int>(index % static_cast<std::size_t>(degree));
        index /= static_cast<std::size_t>(degree);
    }
    return w;
}

/// (1/n) log of the mu_0 mass of words with Birkhoff average in [a, b]; -inf when empty.
inline double empirical_rate(const CylinderEnsemble& ens, double a, double b)
{
    if (a > b) throw DomainError("empirical rate needs a <= b");
    std::uint64_t count = 0;
    for (double v : ens.birkhoff_avg)
        if (v >= a && v <= b) ++count;
    if (count == 0) return -std::numeric_limits<double>::infinity();
    return (std::log(static_cast<double>(count)) - ens.n * std::log(static_cast<double>(ens.degree))) / ens.n;
}

/// Same quantity for a constant-slope map by multinomial counting, without
/// enumerating words.
inline double exact_cylinder_rate(const CircleMap& map, int n, double a, double b)
{
    if (map.family() != Family::piecewise_linear)
        throw DomainError("exact cylinder counting needs a piecewise-linear map");
    if (n < 1) throw DomainError("word length n must be >= 1");
    if (a > b) throw DomainError("empirical rate needs a <= b");
    const int deg = map.degree();
    const auto logs = detail::log_slopes(map);
    // Multinomial coefficients via exact integer recursion over compositions.
    long double total = 0.0L;
    std::vector<int> counts(deg, 0);
    auto binom = [](int m, int k) {
        long double r = 1.0L;
        for (int i = 1; i <= k; ++i) r = r * (m - k + i) / i;
        return std::round(r);
    };
    struct Rec {
        int deg, n;
        double a, b;
        const std::vector<double>& logs;
        std::vector<int>& counts;
        long double& total;
        decltype(binom)& C;
        void go(int sym, int left, long double coef)
        {
            if (sym == deg - 1) {
                counts[sym] = left;
                double avg = detail::composition_average(counts, logs, n);
                if (avg >= a && avg <= b) total += coef;
                return;
            }
            for (int k = 0; k <= left; ++k) {
                counts[sym] = k;
                go(sym + 1, left - k, coef * C(left, k));
            }
        }
    } rec{deg, n, a, b, logs, counts, total, binom};
    rec.go(0, n, 1.0L);
    if (total == 0.0L) return -std::numeric_limits<double>::infinity();
    return static_cast<double>((std::log(total) - n * std::log(static_cast<long double>(deg))) / n);
}

/// -inf_{[a,b]} I from the discrete Legendre transform.
inline double legendre_rate(const RateFunction& rate, double a, double b, std::size_t points = 401)
{
    double best = std::min(rate.at(a), rate.at(b));
    if (rate.lambda_mu0 >= a && rate.lambda_mu0 <= b) best = std::min(best, rate.at(rate.lambda_mu0));
    for (std::size_t i = 1; i + 1 < points; ++i)
        best = std::min(best, rate.at(a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1)));
    return -best;
}

struct RateRow {
    int n = 0;
    double empirical = 0.0;
    double legendre = 0.0;
    double gap = 0.0;
    double observed_min = 0.0; ///< range of Birkhoff averages at this n
    double observed_max = 0.0;
};

struct RateReport {
    double a = 0.0;
    double b = 0.0;
    std::vector<RateRow> rows;
    double extrapolated = std::numeric_limits<double>::quiet_NaN(); ///< c0 of c0 + c1/n
    double slope_c1 = std::numeric_limits<double>::quiet_NaN();
    double extrapolated_gap = std::numeric_limits<double>::quiet_NaN();
    /// |empirical(n) - extrapolated| non-increasing along n_list
    bool monotone = false;
    bool control_case = false;
    bool exact_path = false;
};

/// Least-squares fit y = c0 + c1 / n.
inline std::pair<double, double> fit_inverse_n(const std::vector<int>& n, const std::vector<double>& y)
{
    const std::size_t m = n.size();
    if (m == 0) throw DataError("fit needs at least one point");
    if (m == 1) return {y[0], 0.0};
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < m; ++i) {
        double x = 1.0 / n[i];
        sx += x;
        sy += y[i];
        sxx += x * x;
        sxy += x * y[i];
    }
    double den = m * sxx - sx * sx;
    double c1 = (m * sxy - sx * sy) / den;
    double c0 = (sy - c1 * sx) / m;
    return {c0, c1};
}

inline RateReport compare_rate(const CircleMap& map, const std::vector<int>& n_list, double a, double b,
                               const RateFunction& rate)
{
    if (n_list.empty()) throw DomainError("n_list must not be empty");
    if (a > b) throw DomainError("interval needs a <= b");
    RateReport rep;
    rep.a = a;
    rep.b = b;
    rep.control_case = rate.degenerate;
    rep.exact_path = map.family() == Family::piecewise_linear;
    const double target = rate.degenerate ? 0.0 : legendre_rate(rate, a, b);
    for (int n : n_list) detail::check_budget(map.degree(), n);
    std::vector<int> ns;
    std::vector<double> ys;
    for (int n : n_list) {
        RateRow row;
        row.n = n;
        CylinderEnsemble ens = enumerate_cylinders(map, n);
        row.empirical = rep.exact_path ? exact_cylinder_rate(map, n, a, b) : empirical_rate(ens, a, b);
        row.legendre = target;
        row.gap = row.empirical - target;
        auto [mn, mx] = std::minmax_element(ens.birkhoff_avg.begin(), ens.birkhoff_avg.end());
        row.observed_min = *mn;
        row.observed_max = *mx;
        rep.rows.push_back(row);
        if (std::isfinite(row.empirical)) {
            ns.push_back(n);
            ys.push_back(row.empirical);
        }
    }
    if (!ns.empty()) {
        auto [c0, c1] = fit_inverse_n(ns, ys);
        rep.extrapolated = c0;
        rep.slope_c1 = c1;
        rep.extrapolated_gap = c0 - target;
        rep.monotone = true;
        for (std::size_t i = 1; i < ys.size(); ++i)
            if (std::fabs(ys[i] - c0) > std::fabs(ys[i - 1] - c0) + 1e-12) rep.monotone = false;
    }
    return rep;
}

} // namespace thermo
