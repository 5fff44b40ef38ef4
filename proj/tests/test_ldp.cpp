#include <gtest/gtest.h>

#include <cmath>
#include <algorithm>

#include "thermo/ldp.hpp"
#include "thermo/multifractal.hpp"
#include "thermo/pressure.hpp"

using namespace thermo;

namespace {

const double kLog3 = std::log(3.0);
const double kLog15 = std::log(1.5);

double mixture(double q) { return q * kLog3 + (1.0 - q) * kLog15; }

// Direct binomial sum, independent of the library's recursion.
double binomial_rate(int n, double a, double b)
{
    double total = 0.0;
    for (int k = 0; k <= n; ++k) {
        double avg = (k * kLog3 + (n - k) * kLog15) / n;
        if (avg < a || avg > b) continue;
        total += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
    }
    if (total == 0.0) return -INFINITY;
    return (std::log(total) - n * std::log(2.0)) / n;
}

void expect_rate_eq(double got, double want)
{
    if (std::isinf(want))
        EXPECT_EQ(got, want);
    else
        EXPECT_NEAR(got, want, 1e-13);
}

const RateFunction& pwl_rate()
{
    static const RateFunction r =
        rate_function(pressure_curve(make_piecewise_linear({3.0, 1.5}), -3.0, 3.0, 0.02, {.N = 512}));
    return r;
}

} // namespace

TEST(Cylinders, DoublingWordsAreUniform)
{
    auto ens = enumerate_cylinders(make_doubling(), 3);
    ASSERT_EQ(ens.size(), 8u);
    for (double v : ens.birkhoff_avg) EXPECT_NEAR(v, std::log(2.0), 1e-14);
}

TEST(Cylinders, PiecewiseLinearAverages)
{
    auto m = make_piecewise_linear({3.0, 1.5});
    const int n = 9;
    auto ens = enumerate_cylinders(m, n);
    for (std::size_t i = 0; i < ens.size(); ++i) {
        auto w = word_of(i, 2, n);
        int k = static_cast<int>(std::count(w.begin(), w.end(), 0));
        EXPECT_NEAR(ens.birkhoff_avg[i], (k * kLog3 + (n - k) * kLog15) / n, 1e-14);
    }
}

TEST(Cylinders, RepresentativesFollowTheirWords)
{
    for (const auto& m : {make_manneville_pomeau(0.5), make_c2_intermittent(0.25), make_piecewise_linear({3.0, 1.5})}) {
        const int n = 8;
        // An anchor off the forward orbit of the branch endpoints keeps representatives interior.
        auto ens = enumerate_cylinders(m, n, 0.37);
        for (std::size_t i = 0; i < ens.size(); i += 7) {
            double x = ens.representatives[i];
            EXPECT_EQ(itinerary(m, x, n), word_of(i, m.degree(), n)) << "word " << i;
            // Birkhoff average of log|Df| along the forward orbit.
            double sum = 0.0;
            for (int k = 0; k < n; ++k) {
                sum += m.log_derivative(x);
                x = m.evaluate(x).value;
            }
            EXPECT_NEAR(ens.birkhoff_avg[i], sum / n, 1e-9);
            EXPECT_LE(circle_distance(x, ens.anchor), 1e-9);
        }
    }
}

TEST(Cylinders, DefaultAnchor)
{
    EXPECT_DOUBLE_EQ(default_anchor(make_piecewise_linear({3.0, 1.5})), 0.0);
    auto mp = make_manneville_pomeau(0.5);
    double a = default_anchor(mp);
    EXPECT_NEAR(mp.evaluate(a).value, 0.5, 1e-12);
    EXPECT_LT(a, 0.5);
    auto ens = enumerate_cylinders(make_piecewise_linear({3.0, 1.5}), 4);
    EXPECT_DOUBLE_EQ(ens.anchor, 0.0);
}

TEST(Cylinders, WeightsSumToOne)
{
    for (int n : {1, 5, 12}) {
        auto ens = enumerate_cylinders(make_manneville_pomeau(0.3), n);
        EXPECT_NEAR(ens.total_weight(), 1.0, 1e-12);
    }
}

TEST(Cylinders, BudgetAndDomain)
{
    EXPECT_THROW(enumerate_cylinders(make_doubling(), 24), BudgetError);
    EXPECT_THROW(enumerate_cylinders(make_piecewise_linear({4.0, 4.0, 2.0}), 15), BudgetError);
    EXPECT_THROW(enumerate_cylinders(make_doubling(), 0), DomainError);
    EXPECT_NO_THROW(enumerate_cylinders(make_doubling(), 23));
}

TEST(EmpiricalRate, FullRangeAndEmptySelection)
{
    auto ens = enumerate_cylinders(make_manneville_pomeau(0.5), 10);
    EXPECT_NEAR(empirical_rate(ens, 0.0, 10.0), 0.0, 1e-12);
    EXPECT_EQ(empirical_rate(ens, 5.0, 6.0), -INFINITY);
    EXPECT_THROW(empirical_rate(ens, 0.5, 0.4), DomainError);
    auto dbl = enumerate_cylinders(make_doubling(), 6);
    EXPECT_NEAR(empirical_rate(dbl, 0.69, 0.70), 0.0, 1e-12);
}

TEST(EmpiricalRate, ExactOnConstantSlopeMaps)
{
    auto m = make_piecewise_linear({3.0, 1.5});
    for (int n : {6, 12, 16}) {
        auto ens = enumerate_cylinders(m, n);
        for (double q : {0.25, 0.5, 0.7}) {
            double a = mixture(q) - 0.05, b = mixture(q) + 0.05;
            double direct = binomial_rate(n, a, b);
            SCOPED_TRACE(testing::Message() << "n = " << n << ", q = " << q);
            expect_rate_eq(exact_cylinder_rate(m, n, a, b), direct);
            expect_rate_eq(empirical_rate(ens, a, b), direct);
        }
    }
    EXPECT_THROW(exact_cylinder_rate(make_manneville_pomeau(0.5), 8, 0.1, 0.2), DomainError);
}

TEST(RateReport, ConcentrationAtMeanExponent)
{
    auto m = make_manneville_pomeau(0.5);
    auto r = rate_function(pressure_curve(m, -3.0, 2.0, 0.02, {.N = 4096}));
    auto rep = compare_rate(m, {10, 14, 18}, r.lambda_mu0 - 0.05, r.lambda_mu0 + 0.05, r);
    EXPECT_FALSE(rep.exact_path);
    ASSERT_EQ(rep.rows.size(), 3u);
    EXPECT_NEAR(rep.rows.back().empirical, 0.0, 0.05);
    EXPECT_NEAR(rep.rows.back().legendre, 0.0, 1e-9);
    for (const auto& row : rep.rows) EXPECT_LE(row.observed_min, row.observed_max);
    EXPECT_LE(rep.rows[1].observed_min, rep.rows[0].observed_min);
}

TEST(RateReport, DoublingIsControlCase)
{
    auto d = make_doubling();
    auto r = rate_function(pressure_curve(d, -1.0, 1.0, 0.05, {.N = 64}));
    auto rep = compare_rate(d, {8, 12}, 0.6, 0.8, r);
    EXPECT_TRUE(rep.control_case);
    EXPECT_TRUE(rep.exact_path);
    EXPECT_NEAR(rep.extrapolated, 0.0, 1e-12);
    EXPECT_TRUE(rep.monotone);
}

TEST(RateReport, BinomialOracleNearMean)
{
    auto m = make_piecewise_linear({3.0, 1.5});
    double s = mixture(0.45);
    auto rep = compare_rate(m, {12, 16, 20}, s - 0.05, s + 0.05, pwl_rate());
    EXPECT_TRUE(rep.exact_path);
    EXPECT_TRUE(rep.monotone);
    EXPECT_LE(std::fabs(rep.extrapolated_gap), 0.03);
    for (const auto& row : rep.rows) EXPECT_NEAR(row.empirical, binomial_rate(row.n, s - 0.05, s + 0.05), 1e-13);
}

TEST(RateReport, LegendreTargetMatchesClosedForm)
{
    // -inf I over an interval left of the mean is attained at its right end.
    double a = mixture(0.2), b = mixture(0.3);
    double q = 0.3;
    double I = std::log(2.0) + q * std::log(q) + (1.0 - q) * std::log(1.0 - q);
    EXPECT_NEAR(legendre_rate(pwl_rate(), a, b), -I, 2e-4);
}

TEST(FitInverseN, RecoversAffineModel)
{
    std::vector<int> n{10, 20, 40};
    std::vector<double> y;
    for (int k : n) y.push_back(-0.3 + 2.0 / k);
    auto [c0, c1] = fit_inverse_n(n, y);
    EXPECT_NEAR(c0, -0.3, 1e-12);
    EXPECT_NEAR(c1, 2.0, 1e-10);
    EXPECT_THROW(fit_inverse_n({}, {}), DataError);
}
