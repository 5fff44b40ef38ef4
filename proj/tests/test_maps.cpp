#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "thermo/maps.hpp"

using namespace thermo;

namespace {

std::vector<CircleMap> sample_maps()
{
    return {make_manneville_pomeau(0.3), make_manneville_pomeau(0.5), make_manneville_pomeau(0.7),
            make_c2_intermittent(0.0),   make_c2_intermittent(0.5),   make_c2_intermittent(1.0),
            make_doubling(),             make_piecewise_linear({3.0, 1.5}),
            make_piecewise_linear({4.0, 4.0, 2.0})};
}

} // namespace

TEST(MannevillePomeau, IndifferentFixedPoint)
{
    auto m = make_manneville_pomeau(0.5);
    auto v = m.evaluate(0.0);
    EXPECT_DOUBLE_EQ(v.value, 0.0);
    EXPECT_DOUBLE_EQ(v.derivative, 1.0);
    EXPECT_EQ(m.degree(), 2);
    EXPECT_EQ(m.smoothness(), Smoothness::c1p);
    ASSERT_EQ(m.indifferent_points().size(), 1u);
    EXPECT_DOUBLE_EQ(m.indifferent_points()[0], 0.0);
}

TEST(MannevillePomeau, LeftEndOfFirstBranch)
{
    auto m = make_manneville_pomeau(0.5);
    // 1/2 + 2^{1/2} (1/2)^{3/2} = 1
    EXPECT_NEAR(m.branch_value(0, 0.5), 1.0, 1e-15);
    // 1 + 2^{1/2} (3/2) (1/2)^{1/2} = 5/2
    EXPECT_NEAR(m.branch_derivative(0, 0.5), 2.5, 1e-14);
}

TEST(MannevillePomeau, BranchIntervals)
{
    auto m = make_manneville_pomeau(0.4);
    auto iv = m.branch_intervals();
    ASSERT_EQ(iv.size(), 2u);
    EXPECT_DOUBLE_EQ(iv[0].lo, 0.0);
    EXPECT_DOUBLE_EQ(iv[0].hi, 0.5);
    EXPECT_DOUBLE_EQ(iv[1].hi, 1.0);
    // Endpoint 1/2 belongs to the right branch, which maps it to 0.
    EXPECT_EQ(m.branch_of(0.5), 1);
    EXPECT_NEAR(m.evaluate(0.5).value, 0.0, 1e-15);
}

TEST(MannevillePomeau, RejectsParameterOutOfRange)
{
    EXPECT_THROW(make_manneville_pomeau(0.0), DomainError);
    EXPECT_THROW(make_manneville_pomeau(1.0), DomainError);
    EXPECT_THROW(make_manneville_pomeau(-0.2), DomainError);
    EXPECT_THROW(make_manneville_pomeau(std::nan("")), DomainError);
}

TEST(C2Intermittent, CoefficientsAtAlphaZero)
{
    auto c = c2_coefficients(0.0);
    // b(0) = ((1/2)^3 - (1/2)^2)^{-1} = -8, a = -b
    EXPECT_NEAR(c.b, -8.0, 1e-12);
    EXPECT_NEAR(c.a, 8.0, 1e-12);
    auto m = make_c2_intermittent(0.0);
    EXPECT_DOUBLE_EQ(m.coeff_a(), c.a);
    EXPECT_DOUBLE_EQ(m.coeff_b(), c.b);
    // 1/2 + 8/8 - 8/16
    EXPECT_NEAR(m.branch_value(0, 0.5), 1.0, 1e-14);
    EXPECT_EQ(m.smoothness(), Smoothness::c2);
}

TEST(C2Intermittent, BoundaryConditionForSampledAlpha)
{
    for (int i = 0; i < 50; ++i) {
        double alpha = i / 49.0;
        auto m = make_c2_intermittent(alpha);
        EXPECT_NEAR(m.branch_value(0, 0.5), 1.0, 1e-12) << "alpha = " << alpha;
        EXPECT_DOUBLE_EQ(m.evaluate(0.0).derivative, 1.0);
    }
}

TEST(C2Intermittent, PolynomialAtQuarter)
{
    auto m = make_c2_intermittent(0.0);
    double y = 0.25;
    auto v = m.evaluate(y);
    EXPECT_NEAR(v.value, y + 8 * y * y * y - 8 * y * y * y * y, 1e-15);
    EXPECT_NEAR(v.derivative, 1 + 24 * y * y - 32 * y * y * y, 1e-14);
}

TEST(C2Intermittent, ReflectedBranch)
{
    auto m = make_c2_intermittent(0.3);
    for (double y : {0.55, 0.7, 0.9}) {
        auto v = m.evaluate(y);
        auto w = m.evaluate(1.0 - y);
        EXPECT_NEAR(v.value, wrap_unit(1.0 - w.value), 1e-14);
        EXPECT_NEAR(v.derivative, w.derivative, 1e-12);
    }
}

TEST(C2Intermittent, RejectsAlphaOutOfRange)
{
    EXPECT_THROW(make_c2_intermittent(-0.01), DomainError);
    EXPECT_THROW(make_c2_intermittent(1.01), DomainError);
}

TEST(PiecewiseLinear, Doubling)
{
    auto d = make_piecewise_linear({2.0, 2.0});
    EXPECT_EQ(d.degree(), 2);
    EXPECT_FALSE(d.has_indifferent_points());
    auto v = d.evaluate(0.3);
    EXPECT_NEAR(v.value, 0.6, 1e-15);
    EXPECT_DOUBLE_EQ(v.derivative, 2.0);
}

TEST(PiecewiseLinear, BranchLengthsAreInverseSlopes)
{
    auto m = make_piecewise_linear({3.0, 1.5});
    auto iv = m.branch_intervals();
    ASSERT_EQ(iv.size(), 2u);
    EXPECT_NEAR(iv[0].length(), 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(iv[1].length(), 2.0 / 3.0, 1e-15);
}

TEST(PiecewiseLinear, RejectsInvalidSlopes)
{
    EXPECT_THROW(make_piecewise_linear({2.0, 3.0}), DomainError);
    EXPECT_THROW(make_piecewise_linear({1.0, 1e9}), DomainError);
    EXPECT_THROW(make_piecewise_linear({}), DomainError);
}

TEST(InverseBranches, DoublingAtHalf)
{
    auto pre = make_doubling().inverse_branches(0.5);
    ASSERT_EQ(pre.size(), 2u);
    EXPECT_NEAR(pre[0].point, 0.25, 1e-15);
    EXPECT_NEAR(pre[1].point, 0.75, 1e-15);
    EXPECT_DOUBLE_EQ(pre[0].derivative, 2.0);
    EXPECT_DOUBLE_EQ(pre[1].derivative, 2.0);
}

TEST(InverseBranches, MannevillePomeauAtOne)
{
    auto m = make_manneville_pomeau(0.5);
    // x = 1 on the lift of the first branch is reached at its right end 1/2.
    EXPECT_NEAR(m.inverse_branch_lifted(0, 1.0), 0.5, 1e-12);
    // On the circle 1 = 0, and 1/2 is the preimage on the right branch.
    EXPECT_NEAR(m.inverse_branch(1, 0.0).point, 0.5, 1e-12);
    EXPECT_DOUBLE_EQ(m.inverse_branch(0, 0.0).point, 0.0);
}

TEST(InverseBranches, RoundTripAndCount)
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (const auto& m : sample_maps()) {
        for (int k = 0; k < 200; ++k) {
            double x = U(rng);
            auto pre = m.inverse_branches(x);
            ASSERT_EQ(static_cast<int>(pre.size()), m.degree());
            for (int b = 0; b < m.degree(); ++b) {
                EXPECT_EQ(pre[b].branch, b);
                EXPECT_EQ(m.branch_of(pre[b].point), b);
                auto v = m.evaluate(pre[b].point);
                EXPECT_LE(circle_distance(v.value, x), 1e-9);
                EXPECT_NEAR(pre[b].derivative, v.derivative, 1e-9 * v.derivative);
                EXPECT_NEAR(pre[b].log_derivative, std::log(v.derivative), 1e-9);
            }
        }
    }
}

TEST(Derivative, BoundedBelowByOneWithMinimumAtIndifferentPoint)
{
    const int n = 10000;
    for (const auto& m : sample_maps()) {
        double min_d = 1e300;
        double argmin = -1.0;
        for (int i = 0; i < n; ++i) {
            double x = static_cast<double>(i) / n;
            double d = m.evaluate(x).derivative;
            EXPECT_GE(d, 1.0);
            if (d < min_d) {
                min_d = d;
                argmin = x;
            }
        }
        if (m.has_indifferent_points()) {
            EXPECT_DOUBLE_EQ(min_d, 1.0);
            EXPECT_LE(circle_distance(argmin, m.indifferent_points()[0]), 1e-6);
            // Away from the indifferent point the derivative exceeds 1.
            EXPECT_GT(m.evaluate(1.0 / n).derivative, 1.0);
        } else {
            EXPECT_GT(min_d, 1.0);
        }
    }
}

TEST(Derivative, LogDerivativeSmallNearIndifferentPoint)
{
    auto m = make_c2_intermittent(0.5);
    double x = 1e-4;
    double expected = std::log1p(m.coeff_a() * (3.5) * std::pow(x, 2.5) + m.coeff_b() * 4.5 * std::pow(x, 3.5));
    EXPECT_NEAR(m.log_derivative(x), expected, 1e-20);
    EXPECT_GT(m.log_derivative(x), 0.0);
}

TEST(BaseEndo, Invariants)
{
    auto g = make_base_endo(3);
    EXPECT_EQ(g.degree(), 3);
    EXPECT_DOUBLE_EQ(g.lyapunov(), std::log(3.0));
    EXPECT_DOUBLE_EQ(g.entropy(), g.lyapunov());
    EXPECT_NEAR(g.apply(g.preimage(0.4, 2)), 0.4, 1e-15);
    EXPECT_THROW(make_base_endo(1), DomainError);
}

TEST(SkewProduct, ConstantManevillePomeauFiber)
{
    auto F = make_skew_product(make_base_endo(2), ConstantFiber{make_manneville_pomeau(0.5)});
    EXPECT_EQ(F.total_degree(), 4);
    EXPECT_GT(F.total_degree(), F.base().degree());
    EXPECT_TRUE(F.intermittent_fibers());
    EXPECT_DOUBLE_EQ(F.entropy_base(), std::log(2.0));
    EXPECT_DOUBLE_EQ(F.geometric_potential(0.3, 0.0), 0.0);
}

TEST(SkewProduct, DoublingFiberControl)
{
    auto F = make_skew_product(make_base_endo(2), ConstantFiber{make_doubling()});
    EXPECT_EQ(F.total_degree(), 4);
    EXPECT_FALSE(F.intermittent_fibers());
    EXPECT_NEAR(F.geometric_potential(0.1, 0.7), -std::log(2.0), 1e-15);
    auto [x, y] = F.apply(0.3, 0.2);
    EXPECT_NEAR(x, 0.6, 1e-15);
    EXPECT_NEAR(y, 0.4, 1e-15);
}

TEST(SkewProduct, VaryingC2FiberFamily)
{
    auto F = make_skew_product(make_base_endo(3), C2FiberFamily{0.5, 0.25});
    EXPECT_EQ(F.total_degree(), 6);
    const auto& rule = std::get<C2FiberFamily>(F.fiber_rule());
    for (int i = 0; i < 1000; ++i) {
        double x = i / 1000.0;
        double a = rule.alpha_at(x);
        EXPECT_GE(a, 0.25 - 1e-15);
        EXPECT_LE(a, 0.75 + 1e-15);
        EXPECT_NEAR(F.fiber_at(x).alpha(), a, 1e-15);
    }
    EXPECT_THROW(make_skew_product(make_base_endo(3), C2FiberFamily{0.9, 0.25}), DomainError);
}

TEST(Errors, NumericalErrorCarriesBranch)
{
    NumericalError e("no convergence", 1);
    EXPECT_EQ(e.branch(), 1);
    EXPECT_NE(std::string(e.what()).find("no convergence"), std::string::npos);
}
