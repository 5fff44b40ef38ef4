#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "thermo/pressure.hpp"
#include "thermo/transfer_operator.hpp"

using namespace thermo;

namespace {

std::vector<double> apply_to_ones(const OperatorDiscretization& d)
{
    std::vector<double> ones(d.grid_size, 1.0);
    return d.matrix.multiply(ones);
}

double max_abs_dev(const std::vector<double>& v, double c)
{
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x - c));
    return m;
}

/// Periodic piecewise-linear observable through random knot values.
struct HatObservable {
    std::vector<double> knots;
    double operator()(double x) const
    {
        const std::size_t K = knots.size();
        double s = wrap_unit(x) * static_cast<double>(K);
        auto j = std::min(static_cast<std::size_t>(s), K - 1);
        double w = s - static_cast<double>(j);
        return (1.0 - w) * knots[j] + w * knots[(j + 1) % K];
    }
};

} // namespace

class BothMethods : public ::testing::TestWithParam<Method> {};

TEST_P(BothMethods, DoublingOnConstants)
{
    auto d = make_doubling();
    for (std::size_t N : {16u, 64u, 1024u}) {
        EXPECT_LE(max_abs_dev(apply_to_ones(build_discretization(d, 0.0, N, GetParam())), 2.0), 1e-12);
        EXPECT_LE(max_abs_dev(apply_to_ones(build_discretization(d, 1.0, N, GetParam())), 1.0), 1e-12);
    }
}

TEST_P(BothMethods, ConstantSlopeWeights)
{
    auto m = make_piecewise_linear({3.0, 1.5});
    for (double t : {-1.0, 0.0, 0.7, 2.0}) {
        double c = std::pow(3.0, -t) + std::pow(1.5, -t);
        auto d = build_discretization(m, t, 256, GetParam());
        EXPECT_LE(max_abs_dev(apply_to_ones(d), c), 1e-12 * c);
    }
}

TEST_P(BothMethods, NonnegativeAndDegreeRowSums)
{
    for (const auto& m : {make_manneville_pomeau(0.5), make_c2_intermittent(0.25)}) {
        auto d = build_discretization(m, 0.0, 128, GetParam());
        for (double v : d.matrix.values()) EXPECT_GE(v, 0.0);
        EXPECT_LE(max_abs_dev(apply_to_ones(d), 2.0), 1e-9);
    }
}

INSTANTIATE_TEST_SUITE_P(Discretizations, BothMethods, ::testing::Values(Method::collocation, Method::ulam),
                         [](const auto& info) { return to_string(info.param); });

TEST(Discretization, GridSizeMustBePowerOfTwo)
{
    auto d = make_doubling();
    EXPECT_THROW(build_discretization(d, 0.0, 100), DomainError);
    EXPECT_THROW(build_discretization(d, 0.0, 8), DomainError);
    EXPECT_NO_THROW(build_discretization(d, 0.0, 16));
}

TEST(Discretization, StencilReweighting)
{
    auto m = make_manneville_pomeau(0.4);
    auto st = make_stencil(m, 64, Method::collocation);
    auto a = assemble(st, 0.8);
    auto b = build_discretization(m, 0.8, 64).matrix;
    ASSERT_EQ(a.nonzeros(), b.nonzeros());
    for (std::size_t k = 0; k < a.nonzeros(); ++k) EXPECT_DOUBLE_EQ(a.values()[k], b.values()[k]);
}

TEST(SparseMatrix, TransposeMatchesEntries)
{
    auto A = build_discretization(make_c2_intermittent(0.5), 0.3, 32).matrix;
    auto T = A.transposed();
    for (std::size_t i = 0; i < 32; ++i)
        for (std::size_t j = 0; j < 32; ++j) EXPECT_DOUBLE_EQ(A.entry(i, j), T.entry(j, i));
}

TEST(LeadingEigen, DoublingAtZero)
{
    auto e = leading_eigen(build_discretization(make_doubling(), 0.0, 256));
    EXPECT_TRUE(e.converged);
    EXPECT_NEAR(e.rho, 2.0, 1e-12);
    EXPECT_LE(max_abs_dev(e.h, 1.0), 1e-12);
    EXPECT_LE(max_abs_dev(e.nu, 1.0 / 256), 1e-12);
}

TEST(LeadingEigen, DoublingAtOneGivesLebesgue)
{
    auto e = leading_eigen(build_discretization(make_doubling(), 1.0, 256));
    EXPECT_NEAR(e.rho, 1.0, 1e-12);
    EXPECT_LE(max_abs_dev(e.mu, 1.0 / 256), 1e-12);
}

TEST(LeadingEigen, ConstantSlopeClosedForm)
{
    auto e = leading_eigen(build_discretization(make_piecewise_linear({3.0, 1.5}), 1.0, 512));
    EXPECT_NEAR(e.rho, 1.0 / 3.0 + 2.0 / 3.0, 1e-10);
}

TEST(LeadingEigen, DualityAndNormalization)
{
    const double tol = 1e-10;
    for (const auto& [m, t] : std::vector<std::pair<CircleMap, double>>{{make_manneville_pomeau(0.5), 0.3},
                                                                        {make_manneville_pomeau(0.5), -1.0},
                                                                        {make_c2_intermittent(0.5), 0.5},
                                                                        {make_piecewise_linear({3.0, 1.5}), 0.4}}) {
        EigenOptions opt;
        opt.tol = tol;
        auto e = leading_eigen(build_discretization(m, t, 1024), opt);
        ASSERT_TRUE(e.converged && e.left_converged);
        EXPECT_LE(std::fabs(std::log(e.rho_left) - std::log(e.rho)), 2 * tol);
        double snu = 0.0, smu = 0.0;
        for (double v : e.nu) {
            EXPECT_GE(v, 0.0);
            snu += v;
        }
        for (double v : e.mu) smu += v;
        EXPECT_NEAR(snu, 1.0, 1e-12);
        EXPECT_NEAR(smu, 1.0, 1e-12);
        EXPECT_LE(e.residual, 1e-8);
        EXPECT_GE(e.subleading_ratio, 0.0);
        EXPECT_LE(e.subleading_ratio, 1.0);
    }
}

TEST(LeadingEigen, EigenfunctionBoundedAwayFromZero)
{
    auto m = make_manneville_pomeau(0.5);
    for (double t : {-1.0, 0.0, 0.5, 0.85}) {
        auto e = leading_eigen(build_discretization(m, t, 2048));
        ASSERT_TRUE(e.converged);
        auto [lo, hi] = std::minmax_element(e.h.begin(), e.h.end());
        EXPECT_GT(*lo / *hi, 0.0) << "t = " << t;
    }
}

TEST(LeadingEigen, EquilibriumMeasureIsInvariant)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const std::size_t N = 2048;
    for (const auto& [m, t] : std::vector<std::pair<CircleMap, double>>{{make_manneville_pomeau(0.5), 0.5},
                                                                        {make_c2_intermittent(0.5), 0.0},
                                                                        {make_piecewise_linear({3.0, 1.5}), 0.0}}) {
        auto d = build_discretization(m, t, N);
        auto e = leading_eigen(d);
        for (int k = 0; k < 20; ++k) {
            HatObservable g;
            for (int j = 0; j < 8; ++j) g.knots.push_back(U(rng));
            double before = 0.0, after = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                before += e.mu[i] * g(d.grid[i]);
                after += e.mu[i] * g(m.evaluate(d.grid[i]).value);
            }
            EXPECT_LE(std::fabs(after - before), 5.0 / N);
        }
    }
}

TEST(LeadingEigen, RefinementDifferencesShrink)
{
    auto m = make_manneville_pomeau(0.5);
    for (double t : {-1.0, 0.3, 0.8}) {
        std::vector<double> P;
        for (std::size_t N = 256; N <= 16384; N *= 2) P.push_back(pressure_at(m, t, {.N = N}).value);
        for (std::size_t i = 2; i < P.size(); ++i)
            EXPECT_LE(std::fabs(P[i] - P[i - 1]), std::fabs(P[i - 1] - P[i - 2]) + 1e-13)
                << "t = " << t << ", step " << i;
    }
}

TEST(ObservableAverage, ClosedForms)
{
    auto dbl = make_doubling();
    auto d = build_discretization(dbl, 0.7, 512);
    auto e = leading_eigen(d);
    auto logd = log_derivative_on_grid(dbl, d.grid);
    EXPECT_NEAR(equilibrium_observable_average(e, logd).value, std::log(2.0), 1e-12);

    auto mp = make_manneville_pomeau(0.5);
    auto dm = build_discretization(mp, 0.0, 512);
    auto em = leading_eigen(dm);
    std::vector<double> one(512, 1.0);
    auto avg = equilibrium_observable_average(em, one);
    EXPECT_TRUE(avg.converged);
    EXPECT_NEAR(avg.value, 1.0, 1e-12);

    // Maximal-entropy measure of (3, 3/2): each branch cylinder has mass 1/2.
    auto pwl = make_piecewise_linear({3.0, 1.5});
    auto dp = build_discretization(pwl, 0.0, 4096);
    auto ep = leading_eigen(dp);
    double expected = 0.5 * std::log(3.0) + 0.5 * std::log(1.5);
    EXPECT_NEAR(equilibrium_observable_average(ep, log_derivative_on_grid(pwl, dp.grid)).value, expected, 2e-3);

    EXPECT_THROW(equilibrium_observable_average(ep, one), DomainError);
}

TEST(GapCertificate, DoublingCertified)
{
    auto c = pressure_curve(make_doubling(), -1.0, 2.0, 0.05, {.N = 256});
    auto g = gap_certificate(c, 0.0, 1);
    EXPECT_NEAR(g.rho_estimate, 2.0, 1e-9);
    EXPECT_NEAR(g.ess_bound, 1.0, 1e-9);
    EXPECT_TRUE(g.certified);
}

TEST(GapCertificate, MannevillePomeauBeforeAndAtTransition)
{
    auto c = pressure_curve(make_manneville_pomeau(0.5), 0.0, 2.0, 0.05, {.N = 16384});
    EXPECT_TRUE(gap_certificate(c, 0.0, 1).certified);
    EXPECT_NEAR(gap_certificate(c, 0.0, 1).rho_estimate, 2.0, 1e-9);
    auto g = gap_certificate(c, 1.0, 1);
    EXPECT_FALSE(g.certified);
    EXPECT_NEAR(g.ess_bound, 1.0, 1e-3);
    EXPECT_THROW(gap_certificate(c, 1.5, 1), RangeError);
    EXPECT_THROW(gap_certificate(c, 0.5, 0), DomainError);
}
