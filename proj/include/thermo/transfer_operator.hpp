#pragma once

/**
 * @file transfer_operator.hpp
 * @brief Finite-rank approximations of L_t g(x) = sum_{f(y)=x} |Df(y)|^{-t} g(y).
 *
 * Two discretizations on the uniform grid x_i = i/N:
 *
 *  - collocation: (L g)(x_i) with g replaced by its periodic piecewise-linear
 *    interpolant. Row i holds two interpolation weights per branch preimage.
 *  - ulam: averages over cell C_i = [i/N, (i+1)/N) of L applied to cell
 *    indicators, by midpoint quadrature in the target cell. Entry (i, j) is the
 *    |Df|^{-t}-weighted mass moved from cell j into cell i.
 *
 * Both matrices are nonnegative and map the constant vector to deg * 1 when
 * t = 0. The preimage geometry does not depend on t, so it is computed once in
 * an OperatorStencil and reweighted for every t of a sweep.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "errors.hpp"
#include "maps.hpp"
#include "pressure_curve.hpp"

namespace thermo {

/// Row-compressed nonnegative matrix. Duplicate column indices within a row
/// are allowed and summed implicitly.
class SparseMatrix {
public:
    SparseMatrix() = default;
    SparseMatrix(std::size_t n, std::vector<std::size_t> row_ptr, std::vector<std::uint32_t> cols,
                 std::vector<double> vals)
        : n_(n), row_ptr_(std::move(row_ptr)), cols_(std::move(cols)), vals_(std::move(vals))
    {
    }

    std::size_t size() const noexcept { return n_; }
    std::size_t nonzeros() const noexcept { return vals_.size(); }
    std::span<const std::size_t> row_ptr() const noexcept { return row_ptr_; }
    std::span<const std::uint32_t> cols() const noexcept { return cols_; }
    std::span<const double> values() const noexcept { return vals_; }

    void multiply(std::span<const double> x, std::span<double> y) const
    {
        for (std::size_t i = 0; i < n_; ++i) {
            double acc = 0.0;
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) acc += vals_[k] * x[cols_[k]];
            y[i] = acc;
        }
    }

    std::vector<double> multiply(std::span<const double> x) const
    {
        std::vector<double> y(n_);
        multiply(x, y);
        return y;
    }

    SparseMatrix transposed() const
    {
        std::vector<std::size_t> ptr(n_ + 1, 0);
        for (auto c : cols_) ++ptr[c + 1];
        std::partial_sum(ptr.begin(), ptr.end(), ptr.begin());
        std::vector<std::uint32_t> cols(vals_.size());
        std::vector<double> vals(vals_.size());
        std::vector<std::size_t> fill(ptr.begin(), ptr.end() - 1);
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
                std::size_t dst = fill[cols_[k]]++;
                cols[dst] = static_cast<std::uint32_t>(i);
                vals[dst] = vals_[k];
            }
        }
        return SparseMatrix(n_, std::move(ptr), std::move(cols), std::move(vals));
    }

    double entry(std::size_t i, std::size_t j) const
    {
        double acc = 0.0;
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
            if (cols_[k] == j) acc += vals_[k];
        return acc;
    }

private:
    std::size_t n_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::uint32_t> cols_;
    std::vector<double> vals_;
};

/// t-independent part of a discretization: for every matrix entry the
/// geometric coefficient and the log-derivative of the branch that produced it.
struct OperatorStencil {
    Method method = Method::collocation;
    std::size_t N = 0;
    int degree = 0;
    std::vector<double> grid;
    std::vector<std::size_t> row_ptr;
    std::vector<std::uint32_t> cols;
    std::vector<double> coef;
    std::vector<double> log_derivative;
};

struct OperatorDiscretization {
    Method method = Method::collocation;
    std::size_t grid_size = 0;
    double t = 0.0;
    SparseMatrix matrix;
    std::vector<double> grid;
};

/// Ulam midpoint samples per target cell.
inline constexpr int kUlamSamples = 8;

inline void check_grid_size(std::size_t N)
{
    if (N < 16 || (N & (N - 1)) != 0)
        throw DomainError("grid size N must be a power of two >= 16, got " + std::to_string(N));
}

inline std::vector<double> uniform_grid(std::size_t N)
{
    std::vector<double> g(N);
    for (std::size_t i = 0; i < N; ++i) g[i] = static_cast<double>(i) / static_cast<double>(N);
    return g;
}

/// Cell index and position inside the cell of a circle point on the N-grid.
inline std::pair<std::size_t, double> locate(double y, std::size_t N)
{
    double s = wrap_unit(y) * static_cast<double>(N);
    auto j = static_cast<std::size_t>(s);
    if (j >= N) j = N - 1;
    return {j, s - static_cast<double>(j)};
}

inline OperatorStencil make_stencil(const CircleMap& map, std::size_t N, Method method)
{
    check_grid_size(N);
    OperatorStencil st;
    st.method = method;
    st.N = N;
    st.degree = map.degree();
    st.grid = uniform_grid(N);
    st.row_ptr.assign(1, 0);
    const int deg = map.degree();
    const std::size_t per_row = method == Method::collocation ? 2 * deg : kUlamSamples * deg;
    st.cols.reserve(N * per_row);
    st.coef.reserve(N * per_row);
    st.log_derivative.reserve(N * per_row);
    auto push = [&](std::size_t col, double c, double logd) {
        st.cols.push_back(static_cast<std::uint32_t>(col));
        st.coef.push_back(c);
        st.log_derivative.push_back(logd);
    };
    for (std::size_t i = 0; i < N; ++i) {
        if (method == Method::collocation) {
            for (int b = 0; b < deg; ++b) {
                Preimage pre = map.inverse_branch(b, st.grid[i]);
                auto [j, theta] = locate(pre.point, N);
                if (theta < 1.0) push(j, 1.0 - theta, pre.log_derivative);
                if (theta > 0.0) push((j + 1) % N, theta, pre.log_derivative);
            }
        } else {
            for (int m = 0; m < kUlamSamples; ++m) {
                double x = (static_cast<double>(i) + (m + 0.5) / kUlamSamples) / static_cast<double>(N);
                for (int b = 0; b < deg; ++b) {
                    Preimage pre = map.inverse_branch(b, x);
                    push(locate(pre.point, N).first, 1.0 / kUlamSamples, pre.log_derivative);
                }
            }
        }
        st.row_ptr.push_back(st.cols.size());
    }
    return st;
}

/// Weighted matrix for parameter t: entry = coef * exp(-t log|Df|).
inline SparseMatrix assemble(const OperatorStencil& st, double t)
{
    std::vector<double> vals(st.coef.size());
    for (std::size_t k = 0; k < vals.size(); ++k) vals[k] = st.coef[k] * std::exp(-t * st.log_derivative[k]);
    return SparseMatrix(st.N, st.row_ptr, st.cols, std::move(vals));
}

inline OperatorDiscretization build_discretization(const OperatorStencil& st, double t)
{
    return {st.method, st.N, t, assemble(st, t), st.grid};
}

inline OperatorDiscretization build_discretization(const CircleMap& map, double t, std::size_t N,
                                                   Method method = Method::collocation)
{
    return build_discretization(make_stencil(map, N, method), t);
}

// ---------------------------------------------------------------------------
// Leading eigendata

struct EigenOptions {
    double tol = 1e-10;
    long max_iter = 100000;
    bool left = true;       ///< also iterate the transpose (conformal weights)
    bool subleading = true; ///< deflated estimate of |lambda_2| / rho
    long deflation_iter = 3000;
    double vector_tol = 1e-9; ///< eigenvector stopping tolerance (0: eigenvalue only)
};

struct EigenData {
    double rho = 0.0;      ///< right (Perron) estimate
    double rho_left = 0.0; ///< estimate from the transposed iteration
    std::vector<double> h;  ///< right eigenvector, sup-normalized
    std::vector<double> nu; ///< left eigenvector, nonnegative, sums to 1
    std::vector<double> mu; ///< h * nu renormalized to a probability vector
    double subleading_ratio = 0.0;
    long iterations = 0;
    long left_iterations = 0;
    bool converged = false;
    bool left_converged = false;
    double residual = 0.0; ///< ||M h - rho h||_inf / (rho ||h||_inf)
};

namespace detail {

struct PowerResult {
    double rho;
    std::vector<double> v;
    long iterations;
    bool converged;
};

/// Power iteration for a nonnegative matrix from the constant vector.
/// sup_norm selects the normalization: max entry 1 (true) or entry sum 1.
/// Stops when successive norm estimates differ by < tol (relative) and, if
/// vector_tol > 0, the normalized iterate moves by < vector_tol in sup norm
/// relative to its largest entry. With bound_error the step must also keep the
/// geometric tail estimate step * r / (1 - r) below tol, r being the observed
/// contraction of successive steps.
inline PowerResult power_iterate(const SparseMatrix& A, double tol, long max_iter, bool sup_norm,
                                 double vector_tol = 0.0, bool bound_error = false)
{
    const std::size_t n = A.size();
    std::vector<double> v(n, sup_norm ? 1.0 : 1.0 / static_cast<double>(n));
    std::vector<double> w(n);
    double rho = 0.0;
    double prev = -1.0;
    double prev_step = -1.0;
    for (long it = 1; it <= max_iter; ++it) {
        A.multiply(v, w);
        double norm = 0.0;
        if (sup_norm) {
            for (double x : w) norm = std::max(norm, x);
        } else {
            for (double x : w) norm += x;
        }
        if (!(norm > 0.0) || !std::isfinite(norm))
            throw NumericalError("power iteration produced a non-positive or non-finite iterate");
        rho = norm;
        double moved = 0.0;
        double vmax = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double next = w[i] / norm;
            moved = std::max(moved, std::fabs(next - v[i]));
            vmax = std::max(vmax, next);
            v[i] = next;
        }
        bool vector_ok = vector_tol <= 0.0 || moved <= vector_tol * vmax;
        double step = prev > 0.0 ? std::fabs(rho - prev) : -1.0;
        bool tail_ok = true;
        if (bound_error && step > 0.0) {
            double r = prev_step > 0.0 ? std::min(step / prev_step, 0.999) : 0.999;
            tail_ok = step * r / (1.0 - r) < tol * rho;
        }
        if (prev > 0.0 && step < tol * rho && vector_ok && tail_ok) return {rho, std::move(v), it, true};
        prev_step = step;
        prev = rho;
    }
    return {rho, std::move(v), max_iter, false};
}

/// Geometric growth rate of A restricted to the complement of the Perron pair.
inline double deflated_growth(const SparseMatrix& A, std::span<const double> h, std::span<const double> nu,
                              long iterations)
{
    const std::size_t n = A.size();
    double nh = 0.0;
    for (std::size_t i = 0; i < n; ++i) nh += nu[i] * h[i];
    if (!(nh > 0.0)) return 0.0;
    auto project = [&](std::vector<double>& v) {
        double c = 0.0;
        for (std::size_t i = 0; i < n; ++i) c += nu[i] * v[i];
        c /= nh;
        for (std::size_t i = 0; i < n; ++i) v[i] -= c * h[i];
    };
    auto norm2 = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x * x;
        return std::sqrt(s);
    };
    std::vector<double> v(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
        double x = static_cast<double>(i) / static_cast<double>(n);
        v[i] = std::cos(2.0 * std::numbers::pi * x) + 0.5 * std::sin(6.0 * std::numbers::pi * x) +
               0.25 * std::cos(10.0 * std::numbers::pi * x + 0.3);
    }
    project(v);
    double nv = norm2(v);
    if (!(nv > 0.0)) return 0.0;
    for (double& x : v) x /= nv;
    // Average the log-growth over the second half to smooth complex pairs.
    double log_growth = 0.0;
    long counted = 0;
    for (long it = 0; it < iterations; ++it) {
        A.multiply(v, w);
        project(w);
        double nw = norm2(w);
        if (!(nw > 0.0)) return 0.0;
        if (it >= iterations / 2) {
            log_growth += std::log(nw);
            ++counted;
        }
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / nw;
    }
    return counted > 0 ? std::exp(log_growth / static_cast<double>(counted)) : 0.0;
}

} // namespace detail

/// Perron eigenvalue only (no left pair, no deflation).
inline EigenData leading_eigenvalue(const SparseMatrix& A, double tol = 1e-10, long max_iter = 100000)
{
    auto r = detail::power_iterate(A, tol, max_iter, true);
    EigenData out;
    out.rho = r.rho;
    out.rho_left = r.rho;
    out.iterations = r.iterations;
    out.converged = r.converged;
    out.h = std::move(r.v);
    return out;
}

inline EigenData leading_eigen(const OperatorDiscretization& disc, const EigenOptions& opt = {})
{
    const SparseMatrix& A = disc.matrix;
    const std::size_t n = A.size();
    EigenData out;
    auto right = detail::power_iterate(A, opt.tol, opt.max_iter, true, opt.vector_tol, true);
    out.rho = right.rho;
    out.iterations = right.iterations;
    out.converged = right.converged;
    out.h = std::move(right.v);

    std::vector<double> Ah = A.multiply(out.h);
    double res = 0.0;
    double hmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        res = std::max(res, std::fabs(Ah[i] - out.rho * out.h[i]));
        hmax = std::max(hmax, std::fabs(out.h[i]));
    }
    out.residual = res / (out.rho * hmax);

    if (!opt.left) return out;
    SparseMatrix At = A.transposed();
    auto left = detail::power_iterate(At, opt.tol, opt.max_iter, false, opt.vector_tol, true);
    out.rho_left = left.rho;
    out.left_iterations = left.iterations;
    out.left_converged = left.converged;
    out.nu = std::move(left.v);

    out.mu.resize(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += out.mu[i] = out.h[i] * out.nu[i];
    for (double& m : out.mu) m /= total;

    if (opt.subleading) {
        double lam2 = detail::deflated_growth(A, out.h, out.nu, opt.deflation_iter);
        out.subleading_ratio = std::clamp(lam2 / out.rho, 0.0, 1.0);
    }
    return out;
}

struct FlaggedValue {
    double value;
    bool converged;
};

/// Sum_i observable(x_i) mu_i.
inline FlaggedValue equilibrium_observable_average(const EigenData& eig, std::span<const double> observable)
{
    if (observable.size() != eig.mu.size())
        throw DomainError("observable must be sampled on the discretization grid");
    double acc = 0.0;
    for (std::size_t i = 0; i < observable.size(); ++i) acc += observable[i] * eig.mu[i];
    return {acc, eig.converged && eig.left_converged};
}

/// log|Df| sampled on the grid (right-branch convention at endpoints).
inline std::vector<double> log_derivative_on_grid(const CircleMap& map, std::span<const double> grid)
{
    std::vector<double> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) out[i] = map.log_derivative(grid[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Spectral gap certificate

struct GapDiagnostic {
    double t = 0.0;
    int k_smoothness = 1;
    double rho_estimate = 0.0; ///< exp(P(t))
    double ess_bound = 0.0;    ///< exp(P(t + k)), bound on the essential radius on C^k
    bool certified = false;
    double subleading_ratio = std::numeric_limits<double>::quiet_NaN();
};

inline constexpr double kGapMargin = 1e-3;

/// On C^k the essential spectral radius of L_t is at most exp(P(t + k)) for
/// circle maps; the gap is certified when that bound sits strictly below the
/// leading eigenvalue exp(P(t)).
inline GapDiagnostic gap_certificate(const PressureCurve& curve, double t, int k_smoothness = 1)
{
    if (k_smoothness < 1) throw DomainError("smoothness index k must be >= 1");
    if (!curve.covers(t) || !curve.covers(t + k_smoothness))
        throw RangeError("gap certificate needs the curve at t = " + std::to_string(t) + " and t + k = " +
                         std::to_string(t + k_smoothness));
    GapDiagnostic g;
    g.t = t;
    g.k_smoothness = k_smoothness;
    g.rho_estimate = std::exp(curve.value_at(t));
    g.ess_bound = std::exp(curve.value_at(t + k_smoothness));
    g.certified = g.ess_bound < g.rho_estimate * (1.0 - kGapMargin);
    return g;
}

} // namespace thermo
