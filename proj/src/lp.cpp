#include "apsde/lp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace apsde
{

LpResult solve_lp_max(Matrix const& a, Vector const& b, Vector const& c, int max_pivots)
{
    Index const m = a.rows();
    Index const n = a.cols();
    if (b.size() != m || c.size() != n)
    {
        throw std::invalid_argument("LP dimensions do not match");
    }
    if (!a.allFinite() || !b.allFinite() || !c.allFinite())
    {
        throw std::invalid_argument("LP data must be finite");
    }
    if (m > 0 && b.minCoeff() < 0)
    {
        throw std::invalid_argument("LP right-hand side must be nonnegative");
    }

    // Columns 0..n-1 structural, n..n+m-1 slack, n+m the right-hand side.
    Index const cols = n + m + 1;
    // Row-major: pivots are row operations.
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> t
        = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Zero(m + 1, cols);
    t.topLeftCorner(m, n) = a;
    t.block(0, n, m, m).setIdentity();
    t.block(0, n + m, m, 1) = b;
    t.block(m, 0, 1, n) = -c.transpose();
    std::vector<Index> basis(static_cast<std::size_t>(m));
    for (Index i = 0; i < m; ++i) basis[i] = n + i;

    double const scale = std::max({1.0, a.cwiseAbs().maxCoeff(),
                                   c.size() ? c.cwiseAbs().maxCoeff() : 0.0});
    double const tol = 1e-12 * scale;
    double const pivot_tol = 1e-9 * scale;

    LpResult r;
    constexpr int bland_after = 50;
    int degenerate_run = 0;
    while (true)
    {
        // Dantzig's rule; after a run of degenerate pivots switch to Bland's
        // rule, which cannot cycle, until the objective moves again.
        Index enter = -1;
        bool const bland = degenerate_run >= bland_after;
        double most = -tol;
        for (Index j = 0; j < n + m; ++j)
        {
            if (t(m, j) < most)
            {
                enter = j;
                if (bland) break;
                most = t(m, j);
            }
        }
        if (enter < 0)
        {
            r.optimal = true;
            break;
        }
        Index leave = -1;
        double best = std::numeric_limits<double>::infinity();
        for (Index i = 0; i < m; ++i)
        {
            double const piv = t(i, enter);
            if (piv <= pivot_tol) continue;
            double const ratio = std::max(0.0, t(i, n + m)) / piv;
            double const slack = 1e-13 * std::max(1.0, std::abs(best));
            bool take = leave < 0 || ratio < best - slack;
            if (!take && std::abs(ratio - best) <= slack)
            {
                // Bland needs the smallest basic index; otherwise prefer the
                // largest pivot for stability.
                take = bland ? basis[i] < basis[leave] : piv > t(leave, enter);
            }
            if (take)
            {
                best = std::min(best, ratio);
                leave = i;
            }
        }
        if (leave < 0)
        {
            r.unbounded = true;
            break;
        }
        if (++r.pivots > max_pivots)
        {
            throw std::runtime_error("simplex exceeded the pivot limit");
        }
        degenerate_run = best <= tol ? degenerate_run + 1 : 0;
        t.row(leave) /= t(leave, enter);
        for (Index i = 0; i <= m; ++i)
        {
            if (i == leave) continue;
            double const f = t(i, enter);
            if (f != 0.0) t.row(i) -= f * t.row(leave);
        }
        basis[leave] = enter;
        for (Index i = 0; i < m; ++i)
            if (t(i, n + m) < 0) t(i, n + m) = 0;  // rounding below zero
    }

    r.x = Vector::Zero(n);
    if (r.optimal && m > 0)
    {
        // Recompute the vertex from the original data to shed pivot drift.
        Matrix bmat(m, m);
        for (Index i = 0; i < m; ++i)
        {
            if (basis[i] < n)
                bmat.col(i) = a.col(basis[i]);
            else
                bmat.col(i) = Vector::Unit(m, basis[i] - n);
        }
        Vector const xb = bmat.partialPivLu().solve(b);
        for (Index i = 0; i < m; ++i)
            if (basis[i] < n) r.x(basis[i]) = xb(i);
        double const feas = 1e-8 * std::max(1.0, b.cwiseAbs().maxCoeff());
        if (r.x.minCoeff() < -feas || ((a * r.x - b).maxCoeff() > feas))
        {
            throw std::runtime_error("simplex lost feasibility (ill-conditioned LP)");
        }
    }
    else
    {
        for (Index i = 0; i < m; ++i)
            if (basis[i] < n) r.x(basis[i]) = t(i, n + m);
    }
    r.value = r.unbounded ? std::numeric_limits<double>::infinity() : c.dot(r.x);
    return r;
}

}  // namespace apsde
