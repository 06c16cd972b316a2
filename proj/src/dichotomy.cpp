#include "apsde/dichotomy.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace apsde
{
namespace
{
// Pade coefficients and one-norm thresholds from Higham, SIAM J. Matrix Anal.
// Appl. 26 (2005), Table 2.3.
constexpr std::array<double, 4> kPade3{120., 60., 12., 1.};
constexpr std::array<double, 6> kPade5{30240., 15120., 3360., 420., 30., 1.};
constexpr std::array<double, 8> kPade7{
    17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.};
constexpr std::array<double, 10> kPade9{17643225600.,
                                        8821612800.,
                                        2075673600.,
                                        302702400.,
                                        30270240.,
                                        2162160.,
                                        110880.,
                                        3960.,
                                        90.,
                                        1.};
constexpr std::array<double, 14> kPade13{64764752532480000.,
                                         32382376266240000.,
                                         7771770303897600.,
                                         1187353796428800.,
                                         129060195264000.,
                                         10559470521600.,
                                         670442572800.,
                                         33522128640.,
                                         1323241920.,
                                         40840800.,
                                         960960.,
                                         16380.,
                                         182.,
                                         1.};
constexpr double kTheta3 = 1.495585217958292e-2;
constexpr double kTheta5 = 2.539398330063230e-1;
constexpr double kTheta7 = 9.504178996162932e-1;
constexpr double kTheta9 = 2.097847961257068e0;
constexpr double kTheta13 = 5.371920351148152e0;

template<std::size_t N>
Matrix pade_low(Matrix const& a, std::array<double, N> const& b)
{
    Index const n = a.rows();
    Matrix const id = Matrix::Identity(n, n);
    Matrix const a2 = a * a;
    Matrix u_inner = b[1] * id;
    Matrix v = b[0] * id;
    Matrix power = id;
    for (std::size_t j = 2; j < N; j += 2)
    {
        power = power * a2;
        v += b[j] * power;
        u_inner += b[j + 1] * power;
    }
    Matrix const u = a * u_inner;
    return (v - u).partialPivLu().solve(v + u);
}

Matrix pade13(Matrix const& a)
{
    auto const& b = kPade13;
    Index const n = a.rows();
    Matrix const id = Matrix::Identity(n, n);
    Matrix const a2 = a * a;
    Matrix const a4 = a2 * a2;
    Matrix const a6 = a4 * a2;
    Matrix const u = a
                     * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2)
                        + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
    Matrix const v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6
                     + b[4] * a4 + b[2] * a2 + b[0] * id;
    return (v - u).partialPivLu().solve(v + u);
}

double one_norm(Matrix const& m)
{
    return m.cwiseAbs().colwise().sum().maxCoeff();
}
}  // namespace

Matrix matrix_exp(Matrix const& a, double t)
{
    if (a.rows() != a.cols())
    {
        throw std::invalid_argument("matrix_exp needs a square matrix");
    }
    if (a.size() == 0) return a;
    Matrix at = a * t;
    if (!at.allFinite())
    {
        throw std::invalid_argument("matrix_exp argument has non-finite "
                                    "entries");
    }
    double const norm = one_norm(at);
    Matrix result;
    if (norm <= kTheta3)
        result = pade_low(at, kPade3);
    else if (norm <= kTheta5)
        result = pade_low(at, kPade5);
    else if (norm <= kTheta7)
        result = pade_low(at, kPade7);
    else if (norm <= kTheta9)
        result = pade_low(at, kPade9);
    else
    {
        int const s = std::max(0, static_cast<int>(std::ceil(
                                      std::log2(norm / kTheta13))));
        at /= std::ldexp(1.0, s);
        result = pade13(at);
        for (int i = 0; i < s; ++i) result = result * result;
    }
    if (!result.allFinite())
    {
        throw MatrixExpOverflow("matrix_exp overflowed: one-norm of A*t is "
                                + format_double(norm));
    }
    return result;
}

Matrix integrated_exp(Matrix const& a, double h)
{
    Index const n = a.rows();
    Matrix aug = Matrix::Zero(2 * n, 2 * n);
    aug.topLeftCorner(n, n) = a;
    aug.topRightCorner(n, n) = Matrix::Identity(n, n);
    return matrix_exp(aug, h).topRightCorner(n, n);
}

GrowthBound growth_bound(Matrix const& a)
{
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (a + a.transpose()),
                                              Eigen::EigenvaluesOnly);
    return {1.0, eig.eigenvalues().maxCoeff()};
}

double operator_norm(Matrix const& m)
{
    if (m.size() == 0) return 0;
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

//---------------------------------------------------------------------------//

DichotomousSystem::DichotomousSystem(Matrix generator, Matrix projection,
                                     std::optional<Real> k,
                                     std::optional<Real> omega)
    : a_(std::move(generator)),
      p_(std::move(projection)),
      k_(std::move(k)),
      omega_(std::move(omega))
{
    Index const n = a_.rows();
    if (n == 0 || a_.cols() != n || p_.rows() != n || p_.cols() != n)
    {
        throw std::invalid_argument("generator and projection must be square "
                                    "matrices of the same size");
    }
    if (!a_.allFinite() || !p_.allFinite())
    {
        throw std::invalid_argument("generator and projection must be "
                                    "finite");
    }
    double const p_scale = std::max(1.0, p_.cwiseAbs().maxCoeff());
    if ((p_ * p_ - p_).cwiseAbs().maxCoeff() > 1e-10 * p_scale)
    {
        throw std::invalid_argument("projection is not idempotent (P^2 != "
                                    "P)");
    }
    double const a_scale = std::max(1.0, a_.cwiseAbs().maxCoeff()) * p_scale;
    if ((a_ * p_ - p_ * a_).cwiseAbs().maxCoeff() > 1e-10 * a_scale)
    {
        throw std::invalid_argument("projection does not commute with the "
                                    "generator (AP != PA)");
    }
    if (k_ && !(k_->value() > 0))
    {
        throw std::invalid_argument("dichotomy constant K must be positive");
    }
    if (omega_ && !(omega_->value() > 0))
    {
        throw std::invalid_argument("dichotomy rate omega must be positive");
    }
    j_ = Matrix::Identity(n, n) - p_;
    ap_ = a_ * p_;
    aj_ = a_ * j_;
}

Matrix DichotomousSystem::stable_propagator(double t) const
{
    if (t < 0)
    {
        throw std::invalid_argument("stable propagator needs t >= 0");
    }
    return matrix_exp(ap_, t) * p_;
}

Matrix DichotomousSystem::unstable_propagator(double t) const
{
    if (t > 0)
    {
        throw std::invalid_argument("unstable propagator needs t <= 0");
    }
    return matrix_exp(aj_, t) * j_;
}

Vector DichotomousSystem::evolve_stable(double t, Vector const& v) const
{
    return stable_propagator(t) * v;
}

Vector DichotomousSystem::evolve_unstable(double t, Vector const& v) const
{
    return unstable_propagator(t) * v;
}

//---------------------------------------------------------------------------//

namespace
{
struct BranchFit
{
    bool active = false;
    double intercept = 0;
    double rate = 0;
    double max_residual = 0;
};

BranchFit fit_branch(std::span<double const> ts, std::vector<double> const& norms)
{
    std::vector<double> x;
    std::vector<double> y;
    for (std::size_t i = 0; i < ts.size(); ++i)
    {
        if (norms[i] > 1e-300)
        {
            x.push_back(ts[i]);
            y.push_back(std::log(norms[i]));
        }
    }
    BranchFit fit;
    if (x.size() < 2) return fit;
    auto const n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    double const denom = n * sxx - sx * sx;
    if (denom <= 0) return fit;
    double const slope = (n * sxy - sx * sy) / denom;
    fit.active = true;
    fit.rate = -slope;
    fit.intercept = (sy - slope * sx) / n;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        fit.max_residual = std::max(
            fit.max_residual, std::abs(y[i] - (fit.intercept + slope * x[i])));
    }
    return fit;
}
}  // namespace

DichotomyEstimate estimate_constants(DichotomousSystem const& sys,
                                     std::span<double const> t_grid,
                                     std::span<Vector const> trial_vectors)
{
    if (t_grid.size() < 20)
    {
        throw std::invalid_argument("estimate_constants needs at least 20 "
                                    "grid points");
    }
    for (double t : t_grid)
    {
        if (!(t >= 0) || !std::isfinite(t))
        {
            throw std::invalid_argument("estimate_constants grid must lie in "
                                        "[0, T_max]");
        }
    }
    std::vector<double> stable(t_grid.size());
    std::vector<double> unstable(t_grid.size());
    std::vector<Matrix> stable_ops(t_grid.size());
    std::vector<Matrix> unstable_ops(t_grid.size());
    for (std::size_t i = 0; i < t_grid.size(); ++i)
    {
        stable_ops[i] = sys.stable_propagator(t_grid[i]);
        unstable_ops[i] = sys.unstable_propagator(-t_grid[i]);
        stable[i] = operator_norm(stable_ops[i]);
        unstable[i] = operator_norm(unstable_ops[i]);
    }
    BranchFit const fs = fit_branch(t_grid, stable);
    BranchFit const fu = fit_branch(t_grid, unstable);
    if (!fs.active && !fu.active)
    {
        throw NoDichotomy("no dichotomy at this P: both branches vanish");
    }
    for (auto const* fit : {&fs, &fu})
    {
        // Rates at rounding level come from a neutral (zero) eigenvalue.
        if (fit->active && fit->rate <= 1e-9)
        {
            throw NoDichotomy("no dichotomy at this P: fitted decay rate "
                              + format_double(fit->rate) + " is not positive");
        }
    }

    DichotomyEstimate est;
    est.stable_rate = fs.active ? fs.rate : 0;
    est.unstable_rate = fu.active ? fu.rate : 0;
    est.omega_hat = std::min(fs.active ? fs.rate : INFINITY,
                             fu.active ? fu.rate : INFINITY);
    est.max_residual = std::max(fs.max_residual, fu.max_residual);
    double k = 0;
    for (std::size_t i = 0; i < t_grid.size(); ++i)
    {
        double const w = std::exp(est.omega_hat * t_grid[i]);
        k = std::max({k, stable[i] * w, unstable[i] * w});
    }
    est.k_hat = k;

    for (auto const& v : trial_vectors)
    {
        double const nv = v.norm();
        for (std::size_t i = 0; i < t_grid.size(); ++i)
        {
            double const bound = est.k_hat
                                 * std::exp(-est.omega_hat * t_grid[i]) * nv
                                 * (1 + 1e-12);
            if ((stable_ops[i] * v).norm() > bound
                || (unstable_ops[i] * v).norm() > bound)
            {
                est.trial_vectors_ok = false;
            }
        }
    }
    return est;
}

}  // namespace apsde
