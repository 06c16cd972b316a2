#pragma once

#include <optional>
#include <span>
#include <stdexcept>

#include "apsde/rational.hpp"
#include "apsde/types.hpp"

namespace apsde
{

//! e^{At} cannot be represented in double precision.
class MatrixExpOverflow : public std::overflow_error
{
  public:
    using std::overflow_error::overflow_error;
};

//! The supplied projection does not split off decaying and growing parts.
class NoDichotomy : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/*!
 * Matrix exponential e^{At} by scaling and squaring with a diagonal Pade
 * approximant of degree 3, 5, 7, 9 or 13 (Higham 2005).
 */
Matrix matrix_exp(Matrix const& a, double t = 1.0);

//! \int_0^h e^{Au} du, read off the exponential of an augmented block matrix.
Matrix integrated_exp(Matrix const& a, double h);

//! Growth bound |e^{At}| <= M e^{delta t}, with M = 1 and delta the
//! logarithmic 2-norm of A.
struct GrowthBound
{
    double m = 1;
    double delta = 0;
};
GrowthBound growth_bound(Matrix const& a);

//! Largest singular value.
double operator_norm(Matrix const& m);

//---------------------------------------------------------------------------//
/*!
 * Linear part dY = AY dt with a projection P onto the forward-decaying
 * subspace. J = I - P spans the backward-decaying subspace.
 *
 * Construction enforces P^2 = P and AP = PA to 1e-10; the declared
 * constants (K, omega) are optional and are not trusted by the solver.
 */
class DichotomousSystem
{
  public:
    DichotomousSystem(Matrix generator, Matrix projection,
                      std::optional<Real> k = {},
                      std::optional<Real> omega = {});

    Index dim() const { return a_.rows(); }
    Matrix const& generator() const { return a_; }
    Matrix const& projection() const { return p_; }
    Matrix const& complement() const { return j_; }
    std::optional<Real> const& k() const { return k_; }
    std::optional<Real> const& omega() const { return omega_; }

    //! e^{At} P for t >= 0, computed from A P so the growing part never
    //! enters the arithmetic.
    Matrix stable_propagator(double t) const;
    //! e^{At} J for t <= 0, computed from A J.
    Matrix unstable_propagator(double t) const;

    Vector evolve_stable(double t, Vector const& v) const;
    Vector evolve_unstable(double t, Vector const& v) const;

  private:
    Matrix a_;
    Matrix p_;
    Matrix j_;
    Matrix ap_;
    Matrix aj_;
    std::optional<Real> k_;
    std::optional<Real> omega_;
};

struct DichotomyEstimate
{
    double k_hat = 0;
    double omega_hat = 0;
    //! Largest deviation of log|.| from the least-squares line.
    double max_residual = 0;
    //! Fitted decay rates of each branch (0 when the branch is empty).
    double stable_rate = 0;
    double unstable_rate = 0;
    //! Every trial vector satisfied the fitted bound on the grid.
    bool trial_vectors_ok = true;
};

/*!
 * Fit (K, omega) with |e^{At}P| <= K e^{-omega t} and
 * |e^{-At}J| <= K e^{-omega t} on a grid of t >= 0.
 *
 * Each branch gets a least-squares line through log|.|; omega is the slower
 * of the two rates and K is inflated to cover every grid point.
 */
DichotomyEstimate estimate_constants(DichotomousSystem const& sys,
                                     std::span<double const> t_grid,
                                     std::span<Vector const> trial_vectors = {});

}  // namespace apsde
