#pragma once

#include <string>

#include "apsde/types.hpp"

namespace apsde
{

//! Finitely supported probability measure on R^d.
class EmpiricalLaw
{
  public:
    EmpiricalLaw() = default;
    //! points is d x n (one column per atom); weights sum to 1 within 1e-12.
    EmpiricalLaw(Matrix points, Vector weights);
    //! Equal weights 1/n.
    static EmpiricalLaw uniform(Matrix points);
    static EmpiricalLaw point_mass(Vector const& x);

    Index dim() const { return points_.rows(); }
    Index size() const { return points_.cols(); }
    Matrix const& points() const { return points_; }
    Vector const& weights() const { return weights_; }

  private:
    Matrix points_;
    Vector weights_;
};

enum class BlRoute
{
    automatic,
    //! The LP over (f, s, c) solved directly by the dense simplex.
    dense_lp,
    //! One dimension: exact dynamic program per c, golden section over c.
    line,
    //! Any dimension: transport with the truncated cost per c, cutting
    //! planes over c.
    transport,
};

char const* to_string(BlRoute route);

struct BlOptions
{
    //! Largest combined support size n + m accepted.
    Index cap = 4000;
    BlRoute route = BlRoute::automatic;
    //! Automatic routing uses the dense LP up to this many distinct atoms.
    Index dense_limit = 16;
};

struct BlResult
{
    double value = 0;
    //! Lipschitz budget c of an optimal test function (s = 1 - c).
    double c = 0;
    BlRoute route = BlRoute::automatic;
    int evaluations = 0;
};

/*!
 * Bounded-Lipschitz distance
 *   sup { int f d(mu - nu) : ||f||_L + ||f||_inf <= 1 }
 * with the Euclidean norm. Throws std::invalid_argument when the combined
 * support exceeds the cap or the dimensions differ.
 */
BlResult bl_distance_detail(EmpiricalLaw const& mu, EmpiricalLaw const& nu,
                            BlOptions const& options = {});
double bl_distance(EmpiricalLaw const& mu, EmpiricalLaw const& nu,
                   BlOptions const& options = {});

/*!
 * Inner value for a fixed Lipschitz budget c in [0, 1]:
 *   max { sum a_p f_p : |f_p| <= 1 - c, |f_p - f_q| <= c |p - q| },
 * equal to the transport cost under min(c |x - y|, 2(1 - c)). The line
 * route requires d = 1.
 */
double bl_fixed_budget(EmpiricalLaw const& mu, EmpiricalLaw const& nu, double c,
                       BlRoute route = BlRoute::transport);

}  // namespace apsde
