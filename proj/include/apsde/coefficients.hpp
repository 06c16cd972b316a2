#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "apsde/dichotomy.hpp"
#include "apsde/expression.hpp"
#include "apsde/noise.hpp"
#include "apsde/rational.hpp"
#include "apsde/types.hpp"

namespace apsde
{

using ConstVecRef = Eigen::Ref<Vector const>;
using VecRef = Eigen::Ref<Vector>;
using MatRef = Eigen::Ref<Matrix>;

//---------------------------------------------------------------------------//
/*!
 * Scalar signal built from cos/sin of finitely many frequencies.
 *
 * Construction rejects expressions that mention state or marks, use t
 * outside an affine trig argument, or are not certifiably bounded.
 */
class QuasiPeriodicSignal
{
  public:
    explicit QuasiPeriodicSignal(Expr combiner);
    static QuasiPeriodicSignal parse(std::string_view text)
    {
        return QuasiPeriodicSignal(Expr::parse(text));
    }

    double operator()(double t) const { return combiner_.eval(t); }

    Expr const& combiner() const { return combiner_; }
    std::vector<double> const& frequencies() const { return frequencies_; }
    //! Certified enclosure of the range over all t.
    Interval bound() const { return bound_; }
    //! 2 pi / smallest frequency (0 for a constant signal).
    double max_period() const;

  private:
    Expr combiner_;
    std::vector<double> frequencies_;
    Interval bound_;
};

//---------------------------------------------------------------------------//
/*!
 * The coefficient maps f(t,y), g(t,y), F(t,y,x), G(t,y,x) with a declared
 * Lipschitz constant L.
 *
 * The *_into forms write into caller storage and are what the solver uses;
 * eval_* are allocating conveniences.
 */
class CoefficientSet
{
  public:
    virtual ~CoefficientSet() = default;

    virtual std::string name() const = 0;
    virtual Index state_dim() const = 0;
    virtual Index noise_dim() const = 0;
    virtual Real lipschitz() const = 0;

    virtual void f_into(double t, ConstVecRef y, VecRef out) const = 0;
    //! d x dim_noise matrix.
    virtual void g_into(double t, ConstVecRef y, MatRef out) const = 0;
    virtual void F_into(double t, ConstVecRef y, ConstVecRef x, VecRef out) const = 0;
    virtual void G_into(double t, ConstVecRef y, ConstVecRef x, VecRef out) const = 0;

    //! F(t, y, x) does not depend on x, so its nu-mean is rate * F.
    virtual bool F_mark_independent() const { return false; }
    //! F(t, y, x) is linear in x, so its nu-mean is F(t, y, rate * E x).
    virtual bool F_linear_in_mark() const { return false; }
    //! Hints that let the solver skip work; false means "identically zero".
    virtual bool has_diffusion() const { return true; }
    virtual bool has_small_jumps() const { return true; }
    virtual bool has_large_jumps() const { return true; }

    //! Time factors the maps are built from (for the almost-period scan).
    virtual std::vector<QuasiPeriodicSignal> time_signals() const { return {}; }

    Vector eval_f(double t, Vector const& y) const;
    Matrix eval_g(double t, Vector const& y) const;
    Vector eval_F(double t, Vector const& y, Vector const& x) const;
    Vector eval_G(double t, Vector const& y, Vector const& x) const;
};

using CoefficientPtr = std::shared_ptr<CoefficientSet const>;

//! Coefficients of the example41 benchmark on R^2 with one-dimensional noise.
class Example41Coefficients final : public CoefficientSet
{
  public:
    std::string name() const override { return "example41"; }
    Index state_dim() const override { return 2; }
    Index noise_dim() const override { return 1; }
    Real lipschitz() const override { return Real(Rational(1, 64)); }
    void f_into(double t, ConstVecRef y, VecRef out) const override;
    void g_into(double t, ConstVecRef y, MatRef out) const override;
    void F_into(double t, ConstVecRef y, ConstVecRef x, VecRef out) const override;
    void G_into(double t, ConstVecRef y, ConstVecRef x, VecRef out) const override;
    bool F_mark_independent() const override { return true; }
    std::vector<QuasiPeriodicSignal> time_signals() const override;
};

//! Scalar OU forced by sin(nu t): f = sin(nu t), g = sigma, no jumps.
class OuForcedCoefficients final : public CoefficientSet
{
  public:
    OuForcedCoefficients(double nu, double sigma, Real lipschitz);

    std::string name() const override { return "ou_forced"; }
    Index state_dim() const override { return 1; }
    Index noise_dim() const override { return 1; }
    Real lipschitz() const override { return lipschitz_; }
    void f_into(double t, ConstVecRef y, VecRef out) const override;
    void g_into(double t, ConstVecRef y, MatRef out) const override;
    void F_into(double t, ConstVecRef y, ConstVecRef x, VecRef out) const override;
    void G_into(double t, ConstVecRef y, ConstVecRef x, VecRef out) const override;
    bool F_mark_independent() const override { return true; }
    bool has_diffusion() const override { return sigma_ != 0; }
    bool has_small_jumps() const override { return false; }
    bool has_large_jumps() const override { return false; }
    std::vector<QuasiPeriodicSignal> time_signals() const override;

    double nu() const { return nu_; }
    double sigma() const { return sigma_; }

  private:
    double nu_;
    double sigma_;
    Real lipschitz_;
};

struct GalerkinParams
{
    int modes = 8;
    double a0 = 2.5;
    double forcing = 1.0;
    double ell = 0.05;
    double ell_h = 0.1;
    double sigma = 0.3;
    double g_modulation = 0.5;
    double small_rate = 1.0;
    double large_rate = 0.5;
};

/*!
 * Cosine-mode Galerkin truncation of a Neumann heat equation on (0, pi):
 * mode k has eigenvalue a0 - k^2, forcing forcing/(1+k^2) sin(sqrt2 t),
 * reaction ell sin(y_k), diagonal multiplicative-in-time noise and jump
 * response ell_h x_k sin(y_k).
 */
class GalerkinHeatCoefficients final : public CoefficientSet
{
  public:
    explicit GalerkinHeatCoefficients(GalerkinParams params);

    std::string name() const override { return "galerkin_heat"; }
    Index state_dim() const override { return params_.modes; }
    Index noise_dim() const override { return params_.modes; }
    Real lipschitz() const override;
    void f_into(double t, ConstVecRef y, VecRef out) const override;
    void g_into(double t, ConstVecRef y, MatRef out) const override;
    void F_into(double t, ConstVecRef y, ConstVecRef x, VecRef out) const override;
    void G_into(double t, ConstVecRef y, ConstVecRef x, VecRef out) const override;
    bool F_linear_in_mark() const override { return true; }
    bool has_diffusion() const override { return params_.sigma != 0; }
    bool has_small_jumps() const override
    {
        return params_.ell_h != 0 && params_.small_rate > 0;
    }
    bool has_large_jumps() const override
    {
        return params_.ell_h != 0 && params_.large_rate > 0;
    }
    std::vector<QuasiPeriodicSignal> time_signals() const override;

    GalerkinParams const& params() const { return params_; }
    //! Mark annuli used by the matching noise spec.
    static constexpr double small_r_min = 0.1;
    static constexpr double small_r_max = 0.5;
    static constexpr double large_r_min = 1.0;
    static constexpr double large_r_max = 1.5;

  private:
    GalerkinParams params_;
};

//! User coefficients from the expression grammar.
struct ExpressionCoefficientSpec
{
    std::vector<std::string> f;  // d entries
    std::vector<std::string> g;  // d * dim_noise entries, row-major
    std::vector<std::string> F;  // d entries (empty: zero)
    std::vector<std::string> G;  // d entries (empty: zero)
    Index noise_dim = 1;
    Real lipschitz;
};

class ExpressionCoefficients final : public CoefficientSet
{
  public:
    explicit ExpressionCoefficients(ExpressionCoefficientSpec spec);

    std::string name() const override { return "expression"; }
    Index state_dim() const override { return static_cast<Index>(f_.size()); }
    Index noise_dim() const override { return spec_.noise_dim; }
    Real lipschitz() const override { return spec_.lipschitz; }
    void f_into(double t, ConstVecRef y, VecRef out) const override;
    void g_into(double t, ConstVecRef y, MatRef out) const override;
    void F_into(double t, ConstVecRef y, ConstVecRef x, VecRef out) const override;
    void G_into(double t, ConstVecRef y, ConstVecRef x, VecRef out) const override;
    bool F_mark_independent() const override { return f_mark_free_; }
    bool has_diffusion() const override { return !g_zero_; }
    bool has_small_jumps() const override { return !F_.empty(); }
    bool has_large_jumps() const override { return !G_.empty(); }

    ExpressionCoefficientSpec const& spec() const { return spec_; }

  private:
    ExpressionCoefficientSpec spec_;
    std::vector<Expr> f_, g_, F_, G_;
    bool f_mark_free_ = true;
    bool g_zero_ = false;
};

//! Evaluates the wrapped set at t + shift.
class TimeShiftedCoefficients final : public CoefficientSet
{
  public:
    TimeShiftedCoefficients(CoefficientPtr base, double shift)
        : base_(std::move(base)), shift_(shift)
    {
    }
    std::string name() const override { return base_->name(); }
    Index state_dim() const override { return base_->state_dim(); }
    Index noise_dim() const override { return base_->noise_dim(); }
    Real lipschitz() const override { return base_->lipschitz(); }
    void f_into(double t, ConstVecRef y, VecRef out) const override
    {
        base_->f_into(t + shift_, y, out);
    }
    void g_into(double t, ConstVecRef y, MatRef out) const override
    {
        base_->g_into(t + shift_, y, out);
    }
    void F_into(double t, ConstVecRef y, ConstVecRef x, VecRef out) const override
    {
        base_->F_into(t + shift_, y, x, out);
    }
    void G_into(double t, ConstVecRef y, ConstVecRef x, VecRef out) const override
    {
        base_->G_into(t + shift_, y, x, out);
    }
    bool F_mark_independent() const override { return base_->F_mark_independent(); }
    bool F_linear_in_mark() const override { return base_->F_linear_in_mark(); }
    bool has_diffusion() const override { return base_->has_diffusion(); }
    bool has_small_jumps() const override { return base_->has_small_jumps(); }
    bool has_large_jumps() const override { return base_->has_large_jumps(); }

  private:
    CoefficientPtr base_;
    double shift_;
};

//---------------------------------------------------------------------------//
/*!
 * The small-jump compensator: sum over small components of
 * rate * E[F(t, y, X)].
 *
 * Closed form when F ignores the mark or is linear in it; exact sums for
 * atoms; otherwise a fixed-node rule (Gauss-Legendre in the radius times
 * the 2d cross-polytope directions, exact for polynomials of degree 3 in
 * the direction).
 */
class Compensator
{
  public:
    Compensator(CoefficientSet const& cs, LevyProcessSpec const& spec);

    //! scratch must have state_dim entries.
    void eval_into(double t, ConstVecRef y, VecRef out, VecRef scratch) const;
    Vector eval(double t, Vector const& y) const;

    bool is_zero() const { return zero_; }
    std::string const& method() const { return method_; }
    double total_rate() const { return total_rate_; }

  private:
    CoefficientSet const* cs_;
    bool zero_ = true;
    bool closed_form_ = false;
    bool linear_ = false;
    Vector mean_mark_;
    double total_rate_ = 0;
    std::vector<Vector> nodes_;
    std::vector<double> weights_;
    std::string method_;
};

//! Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

//---------------------------------------------------------------------------//

struct LipschitzOptions
{
    int n_samples = 2000;
    double box_radius = 5.0;
    double time_range = 100.0;
    int mark_samples = 64;
    std::uint64_t seed = 1;
};

struct LipschitzReport
{
    Real declared;
    double observed_f = 0;
    double observed_g = 0;
    double observed_F = 0;
    double observed_G = 0;
    bool pass = true;
};

/*!
 * Largest empirical ratios |f(t,y)-f(t,z)|^2 / |y-z|^2 and the analogues
 * for g Q^{1/2} (Frobenius norm) and the rate-weighted mark averages of F
 * and G, over random and nearby pairs in the box |y_i| <= box_radius.
 */
LipschitzReport verify_lipschitz(CoefficientSet const& cs,
                                 LevyProcessSpec const& spec,
                                 LipschitzOptions const& options = {});

//---------------------------------------------------------------------------//

struct ScanOptions
{
    double epsilon = 0.1;
    double horizon = 50.0;
    double grid_step = 1e-2;
    //! Length of the t-range the sup is taken over (default: horizon).
    double t_span = 0;
};

struct AlmostPeriodScan
{
    std::vector<double> periods;
    std::vector<double> sup_gap;
    //! Largest distance between consecutive accepted shifts, counting from 0;
    //! infinite when nothing was accepted.
    double max_gap = 0;
    bool found = false;
    std::string message;
};

//! All tau = k * grid_step in (0, horizon] with sup_t |s(t+tau)-s(t)| <= eps.
AlmostPeriodScan scan_almost_periods(std::function<double(double)> const& signal,
                                     ScanOptions const& options);
AlmostPeriodScan scan_almost_periods(QuasiPeriodicSignal const& signal,
                                     ScanOptions const& options);

//---------------------------------------------------------------------------//

//! A complete problem: linear part, driving noise and coefficients.
struct Problem
{
    std::string name;
    DichotomousSystem system;
    LevyProcessSpec noise;
    CoefficientPtr coefficients;
    //! Exact mean of the bounded solution when known in closed form.
    std::function<Vector(double)> reference_mean;
};

using PresetParams = std::map<std::string, Real>;

std::vector<std::string> preset_names();
//! Throws std::invalid_argument for unknown names or parameters.
Problem make_preset(std::string const& name, PresetParams const& params = {});

}  // namespace apsde
