#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "apsde/rational.hpp"
#include "apsde/rng.hpp"
#include "apsde/types.hpp"

namespace apsde
{

//---------------------------------------------------------------------------//
// Levy driving noise: drift, Q-Wiener part and finitely many compound
// Poisson components, each declared as small (|x| < 1) or large (|x| >= 1).
//---------------------------------------------------------------------------//

//! Covariance is not symmetric positive semidefinite.
class InvalidCovariance : public std::invalid_argument
{
  public:
    InvalidCovariance(std::string const& what, double eigenvalue)
        : std::invalid_argument(what), eigenvalue_(eigenvalue)
    {
    }
    double eigenvalue() const { return eigenvalue_; }

  private:
    double eigenvalue_;
};

struct WienerSpec
{
    Matrix covariance;

    Index dim() const { return covariance.rows(); }
};

enum class JumpRegion
{
    small,
    large,
};

char const* to_string(JumpRegion region);

//! All jumps of the component have this exact mark.
struct PointMass
{
    Vector point;
};

//! Uniform on the shell r_min <= |x| <= r_max (two intervals in one dimension).
struct UniformAnnulus
{
    double r_min = 0;
    double r_max = 0;
};

//! Finite mixture of atoms.
struct DiscreteMixture
{
    std::vector<Vector> atoms;
    std::vector<double> weights;
};

using MarkDistribution = std::variant<PointMass, UniformAnnulus, DiscreteMixture>;

struct JumpComponent
{
    Real rate;
    MarkDistribution marks;
    JumpRegion region = JumpRegion::small;
};

struct LevyProcessSpec
{
    Vector drift;
    WienerSpec wiener;
    std::vector<JumpComponent> jumps;

    Index dim() const { return wiener.dim(); }
};

//! Result of validate_spec.
struct NoiseDiagnostics
{
    //! Total rate of large jumps, nu({|x| >= 1}).
    Real b;
    //! Total rate of small jumps, nu({0 < |x| < 1}).
    Real small_rate;
    //! Sum over small components of rate * E|mark|^2.
    double small_second_moment = 0;
    //! Integral of min(|y|^2, 1) against nu.
    double levy_integral = 0;
    double trace_q = 0;
    bool ok = true;
    std::vector<std::string> problems;
};

//! Check the spec; malformed covariance throws InvalidCovariance.
NoiseDiagnostics validate_spec(LevyProcessSpec const& spec);

//! Symmetric square root of a validated covariance.
Matrix covariance_sqrt(Matrix const& q);

double mark_second_moment(MarkDistribution const& marks, Index dim);
Vector mark_mean(MarkDistribution const& marks, Index dim);
Vector sample_mark(MarkDistribution const& marks, Index dim, RandomStream& rng);
bool in_region(Vector const& mark, JumpRegion region);

//---------------------------------------------------------------------------//

struct JumpEvent
{
    //! Grid step containing the jump: time = (step + offset) * h.
    std::int64_t step = 0;
    double offset = 0;
    Vector mark;
    JumpRegion region = JumpRegion::small;
    std::uint32_t component = 0;

    double time(double h) const
    {
        return (static_cast<double>(step) + offset) * h;
    }
};

struct SeedKey
{
    std::uint64_t seed = 0;
    std::uint32_t path = 0;

    friend bool operator==(SeedKey const&, SeedKey const&) = default;
};

/*!
 * One two-sided noise path on a zero-anchored grid.
 *
 * Column k of the increment matrix is W(t_{k+1}) - W(t_k) for the k-th step
 * of the grid. Jumps are sorted by time and carry their grid step.
 */
struct NoiseRealization
{
    TimeGrid grid;
    Matrix increments;
    std::vector<JumpEvent> jumps;
    SeedKey seed_key;

    Index dim() const { return increments.rows(); }
    //! Jump step index relative to the first grid step.
    Index local_step(JumpEvent const& jump) const
    {
        return static_cast<Index>(jump.step - grid.first());
    }
};

//---------------------------------------------------------------------------//
/*!
 * Samples realizations of one spec on one window.
 *
 * Immutable after construction; sample() is a pure function of the path
 * index, so it is safe to call concurrently.
 */
class NoiseSampler
{
  public:
    NoiseSampler(LevyProcessSpec spec, Window window, double step,
                 std::uint64_t seed);

    NoiseRealization sample(std::uint32_t path) const;

    LevyProcessSpec const& spec() const { return spec_; }
    NoiseDiagnostics const& diagnostics() const { return diagnostics_; }
    TimeGrid const& grid() const { return grid_; }
    std::uint64_t seed() const { return seed_; }
    Matrix const& sqrt_covariance() const { return sqrt_q_; }

  private:
    LevyProcessSpec spec_;
    NoiseDiagnostics diagnostics_;
    TimeGrid grid_;
    std::uint64_t seed_;
    Matrix sqrt_q_;
};

NoiseRealization sample_noise(LevyProcessSpec const& spec, Window window,
                              double step, SeedKey key);

//! Re-based noise W(. + s) - W(s); s must be a whole number of steps and
//! the origin of the shifted noise must stay inside the sampled window.
NoiseRealization shift_noise(NoiseRealization const& noise, double shift);

//! Sub-realization on the nodes of a window inside the current grid.
NoiseRealization restrict_noise(NoiseRealization const& noise, Window window);

//! CSV columns: t, dW0.., n_jumps_small, n_jumps_large (one row per step).
void write_noise_csv(std::ostream& os, NoiseRealization const& noise);

}  // namespace apsde
