#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "apsde/coefficients.hpp"
#include "apsde/noise.hpp"

namespace apsde
{

//---------------------------------------------------------------------------//
// Run configuration (JSON; field reference in docs/config.md).
//
// Scalars are JSON numbers (taken as floats) or strings. Strings holding an
// integer, a finite decimal or "p/q" stay exact; any other string is read
// as a constant expression ("2*pi/sqrt(2)") and is a float.
//---------------------------------------------------------------------------//

//! Invalid configuration; the command line maps it to exit code 2.
class ConfigError : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

struct SystemConfig
{
    Matrix a;
    Matrix p;
    std::optional<Real> k;
    std::optional<Real> omega;
};

//! from, from + step, ... up to to (inclusive within step/2).
struct RangeSpec
{
    Real from;
    Real to;
    Real step;
};

//! radius_steps grid steps either side of each center.
struct AroundSpec
{
    std::vector<Real> centers;
    Index radius_steps = 1;
};

//! Union of explicit values, a range and neighbourhoods, snapped to the grid.
struct PointSet
{
    std::vector<Real> values;
    std::optional<RangeSpec> range;
    std::optional<AroundSpec> around;

    bool empty() const { return values.empty() && !range && !around; }
};

struct NumericsConfig
{
    Real h = Rational(1, 100);
    Real window_lo = Rational(-10);
    Real window_hi = Rational(10);
    //! T_c; absent selects 12/omega.
    std::optional<Real> truncation;
    Index paths = 1000;
    double tol = 1e-10;
    int max_iter = 50;
    //! Initial state for the simulate command (zeros when empty).
    std::vector<double> y0;
};

struct AnalysisConfig
{
    //! Absent: epsilon_factor times the measured Monte Carlo floor.
    std::optional<Real> epsilon;
    Real epsilon_factor = Rational(3);
    PointSet shifts;
    PointSet times;
    //! Paths per empirical law; -1 picks 2000 in one dimension, 300 otherwise.
    Index max_points = -1;
    //! Seed of the independent ensemble behind the floor (seed + 1 when absent).
    std::optional<std::uint64_t> floor_seed;
};

struct OutputConfig
{
    //! Every stride-th node in the CSV files.
    Index stride = 10;
    //! Paths written to ensemble.csv.
    Index max_paths = 20;
};

struct RunConfig
{
    std::optional<std::string> preset;
    PresetParams params;
    std::optional<SystemConfig> system;
    std::optional<LevyProcessSpec> levy;
    std::optional<ExpressionCoefficientSpec> coefficients;
    NumericsConfig numerics;
    AnalysisConfig analysis;
    OutputConfig output;
    std::uint64_t seed = 1;
};

//! Throws ConfigError with the offending key path.
RunConfig parse_config(std::string const& text);
RunConfig load_config(std::string const& path);
//! Canonical JSON; parse_config(to_json(c)) reproduces c exactly.
std::string to_json(RunConfig const& config);

//! Preset with the explicit sections substituted. Throws ConfigError on
//! dimension mismatches and a missing section when there is no preset.
Problem build_problem(RunConfig const& config);

//! Grid indices (multiples of h) of a point set, ascending and unique.
std::vector<std::int64_t> expand_points(PointSet const& set, double h);

/*!
 * Checks the numerics against the problem: h > 0, M >= 2, tol > 0, and a
 * window holding every analysis time and time + shift with T_c margins on
 * both sides. Returns T_c (12/omega when not configured).
 */
double validate_numerics(RunConfig const& config, Problem const& problem);

}  // namespace apsde
