#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "apsde/apdist.hpp"
#include "apsde/config.hpp"
#include "apsde/solver.hpp"

namespace apsde
{

//---------------------------------------------------------------------------//
// Orchestration behind the apsde subcommands. Exit codes: 0 success or
// verdict true, 1 verdict false / not converged / no accepted shift,
// 2 invalid input.
//---------------------------------------------------------------------------//

enum class Verdict
{
    existence,
    distribution,
    joint,
};

struct CommandOptions
{
    //! Artifact directory; empty writes nothing (check only).
    std::string out;
    //! Record wall_ms in gap_trace.jsonl (breaks byte-identical reruns).
    bool timings = false;
    //! Which verdict gates the exit code of check.
    Verdict gate = Verdict::joint;
};

//! Conditions for the problem: declared or estimated (K, omega), the
//! coefficients' L and the large-jump rate b of the noise.
ConditionReport problem_conditions(Problem const& problem);

struct PicardRun
{
    Problem problem;
    PicardResult result;
    ConditionReport conditions;
};

//! Validates the numerics, then iterates S from zero with the given seed.
PicardRun run_picard(RunConfig const& config, std::uint64_t seed,
                     std::ostream* log = nullptr);

struct ScanRun
{
    PicardRun primary;
    std::vector<double> t_grid;
    //! Measured floor (negative when epsilon was fixed in the config).
    double floor = -1;
    std::uint64_t floor_seed = 0;
    Index max_points = 0;
    ApDistributionReport report;
};

//! Picard solve, Monte Carlo floor from an independent seed (unless epsilon
//! is fixed), then the shift scan.
ScanRun run_apscan(RunConfig const& config, std::ostream* log = nullptr);

//! Scan report with the epsilon policy, t-grid and law size.
std::string scan_json(ScanRun const& run, RunConfig const& config);

int cmd_check(RunConfig const& config, CommandOptions const& options, std::ostream& out);
int cmd_simulate(RunConfig const& config, CommandOptions const& options, std::ostream& out);
int cmd_picard(RunConfig const& config, CommandOptions const& options, std::ostream& out);
int cmd_apscan(RunConfig const& config, CommandOptions const& options, std::ostream& out);
//! cmd_picard on the galerkin_heat preset (the config may omit the preset).
int cmd_galerkin(RunConfig const& config, CommandOptions const& options, std::ostream& out);

}  // namespace apsde
