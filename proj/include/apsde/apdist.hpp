#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "apsde/bl_distance.hpp"
#include "apsde/solver.hpp"

namespace apsde
{

//! Empirical laws of the state at a set of times.
struct LawTrajectory
{
    std::vector<double> times;
    std::vector<EmpiricalLaw> laws;

    bool has(double t) const;
    //! Throws std::out_of_range when t is not one of the times.
    EmpiricalLaw const& at(double t) const;
};

/*!
 * Equal-weight law of {Y_p(t)} at each requested time (grid nodes only).
 * max_points > 0 keeps the first max_points paths, which are i.i.d. like
 * the rest.
 */
LawTrajectory law_trajectory(PathEnsemble const& ens, std::vector<double> const& times,
                             Index max_points = -1);

//! CSV columns: t, x0..x{d-1}, weight.
void write_laws_csv(std::ostream& os, LawTrajectory const& laws);

//! Grid nodes of the window, every stride-th one.
std::vector<double> grid_times(TimeGrid const& grid, Window window, Index stride = 1);

struct ShiftSequence
{
    //! Candidate shifts s_1 < s_2 < ...
    std::vector<double> shifts;
    double epsilon = 0;
    //! Times t over which sup_t beta(mu(t + s), mu(t)) is taken.
    std::vector<double> t_grid;
};

struct ShiftOutcome
{
    double s = 0;
    double sup_beta = 0;
    //! Time attaining the supremum.
    double t_sup = 0;
    bool accepted = false;
};

struct ApDistributionReport
{
    double epsilon = 0;
    std::vector<ShiftOutcome> shifts;
    //! Largest gap between consecutive accepted shifts, counting s = 0 as
    //! accepted; infinite when no positive shift is accepted.
    double max_gap = 0;

    std::vector<double> accepted() const;
};

/*!
 * epsilon-almost-period scan of the law map: s is accepted iff
 * sup over the t-grid of beta(mu(t + s), mu(t)) <= epsilon.
 *
 * Throws std::invalid_argument for an empty t-grid, unsorted shifts or
 * shifted times the trajectory does not cover.
 */
ApDistributionReport ap_distribution_scan(LawTrajectory const& laws,
                                          ShiftSequence const& seq,
                                          BlOptions const& options = {});

//! Builds the needed laws from the ensemble, then scans.
ApDistributionReport ap_distribution_scan(PathEnsemble const& ens, ShiftSequence const& seq,
                                          BlOptions const& options = {},
                                          Index max_points = -1);

//! sup over t_grid of beta between two trajectories at equal times; with two
//! independent ensembles of one problem this is the Monte Carlo floor of
//! the scan.
double law_distance_floor(LawTrajectory const& a, LawTrajectory const& b,
                          std::vector<double> const& t_grid,
                          BlOptions const& options = {});

//! sup_t (1/M) sum_p |Y_p(t + s) - Y_p(t)|^2 over t_grid (same-path coupling).
double square_mean_shift_distance(PathEnsemble const& ens, double s,
                                  std::vector<double> const& t_grid);

//! {epsilon, shifts: [{s, sup_beta, accepted}], max_gap}; max_gap is null
//! when infinite.
std::string to_json(ApDistributionReport const& report);

}  // namespace apsde
