#pragma once

#include <chrono>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "apsde/coefficients.hpp"
#include "apsde/dichotomy.hpp"
#include "apsde/noise.hpp"
#include "apsde/rational.hpp"
#include "apsde/types.hpp"

namespace apsde
{

//---------------------------------------------------------------------------//
// Contraction conditions
//---------------------------------------------------------------------------//

struct ConditionReport
{
    Real k;
    Real omega;
    Real l;
    Real b;
    //! (1 + 2b)/omega^2 + 2/omega
    Real lhs;
    //! 16 K^2 L (1 + 2b)/omega^2 + 32 K^2 L/omega
    Real eta;
    Real threshold_existence;     // 1/(16 K^2 L)
    Real threshold_distribution;  // 1/(32 K^2 L)
    bool existence = false;
    bool distribution = false;
    //! Largest b for which each inequality holds (strictly below this value).
    Real b_bound_existence;
    Real b_bound_distribution;
    //! Every quantity above was computed in exact rational arithmetic.
    bool exact = false;

    //! Both inequalities, i.e. the hypotheses for almost periodicity in
    //! distribution of the bounded solution.
    bool joint() const { return existence && distribution; }
};

//! Throws std::invalid_argument unless K, omega, L > 0 and b >= 0.
ConditionReport check_conditions(Real k, Real omega, Real l, Real b);

//! JSON object with every field (exact values as "p/q" strings plus floats).
std::string to_json(ConditionReport const& report);

//---------------------------------------------------------------------------//
// Sample paths
//---------------------------------------------------------------------------//

/*!
 * M sample paths of the state on one time grid.
 *
 * Path p is stored as a dim x nodes column-major block, so one path is a
 * contiguous matrix whose column k is the state at grid node k.
 */
class PathEnsemble
{
  public:
    PathEnsemble() = default;
    PathEnsemble(TimeGrid grid, Index paths, Index dim);

    TimeGrid const& grid() const { return grid_; }
    Index paths() const { return paths_; }
    Index dim() const { return dim_; }
    Index nodes() const { return grid_.size(); }

    Eigen::Map<Matrix> path(Index p)
    {
        return {data_.data() + offset(p), dim_, nodes()};
    }
    Eigen::Map<Matrix const> path(Index p) const
    {
        return {data_.data() + offset(p), dim_, nodes()};
    }
    Vector state(Index p, Index k) const { return path(p).col(k); }

    //! Noise the paths were driven by (may be null for hand-built ensembles).
    std::shared_ptr<NoiseSampler const> noise;

  private:
    TimeGrid grid_;
    Index paths_ = 0;
    Index dim_ = 0;
    std::vector<double> data_;

    std::size_t offset(Index p) const
    {
        return static_cast<std::size_t>(p) * static_cast<std::size_t>(dim_)
               * static_cast<std::size_t>(nodes());
    }
};

//! (1/M) sum_p max_k |Y_p(t_k)|^2 over the grid nodes inside the window
//! (whole grid by default).
double sup_second_moment(PathEnsemble const& ens, std::optional<Window> window = {});
//! (1/M) sum_p |Y_p(t) - Y_p(r)|^2; t and r must be grid nodes.
double l2_increment(PathEnsemble const& ens, double t, double r);
//! Per-node mean (dim x nodes) and mean squared norm.
Matrix mean_curve(PathEnsemble const& ens);
std::vector<double> second_moment_curve(PathEnsemble const& ens);

//! CSV columns: t, path, y0..y{d-1}.
void write_ensemble_csv(std::ostream& os, PathEnsemble const& ens,
                        Index stride = 1, Index max_paths = -1,
                        std::optional<Window> window = {});
//! CSV columns: t, mean0.., second_moment[, reference0..].
void write_mean_curve_csv(std::ostream& os, PathEnsemble const& ens,
                          Index stride = 1,
                          std::function<Vector(double)> const& reference = {},
                          std::optional<Window> window = {});

//---------------------------------------------------------------------------//
// The mild-solution operator
//---------------------------------------------------------------------------//

//! Dichotomy constants actually used for error reporting.
struct DichotomyConstants
{
    double k = 1;
    double omega = 1;
    bool declared = false;
};

//! Declared constants when present, else a fit on 50 points of [0, 2].
DichotomyConstants resolve_constants(DichotomousSystem const& sys);

/*!
 * Discrete version of the operator S and of the forward mild equation for
 * one coefficient set, one linear part and one noise grid.
 *
 * On each grid step [t_k, t_k+1] the coefficients are frozen at (t_k, Y_k),
 * the pre-jump state. Drift and compensator kernels are integrated exactly,
 * the Brownian kernel is taken at the left end and each jump is propagated
 * from its exact time. The P-part runs forward in time, the J-part
 * backward, each as a one-step recursion, and the truncation to windows of
 * length T_c is a difference of two recursion values.
 */
class MildOperator
{
  public:
    MildOperator(DichotomousSystem const& sys, CoefficientSet const& cs,
                 LevyProcessSpec const& spec, double step, double truncation);

    double step() const { return h_; }
    double truncation() const { return truncation_; }
    std::int64_t truncation_steps() const { return n_c_; }
    std::string const& compensator_method() const { return compensator_.method(); }

    struct Workspace;
    std::unique_ptr<Workspace> make_workspace(Index nodes) const;

    //! out = S(in) along one noise path. in and out are dim x nodes.
    void apply(NoiseRealization const& noise, Eigen::Ref<Matrix const> in,
               Eigen::Ref<Matrix> out, Workspace& ws) const;

    //! Forward mild solution from y0 at the first grid node.
    void simulate(NoiseRealization const& noise, Vector const& y0,
                  Eigen::Ref<Matrix> out, Workspace& ws) const;

    ~MildOperator();

  private:
    DichotomousSystem const* sys_;
    CoefficientSet const* cs_;
    Compensator compensator_;
    double h_;
    double truncation_;
    std::int64_t n_c_;
    Index d_;
    Index m_;
    Matrix ap_, aj_;
    Matrix e_fwd_;      // e^{Ah} P
    Matrix e_bwd_;      // e^{-Ah} J
    Matrix phi_fwd_;    // int_0^h e^{Au} P du
    Matrix phi_bwd_;    // int_0^h e^{-Au} J du
    Matrix e_fwd_nc_;   // (e^{Ah} P)^{n_c}
    Matrix e_bwd_nc_;   // (e^{-Ah} J)^{n_c}
    Matrix e_full_;     // e^{Ah}
    Matrix phi_full_;   // int_0^h e^{Au} du
    Matrix p_, j_;

    void frozen_terms(NoiseRealization const& noise, Index k, double t,
                      Eigen::Ref<Vector const> y, Workspace& ws) const;
};

struct SReport
{
    //! K e^{-omega T_c}: relative weight of the discarded convolution tails.
    double tail_factor = 0;
    //! Nodes whose convolution windows fit inside the noise grid.
    Window valid_window;
    std::string compensator_method;
};

//! Y = S(input) for every path, driven by the sampler the input refers to.
PathEnsemble apply_S(DichotomousSystem const& sys, CoefficientSet const& cs,
                     std::shared_ptr<NoiseSampler const> noise,
                     PathEnsemble const& input, double truncation,
                     SReport* report = nullptr);

//! Forward exponential-integrator solution from y_r at the grid start.
PathEnsemble simulate_mild(DichotomousSystem const& sys, CoefficientSet const& cs,
                           std::shared_ptr<NoiseSampler const> noise,
                           Vector const& y_r, Index paths);

//---------------------------------------------------------------------------//
// Picard iteration
//---------------------------------------------------------------------------//

struct PicardRecord
{
    int k = 0;
    double gap = 0;
    double sup_second_moment = 0;
    double wall_ms = 0;
};

struct PicardOptions
{
    double tol = 1e-10;
    int max_iter = 50;
    //! T_c; zero selects 12/omega.
    double truncation = 0;
    Index paths = 1000;
    std::function<void(PicardRecord const&)> on_iteration;
};

struct PicardResult
{
    PathEnsemble ensemble;
    std::vector<PicardRecord> trace;
    bool converged = false;
    double truncation = 0;
    SReport s_report;
    DichotomyConstants constants;
    std::vector<std::string> warnings;
};

/*!
 * Y^0 = 0, Y^{k+1} = S(Y^k) on common random numbers until
 * gap_k = sup_t (1/M) sum |Y^{k+1} - Y^k|^2 <= tol.
 *
 * Paths are updated in place and their noise is regenerated from the
 * counter-based sampler at every sweep, so memory is one ensemble.
 */
PicardResult picard_solve(DichotomousSystem const& sys, CoefficientSet const& cs,
                          std::shared_ptr<NoiseSampler const> noise,
                          PicardOptions const& options);

//! One JSON object per line: {k, gap, sup_second_moment[, wall_ms]}.
void write_gap_trace_jsonl(std::ostream& os, std::vector<PicardRecord> const& trace,
                           bool include_wall = true);

}  // namespace apsde
