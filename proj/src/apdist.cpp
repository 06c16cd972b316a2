#include "apsde/apdist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "apsde/parallel.hpp"

namespace apsde
{

namespace
{
constexpr double time_tol = 1e-9;

std::ptrdiff_t find_time(std::vector<double> const& times, double t)
{
    auto it = std::lower_bound(times.begin(), times.end(), t - time_tol * std::max(1.0, std::abs(t)));
    if (it != times.end() && std::abs(*it - t) <= time_tol * std::max(1.0, std::abs(t)))
        return it - times.begin();
    return -1;
}
}  // namespace

bool LawTrajectory::has(double t) const
{
    return find_time(times, t) >= 0;
}

EmpiricalLaw const& LawTrajectory::at(double t) const
{
    auto const i = find_time(times, t);
    if (i < 0)
    {
        throw std::out_of_range("no law at t = " + format_double(t));
    }
    return laws[static_cast<std::size_t>(i)];
}

LawTrajectory law_trajectory(PathEnsemble const& ens, std::vector<double> const& times,
                             Index max_points)
{
    Index const paths = max_points > 0 ? std::min(max_points, ens.paths()) : ens.paths();
    std::vector<Index> pos;
    pos.reserve(times.size());
    for (double t : times) pos.push_back(ens.grid().position(t));
    std::sort(pos.begin(), pos.end());
    pos.erase(std::unique(pos.begin(), pos.end()), pos.end());

    LawTrajectory out;
    for (Index k : pos)
    {
        Matrix pts(ens.dim(), paths);
        for (Index p = 0; p < paths; ++p) pts.col(p) = ens.path(p).col(k);
        out.times.push_back(ens.grid().time(k));
        out.laws.push_back(EmpiricalLaw::uniform(std::move(pts)));
    }
    return out;
}

void write_laws_csv(std::ostream& os, LawTrajectory const& laws)
{
    if (laws.laws.empty()) return;
    os << "t";
    for (Index i = 0; i < laws.laws.front().dim(); ++i) os << ",x" << i;
    os << ",weight\n";
    for (std::size_t k = 0; k < laws.laws.size(); ++k)
    {
        auto const& law = laws.laws[k];
        for (Index j = 0; j < law.size(); ++j)
        {
            os << format_double(laws.times[k]);
            for (Index i = 0; i < law.dim(); ++i) os << ',' << format_double(law.points()(i, j));
            os << ',' << format_double(law.weights()(j)) << '\n';
        }
    }
}

std::vector<double> grid_times(TimeGrid const& grid, Window window, Index stride)
{
    if (stride < 1) stride = 1;
    std::vector<double> out;
    for (Index k = 0; k < grid.size(); k += 1)
    {
        double const t = grid.time(k);
        if (t < window.lo - 1e-9 * grid.step() || t > window.hi + 1e-9 * grid.step()) continue;
        out.push_back(t);
    }
    std::vector<double> strided;
    for (std::size_t i = 0; i < out.size(); i += static_cast<std::size_t>(stride))
        strided.push_back(out[i]);
    return strided;
}

std::vector<double> ApDistributionReport::accepted() const
{
    std::vector<double> out;
    for (auto const& s : shifts)
        if (s.accepted) out.push_back(s.s);
    return out;
}

namespace
{
void validate(ShiftSequence const& seq)
{
    if (seq.t_grid.empty())
    {
        throw std::invalid_argument("the t-grid of the scan is empty");
    }
    if (!(seq.epsilon >= 0) || !std::isfinite(seq.epsilon))
    {
        throw std::invalid_argument("epsilon must be finite and nonnegative");
    }
    for (std::size_t i = 1; i < seq.shifts.size(); ++i)
    {
        if (!(seq.shifts[i] > seq.shifts[i - 1]))
        {
            throw std::invalid_argument("shifts must be strictly increasing");
        }
    }
}

double max_gap_of(std::vector<double> accepted)
{
    std::vector<double> pts{0.0};
    for (double s : accepted)
        if (s > 0) pts.push_back(s);
    if (pts.size() < 2) return std::numeric_limits<double>::infinity();
    std::sort(pts.begin(), pts.end());
    double gap = 0;
    for (std::size_t i = 1; i < pts.size(); ++i) gap = std::max(gap, pts[i] - pts[i - 1]);
    return gap;
}
}  // namespace

ApDistributionReport ap_distribution_scan(LawTrajectory const& laws, ShiftSequence const& seq,
                                          BlOptions const& options)
{
    validate(seq);
    bool overlap = false;
    for (double t : seq.t_grid) overlap = overlap || laws.has(t);
    if (!overlap)
    {
        throw std::invalid_argument("the t-grid does not overlap the law trajectory");
    }
    for (double s : seq.shifts)
    {
        for (double t : seq.t_grid)
        {
            if (!laws.has(t) || !laws.has(t + s))
            {
                throw std::invalid_argument("shifted time " + format_double(t + s)
                                            + " (t = " + format_double(t) + ", s = "
                                            + format_double(s)
                                            + ") is outside the law trajectory");
            }
        }
    }

    std::size_t const nt = seq.t_grid.size();
    std::size_t const pairs = seq.shifts.size() * nt;
    std::vector<double> beta(pairs, 0.0);
    parallel_chunks(pairs, 1, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k)
        {
            double const s = seq.shifts[k / nt];
            double const t = seq.t_grid[k % nt];
            beta[k] = bl_distance(laws.at(t + s), laws.at(t), options);
        }
    });

    ApDistributionReport rep;
    rep.epsilon = seq.epsilon;
    for (std::size_t i = 0; i < seq.shifts.size(); ++i)
    {
        ShiftOutcome o;
        o.s = seq.shifts[i];
        o.t_sup = seq.t_grid.front();
        for (std::size_t j = 0; j < nt; ++j)
        {
            if (beta[i * nt + j] > o.sup_beta)
            {
                o.sup_beta = beta[i * nt + j];
                o.t_sup = seq.t_grid[j];
            }
        }
        o.accepted = o.sup_beta <= seq.epsilon;
        rep.shifts.push_back(o);
    }
    rep.max_gap = max_gap_of(rep.accepted());
    return rep;
}

ApDistributionReport ap_distribution_scan(PathEnsemble const& ens, ShiftSequence const& seq,
                                          BlOptions const& options, Index max_points)
{
    validate(seq);
    std::set<Index> needed;
    for (double t : seq.t_grid)
    {
        needed.insert(ens.grid().position(t));
        for (double s : seq.shifts)
        {
            try
            {
                needed.insert(ens.grid().position(t + s));
            }
            catch (std::out_of_range const&)
            {
                throw std::invalid_argument("shifted time " + format_double(t + s)
                                            + " is outside the simulated window");
            }
        }
    }
    std::vector<double> times;
    for (Index k : needed) times.push_back(ens.grid().time(k));
    auto const laws = law_trajectory(ens, times, max_points);
    // Re-express the requested times as grid times so lookups are exact.
    ShiftSequence snapped = seq;
    for (auto& t : snapped.t_grid) t = ens.grid().time(ens.grid().position(t));
    return ap_distribution_scan(laws, snapped, options);
}

double law_distance_floor(LawTrajectory const& a, LawTrajectory const& b,
                          std::vector<double> const& t_grid, BlOptions const& options)
{
    if (t_grid.empty()) throw std::invalid_argument("the t-grid is empty");
    std::vector<double> beta(t_grid.size());
    parallel_chunks(t_grid.size(), 1, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k)
            beta[k] = bl_distance(a.at(t_grid[k]), b.at(t_grid[k]), options);
    });
    return *std::max_element(beta.begin(), beta.end());
}

double square_mean_shift_distance(PathEnsemble const& ens, double s,
                                  std::vector<double> const& t_grid)
{
    if (t_grid.empty()) throw std::invalid_argument("the t-grid is empty");
    double sup = 0;
    for (double t : t_grid)
    {
        Index const i = ens.grid().position(t);
        Index const j = ens.grid().position(t + s);
        double acc = 0;
        for (Index p = 0; p < ens.paths(); ++p)
            acc += (ens.path(p).col(j) - ens.path(p).col(i)).squaredNorm();
        sup = std::max(sup, acc / static_cast<double>(ens.paths()));
    }
    return sup;
}

std::string to_json(ApDistributionReport const& report)
{
    nlohmann::ordered_json j;
    j["epsilon"] = report.epsilon;
    j["shifts"] = nlohmann::ordered_json::array();
    for (auto const& s : report.shifts)
    {
        nlohmann::ordered_json e;
        e["s"] = s.s;
        e["sup_beta"] = s.sup_beta;
        e["accepted"] = s.accepted;
        j["shifts"].push_back(e);
    }
    if (std::isfinite(report.max_gap))
        j["max_gap"] = report.max_gap;
    else
        j["max_gap"] = nullptr;
    return j.dump(2);
}

}  // namespace apsde
