#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace apsde
{

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

//! Closed interval of time.
struct Window
{
    double lo = 0;
    double hi = 0;

    double length() const { return hi - lo; }
    bool contains(double t) const { return lo <= t && t <= hi; }
};

//! Shortest decimal that round-trips; deterministic across platforms.
inline std::string format_double(double v)
{
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

//---------------------------------------------------------------------------//
/*!
 * Uniform time grid anchored at zero: node i sits at time i * step for
 * first <= i <= last. Shifting by whole steps is exact integer arithmetic.
 */
class TimeGrid
{
  public:
    TimeGrid() = default;
    TimeGrid(double step, std::int64_t first, std::int64_t last)
        : step_(step), first_(first), last_(last)
    {
        if (!(step > 0) || !std::isfinite(step))
        {
            throw std::invalid_argument("time step must be positive and "
                                        "finite");
        }
        if (last < first)
        {
            throw std::invalid_argument("empty time grid");
        }
    }

    //! Smallest zero-anchored grid covering the window.
    static TimeGrid covering(Window w, double step)
    {
        if (!(step > 0) || !std::isfinite(step))
        {
            throw std::invalid_argument("time step must be positive and "
                                        "finite");
        }
        if (!std::isfinite(w.lo) || !std::isfinite(w.hi) || w.hi < w.lo)
        {
            throw std::invalid_argument("time window must be finite and "
                                        "ordered");
        }
        constexpr double slack = 1e-9;
        auto first = static_cast<std::int64_t>(std::floor(w.lo / step + slack));
        auto last = static_cast<std::int64_t>(std::ceil(w.hi / step - slack));
        return TimeGrid(step, first, last);
    }

    double step() const { return step_; }
    std::int64_t first() const { return first_; }
    std::int64_t last() const { return last_; }

    //! Number of nodes.
    Index size() const { return static_cast<Index>(last_ - first_ + 1); }
    //! Number of steps between nodes.
    Index num_steps() const { return static_cast<Index>(last_ - first_); }

    //! Time of the node at local position k (0-based).
    double time(Index k) const
    {
        return static_cast<double>(first_ + k) * step_;
    }
    double t_lo() const { return static_cast<double>(first_) * step_; }
    double t_hi() const { return static_cast<double>(last_) * step_; }
    Window window() const { return {t_lo(), t_hi()}; }

    //! Local position of a node time; throws if t is not on the grid.
    Index position(double t) const
    {
        double const q = t / step_;
        double const r = std::round(q);
        if (std::abs(q - r) > 1e-6)
        {
            throw std::invalid_argument("time " + format_double(t)
                                        + " is not on the grid");
        }
        auto const i = static_cast<std::int64_t>(r);
        if (i < first_ || i > last_)
        {
            throw std::out_of_range("time " + format_double(t)
                                    + " is outside the grid");
        }
        return static_cast<Index>(i - first_);
    }

    //! Whole number of steps in a duration; throws if not a multiple.
    std::int64_t steps_in(double duration) const
    {
        double const q = duration / step_;
        double const r = std::round(q);
        if (std::abs(q - r) > 1e-6)
        {
            throw std::invalid_argument("duration " + format_double(duration)
                                        + " is not a multiple of the step");
        }
        return static_cast<std::int64_t>(r);
    }

    //! Grid with the same step re-indexed so that old time t maps to t - s.
    TimeGrid shifted_steps(std::int64_t m) const
    {
        return TimeGrid(step_, first_ - m, last_ - m);
    }

    friend bool operator==(TimeGrid const&, TimeGrid const&) = default;

  private:
    double step_ = 1;
    std::int64_t first_ = 0;
    std::int64_t last_ = 0;
};

}  // namespace apsde
