#include "apsde/noise.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <Eigen/Eigenvalues>

namespace apsde
{

char const* to_string(JumpRegion region)
{
    return region == JumpRegion::small ? "small" : "large";
}

namespace
{
constexpr int kMaxRejections = 10000;

template<class... Ts>
struct Overloaded : Ts...
{
    using Ts::operator()...;
};
template<class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_covariance(Matrix const& q)
{
    if (q.rows() != q.cols() || q.rows() == 0)
    {
        throw InvalidCovariance("covariance must be a non-empty square "
                                "matrix",
                                0.0);
    }
    if (!q.allFinite())
    {
        throw InvalidCovariance("covariance has non-finite entries", 0.0);
    }
    double const scale = std::max(1.0, q.cwiseAbs().maxCoeff());
    double const asym = (q - q.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * scale)
    {
        throw InvalidCovariance("covariance is not symmetric (max asymmetry "
                                    + format_double(asym) + ")",
                                0.0);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (q + q.transpose()),
                                              Eigen::EigenvaluesOnly);
    double const lowest = eig.eigenvalues().minCoeff();
    if (lowest < -1e-12 * scale)
    {
        throw InvalidCovariance("covariance has negative eigenvalue "
                                    + format_double(lowest),
                                lowest);
    }
}

std::string region_problem(std::size_t c, char const* what)
{
    return "jump component " + std::to_string(c) + ": " + what;
}
}  // namespace

//---------------------------------------------------------------------------//

Matrix covariance_sqrt(Matrix const& q)
{
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (q + q.transpose()));
    Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * root.asDiagonal()
           * eig.eigenvectors().transpose();
}

double mark_second_moment(MarkDistribution const& marks, Index dim)
{
    return std::visit(
        Overloaded{
            [](PointMass const& m) { return m.point.squaredNorm(); },
            [dim](UniformAnnulus const& m) {
                double const a = m.r_min;
                double const b = m.r_max;
                auto const d = static_cast<double>(dim);
                if (b - a <= 1e-15 * b) return a * a;
                return d / (d + 2) * (std::pow(b, d + 2) - std::pow(a, d + 2))
                       / (std::pow(b, d) - std::pow(a, d));
            },
            [](DiscreteMixture const& m) {
                double acc = 0;
                for (std::size_t i = 0; i < m.atoms.size(); ++i)
                    acc += m.weights[i] * m.atoms[i].squaredNorm();
                return acc;
            }},
        marks);
}

Vector mark_mean(MarkDistribution const& marks, Index dim)
{
    return std::visit(Overloaded{[](PointMass const& m) { return m.point; },
                                 [dim](UniformAnnulus const&) {
                                     return Vector(Vector::Zero(dim));
                                 },
                                 [dim](DiscreteMixture const& m) {
                                     Vector acc = Vector::Zero(dim);
                                     for (std::size_t i = 0;
                                          i < m.atoms.size();
                                          ++i)
                                         acc += m.weights[i] * m.atoms[i];
                                     return acc;
                                 }},
                      marks);
}

Vector sample_mark(MarkDistribution const& marks, Index dim, RandomStream& rng)
{
    return std::visit(
        Overloaded{
            [](PointMass const& m) { return m.point; },
            [dim, &rng](UniformAnnulus const& m) {
                Vector dir(dim);
                double norm = 0;
                do
                {
                    for (Index i = 0; i < dim; ++i) dir[i] = rng.normal();
                    norm = dir.norm();
                } while (norm == 0);
                auto const d = static_cast<double>(dim);
                double const lo = std::pow(m.r_min, d);
                double const hi = std::pow(m.r_max, d);
                double const r = std::pow(lo + rng.uniform() * (hi - lo),
                                          1.0 / d);
                return Vector(dir * (r / norm));
            },
            [&rng](DiscreteMixture const& m) {
                double u = rng.uniform();
                for (std::size_t i = 0; i + 1 < m.atoms.size(); ++i)
                {
                    if (u < m.weights[i]) return m.atoms[i];
                    u -= m.weights[i];
                }
                return m.atoms.back();
            }},
        marks);
}

bool in_region(Vector const& mark, JumpRegion region)
{
    double const r = mark.norm();
    return region == JumpRegion::small ? (r > 0 && r < 1) : r >= 1;
}

NoiseDiagnostics validate_spec(LevyProcessSpec const& spec)
{
    check_covariance(spec.wiener.covariance);
    Index const dim = spec.dim();

    NoiseDiagnostics diag;
    diag.b = Real(Rational(0));
    diag.small_rate = Real(Rational(0));
    diag.trace_q = spec.wiener.covariance.trace();

    if (spec.drift.size() != dim)
    {
        diag.ok = false;
        diag.problems.push_back("drift dimension does not match the noise "
                                "dimension");
    }

    for (std::size_t c = 0; c < spec.jumps.size(); ++c)
    {
        auto const& comp = spec.jumps[c];
        double const rate = comp.rate.value();
        if (!std::isfinite(rate) || rate < 0)
        {
            diag.ok = false;
            diag.problems.push_back(
                region_problem(c, "rate must be finite and non-negative"));
            continue;
        }
        bool const small = comp.region == JumpRegion::small;
        bool consistent = std::visit(
            Overloaded{
                [&](PointMass const& m) {
                    return m.point.size() == dim && in_region(m.point, comp.region);
                },
                [&](UniformAnnulus const& m) {
                    if (!(m.r_min >= 0 && m.r_min <= m.r_max)
                        || !std::isfinite(m.r_max))
                        return false;
                    if (m.r_max == 0) return false;
                    return small ? m.r_max <= 1 : m.r_min >= 1;
                },
                [&](DiscreteMixture const& m) {
                    if (m.atoms.empty() || m.atoms.size() != m.weights.size())
                        return false;
                    double total = 0;
                    for (std::size_t i = 0; i < m.atoms.size(); ++i)
                    {
                        if (m.weights[i] < 0 || m.atoms[i].size() != dim
                            || !in_region(m.atoms[i], comp.region))
                            return false;
                        total += m.weights[i];
                    }
                    return std::abs(total - 1) <= 1e-12;
                }},
            comp.marks);
        if (!consistent)
        {
            diag.ok = false;
            diag.problems.push_back(region_problem(
                c,
                small ? "marks not inside the declared region |x| < 1"
                      : "marks not inside the declared region |x| >= 1"));
            continue;
        }
        if (small)
        {
            diag.small_rate = diag.small_rate + comp.rate;
            double const m2 = mark_second_moment(comp.marks, dim);
            diag.small_second_moment += rate * m2;
            diag.levy_integral += rate * m2;
        }
        else
        {
            diag.b = diag.b + comp.rate;
            diag.levy_integral += rate;
        }
    }
    return diag;
}

//---------------------------------------------------------------------------//

NoiseSampler::NoiseSampler(LevyProcessSpec spec, Window window, double step,
                           std::uint64_t seed)
    : spec_(std::move(spec)), seed_(seed)
{
    if (!std::isfinite(window.lo) || !std::isfinite(window.hi))
    {
        throw std::invalid_argument("noise window must be finite");
    }
    if (!(window.lo <= 0 && 0 <= window.hi))
    {
        throw std::invalid_argument("noise window must contain time 0");
    }
    diagnostics_ = validate_spec(spec_);
    if (!diagnostics_.ok)
    {
        std::string msg = "invalid Levy spec:";
        for (auto const& p : diagnostics_.problems) msg += " " + p + ";";
        throw std::invalid_argument(msg);
    }
    grid_ = TimeGrid::covering(window, step);
    sqrt_q_ = covariance_sqrt(spec_.wiener.covariance);
}

NoiseRealization NoiseSampler::sample(std::uint32_t path) const
{
    Index const dim = spec_.dim();
    double const h = grid_.step();
    double const sqrt_h = std::sqrt(h);

    NoiseRealization out;
    out.grid = grid_;
    out.seed_key = {seed_, path};
    out.increments.resize(dim, grid_.num_steps());

    // Both halves are generated outward from time 0, so a wider window only
    // appends draws and never changes the ones already produced.
    Vector z(dim);
    auto fill = [&](StreamTag tag, std::int64_t count, auto column_of) {
        RandomStream rng({seed_, path, static_cast<std::uint32_t>(tag)});
        for (std::int64_t j = 0; j < count; ++j)
        {
            for (Index i = 0; i < dim; ++i) z[i] = rng.normal();
            out.increments.col(column_of(j)) = sqrt_h * (sqrt_q_ * z);
        }
    };
    std::int64_t const n_fwd = grid_.last();
    std::int64_t const n_bwd = -grid_.first();
    fill(StreamTag::brownian_forward, n_fwd, [&](std::int64_t j) {
        return static_cast<Index>(j - grid_.first());
    });
    // Step [-(j+1)h, -jh] of L(t) = -L2(-t) is the j-th increment of L2.
    fill(StreamTag::brownian_backward, n_bwd, [&](std::int64_t j) {
        return static_cast<Index>(-j - 1 - grid_.first());
    });

    for (std::size_t c = 0; c < spec_.jumps.size(); ++c)
    {
        auto const& comp = spec_.jumps[c];
        double const rate = comp.rate.value();
        if (rate <= 0) continue;
        for (bool backward : {false, true})
        {
            double const horizon = backward ? -grid_.t_lo() : grid_.t_hi();
            RandomStream rng(
                {seed_, path, jump_stream_tag(c, backward)});
            double u = 0;
            while (true)
            {
                u += rng.exponential(rate);
                if (u >= horizon) break;
                Vector mark;
                int tries = 0;
                do
                {
                    if (++tries > kMaxRejections)
                    {
                        throw std::runtime_error(
                            "mark sampler cannot hit the declared region");
                    }
                    mark = sample_mark(comp.marks, dim, rng);
                } while (!in_region(mark, comp.region));

                double const q = (backward ? -u : u) / h;
                double const step = std::floor(q);
                JumpEvent ev;
                ev.step = static_cast<std::int64_t>(step);
                ev.offset = q - step;
                ev.mark = std::move(mark);
                ev.region = comp.region;
                ev.component = static_cast<std::uint32_t>(c);
                out.jumps.push_back(std::move(ev));
            }
        }
    }
    std::sort(out.jumps.begin(),
              out.jumps.end(),
              [](JumpEvent const& a, JumpEvent const& b) {
                  if (a.step != b.step) return a.step < b.step;
                  return a.offset < b.offset;
              });
    return out;
}

NoiseRealization sample_noise(LevyProcessSpec const& spec, Window window,
                              double step, SeedKey key)
{
    return NoiseSampler(spec, window, step, key.seed).sample(key.path);
}

NoiseRealization shift_noise(NoiseRealization const& noise, double shift)
{
    std::int64_t const m = noise.grid.steps_in(shift);
    if (m < noise.grid.first() || m > noise.grid.last())
    {
        throw std::out_of_range("shift " + format_double(shift)
                                + " leaves the sampled window; sample a "
                                  "wider window");
    }
    NoiseRealization out = noise;
    out.grid = noise.grid.shifted_steps(m);
    for (auto& jump : out.jumps) jump.step -= m;
    return out;
}

NoiseRealization restrict_noise(NoiseRealization const& noise, Window window)
{
    Index const a = noise.grid.position(window.lo);
    Index const b = noise.grid.position(window.hi);
    if (b < a)
    {
        throw std::invalid_argument("restriction window is empty");
    }
    NoiseRealization out;
    out.seed_key = noise.seed_key;
    out.grid = TimeGrid(noise.grid.step(),
                        noise.grid.first() + a,
                        noise.grid.first() + b);
    out.increments = noise.increments.middleCols(a, b - a);
    for (auto const& jump : noise.jumps)
    {
        if (jump.step >= out.grid.first() && jump.step < out.grid.last())
            out.jumps.push_back(jump);
    }
    return out;
}

void write_noise_csv(std::ostream& os, NoiseRealization const& noise)
{
    os << "t";
    for (Index i = 0; i < noise.dim(); ++i) os << ",dW" << i;
    os << ",n_jumps_small,n_jumps_large\n";
    std::size_t j = 0;
    for (Index k = 0; k < noise.grid.num_steps(); ++k)
    {
        int n_small = 0;
        int n_large = 0;
        while (j < noise.jumps.size() && noise.local_step(noise.jumps[j]) == k)
        {
            (noise.jumps[j].region == JumpRegion::small ? n_small : n_large)++;
            ++j;
        }
        os << format_double(noise.grid.time(k));
        for (Index i = 0; i < noise.dim(); ++i)
            os << ',' << format_double(noise.increments(i, k));
        os << ',' << n_small << ',' << n_large << '\n';
    }
}

}  // namespace apsde
