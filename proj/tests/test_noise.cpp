#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "apsde/noise.hpp"

using namespace apsde;

namespace
{
LevyProcessSpec scalar_spec(double q = 1.0)
{
    LevyProcessSpec spec;
    spec.drift = Vector::Zero(1);
    spec.wiener.covariance = Matrix::Constant(1, 1, q);
    return spec;
}

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b)
{
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0;
    while (i < a.size() && j < b.size())
    {
        double const x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
    }
    return d;
}
}  // namespace

TEST_CASE("validate_spec reports b and the small-jump moment")
{
    auto spec = scalar_spec();
    auto none = validate_spec(spec);
    CHECK(none.ok);
    CHECK(*none.b.exact() == Rational(0));
    CHECK(none.small_second_moment == 0);

    spec.jumps.push_back({Real::parse("1.2"),
                          PointMass{Vector::Constant(1, 2.0)},
                          JumpRegion::large});
    auto large = validate_spec(spec);
    CHECK(large.ok);
    CHECK(*large.b.exact() == Rational(6, 5));

    spec.jumps.push_back(
        {Real(Rational(2)), UniformAnnulus{0.1, 0.9}, JumpRegion::small});
    auto both = validate_spec(spec);
    CHECK(both.ok);

    // Composite Simpson on the radial density (uniform on [0.1, 0.9] in 1-D).
    int const n = 1000;
    double const a = 0.1, b = 0.9, w = (b - a) / n;
    double quad = 0;
    for (int i = 0; i <= n; ++i)
    {
        double const r = a + i * w;
        double const c = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
        quad += c * r * r / (b - a);
    }
    quad *= w / 3;
    CHECK(both.small_second_moment == doctest::Approx(2 * quad).epsilon(1e-10));

    RandomStream rng({5, 0, 2});
    double mc = 0;
    int const m = 200000;
    for (int i = 0; i < m; ++i)
    {
        mc += sample_mark(UniformAnnulus{0.1, 0.9}, 1, rng).squaredNorm();
    }
    mc /= m;
    CHECK(std::abs(mc - quad) < 0.005);
    CHECK(both.levy_integral == doctest::Approx(1.2 + 2 * quad));
}

TEST_CASE("malformed specs")
{
    auto spec = scalar_spec();
    spec.wiener.covariance = Matrix{{1.0, 0.0}, {0.0, -0.5}};
    spec.drift = Vector::Zero(2);
    try
    {
        validate_spec(spec);
        FAIL("negative eigenvalue accepted");
    }
    catch (InvalidCovariance const& e)
    {
        CHECK(e.eigenvalue() == doctest::Approx(-0.5));
    }
    spec.wiener.covariance = Matrix{{1.0, 0.3}, {0.0, 1.0}};
    CHECK_THROWS_AS(validate_spec(spec), InvalidCovariance);

    auto leaky = scalar_spec();
    leaky.jumps.push_back({Real(1.0),
                           PointMass{Vector::Constant(1, 1.5)},
                           JumpRegion::small});
    auto diag = validate_spec(leaky);
    CHECK_FALSE(diag.ok);
    CHECK_THROWS(NoiseSampler(leaky, {-1, 1}, 0.1, 1));
}

TEST_CASE("sampling basics")
{
    auto spec = scalar_spec(0.25);
    auto const a = sample_noise(spec, {-1, 2}, 0.01, {9, 3});
    auto const b = sample_noise(spec, {-1, 2}, 0.01, {9, 3});
    CHECK(a.jumps.empty());
    CHECK(a.grid.size() == 301);
    CHECK(a.grid.t_lo() == doctest::Approx(-1));
    CHECK(a.increments == b.increments);
    std::ostringstream sa, sb;
    write_noise_csv(sa, a);
    write_noise_csv(sb, b);
    CHECK(sa.str() == sb.str());
    CHECK(sa.str().rfind("t,dW0,n_jumps_small,n_jumps_large\n", 0) == 0);

    // A wider window extends the same realization outward from 0.
    auto const wide = sample_noise(spec, {-2, 3}, 0.01, {9, 3});
    auto const cut = restrict_noise(wide, {-1, 2});
    CHECK(cut.grid == a.grid);
    CHECK(cut.increments == a.increments);

    CHECK_THROWS(sample_noise(spec, {0.5, 2}, 0.01, {9, 3}));
    CHECK_THROWS(sample_noise(spec, {-1, INFINITY}, 0.01, {9, 3}));
    CHECK_THROWS(sample_noise(spec, {-1, 1}, 0.0, {9, 3}));
}

TEST_CASE("Poisson counts")
{
    double const lambda = 1.5, t = 2.0;
    auto spec = scalar_spec();
    spec.jumps.push_back({Real(lambda),
                          UniformAnnulus{1.0, 2.0},
                          JumpRegion::large});
    NoiseSampler sampler(spec, {-1, 1}, 0.05, 77);
    int const paths = 10000;
    double total = 0;
    for (int p = 0; p < paths; ++p)
    {
        auto const noise = sampler.sample(p);
        total += noise.jumps.size();
        for (auto const& j : noise.jumps)
        {
            double const tau = j.time(0.05);
            CHECK(tau > -1);
            CHECK(tau < 1);
            CHECK(j.region == JumpRegion::large);
            CHECK(j.mark.norm() >= 1);
        }
        CHECK(std::is_sorted(noise.jumps.begin(),
                             noise.jumps.end(),
                             [](auto const& x, auto const& y) {
                                 return x.time(0.05) < y.time(0.05);
                             }));
    }
    double const mean = total / paths;
    CHECK(std::abs(mean - lambda * t) < 3 * std::sqrt(lambda * t / paths));
}

TEST_CASE("shifts")
{
    auto spec = scalar_spec();
    spec.jumps.push_back({Real(3.0),
                          PointMass{Vector::Constant(1, 0.5)},
                          JumpRegion::small});
    auto const noise = sample_noise(spec, {-4, 4}, 0.01, {3, 1});

    auto const same = shift_noise(noise, 0.0);
    CHECK(same.grid == noise.grid);
    CHECK(same.increments == noise.increments);

    auto const moved = shift_noise(noise, 1.5);
    CHECK(moved.grid.t_lo() == doctest::Approx(-5.5));
    // W_s(u) - W_s(0) equals W(u + s) - W(s).
    Index const k_old = noise.grid.position(2.0);
    Index const k_new = moved.grid.position(0.5);
    CHECK(moved.increments.col(k_new) == noise.increments.col(k_old));
    REQUIRE(moved.jumps.size() == noise.jumps.size());
    for (std::size_t i = 0; i < noise.jumps.size(); ++i)
    {
        CHECK(moved.jumps[i].time(0.01)
              == doctest::Approx(noise.jumps[i].time(0.01) - 1.5));
    }

    auto const back = shift_noise(moved, -1.5);
    CHECK(back.grid == noise.grid);
    CHECK(back.increments == noise.increments);
    CHECK(back.jumps.size() == noise.jumps.size());
    for (std::size_t i = 0; i < noise.jumps.size(); ++i)
    {
        CHECK(back.jumps[i].step == noise.jumps[i].step);
        CHECK(back.jumps[i].offset == noise.jumps[i].offset);
    }

    CHECK_THROWS_AS(shift_noise(noise, 5.0), std::out_of_range);
    CHECK_THROWS(shift_noise(noise, 0.005));
}

TEST_CASE("shifted increments have the unshifted law")
{
    auto spec = scalar_spec();
    NoiseSampler sampler(spec, {-2, 2}, 0.1, 11);
    std::vector<double> base, shifted;
    for (int p = 0; p < 10000; ++p)
    {
        auto const noise = sampler.sample(p);
        base.push_back(noise.increments(0, noise.grid.position(0.3)));
        auto const s = shift_noise(noise, 1.2);
        shifted.push_back(s.increments(0, s.grid.position(0.3)));
    }
    double const n = 10000;
    // 1% two-sample critical value.
    CHECK(ks_statistic(base, shifted) < 1.628 * std::sqrt(2 / n));
}

TEST_CASE("compensated small jumps are centred")
{
    double const lambda = 4.0, x = 0.5;
    auto spec = scalar_spec();
    spec.jumps.push_back({Real(lambda),
                          PointMass{Vector::Constant(1, x)},
                          JumpRegion::small});
    NoiseSampler sampler(spec, {-1, 1}, 0.01, 5);
    auto step_fn = [](double t) { return t < 0 ? -1.0 : (t < 0.5 ? 1.0 : 2.0); };
    double const compensator = lambda * x * (-1.0 + 0.5 * 1.0 + 0.5 * 2.0);
    int const paths = 10000;
    double s1 = 0, s2 = 0;
    for (int p = 0; p < paths; ++p)
    {
        auto const noise = sampler.sample(p);
        double v = -compensator;
        for (auto const& j : noise.jumps) v += step_fn(j.time(0.01)) * j.mark[0];
        s1 += v;
        s2 += v * v;
    }
    double const mean = s1 / paths;
    double const se = std::sqrt((s2 / paths - mean * mean) / paths);
    CHECK(std::abs(mean) < 4 * se);
}

TEST_CASE("Ito isometry and independent halves")
{
    LevyProcessSpec spec;
    spec.drift = Vector::Zero(2);
    spec.wiener.covariance = Matrix{{1.0, 0.4}, {0.4, 0.5}};
    Vector g0(2);
    g0 << 0.7, -1.3;
    Window const w{-1.5, 2.0};
    NoiseSampler sampler(spec, w, 0.05, 21);
    int const paths = 10000;
    double s1 = 0, s2 = 0, sl = 0, sr = 0, slr = 0, sl2 = 0, sr2 = 0;
    Index const zero = sampler.grid().position(0.0);
    for (int p = 0; p < paths; ++p)
    {
        auto const noise = sampler.sample(p);
        Vector const total = noise.increments.rowwise().sum();
        double const v = g0.dot(total);
        s1 += v;
        s2 += v * v;
        double const l = noise.increments.row(0).head(zero).sum();
        double const r = noise.increments.row(0).tail(
                                 noise.grid.num_steps() - zero).sum();
        sl += l;
        sr += r;
        slr += l * r;
        sl2 += l * l;
        sr2 += r * r;
    }
    double const var = s2 / paths - (s1 / paths) * (s1 / paths);
    double const expected = w.length() * g0.dot(spec.wiener.covariance * g0);
    CHECK(std::abs(var - expected) / expected < 0.05);

    double const ml = sl / paths, mr = sr / paths;
    double const cov = slr / paths - ml * mr;
    double const corr = cov / std::sqrt((sl2 / paths - ml * ml)
                                        * (sr2 / paths - mr * mr));
    CHECK(std::abs(corr) < 4 / std::sqrt(double(paths)));
}
