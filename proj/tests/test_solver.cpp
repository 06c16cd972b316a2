#include <cmath>
#include <limits>
#include <sstream>

#include <doctest.h>

#include "apsde/parallel.hpp"
#include "apsde/solver.hpp"

using namespace apsde;

namespace
{
LevyProcessSpec brownian(Index m, double q = 1.0)
{
    LevyProcessSpec s;
    s.drift = Vector::Zero(m);
    s.wiener.covariance = q * Matrix::Identity(m, m);
    return s;
}

DichotomousSystem scalar(double a)
{
    Matrix A(1, 1), P(1, 1);
    A(0, 0) = a;
    P(0, 0) = a < 0 ? 1.0 : 0.0;
    return DichotomousSystem(A, P, Real(Rational(1)), Real(std::abs(a)));
}

DichotomousSystem example41_system()
{
    return make_preset("example41").system;
}

std::shared_ptr<NoiseSampler const> sampler(LevyProcessSpec spec, Window w, double h,
                                            std::uint64_t seed = 7)
{
    return std::make_shared<NoiseSampler const>(std::move(spec), w, h, seed);
}
}  // namespace

TEST_CASE("conditions for the example41 preset are exact")
{
    auto r = check_conditions(Rational(1), Rational(6), Rational(1, 64), Rational(1));
    CHECK(r.exact);
    CHECK(*r.lhs.exact() == Rational(5, 12));
    CHECK(*r.threshold_existence.exact() == Rational(4));
    CHECK(*r.threshold_distribution.exact() == Rational(2));
    CHECK(*r.eta.exact() == Rational(5, 48));
    CHECK(*r.b_bound_existence.exact() == Rational(131, 2));
    CHECK(*r.b_bound_distribution.exact() == Rational(59, 2));
    CHECK(r.existence);
    CHECK(r.distribution);

    // The joint hypotheses hold exactly for b < 59/2.
    auto at = [](Rational b) {
        return check_conditions(Rational(1), Rational(6), Rational(1, 64), b);
    };
    CHECK(at(Rational(59, 2) - Rational(1, 1000000)).joint());
    CHECK_FALSE(at(Rational(59, 2)).joint());
    CHECK_FALSE(at(Rational(59, 2)).distribution);
    CHECK(at(Rational(59, 2)).existence);
    CHECK(at(Rational(30)).existence);
    CHECK_FALSE(at(Rational(30)).joint());
    CHECK(at(Rational(131, 2) - Rational(1, 1000000)).existence);
    CHECK_FALSE(at(Rational(131, 2)).existence);

    auto json = to_json(r);
    CHECK(json.find("\"5/48\"") != std::string::npos);
}

TEST_CASE("condition inputs are validated")
{
    CHECK_THROWS_AS(check_conditions(Rational(0), Rational(6), Rational(1), Rational(1)),
                    std::invalid_argument);
    CHECK_THROWS_AS(check_conditions(Rational(1), Rational(-6), Rational(1), Rational(1)),
                    std::invalid_argument);
    CHECK_THROWS_AS(check_conditions(Rational(1), Rational(6), Rational(0), Rational(1)),
                    std::invalid_argument);
    CHECK_THROWS_AS(check_conditions(Rational(1), Rational(6), Rational(1), Rational(-1)),
                    std::invalid_argument);
    auto r = check_conditions(Real(std::sqrt(2.0)), Rational(6), Rational(1, 64),
                              Rational(1));
    CHECK_FALSE(r.exact);
    CHECK(r.lhs.value() == doctest::Approx(5.0 / 12));
    CHECK(r.threshold_existence.value() == doctest::Approx(2.0));
}

TEST_CASE("constant drift gives the closed-form bounded solution")
{
    double const c1 = 0.7, c2 = -1.3;
    ExpressionCoefficients cs({{"0.7", "-1.3"}, {"0", "0"}, {}, {}, 1, Real(Rational(1, 64))});
    auto sys = example41_system();
    double const tc = 2.0;
    auto noise = sampler(brownian(1), {-3, 3}, 1e-2);
    PathEnsemble zero(noise->grid(), 3, 2);
    SReport rep;
    auto y = apply_S(sys, cs, noise, zero, tc, &rep);
    double const tail = std::exp(-6 * tc) / 6 * std::hypot(c1, c2) + 1e-8;
    CHECK(rep.tail_factor == doctest::Approx(std::exp(-12.0)));
    CHECK(rep.valid_window.lo == doctest::Approx(-1.0));
    auto const& g = noise->grid();
    for (Index p = 0; p < 3; ++p)
    {
        for (Index k = g.position(-1.0); k <= g.position(1.0); ++k)
        {
            CHECK(std::abs(y.path(p)(0, k) + c1 / 8) <= tail);
            CHECK(std::abs(y.path(p)(1, k) - c2 / 6) <= tail);
            // Tails are exact up to rounding.
            CHECK(y.path(p)(1, k) == doctest::Approx(c2 / 6 * (1 - std::exp(-6 * tc))).epsilon(1e-12));
            CHECK(y.path(p)(0, k) == doctest::Approx(-c1 / 8 * (1 - std::exp(-8 * tc))).epsilon(1e-12));
        }
    }
}

TEST_CASE("zero coefficients map to zero")
{
    ExpressionCoefficients cs({{"0", "0"}, {"0", "0"}, {"0", "0"}, {"0", "0"}, 1, Real(Rational(1, 64))});
    auto p = make_preset("example41");
    auto noise = sampler(p.noise, {-2, 2}, 1e-2);
    PathEnsemble in(noise->grid(), 4, 2);
    for (Index i = 0; i < 4; ++i) in.path(i).setRandom();
    auto y = apply_S(p.system, cs, noise, in, 1.5);
    for (Index i = 0; i < 4; ++i) CHECK(y.path(i).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("jump kernels propagate from the exact jump time")
{
    double const h = 1e-2, tc = 3.0, lambda = 2.0;
    LevyProcessSpec spec = brownian(1);
    Vector one(1);
    one(0) = 1.0;
    spec.jumps.push_back({Real(lambda), PointMass{Vector::Constant(1, 0.5)}, JumpRegion::small});
    spec.jumps.push_back({Real(1.0), PointMass{Vector::Constant(1, 1.5)}, JumpRegion::large});
    ExpressionCoefficients cs({{"0"}, {"0"}, {"x0"}, {"x0"}, 1, Real(1.0)});
    auto noise = sampler(spec, {-5, 5}, h, 11);
    auto const nz = noise->sample(0);
    REQUIRE(nz.jumps.size() > 5);

    for (double a : {-1.5, 2.0})
    {
        auto sys = scalar(a);
        PathEnsemble zero(noise->grid(), 1, 1);
        auto y = apply_S(sys, cs, noise, zero, tc);
        auto const& g = noise->grid();
        for (double t : {-1.0, 0.0, 0.73, 1.5})
        {
            double expect = 0;
            for (auto const& j : nz.jumps)
            {
                double const tau = j.time(h);
                double const x = j.mark(0);
                if (a < 0 && tau <= t && tau > t - tc) expect += std::exp(a * (t - tau)) * x;
                if (a > 0 && tau > t && tau < t + tc) expect -= std::exp(a * (t - tau)) * x;
            }
            // Compensation of the small jumps: lambda * 0.5 against the kernel.
            double const mass = (1 - std::exp(-std::abs(a) * tc)) / std::abs(a);
            expect += (a < 0 ? -1.0 : 1.0) * lambda * 0.5 * mass;
            CHECK(y.path(0)(0, g.position(t)) == doctest::Approx(expect).epsilon(1e-10));
        }
    }
}

TEST_CASE("forward integrator agrees with the untruncated operator")
{
    auto p = make_preset("ou_forced");
    auto noise = sampler(p.noise, {-4, 4}, 1e-2, 3);
    PathEnsemble zero(noise->grid(), 5, 1);
    auto s = apply_S(p.system, *p.coefficients, noise, zero,
                     std::numeric_limits<double>::infinity());
    auto f = simulate_mild(p.system, *p.coefficients, noise, Vector::Zero(1), 5);
    for (Index i = 0; i < 5; ++i)
        CHECK((s.path(i) - f.path(i)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("forward integrator approaches the bounded solution")
{
    auto p = make_preset("ou_forced", {{"sigma", Real(0.0)}});
    auto noise = sampler(p.noise, {0, 20}, 1e-3);
    Vector y0(1);
    y0(0) = 5.0;
    auto f = simulate_mild(p.system, *p.coefficients, noise, y0, 1);
    for (double t : {15.0, 17.3, 20.0})
    {
        double const got = f.path(0)(0, noise->grid().position(t));
        CHECK(std::abs(got - p.reference_mean(t)(0)) < 2e-3);
    }
}

TEST_CASE("blow-up names the path and time")
{
    ExpressionCoefficients cs({{"1"}, {"0"}, {}, {}, 1, Real(1.0)});
    auto sys = scalar(50.0);
    auto noise = sampler(brownian(1), {0, 10}, 1e-2);
    try
    {
        simulate_mild(sys, cs, noise, Vector::Ones(1), 2);
        FAIL("expected overflow");
    }
    catch (std::overflow_error const& e)
    {
        std::string const what = e.what();
        CHECK(what.find("path") != std::string::npos);
        CHECK(what.find("t = ") != std::string::npos);
    }
}

TEST_CASE("window must fit the truncation")
{
    auto p = make_preset("example41");
    auto noise = sampler(p.noise, {0, 1}, 1e-2);
    PathEnsemble zero(noise->grid(), 1, 2);
    CHECK_THROWS_WITH_AS(apply_S(p.system, *p.coefficients, noise, zero, 2.0),
                         doctest::Contains("too narrow"), std::invalid_argument);
    PicardOptions opt;
    opt.paths = 2;
    CHECK_THROWS_AS(picard_solve(p.system, *p.coefficients, noise, opt),
                    std::invalid_argument);
}

TEST_CASE("OU mean and variance")
{
    auto p = make_preset("ou_forced");
    double const sigma = 0.3;
    auto noise = sampler(p.noise, {-8, 14}, 1e-3, 21);
    PicardOptions opt;
    opt.paths = 2000;
    opt.truncation = 8;
    opt.tol = 1e-20;
    auto r = picard_solve(p.system, *p.coefficients, noise, opt);
    REQUIRE(r.converged);
    // f and g ignore the state, so the second sweep reproduces the first.
    CHECK(r.trace.size() == 2);
    CHECK(r.trace[1].gap == 0.0);

    Matrix const mean = mean_curve(r.ensemble);
    auto const m2 = second_moment_curve(r.ensemble);
    double const se = sigma / std::sqrt(2.0) / std::sqrt(2000.0);
    double var_sum = 0;
    int count = 0;
    auto const& g = r.ensemble.grid();
    for (Index k = g.position(0.0); k <= g.position(6.0); k += 100)
    {
        double const m = p.reference_mean(g.time(k))(0);
        CHECK(std::abs(mean(0, k) - m) < 4 * se + 2e-3);
        var_sum += m2[k] - mean(0, k) * mean(0, k);
        ++count;
    }
    double const var = var_sum / count;
    CHECK(var == doctest::Approx(sigma * sigma / 2).epsilon(0.06));
}

TEST_CASE("Picard on example41 contracts and is thread-independent")
{
    auto p = make_preset("example41");
    auto noise = sampler(p.noise, {-2, 4}, 1e-2, 5);
    PicardOptions opt;
    opt.paths = 40;
    opt.truncation = 2;
    opt.tol = 1e-24;
    opt.max_iter = 30;
    set_thread_count(1);
    auto a = picard_solve(p.system, *p.coefficients, noise, opt);
    set_thread_count(3);
    auto b = picard_solve(p.system, *p.coefficients, noise, opt);
    set_thread_count(0);
    REQUIRE(a.converged);
    CHECK(a.warnings.empty());
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i)
    {
        CHECK(a.trace[i].k == static_cast<int>(i));
        CHECK(a.trace[i].gap == b.trace[i].gap);
        CHECK(a.trace[i].sup_second_moment == b.trace[i].sup_second_moment);
    }
    for (Index i = 0; i < 40; ++i)
        CHECK((a.ensemble.path(i) - b.ensemble.path(i)).cwiseAbs().maxCoeff() == 0.0);

    double const eta = 5.0 / 48;
    for (std::size_t i = 1; i < a.trace.size(); ++i)
    {
        if (a.trace[i - 1].gap > 1e-26) CHECK(a.trace[i].gap <= (eta + 0.1) * a.trace[i - 1].gap);
    }

    std::ostringstream os;
    write_gap_trace_jsonl(os, a.trace, false);
    CHECK(os.str().find("wall_ms") == std::string::npos);
    CHECK(os.str().find("\"k\":0") != std::string::npos);
}

TEST_CASE("ensemble statistics")
{
    PathEnsemble e(TimeGrid(0.5, 0, 2), 2, 1);
    e.path(0) << 1, 2, 3;
    e.path(1) << -1, 0, 1;
    CHECK(sup_second_moment(e) == doctest::Approx((9.0 + 1.0) / 2));
    CHECK(sup_second_moment(e, Window{0, 0.5}) == doctest::Approx((4.0 + 1.0) / 2));
    CHECK(l2_increment(e, 1.0, 0.0) == doctest::Approx(4.0));
    CHECK(mean_curve(e)(0, 1) == doctest::Approx(1.0));
    std::ostringstream os;
    write_ensemble_csv(os, e);
    CHECK(os.str().rfind("t,path,y0\n0,0,1\n", 0) == 0);
}
