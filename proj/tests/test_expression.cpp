#include <doctest.h>

#include <cmath>
#include <vector>

#include "apsde/expression.hpp"

using namespace apsde;

TEST_CASE("parsing and evaluation")
{
    CHECK(Expr::parse("1 + 2 * 3").eval(0) == 7);
    CHECK(Expr::parse("(1 + 2) * 3").eval(0) == 9);
    CHECK(Expr::parse("2 ^ 3 ^ 2").eval(0) == 512);
    CHECK(Expr::parse("-2 ^ 2").eval(0) == -4);
    CHECK(Expr::parse("10 - 4 - 3").eval(0) == 3);
    CHECK(Expr::parse("12 / 3 / 2").eval(0) == 2);
    CHECK(Expr::parse("1.5e2 + .5").eval(0) == 150.5);
    CHECK(Expr::parse("pi").eval(0) == doctest::Approx(M_PI));
    CHECK(Expr::parse("e").eval(0) == doctest::Approx(M_E));
    CHECK(Expr::parse("2*e").eval(0) == doctest::Approx(2 * M_E));
    CHECK(Expr::parse("sqrt(2)*t").eval(3) == doctest::Approx(3 * std::sqrt(2)));

    std::vector<double> y{0.5, -1.0};
    std::vector<double> x{2.0};
    auto const e = Expr::parse("y1 / (y1^2 + 1) * cos(t) + x0 * abs(y0)");
    CHECK(e.eval(0.3, y, x)
          == doctest::Approx(-1.0 / 2 * std::cos(0.3) + 2 * 0.5));
    CHECK(e.state_arity() == 2);
    CHECK(e.mark_arity() == 1);
    CHECK(e.uses_time());
    CHECK_FALSE(e.is_constant());
    CHECK(Expr::parse("tanh(1) + atan(1) + exp(0)").eval(0)
          == doctest::Approx(std::tanh(1) + M_PI / 4 + 1));
    CHECK_THROWS_AS(e.eval(0.3, std::vector<double>{1.0}, x), ExpressionError);
}

TEST_CASE("parse errors")
{
    for (char const* bad : {"", "1 +", "(1", "foo(1)", "sin 1", "y", "1 2",
                            "3 $ 4", "y-1", "sin()"})
    {
        CAPTURE(bad);
        CHECK_THROWS_AS(Expr::parse(bad), ExpressionError);
    }
}

TEST_CASE("interval enclosures")
{
    Interval const all{-INFINITY, INFINITY};
    auto const r = Expr::parse("(cos(sqrt(2)*t) + sin(sqrt(3)*t)) / "
                               "(17 + cos(sqrt(5)*t))")
                       .eval_interval(all);
    CHECK(r.bounded());
    CHECK(r.lo >= -2.0 / 16 - 1e-12);
    CHECK(r.hi <= 2.0 / 16 + 1e-12);

    CHECK_FALSE(Expr::parse("1 / cos(t)").eval_interval(all).bounded());
    CHECK_FALSE(Expr::parse("t").eval_interval(all).bounded());
    CHECK(Expr::parse("y0^2").eval_interval(all, std::vector<Interval>{{-2, 1}}).lo
          == 0);
    CHECK(Expr::parse("y0^2").eval_interval(all, std::vector<Interval>{{-2, 1}}).hi
          == 4);

    auto const s = Expr::parse("sin(t)").eval_interval({0.1, 0.2});
    CHECK(s.lo == doctest::Approx(std::sin(0.1)));
    CHECK(s.hi == doctest::Approx(std::sin(0.2)));
    auto const c = Expr::parse("cos(t)").eval_interval({-0.1, 0.2});
    CHECK(c.hi == 1);
    CHECK(c.lo == doctest::Approx(std::cos(0.2)));

    // Enclosure contains sampled values.
    auto const e = Expr::parse("sin(3*t + 1) * y0 - abs(y1) / (2 + cos(t))");
    std::vector<Interval> box{{-1, 2}, {-3, 0.5}};
    auto const enc = e.eval_interval({0, 5}, box);
    for (int i = 0; i < 1000; ++i)
    {
        double const t = 5.0 * i / 999;
        std::vector<double> y{-1 + 3.0 * ((i * 37) % 100) / 99,
                              -3 + 3.5 * ((i * 11) % 100) / 99};
        double const v = e.eval(t, y);
        CHECK(enc.contains(v));
    }
}

TEST_CASE("affine trigonometric arguments")
{
    auto const f = Expr::parse("cos(sqrt(2)*t) + sin(t*sqrt(3) + 1) "
                               "- cos(-2*(t - 1)/4)")
                       .trig_frequencies();
    REQUIRE(f.size() == 3);
    CHECK(f[0] == doctest::Approx(0.5));
    CHECK(f[1] == doctest::Approx(std::sqrt(2)));
    CHECK(f[2] == doctest::Approx(std::sqrt(3)));
    CHECK(Expr::parse("sin(t) + sin(t)").trig_frequencies().size() == 1);
    CHECK(Expr::parse("3 + y0").trig_frequencies().empty());
    CHECK_THROWS_AS(Expr::parse("t * sin(t)").trig_frequencies(), ExpressionError);
    CHECK_THROWS_AS(Expr::parse("sin(t^2)").trig_frequencies(), ExpressionError);
    CHECK_THROWS_AS(Expr::parse("sin(y0 * t)").trig_frequencies(), ExpressionError);
    CHECK_THROWS_AS(Expr::parse("exp(t)").trig_frequencies(), ExpressionError);
}
