#include <doctest.h>

#include <cmath>
#include <vector>

#include "apsde/dichotomy.hpp"
#include "apsde/rng.hpp"

using namespace apsde;

namespace
{
Matrix taylor_exp(Matrix const& a, double t, int terms)
{
    Matrix const at = a * t;
    Matrix term = Matrix::Identity(a.rows(), a.cols());
    Matrix sum = term;
    for (int k = 1; k < terms; ++k)
    {
        term = term * at / k;
        sum += term;
    }
    return sum;
}

double rel_err(Matrix const& x, Matrix const& ref)
{
    return (x - ref).norm() / ref.norm();
}

Matrix random_matrix(RandomStream& rng, Index n, double scale)
{
    Matrix m(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) m(i, j) = scale * rng.uniform(-1, 1);
    return m;
}

DichotomousSystem example_system()
{
    Matrix a{{8.0, 0.0}, {0.0, -6.0}};
    Matrix p{{0.0, 0.0}, {0.0, 1.0}};
    return DichotomousSystem(a, p);
}
}  // namespace

TEST_CASE("matrix exponential")
{
    Matrix const d{{8.0, 0.0}, {0.0, -6.0}};
    Matrix const e = matrix_exp(d, 1.0);
    CHECK(e(0, 0) == doctest::Approx(std::exp(8.0)).epsilon(1e-13));
    CHECK(e(1, 1) == doctest::Approx(std::exp(-6.0)).epsilon(1e-13));
    CHECK(e(0, 1) == 0);
    CHECK(matrix_exp(Matrix::Zero(3, 3), 5.0) == Matrix::Identity(3, 3));

    RandomStream rng({2, 0, 0});
    for (int trial = 0; trial < 20; ++trial)
    {
        Matrix const a = random_matrix(rng, 3, 2.0);
        CHECK(rel_err(matrix_exp(a, 0.7), taylor_exp(a, 0.7, 60)) < 1e-9);
    }
    // Every Pade degree gets exercised.
    for (double scale : {1e-3, 0.05, 0.2, 0.5, 3.0})
    {
        Matrix const a = random_matrix(rng, 4, scale);
        CHECK(rel_err(matrix_exp(a), taylor_exp(a, 1.0, 60)) < 1e-12);
    }
    // Rotation generator.
    Matrix const rot{{0.0, -1.0}, {1.0, 0.0}};
    Matrix const r = matrix_exp(rot, 2.0);
    CHECK(r(0, 0) == doctest::Approx(std::cos(2.0)));
    CHECK(r(1, 0) == doctest::Approx(std::sin(2.0)));

    CHECK_THROWS_AS(matrix_exp(d, 200.0), MatrixExpOverflow);
    Matrix bad = d;
    bad(0, 1) = NAN;
    CHECK_THROWS(matrix_exp(bad));
}

TEST_CASE("semigroup law and commutation")
{
    RandomStream rng({3, 0, 0});
    for (int trial = 0; trial < 20; ++trial)
    {
        Matrix const a = random_matrix(rng, 3, 1.5);
        double const s = rng.uniform(0, 2), t = rng.uniform(0, 2);
        CHECK(rel_err(matrix_exp(a, s) * matrix_exp(a, t), matrix_exp(a, s + t))
              < 1e-9);
    }
    // Block-diagonal system in a rotated basis.
    Matrix const b = random_matrix(rng, 3, 1.0) + 3 * Matrix::Identity(3, 3);
    Matrix const diag{{-2.0, 1.0, 0.0}, {0.0, -2.5, 0.0}, {0.0, 0.0, 1.5}};
    Matrix const pd{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 0.0}};
    Matrix const binv = b.inverse();
    DichotomousSystem sys(b * diag * binv, b * pd * binv);
    for (double t : {0.0, 0.3, 1.1, 2.7})
    {
        Matrix const e = matrix_exp(sys.generator(), t);
        CHECK((e * sys.projection() - sys.projection() * e).norm()
              < 1e-10 * e.norm());
        Vector v = Vector::Random(3);
        Vector const lhs = sys.evolve_stable(t, v) + e * sys.complement() * v;
        CHECK((lhs - e * v).norm() < 1e-10 * (e * v).norm());
    }
}

TEST_CASE("forward and backward evolution on the example41 system")
{
    auto const sys = example_system();
    Vector const v{{1.0, 1.0}};
    Vector const f = sys.evolve_stable(1.0, v);
    CHECK(f[0] == 0);
    CHECK(f[1] == doctest::Approx(std::exp(-6.0)).epsilon(1e-13));
    Vector const b = sys.evolve_unstable(-1.0, v);
    CHECK(b.norm() == doctest::Approx(std::exp(-8.0)).epsilon(1e-13));
    CHECK(b.norm() <= std::exp(-6.0));
    CHECK(sys.evolve_stable(0.0, v) == sys.projection() * v);
    CHECK(sys.evolve_unstable(0.0, v) == sys.complement() * v);
    CHECK_THROWS(sys.evolve_stable(-0.1, v));
    CHECK_THROWS(sys.evolve_unstable(0.1, v));
    // Long horizons stay finite: the growing mode never enters.
    CHECK(sys.evolve_stable(200.0, v).allFinite());
}

TEST_CASE("projection gates")
{
    Matrix const a{{8.0, 0.0}, {0.0, -6.0}};
    CHECK_THROWS(DichotomousSystem(a, Matrix{{0.5, 0.0}, {0.0, 1.0}}));
    CHECK_THROWS(DichotomousSystem(a, Matrix{{0.5, 0.5}, {0.5, 0.5}}));
    CHECK_THROWS(DichotomousSystem(a, Matrix::Identity(3, 3)));
    CHECK_THROWS(DichotomousSystem(a, Matrix::Identity(2, 2), Real(-1.0)));
}

TEST_CASE("constant estimation")
{
    std::vector<double> grid;
    for (int i = 0; i < 50; ++i) grid.push_back(2.0 * i / 49);
    std::vector<Vector> trials{Vector{{1.0, 1.0}}, Vector{{-0.3, 2.0}}};
    auto const est = estimate_constants(example_system(), grid, trials);
    CHECK(est.k_hat == doctest::Approx(1.0).epsilon(0.01));
    CHECK(std::abs(est.omega_hat - 6.0) < 0.05);
    CHECK(est.trial_vectors_ok);

    DichotomousSystem decay(Matrix{{-2.0, 0.0}, {0.0, -3.0}},
                            Matrix::Identity(2, 2));
    auto const e2 = estimate_constants(decay, grid);
    CHECK(e2.omega_hat == doctest::Approx(2.0).epsilon(0.01));
    CHECK(e2.k_hat >= 1.0);

    // Non-normal generator: K must exceed 1 to cover the transient hump.
    DichotomousSystem hump(Matrix{{-1.0, 5.0}, {0.0, -1.5}},
                           Matrix::Identity(2, 2));
    auto const e3 = estimate_constants(hump, grid);
    CHECK(e3.k_hat > 1.0);
    for (double t : grid)
    {
        CHECK(operator_norm(hump.stable_propagator(t))
              <= e3.k_hat * std::exp(-e3.omega_hat * t) * (1 + 1e-12));
    }

    DichotomousSystem wrong(Matrix{{1.0, 0.0}, {0.0, -3.0}},
                            Matrix::Identity(2, 2));
    CHECK_THROWS_AS(estimate_constants(wrong, grid), NoDichotomy);
    CHECK_THROWS(estimate_constants(decay, std::vector<double>(10, 1.0)));
}

TEST_CASE("integrated exponential and growth bound")
{
    Matrix const a{{-2.0, 1.0}, {0.0, 0.5}};
    double const h = 0.3;
    // Simpson quadrature oracle for the integral of e^{Au}.
    int const n = 400;
    Matrix quad = Matrix::Zero(2, 2);
    for (int i = 0; i <= n; ++i)
    {
        double const c = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
        quad += c * matrix_exp(a, h * i / n);
    }
    quad *= h / n / 3;
    CHECK(rel_err(integrated_exp(a, h), quad) < 1e-10);

    auto const gb = growth_bound(a);
    for (double t : {0.1, 0.5, 1.0, 2.0})
        CHECK(operator_norm(matrix_exp(a, t)) <= gb.m * std::exp(gb.delta * t) + 1e-12);
}
