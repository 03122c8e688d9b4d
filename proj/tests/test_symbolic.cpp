#include <doctest.h>

#include <random>

#include "subrie/linalg.hpp"
#include "subrie/random.hpp"
#include "subrie/structure.hpp"
#include "support.hpp"

using namespace subrie;
using testing::vec;

namespace {

Multinomial random_poly(std::mt19937_64& rng, int dim, int terms, int max_deg)
{
    std::uniform_int_distribution<int> deg(0, max_deg), num(-5, 5), den(1, 4);
    Multinomial p(dim);
    for (int k = 0; k < terms; ++k) {
        Exponent e(static_cast<std::size_t>(dim), 0);
        int budget = deg(rng);
        for (int b = 0; b < budget; ++b) e[static_cast<std::size_t>(rng() % static_cast<unsigned>(dim))]++;
        p.add_term(e, Rational(num(rng), den(rng)));
    }
    return p;
}

VectorField random_field(std::mt19937_64& rng, int dim)
{
    std::vector<Multinomial> c;
    for (int i = 0; i < dim; ++i) c.push_back(random_poly(rng, dim, 3, 2));
    return VectorField(c);
}

// [X,Y](p) = DY(p) X(p) - DX(p) Y(p) with central differences; independent of lie_bracket.
Eigen::VectorXd bracket_fd(const VectorField& X, const VectorField& Y, const Eigen::VectorXd& p)
{
    const int d = X.dim();
    const double h = 1e-5;
    Eigen::MatrixXd DX(d, d), DY(d, d);
    for (int j = 0; j < d; ++j) {
        Eigen::VectorXd e = Eigen::VectorXd::Unit(d, j) * h;
        DX.col(j) = (X.evaluate(Eigen::VectorXd(p + e)) - X.evaluate(Eigen::VectorXd(p - e))) / (2 * h);
        DY.col(j) = (Y.evaluate(Eigen::VectorXd(p + e)) - Y.evaluate(Eigen::VectorXd(p - e))) / (2 * h);
    }
    return DY * X.evaluate(p) - DX * Y.evaluate(p);
}

}  // namespace

TEST_SUITE("symbolic")
{
    TEST_CASE("rational parsing and printing")
    {
        CHECK(parse_rational("-3/6") == Rational(-1, 2));
        CHECK(parse_rational("0.25") == Rational(1, 4));
        CHECK(to_string(Rational(7, 3)) == "7/3");
        CHECK(to_rational(0.5) == Rational(1, 2));
        CHECK_THROWS_AS(parse_rational("1/0"), InputError);
        CHECK_THROWS_AS(parse_rational("abc"), InputError);
    }

    TEST_CASE("polynomial arithmetic against evaluation")
    {
        auto rng = rng_stream(11, 0);
        std::uniform_real_distribution<double> U(-1, 1);
        for (int trial = 0; trial < 20; ++trial) {
            auto p = random_poly(rng, 3, 5, 3), q = random_poly(rng, 3, 4, 2);
            Eigen::VectorXd x = vec({U(rng), U(rng), U(rng)});
            const double px = p.evaluate(x), qx = q.evaluate(x);
            CHECK((p + q).evaluate(x) == doctest::Approx(px + qx).epsilon(1e-12));
            CHECK((p * q).evaluate(x) == doctest::Approx(px * qx).epsilon(1e-12));
            CHECK((p - p).is_zero());
            CHECK(pow(q, 3) == q * q * q);
            CHECK(p * q == q * p);
        }
    }

    TEST_CASE("exact evaluation matches double evaluation")
    {
        auto p = parse_polynomial("1/3*x1^2*x2 - 2*x3 + 5/7", 3);
        std::vector<Rational> x{Rational(1, 2), Rational(-3), Rational(2, 5)};
        CHECK(p.evaluate(x) == Rational(1, 3) * Rational(1, 4) * Rational(-3) - Rational(4, 5) + Rational(5, 7));
        CHECK(p.evaluate(vec({0.5, -3.0, 0.4})) == doctest::Approx(to_double(p.evaluate(x))));
    }

    TEST_CASE("print and parse round-trip")
    {
        auto rng = rng_stream(12, 0);
        for (int trial = 0; trial < 30; ++trial) {
            auto p = random_poly(rng, 4, 6, 4);
            CAPTURE(to_string(p));
            CHECK(parse_polynomial(to_string(p), 4) == p);
        }
        CHECK(to_string(Multinomial(2)) == "0");
    }

    TEST_CASE("parser errors")
    {
        CHECK_THROWS_AS(parse_polynomial("x4", 3), InputError);
        CHECK_THROWS_AS(parse_polynomial("x1 +", 3), InputError);
        CHECK_THROWS_AS(parse_polynomial("(x1", 3), InputError);
        CHECK(parse_polynomial("(x1 + x2)^2", 2) == parse_polynomial("x1^2 + 2*x1*x2 + x2^2", 2));
    }

    TEST_CASE("partial derivatives, composition and translation")
    {
        auto p = parse_polynomial("x1^3*x2 + x2^2", 2);
        CHECK(partial(p, 0) == parse_polynomial("3*x1^2*x2", 2));
        CHECK(partial(p, 1) == parse_polynomial("x1^3 + 2*x2", 2));
        auto q = compose(p, {parse_polynomial("x1 + 1", 2), parse_polynomial("x2", 2)});
        CHECK(q == translate(p, {Rational(1), Rational(0)}));
        auto s = scale_variables(p, {Rational(2), Rational(3)});
        CHECK(s == parse_polynomial("24*x1^3*x2 + 9*x2^2", 2));
    }

    TEST_CASE("weighted order and parts")
    {
        std::vector<int> w{1, 1, 2};
        auto p = parse_polynomial("x3 + x1*x2 + x1^3", 3);
        CHECK(weighted_order(p, w) == 2);
        CHECK(weighted_part(p, w, 2) == parse_polynomial("x3 + x1*x2", 3));
        CHECK_FALSE(weighted_order(Multinomial(3), w).has_value());
    }

    TEST_CASE("lie bracket against finite differences")
    {
        auto rng = rng_stream(13, 0);
        std::uniform_real_distribution<double> U(-1, 1);
        for (int trial = 0; trial < 10; ++trial) {
            auto X = random_field(rng, 3), Y = random_field(rng, 3);
            Eigen::VectorXd p = vec({U(rng), U(rng), U(rng)});
            Eigen::VectorXd exact = lie_bracket(X, Y).evaluate(p), fd = bracket_fd(X, Y, p);
            CHECK((exact - fd).norm() <= 1e-6 * (1 + exact.norm()));
        }
    }

    TEST_CASE("bracket antisymmetry and Jacobi identity")
    {
        auto rng = rng_stream(14, 0);
        for (int trial = 0; trial < 10; ++trial) {
            auto X = random_field(rng, 3), Y = random_field(rng, 3), Z = random_field(rng, 3);
            CHECK(lie_bracket(X, Y) == -lie_bracket(Y, X));
            CHECK(lie_bracket(X, X).is_zero());
            auto jac = lie_bracket(X, lie_bracket(Y, Z)) + lie_bracket(Y, lie_bracket(Z, X)) +
                       lie_bracket(Z, lie_bracket(X, Y));
            CHECK(jac.is_zero());
        }
    }

    TEST_CASE("field derivative is a derivation")
    {
        auto rng = rng_stream(15, 0);
        auto X = random_field(rng, 3);
        auto f = random_poly(rng, 3, 4, 3), g = random_poly(rng, 3, 4, 3);
        CHECK(apply(X, f * g) == apply(X, f) * g + f * apply(X, g));
    }

    TEST_CASE("box grid")
    {
        auto b = Box::cube(2, 1.0);
        auto g = b.grid(3);
        CHECK(g.size() == 9);
        CHECK(b.contains(vec({1.0, -1.0})));
        CHECK_FALSE(b.contains(vec({1.1, 0.0})));
    }
}

TEST_SUITE("linalg")
{
    TEST_CASE("exact solve and inverse")
    {
        RationalMatrix A{{2, 1}, {1, 3}};
        auto x = solve_exact(A, {Rational(3), Rational(5)});
        REQUIRE(x.has_value());
        CHECK((*x)[0] == Rational(4, 5));
        CHECK((*x)[1] == Rational(7, 5));
        auto inv = inverse_exact(A);
        CHECK(inv[0][0] == Rational(3, 5));
        CHECK(inv[0][1] == Rational(-1, 5));
        CHECK_THROWS_AS(inverse_exact(RationalMatrix{{1, 2}, {2, 4}}), NumericalError);
        CHECK_FALSE(solve_exact(RationalMatrix{{1, 1}, {1, 1}}, {Rational(1), Rational(2)}).has_value());
    }

    TEST_CASE("numeric rank and min-norm solve")
    {
        Eigen::MatrixXd A(2, 3);
        A << 1, 0, 0, 0, 1, 0;
        CHECK(numeric_rank(A, 1e-9) == 2);
        Eigen::VectorXd x = min_norm_solve(A, vec({1.0, 2.0}));
        CHECK(x[2] == doctest::Approx(0.0));
        CHECK(x[1] == doctest::Approx(2.0));
    }

    TEST_CASE("nnls satisfies KKT conditions")
    {
        auto rng = rng_stream(16, 0);
        std::normal_distribution<double> N(0, 1);
        for (int trial = 0; trial < 10; ++trial) {
            Eigen::MatrixXd A(5, 4);
            for (int i = 0; i < 5; ++i)
                for (int j = 0; j < 4; ++j) A(i, j) = N(rng);
            Eigen::VectorXd b(5);
            for (int i = 0; i < 5; ++i) b[i] = N(rng);
            auto r = nnls(A, b);
            CHECK(r.x.minCoeff() >= 0.0);
            Eigen::VectorXd grad = A.transpose() * (A * r.x - b);
            for (int j = 0; j < 4; ++j) {
                CHECK(grad[j] >= -1e-9);
                if (r.x[j] > 1e-12) CHECK(std::abs(grad[j]) <= 1e-9);
            }
        }
    }
}
