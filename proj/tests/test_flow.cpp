#include <doctest.h>

#include <cmath>
#include <random>

#include "subrie/flow.hpp"
#include "subrie/random.hpp"
#include "support.hpp"

using namespace subrie;
using testing::vec;

TEST_SUITE("ode")
{
    TEST_CASE("exponential growth with dense output")
    {
        OdeRhs f = [](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) { dy = y; };
        OdeOptions o;
        o.rtol = o.atol = 1e-12;
        auto sol = integrate(f, 0.0, 2.0, vec({1.0}), o);
        CHECK(sol.final_state()[0] == doctest::Approx(std::exp(2.0)).epsilon(1e-10));
        for (double t : {0.1, 0.77, 1.5, 1.999})
            CHECK(sol(t)[0] == doctest::Approx(std::exp(t)).epsilon(1e-8));
        CHECK_THROWS_AS(sol(2.5), InputError);

        auto back = integrate(f, 2.0, 0.0, sol.final_state(), o);
        CHECK(back.final_state()[0] == doctest::Approx(1.0).epsilon(1e-10));
    }

    TEST_CASE("breakpoints are respected")
    {
        // dy = sign(t - 1): |y| kink at t = 1
        OdeRhs f = [](double t, const Eigen::VectorXd&, Eigen::VectorXd& dy) { dy = vec({t < 1.0 ? -1.0 : 1.0}); };
        auto sol = integrate(f, 0.0, 2.0, vec({1.0}), {}, {1.0});
        CHECK(sol(1.0)[0] == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(sol.final_state()[0] == doctest::Approx(1.0).epsilon(1e-12));
    }

    TEST_CASE("domain exit is located")
    {
        OdeRhs f = [](double, const Eigen::VectorXd&, Eigen::VectorXd& dy) { dy = vec({1.0}); };
        OdeOptions o;
        o.inside = [](const Eigen::VectorXd& y) { return y[0] < 0.5; };
        try {
            integrate(f, 0.0, 1.0, vec({0.0}), o);
            FAIL("expected a domain exit");
        } catch (const DomainExitError& e) {
            CHECK(e.time() == doctest::Approx(0.5).epsilon(1e-9));
        }
    }

    TEST_CASE("zero-length interval")
    {
        OdeRhs f = [](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) { dy = y; };
        auto sol = integrate(f, 1.0, 1.0, vec({3.0}));
        CHECK(sol.final_state()[0] == 3.0);
        CHECK(sol(1.0)[0] == 3.0);
    }
}

TEST_SUITE("flow")
{
    TEST_CASE("controls")
    {
        Eigen::MatrixXd vals(3, 2);
        vals << 0, 0, 1, 2, 2, 4;
        auto lin = Control::sampled(0.0, 1.0, vals);
        CHECK(lin.value(0.25)[1] == doctest::Approx(1.0));
        auto hold = Control::sampled(0.0, 1.0, vals, Control::Interp::Hold);
        CHECK(hold.value(0.25)[1] == doctest::Approx(0.0));
        CHECK(hold.value(0.75)[1] == doctest::Approx(2.0));

        Eigen::MatrixXd coeffs(2, 1);
        coeffs << 1.0, 0.5;
        auto b = Control::basis(0.0, 2.0, coeffs, vec({3.0}));
        CHECK(b.value(1.0)[0] == doctest::Approx(3.0 + 0.5 + 0.5));
        CHECK(b.value(0.0)[0] == doctest::Approx(3.0));

        auto pw = Control::piecewise({Control::constant(0, 1, vec({1.0})), Control::constant(1, 3, vec({-1.0}))});
        CHECK(pw.value(1.0)[0] == -1.0);
        CHECK(pw.value(0.5)[0] == 1.0);
        CHECK(pw.breakpoints() == std::vector<double>{1.0});
        CHECK(pw.sup_norm(true) == doctest::Approx(1.0));
        CHECK_THROWS_AS(Control::piecewise({Control::constant(0, 1, vec({1.0})), Control::constant(2, 3, vec({1.0}))}),
                        InputError);
    }

    TEST_CASE("engel flow of a constant control is polynomial")
    {
        // x1 = a t, x2 = b t, x3 = ab t^2/2, x4 = a^2 b t^3/6
        auto e = engel();
        const double a = 0.7, b = -1.3, t = 1.4;
        auto end = flow_const(e, vec({a, b}), t, Eigen::VectorXd::Zero(4));
        CHECK(end[0] == doctest::Approx(a * t));
        CHECK(end[1] == doctest::Approx(b * t));
        CHECK(end[2] == doctest::Approx(a * b * t * t / 2).epsilon(1e-9));
        CHECK(end[3] == doctest::Approx(a * a * b * t * t * t / 6).epsilon(1e-9));
    }

    TEST_CASE("heisenberg area law")
    {
        // z gains half the signed area swept by (x, y)
        auto h = heisenberg();
        auto square = Control::piecewise({Control::constant(0, 1, vec({1, 0})), Control::constant(1, 2, vec({0, 1})),
                                          Control::constant(2, 3, vec({-1, 0})), Control::constant(3, 4, vec({0, -1}))});
        auto tr = chron_exp(h, square, Eigen::VectorXd::Zero(3));
        CHECK(tr.end_point()[0] == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(tr.end_point()[1] == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(tr.end_point()[2] == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(tr.at(2.0)[2] == doctest::Approx(0.5).epsilon(1e-9));
    }

    TEST_CASE("reverse flow inverts forward flow")
    {
        auto rng = rng_stream(31, 0);
        std::uniform_real_distribution<double> U(-1, 1);
        auto e = engel();
        for (int trial = 0; trial < 5; ++trial) {
            Eigen::MatrixXd coeffs(3, 2);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 2; ++j) coeffs(i, j) = U(rng);
            auto c = Control::basis(0, 1, coeffs, vec({U(rng), U(rng)}));
            Eigen::VectorXd p0 = vec({U(rng), U(rng), U(rng), U(rng)});
            FlowOptions o;
            o.rtol = o.atol = 1e-12;
            auto fwd = chron_exp(e, c, p0, o);
            auto back = chron_exp(e, c, fwd.end_point(), o, true);
            CHECK((back.end_point() - p0).norm() < 1e-9);
        }
    }

    TEST_CASE("flow jacobian matches finite differences")
    {
        auto e = engel();
        NumericFrame nf(e.frame);
        auto c = Control::constant(0, 1, vec({0.4, -0.9}));
        Eigen::VectorXd p0 = vec({0.1, 0.2, -0.3, 0.4});
        FlowOptions o;
        o.rtol = o.atol = 1e-12;
        auto [end, J] = flow_jacobian(nf, c, p0, o);
        const double h = 1e-6;
        for (int j = 0; j < 4; ++j) {
            Eigen::VectorXd dp = Eigen::VectorXd::Unit(4, j) * h;
            Eigen::VectorXd col = (chron_exp(nf, c, Eigen::VectorXd(p0 + dp), o).end_point() -
                                   chron_exp(nf, c, Eigen::VectorXd(p0 - dp), o).end_point()) /
                                  (2 * h);
            CHECK((col - J.col(j)).norm() < 1e-6);
        }
    }

    TEST_CASE("endpoint sensitivity matches finite differences")
    {
        auto h = heisenberg();
        NumericFrame nf(h.frame);
        for (auto kind : {ScalarBasis::Kind::Sine, ScalarBasis::Kind::Hat}) {
            LinearControlFamily fam{{kind, 5, 0.0, 1.0}, vec({0.3, -0.4})};
            auto rng = rng_stream(32, 0);
            std::uniform_real_distribution<double> U(-1, 1);
            Eigen::MatrixXd coeffs(5, 2);
            for (int i = 0; i < 5; ++i)
                for (int j = 0; j < 2; ++j) coeffs(i, j) = U(rng);
            FlowOptions o;
            o.rtol = o.atol = 1e-12;
            auto sens = endpoint_sensitivity(nf, fam, coeffs, Eigen::VectorXd::Zero(3), o);
            const double eps = 1e-6;
            for (int i = 0; i < 2; ++i)
                for (int b = 0; b < 5; ++b) {
                    Eigen::MatrixXd cp = coeffs, cm = coeffs;
                    cp(b, i) += eps;
                    cm(b, i) -= eps;
                    Eigen::VectorXd fd = (chron_exp(nf, fam.to_control(cp), Eigen::VectorXd::Zero(3), o).end_point() -
                                          chron_exp(nf, fam.to_control(cm), Eigen::VectorXd::Zero(3), o).end_point()) /
                                         (2 * eps);
                    CHECK((fd - sens.jacobian.col(i * 5 + b)).norm() < 1e-6 * (1 + fd.norm()));
                }
        }
    }

    TEST_CASE("numeric frame agrees with exact evaluation")
    {
        auto s = step3alpha(Rational(-1));
        NumericFrame nf(s.frame);
        Eigen::VectorXd x = vec({0.3, -0.2, 0.1, 0.5, -0.7, 0.9});
        auto F = nf.eval(x);
        for (int i = 0; i < 3; ++i) CHECK((F.col(i) - s.frame[static_cast<std::size_t>(i)].evaluate(x)).norm() < 1e-15);
    }

    TEST_CASE("ad series terminates on nilpotent frames and matches the pushforward")
    {
        auto h = heisenberg();
        auto ad = ad_series(h.frame[0], h.frame[1], Rational(1, 2), 2);
        CHECK(ad.terminates);
        Eigen::VectorXd q = vec({0.2, 0.3, -0.1});
        auto num = numeric_pushforward(h.frame[0], h.frame[1], 0.5, q);
        CHECK((ad.truncation.evaluate(q) - num).norm() < 1e-8);
    }

    TEST_CASE("ad series remainder scales like sigma^N")
    {
        auto X = parse_field("x2 dx1 + x1 dx2", 2);
        auto Y = parse_field("dx1", 2);
        Eigen::VectorXd q = vec({0.3, 0.1});
        for (int N : {2, 3}) {
            std::vector<double> sig, err;
            for (double s : {0.2, 0.1, 0.05, 0.025}) {
                auto ad = ad_series(X, Y, to_rational(s), N);
                CHECK_FALSE(ad.terminates);
                sig.push_back(s);
                err.push_back((ad.truncation.evaluate(q) - numeric_pushforward(X, Y, s, q)).norm());
            }
            auto slope = loglog_slope(sig, err);
            REQUIRE(slope.has_value());
            CHECK(std::abs(*slope - N) < 0.2);
        }
    }

    TEST_CASE("variation of constants")
    {
        auto h = heisenberg();
        Eigen::MatrixXd v(2, 1);
        v << 0.0, 1.0;  // v(tau) = tau
        auto chk = variation_check(h.frame[0], {h.frame[1]}, Control::sampled(0, 1, v), Eigen::VectorXd::Zero(3), 1.0);
        CHECK(chk.residual < 1e-7);
        CHECK(chk.symbolic_series);

        auto e = engel();
        auto chk2 = variation_check(e.frame[1], {e.frame[0]}, Control::sampled(0, 1, v), vec({0.1, 0.0, 0.2, 0.0}), 1.0);
        CHECK(chk2.residual < 1e-7);
    }
}
