#include <doctest.h>

#include <random>

#include "subrie/endpoint.hpp"
#include "subrie/random.hpp"
#include "support.hpp"

using namespace subrie;
using testing::vec;

namespace {

NilpotentFrame nil_at_origin(const SRStructure& s)
{
    return nilpotentize(s, privileged_chart(s, Eigen::VectorXd::Zero(s.dim)));
}

// Relative error of the variational differential against central differences, for one random draw.
double differential_error(const SRStructure& s, int N, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> U(-1, 1);
    Eigen::VectorXd u(s.rank());
    for (int i = 0; i < s.rank(); ++i) u[i] = U(rng);
    auto prob = EndpointProblem::from_structure(s, Eigen::VectorXd::Zero(s.dim), u, N);
    Eigen::MatrixXd c(N, s.rank());
    for (int k = 0; k < N; ++k)
        for (int i = 0; i < s.rank(); ++i) c(k, i) = 0.3 * U(rng);
    FlowOptions o;
    o.rtol = o.atol = 1e-12;
    Eigen::MatrixXd D = endpoint_differential(prob, c, o);
    Eigen::MatrixXd fd(D.rows(), D.cols());
    const double h = 1e-6;
    for (int i = 0; i < s.rank(); ++i)
        for (int k = 0; k < N; ++k) {
            Eigen::MatrixXd cp = c, cm = c;
            cp(k, i) += h;
            cm(k, i) -= h;
            fd.col(i * N + k) = (endpoint_map(prob, cp, o).stacked() - endpoint_map(prob, cm, o).stacked()) / (2 * h);
        }
    return (D - fd).norm() / D.norm();
}

}  // namespace

TEST_SUITE("endpoint")
{
    TEST_CASE("endpoint map of the zero perturbation")
    {
        auto h = heisenberg();
        auto prob = EndpointProblem::from_structure(h, Eigen::VectorXd::Zero(3), vec({1.0, 0.0}), 4);
        auto val = endpoint_map(prob, Eigen::MatrixXd::Zero(4, 2));
        CHECK((val.point - vec({1.0, 0.0, 0.0})).norm() < 1e-9);
        CHECK((val.final_control - vec({1.0, 0.0})).norm() < 1e-15);
        CHECK(val.stacked().size() == 5);
        CHECK_THROWS_AS(EndpointProblem::from_structure(h, Eigen::VectorXd::Zero(3), vec({1.0}), 4), InputError);
    }

    TEST_CASE("differential matches central differences")
    {
        auto rng = rng_stream(41, 0);
        for (const auto& s : {heisenberg(), step3alpha(Rational(-1))})
            for (int N : {2, 5, 8}) {
                CAPTURE(s.name);
                CAPTURE(N);
                CHECK(differential_error(s, N, rng) < 1e-5);
            }
    }

    TEST_CASE("terminal-value rows of the differential")
    {
        auto h = heisenberg();
        auto prob = EndpointProblem::from_structure(h, Eigen::VectorXd::Zero(3), vec({0.5, 0.5}), 4);
        auto D = endpoint_differential(prob, Eigen::MatrixXd::Zero(4, 2));
        // only phi_1 is nonzero at s = 1
        for (int i = 0; i < 2; ++i)
            for (int k = 0; k < 4; ++k) CHECK(D(3 + i, i * 4 + k) == (k == 0 ? 1.0 : 0.0));
    }

    TEST_CASE("strong pliability certificates replay")
    {
        PliabilityOptions po;
        auto h = heisenberg();
        auto prob = EndpointProblem::from_structure(h, Eigen::VectorXd::Zero(3), vec({1.0, 0.0}));
        auto cert = strong_pliability_search(prob, po);
        REQUIRE(cert.verdict == PliabilityVerdict::Submersion);
        CHECK(cert.sup_norm < po.eta);
        CHECK(cert.residual < po.residual_tol);
        CHECK(cert.sigma_ratio > po.submersion_tol);
        auto replay = replay_certificate(EndpointProblem::from_structure(h, Eigen::VectorXd::Zero(3), vec({1.0, 0.0}), cert.N),
                                         cert);
        CHECK(replay.residual < po.residual_tol);
        CHECK(replay.sigma_ratio == doctest::Approx(cert.sigma_ratio).epsilon(1e-4));
        // determinism under a fixed seed
        auto again = strong_pliability_search(prob, po);
        CHECK(again.coeffs == cert.coeffs);
    }

    TEST_CASE("zero control is trivially pliable")
    {
        auto h = heisenberg();
        auto cert = strong_pliability_search(EndpointProblem::from_structure(h, Eigen::VectorXd::Zero(3), vec({0.0, 0.0})));
        CHECK(cert.verdict == PliabilityVerdict::RemarkTrivial);
        CHECK(cert.found());
    }

    TEST_CASE("goh form is antisymmetric and bilinear")
    {
        auto nf = nil_at_origin(step3alpha(Rational(-1)));
        Eigen::VectorXd u = vec({0.4, -0.3, 0.8});
        Eigen::VectorXd lam = vec({0.1, 0.2, -0.3, 0.4, 0.5, 1.0});
        Eigen::VectorXd a = vec({1, 0.5, -1}), b = vec({0, 1, 2}), c = vec({-1, 1, 0});
        for (double t : {0.0, 0.3, 1.0}) {
            CHECK(goh_form(nf, u, lam, t, a, b) == doctest::Approx(-goh_form(nf, u, lam, t, b, a)));
            CHECK(goh_form(nf, u, lam, t, a, a) == doctest::Approx(0.0));
            CHECK(goh_form(nf, u, lam, t, a + 2 * c, b) ==
                  doctest::Approx(goh_form(nf, u, lam, t, a, b) + 2 * goh_form(nf, u, lam, t, c, b)));
        }
    }

    TEST_CASE("goh and legendre witnesses on the examples")
    {
        auto h = nil_at_origin(heisenberg());
        // lambda = e3 annihilates the image of the differential at u = (1,0); [X1,X2] = d/dx3
        CHECK(std::abs(goh_form(h, vec({1, 0}), vec({0, 0, 1}), 0.0, vec({1, 0}), vec({0, 1}))) ==
              doctest::Approx(1.0));

        auto s = nil_at_origin(step3alpha(Rational(-1)));
        Eigen::VectorXd e6 = Eigen::VectorXd::Unit(6, 5);
        const double l11 = legendre_form(s, vec({0, 0, 1}), e6, 0.0, vec({1, 0, 0}), vec({1, 0, 0}));
        const double l22 = legendre_form(s, vec({0, 0, 1}), e6, 0.0, vec({0, 1, 0}), vec({0, 1, 0}));
        CHECK(std::abs(l11) == doctest::Approx(1.0));
        CHECK(l22 == doctest::Approx(-l11));  // alpha = -1: indefinite

        auto wit = goh_legendre_screen(s, vec({0, 0, 1}));
        REQUIRE_FALSE(wit.empty());
        double best = 0.0;
        for (const auto& w : wit) best = std::max(best, std::abs(w.legendre));
        CHECK(best > 0.5);
    }

    TEST_CASE("goh spanning check")
    {
        auto s = nil_at_origin(step3alpha(Rational(-1)));
        auto a = goh_spanning_check(s, vec({1, 0, 0}));
        CHECK(a.spanning);
        CHECK(a.dims.back() == 6);
        auto b = goh_spanning_check(s, vec({0, 0, 1}));
        CHECK_FALSE(b.spanning);
        for (std::size_t k = 1; k < b.dims.size(); ++k) CHECK(b.dims[k] >= b.dims[k - 1]);
    }

    TEST_CASE("cone condition")
    {
        auto neg = nil_at_origin(step3alpha(Rational(-1)));
        auto pos = nil_at_origin(step3alpha(Rational(1)));
        CHECK(cone_condition(neg, vec({0, 0, 1}), 64, 1).full);
        CHECK_FALSE(cone_condition(pos, vec({0, 0, 1}), 64, 1).full);
        CHECK_THROWS_AS(cone_condition(neg, vec({0, 0, 1}), 5, 1), InputError);
        CHECK_THROWS_AS(cone_condition(nil_at_origin(heisenberg()), vec({1, 0}), 64, 1), InputError);
    }

    TEST_CASE("cone residuals do not grow with more samples")
    {
        auto pos = nil_at_origin(step3alpha(Rational(1)));
        std::vector<double> prev;
        for (int n : {12, 24, 48, 96}) {
            auto r = cone_condition(pos, vec({0, 0, 1}), n, 7);
            if (!prev.empty())
                for (std::size_t k = 0; k < r.residuals.size(); ++k) CHECK(r.residuals[k] <= prev[k] + 1e-10);
            prev = r.residuals;
        }
    }

    TEST_CASE("medium-fat check")
    {
        auto s = step3alpha(Rational(-1));
        // [X_3,[X_i,X_3]] = 0, so u = e3 misses the top layer
        auto r = medium_fat_check(s, Eigen::VectorXd::Zero(6), vec({0, 0, 1}));
        CHECK_FALSE(r.medium_fat);
        CHECK(r.rank == 5);
        auto e1 = medium_fat_check(s, Eigen::VectorXd::Zero(6), vec({1, 0, 0}));
        CHECK(e1.medium_fat);
        CHECK(e1.rank == 6);
        auto z = medium_fat_check(s, Eigen::VectorXd::Zero(6), vec({0, 0, 0}));
        CHECK(z.trivial);
        CHECK(medium_fat_check(heisenberg(), Eigen::VectorXd::Zero(3), vec({1, 0})).medium_fat);
    }
}
