#include <doctest.h>

#include "subrie/structure.hpp"
#include "support.hpp"

using namespace subrie;
using testing::vec;

namespace {

VectorField field(const std::string& text, int dim) { return parse_field(text, dim); }

}  // namespace

TEST_SUITE("structure")
{
    TEST_CASE("step-3 example: bracket relations hold exactly")
    {
        for (int a : {-1, -3, 2}) {
            const Rational alpha(a);
            auto s = step3alpha(alpha);
            const auto& X1 = s.frame[0];
            const auto& X2 = s.frame[1];
            const auto& X3 = s.frame[2];
            // written out by hand from the frame definition
            auto W1 = field("dx4 + x1 dx6", 6);
            auto W2 = field("dx5 + " + alpha.get_str() + "*x2 dx6", 6);
            auto Z = field("dx6", 6);
            CHECK(lie_bracket(X1, X3) == W1);
            CHECK(lie_bracket(X2, X3) == W2);
            CHECK(lie_bracket(X1, X2).is_zero());
            CHECK(lie_bracket(X1, W2).is_zero());
            CHECK(lie_bracket(X2, W1).is_zero());
            CHECK(lie_bracket(X1, W1) == Z);
            CHECK(lie_bracket(X2, W2) == alpha * Z);
            CHECK(lie_bracket(X3, W1).is_zero());
            CHECK(lie_bracket(X3, W2).is_zero());
            for (const auto& X : s.frame) CHECK(lie_bracket(X, Z).is_zero());
        }
    }

    TEST_CASE("step-3 example: brackets with X_u")
    {
        auto s = step3alpha(Rational(-1));
        const std::vector<Rational> u{Rational(2), Rational(-3), Rational(5)};
        auto Xu = s.combination(u);
        auto Z = field("dx6", 6);
        const auto W1 = lie_bracket(s.frame[0], s.frame[2]);
        const auto W2 = lie_bracket(s.frame[1], s.frame[2]);
        CHECK(lie_bracket(Xu, W1) == u[0] * Z);
        CHECK(lie_bracket(Xu, W2) == Rational(-1) * u[1] * Z);
        // u1 = u2 = 0 case
        auto Xv = s.combination({Rational(0), Rational(0), Rational(5)});
        CHECK(lie_bracket(lie_bracket(Xv, s.frame[0]), s.frame[0]) == Rational(5) * Z);
        CHECK(lie_bracket(lie_bracket(Xv, s.frame[1]), s.frame[1]) == Rational(-5) * Z);
    }

    TEST_CASE("growth vectors of the built-ins")
    {
        CHECK(flag_at(heisenberg(), vec({0.3, -0.2, 0.5})).growth_vector == std::vector<int>{2, 3});
        CHECK(flag_at(engel(), vec({0.1, 0.2, 0.3, 0.4})).growth_vector == std::vector<int>{2, 3, 4});
        CHECK(flag_at(step3alpha(Rational(-1)), Eigen::VectorXd::Zero(6)).growth_vector == std::vector<int>{3, 5, 6});

        auto g0 = flag_at(grushin(), vec({0.0, 0.4}));
        CHECK(g0.growth_vector == std::vector<int>{1, 2});
        CHECK(g0.weights == std::vector<int>{1, 2});
        CHECK_FALSE(g0.regular);
        auto g1 = flag_at(grushin(), vec({0.5, 0.0}));
        CHECK(g1.growth_vector == std::vector<int>{2});
        CHECK(g1.regular);

        auto m0 = flag_at(martinet(), vec({0.2, 0.0, 0.1}));
        CHECK(m0.growth_vector == std::vector<int>{2, 2, 3});
        CHECK_FALSE(m0.regular);
        CHECK(flag_at(martinet(), vec({0.2, 0.5, 0.1})).growth_vector == std::vector<int>{2, 3});
    }

    TEST_CASE("weights from growth")
    {
        CHECK(weights_from_growth({2, 3}) == std::vector<int>{1, 1, 2});
        CHECK(weights_from_growth({3, 5, 6}) == std::vector<int>{1, 1, 1, 2, 2, 3});
        CHECK(weights_from_growth({1, 2}) == std::vector<int>{1, 2});
        CHECK(weights_from_growth({2, 2, 3}) == std::vector<int>{1, 1, 3});
    }

    TEST_CASE("not bracket generating")
    {
        auto s = parse_structure("dim = 3\nX1 = dx1\nX2 = dx2\n");
        CHECK_THROWS_AS(flag_at(s, Eigen::VectorXd::Zero(3)), NotBracketGeneratingError);
        try {
            flag_at(s, Eigen::VectorXd::Zero(3));
        } catch (const NotBracketGeneratingError& e) {
            CHECK(e.achieved().back() == 2);
        }
    }

    TEST_CASE("regularity map")
    {
        auto h = classify_regularity(heisenberg(), 3);
        CHECK(h.equiregular);
        CHECK(h.reports.size() == 27);
        auto g = classify_regularity(grushin(), 5);
        CHECK_FALSE(g.equiregular);
        REQUIRE_FALSE(g.singular_points.empty());
        for (const auto& p : g.singular_points) CHECK(std::abs(p[0]) < 1e-12);
    }

    TEST_CASE("flags are invariant under a constant gauge")
    {
        Eigen::MatrixXd r = testing::rotation2(0.7);
        for (const auto& s : {heisenberg(), grushin(), engel(), martinet()}) {
            auto gs = apply_gauge(s, constant_gauge(s.dim, r));
            Eigen::VectorXd p = Eigen::VectorXd::Constant(s.dim, 0.3);
            CHECK(flag_at(gs, p).growth_vector == flag_at(s, p).growth_vector);
            p.setZero();
            CHECK(flag_at(gs, p).growth_vector == flag_at(s, p).growth_vector);
        }
        Eigen::MatrixXd bad(2, 2);
        bad << 1, 1, 0, 1;
        CHECK_THROWS_AS(apply_gauge(heisenberg(), constant_gauge(3, bad)), InputError);
    }

    TEST_CASE("structure text round-trip")
    {
        for (const auto& s : {heisenberg(), grushin(), engel(), martinet(), step3alpha(Rational(-1, 2))}) {
            auto back = parse_structure(to_text(s));
            CHECK(back.dim == s.dim);
            CHECK(back.frame == s.frame);
            CHECK(back.name == s.name);
        }
        auto d = parse_structure("name = box\ndim = 2\ndomain = [-2,3]x[0,1]\nX1 = dx1\nX2 = x1 dx2\n");
        REQUIRE(d.domain.has_value());
        auto back = parse_structure(to_text(d));
        REQUIRE(back.domain.has_value());
        CHECK(back.domain->lo == d.domain->lo);
        CHECK(back.domain->hi == d.domain->hi);
        CHECK_THROWS_AS(d.require_in_domain(vec({4.0, 0.5}), "test"), InputError);
    }

    TEST_CASE("structure parse errors")
    {
        CHECK_THROWS_AS(parse_structure("X1 = dx1\n"), InputError);
        CHECK_THROWS_AS(parse_structure("dim = 2\nrank = 2\nX1 = dx1\n"), InputError);
        CHECK_THROWS_AS(parse_structure("dim = 2\nX1 = dx3\n"), InputError);
        CHECK_THROWS_AS(parse_structure("dim = 2\nfoo = 1\nX1 = dx1\n"), InputError);
        CHECK_THROWS_AS(load_structure("no-such-structure-file"), InputError);
    }

    TEST_CASE("built-in resolution and parameters")
    {
        CHECK(is_builtin_structure("heisenberg"));
        CHECK(is_builtin_structure("step3alpha(alpha=2)"));
        auto s = load_structure("step3alpha", {{"alpha", "1/2"}});
        CHECK(s.frame[2][5] == parse_polynomial("1/2*x1^2 + 1/4*x2^2", 6));
        auto d = load_structure("step3alpha");
        CHECK(d.frame[2][5] == parse_polynomial("1/2*x1^2 - 1/2*x2^2", 6));
        CHECK(load_structure("step3alpha(alpha=3)").frame[2][5] == parse_polynomial("1/2*x1^2 + 3/2*x2^2", 6));
    }

    TEST_CASE("bracket levels are deduplicated")
    {
        auto lv = bracket_levels(heisenberg().frame, 3);
        REQUIRE(lv.size() >= 2);
        CHECK(lv[0].size() == 2);
        CHECK(lv[1].size() == 1);
        if (lv.size() > 2) CHECK(lv[2].empty());
    }
}
