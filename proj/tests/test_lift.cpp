#include <doctest.h>

#include "subrie/lift.hpp"
#include "support.hpp"

using namespace subrie;
using testing::vec;

namespace {

WhitneyData grushin_data(int levels)
{
    return testing::sample_curve(grushin(), testing::slow_rotation(1e-4), vec({-0.5, 0.1}),
                                 testing::cantor(levels, 0.2));
}

}  // namespace

TEST_SUITE("lift")
{
    TEST_CASE("built-in heisenberg to grushin lift is exact")
    {
        auto ls = heisenberg_to_grushin();
        CHECK(is_builtin_lift("heisenberg->grushin"));
        auto chk = check_lift(ls);
        CHECK(chk.ok);
        CHECK(chk.exact);
        CHECK(chk.submersion);
        CHECK(chk.min_rank == 2);
        for (const auto& row : chk.residuals)
            for (const auto& r : row) CHECK(r.is_zero());
        // psi(x,y,z) = (x, z + xy/2)
        CHECK((ls.apply(vec({0.4, 2.0, -0.1})) - vec({0.4, 0.3})).norm() < 1e-15);
    }

    TEST_CASE("a wrong map leaves residuals")
    {
        auto ls = heisenberg_to_grushin();
        ls.psi[1] = parse_polynomial("x3", 3);
        auto chk = check_lift(ls);
        CHECK_FALSE(chk.ok);
        CHECK_FALSE(chk.exact);
        CHECK(chk.residuals[0][1] == parse_polynomial("-1/2*x2", 3));
        CHECK(chk.residuals[1][1] == parse_polynomial("1/2*x1", 3) - parse_polynomial("x1", 3));
    }

    TEST_CASE("identity lift and text round-trip")
    {
        auto id = identity_lift(engel());
        CHECK(check_lift(id).ok);
        auto ls = heisenberg_to_grushin();
        auto back = parse_lift(to_text(ls));
        CHECK(back.psi == ls.psi);
        CHECK(back.upstairs.frame == ls.upstairs.frame);
        CHECK(back.downstairs.frame == ls.downstairs.frame);
        CHECK_THROWS_AS(parse_lift("[upstairs]\nbuiltin = heisenberg\n"), InputError);
        CHECK_THROWS_AS(load_lift("no-such-lift-file"), InputError);
    }

    TEST_CASE("minimal preimage lies on the fiber")
    {
        auto ls = heisenberg_to_grushin();
        for (auto p : {vec({0.3, -0.2}), vec({0.0, 0.5}), vec({-1.0, 1.0})}) {
            auto x = minimal_preimage(ls, p);
            CHECK((ls.apply(x) - p).norm() < 1e-10);
        }
    }

    TEST_CASE("horizontal curves project to horizontal curves with the same control")
    {
        auto ls = heisenberg_to_grushin();
        Eigen::MatrixXd coeffs(3, 2);
        coeffs << 0.3, -0.2, 0.5, 0.1, -0.4, 0.6;
        auto u = Control::basis(0, 1, coeffs, vec({0.7, -0.3}));
        FlowOptions o;
        o.rtol = o.atol = 1e-12;
        Eigen::VectorXd p0 = vec({-0.2, 0.4, 0.1});
        auto up = chron_exp(ls.upstairs, u, p0, o);
        auto down = chron_exp(ls.downstairs, u, ls.apply(p0), o);
        std::vector<Eigen::VectorXd> pts;
        for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) pts.push_back(up.at(t));
        auto proj = project_curve(ls, pts);
        int k = 0;
        for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) CHECK((proj[static_cast<std::size_t>(k++)] - down.at(t)).norm() < 1e-8);
    }

    TEST_CASE("distances do not increase under projection")
    {
        auto ls = heisenberg_to_grushin();
        auto same = project_distance_check(ls, vec({0.1, 0.2, 0.3}), vec({0.1, 0.2, 0.3}));
        CHECK(same.d_up_upper == 0.0);
        CHECK(same.d_down_upper == 0.0);
        auto c = project_distance_check(ls, Eigen::VectorXd::Zero(3), vec({0, 0, 1}));
        CHECK(c.d_down_upper <= c.d_up_upper + 1e-6);
        CHECK_FALSE(c.violation);
    }

    TEST_CASE("lifted whitney data projects back")
    {
        auto ls = heisenberg_to_grushin();
        auto d = grushin_data(3);
        auto lifted = lift_whitney_data(ls, d);
        CHECK(lifted.max_projection_error < 1e-6);
        REQUIRE(lifted.upstairs.size() == d.size());
        for (std::size_t k = 0; k < d.size(); ++k) {
            CHECK((ls.apply(lifted.upstairs.points[k]) - d.points[k]).norm() < 1e-6);
            CHECK((lifted.upstairs.controls[k] - d.controls[k]).norm() < 1e-12);
        }
        CHECK(lifted.gaps.size() == d.size() - 1);
        CHECK(verify_direct(ls.upstairs, lifted.upstairs, Direction::Forward).verdict == Verdict::Accept);

        auto bad_start = lift_whitney_data(ls, d, minimal_preimage(ls, d.points[0]));
        CHECK(bad_start.max_projection_error < 1e-6);
        CHECK_THROWS_AS(lift_whitney_data(ls, d, vec({5.0, 5.0, 5.0})), InputError);
    }
}
