#ifndef SUBRIE_TESTS_SUPPORT_HPP
#define SUBRIE_TESTS_SUPPORT_HPP

#include <Eigen/Core>

#include <cmath>
#include <utility>
#include <vector>

#include "subrie/flow.hpp"
#include "subrie/structure.hpp"
#include "subrie/whitney.hpp"

namespace testing {

using namespace subrie;

inline Eigen::VectorXd vec(std::initializer_list<double> xs)
{
    Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

/// Endpoints of the 2^levels intervals of a symmetric Cantor construction on [0,1], keeping a
/// fraction rho of each interval at both ends.
inline std::vector<double> cantor(int levels, double rho)
{
    std::vector<std::pair<double, double>> iv{{0.0, 1.0}};
    for (int l = 0; l < levels; ++l) {
        std::vector<std::pair<double, double>> next;
        for (auto [a, b] : iv) {
            const double len = (b - a) * rho;
            next.push_back({a, a + len});
            next.push_back({b - len, b});
        }
        iv = std::move(next);
    }
    std::vector<double> t;
    for (auto [a, b] : iv) {
        t.push_back(a);
        t.push_back(b);
    }
    return t;
}

/// u(t) = (cos kt, sin kt) sampled densely on [0,1].
inline Control slow_rotation(double kappa, int nodes = 401)
{
    Eigen::MatrixXd vals(nodes, 2);
    for (int k = 0; k < nodes; ++k) {
        const double t = static_cast<double>(k) / (nodes - 1);
        vals(k, 0) = std::cos(kappa * t);
        vals(k, 1) = std::sin(kappa * t);
    }
    return Control::sampled(0.0, 1.0, vals);
}

/// Samples of the horizontal curve driven by `u` from p0 at the given times.
inline WhitneyData sample_curve(const SRStructure& s, const Control& u, const Eigen::VectorXd& p0,
                                const std::vector<double>& times)
{
    FlowOptions fo;
    fo.rtol = fo.atol = 1e-13;
    auto tr = chron_exp(s, u, p0, fo);
    WhitneyData d;
    for (double t : times) {
        d.times.push_back(t);
        d.points.push_back(tr.at(t));
        d.controls.push_back(u.value(t));
    }
    return d;
}

/// Rotation by theta in the (u1,u2) plane.
inline Eigen::MatrixXd rotation2(double theta)
{
    Eigen::MatrixXd r(2, 2);
    r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    return r;
}

}  // namespace testing

#endif  // SUBRIE_TESTS_SUPPORT_HPP
