#ifndef SUBRIE_LIFT_HPP
#define SUBRIE_LIFT_HPP

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

#include "subrie/distance.hpp"
#include "subrie/whitney.hpp"

namespace subrie {

/// Submersion psi: R^D -> R^d with psi_* X~_i = X_i o psi.
struct LiftSpec {
    std::string name;
    SRStructure upstairs;
    SRStructure downstairs;
    std::vector<Multinomial> psi;  // d polynomials in D variables

    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const;  // d x D
};

/// psi(x,y,z) = (x, z + xy/2).
LiftSpec heisenberg_to_grushin();
LiftSpec identity_lift(const SRStructure& s);
bool is_builtin_lift(const std::string& spec);
/// Built-in name ("heisenberg->grushin") or a lift file path.
LiftSpec load_lift(const std::string& spec);
/// Sections [upstairs] and [downstairs] hold structure definitions (or `builtin = <name>`);
/// `psi<i> = <expr in x1..xD>` lines may appear anywhere.
LiftSpec parse_lift(const std::string& text);
std::string to_text(const LiftSpec& ls);

struct LiftCheck {
    bool ok = false;
    bool exact = false;       // all residual polynomials vanish
    bool submersion = false;  // Jacobian rank d at every sampled point
    int min_rank = 0;
    std::vector<std::vector<Multinomial>> residuals;  // [field][component]: psi_* X~_i - X_i o psi
};

LiftCheck check_lift(const LiftSpec& ls, int per_axis = 5, double rank_tol = 1e-9);

/// Least-norm point of the fiber psi^{-1}(p), by Gauss-Newton from the origin.
Eigen::VectorXd minimal_preimage(const LiftSpec& ls, const Eigen::VectorXd& p);

struct LiftDataOptions {
    DistanceBudget budget{16, 2, 20, 20, 1e-9, 1e-11, 1};
    double match_tol = 1e-8;  // |psi(p~0) - f(t_min)|
    double integration_tol = 1e-12;
};

struct GapLift {
    double a = 0.0, b = 0.0;
    double defect = 0.0;        // upper estimate of d(e^{(b-a) X_{u(a)}} f(a), f(b))
    double sub_length = 0.0;    // defect / M
    double correction_sup = 0.0;
};

struct LiftedData {
    WhitneyData upstairs;
    Eigen::VectorXd start;
    double M = 0.0;
    std::vector<GapLift> gaps;
    Control control;  // downstairs control driving both levels, over [t_min, t_max]
    double max_projection_error = 0.0;
};

LiftedData lift_whitney_data(const LiftSpec& ls, const WhitneyData& data,
                             const std::optional<Eigen::VectorXd>& start = std::nullopt,
                             const LiftDataOptions& opts = {});

std::vector<Eigen::VectorXd> project_curve(const LiftSpec& ls, const std::vector<Eigen::VectorXd>& upstairs_points);

struct ProjectionCheck {
    double d_down_upper = 0.0;
    double d_up_upper = 0.0;
    double d_down_lower = 0.0;  // pseudo-norm proxy
    bool violation = false;     // d_down_lower > d_up_upper
};

ProjectionCheck project_distance_check(const LiftSpec& ls, const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                                       const DistanceBudget& budget = {});

}  // namespace subrie

#endif  // SUBRIE_LIFT_HPP
