#ifndef SUBRIE_DISTANCE_HPP
#define SUBRIE_DISTANCE_HPP

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "subrie/flow.hpp"
#include "subrie/nilpotent.hpp"

namespace subrie {

struct DistanceBudget {
    int knots = 32;            // hat-basis nodes on [0,1]
    int starts = 3;            // constant least-squares start plus random low-frequency starts
    int max_outer = 40;        // multiplier / penalty updates
    int max_inner = 25;        // Gauss-Newton steps per outer iteration
    double endpoint_tol = 1e-8;
    double integration_tol = 1e-10;
    std::uint64_t seed = 1;
};

struct DistanceEstimate {
    double upper = 0.0;                 // length of a control verified to reach q
    std::optional<double> lower_proxy;  // pseudo-norm of q in the chart at p; not certified
    Control control;                    // on [0,1], in the original frame
    double endpoint_error = 0.0;        // |x(1) - q| when replaying the control on the structure
    int starts_used = 0;
    int iterations = 0;
};

class DistanceError : public NumericalError {
public:
    DistanceError(const std::string& msg, double gap) : NumericalError(msg), gap_(gap) {}
    double best_gap() const { return gap_; }

private:
    double gap_;
};

/// Direct-method distance solver. Charts at base points are cached; estimate() may be called
/// concurrently.
class DistanceSolver {
public:
    explicit DistanceSolver(SRStructure s, FlagOptions flag_opts = {});

    const SRStructure& structure() const { return s_; }
    DistanceEstimate estimate(const Eigen::VectorXd& p, const Eigen::VectorXd& q, const DistanceBudget& budget = {}) const;
    /// Pseudo-norm of Phi_p(q).
    double lower_proxy(const Eigen::VectorXd& p, const Eigen::VectorXd& q) const;

    struct ChartData {
        PrivilegedChart chart;
        Frame pushed;
    };
    std::shared_ptr<const ChartData> chart_at(const Eigen::VectorXd& p) const;

private:
    SRStructure s_;
    FlagOptions flag_opts_;
    mutable std::mutex mutex_;
    mutable std::map<std::vector<double>, std::shared_ptr<const ChartData>> cache_;
};

DistanceEstimate estimate_dsr(const SRStructure& s, const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                              const DistanceBudget& budget = {});

struct BallBoxSample {
    Eigen::VectorXd q;
    double pseudo_norm = 0.0;
    double upper = 0.0;
    double ratio_upper = 0.0;  // upper / pseudo_norm
    double ratio_lower = 0.0;  // pseudo_norm / upper
};

struct BallBoxCalibration {
    double C_est = 0.0;
    double eps_est = 0.0;
    std::vector<BallBoxSample> samples;
    std::string label = "empirical (upper distance estimates; not a proof)";
};

/// Smallest C with (1/C)|Phi_p(q)| <= d(p,q) <= C|Phi_p(q)| on the samples, d replaced by its upper
/// estimate.
BallBoxCalibration ball_box_calibrate(const SRStructure& s, const PrivilegedChart& chart,
                                      const std::vector<Eigen::VectorXd>& samples, const DistanceBudget& budget = {});

/// Sample points q = Phi_p^{-1}(dil_rho(y)) with y on the unit pseudo-sphere: radial design along
/// coordinate axes plus seeded random directions.
std::vector<Eigen::VectorXd> ball_box_samples(const PrivilegedChart& chart, const std::vector<double>& radii,
                                              int random_directions, std::uint64_t seed);

}  // namespace subrie

#endif  // SUBRIE_DISTANCE_HPP
