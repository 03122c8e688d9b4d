#ifndef SUBRIE_ODE_HPP
#define SUBRIE_ODE_HPP

#include <Eigen/Core>

#include <functional>
#include <vector>

#include "subrie/error.hpp"

namespace subrie {

using OdeRhs = std::function<void(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy)>;

struct OdeOptions {
    double rtol = 1e-10;
    double atol = 1e-10;
    double initial_step = 0.0;  // 0: automatic
    long max_steps = 2000000;
    bool dense = true;
    /// Optional state constraint; when it turns false the solver throws DomainExitError.
    std::function<bool(const Eigen::VectorXd&)> inside;
};

/// One accepted step with Dormand-Prince continuous extension coefficients.
struct DenseStep {
    double t = 0.0;
    double h = 0.0;
    Eigen::VectorXd r1, r2, r3, r4, r5;
    Eigen::VectorXd eval(double tt) const;
};

struct OdeStats {
    long accepted = 0;
    long rejected = 0;
    long rhs_evals = 0;
};

class DenseSolution {
public:
    double t_begin() const { return t_begin_; }
    double t_end() const { return t_end_; }
    const Eigen::VectorXd& final_state() const { return y_end_; }
    const Eigen::VectorXd& initial_state() const { return y_begin_; }
    const std::vector<DenseStep>& steps() const { return steps_; }
    bool has_dense() const { return !steps_.empty() || t_begin_ == t_end_; }
    /// Dense-output state at any t between t_begin and t_end.
    Eigen::VectorXd operator()(double t) const;
    const OdeStats& stats() const { return stats_; }

private:
    friend DenseSolution integrate(const OdeRhs&, double, double, const Eigen::VectorXd&, const OdeOptions&,
                                   const std::vector<double>&);
    double t_begin_ = 0.0, t_end_ = 0.0;
    Eigen::VectorXd y_begin_, y_end_;
    std::vector<DenseStep> steps_;
    OdeStats stats_;
};

/// Adaptive Dormand-Prince 5(4) with dense output from t0 to t1 (t1 < t0 integrates backward).
/// Steps never cross the given breakpoints.
DenseSolution integrate(const OdeRhs& rhs, double t0, double t1, const Eigen::VectorXd& y0, const OdeOptions& opts = {},
                        const std::vector<double>& breakpoints = {});

}  // namespace subrie

#endif  // SUBRIE_ODE_HPP
