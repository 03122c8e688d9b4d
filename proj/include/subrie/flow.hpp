#ifndef SUBRIE_FLOW_HPP
#define SUBRIE_FLOW_HPP

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "subrie/ode.hpp"
#include "subrie/structure.hpp"

namespace subrie {

/// Frame compiled for fast double evaluation.
class NumericFrame {
public:
    NumericFrame() = default;
    explicit NumericFrame(const Frame& frame);
    /// Coefficient of monomial e in component j is multiplied by scale(j, e).
    NumericFrame(const Frame& frame, const std::function<double(int, const Exponent&)>& scale);
    /// The unit-scale frame r^{1-w_j} X_j(dil_r y) used for scale-aware shooting in privileged coordinates.
    static NumericFrame dilated(const Frame& frame, const std::vector<int>& weights, double r);

    int dim() const { return dim_; }
    int rank() const { return rank_; }
    /// d x m matrix with columns X_i(x).
    void eval(const Eigen::VectorXd& x, Eigen::MatrixXd& F) const;
    Eigen::MatrixXd eval(const Eigen::VectorXd& x) const;
    /// X_u(x).
    Eigen::VectorXd field(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
    /// sum_i u_i DX_i(x), d x d.
    void jacobian(const Eigen::VectorXd& x, const Eigen::VectorXd& u, Eigen::MatrixXd& J) const;

private:
    struct Term {
        double coeff;
        std::vector<std::uint16_t> exps;  // length dim
    };
    int dim_ = 0, rank_ = 0, maxdeg_ = 0;
    std::vector<std::vector<std::vector<Term>>> terms_;  // [field][component]
    void powers(const Eigen::VectorXd& x, Eigen::MatrixXd& P) const;
};

class Control {
public:
    enum class Kind { Sampled, Basis, Piecewise };
    enum class Interp { Linear, Hold };

    Control() = default;
    /// Uniform grid of values.rows() nodes over [t0,t1]; rows are control values.
    static Control sampled(double t0, double t1, const Eigen::MatrixXd& values, Interp interp = Interp::Linear);
    /// offset + sum_k coeffs(k,:) phi_k(s), s = (t-t0)/(t1-t0), phi_1 = s, phi_k = sin((k-1) pi s).
    static Control basis(double t0, double t1, const Eigen::MatrixXd& coeffs, const Eigen::VectorXd& offset);
    static Control constant(double t0, double t1, const Eigen::VectorXd& u);
    /// Pieces must be contiguous; the value at a junction is taken from the later piece.
    static Control piecewise(std::vector<Control> pieces);

    Kind kind() const { return kind_; }
    Interp interp() const { return interp_; }
    double t0() const { return t0_; }
    double t1() const { return t1_; }
    int rank() const { return m_; }
    const Eigen::MatrixXd& data() const { return data_; }  // sampled values or basis coefficients
    const Eigen::VectorXd& offset() const { return offset_; }
    const std::vector<Control>& pieces() const { return pieces_; }

    Eigen::VectorXd value(double t) const;
    /// Interior times where the control may be non-smooth.
    std::vector<double> breakpoints() const;
    /// Max over a fine sample of |value(t) - offset|_2 (or of |value(t)| when include_offset).
    double sup_norm(bool include_offset = false, int samples_per_unit = 0) const;

private:
    Kind kind_ = Kind::Sampled;
    Interp interp_ = Interp::Linear;
    double t0_ = 0.0, t1_ = 1.0;
    int m_ = 0;
    Eigen::MatrixXd data_;
    Eigen::VectorXd offset_;
    std::vector<Control> pieces_;
};

/// phi_k(s) as used by Control::basis, k = 1..n.
void sine_basis(double s, int n, Eigen::VectorXd& out);

struct FlowOptions {
    double rtol = 1e-10;
    double atol = 1e-10;
    bool dense = true;
};

struct Trajectory {
    DenseSolution solution;
    Control control;
    double tol = 1e-10;

    double t_begin() const { return solution.t_begin(); }
    double t_end() const { return solution.t_end(); }
    Eigen::VectorXd at(double t) const { return solution(t); }
    const Eigen::VectorXd& end_point() const { return solution.final_state(); }
};

/// gamma' = X_{u(t)}(gamma), gamma(t0) = p0. With reverse, p0 is the state at t1 and the
/// flow runs back to t0.
Trajectory chron_exp(const NumericFrame& frame, const Control& ctrl, const Eigen::VectorXd& p0,
                     const FlowOptions& opts = {}, const std::optional<Box>& domain = std::nullopt,
                     bool reverse = false);
Trajectory chron_exp(const SRStructure& s, const Control& ctrl, const Eigen::VectorXd& p0, const FlowOptions& opts = {},
                     bool reverse = false);

/// e^{t X_u}(p0); negative t flows backward.
Eigen::VectorXd flow_const(const NumericFrame& frame, const Eigen::VectorXd& u, double t, const Eigen::VectorXd& p0,
                           const FlowOptions& opts = {}, const std::optional<Box>& domain = std::nullopt);
Eigen::VectorXd flow_const(const SRStructure& s, const Eigen::VectorXd& u, double t, const Eigen::VectorXd& p0,
                           const FlowOptions& opts = {});

/// Flow of a single autonomous polynomial field.
Eigen::VectorXd flow_field(const VectorField& X, double t, const Eigen::VectorXd& p0, const FlowOptions& opts = {});

/// Scalar basis for control perturbations: Sine (phi_1 = s, sin terms) or Hat (piecewise-linear
/// nodal functions on n-1 uniform cells).
struct ScalarBasis {
    enum class Kind { Sine, Hat };
    Kind kind = Kind::Sine;
    int n = 1;
    double t0 = 0.0, t1 = 1.0;

    void eval(double t, Eigen::VectorXd& out) const;
    std::vector<double> breakpoints() const;
};

/// u(t) = offset + sum_{i,b} c(b,i) B_b(t) e_i; parameter index i * n + b.
struct LinearControlFamily {
    ScalarBasis basis;
    Eigen::VectorXd offset;

    int rank() const { return static_cast<int>(offset.size()); }
    int parameter_count() const { return basis.n * rank(); }
    Eigen::VectorXd value(const Eigen::MatrixXd& coeffs, double t) const;
    Control to_control(const Eigen::MatrixXd& coeffs) const;
};

struct Sensitivity {
    Eigen::VectorXd end_point;
    Eigen::MatrixXd jacobian;  // d x parameter_count
    OdeStats stats;
};

/// Endpoint and its derivative with respect to the coefficients via the variational equation.
Sensitivity endpoint_sensitivity(const NumericFrame& frame, const LinearControlFamily& family,
                                 const Eigen::MatrixXd& coeffs, const Eigen::VectorXd& p0, const FlowOptions& opts = {});

/// Endpoint of the flow and its Jacobian d(end)/d(p0).
std::pair<Eigen::VectorXd, Eigen::MatrixXd> flow_jacobian(const NumericFrame& frame, const Control& ctrl,
                                                          const Eigen::VectorXd& p0, const FlowOptions& opts = {},
                                                          bool reverse = false);

struct AdSeries {
    VectorField truncation;    // Y + sum_{k=1}^{N-1} sigma^k/k! ad_X^k Y
    double remainder_bound = 0.0;  // heuristic, constant C = 1
    bool terminates = false;   // ad_X^N Y == 0 exactly
    std::string label = "heuristic bound, C=1";
};

/// Exact truncation of e^{sigma ad X} Y with N terms (k = 0..N-1).
AdSeries ad_series(const VectorField& X, const VectorField& Y, const Rational& sigma, int N,
                   const std::optional<Box>& box = std::nullopt, int seminorm_order = 0);

/// (e^{-sigma X})_* Y at q, computed numerically from the flow Jacobian.
Eigen::VectorXd numeric_pushforward(const VectorField& X, const VectorField& Y, double sigma, const Eigen::VectorXd& q,
                                    const FlowOptions& opts = {});

struct VariationCheck {
    Eigen::VectorXd left;
    Eigen::VectorXd right;
    double residual = 0.0;
    bool symbolic_series = false;  // the ad-series terminated and was used exactly
};

/// Compares ->exp int (X + Y_tau) dtau (p0) with ->exp int e^{(tau-t) ad X} Y_tau dtau (e^{tX} p0),
/// where Y_tau = sum_i v_i(tau) Y_i.
VariationCheck variation_check(const VectorField& X, const Frame& Y, const Control& v, const Eigen::VectorXd& p0,
                               double t, const FlowOptions& opts = {});

}  // namespace subrie

#endif  // SUBRIE_FLOW_HPP
