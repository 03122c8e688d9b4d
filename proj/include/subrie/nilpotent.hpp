#ifndef SUBRIE_NILPOTENT_HPP
#define SUBRIE_NILPOTENT_HPP

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

#include "subrie/linalg.hpp"
#include "subrie/structure.hpp"

namespace subrie {

struct ChartProvenance {
    std::vector<std::vector<int>> words;  // adapted basis, 0-based frame indices
    RationalMatrix linear_change;         // A: columns are the basis fields at p
    std::vector<Multinomial> corrections;  // y_j = z_j - corrections[j](z), z = A^{-1}(x - p)
    std::vector<std::string> log;
};

/// Privileged coordinates y = Phi_p(x) at p with an exact polynomial inverse.
struct PrivilegedChart {
    Eigen::VectorXd base;
    std::vector<Rational> base_exact;
    std::vector<int> weights;
    std::vector<int> growth_vector;
    std::vector<Multinomial> forward;           // y(x)
    std::vector<Multinomial> inverse;           // x(y)
    std::vector<Multinomial> forward_centered;  // y(xi), xi = x - p
    std::vector<Multinomial> inverse_centered;  // xi(y)
    ChartProvenance provenance;

    int dim() const { return static_cast<int>(weights.size()); }
    int step() const { return weights.empty() ? 0 : weights.back(); }
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;  // evaluated through forward_centered
    Eigen::VectorXd apply_inverse(const Eigen::VectorXd& y) const;
};

PrivilegedChart privileged_chart(const SRStructure& s, const Eigen::VectorXd& p, const FlagOptions& opts = {});

/// Throws NumericalError if forward(p) != 0, the inverse is not exact, or an order condition fails.
void verify_chart(const SRStructure& s, const PrivilegedChart& chart);

Eigen::VectorXd dilate(const std::vector<int>& weights, double lambda, const Eigen::VectorXd& y);
double pseudo_norm(const std::vector<int>& weights, const Eigen::VectorXd& y);

/// Frame pushed into privileged coordinates, exact and untruncated.
Frame pushed_frame(const SRStructure& s, const PrivilegedChart& chart);

/// lambda * (dil_{1/lambda})_* v: component j becomes lambda^{1-w_j} v_j(dil_lambda y).
/// Weighted-homogeneous fields of degree -1 are fixed points.
VectorField rescale_field(const VectorField& v, const std::vector<int>& weights, const Rational& lambda);

struct NilpotentFrame {
    PrivilegedChart chart;
    Frame fields;
    std::vector<int> growth_vector;

    int dim() const { return chart.dim(); }
    int rank() const { return static_cast<int>(fields.size()); }
    int step() const { return static_cast<int>(growth_vector.size()); }
    SRStructure as_structure(const std::string& name = "nilpotent") const;
};

NilpotentFrame nilpotentize(const SRStructure& s, const PrivilegedChart& chart);

struct ConvergenceRow {
    double lambda = 0.0;
    double error = 0.0;
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    std::optional<double> slope;        // log-log fit; absent with fewer than two informative rows
    std::optional<bool> nonincreasing;  // within 5% slack; absent for a single row
};

ConvergenceTable check_convergence(const SRStructure& s, const PrivilegedChart& chart, const NilpotentFrame& nf,
                                   const std::vector<double>& lambdas, const std::optional<Box>& box = std::nullopt,
                                   int per_axis = 9);

/// Least-squares slope of log(ys) against log(xs) over entries with ys > floor.
std::optional<double> loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys, double floor = 0.0);

}  // namespace subrie

#endif  // SUBRIE_NILPOTENT_HPP
