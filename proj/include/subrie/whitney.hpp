#ifndef SUBRIE_WHITNEY_HPP
#define SUBRIE_WHITNEY_HPP

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "subrie/distance.hpp"
#include "subrie/flow.hpp"

namespace subrie {

/// Samples (t, f(t), u(t)) of a map on a finite compact K with L(t) = X_{u(t)}(f(t)).
struct WhitneyData {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> points;
    std::vector<Eigen::VectorXd> controls;

    std::size_t size() const { return times.size(); }
    bool empty() const { return times.empty(); }
    /// Throws InputError on non-increasing times, wrong dimensions, points outside the domain or
    /// non-finite values.
    void validate(const SRStructure& s) const;
    WhitneyData subset(const std::vector<std::size_t>& indices) const;
};

enum class Direction { Both, Forward, Backward };
enum class Verdict { Accept, Reject, Inconclusive };
std::string to_string(Direction d);
std::string to_string(Verdict v);
Direction parse_direction(const std::string& text);

struct WhitneyThresholds {
    double beta_min = 0.3;    // power-law exponent required for o(h)
    double theta = 1e-3;      // smallest-bucket defect bound for accept
    double Theta = 0.1;       // lower-proxy defect that forces reject
    double noise_floor = 1e-9;
};

struct WhitneyOptions {
    WhitneyThresholds thresholds;
    std::optional<double> h_max;  // default: a quarter of the diameter of K
    std::size_t pair_cap = 4096;
    std::uint64_t seed = 1;
    DistanceBudget budget{10, 1, 3, 6, 1e-8, 1e-10, 1};
    bool resolution_check = true;
};

struct DefectBucket {
    double gap_lo = 0.0, gap_hi = 0.0;
    int count = 0;
    double sup_defect = 0.0;  // upper estimates
    double sup_lower = 0.0;   // pseudo-norm proxies
};

struct PairDefect {
    std::size_t s = 0, t = 0;  // data indices; defect compares f(t) with e^{(t-s) X_{u(s)}} f(s)
    double gap = 0.0;
    double defect = 0.0;
    double lower = 0.0;
    bool skipped = false;
};

struct ModulusReport {
    Direction direction = Direction::Both;
    std::vector<DefectBucket> buckets;  // increasing gap
    std::optional<double> beta;
    Verdict verdict = Verdict::Inconclusive;
    std::string reason;
    WhitneyThresholds thresholds;
    double h_max = 0.0;
    std::size_t pairs_total = 0, pairs_evaluated = 0, pairs_skipped = 0;
    double max_lower = 0.0;
    std::optional<PairDefect> worst;  // largest lower proxy
    std::optional<Verdict> half_resolution;
};

ModulusReport verify_direct(const SRStructure& s, const WhitneyData& data, Direction direction,
                            const WhitneyOptions& opts = {});

struct DilationRow {
    double l = 0.0;  // base time
    double gap = 0.0;
    double discrepancy = 0.0;
};

struct DilationReport {
    Direction direction = Direction::Forward;
    std::vector<DilationRow> rows;
    std::vector<DefectBucket> buckets;  // sup_defect holds the sup discrepancy
    std::optional<double> slope;
    double slope_min = 0.3;
    double small_tol = 0.05;
    Verdict verdict = Verdict::Inconclusive;
    std::string reason;
};

/// Forward: dil_{1/(b-a)} Phi_{f(b)}(f(a)) against e^{-X^_{u(b)}}(0) for consecutive a < b in K.
/// Backward: dil_{1/(b-a)} Phi_{f(a)}(f(b)) against e^{X^_{u(a)}}(0). Throws InputError at
/// singular points.
DilationReport verify_dilation(const SRStructure& s, const WhitneyData& data, Direction direction,
                               double slope_min = 0.3, double small_tol = 0.05);

struct ExtendOptions {
    std::vector<double> eta_schedule;  // empty: per-gap default h |du| + 0.01 with doublings
    std::vector<int> N_schedule{6, 12, 24};
    int restarts = 3;
    int newton_iterations = 30;
    std::uint64_t seed = 1;
    double interp_tol = 1e-6;
    double junction_tol = 1e-8;
    double ray_length = 1.0;
    double integration_tol = 1e-12;
};

struct GapDiagnostic {
    double a = 0.0, b = 0.0;
    double eta = 0.0;        // schedule value that admitted the control
    double sup_norm = 0.0;   // realized sup |v|
    double endpoint_error = 0.0;
    int N = 0;
    bool solved = false;
};

struct ExtensionResult {
    Control control;  // piecewise over [t_begin, t_end]
    Eigen::VectorXd start_point;
    double t_begin = 0.0, t_end = 0.0;
    std::vector<GapDiagnostic> gaps;
    double max_interp_error = 0.0;
    double max_junction_jump = 0.0;
    Trajectory trajectory;

    /// Trajectory and control values at the given times.
    WhitneyData restrict_to(const std::vector<double>& times) const;
};

/// Throws NumericalError naming the first unsolved gap.
ExtensionResult extend(const SRStructure& s, const WhitneyData& data, const ExtendOptions& opts = {});

std::vector<double> default_eta_schedule(double gap, double du_norm);

struct LusinOptions {
    int grid = 129;
    double tau = 0.05;
    double h0 = 0.125;  // relative to b - a
    int h_levels = 3;
    DistanceBudget budget{8, 1, 3, 6, 1e-8, 1e-10, 1};
    ExtendOptions extend;
};

struct LusinResult {
    WhitneyData kept;
    std::vector<double> grid;
    std::vector<double> screen;  // sup_h f_h(t) per grid point
    double kept_measure = 0.0;
    double tau = 0.0;
    double h0 = 0.0;
    ExtensionResult extension;
};

LusinResult lusin(const SRStructure& s, const Control& u_ac, const Eigen::VectorXd& p0, double eps,
                  const LusinOptions& opts = {});

}  // namespace subrie

#endif  // SUBRIE_WHITNEY_HPP
