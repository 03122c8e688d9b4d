#include "subrie/distance.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "subrie/linalg.hpp"
#include "subrie/parallel.hpp"
#include "subrie/random.hpp"

namespace subrie {

namespace {

constexpr double kPi = 3.14159265358979323846;

// 5-point Gauss-Legendre on [0,1]
constexpr double gl_x[5] = {0.04691007703066800, 0.23076534494715845, 0.5, 0.76923465505284155, 0.95308992296933200};
constexpr double gl_w[5] = {0.11846344252809454, 0.23931433524968324, 0.28444444444444444, 0.23931433524968324,
                            0.11846344252809454};

/// Upper Cholesky factor R of the hat-basis mass matrix, M = R^T R.
Eigen::MatrixXd mass_factor(int K)
{
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(K, K);
    const double h = 1.0 / (K - 1);
    for (int k = 0; k + 1 < K; ++k) {
        M(k, k) += h / 3.0;
        M(k + 1, k + 1) += h / 3.0;
        M(k, k + 1) += h / 6.0;
        M(k + 1, k) += h / 6.0;
    }
    return M.llt().matrixU();
}

/// int_0^1 |v(t)| dt for the piecewise-linear control with nodal values c (K x m).
double control_length(const Eigen::MatrixXd& c)
{
    const int K = static_cast<int>(c.rows());
    const double h = 1.0 / (K - 1);
    double L = 0.0;
    for (int k = 0; k + 1 < K; ++k)
        for (int g = 0; g < 5; ++g) {
            const double a = gl_x[g];
            L += h * gl_w[g] * ((1.0 - a) * c.row(k) + a * c.row(k + 1)).norm();
        }
    return L;
}

struct ScaledResult {
    Eigen::MatrixXd c;
    double gap = std::numeric_limits<double>::infinity();
    int iterations = 0;
};

ScaledResult solve_scaled(const NumericFrame& F, const Eigen::VectorXd& target, Eigen::MatrixXd c,
                          const DistanceBudget& b)
{
    const int K = b.knots, m = F.rank(), d = F.dim(), P = K * m;
    LinearControlFamily fam;
    fam.basis.kind = ScalarBasis::Kind::Hat;
    fam.basis.n = K;
    fam.offset = Eigen::VectorXd::Zero(m);
    FlowOptions fo;
    fo.rtol = fo.atol = b.integration_tol;
    fo.dense = false;

    const Eigen::MatrixXd R = mass_factor(K);
    Eigen::MatrixXd Rblk = Eigen::MatrixXd::Zero(P, P);
    for (int i = 0; i < m; ++i) Rblk.block(i * K, i * K, K, K) = R;

    ScaledResult out;
    double mu = 10.0;
    Eigen::VectorXd nu = Eigen::VectorXd::Zero(d);

    auto residual = [&](const Eigen::MatrixXd& cc, Eigen::VectorXd& res, Eigen::MatrixXd* jac, Eigen::VectorXd& gap) {
        auto sens = endpoint_sensitivity(F, fam, cc, Eigen::VectorXd::Zero(d), fo);
        gap = sens.end_point - target;
        const double w = std::sqrt(mu / 2.0);
        res.resize(P + d);
        res.head(P) = Rblk * Eigen::Map<const Eigen::VectorXd>(cc.data(), P);
        res.tail(d) = w * (gap + nu / mu);
        if (jac) {
            jac->resize(P + d, P);
            jac->topRows(P) = Rblk;
            jac->bottomRows(d) = w * sens.jacobian;
        }
    };

    double prev_gap = std::numeric_limits<double>::infinity();
    Eigen::VectorXd res, res_new, gap, gap_new;
    Eigen::MatrixXd jac, jac_new;
    for (int outer = 0; outer < b.max_outer; ++outer) {
        residual(c, res, &jac, gap);
        double cost = res.squaredNorm();
        double damping = 1e-4;
        for (int inner = 0; inner < b.max_inner; ++inner) {
            ++out.iterations;
            const Eigen::VectorXd grad = jac.transpose() * res;
            Eigen::MatrixXd H = jac.transpose() * jac;
            bool accepted = false;
            while (damping < 1e10) {
                Eigen::MatrixXd A = H;
                A.diagonal().array() += damping * (1.0 + H.diagonal().array());
                const Eigen::VectorXd delta = -A.ldlt().solve(grad);
                Eigen::MatrixXd cn = c;
                Eigen::Map<Eigen::VectorXd>(cn.data(), P) += delta;
                try {
                    residual(cn, res_new, &jac_new, gap_new);
                } catch (const NumericalError&) {
                    damping *= 8.0;
                    continue;
                }
                const double cost_new = res_new.squaredNorm();
                if (cost_new < cost) {
                    const double rel = (cost - cost_new) / std::max(cost, 1e-300);
                    c = std::move(cn);
                    res.swap(res_new);
                    jac.swap(jac_new);
                    gap.swap(gap_new);
                    cost = cost_new;
                    damping = std::max(damping / 5.0, 1e-12);
                    accepted = rel > 1e-12;
                    break;
                }
                damping *= 8.0;
            }
            if (!accepted) break;
        }
        const double g = gap.norm();
        out.gap = g;
        if (g < 1e-8) break;
        nu += mu * gap;
        if (g > prev_gap / 4.0) mu *= 2.0;
        prev_gap = g;
    }

    // hard constraint: min-norm Newton projection
    for (int it = 0; it < 10; ++it) {
        auto sens = endpoint_sensitivity(F, fam, c, Eigen::VectorXd::Zero(d), fo);
        Eigen::VectorXd g = sens.end_point - target;
        out.gap = g.norm();
        if (out.gap < 1e-13) break;
        if (!g.allFinite()) break;
        Eigen::Map<Eigen::VectorXd>(c.data(), P) -= min_norm_solve(sens.jacobian, g);
    }
    out.c = std::move(c);
    return out;
}

std::vector<double> point_key(const Eigen::VectorXd& p) { return {p.data(), p.data() + p.size()}; }

}  // namespace

DistanceSolver::DistanceSolver(SRStructure s, FlagOptions flag_opts) : s_(std::move(s)), flag_opts_(flag_opts)
{
    s_.validate();
}

std::shared_ptr<const DistanceSolver::ChartData> DistanceSolver::chart_at(const Eigen::VectorXd& p) const
{
    const auto key = point_key(p);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
    }
    auto data = std::make_shared<ChartData>();
    data->chart = privileged_chart(s_, p, flag_opts_);
    data->pushed = pushed_frame(s_, data->chart);
    std::lock_guard<std::mutex> lock(mutex_);
    return cache_.emplace(key, std::move(data)).first->second;
}

double DistanceSolver::lower_proxy(const Eigen::VectorXd& p, const Eigen::VectorXd& q) const
{
    auto cd = chart_at(p);
    return pseudo_norm(cd->chart.weights, cd->chart.apply(q));
}

DistanceEstimate DistanceSolver::estimate(const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                                          const DistanceBudget& budget) const
{
    const int d = s_.dim, m = s_.rank();
    if (p.size() != d || q.size() != d) throw InputError("estimate_dsr: point has wrong dimension");
    if (budget.knots < 2 || budget.starts < 1) throw InputError("estimate_dsr: budget needs >= 2 knots and >= 1 start");
    s_.require_in_domain(p, "estimate_dsr");
    s_.require_in_domain(q, "estimate_dsr");

    DistanceEstimate est;
    if ((q - p).lpNorm<Eigen::Infinity>() < 1e-14) {
        est.lower_proxy = 0.0;
        est.control = Control::constant(0.0, 1.0, Eigen::VectorXd::Zero(m));
        return est;
    }
    auto cd = chart_at(p);
    const auto& W = cd->chart.weights;
    const Eigen::VectorXd y = cd->chart.apply(q);
    const double r = pseudo_norm(W, y);
    est.lower_proxy = r;
    if (!(r > 0)) throw NumericalError("estimate_dsr: degenerate chart image");
    const Eigen::VectorXd yt = dilate(W, 1.0 / r, y);
    const NumericFrame F = NumericFrame::dilated(cd->pushed, W, r);

    const int K = budget.knots;
    const Eigen::VectorXd base_u = min_norm_solve(F.eval(Eigen::VectorXd::Zero(d)), yt);

    double best_len = std::numeric_limits<double>::infinity(), best_gap = std::numeric_limits<double>::infinity();
    for (int st = 0; st < budget.starts; ++st) {
        Eigen::MatrixXd c0(K, m);
        for (int k = 0; k < K; ++k) c0.row(k) = base_u.transpose();
        if (st > 0 || base_u.norm() < 1e-8) {
            auto gen = rng_stream(budget.seed, static_cast<std::uint64_t>(st));
            std::normal_distribution<double> Nd(0.0, 1.0);
            for (int i = 0; i < m; ++i)
                for (int f = 1; f <= 3; ++f) {
                    const double a = Nd(gen) / f, bb = Nd(gen) / f;
                    for (int k = 0; k < K; ++k) {
                        const double t = static_cast<double>(k) / (K - 1);
                        c0(k, i) += a * std::cos(2 * kPi * f * t) + bb * std::sin(2 * kPi * f * t);
                    }
                }
        }
        ++est.starts_used;
        ScaledResult sr;
        try {
            sr = solve_scaled(F, yt, c0, budget);
        } catch (const NumericalError&) {
            continue;
        }
        est.iterations += sr.iterations;
        if (!(sr.gap < 1e-10)) {
            best_gap = std::min(best_gap, sr.gap * r);
            continue;
        }
        const double len = r * control_length(sr.c);
        if (!(len < best_len)) continue;
        Control ctrl = Control::sampled(0.0, 1.0, r * sr.c, Control::Interp::Linear);
        FlowOptions fo;
        fo.rtol = fo.atol = std::min(budget.integration_tol, 1e-11);
        fo.dense = false;
        double err;
        try {
            err = (chron_exp(s_, ctrl, p, fo).end_point() - q).norm();
        } catch (const NumericalError&) {
            continue;
        }
        best_gap = std::min(best_gap, err);
        if (!(err < budget.endpoint_tol)) continue;
        best_len = len;
        est.upper = len;
        est.control = std::move(ctrl);
        est.endpoint_error = err;
    }
    if (!std::isfinite(best_len)) {
        std::ostringstream os;
        os << "estimate_dsr: no control reached q within budget (best endpoint gap " << best_gap << ")";
        throw DistanceError(os.str(), best_gap);
    }
    return est;
}

DistanceEstimate estimate_dsr(const SRStructure& s, const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                              const DistanceBudget& budget)
{
    return DistanceSolver(s).estimate(p, q, budget);
}

std::vector<Eigen::VectorXd> ball_box_samples(const PrivilegedChart& chart, const std::vector<double>& radii,
                                              int random_directions, std::uint64_t seed)
{
    const int d = chart.dim();
    std::vector<Eigen::VectorXd> dirs;
    for (int j = 0; j < d; ++j)
        for (double sg : {1.0, -1.0}) {
            Eigen::VectorXd y = Eigen::VectorXd::Zero(d);
            y[j] = sg;
            dirs.push_back(y);
        }
    auto gen = rng_stream(seed, 0);
    std::normal_distribution<double> Nd(0.0, 1.0);
    for (int k = 0; k < random_directions; ++k) {
        Eigen::VectorXd y(d);
        for (int j = 0; j < d; ++j) y[j] = Nd(gen);
        const double n = pseudo_norm(chart.weights, y);
        if (n > 0) dirs.push_back(dilate(chart.weights, 1.0 / n, y));
    }
    std::vector<Eigen::VectorXd> out;
    for (double rho : radii)
        for (const auto& y : dirs) out.push_back(chart.apply_inverse(dilate(chart.weights, rho, y)));
    return out;
}

BallBoxCalibration ball_box_calibrate(const SRStructure& s, const PrivilegedChart& chart,
                                      const std::vector<Eigen::VectorXd>& samples, const DistanceBudget& budget)
{
    if (samples.empty()) throw InputError("ball_box_calibrate: no samples");
    DistanceSolver solver(s);
    BallBoxCalibration out;
    out.samples.resize(samples.size());
    parallel_for(samples.size(), [&](std::size_t k) {
        auto& smp = out.samples[k];
        smp.q = samples[k];
        smp.pseudo_norm = pseudo_norm(chart.weights, chart.apply(samples[k]));
        smp.upper = solver.estimate(chart.base, samples[k], budget).upper;
        if (smp.pseudo_norm > 0 && smp.upper > 0) {
            smp.ratio_upper = smp.upper / smp.pseudo_norm;
            smp.ratio_lower = smp.pseudo_norm / smp.upper;
        }
    });
    for (const auto& smp : out.samples) {
        out.C_est = std::max({out.C_est, smp.ratio_upper, smp.ratio_lower});
        out.eps_est = std::max(out.eps_est, smp.upper);
    }
    return out;
}

}  // namespace subrie
