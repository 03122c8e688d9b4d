#include "subrie/whitney.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "subrie/linalg.hpp"
#include "subrie/nilpotent.hpp"
#include "subrie/parallel.hpp"
#include "subrie/random.hpp"

namespace subrie {

namespace {

FlowOptions tight(double tol, bool dense = false)
{
    FlowOptions o;
    o.rtol = o.atol = tol;
    o.dense = dense;
    return o;
}

std::vector<DefectBucket> bucketize(const std::vector<std::pair<double, std::pair<double, double>>>& items)
{
    // items: (gap, (value, lower))
    std::map<int, DefectBucket> by;
    for (const auto& [gap, vals] : items) {
        if (!(gap > 0)) continue;
        const int k = static_cast<int>(std::floor(std::log2(gap)));
        auto& b = by[k];
        b.gap_lo = std::ldexp(1.0, k);
        b.gap_hi = std::ldexp(1.0, k + 1);
        ++b.count;
        b.sup_defect = std::max(b.sup_defect, vals.first);
        b.sup_lower = std::max(b.sup_lower, vals.second);
    }
    std::vector<DefectBucket> out;
    for (auto& [k, b] : by) out.push_back(b);
    return out;
}

std::optional<double> bucket_slope(const std::vector<DefectBucket>& buckets, double floor)
{
    std::vector<double> xs, ys;
    for (const auto& b : buckets) {
        xs.push_back(b.gap_hi);
        ys.push_back(b.sup_defect);
    }
    return loglog_slope(xs, ys, floor);
}

}  // namespace

// --- data -----------------------------------------------------------------------------------

void WhitneyData::validate(const SRStructure& s) const
{
    if (points.size() != times.size() || controls.size() != times.size())
        throw InputError("whitney data: times, points and controls differ in length");
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (!std::isfinite(times[k])) throw InputError("whitney data: non-finite time");
        if (k > 0 && !(times[k] > times[k - 1])) throw InputError("whitney data: times must be strictly increasing");
        if (points[k].size() != s.dim) throw InputError("whitney data: point has wrong dimension");
        if (controls[k].size() != s.rank()) throw InputError("whitney data: control has wrong dimension");
        if (!points[k].allFinite() || !controls[k].allFinite()) throw InputError("whitney data: non-finite values");
        s.require_in_domain(points[k], "whitney data");
    }
}

WhitneyData WhitneyData::subset(const std::vector<std::size_t>& indices) const
{
    WhitneyData out;
    for (auto i : indices) {
        if (i >= times.size()) throw InputError("whitney data: subset index out of range");
        out.times.push_back(times[i]);
        out.points.push_back(points[i]);
        out.controls.push_back(controls[i]);
    }
    return out;
}

std::string to_string(Direction d)
{
    switch (d) {
    case Direction::Both: return "both";
    case Direction::Forward: return "forward";
    case Direction::Backward: return "backward";
    }
    return "both";
}

std::string to_string(Verdict v)
{
    switch (v) {
    case Verdict::Accept: return "accept";
    case Verdict::Reject: return "reject";
    case Verdict::Inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

Direction parse_direction(const std::string& text)
{
    if (text == "both") return Direction::Both;
    if (text == "forward") return Direction::Forward;
    if (text == "backward") return Direction::Backward;
    throw InputError("unknown direction '" + text + "' (expected both, forward or backward)");
}

// --- direct verification -------------------------------------------------------------------

ModulusReport verify_direct(const SRStructure& s, const WhitneyData& data, Direction direction,
                            const WhitneyOptions& opts)
{
    if (data.empty()) throw InputError("verify_direct: empty data");
    data.validate(s);
    ModulusReport rep;
    rep.direction = direction;
    rep.thresholds = opts.thresholds;
    const auto n = data.size();
    const double diam = data.times.back() - data.times.front();
    rep.h_max = opts.h_max.value_or(diam / 4.0);

    std::vector<PairDefect> pairs;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double gap = data.times[j] - data.times[i];
            if (gap > rep.h_max * (1 + 1e-12)) break;
            if (direction != Direction::Backward) pairs.push_back({i, j, gap});
            if (direction != Direction::Forward) pairs.push_back({j, i, gap});
        }
    rep.pairs_total = pairs.size();
    if (pairs.size() > opts.pair_cap) {
        auto gen = rng_stream(opts.seed, 0);
        std::shuffle(pairs.begin(), pairs.end(), gen);
        pairs.resize(opts.pair_cap);
        std::sort(pairs.begin(), pairs.end(), [](const PairDefect& a, const PairDefect& b) {
            return std::tie(a.s, a.t) < std::tie(b.s, b.t);
        });
    }

    DistanceSolver solver(s);
    const auto fo = tight(1e-12);
    parallel_for(pairs.size(), [&](std::size_t k) {
        auto& pd = pairs[k];
        const double dt = data.times[pd.t] - data.times[pd.s];
        const Eigen::VectorXd& ft = data.points[pd.t];
        try {
            const Eigen::VectorXd z = flow_const(s, data.controls[pd.s], dt, data.points[pd.s], fo);
            if ((z - ft).lpNorm<Eigen::Infinity>() < 1e-14) return;
            pd.lower = solver.lower_proxy(ft, z) / pd.gap;
            pd.defect = solver.estimate(ft, z, opts.budget).upper / pd.gap;
        } catch (const NumericalError&) {
            pd.skipped = true;
        }
    });

    std::vector<std::pair<double, std::pair<double, double>>> items;
    for (const auto& pd : pairs) {
        if (pd.skipped) {
            ++rep.pairs_skipped;
            continue;
        }
        ++rep.pairs_evaluated;
        items.push_back({pd.gap, {pd.defect, pd.lower}});
        if (!rep.worst || pd.lower > rep.max_lower) {
            rep.max_lower = pd.lower;
            rep.worst = pd;
        }
    }
    rep.buckets = bucketize(items);
    rep.beta = bucket_slope(rep.buckets, opts.thresholds.noise_floor);

    const auto& th = opts.thresholds;
    bool all_floor = true;
    for (const auto& b : rep.buckets)
        if (b.sup_defect > th.noise_floor) all_floor = false;
    std::ostringstream why;
    if (rep.max_lower > th.Theta) {
        rep.verdict = Verdict::Reject;
        why << "lower proxy of the defect reaches " << rep.max_lower << " > Theta=" << th.Theta;
    } else if (rep.pairs_total == 0) {
        rep.verdict = Verdict::Accept;
        why << "no pairs within h_max; condition holds vacuously";
    } else if (rep.pairs_skipped > 0) {
        rep.verdict = Verdict::Inconclusive;
        why << rep.pairs_skipped << " pair(s) skipped after distance-estimation failure";
    } else if (all_floor) {
        rep.verdict = Verdict::Accept;
        why << "all defects below the noise floor " << th.noise_floor;
    } else if (rep.beta && *rep.beta > th.beta_min && rep.buckets.front().sup_defect < th.theta) {
        rep.verdict = Verdict::Accept;
        why << "defect decays with exponent " << *rep.beta << " and smallest-gap sup " << rep.buckets.front().sup_defect;
    } else {
        rep.verdict = Verdict::Inconclusive;
        why << "decay not established (beta=" << (rep.beta ? std::to_string(*rep.beta) : std::string("n/a"))
            << ", smallest-gap sup=" << (rep.buckets.empty() ? 0.0 : rep.buckets.front().sup_defect) << ")";
    }
    rep.reason = why.str();

    if (opts.resolution_check && n >= 4) {
        std::vector<std::size_t> even;
        for (std::size_t i = 0; i < n; i += 2) even.push_back(i);
        WhitneyOptions half = opts;
        half.resolution_check = false;
        half.h_max = rep.h_max;
        rep.half_resolution = verify_direct(s, data.subset(even), direction, half).verdict;
    }
    return rep;
}

// --- dilation form -------------------------------------------------------------------------

DilationReport verify_dilation(const SRStructure& s, const WhitneyData& data, Direction direction, double slope_min,
                               double small_tol)
{
    if (data.empty()) throw InputError("verify_dilation: empty data");
    if (direction == Direction::Both) throw InputError("verify_dilation: choose forward or backward");
    data.validate(s);
    const auto n = data.size();
    for (std::size_t k = 0; k < n; ++k) {
        auto fr = flag_at(s, data.points[k]);
        if (!fr.regular) {
            std::ostringstream os;
            os << "verify_dilation: data point " << k << " is not a regular point; lift the data to an equiregular "
               << "structure first (lift lift-data)";
            throw InputError(os.str());
        }
    }
    DilationReport rep;
    rep.direction = direction;
    rep.slope_min = slope_min;
    rep.small_tol = small_tol;
    if (n < 2) {
        rep.verdict = Verdict::Accept;
        rep.reason = "single point; nothing to compare";
        return rep;
    }
    rep.rows.resize(n - 1);
    const auto fo = tight(1e-12);
    parallel_for(n - 1, [&](std::size_t i) {
        const bool fwd = direction == Direction::Forward;
        const std::size_t base = fwd ? i + 1 : i, other = fwd ? i : i + 1;
        const double gap = data.times[i + 1] - data.times[i];
        auto chart = privileged_chart(s, data.points[base]);
        auto nf = nilpotentize(s, chart);
        const Eigen::VectorXd y = dilate(chart.weights, 1.0 / gap, chart.apply(data.points[other]));
        const Eigen::VectorXd target = flow_const(NumericFrame(nf.fields), data.controls[base], fwd ? -1.0 : 1.0,
                                                  Eigen::VectorXd::Zero(s.dim), fo);
        rep.rows[i] = {data.times[base], gap, (y - target).norm()};
    });
    std::vector<std::pair<double, std::pair<double, double>>> items;
    double worst = 0.0;
    for (const auto& r : rep.rows) {
        items.push_back({r.gap, {r.discrepancy, 0.0}});
        worst = std::max(worst, r.discrepancy);
    }
    rep.buckets = bucketize(items);
    rep.slope = bucket_slope(rep.buckets, 1e-12);
    std::ostringstream why;
    if (worst < 1e-9) {
        rep.verdict = Verdict::Accept;
        why << "discrepancies vanish to chart precision";
    } else if (rep.slope && *rep.slope > slope_min && rep.buckets.front().sup_defect < small_tol) {
        rep.verdict = Verdict::Accept;
        why << "discrepancy decays with slope " << *rep.slope;
    } else {
        rep.verdict = Verdict::Inconclusive;
        why << "no decay established (slope=" << (rep.slope ? std::to_string(*rep.slope) : std::string("n/a")) << ")";
    }
    rep.reason = why.str();
    return rep;
}

// --- extension -----------------------------------------------------------------------------

std::vector<double> default_eta_schedule(double gap, double du_norm)
{
    std::vector<double> out;
    double eta = gap * du_norm + 0.01;
    for (int k = 0; k <= 5 || eta < 64.0; ++k, eta *= 2.0) out.push_back(eta);
    return out;
}

namespace {

struct GapCandidate {
    bool ok = false;
    Eigen::MatrixXd coeffs;
    double sup = 0.0;
    double err = std::numeric_limits<double>::infinity();
};

GapCandidate shoot_gap(const NumericFrame& F, double a, double b, const Eigen::VectorXd& fa, const Eigen::VectorXd& fb,
                       const Eigen::VectorXd& ua, const Eigen::VectorXd& du, int N, const Eigen::MatrixXd& start,
                       const ExtendOptions& opts)
{
    const int d = F.dim(), m = F.rank();
    LinearControlFamily fam;
    fam.basis.kind = ScalarBasis::Kind::Sine;
    fam.basis.n = N;
    fam.basis.t0 = a;
    fam.basis.t1 = b;
    fam.offset = ua;
    const auto fo = tight(opts.integration_tol);
    Eigen::MatrixXd C = start;
    C.row(0) = du.transpose();
    std::vector<int> free_cols;
    for (int i = 0; i < m; ++i)
        for (int k = 1; k < N; ++k) free_cols.push_back(i * N + k);

    GapCandidate out;
    auto sens = endpoint_sensitivity(F, fam, C, fa, fo);
    Eigen::VectorXd G = sens.end_point - fb;
    double gn = G.norm();
    for (int it = 0; it < opts.newton_iterations && gn >= 1e-11; ++it) {
        Eigen::MatrixXd Jf(d, static_cast<Eigen::Index>(free_cols.size()));
        for (std::size_t k = 0; k < free_cols.size(); ++k) Jf.col(static_cast<Eigen::Index>(k)) = sens.jacobian.col(free_cols[k]);
        const Eigen::VectorXd step = min_norm_solve(Jf, G);
        bool improved = false;
        for (double lam = 1.0; lam > 1e-3; lam *= 0.5) {
            Eigen::MatrixXd Cn = C;
            for (std::size_t k = 0; k < free_cols.size(); ++k)
                Cn(free_cols[k] % N, free_cols[k] / N) -= lam * step[static_cast<Eigen::Index>(k)];
            Sensitivity sn;
            try {
                sn = endpoint_sensitivity(F, fam, Cn, fa, fo);
            } catch (const NumericalError&) {
                continue;
            }
            const Eigen::VectorXd Gn = sn.end_point - fb;
            if (Gn.allFinite() && Gn.norm() < gn) {
                C = std::move(Cn);
                sens = std::move(sn);
                G = Gn;
                gn = Gn.norm();
                improved = true;
                break;
            }
        }
        if (!improved) break;
    }
    out.coeffs = C;
    out.err = gn;
    out.ok = gn < 1e-9;
    out.sup = fam.to_control(C).sup_norm(false);
    return out;
}

}  // namespace

ExtensionResult extend(const SRStructure& s, const WhitneyData& data, const ExtendOptions& opts)
{
    if (data.empty()) throw InputError("extend: empty data");
    if (opts.N_schedule.empty() || opts.restarts < 1) throw InputError("extend: empty N schedule or no restarts");
    data.validate(s);
    const auto n = data.size();
    const int m = s.rank();
    const NumericFrame F(s.frame);

    ExtensionResult res;
    res.gaps.resize(n - 1);
    std::vector<Eigen::MatrixXd> coeffs(n - 1);
    parallel_for(n - 1, [&](std::size_t g) {
        const double a = data.times[g], b = data.times[g + 1];
        const Eigen::VectorXd& ua = data.controls[g];
        const Eigen::VectorXd du = data.controls[g + 1] - ua;
        auto& diag = res.gaps[g];
        diag.a = a;
        diag.b = b;
        const auto etas = opts.eta_schedule.empty() ? default_eta_schedule(b - a, du.norm()) : opts.eta_schedule;
        std::map<std::pair<int, int>, GapCandidate> cache;
        double best_err = std::numeric_limits<double>::infinity();
        for (double eta : etas) {
            for (int N : opts.N_schedule) {
                if (N < 2) continue;
                for (int r = 0; r < opts.restarts; ++r) {
                    auto key = std::make_pair(N, r);
                    auto it = cache.find(key);
                    if (it == cache.end()) {
                        Eigen::MatrixXd start = Eigen::MatrixXd::Zero(N, m);
                        if (r > 0) {
                            auto gen = rng_stream(opts.seed, g * 4096 + static_cast<std::size_t>(N) * 64 + static_cast<std::size_t>(r));
                            std::uniform_real_distribution<double> U(-1.0, 1.0);
                            const double amp = std::ldexp(etas.front(), r);
                            for (int i = 0; i < m; ++i)
                                for (int k = 1; k < N; ++k) start(k, i) = amp * U(gen) / k;
                        }
                        GapCandidate c;
                        try {
                            c = shoot_gap(F, a, b, data.points[g], data.points[g + 1], ua, du, N, start, opts);
                        } catch (const NumericalError&) {
                        }
                        it = cache.emplace(key, std::move(c)).first;
                    }
                    const auto& c = it->second;
                    best_err = std::min(best_err, c.err);
                    if (c.ok && c.sup <= eta) {
                        diag.solved = true;
                        diag.eta = eta;
                        diag.N = N;
                        diag.sup_norm = c.sup;
                        diag.endpoint_error = c.err;
                        coeffs[g] = c.coeffs;
                        return;
                    }
                }
            }
        }
        diag.endpoint_error = best_err;
    });
    for (const auto& g : res.gaps)
        if (!g.solved) {
            std::ostringstream os;
            os << "extend: gap [" << g.a << ", " << g.b << "] unsolved within the eta schedule (best endpoint residual "
               << g.endpoint_error << "); budget may be insufficient or the data may not extend";
            throw NumericalError(os.str());
        }

    // rays on the unbounded sides, shortened if they leave the domain
    const auto fo = tight(opts.integration_tol);
    double L = opts.ray_length;
    Eigen::VectorXd start_point;
    for (int tries = 0;; ++tries) {
        try {
            start_point = flow_const(s, data.controls.front(), -L, data.points.front(), fo);
            break;
        } catch (const DomainExitError&) {
            if (tries > 20) throw;
            L *= 0.5;
        }
    }
    double Lr = opts.ray_length;
    for (int tries = 0;; ++tries) {
        try {
            flow_const(s, data.controls.back(), Lr, data.points.back(), fo);
            break;
        } catch (const DomainExitError&) {
            if (tries > 20) throw;
            Lr *= 0.5;
        }
    }
    std::vector<Control> pieces;
    pieces.push_back(Control::constant(data.times.front() - L, data.times.front(), data.controls.front()));
    for (std::size_t g = 0; g + 1 < n; ++g)
        pieces.push_back(Control::basis(data.times[g], data.times[g + 1], coeffs[g], data.controls[g]));
    pieces.push_back(Control::constant(data.times.back(), data.times.back() + Lr, data.controls.back()));
    for (std::size_t k = 1; k + 1 < pieces.size(); ++k) {
        const double t = pieces[k].t1();
        res.max_junction_jump = std::max(res.max_junction_jump, (pieces[k].value(t) - pieces[k + 1].value(t)).norm());
    }
    res.max_junction_jump = std::max(res.max_junction_jump,
                                     (pieces[0].value(pieces[0].t1()) - pieces[1].value(pieces[1].t0())).norm());
    res.control = Control::piecewise(std::move(pieces));
    res.start_point = start_point;
    res.t_begin = res.control.t0();
    res.t_end = res.control.t1();
    res.trajectory = chron_exp(s, res.control, start_point, tight(opts.integration_tol, true));
    for (std::size_t k = 0; k < n; ++k)
        res.max_interp_error = std::max(res.max_interp_error, (res.trajectory.at(data.times[k]) - data.points[k]).norm());
    return res;
}

WhitneyData ExtensionResult::restrict_to(const std::vector<double>& times) const
{
    WhitneyData out;
    for (double t : times) {
        out.times.push_back(t);
        out.points.push_back(trajectory.at(t));
        out.controls.push_back(control.value(t));
    }
    return out;
}

// --- Lusin approximation ------------------------------------------------------------------

LusinResult lusin(const SRStructure& s, const Control& u_ac, const Eigen::VectorXd& p0, double eps,
                  const LusinOptions& opts)
{
    if (!(eps > 0)) throw InputError("lusin: eps must be positive");
    if (opts.grid < 2) throw InputError("lusin: grid needs at least two points");
    if (u_ac.rank() != s.rank()) throw InputError("lusin: control rank differs from the structure rank");
    const double a = u_ac.t0(), b = u_ac.t1(), len = b - a;
    const int n = opts.grid;
    const double dt = len / (n - 1);
    auto traj = chron_exp(s, u_ac, p0, tight(1e-12, true));

    LusinResult out;
    out.tau = opts.tau;
    std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(n)), us(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double t = a + dt * k;
        out.grid.push_back(t);
        pts[static_cast<std::size_t>(k)] = traj.at(t);
        us[static_cast<std::size_t>(k)] = u_ac.value(t);
    }

    DistanceSolver solver(s);
    std::map<std::pair<int, int>, double> cache;  // (grid index, dyadic exponent) -> f_h
    auto screen_level = [&](int e0) {
        std::vector<std::pair<int, int>> todo;
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < opts.h_levels; ++j) {
                const int e = e0 + j;
                const double h = std::ldexp(len, -e);
                if (out.grid[static_cast<std::size_t>(k)] + h > b + 1e-12 * len) continue;
                if (!cache.count({k, e})) todo.push_back({k, e});
            }
        std::vector<double> vals(todo.size());
        parallel_for(todo.size(), [&](std::size_t i) {
            const auto [k, e] = todo[i];
            const double h = std::ldexp(len, -e);
            const double t = out.grid[static_cast<std::size_t>(k)];
            const Eigen::VectorXd target = traj.at(std::min(b, t + h));
            const Eigen::VectorXd z = flow_const(s, us[static_cast<std::size_t>(k)], h, pts[static_cast<std::size_t>(k)], tight(1e-12));
            if ((z - target).lpNorm<Eigen::Infinity>() < 1e-14) {
                vals[i] = 0.0;
                return;
            }
            try {
                vals[i] = solver.estimate(target, z, opts.budget).upper / h;
            } catch (const NumericalError&) {
                vals[i] = std::numeric_limits<double>::infinity();  // unresolved: treat as a discard
            }
        });
        for (std::size_t i = 0; i < todo.size(); ++i) cache[todo[i]] = vals[i];
    };

    int e0 = std::max(0, static_cast<int>(std::ceil(-std::log2(opts.h0))));
    std::vector<bool> keep;
    for (;;) {
        if (std::ldexp(len, -e0) < dt * (1 - 1e-12)) {
            std::ostringstream os;
            os << "lusin: could not reach the measure target; kept measure " << out.kept_measure << " of " << len;
            throw NumericalError(os.str());
        }
        screen_level(e0);
        out.screen.assign(static_cast<std::size_t>(n), 0.0);
        keep.assign(static_cast<std::size_t>(n), true);
        out.kept_measure = 0.0;
        for (int k = 0; k < n; ++k) {
            double sup = 0.0;
            for (int j = 0; j < opts.h_levels; ++j) {
                auto it = cache.find({k, e0 + j});
                if (it != cache.end()) sup = std::max(sup, it->second);
            }
            out.screen[static_cast<std::size_t>(k)] = sup;
            keep[static_cast<std::size_t>(k)] = sup <= opts.tau;
            const double w = (k == 0 || k == n - 1) ? dt / 2 : dt;
            if (keep[static_cast<std::size_t>(k)]) out.kept_measure += w;
        }
        if (len - out.kept_measure < eps) break;
        ++e0;
    }
    out.h0 = std::ldexp(len, -e0);

    for (int k = 0; k < n; ++k)
        if (keep[static_cast<std::size_t>(k)]) {
            out.kept.times.push_back(out.grid[static_cast<std::size_t>(k)]);
            out.kept.points.push_back(pts[static_cast<std::size_t>(k)]);
            out.kept.controls.push_back(us[static_cast<std::size_t>(k)]);
        }
    if (out.kept.empty()) {
        auto& ext = out.extension;
        ext.control = Control::constant(a, b, Eigen::VectorXd::Zero(s.rank()));
        ext.start_point = p0;
        ext.t_begin = a;
        ext.t_end = b;
        ext.trajectory = chron_exp(s, ext.control, p0, tight(1e-12, true));
        return out;
    }
    out.extension = extend(s, out.kept, opts.extend);
    return out;
}

}  // namespace subrie
