// Acceptance run: one PASS/FAIL line per criterion, with the measured quantities and runtime.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "subrie/distance.hpp"
#include "subrie/endpoint.hpp"
#include "subrie/lift.hpp"
#include "subrie/random.hpp"
#include "subrie/whitney.hpp"
#include "support.hpp"

using namespace subrie;
using testing::vec;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double limit_s;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// 1 -------------------------------------------------------------------------------------------

Outcome exact_algebra()
{
    auto s = step3alpha(Rational(-1));
    const auto& X1 = s.frame[0];
    const auto& X2 = s.frame[1];
    const auto& X3 = s.frame[2];
    auto W1 = parse_field("dx4 + x1 dx6", 6);
    auto W2 = parse_field("dx5 - x2 dx6", 6);
    auto Z = parse_field("dx6", 6);
    const Rational alpha(-1);
    int ok = 0, total = 0;
    auto rel = [&](bool b) {
        ++total;
        ok += b ? 1 : 0;
    };
    rel(lie_bracket(X1, X3) == W1);
    rel(lie_bracket(X2, X3) == W2);
    rel(lie_bracket(X1, X2).is_zero());
    rel(lie_bracket(X1, W2).is_zero());
    rel(lie_bracket(X2, W1).is_zero());
    rel(lie_bracket(X1, W1) == Z);
    rel(lie_bracket(X2, W2) == alpha * Z);
    rel(lie_bracket(X3, W1).is_zero());
    rel(lie_bracket(X3, W2).is_zero());
    bool deeper = true;
    for (const auto& X : s.frame) deeper = deeper && lie_bracket(X, Z).is_zero();
    rel(deeper);
    auto g = flag_at(s, Eigen::VectorXd::Zero(6)).growth_vector;
    const bool growth = g == std::vector<int>{3, 5, 6};
    return {ok == total && growth, std::to_string(ok) + "/" + std::to_string(total) + " relations, growth " +
                                       (growth ? "(3,5,6)" : "wrong")};
}

// 2 -------------------------------------------------------------------------------------------

Outcome lift_exact()
{
    auto chk = check_lift(heisenberg_to_grushin());
    return {chk.ok && chk.exact, std::string("exact=") + (chk.exact ? "yes" : "no") +
                                     " submersion=" + (chk.submersion ? "yes" : "no")};
}

// 3 -------------------------------------------------------------------------------------------

Outcome homogeneity()
{
    bool homogeneous = true;
    const std::vector<std::pair<SRStructure, Eigen::VectorXd>> pts{{heisenberg(), vec({0, 0, 0})},
                                                                   {heisenberg(), vec({0.3, -0.2, 0.5})},
                                                                   {grushin(), vec({1, 0})},
                                                                   {grushin(), vec({0, 0})}};
    for (const auto& [s, p] : pts) {
        auto chart = privileged_chart(s, p);
        auto nf = nilpotentize(s, chart);
        for (const auto& X : nf.fields)
            for (const Rational lambda : {Rational(2), Rational(1, 2), Rational(1, 16)})
                homogeneous = homogeneous && rescale_field(X, chart.weights, lambda) == X;
    }
    auto g = grushin();
    auto chart = privileged_chart(g, vec({1, 0}));
    auto t = check_convergence(g, chart, nilpotentize(g, chart), {1.0, 0.5, 0.25, 0.125, 0.0625});
    const double slope = t.slope.value_or(0.0);
    return {homogeneous && slope >= 0.9,
            std::string("homogeneous=") + (homogeneous ? "yes" : "no") + " grushin(1,0) slope " + fmt("%.3f", slope)};
}

// 4 -------------------------------------------------------------------------------------------

Outcome differential()
{
    auto rng = rng_stream(4, 0);
    std::uniform_real_distribution<double> U(-1, 1);
    std::uniform_int_distribution<int> Nd(1, 8);
    double worst = 0.0;
    int trials = 0;
    for (const auto& s : {heisenberg(), step3alpha(Rational(-1))})
        for (int trial = 0; trial < 20; ++trial) {
            const int N = Nd(rng);
            Eigen::VectorXd u(s.rank());
            for (int i = 0; i < s.rank(); ++i) u[i] = U(rng);
            auto prob = EndpointProblem::from_structure(s, Eigen::VectorXd::Zero(s.dim), u, N);
            Eigen::MatrixXd c(N, s.rank());
            for (int k = 0; k < N; ++k)
                for (int i = 0; i < s.rank(); ++i) c(k, i) = 0.5 * U(rng);
            FlowOptions o;
            o.rtol = o.atol = 1e-12;
            Eigen::MatrixXd D = endpoint_differential(prob, c, o);
            Eigen::MatrixXd fd(D.rows(), D.cols());
            const double h = 1e-6;
            for (int i = 0; i < s.rank(); ++i)
                for (int k = 0; k < N; ++k) {
                    Eigen::MatrixXd cp = c, cm = c;
                    cp(k, i) += h;
                    cm(k, i) -= h;
                    fd.col(i * N + k) = (endpoint_map(prob, cp, o).stacked() - endpoint_map(prob, cm, o).stacked()) / (2 * h);
                }
            worst = std::max(worst, (D - fd).norm() / D.norm());
            ++trials;
        }
    return {worst < 1e-5, std::to_string(trials) + " trials, worst relative error " + fmt("%.2e", worst)};
}

// 5 -------------------------------------------------------------------------------------------

Outcome pliability()
{
    std::ostringstream os;
    bool pass = true;
    PliabilityOptions po;
    auto check_cert = [&](const SRStructure& s, const Eigen::VectorXd& u, const std::string& label) {
        auto cert = strong_pliability_search(EndpointProblem::from_structure(s, Eigen::VectorXd::Zero(s.dim), u), po);
        const bool ok = cert.verdict == PliabilityVerdict::Submersion && cert.sigma_ratio > 1e-6 &&
                        cert.sup_norm < 0.1 && cert.residual < 1e-9;
        pass = pass && ok;
        os << label << ": ratio " << fmt("%.2e", cert.sigma_ratio) << " sup " << fmt("%.3f", cert.sup_norm)
           << " res " << fmt("%.1e", cert.residual) << "; ";
    };
    check_cert(heisenberg(), vec({1, 0}), "heisenberg");
    auto s = step3alpha(Rational(-1));
    check_cert(s, vec({0, 0, 1}), "step3alpha");

    auto nf = nilpotentize(s, privileged_chart(s, Eigen::VectorXd::Zero(6)));
    const bool span_a = goh_spanning_check(nf, vec({1, 0, 0})).spanning;
    const bool span_b = goh_spanning_check(nf, vec({0, 0, 1})).spanning;
    auto sp = step3alpha(Rational(1));
    auto nfp = nilpotentize(sp, privileged_chart(sp, Eigen::VectorXd::Zero(6)));
    const bool cone_neg = cone_condition(nf, vec({0, 0, 1}), 64, 1).full;
    const bool cone_pos = cone_condition(nfp, vec({0, 0, 1}), 64, 1).full;
    pass = pass && span_a && !span_b && cone_neg && !cone_pos;
    os << "goh_spanning " << span_a << "/" << span_b << " cone " << cone_neg << "/" << cone_pos;
    return {pass, os.str()};
}

// 6 -------------------------------------------------------------------------------------------

Outcome distances()
{
    auto h = heisenberg();
    const double d1 = estimate_dsr(h, Eigen::VectorXd::Zero(3), vec({1, 0, 0})).upper;
    const double d2 = estimate_dsr(h, Eigen::VectorXd::Zero(3), vec({0, 0, 1})).upper;
    const double iso = 2 * std::sqrt(std::numbers::pi);
    // 1e-12 absorbs the roundoff of a length computed in floating point
    const bool ok1 = d1 >= 1.0 - 1e-12 && d1 <= 1.001;
    const bool ok2 = d2 >= iso - 1e-12 && d2 <= iso + 0.01;
    return {ok1 && ok2, "d(0,e1) " + fmt("%.12f", d1) + ", d(0,e3) " + fmt("%.10f", d2) + " (2 sqrt(pi) " +
                            fmt("%.10f", iso) + ")"};
}

// 7 -------------------------------------------------------------------------------------------

Outcome whitney_soundness()
{
    auto h = heisenberg();
    auto d = testing::sample_curve(h, testing::slow_rotation(1e-4), Eigen::VectorXd::Zero(3), testing::cantor(5, 0.2));
    auto bad = d;
    bad.points[20][2] += 0.05;

    auto both = verify_direct(h, d, Direction::Both);
    auto fwd = verify_direct(h, d, Direction::Forward);
    auto bwd = verify_direct(h, d, Direction::Backward);
    auto dil_f = verify_dilation(h, d, Direction::Forward);
    auto dil_b = verify_dilation(h, d, Direction::Backward);
    auto rej = verify_direct(h, bad, Direction::Both);

    Eigen::MatrixXd r = testing::rotation2(0.9);
    auto gh = apply_gauge(h, constant_gauge(3, r));
    auto rotate = [&](WhitneyData x) {
        for (auto& u : x.controls) u = r * u;
        return x;
    };
    auto g_both = verify_direct(gh, rotate(d), Direction::Both);
    auto g_rej = verify_direct(gh, rotate(bad), Direction::Both);

    const bool pass = d.size() == 64 && both.verdict == Verdict::Accept && fwd.verdict == Verdict::Accept &&
                      bwd.verdict == Verdict::Accept && dil_f.verdict == Verdict::Accept &&
                      dil_b.verdict == Verdict::Accept && rej.verdict == Verdict::Reject &&
                      g_both.verdict == both.verdict && g_rej.verdict == rej.verdict;
    std::ostringstream os;
    os << "|K|=" << d.size() << " both " << to_string(both.verdict) << " (beta "
       << (both.beta ? fmt("%.2f", *both.beta) : std::string("-")) << ") fwd " << to_string(fwd.verdict) << " bwd "
       << to_string(bwd.verdict) << " dilation " << to_string(dil_f.verdict) << "/" << to_string(dil_b.verdict)
       << "; perturbed " << to_string(rej.verdict) << "; gauged " << to_string(g_both.verdict) << "/"
       << to_string(g_rej.verdict);
    return {pass, os.str()};
}

// 8 -------------------------------------------------------------------------------------------

Outcome extension()
{
    auto h = heisenberg();
    auto d = testing::sample_curve(h, testing::slow_rotation(1e-4), Eigen::VectorXd::Zero(3), testing::cantor(4, 0.2));
    // add a wide gap with a loop so that some gap needs a genuine correction
    WhitneyData loop;
    loop.times = {0.0, 1.0};
    loop.points = {vec({0, 0, 0}), vec({0, 0, 1})};
    loop.controls = {vec({1, 0}), vec({1, 0})};

    double interp = 0.0, jump = 0.0;
    bool reverify = true;
    for (const auto& data : {d, loop}) {
        auto ext = extend(h, data);
        interp = std::max(interp, ext.max_interp_error);
        jump = std::max(jump, ext.max_junction_jump);
        auto back = ext.restrict_to(data.times);
        reverify = reverify && verify_direct(h, back, Direction::Both).verdict == Verdict::Accept;
    }
    return {interp < 1e-6 && jump < 1e-8 && reverify, "max point error " + fmt("%.1e", interp) + ", max jump " +
                                                          fmt("%.1e", jump) + ", re-verify " +
                                                          (reverify ? "accept" : "not accept")};
}

// 9 -------------------------------------------------------------------------------------------

Outcome lusin_selection()
{
    auto h = heisenberg();
    Eigen::MatrixXd vals(3, 2);
    vals << 1, 0, 0, 1, 0, 1;
    auto u = Control::sampled(0, 1, vals, Control::Interp::Hold);
    auto r = lusin(h, u, Eigen::VectorXd::Zero(3), 0.1);
    FlowOptions fo;
    fo.rtol = fo.atol = 1e-12;
    auto gamma = chron_exp(h, u, Eigen::VectorXd::Zero(3), fo);
    double err = 0.0;
    for (double t : r.kept.times) err = std::max(err, (r.extension.trajectory.at(t) - gamma.at(t)).norm());
    return {r.kept_measure >= 0.9 && err < 1e-6,
            "kept measure " + fmt("%.4f", r.kept_measure) + ", max deviation on K " + fmt("%.1e", err)};
}

// 10 ------------------------------------------------------------------------------------------

Outcome variation_and_series()
{
    auto h = heisenberg();
    Eigen::MatrixXd v(2, 1);
    v << 0.0, 1.0;
    auto vc = variation_check(h.frame[0], {h.frame[1]}, Control::sampled(0, 1, v), Eigen::VectorXd::Zero(3), 1.0);

    double exact_err = 0.0;
    for (const auto& s : {heisenberg(), engel(), step3alpha(Rational(-1))}) {
        auto nf = nilpotentize(s, privileged_chart(s, Eigen::VectorXd::Zero(s.dim)));
        Eigen::VectorXd q = Eigen::VectorXd::Constant(s.dim, 0.2);
        for (int i = 0; i < nf.rank(); ++i)
            for (int j = 0; j < nf.rank(); ++j) {
                if (i == j) continue;
                const auto& X = nf.fields[static_cast<std::size_t>(i)];
                const auto& Y = nf.fields[static_cast<std::size_t>(j)];
                auto ad = ad_series(X, Y, Rational(1, 2), nf.step());
                exact_err = std::max(exact_err, (ad.truncation.evaluate(q) - numeric_pushforward(X, Y, 0.5, q)).norm());
            }
    }

    auto X = parse_field("x2 dx1 + x1 dx2", 2);
    auto Y = parse_field("dx1 + x1^2 dx2", 2);
    Eigen::VectorXd q = vec({0.3, 0.1});
    double worst_dev = 0.0;
    std::ostringstream slopes;
    for (int N : {1, 2, 3, 4}) {
        std::vector<double> sig, err;
        for (double s : {0.2, 0.1, 0.05, 0.025}) {
            auto ad = ad_series(X, Y, to_rational(s), N);
            sig.push_back(s);
            err.push_back((ad.truncation.evaluate(q) - numeric_pushforward(X, Y, s, q)).norm());
        }
        const double slope = loglog_slope(sig, err).value_or(0.0);
        worst_dev = std::max(worst_dev, std::abs(slope - N));
        slopes << (N > 1 ? "," : "") << fmt("%.2f", slope);
    }
    return {vc.residual < 1e-7 && exact_err < 1e-6 && worst_dev <= 0.2,
            "variation residual " + fmt("%.1e", vc.residual) + ", series at N=step " + fmt("%.1e", exact_err) +
                ", remainder slopes (N=1..4) " + slopes.str()};
}

// 11 ------------------------------------------------------------------------------------------

Outcome singular_route()
{
    auto ls = heisenberg_to_grushin();
    auto d = testing::sample_curve(ls.downstairs, testing::slow_rotation(1e-4), vec({-0.5, 0.1}), testing::cantor(5, 0.2));
    bool crosses = d.points.front()[0] < 0 && d.points.back()[0] > 0;
    auto lifted = lift_whitney_data(ls, d);
    auto up = verify_direct(ls.upstairs, lifted.upstairs, Direction::Both);
    double proj = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k)
        proj = std::max(proj, (ls.apply(lifted.upstairs.points[k]) - d.points[k]).norm());
    return {crosses && up.verdict == Verdict::Accept && proj < 1e-6,
            "|K|=" + std::to_string(d.size()) + " crosses x=0: " + (crosses ? "yes" : "no") + ", upstairs " +
                to_string(up.verdict) + ", projection error " + fmt("%.1e", proj)};
}

}  // namespace

int main()
{
    const std::vector<Criterion> criteria{
        {1, "exact bracket algebra of the step-3 example", 1, exact_algebra},
        {2, "heisenberg->grushin lift is exact", 1, lift_exact},
        {3, "nilpotent homogeneity and convergence", 10, homogeneity},
        {4, "endpoint differential vs finite differences", 30, differential},
        {5, "strong-pliability certificates and conditions", 120, pliability},
        {6, "heisenberg distances", 60, distances},
        {7, "whitney verifier soundness", 180, whitney_soundness},
        {8, "extension round-trip", 120, extension},
        {9, "lusin selection", 120, lusin_selection},
        {10, "variation of constants and ad-series", 30, variation_and_series},
        {11, "singular-manifold route via lift", 180, singular_route},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs < c.limit_s;
        const bool pass = o.pass && in_time;
        failed += pass ? 0 : 1;
        std::printf("%s  %2d  %-48s %7.2fs (limit %gs)%s  %s\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(), secs,
                    c.limit_s, in_time ? "" : " OVER TIME", o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
