#include "subrie/lift.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "subrie/linalg.hpp"
#include "subrie/parallel.hpp"

namespace subrie {

namespace {

std::string strip(const std::string& s)
{
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

FlowOptions tight(double tol, bool dense = false)
{
    FlowOptions o;
    o.rtol = o.atol = tol;
    o.dense = dense;
    return o;
}

void check_shapes(const LiftSpec& ls)
{
    if (ls.upstairs.rank() != ls.downstairs.rank()) throw InputError("lift: upstairs and downstairs ranks differ");
    if (static_cast<int>(ls.psi.size()) != ls.downstairs.dim)
        throw InputError("lift: psi must have one component per downstairs coordinate");
    for (const auto& p : ls.psi)
        if (p.dim() != ls.upstairs.dim) throw InputError("lift: psi components must use the upstairs variables");
}

}  // namespace

Eigen::VectorXd LiftSpec::apply(const Eigen::VectorXd& x) const
{
    if (x.size() != upstairs.dim) throw InputError("lift: point has wrong dimension");
    Eigen::VectorXd out(static_cast<Eigen::Index>(psi.size()));
    for (std::size_t j = 0; j < psi.size(); ++j) out[static_cast<Eigen::Index>(j)] = psi[j].evaluate(x);
    return out;
}

Eigen::MatrixXd LiftSpec::jacobian(const Eigen::VectorXd& x) const
{
    Eigen::MatrixXd J(static_cast<Eigen::Index>(psi.size()), upstairs.dim);
    for (std::size_t j = 0; j < psi.size(); ++j)
        for (int k = 0; k < upstairs.dim; ++k) J(static_cast<Eigen::Index>(j), k) = partial(psi[j], k).evaluate(x);
    return J;
}

LiftSpec heisenberg_to_grushin()
{
    LiftSpec ls;
    ls.name = "heisenberg->grushin";
    ls.upstairs = heisenberg();
    ls.downstairs = grushin();
    ls.psi = {parse_polynomial("x1", 3), parse_polynomial("x3 + 1/2*x1*x2", 3)};
    return ls;
}

LiftSpec identity_lift(const SRStructure& s)
{
    LiftSpec ls;
    ls.name = s.name + "->" + s.name;
    ls.upstairs = s;
    ls.downstairs = s;
    for (int j = 0; j < s.dim; ++j) ls.psi.push_back(Multinomial::variable(s.dim, j));
    return ls;
}

bool is_builtin_lift(const std::string& spec) { return strip(spec) == "heisenberg->grushin"; }

LiftSpec load_lift(const std::string& spec)
{
    if (is_builtin_lift(spec)) return heisenberg_to_grushin();
    std::ifstream in(spec);
    if (!in) throw InputError("'" + spec + "' is neither a built-in lift nor a readable file");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_lift(buf.str());
}

LiftSpec parse_lift(const std::string& text)
{
    std::map<std::string, std::string> blocks;
    std::map<int, std::string> psi_text;
    std::string name, section;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        std::string body = line;
        if (auto hash = body.find('#'); hash != std::string::npos) body = body.substr(0, hash);
        body = strip(body);
        if (body.empty()) continue;
        if (body.front() == '[' && body.back() == ']') {
            section = strip(body.substr(1, body.size() - 2));
            if (section != "upstairs" && section != "downstairs")
                throw InputError("lift line " + std::to_string(lineno) + ": unknown section '" + section + "'");
            continue;
        }
        const auto eq = body.find('=');
        const std::string key = eq == std::string::npos ? std::string() : strip(body.substr(0, eq));
        if (key.size() > 3 && key.compare(0, 3, "psi") == 0 &&
            std::all_of(key.begin() + 3, key.end(), [](unsigned char c) { return std::isdigit(c); })) {
            psi_text[std::stoi(key.substr(3))] = strip(body.substr(eq + 1));
            continue;
        }
        if (section.empty()) {
            if (key == "name") {
                name = strip(body.substr(eq + 1));
                continue;
            }
            throw InputError("lift line " + std::to_string(lineno) + ": expected a section header or psi<i> line");
        }
        blocks[section] += body + "\n";
    }
    auto structure_of = [&](const std::string& sec) {
        auto it = blocks.find(sec);
        if (it == blocks.end()) throw InputError("lift: missing [" + sec + "] section");
        const std::string& b = it->second;
        auto first = strip(b.substr(0, b.find('\n')));
        if (first.compare(0, 7, "builtin") == 0) {
            auto eq = first.find('=');
            if (eq == std::string::npos) throw InputError("lift: expected 'builtin = <name>'");
            return load_structure(strip(first.substr(eq + 1)));
        }
        return parse_structure(b);
    };
    LiftSpec ls;
    ls.upstairs = structure_of("upstairs");
    ls.downstairs = structure_of("downstairs");
    ls.name = name.empty() ? ls.upstairs.name + "->" + ls.downstairs.name : name;
    for (int j = 1; j <= ls.downstairs.dim; ++j) {
        auto it = psi_text.find(j);
        if (it == psi_text.end()) throw InputError("lift: missing psi" + std::to_string(j));
        ls.psi.push_back(parse_polynomial(it->second, ls.upstairs.dim));
    }
    if (static_cast<int>(psi_text.size()) != ls.downstairs.dim) throw InputError("lift: too many psi components");
    check_shapes(ls);
    return ls;
}

std::string to_text(const LiftSpec& ls)
{
    std::ostringstream os;
    os << "name = " << ls.name << "\n[upstairs]\n" << to_text(ls.upstairs) << "[downstairs]\n" << to_text(ls.downstairs);
    for (std::size_t j = 0; j < ls.psi.size(); ++j) os << "psi" << (j + 1) << " = " << to_string(ls.psi[j]) << "\n";
    return os.str();
}

LiftCheck check_lift(const LiftSpec& ls, int per_axis, double rank_tol)
{
    check_shapes(ls);
    LiftCheck out;
    out.exact = true;
    for (int i = 0; i < ls.upstairs.rank(); ++i) {
        const auto& Xt = ls.upstairs.frame[static_cast<std::size_t>(i)];
        const auto& X = ls.downstairs.frame[static_cast<std::size_t>(i)];
        std::vector<Multinomial> row;
        for (int j = 0; j < ls.downstairs.dim; ++j) {
            Multinomial r = apply(Xt, ls.psi[static_cast<std::size_t>(j)]) - compose(X[j], ls.psi);
            if (!r.is_zero()) out.exact = false;
            row.push_back(std::move(r));
        }
        out.residuals.push_back(std::move(row));
    }
    out.min_rank = ls.downstairs.dim;
    for (const auto& x : ls.upstairs.box_or_default().grid(per_axis))
        out.min_rank = std::min(out.min_rank, numeric_rank(ls.jacobian(x), rank_tol));
    out.submersion = out.min_rank == ls.downstairs.dim;
    out.ok = out.exact && out.submersion;
    return out;
}

Eigen::VectorXd minimal_preimage(const LiftSpec& ls, const Eigen::VectorXd& p)
{
    if (p.size() != ls.downstairs.dim) throw InputError("minimal_preimage: point has wrong dimension");
    Eigen::VectorXd x = Eigen::VectorXd::Zero(ls.upstairs.dim);
    for (int it = 0; it < 50; ++it) {
        const Eigen::VectorXd r = ls.apply(x) - p;
        if (r.norm() < 1e-14) break;
        x -= min_norm_solve(ls.jacobian(x), r);
    }
    if ((ls.apply(x) - p).norm() > 1e-10) throw NumericalError("minimal_preimage: no preimage found");
    return x;
}

LiftedData lift_whitney_data(const LiftSpec& ls, const WhitneyData& data, const std::optional<Eigen::VectorXd>& start,
                             const LiftDataOptions& opts)
{
    const auto chk = check_lift(ls);
    if (!chk.ok) throw InputError("lift_whitney_data: the lift check fails for '" + ls.name + "'");
    if (data.empty()) throw InputError("lift_whitney_data: empty data");
    data.validate(ls.downstairs);
    const auto n = data.size();
    LiftedData out;
    out.start = start ? *start : minimal_preimage(ls, data.points.front());
    if (out.start.size() != ls.upstairs.dim) throw InputError("lift_whitney_data: start point has wrong dimension");
    if ((ls.apply(out.start) - data.points.front()).norm() > opts.match_tol)
        throw InputError("lift_whitney_data: psi(start) does not match the first data point");

    const auto fo = tight(opts.integration_tol);
    DistanceSolver down(ls.downstairs);
    out.gaps.resize(n - 1);
    std::vector<Control> corrections(n - 1);
    parallel_for(n - 1, [&](std::size_t g) {
        auto& gl = out.gaps[g];
        gl.a = data.times[g];
        gl.b = data.times[g + 1];
        const Eigen::VectorXd z = flow_const(ls.downstairs, data.controls[g], gl.b - gl.a, data.points[g], fo);
        if ((z - data.points[g + 1]).lpNorm<Eigen::Infinity>() < 1e-14) return;
        try {
            auto est = down.estimate(z, data.points[g + 1], opts.budget);
            gl.defect = est.upper;
            corrections[g] = est.control;
        } catch (const NumericalError& e) {
            std::ostringstream os;
            os << "lift_whitney_data: correction on gap [" << gl.a << ", " << gl.b << "] failed: " << e.what();
            throw NumericalError(os.str());
        }
    });
    for (const auto& gl : out.gaps) out.M = std::max(out.M, 2.0 * gl.defect / (gl.b - gl.a));

    std::vector<Control> pieces;
    for (std::size_t g = 0; g + 1 < n; ++g) {
        auto& gl = out.gaps[g];
        const double h = gl.b - gl.a;
        const Eigen::VectorXd& ua = data.controls[g];
        if (gl.defect == 0.0) {
            pieces.push_back(Control::constant(gl.a, gl.b, ua));
            continue;
        }
        const double delta = gl.defect / out.M;  // <= h/2
        gl.sub_length = delta;
        pieces.push_back(Control::constant(gl.a, gl.b - delta, ua * (h / (h - delta))));
        const Control& c = corrections[g];
        Eigen::MatrixXd vals = c.data() / delta;
        for (Eigen::Index k = 0; k < vals.rows(); ++k) gl.correction_sup = std::max(gl.correction_sup, vals.row(k).norm());
        pieces.push_back(Control::sampled(gl.b - delta, gl.b, vals, c.interp()));
    }
    out.upstairs.times = data.times;
    out.upstairs.controls = data.controls;
    if (pieces.empty()) {
        out.control = Control::constant(data.times.front(), data.times.front(), data.controls.front());
        out.upstairs.points = {out.start};
    } else {
        out.control = Control::piecewise(std::move(pieces));
        auto traj = chron_exp(ls.upstairs, out.control, out.start, tight(opts.integration_tol, true));
        for (double t : data.times) out.upstairs.points.push_back(traj.at(t));
    }
    for (std::size_t k = 0; k < n; ++k)
        out.max_projection_error =
            std::max(out.max_projection_error, (ls.apply(out.upstairs.points[k]) - data.points[k]).norm());
    return out;
}

std::vector<Eigen::VectorXd> project_curve(const LiftSpec& ls, const std::vector<Eigen::VectorXd>& upstairs_points)
{
    std::vector<Eigen::VectorXd> out;
    out.reserve(upstairs_points.size());
    for (const auto& x : upstairs_points) out.push_back(ls.apply(x));
    return out;
}

ProjectionCheck project_distance_check(const LiftSpec& ls, const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                                       const DistanceBudget& budget)
{
    ProjectionCheck out;
    const Eigen::VectorXd pd = ls.apply(p), qd = ls.apply(q);
    out.d_up_upper = DistanceSolver(ls.upstairs).estimate(p, q, budget).upper;
    DistanceSolver down(ls.downstairs);
    out.d_down_upper = down.estimate(pd, qd, budget).upper;
    out.d_down_lower = (qd - pd).lpNorm<Eigen::Infinity>() < 1e-14 ? 0.0 : down.lower_proxy(pd, qd);
    out.violation = out.d_down_lower > out.d_up_upper;
    return out;
}

}  // namespace subrie
