#include "subrie/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace subrie {

namespace {

std::string strip(const std::string& s)
{
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(line);
    while (std::getline(ss, cur, sep)) out.push_back(strip(cur));
    if (!line.empty() && line.back() == sep) out.push_back({});
    return out;
}

double parse_number(const std::string& s, const std::string& where)
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw InputError(where + ": '" + s + "' is not a number");
    }
    if (used != s.size()) throw InputError(where + ": '" + s + "' is not a number");
    return v;
}

void expect_header(const CsvTable& t, const std::vector<std::string>& want, const std::string& what)
{
    if (t.header != want) {
        std::string w;
        for (std::size_t i = 0; i < want.size(); ++i) w += (i ? "," : "") + want[i];
        throw InputError(what + ": expected header '" + w + "'");
    }
}

std::vector<std::string> numbered(const std::string& prefix, int n)
{
    std::vector<std::string> out;
    for (int i = 1; i <= n; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

json poly_list(const std::vector<Multinomial>& ps)
{
    json a = json::array();
    for (const auto& p : ps) a.push_back(to_string(p));
    return a;
}

json frame_json(const Frame& f)
{
    json a = json::array();
    for (const auto& v : f) a.push_back(to_string(v));
    return a;
}

template <typename T>
json opt(const std::optional<T>& v)
{
    return v ? json(*v) : json(nullptr);
}

}  // namespace

// --- CSV ------------------------------------------------------------------------------------

std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvTable read_csv(std::istream& in)
{
    CsvTable t;
    std::string line;
    int lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (strip(line).empty()) continue;
        auto cells = split(line, ',');
        if (!have_header) {
            t.header = cells;
            have_header = true;
            continue;
        }
        if (cells.size() != t.header.size())
            throw InputError("csv line " + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                             " fields");
        std::vector<double> row;
        for (const auto& c : cells) row.push_back(parse_number(c, "csv line " + std::to_string(lineno)));
        t.rows.push_back(std::move(row));
    }
    if (!have_header) throw InputError("csv: missing header row");
    return t;
}

CsvTable read_csv_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot read '" + path + "'");
    return read_csv(in);
}

void write_csv(std::ostream& out, const CsvTable& t)
{
    for (std::size_t i = 0; i < t.header.size(); ++i) out << (i ? "," : "") << t.header[i];
    out << "\n";
    for (const auto& r : t.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << format_double(r[i]);
        out << "\n";
    }
}

void write_csv_file(const std::string& path, const CsvTable& t)
{
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path + "'");
    write_csv(out, t);
}

WhitneyData whitney_from_csv(const CsvTable& t, int dim, int rank)
{
    std::vector<std::string> want{"t"};
    for (auto& s : numbered("x", dim)) want.push_back(s);
    for (auto& s : numbered("u", rank)) want.push_back(s);
    expect_header(t, want, "whitney data");
    WhitneyData d;
    for (const auto& r : t.rows) {
        d.times.push_back(r[0]);
        d.points.push_back(Eigen::Map<const Eigen::VectorXd>(r.data() + 1, dim));
        d.controls.push_back(Eigen::Map<const Eigen::VectorXd>(r.data() + 1 + dim, rank));
    }
    return d;
}

CsvTable whitney_to_csv(const WhitneyData& data)
{
    CsvTable t;
    const int d = data.empty() ? 0 : static_cast<int>(data.points.front().size());
    const int m = data.empty() ? 0 : static_cast<int>(data.controls.front().size());
    t.header = {"t"};
    for (auto& s : numbered("x", d)) t.header.push_back(s);
    for (auto& s : numbered("u", m)) t.header.push_back(s);
    for (std::size_t k = 0; k < data.size(); ++k) {
        std::vector<double> row{data.times[k]};
        for (int i = 0; i < d; ++i) row.push_back(data.points[k][i]);
        for (int i = 0; i < m; ++i) row.push_back(data.controls[k][i]);
        t.rows.push_back(std::move(row));
    }
    return t;
}

Control control_from_csv(const CsvTable& t, Control::Interp interp)
{
    if (t.header.size() < 2 || t.header[0] != "t") throw InputError("control csv: expected header 't,u1,...,um'");
    const int m = static_cast<int>(t.header.size()) - 1;
    expect_header(t, [&] {
        std::vector<std::string> w{"t"};
        for (auto& s : numbered("u", m)) w.push_back(s);
        return w;
    }(), "control csv");
    if (t.rows.size() < 2) throw InputError("control csv: need at least two rows");
    const double t0 = t.rows.front()[0], t1 = t.rows.back()[0];
    const auto n = t.rows.size();
    if (!(t1 > t0)) throw InputError("control csv: times must increase");
    Eigen::MatrixXd vals(static_cast<Eigen::Index>(n), m);
    for (std::size_t k = 0; k < n; ++k) {
        const double expect = t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(n - 1);
        if (std::abs(t.rows[k][0] - expect) > 1e-9 * std::max(1.0, std::abs(t1 - t0)))
            throw InputError("control csv: times must form a uniform grid");
        for (int i = 0; i < m; ++i) vals(static_cast<Eigen::Index>(k), i) = t.rows[k][static_cast<std::size_t>(i) + 1];
    }
    return Control::sampled(t0, t1, vals, interp);
}

std::vector<double> uniform_times(double t0, double t1, int samples)
{
    std::vector<double> out;
    if (samples < 2) return {t0};
    for (int k = 0; k < samples; ++k) out.push_back(t0 + (t1 - t0) * k / (samples - 1));
    out.back() = t1;
    return out;
}

CsvTable control_to_csv(const Control& c, int samples)
{
    CsvTable t;
    t.header = {"t"};
    for (auto& s : numbered("u", c.rank())) t.header.push_back(s);
    auto push = [&](double tt, const Eigen::VectorXd& v) {
        std::vector<double> row{tt};
        for (Eigen::Index i = 0; i < v.size(); ++i) row.push_back(v[i]);
        t.rows.push_back(std::move(row));
    };
    if (c.kind() == Control::Kind::Sampled) {
        const auto n = c.data().rows();
        for (Eigen::Index k = 0; k < n; ++k) {
            const double tt = n == 1 ? c.t0() : c.t0() + (c.t1() - c.t0()) * static_cast<double>(k) / static_cast<double>(n - 1);
            push(tt, c.data().row(k).transpose());
        }
        return t;
    }
    for (double tt : uniform_times(c.t0(), c.t1(), samples)) push(tt, c.value(tt));
    return t;
}

CsvTable trajectory_to_csv(const Trajectory& traj, const std::vector<double>& times)
{
    CsvTable t;
    const int d = static_cast<int>(traj.end_point().size());
    t.header = {"t"};
    for (auto& s : numbered("x", d)) t.header.push_back(s);
    for (auto& s : numbered("u", traj.control.rank())) t.header.push_back(s);
    for (double tt : times) {
        std::vector<double> row{tt};
        const Eigen::VectorXd x = traj.at(tt), u = traj.control.value(tt);
        for (int i = 0; i < d; ++i) row.push_back(x[i]);
        for (Eigen::Index i = 0; i < u.size(); ++i) row.push_back(u[i]);
        t.rows.push_back(std::move(row));
    }
    return t;
}

Eigen::VectorXd parse_vector(const std::string& text)
{
    auto cells = split(text, ',');
    if (cells.empty() || (cells.size() == 1 && cells[0].empty())) throw InputError("empty vector '" + text + "'");
    Eigen::VectorXd v(static_cast<Eigen::Index>(cells.size()));
    for (std::size_t i = 0; i < cells.size(); ++i) v[static_cast<Eigen::Index>(i)] = parse_number(cells[i], "vector");
    return v;
}

// --- JSON -----------------------------------------------------------------------------------

json vector_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Eigen::VectorXd vector_from_json(const json& j)
{
    auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void to_json(json& j, const DistanceBudget& b)
{
    j = {{"knots", b.knots},
         {"starts", b.starts},
         {"max_outer", b.max_outer},
         {"max_inner", b.max_inner},
         {"endpoint_tol", b.endpoint_tol},
         {"integration_tol", b.integration_tol},
         {"seed", b.seed}};
}

void to_json(json& j, const WhitneyThresholds& t)
{
    j = {{"beta_min", t.beta_min}, {"theta", t.theta}, {"Theta", t.Theta}, {"noise_floor", t.noise_floor}};
}

void to_json(json& j, const RunConfig& c)
{
    j = {{"seed", c.seed},
         {"tolerances",
          {{"integration", c.integration_tol},
           {"rank", c.rank_tol},
           {"submersion", c.submersion_tol},
           {"residual", c.residual_tol},
           {"verdict", c.thresholds}}},
         {"budgets",
          {{"distance", c.distance},
           {"pair_distance", c.pair_distance},
           {"pliability_N", c.pliability_N},
           {"pliability_restarts", c.pliability_restarts},
           {"extend_N", c.extend_N},
           {"extend_restarts", c.extend_restarts},
           {"cone_samples", c.cone_samples}}},
         {"eta", c.eta},
         {"output_dir", c.output_dir}};
}

void to_json(json& j, const FlagReport& r)
{
    j = {{"point", vector_json(r.point)},
         {"growth_vector", r.growth_vector},
         {"weights", r.weights},
         {"step", r.step},
         {"regular", r.regular},
         {"regularity_label", r.regularity_label},
         {"rank_tol", r.rank_tol},
         {"probe_radius", r.probe_radius}};
}

void to_json(json& j, const RegularityMap& r)
{
    json sing = json::array();
    for (const auto& p : r.singular_points) sing.push_back(vector_json(p));
    j = {{"equiregular", r.equiregular}, {"singular_points", sing}, {"reports", r.reports}};
}

void to_json(json& j, const PrivilegedChart& c)
{
    json lin = json::array();
    for (const auto& row : c.provenance.linear_change) {
        json r = json::array();
        for (const auto& q : row) r.push_back(to_string(q));
        lin.push_back(r);
    }
    json base_exact = json::array();
    for (const auto& q : c.base_exact) base_exact.push_back(to_string(q));
    j = {{"base", vector_json(c.base)},
         {"base_exact", base_exact},
         {"weights", c.weights},
         {"growth_vector", c.growth_vector},
         {"forward", poly_list(c.forward)},
         {"inverse", poly_list(c.inverse)},
         {"forward_centered", poly_list(c.forward_centered)},
         {"inverse_centered", poly_list(c.inverse_centered)},
         {"provenance",
          {{"words", c.provenance.words},
           {"linear_change", lin},
           {"corrections", poly_list(c.provenance.corrections)},
           {"log", c.provenance.log}}}};
}

PrivilegedChart chart_from_json(const json& j)
{
    PrivilegedChart c;
    try {
        c.base = vector_from_json(j.at("base"));
        for (const auto& s : j.at("base_exact")) c.base_exact.push_back(parse_rational(s.get<std::string>()));
        c.weights = j.at("weights").get<std::vector<int>>();
        c.growth_vector = j.at("growth_vector").get<std::vector<int>>();
        const int d = static_cast<int>(c.weights.size());
        auto polys = [&](const json& a) {
            std::vector<Multinomial> out;
            for (const auto& s : a) out.push_back(parse_polynomial(s.get<std::string>(), d));
            return out;
        };
        c.forward = polys(j.at("forward"));
        c.inverse = polys(j.at("inverse"));
        c.forward_centered = polys(j.at("forward_centered"));
        c.inverse_centered = polys(j.at("inverse_centered"));
        const auto& p = j.at("provenance");
        c.provenance.words = p.at("words").get<std::vector<std::vector<int>>>();
        for (const auto& row : p.at("linear_change")) {
            std::vector<Rational> r;
            for (const auto& s : row) r.push_back(parse_rational(s.get<std::string>()));
            c.provenance.linear_change.push_back(std::move(r));
        }
        c.provenance.corrections = polys(p.at("corrections"));
        c.provenance.log = p.at("log").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw InputError(std::string("chart json: ") + e.what());
    }
    return c;
}

void to_json(json& j, const NilpotentFrame& nf)
{
    j = {{"growth_vector", nf.growth_vector},
         {"weights", nf.chart.weights},
         {"step", nf.step()},
         {"fields", frame_json(nf.fields)},
         {"structure", to_text(nf.as_structure())}};
}

void to_json(json& j, const ConvergenceTable& t)
{
    json rows = json::array();
    for (const auto& r : t.rows) rows.push_back({{"lambda", r.lambda}, {"error", r.error}});
    j = {{"rows", rows}, {"slope", opt(t.slope)}, {"nonincreasing", opt(t.nonincreasing)}};
}

void to_json(json& j, const SubmersionCertificate& c)
{
    json coeffs = json::array();
    for (Eigen::Index k = 0; k < c.coeffs.rows(); ++k) coeffs.push_back(vector_json(c.coeffs.row(k).transpose()));
    j = {{"verdict", to_string(c.verdict)},
         {"found", c.found()},
         {"N", c.N},
         {"coeffs", coeffs},
         {"sup_norm", c.sup_norm},
         {"residual", c.residual},
         {"singular_values", vector_json(c.singular_values)},
         {"sigma_ratio", c.sigma_ratio},
         {"eta", c.eta},
         {"submersion_tol", c.submersion_tol},
         {"residual_tol", c.residual_tol},
         {"seed", c.seed},
         {"attempts", c.attempts},
         {"note", c.note}};
}

void to_json(json& j, const SpanReport& r) { j = {{"spanning", r.spanning}, {"dims", r.dims}}; }

void to_json(json& j, const ConeReport& r)
{
    json gens = json::array();
    for (const auto& g : r.generators) gens.push_back(vector_json(g));
    j = {{"full", r.full},
         {"sample_count", r.sample_count},
         {"seed", r.seed},
         {"residuals", r.residuals},
         {"generators", gens}};
}

void to_json(json& j, const MediumFatReport& r)
{
    j = {{"medium_fat", r.medium_fat}, {"trivial", r.trivial}, {"rank", r.rank}, {"note", r.note}};
}

void to_json(json& j, const GohWitness& w)
{
    j = {{"lambda", vector_json(w.lambda)},
         {"t", w.t},
         {"v1", w.i},
         {"v2", w.j},
         {"goh", w.goh},
         {"legendre", w.legendre}};
}

void to_json(json& j, const DistanceEstimate& e)
{
    j = {{"upper", e.upper},
         {"lower_proxy", opt(e.lower_proxy)},
         {"lower_proxy_label", "pseudo-norm in the privileged chart at p; not certified"},
         {"endpoint_error", e.endpoint_error},
         {"starts_used", e.starts_used},
         {"iterations", e.iterations}};
}

void to_json(json& j, const BallBoxCalibration& c)
{
    json samples = json::array();
    for (const auto& s : c.samples)
        samples.push_back({{"q", vector_json(s.q)},
                           {"pseudo_norm", s.pseudo_norm},
                           {"upper", s.upper},
                           {"ratio_upper", s.ratio_upper},
                           {"ratio_lower", s.ratio_lower}});
    j = {{"C_est", c.C_est}, {"eps_est", c.eps_est}, {"label", c.label}, {"samples", samples}};
}

void to_json(json& j, const DefectBucket& b)
{
    j = {{"gap_lo", b.gap_lo},
         {"gap_hi", b.gap_hi},
         {"count", b.count},
         {"sup_defect", b.sup_defect},
         {"sup_lower", b.sup_lower}};
}

void to_json(json& j, const PairDefect& p)
{
    j = {{"s", p.s}, {"t", p.t}, {"gap", p.gap}, {"defect", p.defect}, {"lower", p.lower}, {"skipped", p.skipped}};
}

void to_json(json& j, const ModulusReport& r)
{
    j = {{"direction", to_string(r.direction)},
         {"verdict", to_string(r.verdict)},
         {"reason", r.reason},
         {"beta", opt(r.beta)},
         {"thresholds", r.thresholds},
         {"h_max", r.h_max},
         {"pairs_total", r.pairs_total},
         {"pairs_evaluated", r.pairs_evaluated},
         {"pairs_skipped", r.pairs_skipped},
         {"max_lower", r.max_lower},
         {"worst", r.worst ? json(*r.worst) : json(nullptr)},
         {"half_resolution_verdict", r.half_resolution ? json(to_string(*r.half_resolution)) : json(nullptr)},
         {"buckets", r.buckets}};
}

void to_json(json& j, const DilationReport& r)
{
    json rows = json::array();
    for (const auto& x : r.rows) rows.push_back({{"l", x.l}, {"gap", x.gap}, {"discrepancy", x.discrepancy}});
    j = {{"direction", to_string(r.direction)},
         {"verdict", to_string(r.verdict)},
         {"reason", r.reason},
         {"slope", opt(r.slope)},
         {"slope_min", r.slope_min},
         {"small_tol", r.small_tol},
         {"buckets", r.buckets},
         {"rows", rows}};
}

void to_json(json& j, const GapDiagnostic& g)
{
    j = {{"a", g.a},
         {"b", g.b},
         {"eta", g.eta},
         {"sup_norm", g.sup_norm},
         {"endpoint_error", g.endpoint_error},
         {"N", g.N},
         {"solved", g.solved}};
}

void to_json(json& j, const ExtensionResult& r)
{
    j = {{"t_begin", r.t_begin},
         {"t_end", r.t_end},
         {"start_point", vector_json(r.start_point)},
         {"max_interp_error", r.max_interp_error},
         {"max_junction_jump", r.max_junction_jump},
         {"gaps", r.gaps}};
}

void to_json(json& j, const LusinResult& r)
{
    j = {{"kept_times", r.kept.times},
         {"kept_measure", r.kept_measure},
         {"tau", r.tau},
         {"h0", r.h0},
         {"grid", r.grid},
         {"screen", r.screen},
         {"extension", r.extension}};
}

void to_json(json& j, const LiftCheck& c)
{
    json res = json::array();
    for (const auto& row : c.residuals) res.push_back(poly_list(row));
    j = {{"ok", c.ok}, {"exact", c.exact}, {"submersion", c.submersion}, {"min_rank", c.min_rank}, {"residuals", res}};
}

void to_json(json& j, const GapLift& g)
{
    j = {{"a", g.a},
         {"b", g.b},
         {"defect", g.defect},
         {"sub_length", g.sub_length},
         {"correction_sup", g.correction_sup}};
}

void to_json(json& j, const LiftedData& d)
{
    j = {{"start", vector_json(d.start)},
         {"M", d.M},
         {"max_projection_error", d.max_projection_error},
         {"gaps", d.gaps}};
}

void to_json(json& j, const ProjectionCheck& c)
{
    j = {{"d_down_upper", c.d_down_upper},
         {"d_up_upper", c.d_up_upper},
         {"d_down_lower_proxy", c.d_down_lower},
         {"violation", c.violation}};
}

}  // namespace subrie
