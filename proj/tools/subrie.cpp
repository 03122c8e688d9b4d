#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "subrie/distance.hpp"
#include "subrie/endpoint.hpp"
#include "subrie/io.hpp"
#include "subrie/lift.hpp"
#include "subrie/nilpotent.hpp"
#include "subrie/whitney.hpp"

using namespace subrie;

namespace {

enum Exit { kOk = 0, kReject = 1, kInconclusive = 2, kInput = 3 };

struct Globals {
    RunConfig cfg;
    std::vector<std::string> params;
};

std::map<std::string, std::string> param_map(const std::vector<std::string>& params)
{
    std::map<std::string, std::string> out;
    for (const auto& p : params) {
        auto eq = p.find('=');
        if (eq == std::string::npos || eq == 0) throw InputError("--param expects key=value, got '" + p + "'");
        out[p.substr(0, eq)] = p.substr(eq + 1);
    }
    return out;
}

SRStructure structure_arg(const Globals& g, const std::string& spec)
{
    auto s = load_structure(spec, param_map(g.params));
    s.validate();
    return s;
}

FlagOptions flag_options(const RunConfig& c)
{
    FlagOptions o;
    o.rank_tol = c.rank_tol;
    return o;
}

DistanceBudget seeded(DistanceBudget b, const RunConfig& c)
{
    b.seed = c.seed;
    return b;
}

WhitneyOptions whitney_options(const RunConfig& c)
{
    WhitneyOptions o;
    o.thresholds = c.thresholds;
    o.seed = c.seed;
    o.budget = seeded(c.pair_distance, c);
    return o;
}

ExtendOptions extend_options(const RunConfig& c)
{
    ExtendOptions o;
    o.N_schedule = c.extend_N;
    o.restarts = c.extend_restarts;
    o.seed = c.seed;
    return o;
}

Eigen::VectorXd point_arg(const std::string& text, int dim, const std::string& what)
{
    auto v = parse_vector(text);
    if (v.size() != dim)
        throw InputError(what + " has " + std::to_string(v.size()) + " entries, expected " + std::to_string(dim));
    return v;
}

std::string out_path(const RunConfig& c, const std::string& name)
{
    std::filesystem::create_directories(c.output_dir);
    return (std::filesystem::path(c.output_dir) / name).string();
}

json envelope(const std::string& command, const RunConfig& c)
{
    return {{"schema_version", kSchemaVersion}, {"command", command}, {"config", c}};
}

void emit(const json& report) { std::cout << report.dump(2) << "\n"; }

int verdict_exit(Verdict v)
{
    switch (v) {
    case Verdict::Accept: return kOk;
    case Verdict::Reject: return kReject;
    case Verdict::Inconclusive: return kInconclusive;
    }
    return kInconclusive;
}

int worst_exit(int a, int b)
{
    // reject dominates inconclusive dominates ok
    if (a == kReject || b == kReject) return kReject;
    return std::max(a, b);
}

void require_regular(const SRStructure& s, const Eigen::VectorXd& p, const RunConfig& c)
{
    auto fr = flag_at(s, p, flag_options(c));
    if (!fr.regular)
        throw InputError("point is singular for " + s.name +
                         "; chart-based operations need a regular point (supply a lift and use `lift lift-data`)");
}

WhitneyData load_data(const SRStructure& s, const std::string& path)
{
    auto d = whitney_from_csv(read_csv_file(path), s.dim, s.rank());
    d.validate(s);
    return d;
}

// --- subcommands ----------------------------------------------------------------------------

int run_analyze(const Globals& g, const std::string& spec, int grid)
{
    auto s = structure_arg(g, spec);
    auto map = classify_regularity(s, grid, std::nullopt, flag_options(g.cfg));
    auto r = envelope("analyze", g.cfg);
    r["structure"] = to_text(s);
    r["result"] = map;
    emit(r);
    return kOk;
}

int run_nilpotent(const Globals& g, const std::string& spec, const std::string& point, bool convergence)
{
    auto s = structure_arg(g, spec);
    auto p = point_arg(point, s.dim, "--point");
    require_regular(s, p, g.cfg);
    auto chart = privileged_chart(s, p, flag_options(g.cfg));
    verify_chart(s, chart);
    auto nf = nilpotentize(s, chart);
    auto r = envelope("nilpotent", g.cfg);
    r["structure"] = to_text(s);
    r["chart"] = chart;
    r["nilpotent"] = nf;
    if (convergence) r["convergence"] = check_convergence(s, chart, nf, {1.0, 0.5, 0.25, 0.125, 0.0625});
    emit(r);
    return kOk;
}

int run_pliability(const Globals& g, const std::string& spec, const std::string& point, const std::string& uarg,
                   std::optional<double> eta)
{
    auto s = structure_arg(g, spec);
    auto p = point_arg(point, s.dim, "--point");
    auto u = point_arg(uarg, s.rank(), "--u");
    RunConfig cfg = g.cfg;
    if (eta) cfg.eta = *eta;

    auto r = envelope("pliability", cfg);
    r["structure"] = to_text(s);
    json cond;
    cond["medium_fat"] = medium_fat_check(s, p, u, cfg.rank_tol);
    if (flag_at(s, p, flag_options(cfg)).regular) {
        auto nf = nilpotentize(s, privileged_chart(s, p, flag_options(cfg)));
        cond["goh_spanning"] = goh_spanning_check(nf, u, std::nullopt, cfg.rank_tol);
        if (nf.step() == 3)
            cond["cone"] = cone_condition(nf, u, cfg.cone_samples, cfg.seed);
        else
            cond["cone"] = {{"applicable", false}, {"note", "cone condition is defined for step 3 only"}};
        cond["goh_legendre"] = goh_legendre_screen(nf, u);
    } else {
        cond["note"] = "singular point: nilpotent-frame conditions skipped";
    }
    r["conditions"] = cond;

    PliabilityOptions po;
    po.eta = cfg.eta;
    po.N_schedule = cfg.pliability_N;
    po.restarts = cfg.pliability_restarts;
    po.seed = cfg.seed;
    po.submersion_tol = cfg.submersion_tol;
    po.residual_tol = cfg.residual_tol;
    auto prob = EndpointProblem::from_structure(s, p, u, po.N_schedule.empty() ? 4 : po.N_schedule.front());
    auto cert = strong_pliability_search(prob, po);
    r["certificate"] = cert;
    emit(r);
    return cert.found() ? kOk : kInconclusive;
}

int run_whitney_verify(const Globals& g, const std::string& spec, const std::string& path, const std::string& dir,
                       bool dilation, std::optional<double> h_max)
{
    auto s = structure_arg(g, spec);
    auto data = load_data(s, path);
    auto direction = parse_direction(dir);
    auto opts = whitney_options(g.cfg);
    opts.h_max = h_max;
    auto rep = verify_direct(s, data, direction, opts);
    auto r = envelope("whitney verify", g.cfg);
    r["report"] = rep;
    int code = verdict_exit(rep.verdict);
    if (dilation) {
        json dil = json::array();
        std::vector<Direction> dirs;
        if (direction == Direction::Both) dirs = {Direction::Forward, Direction::Backward};
        else dirs = {direction};
        for (auto d : dirs) {
            auto dr = verify_dilation(s, data, d);
            code = worst_exit(code, verdict_exit(dr.verdict));
            dil.push_back(dr);
        }
        r["dilation"] = dil;
    }
    emit(r);
    return code;
}

int run_whitney_extend(const Globals& g, const std::string& spec, const std::string& path, bool force, int samples)
{
    auto s = structure_arg(g, spec);
    auto data = load_data(s, path);
    auto r = envelope("whitney extend", g.cfg);
    if (!force) {
        auto rep = verify_direct(s, data, Direction::Both, whitney_options(g.cfg));
        r["verification"] = rep;
        if (rep.verdict != Verdict::Accept) {
            r["note"] = "data not accepted by verify; rerun with --force to extend anyway";
            emit(r);
            return verdict_exit(rep.verdict);
        }
    }
    auto ext = extend(s, data, extend_options(g.cfg));
    auto times = uniform_times(ext.t_begin, ext.t_end, samples);
    times.insert(times.end(), data.times.begin(), data.times.end());
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    const auto traj_csv = out_path(g.cfg, "extension_trajectory.csv");
    const auto ctrl_csv = out_path(g.cfg, "extension_control.csv");
    write_csv_file(traj_csv, trajectory_to_csv(ext.trajectory, times));
    write_csv_file(ctrl_csv, control_to_csv(ext.control, samples));
    r["extension"] = ext;
    r["trajectory_csv"] = traj_csv;
    r["control_csv"] = ctrl_csv;
    emit(r);
    return kOk;
}

int run_lusin(const Globals& g, const std::string& spec, const std::string& path, const std::string& p0arg,
              double eps, const std::string& interp)
{
    auto s = structure_arg(g, spec);
    auto p0 = point_arg(p0arg, s.dim, "--p0");
    if (!(eps > 0)) throw InputError("--eps must be positive");
    Control::Interp mode;
    if (interp == "linear") mode = Control::Interp::Linear;
    else if (interp == "hold") mode = Control::Interp::Hold;
    else throw InputError("--interp must be linear or hold");
    auto u = control_from_csv(read_csv_file(path), mode);
    if (u.rank() != s.rank()) throw InputError("control rank does not match the structure");
    LusinOptions lo;
    lo.budget = seeded(lo.budget, g.cfg);
    lo.extend = extend_options(g.cfg);
    auto res = lusin(s, u, p0, eps, lo);
    const auto kept_csv = out_path(g.cfg, "lusin_kept.csv");
    write_csv_file(kept_csv, whitney_to_csv(res.kept));
    auto r = envelope("lusin", g.cfg);
    r["result"] = res;
    r["kept_csv"] = kept_csv;
    emit(r);
    return kOk;
}

int run_distance(const Globals& g, const std::string& spec, const std::string& from, const std::string& to,
                 int samples)
{
    auto s = structure_arg(g, spec);
    auto p = point_arg(from, s.dim, "--from");
    auto q = point_arg(to, s.dim, "--to");
    auto budget = seeded(g.cfg.distance, g.cfg);
    budget.integration_tol = g.cfg.integration_tol;
    auto est = estimate_dsr(s, p, q, budget);
    const auto ctrl_csv = out_path(g.cfg, "distance_control.csv");
    write_csv_file(ctrl_csv, control_to_csv(est.control, samples));
    auto r = envelope("distance", g.cfg);
    r["from"] = vector_json(p);
    r["to"] = vector_json(q);
    r["estimate"] = est;
    r["control_csv"] = ctrl_csv;
    emit(r);
    return kOk;
}

int run_flow(const Globals& g, const std::string& spec, const std::string& path, const std::string& p0arg,
             const std::string& interp, int samples, const std::string& out)
{
    auto s = structure_arg(g, spec);
    auto p0 = point_arg(p0arg, s.dim, "--p0");
    auto mode = interp == "hold" ? Control::Interp::Hold : Control::Interp::Linear;
    if (interp != "hold" && interp != "linear") throw InputError("--interp must be linear or hold");
    auto u = control_from_csv(read_csv_file(path), mode);
    if (u.rank() != s.rank()) throw InputError("control rank does not match the structure");
    FlowOptions fo;
    fo.rtol = fo.atol = g.cfg.integration_tol;
    auto traj = chron_exp(s, u, p0, fo);
    auto table = trajectory_to_csv(traj, uniform_times(u.t0(), u.t1(), samples));
    if (out.empty()) write_csv(std::cout, table);
    else write_csv_file(out, table);
    return kOk;
}

int run_lift_check(const std::string& spec, const RunConfig& cfg)
{
    auto ls = load_lift(spec);
    auto chk = check_lift(ls, 5, cfg.rank_tol);
    auto r = envelope("lift check", cfg);
    r["lift"] = to_text(ls);
    r["check"] = chk;
    emit(r);
    return chk.ok ? kOk : kReject;
}

int run_lift_data(const Globals& g, const std::string& spec, const std::string& path, const std::string& start,
                  bool verify)
{
    auto ls = load_lift(spec);
    auto data = load_data(ls.downstairs, path);
    std::optional<Eigen::VectorXd> p0;
    if (!start.empty()) p0 = point_arg(start, ls.upstairs.dim, "--start");
    LiftDataOptions lo;
    lo.budget = seeded(lo.budget, g.cfg);
    auto lifted = lift_whitney_data(ls, data, p0, lo);
    const auto csv = out_path(g.cfg, "lifted_data.csv");
    write_csv_file(csv, whitney_to_csv(lifted.upstairs));
    auto r = envelope("lift lift-data", g.cfg);
    r["lift"] = to_text(ls);
    r["lifted"] = lifted;
    r["lifted_csv"] = csv;
    int code = kOk;
    if (verify) {
        auto rep = verify_direct(ls.upstairs, lifted.upstairs, Direction::Both, whitney_options(g.cfg));
        r["upstairs_report"] = rep;
        code = verdict_exit(rep.verdict);
    }
    emit(r);
    return code;
}

int run_lift_project(const Globals& g, const std::string& spec, const std::string& from, const std::string& to)
{
    auto ls = load_lift(spec);
    auto p = point_arg(from, ls.upstairs.dim, "--from");
    auto q = point_arg(to, ls.upstairs.dim, "--to");
    auto chk = project_distance_check(ls, p, q, seeded(g.cfg.distance, g.cfg));
    auto r = envelope("lift project", g.cfg);
    r["check"] = chk;
    emit(r);
    return chk.violation ? kReject : kOk;
}

void print_error(const std::string& kind, const std::string& message, const json& extra = nullptr)
{
    json e = {{"schema_version", kSchemaVersion}, {"error", {{"kind", kind}, {"message", message}}}};
    if (!extra.is_null()) e["error"]["details"] = extra;
    std::cerr << e.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"subrie: sub-Riemannian structures, charts, endpoint maps and Whitney data"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.cfg.seed, "Seed for every randomized step");
    app.add_option("--param", g.params, "Parameter of a built-in structure, e.g. alpha=-1");
    app.add_option("--output-dir", g.cfg.output_dir, "Directory for CSV outputs");
    app.add_option("--integration-tol", g.cfg.integration_tol, "ODE tolerance for reported flows");
    app.add_option("--rank-tol", g.cfg.rank_tol, "Singular-value threshold for ranks");

    int grid = 5;
    auto* analyze = app.add_subcommand("analyze", "Growth vectors and regularity on a grid");
    std::string structure;
    analyze->add_option("structure", structure, "Built-in name or structure file")->required();
    analyze->add_option("--grid", grid, "Points per axis")->check(CLI::PositiveNumber);

    std::string point, uarg;
    bool convergence = false;
    auto* nil = app.add_subcommand("nilpotent", "Privileged chart and nilpotent approximation");
    nil->add_option("structure", structure)->required();
    nil->add_option("--point", point)->required();
    nil->add_flag("--check-convergence", convergence);

    std::optional<double> eta;
    auto* pli = app.add_subcommand("pliability", "Strong-pliability certificate and sufficient conditions");
    pli->add_option("structure", structure)->required();
    pli->add_option("--point", point)->required();
    pli->add_option("--u", uarg)->required();
    pli->add_option("--eta", eta, "Sup-norm bound on the perturbation");

    auto* wh = app.add_subcommand("whitney", "Whitney data: verification and extension");
    wh->require_subcommand(1);
    wh->fallthrough();
    std::string data_path, direction = "both";
    bool dilation = false, force = false;
    std::optional<double> h_max;
    int samples = 201;
    auto* wv = wh->add_subcommand("verify", "Defect moduli of sampled data");
    wv->add_option("structure", structure)->required();
    wv->add_option("data", data_path, "CSV with header t,x1..xd,u1..um")->required();
    wv->add_option("--direction", direction)->check(CLI::IsMember({"both", "forward", "backward"}));
    wv->add_flag("--dilation", dilation, "Also run the dilation form");
    wv->add_option("--h-max", h_max, "Largest pair gap");
    auto* we = wh->add_subcommand("extend", "Horizontal extension through the data");
    we->add_option("structure", structure)->required();
    we->add_option("data", data_path)->required();
    we->add_flag("--force", force, "Skip the verification precondition");
    we->add_option("--samples", samples)->check(CLI::Range(2, 1000000));

    std::string p0arg, interp = "linear";
    double eps = 0.1;
    auto* lu = app.add_subcommand("lusin", "Select K where the curve is differentiable and extend");
    lu->add_option("structure", structure)->required();
    lu->add_option("control", data_path, "CSV with header t,u1..um on a uniform grid")->required();
    lu->add_option("--p0", p0arg)->required();
    lu->add_option("--eps", eps)->required();
    lu->add_option("--interp", interp)->check(CLI::IsMember({"linear", "hold"}));

    std::string from, to;
    auto* di = app.add_subcommand("distance", "Upper estimate of the sub-Riemannian distance");
    di->add_option("structure", structure)->required();
    di->add_option("--from", from)->required();
    di->add_option("--to", to)->required();
    di->add_option("--samples", samples)->check(CLI::Range(2, 1000000));

    std::string out;
    auto* fl = app.add_subcommand("flow", "Integrate a control from p0");
    fl->add_option("structure", structure)->required();
    fl->add_option("control", data_path)->required();
    fl->add_option("--p0", p0arg)->required();
    fl->add_option("--interp", interp)->check(CLI::IsMember({"linear", "hold"}));
    fl->add_option("--samples", samples)->check(CLI::Range(2, 1000000));
    fl->add_option("--out", out, "Write the CSV here instead of stdout");

    std::string lift_spec, start;
    bool verify = false;
    auto* li = app.add_subcommand("lift", "Lifts to a regular structure");
    li->require_subcommand(1);
    li->fallthrough();
    auto* lc = li->add_subcommand("check", "Check psi_* X~ = X o psi and the submersion property");
    lc->add_option("liftspec", lift_spec, "heisenberg->grushin or a lift file")->required();
    auto* ld = li->add_subcommand("lift-data", "Lift Whitney data to the upstairs structure");
    ld->add_option("liftspec", lift_spec)->required();
    ld->add_option("data", data_path)->required();
    ld->add_option("--start", start, "Upstairs start point (default: least-norm preimage)");
    ld->add_flag("--verify", verify, "Verify the lifted data upstairs");
    auto* lp = li->add_subcommand("project", "Compare distances across the lift");
    lp->add_option("liftspec", lift_spec)->required();
    lp->add_option("--from", from)->required();
    lp->add_option("--to", to)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("input", e.what());
        return kInput;
    }

    try {
        if (*analyze) return run_analyze(g, structure, grid);
        if (*nil) return run_nilpotent(g, structure, point, convergence);
        if (*pli) return run_pliability(g, structure, point, uarg, eta);
        if (*wv) return run_whitney_verify(g, structure, data_path, direction, dilation, h_max);
        if (*we) return run_whitney_extend(g, structure, data_path, force, samples);
        if (*lu) return run_lusin(g, structure, data_path, p0arg, eps, interp);
        if (*di) return run_distance(g, structure, from, to, samples);
        if (*fl) return run_flow(g, structure, data_path, p0arg, interp, samples, out);
        if (*lc) return run_lift_check(lift_spec, g.cfg);
        if (*ld) return run_lift_data(g, lift_spec, data_path, start, verify);
        if (*lp) return run_lift_project(g, lift_spec, from, to);
    } catch (const InputError& e) {
        print_error("input", e.what());
        return kInput;
    } catch (const DistanceError& e) {
        print_error("budget", e.what(), {{"best_gap", e.best_gap()}});
        return kInconclusive;
    } catch (const DomainExitError& e) {
        print_error("domain_exit", e.what(), {{"time", e.time()}});
        return kInconclusive;
    } catch (const NumericalError& e) {
        print_error("budget", e.what());
        return kInconclusive;
    } catch (const json::exception& e) {
        print_error("input", e.what());
        return kInput;
    } catch (const std::filesystem::filesystem_error& e) {
        print_error("input", e.what());
        return kInput;
    } catch (const std::exception& e) {
        print_error("internal", e.what());
        return kInconclusive;
    }
    return kInput;
}
