#include "subrie/endpoint.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "subrie/linalg.hpp"
#include "subrie/random.hpp"

namespace subrie {

namespace {

std::vector<Rational> rational_vector(const Eigen::VectorXd& u)
{
    std::vector<Rational> out;
    out.reserve(static_cast<std::size_t>(u.size()));
    for (Eigen::Index i = 0; i < u.size(); ++i) out.push_back(to_rational(u[i]));
    return out;
}

VectorField combine(const Frame& frame, const Eigen::VectorXd& u)
{
    if (static_cast<std::size_t>(u.size()) != frame.size()) throw InputError("control dimension differs from frame rank");
    VectorField out(frame.front().dim());
    const auto q = rational_vector(u);
    for (std::size_t i = 0; i < frame.size(); ++i)
        if (q[i] != 0) out += q[i] * frame[i];
    return out;
}

FlowOptions tight(double tol)
{
    FlowOptions o;
    o.rtol = tol;
    o.atol = tol;
    o.dense = false;
    return o;
}

int span_rank(const std::vector<Eigen::VectorXd>& cols, int d, double tol)
{
    if (cols.empty()) return 0;
    Eigen::MatrixXd A(d, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) A.col(static_cast<Eigen::Index>(k)) = cols[k];
    return numeric_rank(A, tol);
}

Eigen::VectorXd zero_point(const NilpotentFrame& nf) { return Eigen::VectorXd::Zero(nf.dim()); }

}  // namespace

// --- endpoint map -------------------------------------------------------------------

EndpointProblem EndpointProblem::from_nilpotent(const NilpotentFrame& nf, const Eigen::VectorXd& u, int N)
{
    EndpointProblem p;
    p.frame = nf.fields;
    p.base = zero_point(nf);
    p.u = u;
    p.N = N;
    if (u.size() != nf.rank()) throw InputError("endpoint problem: u has wrong length");
    return p;
}

EndpointProblem EndpointProblem::from_structure(const SRStructure& s, const Eigen::VectorXd& p, const Eigen::VectorXd& u,
                                                int N)
{
    s.require_in_domain(p, "endpoint problem");
    if (u.size() != s.rank()) throw InputError("endpoint problem: u has wrong length");
    EndpointProblem out;
    out.frame = s.frame;
    out.base = p;
    out.u = u;
    out.N = N;
    return out;
}

LinearControlFamily EndpointProblem::family() const
{
    if (N < 1) throw InputError("endpoint problem: N must be positive");
    LinearControlFamily f;
    f.basis.kind = ScalarBasis::Kind::Sine;
    f.basis.n = N;
    f.offset = u;
    return f;
}

Eigen::VectorXd EndpointValue::stacked() const
{
    Eigen::VectorXd out(point.size() + final_control.size());
    out << point, final_control;
    return out;
}

EndpointValue endpoint_map(const EndpointProblem& prob, const Eigen::MatrixXd& coeffs, const FlowOptions& opts)
{
    auto fam = prob.family();
    if (coeffs.rows() != prob.N || coeffs.cols() != prob.rank()) throw InputError("endpoint_map: coefficient shape");
    FlowOptions o = opts;
    o.dense = false;
    auto traj = chron_exp(NumericFrame(prob.frame), fam.to_control(coeffs), prob.base, o);
    EndpointValue v;
    v.point = traj.end_point();
    v.final_control = prob.u + coeffs.row(0).transpose();  // phi_1(1) = 1, sines vanish
    return v;
}

Eigen::MatrixXd endpoint_differential(const EndpointProblem& prob, const Eigen::MatrixXd& coeffs, const FlowOptions& opts)
{
    auto fam = prob.family();
    const int d = prob.dim(), m = prob.rank(), N = prob.N;
    auto sens = endpoint_sensitivity(NumericFrame(prob.frame), fam, coeffs, prob.base, opts);
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(d + m, N * m);
    D.topRows(d) = sens.jacobian;
    for (int i = 0; i < m; ++i) D(d + i, i * N) = 1.0;
    return D;
}

// --- strong pliability ----------------------------------------------------------------

std::string to_string(PliabilityVerdict v)
{
    switch (v) {
    case PliabilityVerdict::Submersion: return "submersion";
    case PliabilityVerdict::RemarkTrivial: return "trivial";
    case PliabilityVerdict::NotFound: return "not_found";
    }
    return "unknown";
}

namespace {

struct Evaluation {
    double residual = 0.0;
    Eigen::VectorXd sv;
    double ratio = 0.0;
    double sup = 0.0;
};

Evaluation evaluate_candidate(const EndpointProblem& prob, const Eigen::MatrixXd& c, const EndpointValue& target,
                              double tol)
{
    Evaluation e;
    auto fo = tight(tol);
    auto val = endpoint_map(prob, c, fo);
    e.residual = (val.stacked() - target.stacked()).norm();
    Eigen::MatrixXd D = endpoint_differential(prob, c, fo);
    e.sv = singular_values(D);
    const auto rows = D.rows();
    if (D.cols() >= rows && e.sv.size() >= rows && e.sv[0] > 0) e.ratio = e.sv[rows - 1] / e.sv[0];
    e.sup = prob.family().to_control(c).sup_norm(false);
    return e;
}

}  // namespace

SubmersionCertificate strong_pliability_search(const EndpointProblem& prob, const PliabilityOptions& opts)
{
    const int d = prob.dim(), m = prob.rank();
    if (opts.N_schedule.empty()) throw InputError("pliability: empty N schedule");
    if (!(opts.eta > 0)) throw InputError("pliability: eta must be positive");
    SubmersionCertificate cert;
    cert.eta = opts.eta;
    cert.submersion_tol = opts.submersion_tol;
    cert.residual_tol = opts.residual_tol;
    cert.seed = opts.seed;

    const Eigen::VectorXd Xu = NumericFrame(prob.frame).field(prob.base, prob.u);
    if (Xu.norm() < 1e-14) {
        cert.verdict = PliabilityVerdict::RemarkTrivial;
        cert.N = opts.N_schedule.front();
        cert.coeffs = Eigen::MatrixXd::Zero(cert.N, m);
        cert.note = "X_u vanishes at the base point; (q,0) is trivially strongly pliable";
        return cert;
    }

    double best_ratio = -1.0;
    int attempt = 0;
    for (int N : opts.N_schedule) {
        if (N < 2) continue;
        EndpointProblem pb = prob;
        pb.N = N;
        const auto fo = tight(opts.integration_tol);
        const EndpointValue target = endpoint_map(pb, Eigen::MatrixXd::Zero(N, m), fo);
        // free parameters: every sine coefficient; phi_1 coefficients are pinned to zero so v(1) = 0
        std::vector<int> free_cols;
        for (int i = 0; i < m; ++i)
            for (int k = 1; k < N; ++k) free_cols.push_back(i * N + k);
        for (int r = 0; r < opts.restarts; ++r, ++attempt) {
            auto gen = rng_stream(opts.seed, static_cast<std::uint64_t>(attempt));
            std::uniform_real_distribution<double> U(-1.0, 1.0);
            Eigen::MatrixXd c = Eigen::MatrixXd::Zero(N, m);
            for (int i = 0; i < m; ++i)
                for (int k = 1; k < N; ++k) c(k, i) = U(gen) / k;
            const double s0 = pb.family().to_control(c).sup_norm(false);
            if (s0 == 0.0) continue;
            c *= opts.eta / (4.0 * s0);

            bool ok = true;
            for (int it = 0; it < opts.newton_iterations; ++it) {
                auto sens = endpoint_sensitivity(NumericFrame(pb.frame), pb.family(), c, pb.base, fo);
                Eigen::VectorXd G = sens.end_point - target.point;
                if (!G.allFinite()) {
                    ok = false;
                    break;
                }
                if (G.norm() < 0.1 * opts.residual_tol) break;
                Eigen::MatrixXd Jf(d, static_cast<Eigen::Index>(free_cols.size()));
                for (std::size_t k = 0; k < free_cols.size(); ++k)
                    Jf.col(static_cast<Eigen::Index>(k)) = sens.jacobian.col(free_cols[k]);
                Eigen::VectorXd step = min_norm_solve(Jf, G);
                for (std::size_t k = 0; k < free_cols.size(); ++k) {
                    const int col = free_cols[k];
                    c(col % N, col / N) -= step[static_cast<Eigen::Index>(k)];
                }
            }
            if (!ok) continue;
            Evaluation ev;
            try {
                ev = evaluate_candidate(pb, c, target, opts.integration_tol);
            } catch (const NumericalError&) {
                continue;
            }
            if (ev.sup < opts.eta && ev.ratio > best_ratio) {
                best_ratio = ev.ratio;
                cert.coeffs = c;
                cert.N = N;
                cert.sup_norm = ev.sup;
                cert.residual = ev.residual;
                cert.singular_values = ev.sv;
                cert.sigma_ratio = ev.ratio;
            }
            if (ev.sup < opts.eta && ev.residual < opts.residual_tol && ev.ratio > opts.submersion_tol) {
                cert.verdict = PliabilityVerdict::Submersion;
                cert.attempts = attempt + 1;
                cert.coeffs = c;
                cert.N = N;
                cert.sup_norm = ev.sup;
                cert.residual = ev.residual;
                cert.singular_values = ev.sv;
                cert.sigma_ratio = ev.ratio;
                std::ostringstream os;
                os << "D_vF is onto at v with |v|_inf=" << ev.sup << " < eta=" << opts.eta;
                cert.note = os.str();
                return cert;
            }
        }
    }
    cert.verdict = PliabilityVerdict::NotFound;
    cert.attempts = attempt;
    std::ostringstream os;
    os << "no submersion point found (best sigma ratio " << best_ratio
       << "); the search is inconclusive and does not show that the pair fails strong pliability";
    cert.note = os.str();
    return cert;
}

SubmersionCertificate replay_certificate(const EndpointProblem& prob, const SubmersionCertificate& cert)
{
    SubmersionCertificate out = cert;
    if (cert.verdict == PliabilityVerdict::RemarkTrivial) return out;
    if (cert.N < 1 || cert.coeffs.rows() != cert.N || cert.coeffs.cols() != prob.rank())
        throw InputError("replay_certificate: certificate does not match the problem");
    EndpointProblem pb = prob;
    pb.N = cert.N;
    const auto target = endpoint_map(pb, Eigen::MatrixXd::Zero(cert.N, prob.rank()), tight(1e-12));
    auto ev = evaluate_candidate(pb, cert.coeffs, target, 1e-12);
    out.residual = ev.residual;
    out.singular_values = ev.sv;
    out.sigma_ratio = ev.ratio;
    out.sup_norm = ev.sup;
    return out;
}

// --- second-order forms -------------------------------------------------------------------

Eigen::VectorXd transport_covector(const NilpotentFrame& nf, const Eigen::VectorXd& u, const Eigen::VectorXd& lambda,
                                   double t, Eigen::VectorXd* base_point)
{
    if (lambda.size() != nf.dim()) throw InputError("transport_covector: covector has wrong length");
    if (t < 0.0 || t > 1.0) throw InputError("transport_covector: t outside [0,1]");
    NumericFrame F(nf.fields);
    const auto fo = tight(1e-12);
    Eigen::VectorXd g = t == 0.0 ? zero_point(nf) : flow_const(F, u, t, zero_point(nf), fo);
    if (base_point) *base_point = g;
    if (t == 1.0) return lambda;
    auto [x, J] = flow_jacobian(F, Control::constant(0.0, 1.0 - t, u), g, fo);
    (void)x;
    return J.transpose() * lambda;
}

double goh_form(const NilpotentFrame& nf, const Eigen::VectorXd& u, const Eigen::VectorXd& lambda, double t,
                const Eigen::VectorXd& v1, const Eigen::VectorXd& v2)
{
    Eigen::VectorXd g;
    Eigen::VectorXd lt = transport_covector(nf, u, lambda, t, &g);
    VectorField B = lie_bracket(combine(nf.fields, v1), combine(nf.fields, v2));
    return lt.dot(B.evaluate(g));
}

double legendre_form(const NilpotentFrame& nf, const Eigen::VectorXd& u, const Eigen::VectorXd& lambda, double t,
                     const Eigen::VectorXd& v1, const Eigen::VectorXd& v2)
{
    Eigen::VectorXd g;
    Eigen::VectorXd lt = transport_covector(nf, u, lambda, t, &g);
    VectorField B = lie_bracket(lie_bracket(combine(nf.fields, u), combine(nf.fields, v1)), combine(nf.fields, v2));
    return lt.dot(B.evaluate(g));
}

// --- algebraic criteria ---------------------------------------------------------------------

SpanReport goh_spanning_check(const NilpotentFrame& nf, const Eigen::VectorXd& u, std::optional<int> kmax,
                              double rank_tol)
{
    const int d = nf.dim(), m = nf.rank();
    const int K = kmax.value_or(nf.step() - 1);
    if (K < 0) throw InputError("goh_spanning_check: kmax must be non-negative");
    const VectorField Xu = combine(nf.fields, u);
    std::vector<VectorField> layer;
    for (int i = 0; i < m; ++i) layer.push_back(nf.fields[static_cast<std::size_t>(i)]);
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j)
            layer.push_back(lie_bracket(nf.fields[static_cast<std::size_t>(i)], nf.fields[static_cast<std::size_t>(j)]));
    const Eigen::VectorXd o = zero_point(nf);
    std::vector<Eigen::VectorXd> cols;
    SpanReport rep;
    for (int k = 0; k <= K; ++k) {
        if (k > 0) {
            std::vector<VectorField> next;
            for (const auto& g : layer) {
                auto b = lie_bracket(Xu, g);
                if (!b.is_zero()) next.push_back(std::move(b));
            }
            layer = std::move(next);
        }
        for (const auto& g : layer) cols.push_back(g.evaluate(o));
        rep.dims.push_back(span_rank(cols, d, rank_tol));
    }
    rep.spanning = !rep.dims.empty() && rep.dims.back() == d;
    return rep;
}

ConeReport cone_condition(const NilpotentFrame& nf, const Eigen::VectorXd& u, int sample_count, std::uint64_t seed,
                          double feasibility_tol)
{
    if (nf.step() != 3) throw InputError("cone_condition: requires a step-3 structure");
    const int d = nf.dim(), m = nf.rank();
    if (sample_count < 2 * d) throw InputError("cone_condition: sample_count must be at least 2 d");
    const Eigen::VectorXd o = zero_point(nf);

    // orthonormal basis of Delta^2(0)
    std::vector<Eigen::VectorXd> span;
    for (int i = 0; i < m; ++i) span.push_back(nf.fields[static_cast<std::size_t>(i)].evaluate(o));
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j)
            span.push_back(
                lie_bracket(nf.fields[static_cast<std::size_t>(i)], nf.fields[static_cast<std::size_t>(j)]).evaluate(o));
    Eigen::MatrixXd S(d, static_cast<Eigen::Index>(span.size()));
    for (std::size_t k = 0; k < span.size(); ++k) S.col(static_cast<Eigen::Index>(k)) = span[k];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(S, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();

    ConeReport rep;
    rep.sample_count = sample_count;
    rep.seed = seed;
    for (Eigen::Index k = 0; k < sv.size(); ++k)
        if (sv[0] > 0 && sv[k] > 1e-9 * sv[0]) {
            rep.generators.push_back(svd.matrixU().col(k));
            rep.generators.push_back(-svd.matrixU().col(k));
        }

    const VectorField Xu = combine(nf.fields, u);
    std::vector<std::vector<Eigen::VectorXd>> Bij(static_cast<std::size_t>(m), std::vector<Eigen::VectorXd>(static_cast<std::size_t>(m)));
    for (int i = 0; i < m; ++i) {
        const auto inner = lie_bracket(Xu, nf.fields[static_cast<std::size_t>(i)]);
        for (int j = 0; j < m; ++j)
            Bij[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                lie_bracket(inner, nf.fields[static_cast<std::size_t>(j)]).evaluate(o);
    }
    auto gen = rng_stream(seed, 0);
    std::normal_distribution<double> Nd(0.0, 1.0);
    for (int s = 0; s < sample_count; ++s) {
        Eigen::VectorXd a(m);
        for (int i = 0; i < m; ++i) a[i] = Nd(gen);
        a.normalize();
        Eigen::VectorXd q = Eigen::VectorXd::Zero(d);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) q += a[i] * a[j] * Bij[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        const double n = q.norm();
        if (n > 1e-12) rep.generators.push_back(q / n);
    }

    Eigen::MatrixXd A(d, static_cast<Eigen::Index>(rep.generators.size()));
    for (std::size_t k = 0; k < rep.generators.size(); ++k) A.col(static_cast<Eigen::Index>(k)) = rep.generators[k];
    rep.full = true;
    for (int k = 0; k < d; ++k)
        for (double sgn : {1.0, -1.0}) {
            Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
            b[k] = sgn;
            double res = A.cols() == 0 ? 1.0 : nnls(A, b).residual;
            rep.residuals.push_back(res);
            if (!(res < feasibility_tol)) rep.full = false;
        }
    return rep;
}

MediumFatReport medium_fat_check(const SRStructure& s, const Eigen::VectorXd& p, const Eigen::VectorXd& u,
                                 double rank_tol)
{
    s.require_in_domain(p, "medium_fat_check");
    const int d = s.dim, m = s.rank();
    MediumFatReport rep;
    const VectorField Xu = combine(s.frame, u);
    if (Xu.evaluate(p).norm() < 1e-14) {
        rep.trivial = true;
        rep.medium_fat = true;
        rep.rank = d;
        rep.note = "X_u(p) = 0: the pair is (p,0) and the condition is vacuous";
        return rep;
    }
    std::vector<Eigen::VectorXd> cols;
    for (int i = 0; i < m; ++i) {
        const auto& Xi = s.frame[static_cast<std::size_t>(i)];
        cols.push_back(Xi.evaluate(p));
        cols.push_back(lie_bracket(Xu, Xi).evaluate(p));
        for (int j = i + 1; j < m; ++j) {
            const auto bij = lie_bracket(Xi, s.frame[static_cast<std::size_t>(j)]);
            cols.push_back(bij.evaluate(p));
            cols.push_back(lie_bracket(Xu, bij).evaluate(p));
        }
    }
    rep.rank = span_rank(cols, d, rank_tol);
    rep.medium_fat = rep.rank == d;
    rep.note = rep.medium_fat ? "span is the full tangent space" : "span is a proper subspace";
    return rep;
}

std::vector<GohWitness> goh_legendre_screen(const NilpotentFrame& nf, const Eigen::VectorXd& u, int N, int t_samples,
                                            double rank_tol)
{
    if (t_samples < 1) throw InputError("goh_legendre_screen: t_samples must be positive");
    const int d = nf.dim(), m = nf.rank();
    auto prob = EndpointProblem::from_nilpotent(nf, u, N);
    Eigen::MatrixXd D = endpoint_differential(prob, Eigen::MatrixXd::Zero(N, m), tight(1e-12)).topRows(d);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(D, Eigen::ComputeFullU);
    const auto& sv = svd.singularValues();
    const double s1 = sv.size() > 0 ? sv[0] : 0.0;
    int r = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k)
        if (sv[k] > rank_tol * std::max(1.0, s1)) ++r;

    // exact brackets evaluated along gamma
    std::vector<VectorField> XuXi;
    const VectorField Xu = combine(nf.fields, u);
    for (int i = 0; i < m; ++i) XuXi.push_back(lie_bracket(Xu, nf.fields[static_cast<std::size_t>(i)]));

    std::vector<GohWitness> out;
    for (int c = r; c < d; ++c) {
        const Eigen::VectorXd lambda = svd.matrixU().col(c);
        GohWitness wg, wl;
        wg.lambda = wl.lambda = lambda;
        for (int ts = 0; ts < t_samples; ++ts) {
            const double t = t_samples == 1 ? 0.0 : static_cast<double>(ts) / (t_samples - 1);
            Eigen::VectorXd g;
            Eigen::VectorXd lt = transport_covector(nf, u, lambda, t, &g);
            for (int i = 0; i < m; ++i)
                for (int j = i; j < m; ++j) {
                    const double bg =
                        lt.dot(lie_bracket(nf.fields[static_cast<std::size_t>(i)], nf.fields[static_cast<std::size_t>(j)])
                                   .evaluate(g));
                    const double bl =
                        lt.dot(lie_bracket(XuXi[static_cast<std::size_t>(i)], nf.fields[static_cast<std::size_t>(j)])
                                   .evaluate(g));
                    if (std::abs(bg) > std::abs(wg.goh)) {
                        wg.t = t, wg.i = i, wg.j = j, wg.goh = bg, wg.legendre = bl;
                    }
                    if (std::abs(bl) > std::abs(wl.legendre)) {
                        wl.t = t, wl.i = i, wl.j = j, wl.goh = bg, wl.legendre = bl;
                    }
                }
        }
        out.push_back(wg);
        out.push_back(wl);
    }
    return out;
}

}  // namespace subrie
