#include "subrie/flow.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "subrie/structure.hpp"

namespace subrie {

// --- NumericFrame ---------------------------------------------------------------

NumericFrame::NumericFrame(const Frame& frame) : NumericFrame(frame, [](int, const Exponent&) { return 1.0; }) {}

NumericFrame::NumericFrame(const Frame& frame, const std::function<double(int, const Exponent&)>& scale)
{
    if (frame.empty()) throw InputError("NumericFrame: empty frame");
    dim_ = frame.front().dim();
    rank_ = static_cast<int>(frame.size());
    terms_.resize(frame.size());
    for (std::size_t i = 0; i < frame.size(); ++i) {
        if (frame[i].dim() != dim_) throw InputError("NumericFrame: fields of different dimension");
        terms_[i].resize(static_cast<std::size_t>(dim_));
        for (int j = 0; j < dim_; ++j)
            for (const auto& [e, c] : frame[i][j].terms()) {
                double coeff = to_double(c) * scale(j, e);
                if (coeff == 0.0) continue;
                terms_[i][static_cast<std::size_t>(j)].push_back({coeff, e});
                for (auto k : e) maxdeg_ = std::max(maxdeg_, static_cast<int>(k));
            }
    }
}

NumericFrame NumericFrame::dilated(const Frame& frame, const std::vector<int>& weights, double r)
{
    return NumericFrame(frame, [&](int j, const Exponent& e) {
        int p = 1 - weights[static_cast<std::size_t>(j)] + weighted_degree(e, weights);
        return std::pow(r, p);
    });
}

void NumericFrame::powers(const Eigen::VectorXd& x, Eigen::MatrixXd& P) const
{
    P.resize(dim_, maxdeg_ + 1);
    for (int k = 0; k < dim_; ++k) {
        P(k, 0) = 1.0;
        for (int e = 1; e <= maxdeg_; ++e) P(k, e) = P(k, e - 1) * x[k];
    }
}

void NumericFrame::eval(const Eigen::VectorXd& x, Eigen::MatrixXd& F) const
{
    Eigen::MatrixXd P;
    powers(x, P);
    F.setZero(dim_, rank_);
    for (int i = 0; i < rank_; ++i)
        for (int j = 0; j < dim_; ++j) {
            double s = 0.0;
            for (const auto& t : terms_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) {
                double v = t.coeff;
                for (int k = 0; k < dim_; ++k)
                    if (t.exps[static_cast<std::size_t>(k)]) v *= P(k, t.exps[static_cast<std::size_t>(k)]);
                s += v;
            }
            F(j, i) = s;
        }
}

Eigen::MatrixXd NumericFrame::eval(const Eigen::VectorXd& x) const
{
    Eigen::MatrixXd F;
    eval(x, F);
    return F;
}

Eigen::VectorXd NumericFrame::field(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const { return eval(x) * u; }

void NumericFrame::jacobian(const Eigen::VectorXd& x, const Eigen::VectorXd& u, Eigen::MatrixXd& J) const
{
    Eigen::MatrixXd P;
    powers(x, P);
    J.setZero(dim_, dim_);
    for (int i = 0; i < rank_; ++i) {
        if (u[i] == 0.0) continue;
        for (int j = 0; j < dim_; ++j)
            for (const auto& t : terms_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)])
                for (int k = 0; k < dim_; ++k) {
                    const int ek = t.exps[static_cast<std::size_t>(k)];
                    if (ek == 0) continue;
                    double v = u[i] * t.coeff * ek * P(k, ek - 1);
                    for (int l = 0; l < dim_; ++l)
                        if (l != k && t.exps[static_cast<std::size_t>(l)]) v *= P(l, t.exps[static_cast<std::size_t>(l)]);
                    J(j, k) += v;
                }
    }
}

// --- Control ----------------------------------------------------------------------

void sine_basis(double s, int n, Eigen::VectorXd& out)
{
    out.resize(n);
    if (n == 0) return;
    out[0] = s;
    const bool edge = s == 0.0 || s == 1.0;
    for (int k = 1; k < n; ++k) out[k] = edge ? 0.0 : std::sin(k * M_PI * s);
}

Control Control::sampled(double t0, double t1, const Eigen::MatrixXd& values, Interp interp)
{
    if (!(t1 > t0)) throw InputError("control interval must be nonempty");
    if (values.rows() < 1 || values.cols() < 1) throw InputError("sampled control needs at least one sample");
    if (!values.allFinite()) throw InputError("sampled control values must be finite");
    Control c;
    c.kind_ = Kind::Sampled;
    c.interp_ = interp;
    c.t0_ = t0;
    c.t1_ = t1;
    c.m_ = static_cast<int>(values.cols());
    c.data_ = values;
    c.offset_ = Eigen::VectorXd::Zero(c.m_);
    return c;
}

Control Control::basis(double t0, double t1, const Eigen::MatrixXd& coeffs, const Eigen::VectorXd& offset)
{
    if (!(t1 > t0)) throw InputError("control interval must be nonempty");
    if (coeffs.cols() != offset.size()) throw InputError("basis control: coefficient width differs from offset");
    Control c;
    c.kind_ = Kind::Basis;
    c.t0_ = t0;
    c.t1_ = t1;
    c.m_ = static_cast<int>(offset.size());
    c.data_ = coeffs;
    c.offset_ = offset;
    return c;
}

Control Control::constant(double t0, double t1, const Eigen::VectorXd& u)
{
    return basis(t0, t1, Eigen::MatrixXd::Zero(0, u.size()), u);
}

Control Control::piecewise(std::vector<Control> pieces)
{
    if (pieces.empty()) throw InputError("piecewise control needs at least one piece");
    for (std::size_t k = 1; k < pieces.size(); ++k) {
        if (std::abs(pieces[k].t0() - pieces[k - 1].t1()) > 1e-12 * std::max(1.0, std::abs(pieces[k].t0())))
            throw InputError("piecewise control pieces must be contiguous");
        if (pieces[k].rank() != pieces[0].rank()) throw InputError("piecewise control pieces differ in rank");
    }
    Control c;
    c.kind_ = Kind::Piecewise;
    c.t0_ = pieces.front().t0();
    c.t1_ = pieces.back().t1();
    c.m_ = pieces.front().rank();
    c.offset_ = Eigen::VectorXd::Zero(c.m_);
    c.pieces_ = std::move(pieces);
    return c;
}

Eigen::VectorXd Control::value(double t) const
{
    t = std::clamp(t, t0_, t1_);
    switch (kind_) {
    case Kind::Sampled: {
        const auto n = data_.rows();
        if (n == 1) return data_.row(0).transpose();
        double s = (t - t0_) / (t1_ - t0_) * static_cast<double>(n - 1);
        if (interp_ == Interp::Hold) {
            auto k = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(s)), n - 1);
            return data_.row(k).transpose();
        }
        auto k = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(s)), n - 2);
        double a = s - static_cast<double>(k);
        return ((1.0 - a) * data_.row(k) + a * data_.row(k + 1)).transpose();
    }
    case Kind::Basis: {
        Eigen::VectorXd out = offset_;
        if (data_.rows() == 0) return out;
        Eigen::VectorXd phi;
        sine_basis((t - t0_) / (t1_ - t0_), static_cast<int>(data_.rows()), phi);
        out += data_.transpose() * phi;
        return out;
    }
    case Kind::Piecewise: {
        for (std::size_t k = 0; k + 1 < pieces_.size(); ++k)
            if (t < pieces_[k].t1()) return pieces_[k].value(t);
        return pieces_.back().value(t);
    }
    }
    return offset_;
}

std::vector<double> Control::breakpoints() const
{
    std::vector<double> out;
    if (kind_ == Kind::Sampled) {
        const auto n = data_.rows();
        for (Eigen::Index k = 1; k + 1 < n; ++k) out.push_back(t0_ + (t1_ - t0_) * static_cast<double>(k) / static_cast<double>(n - 1));
    } else if (kind_ == Kind::Piecewise) {
        for (std::size_t k = 0; k < pieces_.size(); ++k) {
            if (k > 0) out.push_back(pieces_[k].t0());
            auto inner = pieces_[k].breakpoints();
            out.insert(out.end(), inner.begin(), inner.end());
        }
        std::sort(out.begin(), out.end());
    }
    return out;
}

double Control::sup_norm(bool include_offset, int samples_per_unit) const
{
    std::vector<double> ts;
    const int n = samples_per_unit > 0 ? std::max(2, static_cast<int>(samples_per_unit * (t1_ - t0_)))
                                       : std::max(2001, 40 * static_cast<int>(data_.rows()) + 1);
    for (int k = 0; k < n; ++k) ts.push_back(t0_ + (t1_ - t0_) * k / (n - 1));
    for (double b : breakpoints()) {
        ts.push_back(b);
        ts.push_back(std::max(t0_, b - 1e-12 * std::max(1.0, std::abs(b))));
    }
    double sup = 0.0;
    for (double t : ts) {
        Eigen::VectorXd v = value(t);
        if (!include_offset && kind_ != Kind::Piecewise) v -= offset_;
        sup = std::max(sup, v.norm());
    }
    return sup;
}

// --- flows --------------------------------------------------------------------

namespace {

std::function<bool(const Eigen::VectorXd&)> domain_check(const std::optional<Box>& domain, int dim)
{
    if (!domain) return {};
    Box b = *domain;
    return [b, dim](const Eigen::VectorXd& y) { return b.contains(y.head(dim), 1e-12); };
}

OdeOptions ode_options(const FlowOptions& opts)
{
    OdeOptions o;
    o.rtol = opts.rtol;
    o.atol = opts.atol;
    o.dense = opts.dense;
    return o;
}

}  // namespace

Trajectory chron_exp(const NumericFrame& frame, const Control& ctrl, const Eigen::VectorXd& p0, const FlowOptions& opts,
                     const std::optional<Box>& domain, bool reverse)
{
    if (ctrl.rank() != frame.rank()) throw InputError("chron_exp: control rank differs from frame rank");
    if (p0.size() != frame.dim()) throw InputError("chron_exp: initial point has wrong dimension");
    Eigen::MatrixXd F;
    OdeRhs rhs = [&](double t, const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
        frame.eval(x, F);
        dx = F * ctrl.value(t);
    };
    OdeOptions o = ode_options(opts);
    o.inside = domain_check(domain, frame.dim());
    Trajectory traj;
    traj.control = ctrl;
    traj.tol = opts.rtol;
    traj.solution = reverse ? integrate(rhs, ctrl.t1(), ctrl.t0(), p0, o, ctrl.breakpoints())
                            : integrate(rhs, ctrl.t0(), ctrl.t1(), p0, o, ctrl.breakpoints());
    return traj;
}

Trajectory chron_exp(const SRStructure& s, const Control& ctrl, const Eigen::VectorXd& p0, const FlowOptions& opts,
                     bool reverse)
{
    s.require_in_domain(p0, "chron_exp");
    return chron_exp(NumericFrame(s.frame), ctrl, p0, opts, s.domain, reverse);
}

Eigen::VectorXd flow_const(const NumericFrame& frame, const Eigen::VectorXd& u, double t, const Eigen::VectorXd& p0,
                           const FlowOptions& opts, const std::optional<Box>& domain)
{
    if (u.size() != frame.rank()) throw InputError("flow_const: control has wrong length");
    if (t == 0.0) return p0;
    Eigen::MatrixXd F;
    OdeRhs rhs = [&](double, const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
        frame.eval(x, F);
        dx = F * u;
    };
    OdeOptions o = ode_options(opts);
    o.dense = false;
    o.inside = domain_check(domain, frame.dim());
    return integrate(rhs, 0.0, t, p0, o).final_state();
}

Eigen::VectorXd flow_const(const SRStructure& s, const Eigen::VectorXd& u, double t, const Eigen::VectorXd& p0,
                           const FlowOptions& opts)
{
    s.require_in_domain(p0, "flow_const");
    return flow_const(NumericFrame(s.frame), u, t, p0, opts, s.domain);
}

Eigen::VectorXd flow_field(const VectorField& X, double t, const Eigen::VectorXd& p0, const FlowOptions& opts)
{
    return flow_const(NumericFrame(Frame{X}), Eigen::VectorXd::Ones(1), t, p0, opts);
}

// --- sensitivities ------------------------------------------------------------------

void ScalarBasis::eval(double t, Eigen::VectorXd& out) const
{
    const double s = std::clamp((t - t0) / (t1 - t0), 0.0, 1.0);
    if (kind == Kind::Sine) {
        sine_basis(s, n, out);
        return;
    }
    out.setZero(n);
    if (n == 1) {
        out[0] = 1.0;
        return;
    }
    const double x = s * (n - 1);
    int k = std::min(static_cast<int>(std::floor(x)), n - 2);
    double a = x - k;
    out[k] = 1.0 - a;
    out[k + 1] = a;
}

std::vector<double> ScalarBasis::breakpoints() const
{
    std::vector<double> out;
    if (kind == Kind::Hat)
        for (int k = 1; k + 1 < n; ++k) out.push_back(t0 + (t1 - t0) * k / (n - 1));
    return out;
}

Eigen::VectorXd LinearControlFamily::value(const Eigen::MatrixXd& coeffs, double t) const
{
    Eigen::VectorXd B;
    basis.eval(t, B);
    return offset + coeffs.transpose() * B;
}

Control LinearControlFamily::to_control(const Eigen::MatrixXd& coeffs) const
{
    if (basis.kind == ScalarBasis::Kind::Sine) return Control::basis(basis.t0, basis.t1, coeffs, offset);
    Eigen::MatrixXd values = coeffs;
    for (Eigen::Index k = 0; k < values.rows(); ++k) values.row(k) += offset.transpose();
    return Control::sampled(basis.t0, basis.t1, values, Control::Interp::Linear);
}

Sensitivity endpoint_sensitivity(const NumericFrame& frame, const LinearControlFamily& family,
                                 const Eigen::MatrixXd& coeffs, const Eigen::VectorXd& p0, const FlowOptions& opts)
{
    const int d = frame.dim(), m = frame.rank(), nb = family.basis.n, P = family.parameter_count();
    if (family.rank() != m) throw InputError("endpoint_sensitivity: family rank differs from frame rank");
    if (coeffs.rows() != nb || coeffs.cols() != m) throw InputError("endpoint_sensitivity: coefficient shape mismatch");
    Eigen::VectorXd y0 = Eigen::VectorXd::Zero(d + d * P);
    y0.head(d) = p0;
    Eigen::MatrixXd F, A;
    Eigen::VectorXd B;
    OdeRhs rhs = [&](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        const Eigen::VectorXd x = y.head(d);
        family.basis.eval(t, B);
        Eigen::VectorXd u = family.offset + coeffs.transpose() * B;
        frame.eval(x, F);
        frame.jacobian(x, u, A);
        dy.resize(y.size());
        dy.head(d) = F * u;
        Eigen::Map<const Eigen::MatrixXd> S(y.data() + d, d, P);
        Eigen::Map<Eigen::MatrixXd> dS(dy.data() + d, d, P);
        dS.noalias() = A * S;
        for (int i = 0; i < m; ++i)
            for (int b = 0; b < nb; ++b)
                if (B[b] != 0.0) dS.col(i * nb + b) += F.col(i) * B[b];
    };
    OdeOptions o = ode_options(opts);
    o.dense = false;
    auto sol = integrate(rhs, family.basis.t0, family.basis.t1, y0, o, family.basis.breakpoints());
    Sensitivity out;
    out.end_point = sol.final_state().head(d);
    out.jacobian = Eigen::Map<const Eigen::MatrixXd>(sol.final_state().data() + d, d, P);
    out.stats = sol.stats();
    return out;
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> flow_jacobian(const NumericFrame& frame, const Control& ctrl,
                                                          const Eigen::VectorXd& p0, const FlowOptions& opts,
                                                          bool reverse)
{
    const int d = frame.dim();
    Eigen::VectorXd y0(d + d * d);
    y0.head(d) = p0;
    Eigen::Map<Eigen::MatrixXd>(y0.data() + d, d, d).setIdentity();
    Eigen::MatrixXd F, A;
    OdeRhs rhs = [&](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        const Eigen::VectorXd x = y.head(d);
        Eigen::VectorXd u = ctrl.value(t);
        frame.eval(x, F);
        frame.jacobian(x, u, A);
        dy.resize(y.size());
        dy.head(d) = F * u;
        Eigen::Map<const Eigen::MatrixXd> S(y.data() + d, d, d);
        Eigen::Map<Eigen::MatrixXd>(dy.data() + d, d, d).noalias() = A * S;
    };
    OdeOptions o = ode_options(opts);
    o.dense = false;
    auto sol = reverse ? integrate(rhs, ctrl.t1(), ctrl.t0(), y0, o, ctrl.breakpoints())
                       : integrate(rhs, ctrl.t0(), ctrl.t1(), y0, o, ctrl.breakpoints());
    Eigen::VectorXd x = sol.final_state().head(d);
    Eigen::MatrixXd J = Eigen::Map<const Eigen::MatrixXd>(sol.final_state().data() + d, d, d);
    return {x, J};
}

// --- ad series and variation of constants ---------------------------------------------

AdSeries ad_series(const VectorField& X, const VectorField& Y, const Rational& sigma, int N, const std::optional<Box>& box,
                   int seminorm_order)
{
    if (N < 1) throw InputError("ad_series: N must be at least 1");
    if (X.dim() != Y.dim()) throw InputError("ad_series: dimension mismatch");
    AdSeries out;
    out.truncation = Y;
    VectorField term = Y;
    Rational coeff = 1;
    for (int k = 1; k < N; ++k) {
        term = lie_bracket(X, term);
        coeff *= sigma;
        coeff /= k;
        if (term.is_zero()) break;
        out.truncation += coeff * term;
    }
    VectorField tail = term.is_zero() ? term : lie_bracket(X, term);
    if (N == 1) tail = lie_bracket(X, Y);
    out.terminates = tail.is_zero() || term.is_zero();
    Box b = box ? *box : Box::cube(X.dim(), 1.0);
    const int j = seminorm_order;
    const double s = std::abs(to_double(sigma));
    double fact = 1.0;
    for (int k = 2; k <= N; ++k) fact *= k;
    const double xj1 = seminorm(X, j + 1, b);
    const double xjN = seminorm(X, j + N, b);
    const double yjN = seminorm(Y, j + N, b);
    out.remainder_bound = std::exp(s * xj1) * std::pow(s, N) * std::pow(xjN, N) * yjN / fact;
    return out;
}

Eigen::VectorXd numeric_pushforward(const VectorField& X, const VectorField& Y, double sigma, const Eigen::VectorXd& q,
                                    const FlowOptions& opts)
{
    NumericFrame fx(Frame{X});
    Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
    Eigen::VectorXd w = flow_const(fx, one, sigma, q, opts);
    if (sigma == 0.0) return Y.evaluate(q);
    // D(e^{-sigma X}) at w, by flowing the variational system backward over [0, sigma]
    Control c = Control::constant(std::min(0.0, sigma), std::max(0.0, sigma), one);
    auto [back, J] = flow_jacobian(fx, c, w, opts, sigma > 0);
    (void)back;
    return J * Y.evaluate(w);
}

VariationCheck variation_check(const VectorField& X, const Frame& Y, const Control& v, const Eigen::VectorXd& p0, double t,
                               const FlowOptions& opts)
{
    const int d = X.dim();
    const int m = static_cast<int>(Y.size());
    if (v.rank() != m) throw InputError("variation_check: control rank differs from number of fields");
    if (!(t > 0)) throw InputError("variation_check: t must be positive");
    VariationCheck out;

    // left side: flow of X + Y_tau from p0
    Frame aug{X};
    aug.insert(aug.end(), Y.begin(), Y.end());
    NumericFrame fa(aug);
    Eigen::MatrixXd F;
    OdeOptions o;
    o.rtol = opts.rtol;
    o.atol = opts.atol;
    o.dense = false;
    OdeRhs lhs = [&](double tau, const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
        fa.eval(x, F);
        Eigen::VectorXd u(m + 1);
        u[0] = 1.0;
        u.tail(m) = v.value(tau);
        dx = F * u;
    };
    out.left = integrate(lhs, 0.0, t, p0, o, v.breakpoints()).final_state();

    // right side: q = e^{tX} p0, then z' = sum_i v_i(tau) (e^{(tau-t) ad X} Y_i)(z)
    Eigen::VectorXd q = flow_field(X, t, p0, opts);
    std::vector<std::vector<VectorField>> series(static_cast<std::size_t>(m));
    bool terminates = true;
    for (int i = 0; i < m; ++i) {
        VectorField term = Y[static_cast<std::size_t>(i)];
        int k = 0;
        while (!term.is_zero() && k < 16) {
            series[static_cast<std::size_t>(i)].push_back(term);
            term = lie_bracket(X, term);
            ++k;
        }
        if (!term.is_zero()) terminates = false;
    }
    out.symbolic_series = terminates;
    OdeRhs rhs;
    std::vector<NumericFrame> compiled;
    if (terminates) {
        for (const auto& s : series) compiled.push_back(s.empty() ? NumericFrame(Frame{VectorField(d)}) : NumericFrame(s));
        rhs = [&](double tau, const Eigen::VectorXd& z, Eigen::VectorXd& dz) {
            Eigen::VectorXd vi = v.value(tau);
            dz = Eigen::VectorXd::Zero(d);
            const double sigma = tau - t;
            for (int i = 0; i < m; ++i) {
                if (vi[i] == 0.0) continue;
                const auto& cf = compiled[static_cast<std::size_t>(i)];
                Eigen::VectorXd w(cf.rank());
                double c = 1.0;
                for (int k = 0; k < cf.rank(); ++k) {
                    w[k] = c;
                    c *= sigma / (k + 1);
                }
                dz += vi[i] * cf.field(z, w);
            }
        };
    } else {
        rhs = [&](double tau, const Eigen::VectorXd& z, Eigen::VectorXd& dz) {
            Eigen::VectorXd vi = v.value(tau);
            dz = Eigen::VectorXd::Zero(d);
            FlowOptions tight = opts;
            tight.rtol = tight.atol = std::min(opts.rtol, 1e-12);
            for (int i = 0; i < m; ++i)
                if (vi[i] != 0.0) dz += vi[i] * numeric_pushforward(X, Y[static_cast<std::size_t>(i)], tau - t, z, tight);
        };
    }
    out.right = integrate(rhs, 0.0, t, q, o, v.breakpoints()).final_state();
    out.residual = (out.left - out.right).norm();
    return out;
}

}  // namespace subrie
