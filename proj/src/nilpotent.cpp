#include "subrie/nilpotent.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace subrie {

namespace {

std::string word_string(const std::vector<int>& w)
{
    std::ostringstream os;
    for (std::size_t i = 0; i < w.size(); ++i) os << (i ? "," : "") << (w[i] + 1);
    return "[" + os.str() + "]";
}

// Exponents over `vars` (subset of 0..d-1) with total degree in [min_deg, ..] and weighted degree <= max_wdeg.
void enumerate_monomials(const std::vector<int>& vars, const std::vector<int>& weights, int d, int min_deg, int max_wdeg,
                         std::vector<Exponent>& out)
{
    Exponent e(static_cast<std::size_t>(d), 0);
    std::function<void(std::size_t, int, int)> rec = [&](std::size_t k, int deg, int wdeg) {
        if (k == vars.size()) {
            if (deg >= min_deg) out.push_back(e);
            return;
        }
        const auto v = static_cast<std::size_t>(vars[k]);
        for (int a = 0; wdeg + a * weights[v] <= max_wdeg; ++a) {
            e[v] = static_cast<std::uint16_t>(a);
            rec(k + 1, deg + a, wdeg + a * weights[v]);
        }
        e[v] = 0;
    };
    rec(0, 0, 0);
}

// Values at 0 of X_{i1}...X_{ik} f for all operator words of length 1..max_len, in a fixed order.
std::vector<Rational> word_derivatives_at_zero(const Frame& frame, const Multinomial& f, int max_len)
{
    std::vector<Rational> vals;
    const std::vector<Rational> zero(static_cast<std::size_t>(f.dim()), Rational(0));
    std::vector<Multinomial> level{f};
    for (int k = 1; k <= max_len; ++k) {
        std::vector<Multinomial> next;
        next.reserve(level.size() * frame.size());
        for (const auto& X : frame)
            for (const auto& g : level) {
                Multinomial h = g.is_zero() ? g : apply(X, g);
                vals.push_back(h.evaluate(zero));
                next.push_back(std::move(h));
            }
        level = std::move(next);
    }
    return vals;
}

Multinomial monomial_in(const Exponent& e, const std::vector<Multinomial>& z)
{
    Multinomial out = Multinomial::constant(z.front().dim(), 1);
    for (std::size_t k = 0; k < e.size(); ++k)
        if (e[k] > 0) out = out * pow(z[k], e[k]);
    return out;
}

}  // namespace

Eigen::VectorXd PrivilegedChart::apply(const Eigen::VectorXd& x) const
{
    Eigen::VectorXd xi = x - base;
    Eigen::VectorXd y(dim());
    for (int j = 0; j < dim(); ++j) y[j] = forward_centered[static_cast<std::size_t>(j)].evaluate(xi);
    return y;
}

Eigen::VectorXd PrivilegedChart::apply_inverse(const Eigen::VectorXd& y) const
{
    Eigen::VectorXd x(dim());
    for (int j = 0; j < dim(); ++j) x[j] = base[j] + inverse_centered[static_cast<std::size_t>(j)].evaluate(y);
    return x;
}

PrivilegedChart privileged_chart(const SRStructure& s, const Eigen::VectorXd& p, const FlagOptions& opts)
{
    s.require_in_domain(p, "privileged_chart");
    const int d = s.dim;
    const auto du = static_cast<std::size_t>(d);
    FlagOptions fo = opts;
    fo.probe = false;
    FlagReport flag = flag_at(s, p, fo);

    PrivilegedChart chart;
    chart.base = p;
    chart.growth_vector = flag.growth_vector;
    for (int i = 0; i < d; ++i) chart.base_exact.push_back(to_rational(p[i]));

    // (i) adapted basis
    auto levels = bracket_levels(s.frame, flag.step);
    std::vector<const BracketWord*> kept;
    Eigen::MatrixXd cols(d, 0);
    int rank = 0;
    for (const auto& level : levels) {
        for (const auto& bw : level) {
            if (rank == d) break;
            Eigen::MatrixXd trial(d, cols.cols() + 1);
            trial << cols, bw.field.evaluate(p);
            int r = numeric_rank(trial, opts.rank_tol);
            if (r > rank) {
                cols = trial;
                rank = r;
                kept.push_back(&bw);
                chart.weights.push_back(static_cast<int>(bw.word.size()));
                chart.provenance.words.push_back(bw.word);
            }
        }
    }
    if (rank < d) throw NumericalError("privileged_chart: rank stagnation, frame not bracket-generating at p");
    chart.provenance.log.push_back("adapted basis:");
    for (std::size_t k = 0; k < kept.size(); ++k)
        chart.provenance.log.push_back("  " + word_string(kept[k]->word) + " weight " + std::to_string(chart.weights[k]));

    // (ii) linear change z = A^{-1} (x - p)
    RationalMatrix A(du, std::vector<Rational>(du));
    for (std::size_t k = 0; k < du; ++k) {
        auto v = kept[k]->field.evaluate(chart.base_exact);
        for (std::size_t i = 0; i < du; ++i) A[i][k] = v[i];
    }
    RationalMatrix Ainv = inverse_exact(A);
    chart.provenance.linear_change = A;

    Frame centered;
    for (const auto& X : s.frame) {
        VectorField Y(d);
        for (int i = 0; i < d; ++i) Y[i] = translate(X[i], chart.base_exact);
        centered.push_back(std::move(Y));
    }
    std::vector<Multinomial> z(du, Multinomial(d));
    for (std::size_t k = 0; k < du; ++k)
        for (std::size_t l = 0; l < du; ++l)
            if (Ainv[k][l] != 0) z[k] += Multinomial::variable(d, static_cast<int>(l)) * Ainv[k][l];

    // (iii) triangular corrections
    const auto& w = chart.weights;
    chart.provenance.corrections.assign(du, Multinomial(d));
    chart.forward_centered = z;
    for (std::size_t j = 0; j < du; ++j) {
        if (w[j] < 2) continue;
        std::vector<int> lower;
        for (std::size_t k = 0; k < du; ++k)
            if (w[k] < w[j]) lower.push_back(static_cast<int>(k));
        auto rhs = word_derivatives_at_zero(centered, z[j], w[j] - 1);
        std::optional<std::vector<Rational>> coeffs;
        std::vector<Exponent> monos;
        for (int min_deg : {2, 1}) {
            monos.clear();
            enumerate_monomials(lower, w, d, min_deg, w[j] - 1, monos);
            if (monos.empty()) {
                bool all_zero = std::all_of(rhs.begin(), rhs.end(), [](const Rational& r) { return r == 0; });
                if (all_zero) {
                    coeffs = std::vector<Rational>{};
                    break;
                }
                continue;
            }
            RationalMatrix M(rhs.size(), std::vector<Rational>(monos.size()));
            for (std::size_t c = 0; c < monos.size(); ++c) {
                auto col = word_derivatives_at_zero(centered, monomial_in(monos[c], z), w[j] - 1);
                for (std::size_t r = 0; r < rhs.size(); ++r) M[r][c] = col[r];
            }
            coeffs = solve_exact(M, rhs);
            if (coeffs) {
                if (min_deg == 1) chart.provenance.log.push_back("coordinate " + std::to_string(j + 1) + ": linear terms needed");
                break;
            }
        }
        if (!coeffs)
            throw NumericalError("privileged_chart: correction for coordinate " + std::to_string(j + 1) +
                                 " did not converge (inconsistent order conditions)");
        Multinomial P(d);
        for (std::size_t c = 0; c < monos.size(); ++c) P.add_term(monos[c], (*coeffs)[c]);
        chart.provenance.corrections[j] = P;
        chart.forward_centered[j] = z[j] - compose(P, z);
    }

    // inverse: Z_j(y) = y_j + P_j(Z(y)) in increasing weight, then xi = A Z
    std::vector<Multinomial> Z;
    for (int k = 0; k < d; ++k) Z.push_back(Multinomial::variable(d, k));
    for (std::size_t j = 0; j < du; ++j)
        if (!chart.provenance.corrections[j].is_zero()) Z[j] = Z[j] + compose(chart.provenance.corrections[j], Z);
    chart.inverse_centered.assign(du, Multinomial(d));
    for (std::size_t i = 0; i < du; ++i)
        for (std::size_t k = 0; k < du; ++k)
            if (A[i][k] != 0) chart.inverse_centered[i] += Z[k] * A[i][k];

    std::vector<Multinomial> shift;  // xi = x - p
    for (int i = 0; i < d; ++i)
        shift.push_back(Multinomial::variable(d, i) - Multinomial::constant(d, chart.base_exact[static_cast<std::size_t>(i)]));
    for (std::size_t j = 0; j < du; ++j) {
        chart.forward.push_back(compose(chart.forward_centered[j], shift));
        chart.inverse.push_back(chart.inverse_centered[j] + Multinomial::constant(d, chart.base_exact[j]));
    }
    verify_chart(s, chart);
    return chart;
}

void verify_chart(const SRStructure& s, const PrivilegedChart& chart)
{
    const int d = chart.dim();
    for (int j = 0; j < d; ++j)
        if (chart.forward[static_cast<std::size_t>(j)].evaluate(chart.base_exact) != 0)
            throw NumericalError("chart check: forward(p) != 0 in coordinate " + std::to_string(j + 1));
    for (int j = 0; j < d; ++j) {
        if (compose(chart.forward[static_cast<std::size_t>(j)], chart.inverse) != Multinomial::variable(d, j))
            throw NumericalError("chart check: forward o inverse is not the identity");
        if (compose(chart.inverse[static_cast<std::size_t>(j)], chart.forward) != Multinomial::variable(d, j))
            throw NumericalError("chart check: inverse o forward is not the identity");
    }
    for (const auto& X : pushed_frame(s, chart))
        for (int j = 0; j < d; ++j) {
            auto ord = weighted_order(X[j], chart.weights);
            if (ord && *ord < chart.weights[static_cast<std::size_t>(j)] - 1)
                throw NumericalError("chart check: order condition fails in coordinate " + std::to_string(j + 1));
        }
}

Eigen::VectorXd dilate(const std::vector<int>& weights, double lambda, const Eigen::VectorXd& y)
{
    if (!(lambda > 0)) throw InputError("dilate: lambda must be positive");
    if (static_cast<int>(weights.size()) != y.size()) throw InputError("dilate: dimension mismatch");
    Eigen::VectorXd out(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) out[i] = std::pow(lambda, weights[static_cast<std::size_t>(i)]) * y[i];
    return out;
}

double pseudo_norm(const std::vector<int>& weights, const Eigen::VectorXd& y)
{
    if (static_cast<int>(weights.size()) != y.size()) throw InputError("pseudo_norm: dimension mismatch");
    double s = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        int w = weights[static_cast<std::size_t>(i)];
        double a = std::abs(y[i]);
        s += w == 1 ? a : (w == 2 ? std::sqrt(a) : std::pow(a, 1.0 / w));
    }
    return s;
}

Frame pushed_frame(const SRStructure& s, const PrivilegedChart& chart)
{
    const int d = chart.dim();
    Frame out;
    for (const auto& X : s.frame) {
        VectorField Xc(d);
        for (int i = 0; i < d; ++i) Xc[i] = translate(X[i], chart.base_exact);
        VectorField Y(d);
        for (int j = 0; j < d; ++j)
            Y[j] = compose(subrie::apply(Xc, chart.forward_centered[static_cast<std::size_t>(j)]), chart.inverse_centered);
        out.push_back(std::move(Y));
    }
    return out;
}

VectorField rescale_field(const VectorField& v, const std::vector<int>& weights, const Rational& lambda)
{
    if (lambda <= 0) throw InputError("rescale_field: lambda must be positive");
    std::vector<Rational> factors;
    for (int w : weights) {
        Rational f = 1;
        for (int k = 0; k < w; ++k) f *= lambda;
        factors.push_back(f);
    }
    VectorField out(v.dim());
    for (int j = 0; j < v.dim(); ++j) {
        Rational c = lambda / factors[static_cast<std::size_t>(j)];
        out[j] = scale_variables(v[j], factors) * c;
    }
    return out;
}

SRStructure NilpotentFrame::as_structure(const std::string& name) const
{
    SRStructure s;
    s.name = name;
    s.dim = dim();
    s.frame = fields;
    return s;
}

NilpotentFrame nilpotentize(const SRStructure& s, const PrivilegedChart& chart)
{
    NilpotentFrame nf;
    nf.chart = chart;
    for (const auto& X : pushed_frame(s, chart)) {
        VectorField H(chart.dim());
        for (int j = 0; j < chart.dim(); ++j) {
            const int target = chart.weights[static_cast<std::size_t>(j)] - 1;
            auto ord = weighted_order(X[j], chart.weights);
            if (ord && *ord < target) throw NumericalError("nilpotentize: pushed field violates the order condition");
            H[j] = weighted_part(X[j], chart.weights, target);
        }
        nf.fields.push_back(std::move(H));
    }
    FlagOptions fo;
    fo.probe = false;
    nf.growth_vector = flag_at(nf.as_structure(), Eigen::VectorXd::Zero(chart.dim()), fo).growth_vector;
    if (nf.growth_vector != chart.growth_vector)
        throw NumericalError("nilpotentize: growth vector of the approximation differs from the base point");
    return nf;
}

std::optional<double> loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys, double floor)
{
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i)
        if (xs[i] > 0 && ys[i] > floor) {
            lx.push_back(std::log(xs[i]));
            ly.push_back(std::log(ys[i]));
        }
    if (lx.size() < 2) return std::nullopt;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(lx.size());
    my /= static_cast<double>(ly.size());
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx == 0) return std::nullopt;
    return sxy / sxx;
}

ConvergenceTable check_convergence(const SRStructure& s, const PrivilegedChart& chart, const NilpotentFrame& nf,
                                   const std::vector<double>& lambdas, const std::optional<Box>& box, int per_axis)
{
    if (lambdas.empty()) throw InputError("check_convergence: empty lambda list");
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        if (!(lambdas[k] > 0)) throw InputError("check_convergence: lambdas must be positive");
        if (k > 0 && !(lambdas[k] < lambdas[k - 1])) throw InputError("check_convergence: lambdas must be decreasing");
    }
    Box b = box ? *box : Box::cube(chart.dim(), 1.0);
    auto nodes = b.grid(per_axis);
    Frame pushed = pushed_frame(s, chart);
    ConvergenceTable table;
    for (double lam : lambdas) {
        double err = 0.0;
        for (std::size_t i = 0; i < pushed.size(); ++i) {
            VectorField diff = rescale_field(pushed[i], chart.weights, to_rational(lam)) - nf.fields[i];
            if (diff.is_zero()) continue;
            for (const auto& y : nodes) err = std::max(err, diff.evaluate(y).cwiseAbs().maxCoeff());
        }
        table.rows.push_back({lam, err});
    }
    if (table.rows.size() >= 2) {
        bool ok = true;
        for (std::size_t k = 1; k < table.rows.size(); ++k)
            if (table.rows[k].error > 1.05 * table.rows[k - 1].error + 1e-15) ok = false;
        table.nonincreasing = ok;
        std::vector<double> xs, ys;
        for (const auto& r : table.rows) {
            xs.push_back(r.lambda);
            ys.push_back(r.error);
        }
        table.slope = loglog_slope(xs, ys, 1e-14);
    }
    return table;
}

}  // namespace subrie
