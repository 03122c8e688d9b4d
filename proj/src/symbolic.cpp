#include "subrie/symbolic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace subrie {

Rational to_rational(double value)
{
    if (!std::isfinite(value)) throw InputError("cannot convert non-finite value to a rational");
    Rational r(value);
    r.canonicalize();
    return r;
}

double to_double(const Rational& value) { return value.get_d(); }

std::string to_string(const Rational& value) { return value.get_str(); }

Rational parse_rational(std::string_view text)
{
    std::string s(text);
    if (s.empty()) throw InputError("empty numeric literal");
    bool negative = false;
    std::size_t pos = 0;
    if (s[0] == '-' || s[0] == '+') {
        negative = s[0] == '-';
        pos = 1;
    }
    std::string body = s.substr(pos);
    Rational out;
    if (auto slash = body.find('/'); slash != std::string::npos) {
        mpz_class num, den;
        if (num.set_str(body.substr(0, slash), 10) != 0 || den.set_str(body.substr(slash + 1), 10) != 0 || den == 0)
            throw InputError("bad rational literal '" + s + "'");
        out = Rational(num, den);
    } else {
        std::string mantissa = body;
        long exponent = 0;
        if (auto e = body.find_first_of("eE"); e != std::string::npos) {
            mantissa = body.substr(0, e);
            try {
                exponent = std::stol(body.substr(e + 1));
            } catch (const std::exception&) {
                throw InputError("bad exponent in literal '" + s + "'");
            }
        }
        std::string digits;
        long frac_digits = 0;
        bool seen_dot = false;
        for (char c : mantissa) {
            if (c == '.') {
                if (seen_dot) throw InputError("bad decimal literal '" + s + "'");
                seen_dot = true;
            } else if (c >= '0' && c <= '9') {
                digits.push_back(c);
                if (seen_dot) ++frac_digits;
            } else {
                throw InputError("bad decimal literal '" + s + "'");
            }
        }
        if (digits.empty()) throw InputError("bad decimal literal '" + s + "'");
        mpz_class num(digits, 10);
        long shift = exponent - frac_digits;
        mpz_class ten_pow;
        mpz_ui_pow_ui(ten_pow.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(shift)));
        out = shift >= 0 ? Rational(num * ten_pow) : Rational(num, ten_pow);
    }
    out.canonicalize();
    return negative ? Rational(-out) : out;
}

// --- Box --------------------------------------------------------------------

Box Box::cube(int dim, double half_width)
{
    return Box{Eigen::VectorXd::Constant(dim, -half_width), Eigen::VectorXd::Constant(dim, half_width)};
}

bool Box::contains(const Eigen::VectorXd& x, double slack) const
{
    for (int i = 0; i < dim(); ++i)
        if (x[i] < lo[i] - slack || x[i] > hi[i] + slack) return false;
    return true;
}

std::vector<Eigen::VectorXd> Box::grid(int per_axis, std::size_t max_nodes) const
{
    const int d = dim();
    int n = std::max(per_axis, 1);
    while (n > 2 && std::pow(static_cast<double>(n), d) > static_cast<double>(max_nodes)) n -= 2;
    std::vector<Eigen::VectorXd> nodes;
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    while (true) {
        Eigen::VectorXd x(d);
        for (int i = 0; i < d; ++i)
            x[i] = n == 1 ? 0.5 * (lo[i] + hi[i]) : lo[i] + (hi[i] - lo[i]) * idx[static_cast<std::size_t>(i)] / (n - 1);
        nodes.push_back(std::move(x));
        int k = 0;
        while (k < d && ++idx[static_cast<std::size_t>(k)] == n) idx[static_cast<std::size_t>(k++)] = 0;
        if (k == d) break;
    }
    return nodes;
}

// --- Multinomial --------------------------------------------------------------

Multinomial::Multinomial(int dim) : dim_(dim)
{
    if (dim <= 0) throw InputError("polynomial dimension must be positive");
}

Multinomial Multinomial::constant(int dim, const Rational& c)
{
    Multinomial p(dim);
    p.add_term(Exponent(static_cast<std::size_t>(dim), 0), c);
    return p;
}

Multinomial Multinomial::variable(int dim, int index)
{
    if (index < 0 || index >= dim) throw InputError("variable index out of range");
    Exponent e(static_cast<std::size_t>(dim), 0);
    e[static_cast<std::size_t>(index)] = 1;
    return monomial(e, 1);
}

Multinomial Multinomial::monomial(const Exponent& e, const Rational& c)
{
    Multinomial p(static_cast<int>(e.size()));
    p.add_term(e, c);
    return p;
}

bool Multinomial::is_constant() const
{
    if (terms_.empty()) return true;
    if (terms_.size() > 1) return false;
    const auto& e = terms_.begin()->first;
    return std::all_of(e.begin(), e.end(), [](auto k) { return k == 0; });
}

int Multinomial::degree() const
{
    int deg = -1;
    for (const auto& [e, c] : terms_) {
        int s = 0;
        for (auto k : e) s += k;
        deg = std::max(deg, s);
    }
    return deg;
}

Rational Multinomial::coefficient(const Exponent& e) const
{
    auto it = terms_.find(e);
    return it == terms_.end() ? Rational(0) : it->second;
}

void Multinomial::add_term(const Exponent& e, const Rational& c)
{
    if (static_cast<int>(e.size()) != dim_) throw InputError("exponent length does not match polynomial dimension");
    if (c == 0) return;
    Rational v = c;
    v.canonicalize();  // GMP arithmetic and equality assume canonical form
    auto [it, inserted] = terms_.try_emplace(e, v);
    if (!inserted) {
        it->second += v;
        if (it->second == 0) terms_.erase(it);
    }
}

static void check_same_dim(const Multinomial& a, const Multinomial& b)
{
    if (a.dim() != b.dim())
        throw InputError("polynomial dimension mismatch (" + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) + ")");
}

Multinomial& Multinomial::operator+=(const Multinomial& other)
{
    check_same_dim(*this, other);
    for (const auto& [e, c] : other.terms_) add_term(e, c);
    return *this;
}

Multinomial& Multinomial::operator-=(const Multinomial& other)
{
    check_same_dim(*this, other);
    for (const auto& [e, c] : other.terms_) add_term(e, -c);
    return *this;
}

Multinomial& Multinomial::operator*=(const Rational& c)
{
    if (c == 0) {
        terms_.clear();
        return *this;
    }
    for (auto& [e, coeff] : terms_) coeff *= c;
    return *this;
}

Multinomial operator*(const Multinomial& a, const Multinomial& b)
{
    check_same_dim(a, b);
    Multinomial out(a.dim());
    Exponent e(static_cast<std::size_t>(a.dim()));
    for (const auto& [ea, ca] : a.terms_)
        for (const auto& [eb, cb] : b.terms_) {
            for (std::size_t i = 0; i < e.size(); ++i) e[i] = static_cast<std::uint16_t>(ea[i] + eb[i]);
            out.add_term(e, ca * cb);
        }
    return out;
}

Multinomial operator-(Multinomial a)
{
    for (auto& [e, c] : a.terms_) c = -c;
    return a;
}

bool operator==(const Multinomial& a, const Multinomial& b) { return a.dim_ == b.dim_ && a.terms_ == b.terms_; }

Rational Multinomial::evaluate(const std::vector<Rational>& x) const
{
    if (static_cast<int>(x.size()) != dim_) throw InputError("evaluation point has wrong dimension");
    Rational sum = 0;
    for (const auto& [e, c] : terms_) {
        Rational term = c;
        for (std::size_t i = 0; i < e.size(); ++i)
            for (int k = 0; k < e[i]; ++k) term *= x[i];
        sum += term;
    }
    return sum;
}

Multinomial pow(const Multinomial& p, int k)
{
    if (k < 0) throw InputError("negative polynomial power");
    Multinomial out = Multinomial::constant(p.dim(), 1);
    Multinomial base = p;
    while (k > 0) {
        if (k & 1) out = out * base;
        k >>= 1;
        if (k > 0) base = base * base;
    }
    return out;
}

Multinomial partial(const Multinomial& p, int index)
{
    if (index < 0 || index >= p.dim()) throw InputError("partial derivative index out of range");
    Multinomial out(p.dim());
    const auto i = static_cast<std::size_t>(index);
    for (const auto& [e, c] : p.terms()) {
        if (e[i] == 0) continue;
        Exponent f = e;
        f[i] = static_cast<std::uint16_t>(e[i] - 1);
        out.add_term(f, c * e[i]);
    }
    return out;
}

Multinomial compose(const Multinomial& p, const std::vector<Multinomial>& subs)
{
    if (static_cast<int>(subs.size()) != p.dim()) throw InputError("compose: substitution count must equal dimension");
    if (subs.empty()) throw InputError("compose: empty substitution");
    const int target = subs.front().dim();
    for (const auto& s : subs)
        if (s.dim() != target) throw InputError("compose: substitutions must share a dimension");
    // powers[i][k] = subs[i]^k, built lazily
    std::vector<std::vector<Multinomial>> powers(subs.size());
    auto power = [&](std::size_t i, int k) -> const Multinomial& {
        auto& table = powers[i];
        if (table.empty()) table.push_back(Multinomial::constant(target, 1));
        while (static_cast<int>(table.size()) <= k) table.push_back(table.back() * subs[i]);
        return table[static_cast<std::size_t>(k)];
    };
    Multinomial out(target);
    for (const auto& [e, c] : p.terms()) {
        Multinomial term = Multinomial::constant(target, c);
        for (std::size_t i = 0; i < e.size(); ++i)
            if (e[i] > 0) term = term * power(i, e[i]);
        out += term;
    }
    return out;
}

Multinomial scale_variables(const Multinomial& p, const std::vector<Rational>& factors)
{
    if (static_cast<int>(factors.size()) != p.dim()) throw InputError("scale_variables: wrong factor count");
    Multinomial out(p.dim());
    for (const auto& [e, c] : p.terms()) {
        Rational s = c;
        for (std::size_t i = 0; i < e.size(); ++i)
            for (int k = 0; k < e[i]; ++k) s *= factors[i];
        out.add_term(e, s);
    }
    return out;
}

Multinomial translate(const Multinomial& p, const std::vector<Rational>& shift)
{
    const int d = p.dim();
    if (static_cast<int>(shift.size()) != d) throw InputError("translate: wrong shift length");
    std::vector<Multinomial> subs;
    subs.reserve(shift.size());
    for (int i = 0; i < d; ++i)
        subs.push_back(Multinomial::variable(d, i) + Multinomial::constant(d, shift[static_cast<std::size_t>(i)]));
    return compose(p, subs);
}

int weighted_degree(const Exponent& e, const std::vector<int>& weights)
{
    int s = 0;
    for (std::size_t i = 0; i < e.size(); ++i) s += weights[i] * e[i];
    return s;
}

std::optional<int> weighted_order(const Multinomial& p, const std::vector<int>& weights)
{
    if (static_cast<int>(weights.size()) != p.dim()) throw InputError("weighted_order: wrong weight count");
    for (int w : weights)
        if (w <= 0) throw InputError("weights must be positive");
    std::optional<int> best;
    for (const auto& [e, c] : p.terms()) {
        int s = weighted_degree(e, weights);
        if (!best || s < *best) best = s;
    }
    return best;
}

Multinomial weighted_part(const Multinomial& p, const std::vector<int>& weights, int degree)
{
    Multinomial out(p.dim());
    for (const auto& [e, c] : p.terms())
        if (weighted_degree(e, weights) == degree) out.add_term(e, c);
    return out;
}

std::string to_string(const Multinomial& p)
{
    if (p.is_zero()) return "0";
    std::ostringstream os;
    bool first = true;
    // Highest total degree first reads more naturally; map order is lexicographic.
    std::vector<std::pair<Exponent, Rational>> terms(p.terms().begin(), p.terms().end());
    std::stable_sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) {
        int da = 0, db = 0;
        for (auto k : a.first) da += k;
        for (auto k : b.first) db += k;
        return da > db;
    });
    for (const auto& [e, c] : terms) {
        Rational mag = abs(c);
        if (first) {
            if (c < 0) os << "-";
        } else {
            os << (c < 0 ? " - " : " + ");
        }
        first = false;
        bool has_var = std::any_of(e.begin(), e.end(), [](auto k) { return k > 0; });
        bool wrote = false;
        if (!has_var || mag != 1) {
            os << mag.get_str();
            wrote = true;
        }
        for (std::size_t i = 0; i < e.size(); ++i) {
            if (e[i] == 0) continue;
            if (wrote) os << "*";
            os << "x" << (i + 1);
            if (e[i] > 1) os << "^" << e[i];
            wrote = true;
        }
    }
    return os.str();
}

// --- VectorField ----------------------------------------------------------------

VectorField::VectorField(int dim)
{
    if (dim <= 0) throw InputError("vector field dimension must be positive");
    components_.assign(static_cast<std::size_t>(dim), Multinomial(dim));
}

VectorField::VectorField(std::vector<Multinomial> components) : components_(std::move(components))
{
    if (components_.empty()) throw InputError("vector field needs at least one component");
    for (const auto& c : components_)
        if (c.dim() != dim()) throw InputError("vector field component count must equal ambient dimension");
}

VectorField VectorField::coordinate(int dim, int index)
{
    VectorField v(dim);
    v[index] = Multinomial::constant(dim, 1);
    return v;
}

bool VectorField::is_zero() const
{
    return std::all_of(components_.begin(), components_.end(), [](const auto& c) { return c.is_zero(); });
}

VectorField& VectorField::operator+=(const VectorField& other)
{
    if (dim() != other.dim()) throw InputError("vector field dimension mismatch");
    for (int i = 0; i < dim(); ++i) (*this)[i] += other[i];
    return *this;
}

VectorField& VectorField::operator-=(const VectorField& other)
{
    if (dim() != other.dim()) throw InputError("vector field dimension mismatch");
    for (int i = 0; i < dim(); ++i) (*this)[i] -= other[i];
    return *this;
}

VectorField operator*(const Rational& c, VectorField v)
{
    for (auto& comp : v.components_) comp *= c;
    return v;
}

VectorField operator*(const Multinomial& f, VectorField v)
{
    for (auto& comp : v.components_) comp = f * comp;
    return v;
}

VectorField operator-(VectorField v)
{
    for (auto& comp : v.components_) comp = -comp;
    return v;
}

std::vector<Rational> VectorField::evaluate(const std::vector<Rational>& x) const
{
    std::vector<Rational> out;
    out.reserve(components_.size());
    for (const auto& c : components_) out.push_back(c.evaluate(x));
    return out;
}

Multinomial apply(const VectorField& v, const Multinomial& f)
{
    if (v.dim() != f.dim()) throw InputError("apply: dimension mismatch");
    Multinomial out(f.dim());
    for (int j = 0; j < v.dim(); ++j) {
        if (v[j].is_zero()) continue;
        Multinomial df = partial(f, j);
        if (!df.is_zero()) out += v[j] * df;
    }
    return out;
}

std::string to_string(const VectorField& v)
{
    std::ostringstream os;
    bool first = true;
    for (int i = 0; i < v.dim(); ++i) {
        if (v[i].is_zero()) continue;
        if (!first) os << " + ";
        first = false;
        os << "(" << to_string(v[i]) << ") dx" << (i + 1);
    }
    if (first) os << "0";
    return os.str();
}

double seminorm(const VectorField& v, int order, const Box& box, int per_axis)
{
    if (order < 0) throw InputError("seminorm order must be nonnegative");
    if (box.dim() != v.dim()) throw InputError("seminorm: box dimension mismatch");
    const int d = v.dim();
    // all derivatives of total order <= `order`, generated breadth-first
    std::vector<Multinomial> derivs;
    for (const auto& c : v.components()) {
        std::vector<std::pair<Multinomial, int>> frontier{{c, 0}};  // (poly, min next variable)
        for (int k = 0; k <= order; ++k) {
            std::vector<std::pair<Multinomial, int>> next;
            for (auto& [p, start] : frontier) {
                if (p.is_zero()) continue;
                derivs.push_back(p);
                if (k < order)
                    for (int j = start; j < d; ++j) next.emplace_back(partial(p, j), j);
            }
            frontier = std::move(next);
        }
    }
    double sup = 0.0;
    for (const auto& x : box.grid(per_axis))
        for (const auto& p : derivs) sup = std::max(sup, std::abs(p.evaluate(x)));
    return sup;
}

}  // namespace subrie
