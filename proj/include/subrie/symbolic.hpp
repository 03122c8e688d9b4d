#ifndef SUBRIE_SYMBOLIC_HPP
#define SUBRIE_SYMBOLIC_HPP

#include <gmpxx.h>

#include <Eigen/Core>

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "subrie/error.hpp"

namespace subrie {

using Rational = mpq_class;
using Exponent = std::vector<std::uint16_t>;

Rational to_rational(double value);
double to_double(const Rational& value);
Rational parse_rational(std::string_view text);
std::string to_string(const Rational& value);

/// Axis-aligned box [lo_1,hi_1] x ... x [lo_d,hi_d].
struct Box {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;

    static Box cube(int dim, double half_width);
    int dim() const { return static_cast<int>(lo.size()); }
    bool contains(const Eigen::VectorXd& x, double slack = 0.0) const;
    /// Tensor grid with `per_axis` nodes per axis, node count capped at `max_nodes`
    /// by shrinking the per-axis count.
    std::vector<Eigen::VectorXd> grid(int per_axis, std::size_t max_nodes = std::size_t{1} << 18) const;
};

/// Sparse multivariate polynomial with exact rational coefficients.
/// Stored terms never carry a zero coefficient.
class Multinomial {
public:
    using Terms = std::map<Exponent, Rational>;

    Multinomial() = default;
    explicit Multinomial(int dim);

    static Multinomial constant(int dim, const Rational& c);
    static Multinomial variable(int dim, int index);  // 0-based
    static Multinomial monomial(const Exponent& e, const Rational& c);

    int dim() const { return dim_; }
    const Terms& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    bool is_constant() const;
    int degree() const;  // -1 for the zero polynomial
    Rational coefficient(const Exponent& e) const;

    void add_term(const Exponent& e, const Rational& c);

    Multinomial& operator+=(const Multinomial& other);
    Multinomial& operator-=(const Multinomial& other);
    Multinomial& operator*=(const Rational& c);

    friend Multinomial operator+(Multinomial a, const Multinomial& b) { return a += b; }
    friend Multinomial operator-(Multinomial a, const Multinomial& b) { return a -= b; }
    friend Multinomial operator*(const Multinomial& a, const Multinomial& b);
    friend Multinomial operator*(Multinomial a, const Rational& c) { return a *= c; }
    friend Multinomial operator*(const Rational& c, Multinomial a) { return a *= c; }
    friend Multinomial operator-(Multinomial a);
    friend bool operator==(const Multinomial& a, const Multinomial& b);
    friend bool operator!=(const Multinomial& a, const Multinomial& b) { return !(a == b); }

    Rational evaluate(const std::vector<Rational>& x) const;

    template <typename Scalar>
    Scalar evaluate(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x) const;
    double evaluate(const Eigen::VectorXd& x) const { return evaluate<double>(x); }

private:
    int dim_ = 0;
    Terms terms_;
};

Multinomial pow(const Multinomial& p, int k);
Multinomial partial(const Multinomial& p, int index);
/// Substitute x_i -> subs[i]; all subs share a common dimension.
Multinomial compose(const Multinomial& p, const std::vector<Multinomial>& subs);
/// x_i -> factors[i] * x_i.
Multinomial scale_variables(const Multinomial& p, const std::vector<Rational>& factors);
/// x -> x + shift.
Multinomial translate(const Multinomial& p, const std::vector<Rational>& shift);

/// Minimum of sum_i w_i alpha_i over stored monomials; nullopt encodes +infinity.
std::optional<int> weighted_order(const Multinomial& p, const std::vector<int>& weights);
/// Terms with weighted degree exactly `degree`.
Multinomial weighted_part(const Multinomial& p, const std::vector<int>& weights, int degree);
int weighted_degree(const Exponent& e, const std::vector<int>& weights);

std::string to_string(const Multinomial& p);

/// Tangent vector field on R^d with polynomial coefficients.
class VectorField {
public:
    VectorField() = default;
    explicit VectorField(int dim);
    explicit VectorField(std::vector<Multinomial> components);

    static VectorField coordinate(int dim, int index);  // d/dx_index, 0-based

    int dim() const { return static_cast<int>(components_.size()); }
    const Multinomial& operator[](int i) const { return components_[static_cast<std::size_t>(i)]; }
    Multinomial& operator[](int i) { return components_[static_cast<std::size_t>(i)]; }
    const std::vector<Multinomial>& components() const { return components_; }
    bool is_zero() const;

    VectorField& operator+=(const VectorField& other);
    VectorField& operator-=(const VectorField& other);
    friend VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
    friend VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
    friend VectorField operator*(const Rational& c, VectorField v);
    friend VectorField operator*(const Multinomial& f, VectorField v);
    friend VectorField operator-(VectorField v);
    friend bool operator==(const VectorField& a, const VectorField& b) { return a.components_ == b.components_; }
    friend bool operator!=(const VectorField& a, const VectorField& b) { return !(a == b); }

    template <typename Scalar>
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> evaluate(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x) const;
    Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const { return evaluate<double>(x); }
    std::vector<Rational> evaluate(const std::vector<Rational>& x) const;

private:
    std::vector<Multinomial> components_;
};

/// Derivative of f along v: sum_j v_j d_j f.
Multinomial apply(const VectorField& v, const Multinomial& f);
std::string to_string(const VectorField& v);

/// sup over a grid of |d^alpha v_i| for |alpha| <= order. Grid sampling gives a lower
/// bound of the true supremum.
double seminorm(const VectorField& v, int order, const Box& box, int per_axis = 33);

/// Parse a polynomial expression; `dim` fixes the number of variables (x1..xdim).
Multinomial parse_polynomial(std::string_view text, int dim);
/// Parse with several variable families: each (prefix, offset) pair maps `<prefix>k`
/// to variable offset + k - 1. Longer prefixes are matched first.
Multinomial parse_polynomial(std::string_view text, int dim, const std::vector<std::pair<std::string, int>>& prefixes);

// ---------------------------------------------------------------------------

template <typename Scalar>
Scalar Multinomial::evaluate(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x) const
{
    Scalar sum(0);
    for (const auto& [e, c] : terms_) {
        Scalar term(to_double(c));
        for (std::size_t i = 0; i < e.size(); ++i)
            for (int k = 0; k < e[i]; ++k) term *= x[static_cast<Eigen::Index>(i)];
        sum += term;
    }
    return sum;
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> VectorField::evaluate(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x) const
{
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(dim());
    for (int i = 0; i < dim(); ++i) out[i] = components_[static_cast<std::size_t>(i)].evaluate(x);
    return out;
}

}  // namespace subrie

#endif  // SUBRIE_SYMBOLIC_HPP
