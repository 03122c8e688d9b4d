#include "subrie/symbolic.hpp"

#include <algorithm>
#include <cctype>

namespace subrie {

namespace {

class Parser {
public:
    Parser(std::string_view text, int dim, const std::vector<std::pair<std::string, int>>& prefixes)
        : text_(text), dim_(dim), prefixes_(prefixes)
    {
        std::stable_sort(prefixes_.begin(), prefixes_.end(),
                         [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
    }

    Multinomial parse()
    {
        skip();
        if (pos_ == text_.size()) fail("empty expression");
        bool negate = false;
        if (peek() == '-') {
            negate = true;
            ++pos_;
        } else if (peek() == '+') {
            ++pos_;
        }
        Multinomial out = term();
        if (negate) out = -out;
        out = rest_of_expr(std::move(out));
        skip();
        if (pos_ != text_.size()) fail(std::string("unexpected '") + text_[pos_] + "'");
        return out;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    int dim_;
    std::vector<std::pair<std::string, int>> prefixes_;

    [[noreturn]] void fail(const std::string& what) const
    {
        throw InputError("polynomial parse error at column " + std::to_string(pos_ + 1) + ": " + what + " in '" +
                         std::string(text_) + "'");
    }

    void skip()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    char peek()
    {
        skip();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    Multinomial rest_of_expr(Multinomial acc)
    {
        while (true) {
            char c = peek();
            if (c == '+') {
                ++pos_;
                acc += term();
            } else if (c == '-') {
                ++pos_;
                acc -= term();
            } else {
                return acc;
            }
        }
    }

    Multinomial expr()
    {
        // a parenthesised expression may itself start with a sign
        bool negate = false;
        if (peek() == '-') {
            negate = true;
            ++pos_;
        } else if (peek() == '+') {
            ++pos_;
        }
        Multinomial first = term();
        if (negate) first = -first;
        return rest_of_expr(std::move(first));
    }

    Multinomial term()
    {
        Multinomial acc = factor();
        while (true) {
            char c = peek();
            if (c == '*') {
                ++pos_;
                acc = acc * factor();
            } else if (c == '/') {
                // lenient: division by a nonzero constant factor, e.g. x2/2
                ++pos_;
                Multinomial den = factor();
                if (!den.is_constant() || den.is_zero()) fail("division only by a nonzero constant");
                acc *= Rational(1) / den.coefficient(Exponent(static_cast<std::size_t>(dim_), 0));
            } else {
                return acc;
            }
        }
    }

    Multinomial factor()
    {
        // unary sign after an operator, e.g. "x1 * -2" or "a + -b"
        char s = peek();
        if (s == '-' || s == '+') {
            ++pos_;
            Multinomial inner = factor();
            return s == '-' ? -inner : inner;
        }
        Multinomial base = atom();
        if (peek() == '^') {
            ++pos_;
            skip();
            std::size_t start = pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            if (start == pos_) fail("expected a nonnegative integer exponent");
            int k = std::stoi(std::string(text_.substr(start, pos_ - start)));
            return pow(base, k);
        }
        return base;
    }

    Multinomial atom()
    {
        char c = peek();
        if (c == '(') {
            ++pos_;
            Multinomial inner = expr();
            if (peek() != ')') fail("expected ')'");
            ++pos_;
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return Multinomial::constant(dim_, number());
        for (const auto& [prefix, offset] : prefixes_) {
            if (text_.substr(pos_, prefix.size()) != prefix) continue;
            std::size_t start = pos_ + prefix.size();
            std::size_t end = start;
            while (end < text_.size() && std::isdigit(static_cast<unsigned char>(text_[end]))) ++end;
            if (end == start) continue;
            int k = std::stoi(std::string(text_.substr(start, end - start)));
            int index = offset + k - 1;
            if (k < 1 || index >= dim_) fail("variable " + prefix + std::to_string(k) + " out of range");
            pos_ = end;
            return Multinomial::variable(dim_, index);
        }
        fail(c == '\0' ? "unexpected end of input" : std::string("unexpected '") + c + "'");
    }

    Rational number()
    {
        std::size_t start = pos_;
        auto digit = [&](std::size_t i) { return i < text_.size() && std::isdigit(static_cast<unsigned char>(text_[i])); };
        while (digit(pos_)) ++pos_;
        if (pos_ < text_.size() && text_[pos_] == '/') {
            ++pos_;
            if (!digit(pos_)) fail("expected denominator");
            while (digit(pos_)) ++pos_;
            return parse_rational(text_.substr(start, pos_ - start));
        }
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            while (digit(pos_)) ++pos_;
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t save = pos_++;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (!digit(pos_)) {
                pos_ = save;
            } else {
                while (digit(pos_)) ++pos_;
            }
        }
        return parse_rational(text_.substr(start, pos_ - start));
    }
};

}  // namespace

Multinomial parse_polynomial(std::string_view text, int dim) { return parse_polynomial(text, dim, {{"x", 0}}); }

Multinomial parse_polynomial(std::string_view text, int dim, const std::vector<std::pair<std::string, int>>& prefixes)
{
    if (dim <= 0) throw InputError("polynomial dimension must be positive");
    return Parser(text, dim, prefixes).parse();
}

}  // namespace subrie
