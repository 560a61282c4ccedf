#include "cantorlab/rational.hpp"

#include <cctype>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace cantorlab {

Rational::Rational(std::int64_t n) : value_(static_cast<long>(n)) {}

Rational::Rational(std::int64_t num, std::int64_t den)
    : Rational(BigInt(static_cast<long>(num)), BigInt(static_cast<long>(den))) {}

Rational::Rational(const BigInt& num, const BigInt& den) {
    if (den == 0) throw std::domain_error("rational with zero denominator");
    value_ = mpq_class(num, den);
    value_.canonicalize();
}

Rational::Rational(const BigInt& n) : value_(n) {}

Rational::Rational(mpq_class q) : value_(std::move(q)) {
    if (value_.get_den() == 0) throw std::domain_error("rational with zero denominator");
    value_.canonicalize();
}

Rational Rational::parse(std::string_view text) {
    std::string s(text);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    std::size_t b = 0;
    while (b < s.size() && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    s = s.substr(b);
    if (s.empty()) throw std::invalid_argument("empty rational literal");

    auto parse_int = [&](const std::string& digits) {
        if (digits.empty() || digits == "-" || digits == "+")
            throw std::invalid_argument("malformed rational literal '" + s + "'");
        std::size_t start = (digits[0] == '-' || digits[0] == '+') ? 1 : 0;
        for (std::size_t i = start; i < digits.size(); ++i)
            if (!std::isdigit(static_cast<unsigned char>(digits[i])))
                throw std::invalid_argument("malformed rational literal '" + s + "'");
        return BigInt(digits[0] == '+' ? digits.substr(1) : digits, 10);
    };

    if (auto slash = s.find('/'); slash != std::string::npos) {
        return Rational(parse_int(s.substr(0, slash)), parse_int(s.substr(slash + 1)));
    }
    if (auto dot = s.find('.'); dot != std::string::npos) {
        std::string whole = s.substr(0, dot);
        std::string fraction = s.substr(dot + 1);
        bool negative = !whole.empty() && whole[0] == '-';
        if (whole.empty() || whole == "-" || whole == "+") whole += "0";
        if (fraction.empty()) throw std::invalid_argument("malformed rational literal '" + s + "'");
        BigInt scale = pow_big(10, fraction.size());
        BigInt w = parse_int(whole);
        BigInt f = parse_int(fraction);
        BigInt num = ::abs(w) * scale + f;
        return Rational(negative ? BigInt(-num) : num, scale);
    }
    return Rational(parse_int(s));
}

BigInt Rational::floor() const {
    BigInt q;
    mpz_fdiv_q(q.get_mpz_t(), value_.get_num_mpz_t(), value_.get_den_mpz_t());
    return q;
}

BigInt Rational::ceil() const {
    BigInt q;
    mpz_cdiv_q(q.get_mpz_t(), value_.get_num_mpz_t(), value_.get_den_mpz_t());
    return q;
}

Rational Rational::frac() const { return *this - Rational(floor()); }

Rational Rational::abs() const { return sign() < 0 ? -*this : *this; }

Rational Rational::pow(std::int64_t e) const {
    if (e < 0) {
        if (sign() == 0) throw std::domain_error("zero to a negative power");
        return Rational(1) / pow(-e);
    }
    BigInt n, d;
    mpz_pow_ui(n.get_mpz_t(), value_.get_num_mpz_t(), static_cast<unsigned long>(e));
    mpz_pow_ui(d.get_mpz_t(), value_.get_den_mpz_t(), static_cast<unsigned long>(e));
    return Rational(n, d);
}

double Rational::log() const {
    if (sign() <= 0) throw std::domain_error("log of a nonpositive rational");
    return log_big(value_.get_num()) - log_big(value_.get_den());
}

std::string Rational::to_string() const { return value_.get_str(); }

Rational& Rational::operator+=(const Rational& o) {
    value_ += o.value_;
    return *this;
}
Rational& Rational::operator-=(const Rational& o) {
    value_ -= o.value_;
    return *this;
}
Rational& Rational::operator*=(const Rational& o) {
    value_ *= o.value_;
    return *this;
}
Rational& Rational::operator/=(const Rational& o) {
    if (o.sign() == 0) throw std::domain_error("division by zero");
    value_ /= o.value_;
    return *this;
}

Rational operator-(const Rational& a) { return Rational(mpq_class(-a.value_)); }

std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.to_string(); }

Rational min(const Rational& a, const Rational& b) { return b < a ? b : a; }
Rational max(const Rational& a, const Rational& b) { return a < b ? b : a; }

BigInt pow_big(unsigned long base, unsigned long e) {
    BigInt r;
    mpz_ui_pow_ui(r.get_mpz_t(), base, e);
    return r;
}

double log_big(const BigInt& n) {
    if (n <= 0) throw std::domain_error("log of a nonpositive integer");
    long exp2 = 0;
    double mant = mpz_get_d_2exp(&exp2, n.get_mpz_t());
    return std::log(mant) + static_cast<double>(exp2) * std::log(2.0);
}

}  // namespace cantorlab
