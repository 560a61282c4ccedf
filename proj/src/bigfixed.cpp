#include "cantorlab/bigfixed.hpp"

#include <cmath>
#include <stdexcept>

namespace cantorlab {

namespace {

BigInt shift_round(const BigInt& x, unsigned bits) {
    // Round x / 2^bits to the nearest integer, ties away from zero.
    if (bits == 0) return x;
    BigInt a = abs(x);
    BigInt half = BigInt(1) << (bits - 1);
    BigInt q = (a + half) >> bits;
    return x < 0 ? BigInt(-q) : q;
}

BigInt ceil_shift(const BigInt& x, unsigned bits) {
    BigInt q;
    mpz_cdiv_q_2exp(q.get_mpz_t(), x.get_mpz_t(), bits);
    return q;
}

}  // namespace

BigFixed::BigFixed(BigInt mantissa, unsigned precision_bits, BigInt error_half_ulps)
    : mantissa_(std::move(mantissa)), precision_(precision_bits), error_(std::move(error_half_ulps)) {
    if (precision_ == 0) throw std::invalid_argument("BigFixed needs a positive precision");
    if (error_ < 0) throw std::invalid_argument("BigFixed error must be nonnegative");
}

BigFixed BigFixed::from_rational(const Rational& x, unsigned precision_bits) {
    BigInt scaled = x.numerator() << precision_bits;
    BigInt den = x.denominator();
    // nearest integer to scaled / den
    BigInt twice = 2 * scaled + (scaled < 0 ? BigInt(-den) : den);
    BigInt q;
    mpz_tdiv_q(q.get_mpz_t(), twice.get_mpz_t(), BigInt(2 * den).get_mpz_t());
    bool exact = (scaled % den) == 0;
    return BigFixed(q, precision_bits, exact ? 0 : 1);
}

Rational BigFixed::value() const { return Rational(mantissa_, BigInt(1) << precision_); }

Rational BigFixed::error_bound() const { return Rational(error_, BigInt(1) << (precision_ + 1)); }

void BigFixed::require_same_precision(const BigFixed& o) const {
    if (o.precision_ != precision_) throw std::invalid_argument("BigFixed precision mismatch");
}

BigFixed BigFixed::operator+(const BigFixed& o) const {
    require_same_precision(o);
    return BigFixed(mantissa_ + o.mantissa_, precision_, error_ + o.error_);
}

BigFixed BigFixed::operator-(const BigFixed& o) const {
    require_same_precision(o);
    return BigFixed(mantissa_ - o.mantissa_, precision_, error_ + o.error_);
}

BigFixed BigFixed::operator*(const BigFixed& o) const {
    require_same_precision(o);
    BigInt product = mantissa_ * o.mantissa_;
    BigInt m = shift_round(product, precision_);
    bool exact = (m << precision_) == product;
    // |x~y~ - xy| <= |x~| ey + |y~| ex + ex ey, expressed in half-ulps.
    BigInt cross = abs(mantissa_) * o.error_ + abs(o.mantissa_) * error_ + ceil_shift(error_ * o.error_, 1);
    BigInt err = ceil_shift(cross, precision_) + (exact ? 0 : 1);
    return BigFixed(m, precision_, err);
}

BigFixed BigFixed::scaled(const BigInt& a) const { return BigFixed(mantissa_ * a, precision_, error_ * abs(a)); }

BigFixed BigFixed::frac() const {
    BigInt r;
    mpz_fdiv_r_2exp(r.get_mpz_t(), mantissa_.get_mpz_t(), precision_);
    return BigFixed(r, precision_, error_);
}

double BigFixed::to_double() const {
    long exp2 = 0;
    double mant = mpz_get_d_2exp(&exp2, mantissa_.get_mpz_t());
    return std::ldexp(mant, static_cast<int>(exp2 - static_cast<long>(precision_)));
}

unsigned fractional_parts_precision(const BigInt& a_max) {
    if (a_max <= 0) throw std::invalid_argument("fractional parts need positive multipliers");
    // ceil(log2 a) = bit length of (a - 1) for a >= 1
    BigInt m = a_max - 1;
    unsigned bits = m == 0 ? 0 : static_cast<unsigned>(mpz_sizeinbase(m.get_mpz_t(), 2));
    return bits + 64;
}

}  // namespace cantorlab
