#pragma once

#include "cantorlab/rational.hpp"

namespace cantorlab {

/// Binary fixed-point number mantissa * 2^-precision_bits with a tracked
/// worst-case absolute error, kept in units of half an ulp.
///
/// Values produced by a single rounding carry at most one half-ulp; every
/// operation adds the propagated error of its inputs plus its own rounding.
class BigFixed {
public:
    BigFixed(BigInt mantissa, unsigned precision_bits, BigInt error_half_ulps = 0);

    /// Nearest representable value (ties away from zero), error <= 1/2 ulp.
    static BigFixed from_rational(const Rational& x, unsigned precision_bits);

    const BigInt& mantissa() const { return mantissa_; }
    unsigned precision_bits() const { return precision_; }
    const BigInt& error_half_ulps() const { return error_; }

    /// Exact value of the representation (not of the quantity it approximates).
    Rational value() const;
    /// Bound on |value() - true quantity|.
    Rational error_bound() const;

    BigFixed operator+(const BigFixed& o) const;
    BigFixed operator-(const BigFixed& o) const;
    BigFixed operator*(const BigFixed& o) const;
    /// Exact multiplication by an integer; the error scales by |a|.
    BigFixed scaled(const BigInt& a) const;
    /// Representative in [0, 1) of the value modulo one. The error bound is
    /// inherited; callers comparing near 0 or 1 must account for wrap-around.
    BigFixed frac() const;

    double to_double() const;

private:
    void require_same_precision(const BigFixed& o) const;

    BigInt mantissa_;
    unsigned precision_;
    BigInt error_;
};

/// Precision used for the fractional-parts process {a_n X}: ceil(log2 a_max)
/// plus 64 guard bits.
unsigned fractional_parts_precision(const BigInt& a_max);

}  // namespace cantorlab
