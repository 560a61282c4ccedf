#pragma once

#include <string>
#include <vector>

#include "cantorlab/rational.hpp"

namespace cantorlab {

/// [a0; a1, a2, ...] with a0 >= 0 and ai >= 1.
struct ContinuedFraction {
    std::vector<BigInt> quotients;

    Rational value() const;
};

/// Euclidean expansion of x >= 0. Non-integer inputs end with a quotient >= 2.
ContinuedFraction continued_fraction(const Rational& x);
/// p_k / q_k for every prefix of the expansion.
std::vector<Rational> convergents(const ContinuedFraction& cf);

/// |xi - approximant| <= error_bound, with the approximant's denominator size.
struct ApproxWitness {
    Rational approximant;
    Rational error_bound;
    BigInt denominator_size;
};

enum class ExponentKind { irrationality, base_b, random };

std::string to_string(ExponentKind k);

struct WitnessPoint {
    double scale = 0;
    double log_ratio = 0;
};

struct ExponentEstimate {
    ExponentKind kind = ExponentKind::irrationality;
    /// Reported value. For base-b profiles of rationals this is the convention 0.
    double value = 0;
    /// Max log-ratio over all witnesses.
    double raw_max = 0;
    /// Max log-ratio over the upper half of the scales.
    double tail_max = 0;
    std::vector<WitnessPoint> witnesses;
};

/// Exact floor(mu^j).
BigInt floor_power(const Rational& mu, int j);

struct LsvSum {
    Rational value;
    /// Bound on the remainder of the infinite series.
    Rational tail_bound;
};

/// Sum over j = 1..J of 2 * 3^-floor(mu^j).
LsvSum lsv_partial_sum(const Rational& mu, int J);
/// Witnesses (partial sum j, its tail bound, 3^floor(mu^j)) for j = 1..J.
std::vector<ApproxWitness> lsv_witnesses(const Rational& mu, int J);
/// Non-final convergents of x with their exact errors.
std::vector<ApproxWitness> convergent_witnesses(const Rational& x);

ExponentEstimate exponent_from_witnesses(const std::vector<ApproxWitness>& ws);

struct VbRow {
    int j = 0;
    /// ||b^j x||, exact.
    Rational distance;
    /// -log||b^j x|| / (j log b); unset when the distance is zero.
    double log_ratio = 0;
};

struct VbProfile {
    std::vector<VbRow> rows;
    ExponentEstimate estimate;
};

VbProfile vb_profile(const Rational& x, unsigned long b, int J);

}  // namespace cantorlab
