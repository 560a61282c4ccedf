#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cantorlab/rational.hpp"

namespace cantorlab {

using u128 = unsigned __int128;

/// Approximation exponent mu: a nonnegative rational, +inf (exact membership),
/// or the critical value mu* = (2 - kappa)/(1 - kappa).
class MuSpec {
public:
    enum class Kind { finite, infinite, critical };

    static MuSpec finite(const Rational& mu);
    static MuSpec infinity();
    static MuSpec critical();
    /// Accepts "2.77", "5/2", "inf" and "mu*".
    static MuSpec parse(const std::string& text);

    Kind kind() const { return kind_; }
    const Rational& value() const { return value_; }
    double approx() const;
    /// Canonical text: finite decimals are printed exactly, otherwise "n/d".
    std::string label() const;

    friend bool operator==(const MuSpec&, const MuSpec&) = default;

private:
    Kind kind_ = Kind::finite;
    Rational value_{0};
};

/// mu* = (2 - kappa)/(1 - kappa).
double critical_mu();
/// Conjectured exponent max{2 - (1 - kappa) mu, kappa}; kappa for mu = inf.
double conjectured_bound(double mu);

/// The radius 3^-T at level j with T = mu j. For mu* the exponent is rounded
/// up to the grid 2^-20, which can only shrink the neighbourhood.
class Threshold {
public:
    Threshold(const MuSpec& mu, int j);

    bool infinite() const { return infinite_; }
    /// The exact exponent T; meaningless when infinite().
    const Rational& exponent() const { return exponent_; }
    long double exponent_approx() const { return approx_; }

    /// Decides 3^T < n/d exactly for n, d > 0.
    bool pow3_below(u128 n, u128 d) const;

    /// Smallest s with 3^T < 6 * 3^s: every point of a level-s cell is near K.
    int saturation_level() const { return saturation_; }
    /// Smallest m with 3^T < 2 * 3^(m+1): fattened level-m cells are disjoint
    /// and their union is exactly the neighbourhood.
    int merge_level() const { return merge_; }

private:
    bool exact_pow3_below(u128 n, u128 d) const;

    bool infinite_ = false;
    Rational exponent_{0};
    long double approx_ = 0;
    int saturation_ = 0;
    int merge_ = 0;
};

enum class CensusAlgorithm { scan, interval };

std::string to_string(CensusAlgorithm a);
CensusAlgorithm parse_algorithm(const std::string& text);

struct CensusRecord {
    int j = 0;
    MuSpec mu;
    std::uint64_t count = 0;
    double log3_density = 0;
    double bound = 0;
};

/// Denominators 3^j <= q <= 3^(j+1) - 1 of level j.
struct PairRange {
    int j = 0;
    std::uint64_t q_low = 1;
    std::uint64_t q_high = 2;

    explicit PairRange(int level);
};

/// Euler totient sum over the level-j denominators.
std::uint64_t totient_count(int j);

/// Exact membership of p/q in K for 0 <= p < q below 2^62.
bool in_cantor_native(std::uint64_t p, std::uint64_t q);

/// Pairs (p, q) with gcd 1 and d(p/q, K) < 3^-T for a single denominator.
std::uint64_t near_K_unit(std::uint64_t q, const Threshold& t, CensusAlgorithm alg);

std::uint64_t exact_in_K_count(int j, unsigned threads = 1);
CensusRecord near_K_count(int j, const MuSpec& mu, unsigned threads = 1);
CensusRecord near_K_count_fast(int j, const MuSpec& mu, unsigned threads = 1);
CensusRecord make_record(int j, const MuSpec& mu, std::uint64_t count);

struct SigmaReport {
    std::vector<int> j;
    std::vector<double> values;
    /// tail_max[i] = max of values[i..]; the limsup proxy.
    std::vector<double> tail_max;
    /// Tail max over the upper half of the j range.
    double estimate = 0;
};

SigmaReport sigma_estimate(const std::vector<CensusRecord>& records);

/// Integers 0 <= k < b^j coprime to b with k / b^j in K.
std::uint64_t base_b_count(std::uint64_t b, int j);

struct ConjectureRow {
    int j = 0;
    MuSpec mu;
    std::uint64_t count = 0;
    double log3_density = 0;
    double bound = 0;
    bool past_transition = false;
};

std::vector<ConjectureRow> conjecture_report(int j_low, int j_high, const std::vector<MuSpec>& mus,
                                             unsigned threads = 1);

}  // namespace cantorlab
