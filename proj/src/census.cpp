#include "cantorlab/census.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <mpfr.h>

#include "cantorlab/cantor.hpp"
#include "cantorlab/parallel.hpp"

namespace cantorlab {

namespace {

constexpr int max_exponent = 60;
constexpr int max_census_level = 14;
constexpr long double log_margin = 1e-12L;
constexpr long double float_slack = 1e-15L;

BigInt to_big(u128 v) {
    BigInt hi(static_cast<unsigned long>(static_cast<std::uint64_t>(v >> 64)));
    BigInt lo(static_cast<unsigned long>(static_cast<std::uint64_t>(v)));
    return (hi << 64) + lo;
}

u128 pow3(int e) {
    u128 r = 1;
    for (int i = 0; i < e; ++i) r *= 3;
    return r;
}

std::vector<std::uint64_t> prime_factors(std::uint64_t n) {
    std::vector<std::uint64_t> out;
    for (std::uint64_t p = 2; p * p <= n; ++p) {
        if (n % p == 0) {
            out.push_back(p);
            while (n % p == 0) n /= p;
        }
    }
    if (n > 1) out.push_back(n);
    return out;
}

struct SignedDivisor {
    std::int64_t d;
    int mobius;
};

std::vector<SignedDivisor> squarefree_divisors(std::uint64_t q) {
    std::vector<SignedDivisor> out{{1, 1}};
    for (auto p : prime_factors(q)) {
        std::size_t n = out.size();
        for (std::size_t i = 0; i < n; ++i) out.push_back({out[i].d * static_cast<std::int64_t>(p), -out[i].mobius});
    }
    return out;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

// Numerators in [lo, hi] coprime to q.
std::int64_t coprime_in_range(const std::vector<SignedDivisor>& divs, std::int64_t lo, std::int64_t hi) {
    std::int64_t total = 0;
    for (const auto& [d, mu] : divs) total += mu * (floor_div(hi, d) - floor_div(lo - 1, d));
    return total;
}

std::uint64_t scan_unit(std::uint64_t q, const Threshold& t) {
    std::vector<char> coprime(q, 1);
    for (auto p : prime_factors(q))
        for (std::uint64_t m = 0; m < q; m += p) coprime[m] = 0;

    std::uint64_t count = 0;
    if (t.infinite()) {
        for (std::uint64_t p = 0; p < q; ++p)
            if (coprime[p] && in_cantor_native(p, q)) ++count;
        return count;
    }

    const int ks = t.saturation_level();
    // limit[s]: a gap met at depth s is near K iff its offset m < q 3^(s - T).
    std::vector<long double> limit(static_cast<std::size_t>(ks) + 1);
    for (int s = 0; s <= ks; ++s)
        limit[s] = static_cast<long double>(q) * std::pow(3.0L, static_cast<long double>(s) - t.exponent_approx());
    std::vector<u128> scale(static_cast<std::size_t>(ks) + 1);
    for (int s = 0; s <= ks; ++s) scale[s] = static_cast<u128>(q) * pow3(s);

    for (std::uint64_t p = 0; p < q; ++p) {
        if (!coprime[p]) continue;
        std::uint64_t r = p;
        for (int s = 0;; ++s) {
            if (s >= ks) {
                ++count;
                break;
            }
            std::uint64_t r3 = 3 * r;
            if (r3 < q) {
                r = r3;
            } else if (r3 >= 2 * q) {
                r = r3 - 2 * q;
            } else {
                if (r3 == q) {
                    ++count;
                    break;
                }
                std::uint64_t m = std::min(r3 - q, 2 * q - r3);
                long double lim = limit[s + 1];
                long double mm = static_cast<long double>(m);
                if (mm < lim * (1 - log_margin))
                    ++count;
                else if (mm <= lim * (1 + log_margin) && t.pow3_below(scale[s + 1], m))
                    ++count;
                break;
            }
        }
    }
    return count;
}

// Tree walk over Cantor construction cells, pruning cells whose fattened
// extent holds no grid point p/q.
class IntervalWalker {
public:
    IntervalWalker(std::uint64_t q, const Threshold& t) : q_(q), t_(t), divisors_(squarefree_divisors(q)) {
        depth_ = t.infinite() ? 0 : t.merge_level();
        if (t.infinite()) {
            while (pow3(depth_) <= q) ++depth_;
        } else {
            delta_ = std::pow(3.0L, -t.exponent_approx());
        }
        for (int l = 0; l <= depth_; ++l) p3_.push_back(pow3(l));
    }

    std::uint64_t run() { return static_cast<std::uint64_t>(t_.infinite() ? walk_closed(0, 0) : walk_fat(0, 0)); }

private:
    using i128 = __int128;

    // p/q > A 3^-l - delta; `edge` approximates the right-hand side
    bool above_left(std::int64_t p, int l, u128 a, long double edge) const {
        long double v = static_cast<long double>(p) / static_cast<long double>(q_);
        if (v > edge + float_slack) return true;
        if (v < edge - float_slack) return false;
        i128 num = static_cast<i128>(a * q_) - static_cast<i128>(p) * static_cast<i128>(p3_[l]);
        if (num <= 0) return true;
        return t_.pow3_below(q_ * p3_[l], static_cast<u128>(num));
    }

    // p/q < (A + 1) 3^-l + delta
    bool below_right(std::int64_t p, int l, u128 a, long double edge) const {
        long double v = static_cast<long double>(p) / static_cast<long double>(q_);
        if (v < edge - float_slack) return true;
        if (v > edge + float_slack) return false;
        i128 num = static_cast<i128>(p) * static_cast<i128>(p3_[l]) - static_cast<i128>((a + 1) * q_);
        if (num <= 0) return true;
        return t_.pow3_below(q_ * p3_[l], static_cast<u128>(num));
    }

    std::int64_t walk_fat(int l, u128 a) {
        const auto q = static_cast<std::int64_t>(q_);
        const long double width = 1.0L / static_cast<long double>(p3_[l]);
        const long double left = static_cast<long double>(a) * width;

        const long double left_edge = left - delta_;
        const long double right_edge = left + width + delta_;
        auto lo = static_cast<std::int64_t>(std::floor(left_edge * q)) + 1;
        lo = std::clamp<std::int64_t>(lo, 0, q);
        while (lo > 0 && above_left(lo - 1, l, a, left_edge)) --lo;
        while (lo < q && !above_left(lo, l, a, left_edge)) ++lo;
        if (lo == q) return 0;

        auto hi = static_cast<std::int64_t>(std::ceil(right_edge * q)) - 1;
        hi = std::clamp<std::int64_t>(hi, -1, q - 1);
        while (hi < q - 1 && below_right(hi + 1, l, a, right_edge)) ++hi;
        while (hi >= 0 && !below_right(hi, l, a, right_edge)) --hi;
        if (hi < lo) return 0;

        if (l == depth_) return coprime_in_range(divisors_, lo, hi);
        return walk_fat(l + 1, 3 * a) + walk_fat(l + 1, 3 * a + 2);
    }

    std::int64_t walk_closed(int l, u128 a) {
        // grid points with A q <= p 3^l <= (A + 1) q
        u128 num_lo = a * q_;
        u128 lo = (num_lo + p3_[l] - 1) / p3_[l];
        u128 hi = ((a + 1) * q_) / p3_[l];
        if (hi > q_ - 1) hi = q_ - 1;
        if (lo > hi) return 0;
        if (l < depth_) return walk_closed(l + 1, 3 * a) + walk_closed(l + 1, 3 * a + 2);

        // cells shorter than 1/q hold at most one candidate
        auto p = static_cast<std::uint64_t>(lo);
        if (std::gcd(p, q_) != 1) return 0;
        auto rel = static_cast<std::uint64_t>(static_cast<u128>(p) * p3_[l] - num_lo);
        if (rel == 0 || rel == q_) return 1;
        return in_cantor_native(rel, q_) ? 1 : 0;
    }

    std::uint64_t q_;
    const Threshold& t_;
    std::vector<SignedDivisor> divisors_;
    std::vector<u128> p3_;
    int depth_ = 0;
    long double delta_ = 0;
};

void check_level(int j, int lowest) {
    if (j < lowest || j > max_census_level)
        throw std::invalid_argument("census level must lie in [" + std::to_string(lowest) + ", " +
                                    std::to_string(max_census_level) + "]");
}

std::uint64_t sum_units(int j, const Threshold& t, CensusAlgorithm alg, unsigned threads) {
    PairRange range(j);
    auto counts = parallel_map(static_cast<std::size_t>(range.q_high - range.q_low + 1), threads,
                               [&](std::size_t i) { return near_K_unit(range.q_low + i, t, alg); });
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

}  // namespace

MuSpec MuSpec::finite(const Rational& mu) {
    if (mu.sign() < 0) throw std::invalid_argument("mu must be nonnegative");
    MuSpec m;
    m.kind_ = Kind::finite;
    m.value_ = mu;
    return m;
}

MuSpec MuSpec::infinity() {
    MuSpec m;
    m.kind_ = Kind::infinite;
    return m;
}

MuSpec MuSpec::critical() {
    MuSpec m;
    m.kind_ = Kind::critical;
    return m;
}

MuSpec MuSpec::parse(const std::string& text) {
    if (text == "inf" || text == "infinity" || text == "+inf") return infinity();
    if (text == "mu*" || text == "mu_star" || text == "critical") return critical();
    return finite(Rational::parse(text));
}

double MuSpec::approx() const {
    switch (kind_) {
        case Kind::infinite: return std::numeric_limits<double>::infinity();
        case Kind::critical: return critical_mu();
        default: return value_.to_double();
    }
}

std::string MuSpec::label() const {
    if (kind_ == Kind::infinite) return "inf";
    if (kind_ == Kind::critical) return "mu*";
    BigInt d = value_.denominator();
    int twos = 0, fives = 0;
    while (d % 2 == 0) d /= 2, ++twos;
    while (d % 5 == 0) d /= 5, ++fives;
    if (d != 1) return value_.to_string();
    int places = std::max(twos, fives);
    BigInt scaled = (value_ * Rational(pow_big(10, static_cast<unsigned long>(places)))).numerator();
    std::string digits = scaled.get_str();
    if (places == 0) return digits;
    if (static_cast<int>(digits.size()) <= places) digits.insert(0, static_cast<std::size_t>(places) + 1 - digits.size(), '0');
    digits.insert(digits.size() - static_cast<std::size_t>(places), ".");
    return digits;
}

double critical_mu() { return (2.0 - kappa) / (1.0 - kappa); }

double conjectured_bound(double mu) {
    if (std::isinf(mu)) return kappa;
    return std::max(2.0 - (1.0 - kappa) * mu, kappa);
}

Threshold::Threshold(const MuSpec& mu, int j) {
    if (j < 0) throw std::invalid_argument("threshold level must be nonnegative");
    if (mu.kind() == MuSpec::Kind::infinite) {
        infinite_ = true;
        return;
    }
    if (mu.kind() == MuSpec::Kind::finite) {
        exponent_ = mu.value() * Rational(j);
    } else {
        mpfr_t k, one, two, num, den, v;
        mpfr_inits2(256, k, one, two, num, den, v, static_cast<mpfr_ptr>(nullptr));
        mpfr_set_ui(one, 1, MPFR_RNDN);
        mpfr_set_ui(two, 2, MPFR_RNDN);
        mpfr_log(num, two, MPFR_RNDN);
        mpfr_set_ui(v, 3, MPFR_RNDN);
        mpfr_log(den, v, MPFR_RNDN);
        mpfr_div(k, num, den, MPFR_RNDN);
        mpfr_sub(num, two, k, MPFR_RNDN);
        mpfr_sub(den, one, k, MPFR_RNDN);
        mpfr_div(v, num, den, MPFR_RNDN);
        mpfr_mul_ui(v, v, static_cast<unsigned long>(j), MPFR_RNDN);
        mpfr_mul_2ui(v, v, 20, MPFR_RNDN);
        BigInt c;
        mpfr_get_z(c.get_mpz_t(), v, MPFR_RNDU);
        mpfr_clears(k, one, two, num, den, v, static_cast<mpfr_ptr>(nullptr));
        exponent_ = Rational(c, pow_big(2, 20));
    }
    if (exponent_ > Rational(max_exponent))
        throw std::invalid_argument("threshold exponent mu*j above " + std::to_string(max_exponent) +
                                    " is outside the native range");
    {
        mpfr_t v;
        mpfr_init2(v, 128);
        mpfr_set_q(v, exponent_.raw().get_mpq_t(), MPFR_RNDN);
        approx_ = mpfr_get_ld(v, MPFR_RNDN);
        mpfr_clear(v);
    }
    while (!pow3_below(6 * pow3(saturation_), 1)) ++saturation_;
    while (!pow3_below(2 * pow3(merge_ + 1), 1)) ++merge_;
}

bool Threshold::pow3_below(u128 n, u128 d) const {
    if (infinite_) return false;
    long double diff = (std::log2(static_cast<long double>(n)) - std::log2(static_cast<long double>(d))) /
                           std::log2(3.0L) -
                       approx_;
    if (diff > log_margin) return true;
    if (diff < -log_margin) return false;
    return exact_pow3_below(n, d);
}

bool Threshold::exact_pow3_below(u128 n, u128 d) const {
    BigInt bn = to_big(n), bd = to_big(d);
    if (exponent_.is_integer()) {
        BigInt lhs = pow_big(3, exponent_.numerator().get_ui()) * bd;
        return lhs < bn;
    }
    // 3^T is irrational here, so interval refinement terminates.
    for (mpfr_prec_t prec = 128;; prec *= 2) {
        mpfr_t t_lo, t_hi, l3_lo, l3_hi, a_lo, a_hi, x, ln_lo, ln_hi, ld_lo, ld_hi;
        mpfr_inits2(prec, t_lo, t_hi, l3_lo, l3_hi, a_lo, a_hi, x, ln_lo, ln_hi, ld_lo, ld_hi,
                    static_cast<mpfr_ptr>(nullptr));
        mpfr_set_q(t_lo, exponent_.raw().get_mpq_t(), MPFR_RNDD);
        mpfr_set_q(t_hi, exponent_.raw().get_mpq_t(), MPFR_RNDU);
        mpfr_set_ui(x, 3, MPFR_RNDN);
        mpfr_log(l3_lo, x, MPFR_RNDD);
        mpfr_log(l3_hi, x, MPFR_RNDU);
        mpfr_mul(a_lo, t_lo, l3_lo, MPFR_RNDD);
        mpfr_mul(a_hi, t_hi, l3_hi, MPFR_RNDU);
        mpfr_set_z(x, bn.get_mpz_t(), MPFR_RNDD);
        mpfr_log(ln_lo, x, MPFR_RNDD);
        mpfr_set_z(x, bn.get_mpz_t(), MPFR_RNDU);
        mpfr_log(ln_hi, x, MPFR_RNDU);
        mpfr_set_z(x, bd.get_mpz_t(), MPFR_RNDD);
        mpfr_log(ld_lo, x, MPFR_RNDD);
        mpfr_set_z(x, bd.get_mpz_t(), MPFR_RNDU);
        mpfr_log(ld_hi, x, MPFR_RNDU);
        // log(n/d) in [ln_lo - ld_hi, ln_hi - ld_lo]
        mpfr_sub(ln_lo, ln_lo, ld_hi, MPFR_RNDD);
        mpfr_sub(ln_hi, ln_hi, ld_lo, MPFR_RNDU);
        int verdict = 0;
        if (mpfr_less_p(a_hi, ln_lo)) verdict = 1;
        else if (mpfr_greater_p(a_lo, ln_hi)) verdict = -1;
        mpfr_clears(t_lo, t_hi, l3_lo, l3_hi, a_lo, a_hi, x, ln_lo, ln_hi, ld_lo, ld_hi,
                    static_cast<mpfr_ptr>(nullptr));
        if (verdict != 0) return verdict > 0;
        if (prec > (1 << 20)) throw std::runtime_error("threshold comparison failed to separate");
    }
}

std::string to_string(CensusAlgorithm a) { return a == CensusAlgorithm::scan ? "scan" : "interval"; }

CensusAlgorithm parse_algorithm(const std::string& text) {
    if (text == "scan") return CensusAlgorithm::scan;
    if (text == "interval") return CensusAlgorithm::interval;
    throw std::invalid_argument("unknown census algorithm '" + text + "'");
}

PairRange::PairRange(int level) : j(level) {
    if (level < 0 || level > 38) throw std::invalid_argument("pair range level out of range");
    q_low = static_cast<std::uint64_t>(pow3(level));
    q_high = static_cast<std::uint64_t>(pow3(level + 1)) - 1;
}

std::uint64_t totient_count(int j) {
    if (j < 0 || j > 15) throw std::invalid_argument("totient_count needs 0 <= j <= 15");
    PairRange range(j);
    std::vector<std::uint32_t> phi(range.q_high + 1);
    std::iota(phi.begin(), phi.end(), 0u);
    for (std::uint64_t i = 2; i <= range.q_high; ++i)
        if (phi[i] == i)
            for (std::uint64_t k = i; k <= range.q_high; k += i) phi[k] -= phi[k] / static_cast<std::uint32_t>(i);
    std::uint64_t total = 0;
    for (std::uint64_t q = range.q_low; q <= range.q_high; ++q) total += phi[q];
    return total;
}

bool in_cantor_native(std::uint64_t p, std::uint64_t q) {
    if (q == 0 || p >= q || q >= (std::uint64_t{1} << 62)) throw std::invalid_argument("in_cantor_native needs 0 <= p < q < 2^62");
    // 0: keep going, 1: member, 2: inside a gap
    auto step = [q](std::uint64_t& r) {
        std::uint64_t r3 = 3 * r;
        if (r3 < q) {
            r = r3;
            return 0;
        }
        if (r3 >= 2 * q) {
            r = r3 - 2 * q;
            return 0;
        }
        return r3 == q ? 1 : 2;
    };
    std::uint64_t tortoise = p, hare = p;
    if (int s = step(hare)) return s == 1;
    std::uint64_t power = 1, lam = 1;
    while (tortoise != hare) {
        if (power == lam) {
            tortoise = hare;
            power *= 2;
            lam = 0;
        }
        if (int s = step(hare)) return s == 1;
        ++lam;
    }
    return true;
}

std::uint64_t near_K_unit(std::uint64_t q, const Threshold& t, CensusAlgorithm alg) {
    if (q == 0 || q >= (std::uint64_t{1} << 24)) throw std::invalid_argument("census denominator out of range");
    if (alg == CensusAlgorithm::scan) return scan_unit(q, t);
    return IntervalWalker(q, t).run();
}

CensusRecord make_record(int j, const MuSpec& mu, std::uint64_t count) {
    CensusRecord r;
    r.j = j;
    r.mu = mu;
    r.count = count;
    r.log3_density = j > 0 ? std::log(static_cast<double>(count)) / (j * std::log(3.0))
                           : std::numeric_limits<double>::quiet_NaN();
    r.bound = conjectured_bound(mu.approx());
    return r;
}

std::uint64_t exact_in_K_count(int j, unsigned threads) {
    check_level(j, 0);
    return sum_units(j, Threshold(MuSpec::infinity(), j), CensusAlgorithm::scan, threads);
}

CensusRecord near_K_count(int j, const MuSpec& mu, unsigned threads) {
    check_level(j, 0);
    return make_record(j, mu, sum_units(j, Threshold(mu, j), CensusAlgorithm::scan, threads));
}

CensusRecord near_K_count_fast(int j, const MuSpec& mu, unsigned threads) {
    check_level(j, 0);
    return make_record(j, mu, sum_units(j, Threshold(mu, j), CensusAlgorithm::interval, threads));
}

SigmaReport sigma_estimate(const std::vector<CensusRecord>& records) {
    if (records.empty()) throw std::invalid_argument("sigma_estimate needs at least one record");
    SigmaReport rep;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (!(r.mu == records[0].mu)) throw std::invalid_argument("sigma_estimate records must share mu");
        if (i > 0 && r.j != records[i - 1].j + 1) throw std::invalid_argument("sigma_estimate needs consecutive j");
        if (r.j < 1) throw std::invalid_argument("sigma_estimate needs j >= 1");
        rep.j.push_back(r.j);
        rep.values.push_back(std::log(static_cast<double>(r.count)) / (r.j * std::log(3.0)));
    }
    rep.tail_max = rep.values;
    for (std::size_t i = rep.values.size() - 1; i-- > 0;)
        rep.tail_max[i] = std::max(rep.values[i], rep.tail_max[i + 1]);
    rep.estimate = rep.tail_max[rep.values.size() / 2];
    return rep;
}

std::uint64_t base_b_count(std::uint64_t b, int j) {
    if (b < 2 || j < 1) throw std::invalid_argument("base_b_count needs b >= 2 and j >= 1");
    u128 q = 1;
    for (int i = 0; i < j; ++i) {
        q *= b;
        if (q >= (u128{1} << 62)) throw std::invalid_argument("b^j must stay below 2^62");
    }
    Threshold exact(MuSpec::infinity(), j);
    return IntervalWalker(static_cast<std::uint64_t>(q), exact).run();
}

std::vector<ConjectureRow> conjecture_report(int j_low, int j_high, const std::vector<MuSpec>& mus,
                                             unsigned threads) {
    std::vector<ConjectureRow> rows;
    for (int j = j_low; j <= j_high; ++j) {
        for (const auto& mu : mus) {
            CensusRecord rec = near_K_count_fast(j, mu, threads);
            ConjectureRow row;
            row.j = j;
            row.mu = mu;
            row.count = rec.count;
            row.log3_density = rec.log3_density;
            row.bound = rec.bound;
            row.past_transition = mu.approx() > critical_mu();
            rows.push_back(row);
        }
    }
    return rows;
}

}  // namespace cantorlab
