#include "cantorlab/cantor.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace cantorlab {

Rational TriadicInterval::left() const { return Rational(BigInt(static_cast<unsigned long>(index)), pow_big(3, level)); }

Rational TriadicInterval::right() const {
    return Rational(BigInt(static_cast<unsigned long>(index)) + 1, pow_big(3, level));
}

IntervalUnion IntervalUnion::whole_circle() {
    IntervalUnion u;
    u.components_.push_back({Rational(0), Rational(1)});
    return u;
}

IntervalUnion IntervalUnion::from_intervals(std::vector<Arc> raw) {
    std::vector<Arc> pieces;
    for (auto& a : raw) {
        if (!(a.lo < a.hi)) continue;
        Rational len = a.hi - a.lo;
        if (len >= Rational(1)) return whole_circle();
        Rational lo = a.lo.frac();
        Rational hi = lo + len;
        if (hi <= Rational(1)) {
            pieces.push_back({lo, hi});
        } else {
            pieces.push_back({lo, Rational(1)});
            pieces.push_back({Rational(0), hi - Rational(1)});
        }
    }
    std::sort(pieces.begin(), pieces.end(), [](const Arc& a, const Arc& b) { return a.lo < b.lo; });
    IntervalUnion u;
    for (auto& p : pieces) {
        if (!u.components_.empty() && p.lo <= u.components_.back().hi) {
            if (p.hi > u.components_.back().hi) u.components_.back().hi = p.hi;
        } else {
            u.components_.push_back(p);
        }
    }
    return u;
}

Rational IntervalUnion::length() const {
    Rational total(0);
    for (const auto& c : components_) total += c.hi - c.lo;
    return total;
}

bool IntervalUnion::contains(const CirclePoint& x) const {
    auto it = std::upper_bound(components_.begin(), components_.end(), x.value(),
                               [](const Rational& v, const Arc& a) { return v < a.lo; });
    if (it == components_.begin()) return false;
    --it;
    return x.value() < it->hi;
}

TernaryExpansion ternary_expansion(const CirclePoint& x) {
    const BigInt q = x.value().denominator();
    BigInt r = x.value().numerator();
    std::map<BigInt, std::size_t> seen;
    std::vector<int> digits;
    while (true) {
        auto [it, fresh] = seen.emplace(r, digits.size());
        if (!fresh) {
            TernaryExpansion e;
            e.preperiod.assign(digits.begin(), digits.begin() + static_cast<std::ptrdiff_t>(it->second));
            e.period.assign(digits.begin() + static_cast<std::ptrdiff_t>(it->second), digits.end());
            return e;
        }
        BigInt r3 = 3 * r;
        int d = r3 < q ? 0 : (r3 < 2 * q ? 1 : 2);
        digits.push_back(d);
        r = r3 - d * q;
    }
}

bool in_cantor(const TernaryExpansion& e) {
    if (std::find(e.period.begin(), e.period.end(), 1) != e.period.end()) return false;
    auto one = std::find(e.preperiod.begin(), e.preperiod.end(), 1);
    if (one == e.preperiod.end()) return true;
    if (std::find(one + 1, e.preperiod.end(), 1) != e.preperiod.end()) return false;
    // A single 1 may be rewritten 1000... -> 0222... or 1222... -> 2000...
    for (int tail : {0, 2}) {
        bool ok = std::all_of(one + 1, e.preperiod.end(), [&](int d) { return d == tail; }) &&
                  std::all_of(e.period.begin(), e.period.end(), [&](int d) { return d == tail; });
        if (ok) return true;
    }
    return false;
}

bool in_cantor(const CirclePoint& x) { return in_cantor(ternary_expansion(x)); }

Rational distance_to_cantor(const CirclePoint& x) {
    const BigInt q = x.value().denominator();
    long level = 0;
    Rational result(0);

    // Advances one ternary digit. Returns true once the orbit has entered a
    // removed gap (result is set) or landed on a gap's left endpoint.
    auto advance = [&](BigInt& s) {
        ++level;
        BigInt s3 = 3 * s;
        if (s3 < q) {
            s = s3;
            return false;
        }
        if (s3 >= 2 * q) {
            s = s3 - 2 * q;
            return false;
        }
        if (s3 != q) {
            BigInt m = s3 - q;
            BigInt other = 2 * q - s3;
            if (other < m) m = other;
            result = Rational(m, q * pow_big(3, static_cast<unsigned long>(level)));
        }
        return true;
    };

    // Brent cycle detection on the remainder orbit: a cycle without a gap
    // means every digit is 0 or 2.
    BigInt tortoise = x.value().numerator();
    BigInt hare = tortoise;
    if (advance(hare)) return result;
    unsigned long power = 1, lam = 1;
    while (tortoise != hare) {
        if (power == lam) {
            tortoise = hare;
            power *= 2;
            lam = 0;
        }
        if (advance(hare)) return result;
        ++lam;
    }
    return Rational(0);
}

Rational cantor_cdf(const Rational& x) {
    if (x < Rational(0) || x > Rational(1)) throw std::domain_error("cantor_cdf needs x in [0, 1]");
    if (x == Rational(1)) return Rational(1);
    TernaryExpansion e = ternary_expansion(CirclePoint(x));
    Rational acc(0);
    Rational scale(1, 2);
    for (int d : e.preperiod) {
        if (d == 1) return acc + scale;
        if (d == 2) acc += scale;
        scale /= Rational(2);
    }
    Rational block(0);
    Rational block_scale = scale;
    for (int d : e.period) {
        if (d == 1) return acc + block + block_scale;
        if (d == 2) block += block_scale;
        block_scale /= Rational(2);
    }
    // Repeating binary block: block * (1 + 2^-L + 2^-2L + ...)
    Rational ratio = Rational(1) - Rational(1, 2).pow(static_cast<std::int64_t>(e.period.size()));
    return acc + block / ratio;
}

double cantor_cdf(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double acc = 0.0, scale = 0.5;
    for (int i = 0; i < 60 && scale > 0.0; ++i) {
        x *= 3.0;
        if (x < 1.0) {
        } else if (x < 2.0) {
            return acc + scale;
        } else {
            x -= 2.0;
            acc += scale;
        }
        scale *= 0.5;
    }
    return acc;
}

Rational cantor_measure(const IntervalUnion& u) {
    Rational total(0);
    for (const auto& c : u.components()) total += cantor_cdf(c.hi) - cantor_cdf(c.lo);
    return total;
}

double cantor_measure_arc(double lo, double hi) {
    double len = hi - lo;
    if (len <= 0.0) return 0.0;
    if (len >= 1.0) return 1.0;
    double a = wrap01(lo);
    double b = a + len;
    if (b <= 1.0) return cantor_cdf(b) - cantor_cdf(a);
    return (1.0 - cantor_cdf(a)) + cantor_cdf(b - 1.0);
}

std::uint64_t cantor_cell_index(std::uint64_t k, int j) {
    std::uint64_t index = 0, p3 = 1;
    for (int i = 0; i < j; ++i) {
        if ((k >> i) & 1u) index += 2 * p3;
        p3 *= 3;
    }
    return index;
}

bool is_cantor_cell(std::uint64_t index, int j) {
    for (int i = 0; i < j; ++i) {
        if (index % 3 == 1) return false;
        index /= 3;
    }
    return true;
}

std::vector<TriadicInterval> level_cover(int j) {
    if (j < 0 || j > 40) throw std::invalid_argument("level_cover needs 0 <= j <= 40");
    std::vector<TriadicInterval> cells;
    const std::uint64_t n = std::uint64_t{1} << j;
    cells.reserve(n);
    for (std::uint64_t k = 0; k < n; ++k) cells.push_back({j, cantor_cell_index(k, j)});
    return cells;
}

IntervalUnion neighborhood_cover(int j, const Rational& delta) {
    if (delta <= Rational(0) || delta > Rational(1))
        throw std::invalid_argument("neighborhood_cover needs 0 < delta <= 1");
    std::vector<Arc> raw;
    for (const auto& c : level_cover(j)) raw.push_back({c.left() - delta, c.right() + delta});
    return IntervalUnion::from_intervals(std::move(raw));
}

AhlforsSample ahlfors_ratio(const CirclePoint& x, const Rational& r) {
    if (!in_cantor(x)) throw std::invalid_argument("ahlfors_ratio needs a point of K");
    if (r <= Rational(0) || r > Rational(1, 2)) throw std::invalid_argument("ahlfors_ratio needs 0 < r <= 1/2");
    Rational m = cantor_measure(IntervalUnion::from_intervals({{x.value() - r, x.value() + r}}));
    double ratio = std::exp(m.log() - kappa * r.log());
    return {m, ratio};
}

}  // namespace cantorlab
