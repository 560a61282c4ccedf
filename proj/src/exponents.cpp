#include "cantorlab/exponents.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cantorlab {

namespace {

Rational nearest_integer_distance(const Rational& y) {
    Rational f = y.frac();
    return min(f, Rational(1) - f);
}

double tail_of(const std::vector<WitnessPoint>& ws) {
    double best = -INFINITY;
    for (std::size_t i = ws.size() / 2; i < ws.size(); ++i) best = std::max(best, ws[i].log_ratio);
    return best;
}

}  // namespace

Rational ContinuedFraction::value() const {
    if (quotients.empty()) throw std::invalid_argument("empty continued fraction");
    Rational v(quotients.back());
    for (auto it = quotients.rbegin() + 1; it != quotients.rend(); ++it) v = Rational(*it) + Rational(1) / v;
    return v;
}

ContinuedFraction continued_fraction(const Rational& x) {
    if (x.sign() < 0) throw std::invalid_argument("continued_fraction needs x >= 0");
    ContinuedFraction cf;
    BigInt a = x.numerator(), b = x.denominator();
    while (b != 0) {
        BigInt q = a / b;
        BigInt r = a - q * b;
        cf.quotients.push_back(q);
        a = b;
        b = r;
    }
    return cf;
}

std::vector<Rational> convergents(const ContinuedFraction& cf) {
    std::vector<Rational> out;
    BigInt p_prev = 1, q_prev = 0, p = 0, q = 1;
    for (const auto& a : cf.quotients) {
        BigInt pn = a * p_prev + p;
        BigInt qn = a * q_prev + q;
        // shift: (p, q) <- (p_prev, q_prev), (p_prev, q_prev) <- new
        p = p_prev;
        q = q_prev;
        p_prev = pn;
        q_prev = qn;
        out.emplace_back(pn, qn);
    }
    return out;
}

std::string to_string(ExponentKind k) {
    switch (k) {
        case ExponentKind::irrationality: return "irrationality";
        case ExponentKind::base_b: return "base_b";
        default: return "random";
    }
}

BigInt floor_power(const Rational& mu, int j) {
    if (j < 0) throw std::invalid_argument("floor_power needs j >= 0");
    return mu.pow(j).floor();
}

LsvSum lsv_partial_sum(const Rational& mu, int J) {
    if (mu < Rational(2)) throw std::invalid_argument("lsv_partial_sum needs mu >= 2");
    if (J < 1) throw std::invalid_argument("lsv_partial_sum needs J >= 1");
    LsvSum s{Rational(0), Rational(0)};
    for (int j = 1; j <= J; ++j) s.value += Rational(2) / Rational(pow_big(3, floor_power(mu, j).get_ui()));
    s.tail_bound = Rational(3) / Rational(pow_big(3, floor_power(mu, J + 1).get_ui()));
    return s;
}

std::vector<ApproxWitness> lsv_witnesses(const Rational& mu, int J) {
    std::vector<ApproxWitness> out;
    for (int j = 1; j <= J; ++j) {
        LsvSum s = lsv_partial_sum(mu, j);
        out.push_back({s.value, s.tail_bound, pow_big(3, floor_power(mu, j).get_ui())});
    }
    return out;
}

std::vector<ApproxWitness> convergent_witnesses(const Rational& x) {
    auto conv = convergents(continued_fraction(x));
    std::vector<ApproxWitness> out;
    for (std::size_t k = 0; k + 1 < conv.size(); ++k) {
        BigInt q = conv[k].denominator();
        if (q < 2) continue;
        out.push_back({conv[k], (x - conv[k]).abs(), q});
    }
    return out;
}

ExponentEstimate exponent_from_witnesses(const std::vector<ApproxWitness>& ws) {
    if (ws.empty()) throw std::invalid_argument("exponent_from_witnesses needs at least one witness");
    ExponentEstimate e;
    e.kind = ExponentKind::irrationality;
    e.raw_max = -INFINITY;
    for (const auto& w : ws) {
        if (w.error_bound.sign() <= 0) throw std::invalid_argument("witness error bound must be positive");
        if (w.denominator_size < 2) throw std::invalid_argument("witness denominator must be at least 2");
        double ratio = -w.error_bound.log() / log_big(w.denominator_size);
        e.witnesses.push_back({log_big(w.denominator_size), ratio});
        e.raw_max = std::max(e.raw_max, ratio);
    }
    e.value = e.raw_max;
    e.tail_max = tail_of(e.witnesses);
    return e;
}

VbProfile vb_profile(const Rational& x, unsigned long b, int J) {
    if (b < 2) throw std::invalid_argument("vb_profile needs b >= 2");
    if (J < 1) throw std::invalid_argument("vb_profile needs J >= 1");
    VbProfile prof;
    prof.estimate.kind = ExponentKind::base_b;
    prof.estimate.raw_max = -INFINITY;
    Rational y = x.frac();
    const double log_b = std::log(static_cast<double>(b));
    for (int j = 1; j <= J; ++j) {
        y = (y * Rational(static_cast<std::int64_t>(b))).frac();
        VbRow row;
        row.j = j;
        row.distance = nearest_integer_distance(y);
        if (row.distance.sign() > 0) {
            row.log_ratio = -row.distance.log() / (j * log_b);
            prof.estimate.witnesses.push_back({static_cast<double>(j), row.log_ratio});
            prof.estimate.raw_max = std::max(prof.estimate.raw_max, row.log_ratio);
        }
        prof.rows.push_back(row);
    }
    if (prof.estimate.witnesses.empty()) prof.estimate.raw_max = 0;
    prof.estimate.tail_max = prof.estimate.witnesses.empty() ? 0 : tail_of(prof.estimate.witnesses);
    // every input here is rational, where v_b is 0 by convention
    prof.estimate.value = 0;
    return prof;
}

}  // namespace cantorlab
