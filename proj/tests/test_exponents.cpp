#include <cmath>

#include "cantorlab/cantor.hpp"
#include "cantorlab/exponents.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cantorlab;
using cantorlab::testing::random_unit_rational;

namespace {

std::vector<BigInt> q(std::initializer_list<long> xs) {
    std::vector<BigInt> out;
    for (long x : xs) out.emplace_back(x);
    return out;
}

}  // namespace

TEST_CASE("continued_fraction") {
    CHECK(continued_fraction(Rational(1, 2)).quotients == q({0, 2}));
    CHECK(continued_fraction(Rational(3, 7)).quotients == q({0, 2, 3}));
    CHECK(continued_fraction(Rational(0)).quotients == q({0}));
    CHECK(continued_fraction(Rational(5)).quotients == q({5}));
    CHECK(continued_fraction(Rational(355, 113)).quotients == q({3, 7, 16}));
    CHECK_THROWS(continued_fraction(Rational(-1, 2)));
}

TEST_CASE("convergents") {
    auto c = convergents(continued_fraction(Rational(3, 7)));
    REQUIRE(c.size() == 3);
    CHECK(c[0] == Rational(0));
    CHECK(c[1] == Rational(1, 2));
    CHECK(c[2] == Rational(3, 7));
    auto h = convergents(ContinuedFraction{q({0, 2})});
    CHECK(h == std::vector<Rational>{Rational(0), Rational(1, 2)});
}

TEST_CASE("property: expansions round trip and convergents obey the classical inequality") {
    StreamEngine eng(RandomStream(41).derive("cf", 0));
    for (int i = 0; i < 10000; ++i) {
        Rational x = random_unit_rational(eng, 1000000) + Rational(static_cast<std::int64_t>(eng() % 5));
        auto cf = continued_fraction(x);
        REQUIRE(cf.value() == x);
        for (std::size_t k = 1; k < cf.quotients.size(); ++k) REQUIRE(cf.quotients[k] >= 1);
        if (cf.quotients.size() > 1) REQUIRE(cf.quotients.back() >= 2);
        auto c = convergents(cf);
        REQUIRE(c.back() == x);
        for (std::size_t k = 0; k + 1 < c.size(); ++k) {
            Rational bound = Rational(1) / Rational(BigInt(c[k].denominator() * c[k + 1].denominator()));
            // For rational x the last step is an equality: x is the next convergent.
            if (k + 2 < c.size())
                REQUIRE((x - c[k]).abs() < bound);
            else
                REQUIRE((x - c[k]).abs() == bound);
        }
    }
}

TEST_CASE("floor_power") {
    CHECK(floor_power(Rational(3), 4) == 81);
    CHECK(floor_power(Rational(5, 2), 3) == 15);  // 15.625
    CHECK(floor_power(Rational(7, 3), 0) == 1);
}

TEST_CASE("lsv_partial_sum") {
    CHECK(lsv_partial_sum(Rational(2), 2).value == Rational(20, 81));
    CHECK(lsv_partial_sum(Rational(3), 1).value == Rational(2, 27));
    CHECK(lsv_partial_sum(Rational(3), 2).value == Rational(1460, 19683));
    auto s = lsv_partial_sum(Rational(3), 2);
    CHECK(s.tail_bound == Rational(3) / Rational(pow_big(3, 27)));
    // the tail really is below the recorded bound
    auto longer = lsv_partial_sum(Rational(3), 4);
    CHECK((longer.value - s.value) <= s.tail_bound);
    CHECK_THROWS(lsv_partial_sum(Rational(3, 2), 3));
}

TEST_CASE("exponent_from_witnesses") {
    auto single = exponent_from_witnesses({{Rational(3, 10), Rational(1, 100), BigInt(10)}});
    CHECK(single.value == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(single.witnesses.size() == 1);
    CHECK_THROWS(exponent_from_witnesses({}));
    CHECK_THROWS(exponent_from_witnesses({{Rational(0), Rational(0), BigInt(10)}}));

    auto lsv = exponent_from_witnesses(lsv_witnesses(Rational(3), 5));
    CHECK(lsv.value >= 2.85);
    CHECK(lsv.value <= 3.05);
    CHECK(lsv.value == doctest::Approx(2.9958847736625516).epsilon(1e-12));
    CHECK(lsv.witnesses.size() == 5);
}

TEST_CASE("convergent witnesses of a truncated irrational") {
    // sqrt(2) truncated to 40 decimal digits
    Rational x = Rational::parse("1.4142135623730950488016887242096980785696");
    auto ws = convergent_witnesses(x);
    REQUIRE(ws.size() > 10);
    auto e = exponent_from_witnesses(ws);
    for (const auto& w : e.witnesses) CHECK(w.log_ratio >= 2.0);
    CHECK(e.value >= 2.0 - 0.05);

    StreamEngine eng(RandomStream(43));
    for (int i = 0; i < 200; ++i) {
        Rational y = random_unit_rational(eng, 1000000000);
        auto wy = convergent_witnesses(y);
        if (wy.empty()) continue;
        REQUIRE(exponent_from_witnesses(wy).value >= 2.0);
    }
}

TEST_CASE("vb_profile") {
    auto half = vb_profile(Rational(1, 2), 3, 50);
    for (const auto& row : half.rows) CHECK(row.distance == Rational(1, 2));
    CHECK(half.estimate.value == 0);
    CHECK(half.estimate.raw_max == doctest::Approx(std::log(2.0) / std::log(3.0)).epsilon(1e-12));
    CHECK(half.estimate.tail_max < 0.05);

    auto zero = vb_profile(Rational(0), 7, 10);
    for (const auto& row : zero.rows) CHECK(row.distance.sign() == 0);
    CHECK(zero.estimate.value == 0);
    CHECK(zero.estimate.witnesses.empty());

    Rational xi = lsv_partial_sum(Rational(3), 5).value;
    auto prof = vb_profile(xi, 3, 243);
    CHECK(prof.estimate.value == 0);
    CHECK(prof.estimate.raw_max == doctest::Approx(1.992211).epsilon(1e-5));
    // At j = 3^k the expansion enters a block of 2*3^k zeros, so the
    // log-ratio is 2 - log_3(2)/j up to the later terms.
    for (int k = 1; k <= 4; ++k) {
        int j = static_cast<int>(std::pow(3, k));
        CHECK(prof.rows[j - 1].log_ratio == doctest::Approx(2 - kappa / j).epsilon(1e-6));
    }
    CHECK_THROWS(vb_profile(Rational(1, 3), 1, 5));
}

TEST_CASE("property: mu >= v_b + 1 on LSV partial sums") {
    for (int J = 3; J <= 5; ++J) {
        Rational xi = lsv_partial_sum(Rational(3), J).value;
        int horizon = static_cast<int>(std::pow(3, J));
        auto mu = exponent_from_witnesses(lsv_witnesses(Rational(3), J));
        auto vb = vb_profile(xi, 3, horizon);
        CAPTURE(J);
        CHECK(mu.value >= vb.estimate.raw_max + 1 - 0.1);
    }
}
