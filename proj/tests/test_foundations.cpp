#include <cmath>
#include <set>
#include <vector>

#include "cantorlab/bigfixed.hpp"
#include "cantorlab/circle.hpp"
#include "cantorlab/parallel.hpp"
#include "cantorlab/random_stream.hpp"
#include "cantorlab/rational.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cantorlab;
using cantorlab::testing::random_rational;
using cantorlab::testing::random_unit_rational;

TEST_CASE("rational parsing is exact and canonical") {
    CHECK(Rational::parse("2.77") == Rational(277, 100));
    CHECK(Rational::parse("-5/10") == Rational(-1, 2));
    CHECK(Rational::parse("7") == Rational(7));
    CHECK(Rational(6, -4).denominator() == 2);
    CHECK(Rational(6, -4).numerator() == -3);
    CHECK_THROWS(Rational::parse("1/0"));
    CHECK_THROWS(Rational::parse("abc"));
}

TEST_CASE("rational floor, ceil and frac") {
    CHECK(Rational(7, 3).floor() == 2);
    CHECK(Rational(-7, 3).floor() == -3);
    CHECK(Rational(-7, 3).ceil() == -2);
    CHECK(Rational(-1, 4).frac() == Rational(3, 4));
    CHECK(Rational(2, 3).pow(-2) == Rational(9, 4));
}

TEST_CASE("rational log reaches far outside the double range") {
    Rational tiny = Rational(1, 3).pow(2000);
    CHECK(tiny.to_double() == 0.0);
    CHECK(tiny.log() == doctest::Approx(-2000 * std::log(3.0)).epsilon(1e-12));
    CHECK(log_big(pow_big(2, 5000)) == doctest::Approx(5000 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("reduce_to_circle") {
    CHECK(reduce_to_circle(Rational(7, 3)).value() == Rational(1, 3));
    CHECK(reduce_to_circle(Rational(0)).value() == Rational(0));
    CHECK(reduce_to_circle(Rational(-1, 4)).value() == Rational(3, 4));
}

TEST_CASE("circle_distance") {
    CHECK(circle_distance(CirclePoint(Rational(9, 10)), CirclePoint(Rational(1, 20))) == Rational(3, 20));
    CirclePoint x(Rational(5, 17));
    CHECK(circle_distance(x, x) == Rational(0));
    CHECK(circle_distance(CirclePoint(Rational(0)), CirclePoint(Rational(1, 2))) == Rational(1, 2));
    CHECK(circle_distance(0.9, 0.05) == doctest::Approx(0.15));
    CHECK(wrap01(-0.25) == 0.75);
}

TEST_CASE("property: circle distance is a metric bounded by 1/2") {
    StreamEngine eng(RandomStream(11).derive("metric", 0));
    for (int i = 0; i < 2000; ++i) {
        CirclePoint x(random_rational(eng)), y(random_rational(eng)), z(random_rational(eng));
        Rational dxy = circle_distance(x, y), dyz = circle_distance(y, z), dxz = circle_distance(x, z);
        REQUIRE(dxz <= dxy + dyz);
        REQUIRE(dxy == circle_distance(y, x));
        REQUIRE(dxy <= Rational(1, 2));
        REQUIRE(dxy.sign() >= 0);
    }
}

TEST_CASE("philox matches the Random123 known-answer vectors") {
    using A4 = std::array<std::uint32_t, 4>;
    CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
          A4{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
          A4{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("derive_stream") {
    RandomStream root(2024);
    auto a = root.derive("trial", 0), a2 = root.derive("trial", 0), b = root.derive("trial", 1);
    CHECK(a.key() == a2.key());
    CHECK(a.word(0) == a2.word(0));
    // Frozen first words for seed 2024.
    CHECK(a.word(0) == 0x4fa39214e8d52ed9ULL);
    CHECK(b.word(0) == 0xd15990a686404d5fULL);
    CHECK(root.word(0) == 0x4e413d61d66bf149ULL);
    CHECK(a.word(0) != b.word(0));
    CHECK(RandomStream(2024).word(17) == root.word(17));
    CHECK(root.derive("x", 1).derive("y", 2).path().size() == 2);
    CHECK(root.derive("trial", 0).key() != root.derive("triam", 0).key());
}

TEST_CASE("stream words do not depend on the number of threads") {
    RandomStream root(99);
    auto words = [&](unsigned threads) {
        return parallel_map(1000, threads, [&](std::size_t i) { return root.derive("trial", i).word(i * 7); });
    };
    CHECK(words(1) == words(4));
}

TEST_CASE("uniform doubles lie in [0, 1)") {
    CHECK(to_unit_interval(0) == 0.0);
    CHECK(to_unit_interval(~0ULL) < 1.0);
    StreamEngine eng(RandomStream(5));
    double sum = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) sum += eng.uniform();
    // mean of n uniforms: sd = sqrt(1/12n) ~ 0.002
    CHECK(std::abs(sum / n - 0.5) < 0.01);
}

TEST_CASE("property: BigFixed error bounds hold against exact arithmetic") {
    StreamEngine eng(RandomStream(3).derive("bigfixed", 0));
    for (unsigned prec : {8u, 53u, 100u, 256u}) {
        for (int i = 0; i < 300; ++i) {
            Rational x = random_rational(eng), y = random_rational(eng);
            BigFixed fx = BigFixed::from_rational(x, prec), fy = BigFixed::from_rational(y, prec);
            REQUIRE((fx.value() - x).abs() <= fx.error_bound());
            BigFixed s = fx + fy, d = fx - fy, p = fx * fy;
            REQUIRE((s.value() - (x + y)).abs() <= s.error_bound());
            REQUIRE((d.value() - (x - y)).abs() <= d.error_bound());
            REQUIRE((p.value() - x * y).abs() <= p.error_bound());
            BigInt a = static_cast<long>(eng() % 100000) - 50000;
            BigFixed sc = fx.scaled(a);
            REQUIRE((sc.value() - x * Rational(a)).abs() <= sc.error_bound());
        }
    }
}

TEST_CASE("BigFixed frac and precision rule") {
    BigFixed x = BigFixed::from_rational(Rational(7, 3), 64);
    BigFixed f = x.frac();
    CHECK(f.value() >= Rational(0));
    CHECK(f.value() < Rational(1));
    CHECK((f.value() - Rational(1, 3)).abs() <= f.error_bound());
    CHECK(fractional_parts_precision(pow_big(2, 100)) == 100 + 64);
    CHECK(fractional_parts_precision(pow_big(2, 100) + 1) == 101 + 64);
    CHECK_THROWS(x + BigFixed::from_rational(Rational(1), 32));
}

TEST_CASE("property: random unit rationals reduce to themselves") {
    StreamEngine eng(RandomStream(8));
    for (int i = 0; i < 500; ++i) {
        Rational x = random_unit_rational(eng, 1000);
        REQUIRE(reduce_to_circle(x).value() == x);
        REQUIRE(reduce_to_circle(x + Rational(3)).value() == x);
    }
}
