#include <cmath>
#include <map>
#include <numeric>

#include "cantorlab/cantor.hpp"
#include "cantorlab/census.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cantorlab;

namespace {

const std::vector<std::string> mu_grid = {"0", "1", "2", "2.5", "2.77", "3.5", "4", "inf", "mu*"};

// Frozen from tests/oracles/census_oracle.py (exhaustive scan with exact fractions).
// Rows j = 1..4, columns follow mu_grid.
const std::map<int, std::vector<std::uint64_t>> near_table = {
    {1, {20, 20, 20, 16, 14, 8, 6, 4, 8}},
    {2, {190, 168, 86, 50, 36, 18, 16, 16, 18}},
    {3, {1754, 1162, 340, 154, 96, 42, 36, 36, 40}},
    {4, {15928, 7458, 1386, 536, 352, 186, 158, 156, 166}},
};

// Counts by the exact geometry module: d(p/q, K) < 3^-T with T = mu j.
std::uint64_t geometric_count(int j, const MuSpec& mu) {
    PairRange range(j);
    Threshold t(mu, j);
    std::uint64_t count = 0;
    for (std::uint64_t q = range.q_low; q <= range.q_high; ++q) {
        for (std::uint64_t p = 0; p < q; ++p) {
            if (std::gcd(p, q) != 1) continue;
            Rational d = distance_to_cantor(CirclePoint(Rational(static_cast<std::int64_t>(p), static_cast<std::int64_t>(q))));
            bool near = false;
            if (t.infinite()) {
                near = d.sign() == 0;
            } else if (d.sign() == 0) {
                near = true;
            } else {
                // 3^T < 1/d
                BigInt n = d.denominator(), den = d.numerator();
                near = t.pow3_below(static_cast<u128>(n.get_ui()), static_cast<u128>(den.get_ui()));
            }
            count += near;
        }
    }
    return count;
}

}  // namespace

TEST_CASE("MuSpec parsing and labels") {
    CHECK(MuSpec::parse("2.77").label() == "2.77");
    CHECK(MuSpec::parse("5/2").label() == "2.5");
    CHECK(MuSpec::parse("1/3").label() == "1/3");
    CHECK(MuSpec::parse("inf").kind() == MuSpec::Kind::infinite);
    CHECK(MuSpec::parse("mu*").label() == "mu*");
    CHECK(MuSpec::parse("mu*").approx() == doctest::Approx(3.709511291351455).epsilon(1e-14));
    CHECK_THROWS(MuSpec::parse("-1"));
}

TEST_CASE("critical exponent and conjectured bound") {
    CHECK(critical_mu() == doctest::Approx((2 - kappa) / (1 - kappa)).epsilon(1e-15));
    CHECK(conjectured_bound(2) == doctest::Approx(2 - (1 - kappa) * 2).epsilon(1e-15));
    CHECK(conjectured_bound(2) == doctest::Approx(1.2618595071429148).epsilon(1e-15));
    CHECK(conjectured_bound(4) == doctest::Approx(kappa).epsilon(1e-15));
    CHECK(2 - (1 - kappa) * critical_mu() == doctest::Approx(kappa).epsilon(1e-14));
    CHECK(conjectured_bound(INFINITY) == doctest::Approx(kappa));
}

TEST_CASE("thresholds") {
    Threshold t(MuSpec::parse("2"), 3);
    CHECK(t.exponent() == Rational(6));
    CHECK(t.pow3_below(730, 1));
    CHECK_FALSE(t.pow3_below(729, 1));
    CHECK_FALSE(t.pow3_below(1458, 2));
    CHECK(t.pow3_below(1459, 2));
    Threshold half(MuSpec::parse("1/2"), 1);  // 3^(1/2) = 1.7320508...
    CHECK(half.pow3_below(17321, 10000));
    CHECK_FALSE(half.pow3_below(17320, 10000));
    for (int j = 1; j <= 10; ++j) {
        Threshold c(MuSpec::critical(), j);
        Rational scaled = c.exponent() * Rational(1 << 20);
        CHECK(scaled.is_integer());
        CHECK(c.exponent().to_double() >= critical_mu() * j);
        CHECK(c.exponent().to_double() - critical_mu() * j <= std::ldexp(1.0, -20));
    }
    CHECK(Threshold(MuSpec::infinity(), 2).infinite());
}

TEST_CASE("saturation and merge levels") {
    // 3^T < 6 * 3^s and 3^T < 2 * 3^(m+1)
    Threshold t(MuSpec::parse("2"), 2);  // T = 4
    CHECK(t.saturation_level() == 3);    // 81 < 6 * 27
    CHECK(t.merge_level() == 3);         // 81 < 2 * 81
    Threshold u(MuSpec::parse("1"), 1);  // T = 1
    CHECK(u.saturation_level() == 0);
    CHECK(u.merge_level() == 0);
}

TEST_CASE("totient_count") {
    CHECK(totient_count(0) == 2);
    CHECK(totient_count(1) == 20);
    CHECK(totient_count(2) == 190);
    CHECK(totient_count(3) == 1754);
    CHECK(totient_count(4) == 15928);
    for (int j = 4; j <= 7; ++j) {
        double ratio = static_cast<double>(totient_count(j)) / std::pow(9.0, j);
        CHECK(ratio >= 2.2);
        CHECK(ratio <= 2.7);
    }
}

TEST_CASE("exact_in_K_count") {
    const std::vector<std::uint64_t> oracle = {4, 16, 36, 156, 336};
    for (int j = 1; j <= 5; ++j) {
        CHECK(exact_in_K_count(j) == oracle[j - 1]);
        CHECK(exact_in_K_count(j) >= (1u << (j - 1)));
    }
    for (auto [p, q] : std::vector<std::pair<int, int>>{{1, 9}, {2, 9}, {7, 9}, {8, 9}, {1, 10}, {3, 10}, {7, 10}, {9, 10}})
        CHECK(in_cantor_native(p, q));
}

TEST_CASE("near_K_count against the frozen oracle table") {
    for (const auto& [j, row] : near_table) {
        for (std::size_t i = 0; i < mu_grid.size(); ++i) {
            MuSpec mu = MuSpec::parse(mu_grid[i]);
            CAPTURE(j);
            CAPTURE(mu_grid[i]);
            CHECK(near_K_count(j, mu).count == row[i]);
            CHECK(near_K_count_fast(j, mu).count == row[i]);
        }
    }
}

TEST_CASE("near_K_count against exact geometry") {
    for (int j = 1; j <= 3; ++j)
        for (const auto& m : mu_grid) {
            MuSpec mu = MuSpec::parse(m);
            CAPTURE(j);
            CAPTURE(m);
            CHECK(near_K_count(j, mu).count == geometric_count(j, mu));
        }
}

TEST_CASE("near_K_count examples") {
    CHECK(near_K_count(1, MuSpec::parse("10")).count == 4);
    CHECK(near_K_count(3, MuSpec::parse("0")).count == totient_count(3));
    CHECK(near_K_count_fast(5, MuSpec::parse("0")).count == totient_count(5));
    CHECK(near_K_count(1, MuSpec::parse("1")).count == near_K_count_fast(1, MuSpec::parse("1")).count);
    CHECK(near_K_count(3, MuSpec::parse("2.5")).count == near_K_count_fast(3, MuSpec::parse("2.5")).count);
    auto rec = make_record(1, MuSpec::infinity(), 4);
    CHECK(rec.log3_density == doctest::Approx(std::log(4.0) / std::log(3.0)).epsilon(1e-15));
    CHECK(rec.log3_density == doctest::Approx(1.2619).epsilon(1e-4));
}

TEST_CASE("property: counts are monotone in mu and sandwiched") {
    for (int j = 1; j <= 5; ++j) {
        std::uint64_t exact = exact_in_K_count(j), total = totient_count(j);
        std::uint64_t prev = total;
        for (const char* m : {"0.5", "1", "1.5", "2", "2.5", "3", "3.5", "mu*", "4", "6", "inf"}) {
            auto c = near_K_count_fast(j, MuSpec::parse(m)).count;
            CAPTURE(j);
            CAPTURE(m);
            REQUIRE(c <= prev);
            REQUIRE(c >= exact);
            REQUIRE(c <= total);
            prev = c;
        }
    }
}

TEST_CASE("property: scan and interval algorithms agree per denominator") {
    StreamEngine eng(RandomStream(31).derive("census", 0));
    for (int i = 0; i < 300; ++i) {
        int j = 1 + static_cast<int>(eng() % 7);
        PairRange range(j);
        std::uint64_t q = range.q_low + eng() % (range.q_high - range.q_low + 1);
        Rational mu(static_cast<std::int64_t>(eng() % 600), 100);
        Threshold t(MuSpec::finite(mu), j);
        CAPTURE(q);
        CAPTURE(mu);
        REQUIRE(near_K_unit(q, t, CensusAlgorithm::scan) == near_K_unit(q, t, CensusAlgorithm::interval));
    }
}

TEST_CASE("property: native membership agrees with the rational expansion") {
    StreamEngine eng(RandomStream(37));
    for (int i = 0; i < 3000; ++i) {
        std::uint64_t q = 1 + eng() % 20000, p = eng() % q;
        REQUIRE(in_cantor_native(p, q) ==
                in_cantor(CirclePoint(Rational(static_cast<std::int64_t>(p), static_cast<std::int64_t>(q)))));
    }
}

TEST_CASE("counts do not depend on the thread count") {
    for (const char* m : {"1", "2.77", "inf"}) {
        MuSpec mu = MuSpec::parse(m);
        CHECK(near_K_count_fast(5, mu, 1).count == near_K_count_fast(5, mu, 3).count);
        CHECK(near_K_count(4, mu, 1).count == near_K_count(4, mu, 4).count);
    }
}

TEST_CASE("sigma_estimate") {
    std::vector<CensusRecord> recs;
    for (int j = 1; j <= 8; ++j) recs.push_back(make_record(j, MuSpec::infinity(), 1ULL << (j - 1)));
    auto rep = sigma_estimate(recs);
    for (std::size_t i = 0; i < rep.values.size(); ++i) {
        int j = rep.j[i];
        CHECK(rep.values[i] == doctest::Approx(kappa - std::log(2.0) / std::log(3.0) / j).epsilon(1e-12));
        if (i > 0) CHECK(rep.values[i] > rep.values[i - 1]);
    }
    CHECK(rep.estimate == doctest::Approx(kappa * 7 / 8).epsilon(1e-12));

    std::vector<CensusRecord> tot;
    for (int j = 1; j <= 6; ++j) tot.push_back(make_record(j, MuSpec::parse("0"), totient_count(j)));
    auto rt = sigma_estimate(tot);
    for (std::size_t i = 0; i < rt.values.size(); ++i) CHECK(std::abs(rt.values[i] - 2) < 1.0 / rt.j[i]);

    auto one = sigma_estimate({make_record(1, MuSpec::infinity(), 4)});
    CHECK(one.estimate == doctest::Approx(1.2619).epsilon(1e-4));

    CHECK_THROWS(sigma_estimate({}));
    CHECK_THROWS(sigma_estimate({make_record(1, MuSpec::infinity(), 4), make_record(3, MuSpec::infinity(), 36)}));
    CHECK_THROWS(sigma_estimate({make_record(1, MuSpec::infinity(), 4), make_record(2, MuSpec::parse("2"), 86)}));
}

TEST_CASE("base_b_count") {
    CHECK(base_b_count(2, 2) == 2);
    CHECK(base_b_count(2, 3) == 0);
    // Exhaustive oracle over k < 3^j coprime to 3.
    for (int j = 1; j <= 6; ++j) {
        std::uint64_t n = 1;
        for (int i = 0; i < j; ++i) n *= 3;
        std::uint64_t count = 0;
        for (std::uint64_t k = 1; k < n; ++k)
            if (k % 3 != 0 && in_cantor(CirclePoint(Rational(static_cast<std::int64_t>(k), static_cast<std::int64_t>(n)))))
                ++count;
        CHECK(base_b_count(3, j) == count);
        CHECK(count == (1ULL << j));
    }
    for (std::uint64_t b : {5, 6, 10})
        for (int j = 1; j <= 4; ++j) {
            std::uint64_t n = 1;
            for (int i = 0; i < j; ++i) n *= b;
            std::uint64_t count = 0;
            for (std::uint64_t k = 0; k < n; ++k)
                if (std::gcd(k, n) == 1 && in_cantor_native(k, n)) ++count;
            CHECK(base_b_count(b, j) == count);
        }
}

TEST_CASE("conjecture_report") {
    auto rows = conjecture_report(2, 3, {MuSpec::parse("2"), MuSpec::critical(), MuSpec::parse("4")});
    REQUIRE(rows.size() == 6);
    CHECK(rows[0].count == 86);
    CHECK(rows[0].bound == doctest::Approx(2 * kappa));
    CHECK_FALSE(rows[0].past_transition);
    CHECK_FALSE(rows[1].past_transition);
    CHECK(rows[1].bound == doctest::Approx(kappa).epsilon(1e-12));
    CHECK(rows[2].past_transition);
    CHECK(rows[2].bound == doctest::Approx(kappa));
    CHECK(rows[5].count == 36);
}
