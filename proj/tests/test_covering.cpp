#include <algorithm>
#include <cmath>

#include "cantorlab/covering.hpp"
#include "doctest.h"

using namespace cantorlab;

namespace {

// Smallest point of K that is >= x, for x in [0, 1), by ternary recursion on
// exact fractions. After 60 levels without meeting a gap the answer is within
// 3^-60 of x, which is all the callers need.
Rational next_cantor_point(Rational x) {
    Rational offset(0), scale(1);
    for (int depth = 0; depth < 60; ++depth) {
        if (x <= Rational(1, 3)) {
            x = x * Rational(3);
        } else if (x >= Rational(2, 3)) {
            offset = offset + scale * Rational(2, 3);
            x = x * Rational(3) - Rational(2);
        } else {
            return offset + scale * Rational(2, 3);
        }
        scale = scale / Rational(3);
    }
    return offset + scale * x;
}

std::uint64_t brute_hit_cells_K(std::uint64_t q) {
    std::uint64_t count = 0;
    for (std::uint64_t k = 0; k < q; ++k) {
        Rational a(static_cast<std::int64_t>(k), static_cast<std::int64_t>(q));
        Rational b(static_cast<std::int64_t>(k + 1), static_cast<std::int64_t>(q));
        if (next_cantor_point(a) < b) ++count;
    }
    return count;
}

}  // namespace

TEST_CASE("integer sequences and the pair enumeration") {
    auto a = IntegerSequence::two_pow_n_squared();
    CHECK(a.value(1) == 2);
    CHECK(a.value(3) == 512);
    CHECK(a.log_value(4) == doctest::Approx(16 * std::log(2.0)));
    CHECK(IntegerSequence::parse("geometric:3").value(4) == 81);
    CHECK(IntegerSequence::parse(a.describe()).kind() == IntegerSequence::Kind::two_pow_n_squared);
    CHECK_THROWS(IntegerSequence::parse("fibonacci"));

    PairEnumeration e(8);
    std::vector<std::pair<std::uint64_t, std::uint64_t>> got;
    for (std::size_t n = 1; n <= e.size(); ++n) got.emplace_back(e.p(n), e.q(n));
    CHECK(got == std::vector<std::pair<std::uint64_t, std::uint64_t>>{
                     {0, 1}, {1, 2}, {1, 3}, {2, 3}, {1, 4}, {3, 4}, {1, 5}, {2, 5}});
}

TEST_CASE("pair families") {
    CHECK(in_pair_family(PairFamily::triadic, 2, 9));
    CHECK(in_pair_family(PairFamily::triadic, 20, 27));
    CHECK_FALSE(in_pair_family(PairFamily::triadic, 1, 9));
    CHECK_FALSE(in_pair_family(PairFamily::triadic, 1, 4));
    CHECK(in_pair_family(PairFamily::membership, 1, 4));
    CHECK_FALSE(in_pair_family(PairFamily::none, 0, 1));
    CHECK(parse_pair_family(to_string(PairFamily::membership)) == PairFamily::membership);
}

TEST_CASE("point processes") {
    RandomStream s(7);
    const auto cantor_proc = PointProcess::iid_cantor();
    auto cantor = cantor_proc.start(s.derive("trial", 0));
    for (std::size_t n = 1; n <= 200; ++n) {
        REQUIRE(in_cantor(cantor.exact_point(n)));
        REQUIRE(cantor.point(n) == doctest::Approx(cantor.exact_point(n).to_double()).epsilon(1e-15));
    }
    const auto circle_proc = PointProcess::iid_circle();
    auto circle = circle_proc.start(s.derive("trial", 0));
    for (std::size_t n = 1; n <= 200; ++n) {
        double x = circle.point(n);
        REQUIRE(x >= 0.0);
        REQUIRE(x < 1.0);
        REQUIRE(circle.cell(n, 7) == static_cast<std::uint64_t>(x * 7));
    }

    const auto rot_proc = PointProcess::rotated_rationals(Rational(0), 10);
    auto rot = rot_proc.start(s);
    CHECK(rot.exact_point(1).value() == Rational(0));
    CHECK(rot.exact_point(2).value() == Rational(1, 2));
    const auto shifted_proc = PointProcess::rotated_rationals(Rational(1, 4), 10);
    auto shifted = shifted_proc.start(s);
    CHECK(shifted.exact_point(2).value() == Rational(1, 4));
    CHECK(shifted.exact_point(1).value() == Rational(3, 4));
    CHECK_THROWS(rot.exact_point(11));

    const auto list_proc = PointProcess::deterministic_list({Rational(1, 3), Rational(7, 5)});
    auto list = list_proc.start(s);
    CHECK(list.exact_point(2).value() == Rational(2, 5));
    CHECK(list.cell(1, 3) == 1);
    CHECK(sample_point(PointProcess::iid_cantor(), 5, s.derive("trial", 0)).value() == cantor.exact_point(5).value());
}

TEST_CASE("fractional parts are exact: {2^(n+1) X} = {2 {2^n X}}") {
    auto proc = PointProcess::fractional_parts(IntegerSequence::geometric(2), 80);
    for (std::uint64_t t = 0; t < 5; ++t) {
        auto trial = proc.start(RandomStream(3).derive("trial", t));
        for (std::size_t n = 1; n < 80; ++n) {
            Rational y = trial.exact_point(n).value();
            REQUIRE(trial.exact_point(n + 1).value() == (y * Rational(2)).frac());
            REQUIRE(trial.cell(n, 10) == (y * Rational(10)).floor().get_ui());
        }
    }
    // {2^(n^2) X}: consecutive points differ by the integer factor 2^(2n+1)
    const auto sq_proc = PointProcess::fractional_parts(IntegerSequence::two_pow_n_squared(), 12);
    auto sq = sq_proc.start(RandomStream(5));
    for (std::size_t n = 1; n < 12; ++n) {
        Rational y = sq.exact_point(n).value();
        REQUIRE(sq.exact_point(n + 1).value() == (y * Rational(pow_big(2, 2 * n + 1))).frac());
    }
}

TEST_CASE("grid_denominator") {
    CHECK(grid_denominator(RadiiFamily::power(1), 3, GridMode::ceiling) == 3);
    CHECK(grid_denominator(RadiiFamily::power(1.5), 2, GridMode::floor) == 2);
    CHECK(grid_denominator(RadiiFamily::power(1.5), 2, GridMode::ceiling) == 3);
    CHECK(grid_denominator(RadiiFamily::power(0.5), 9, GridMode::floor) == 3);
    CHECK(grid_denominator(RadiiFamily::parse("list:1 0.4"), 2, GridMode::floor) == 2);
    CHECK(parse_grid_mode("floor") == GridMode::floor);
}

TEST_CASE("hit_cells") {
    CHECK(hit_cells(Target::cantor(), 3).count == 3);
    CHECK(hit_cells(Target::cantor(), 1).count == 1);
    CHECK(hit_cells(Target::circle(), 17).count == 17);
    auto arc = Target::union_of(IntervalUnion::from_intervals({{Rational(1, 10), Rational(3, 10)}}));
    auto h = hit_cells(arc, 10);
    CHECK(h.count == 2);
    CHECK(h.count >= h.bound_low - 1e-12);
    CHECK(h.count <= h.bound_high);
    for (int m = 0; m <= 6; ++m) {
        auto q = static_cast<std::uint64_t>(std::pow(3, m));
        auto c = hit_cells(Target::cantor(), q).count;
        CHECK(c >= (1ULL << m));
        CHECK(c <= (2ULL << m));
        CHECK(c == brute_hit_cells_K(q));
    }
}

TEST_CASE("property: hit_cells on K agrees with the brute-force oracle") {
    StreamEngine eng(RandomStream(47));
    for (int i = 0; i < 60; ++i) {
        std::uint64_t q = 1 + eng() % 3000;
        CAPTURE(q);
        REQUIRE(hit_cells(Target::cantor(), q).count == brute_hit_cells_K(q));
    }
}

TEST_CASE("property: hit_cells on K stays in its envelopes for n <= 10^4") {
    // Measured count * g(r_n) over ceiling grids of r_n = 1/n: [1.0, 2.317].
    auto r = RadiiFamily::power(1);
    double lo = 1e9, hi = 0;
    for (std::size_t n = 1; n <= 10000; ++n) {
        auto h = hit_cells(Target::cantor(), r, n, GridMode::ceiling);
        REQUIRE(static_cast<double>(h.count) >= h.bound_low);
        REQUIRE(static_cast<double>(h.count) <= h.bound_high);
        double ratio = static_cast<double>(h.count) * std::pow(1.0 / static_cast<double>(n), kappa);
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
    }
    CHECK(lo >= 1.0 - 1e-12);
    CHECK(hi <= 2.32);
}

TEST_CASE("theta_upper_bound") {
    auto a = IntegerSequence::two_pow_n_squared();
    CHECK(theta_upper_bound(a, RadiiFamily::power(1), 0) == 3.0);
    // 4 sum n 2^(-2n-1) = 8/9
    CHECK(std::abs(theta_upper_bound(a, RadiiFamily::power(1), 200) - 3 * std::exp(8.0 / 9)) < 1e-9);
    CHECK(3 * std::exp(8.0 / 9) == doctest::Approx(7.2972763628616235).epsilon(1e-15));
    auto ones = RadiiFamily::explicit_list(std::vector<double>(5, 1.0));
    CHECK(theta_upper_bound(IntegerSequence::geometric(2), ones, 5) == doctest::Approx(3 * std::exp(10.0)).epsilon(1e-12));
    auto many = RadiiFamily::explicit_list(std::vector<double>(400, 1.0));
    CHECK(std::isinf(theta_upper_bound(IntegerSequence::geometric(2), many, 400)));
}

TEST_CASE("empirical_theta") {
    RandomStream s(11);
    // i.i.d. points: every path has ratio 1; over repeated runs the 99%
    // intervals cover 1 at least 95% of the time
    int covered = 0, total = 0;
    for (std::uint64_t run = 0; run < 50; ++run) {
        auto all = empirical_theta_all(PointProcess::iid_circle(), RadiiFamily::power(1), 3, 4000, s.derive("run", run));
        REQUIRE(all.size() == 6);
        for (const auto& e : all) {
            covered += e.ci_low <= 1.0 && e.ci_high >= 1.0;
            ++total;
        }
    }
    CHECK(covered >= 0.95 * total);
    // one coordinate: uniform marginals for every kind
    auto fp = PointProcess::fractional_parts(IntegerSequence::two_pow_n_squared(), 4);
    for (const auto& e : empirical_theta_all(fp, RadiiFamily::power(0.5), 1, 20000, s)) {
        CHECK(e.ratio == doctest::Approx(1.0).epsilon(0.1));
    }
    auto three = empirical_theta_all(fp, RadiiFamily::power(1), 3, 100000, s, 2);
    double bound = theta_upper_bound(IntegerSequence::two_pow_n_squared(), RadiiFamily::power(1), 3);
    for (const auto& e : three) CHECK(e.ci_low <= bound);
    auto single = empirical_theta(fp, RadiiFamily::power(1), {0, 1, 2}, 100000, s, 2);
    auto match = std::find_if(three.begin(), three.end(), [](const ThetaEstimate& e) {
        return e.path == std::vector<std::uint64_t>{0, 1, 2};
    });
    REQUIRE(match != three.end());
    CHECK(single.hits == match->hits);
    CHECK_THROWS(empirical_theta_all(fp, RadiiFamily::power(1), 7, 100, s));
}

TEST_CASE("scale windows") {
    // n^-1.5 in [3^-(L+1), 3^-L)  <=>  3^(2L/3) < n <= 3^(2(L+1)/3)
    auto w = scale_window(RadiiFamily::power(1), 1.5, 2);
    CHECK(w.lo == 5);
    CHECK(w.hi == 9);
    auto empty = scale_window(RadiiFamily::explicit_list({0.9}), 1, 3);
    CHECK(empty.size() == 0);
    // r_1 = 1 lies above every window; the level-0 window is [1/3, 1)
    auto top = scale_window(RadiiFamily::power(1), 1, 0);
    CHECK(top.lo == 2);
    CHECK(top.hi == 3);
}

TEST_CASE("single_scale_census and its expectation") {
    RandomStream s(13);
    // Radius exactly 1/3 sits in the level-0 window; just below it, level 1.
    const double third = 0.3333333333;
    auto one = RadiiFamily::explicit_list({third});
    CHECK(scale_window(RadiiFamily::explicit_list({1.0 / 3}), 1, 0).size() == 1);
    auto pts = PointProcess::deterministic_list({Rational(1, 2)});
    auto c = single_scale_census(pts, one, 1, Target::cantor(), 1, s);
    CHECK(c.window.size() == 1);
    CHECK(c.count == 2);
    // the arc misses K only within 1/3 - third of a point of K: mass below (3.4e-11)^kappa
    CHECK(exact_expected_census(PointProcess::iid_cantor(), one, 1, Target::cantor(), 1) ==
          doctest::Approx(2.0).epsilon(1e-6));
    CHECK(exact_expected_census(PointProcess::iid_circle(), one, 1, Target::cantor(), 1) ==
          doctest::Approx(2.0).epsilon(1e-9));
    auto none = single_scale_census(pts, one, 1, Target::cantor(), 3, s);
    CHECK(none.count == 0);
    CHECK(exact_expected_census(PointProcess::iid_circle(), one, 1, Target::cantor(), 3) == 0.0);
    CHECK_THROWS(exact_expected_census(pts, one, 1, Target::cantor(), 1));

    // m arcs of radius rho0 on the whole circle
    const int L = 4;
    const double rho0 = 1e-4;
    std::vector<double> radii(30, rho0);
    radii.insert(radii.begin(), 0.5);
    auto fam = RadiiFamily::explicit_list(radii);
    auto w = scale_window(fam, 1, 8);
    CHECK(w.size() == 30);
    double cell = std::pow(3.0, -8);
    double expect = std::pow(3.0, 8) * (1 - std::pow(1 - (2 * rho0 + cell), 30));
    CHECK(exact_expected_census(PointProcess::iid_circle(), fam, 1, Target::circle(), 8) ==
          doctest::Approx(expect).epsilon(1e-12));
    (void)L;
}

TEST_CASE("property: Monte Carlo censuses match the exact expectation") {
    auto r = RadiiFamily::power(1);
    for (auto proc : {PointProcess::iid_circle(), PointProcess::iid_cantor()}) {
        const int L = 5;
        const int T = 400;
        double sum = 0, sum2 = 0;
        std::uint64_t cells = 1ULL << L;
        for (int t = 0; t < T; ++t) {
            auto c = single_scale_census(proc, r, 1.5, Target::cantor(), L, RandomStream(17).derive("trial", t));
            REQUIRE(c.count <= cells);
            sum += static_cast<double>(c.count);
            sum2 += static_cast<double>(c.count) * static_cast<double>(c.count);
        }
        double mean = sum / T, var = (sum2 - T * mean * mean) / (T - 1);
        double exact = exact_expected_census(proc, r, 1.5, Target::cantor(), L);
        CAPTURE(proc.describe());
        CHECK(std::abs(mean - exact) <= 3 * std::sqrt(var / T));
    }
}

TEST_CASE("nested_hit_depth") {
    RandomStream s(19);
    // empty windows from the start
    CHECK(nested_hit_depth(PointProcess::deterministic_list({Rational(0)}), RadiiFamily::explicit_list({0.9}), 1,
                           Target::cantor(), 1, 4, s) == 0);
    // one arc around 0 at every scale keeps the chain of cells at 0 alive
    std::vector<double> radii;
    std::vector<Rational> zeros;
    for (int L = 1; L <= 6; ++L) {
        radii.push_back(0.5 * std::pow(3.0, -L));
        zeros.emplace_back(0);
    }
    auto fam = RadiiFamily::explicit_list(radii);
    auto at_zero = PointProcess::deterministic_list(zeros);
    CHECK(nested_hit_depth(at_zero, fam, 1, Target::cantor(), 1, 6, s) == 6);
    // the same arcs centred in the middle gap never meet K at level 1
    std::vector<Rational> mids(6, Rational(1, 2));
    CHECK(nested_hit_depth(PointProcess::deterministic_list(mids), fam, 1, Target::cantor(), 1, 6, s) == 0);
    CHECK_THROWS(nested_hit_depth(at_zero, fam, 1, Target::cantor(), 3, 2, s));
}

TEST_CASE("coverage_fraction") {
    RandomStream s(23);
    auto r = RadiiFamily::power(1);
    CHECK(coverage_fraction(PointProcess::iid_circle(), r, 1, Target::cantor(), 4, 0, s) == 0.0);
    CHECK(coverage_fraction(PointProcess::iid_circle(), RadiiFamily::explicit_list({0.5}), 1, Target::cantor(), 4, 1,
                            s) == 1.0);
}

TEST_CASE("property: coverage is nonincreasing in nu on a shared stream") {
    auto r = RadiiFamily::power(1);
    for (std::uint64_t t = 0; t < 10; ++t) {
        RandomStream s = RandomStream(29).derive("trial", t);
        double prev = 2;
        for (double nu : {0.8, 1.0, 1.2, 1.5, 2.0}) {
            double f = coverage_fraction(PointProcess::iid_cantor(), r, nu, Target::cantor(), 6, 3000, s);
            REQUIRE(f <= prev);
            prev = f;
        }
    }
}

TEST_CASE("dimension_fit") {
    std::vector<ScaleCensus> exact;
    for (int L = 3; L <= 9; ++L) {
        ScaleCensus c;
        c.L = L;
        c.count = static_cast<std::uint64_t>(std::llround(std::pow(3.0, 0.5 * L) * (L % 2 ? 1 : 1)));
        exact.push_back(c);
    }
    // 3^(L/2) rounds for odd L; use even levels for an exact slope
    std::vector<ScaleCensus> even;
    for (int L = 2; L <= 12; L += 2) {
        ScaleCensus c;
        c.L = L;
        c.count = static_cast<std::uint64_t>(std::llround(std::pow(3.0, L / 2)));
        even.push_back(c);
    }
    auto f = dimension_fit(even);
    CHECK(f.slope == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(f.stderr_slope < 1e-9);
    CHECK(f.used == 6);

    StreamEngine eng(RandomStream(31));
    std::vector<ScaleCensus> noisy;
    for (int L = 4; L <= 14; ++L) {
        ScaleCensus c;
        c.L = L;
        c.count = static_cast<std::uint64_t>(std::pow(3.0, 0.7 * L) * (1 + 0.1 * (eng.uniform() - 0.5)));
        noisy.push_back(c);
    }
    auto g = dimension_fit(noisy);
    CHECK(std::abs(g.slope - 0.7) <= 3 * g.stderr_slope + 1e-3);

    for (auto& c : exact) c.count = 0;
    CHECK_THROWS(dimension_fit(exact));
    exact[0].count = 5;
    exact[1].count = 9;
    exact[2].count = 0;
    CHECK_THROWS(dimension_fit(exact));
}

TEST_CASE("mixed model") {
    CHECK(mixed_model_target(PairFamily::triadic, 2) == doctest::Approx(kappa).epsilon(1e-15));
    CHECK(mixed_model_target(PairFamily::triadic, 4) == doctest::Approx(kappa / 4).epsilon(1e-15));
    CHECK(mixed_model_target(PairFamily::triadic, 4) == doctest::Approx(0.1577).epsilon(1e-3));
    CHECK(mixed_model_target(PairFamily::none, 2) == doctest::Approx(kappa));
    CHECK(mixed_model_target(PairFamily::none, 3) == doctest::Approx(2.0 / 3 + kappa - 1));
    // branches meet at mu* = (2 - kappa)/(1 - kappa)
    double mu_star = (2 - kappa) / (1 - kappa);
    CHECK(2 / mu_star + kappa - 1 == doctest::Approx(kappa / mu_star).epsilon(1e-12));

    auto res = mixed_model_experiment(PairFamily::triadic, {2.0}, 2, 5, 3, RandomStream(37), 2);
    CHECK(res.rows.size() == 4 * 3);
    REQUIRE(res.fits.size() == 1);
    CHECK(res.fits[0].target == doctest::Approx(kappa));
    auto again = mixed_model_experiment(PairFamily::triadic, {2.0}, 2, 5, 3, RandomStream(37), 1);
    for (std::size_t i = 0; i < res.rows.size(); ++i) CHECK(res.rows[i].count == again.rows[i].count);
}
