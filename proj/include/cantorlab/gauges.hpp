#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cantorlab/rational.hpp"

namespace cantorlab {

/// g(r) = c r^s prod_k (log_k(1/r))^e_k near zero, where log_1 = log and
/// log_k = log o log_(k-1). Past r0 the value is frozen at g(r0), which keeps
/// g nondecreasing and the logarithms at least 1.
class GaugeFn {
public:
    GaugeFn(double c, double s, std::vector<double> log_exponents = {});

    static GaugeFn power(double s, double c = 1.0);
    static GaugeFn log_power(double s, double t, double c = 1.0);
    static GaugeFn iterated_log(double s, int order, double eps, double c = 1.0);
    /// Parses factors such as "2 * r^0.5 * log^-1 * loglog^2"; "r^kappa" is allowed.
    static GaugeFn parse(const std::string& text);

    double coefficient() const { return c_; }
    double power_exponent() const { return s_; }
    const std::vector<double>& log_exponents() const { return logs_; }
    bool is_pure_power() const { return logs_.empty(); }
    double r0() const { return std::exp(-u0_); }

    double operator()(double r) const;
    /// log g(r) given log r, usable far below the double range of r.
    double log_at(double log_r) const;

    GaugeFn operator*(const GaugeFn& o) const;
    std::string describe() const;

    friend bool operator==(const GaugeFn&, const GaugeFn&) = default;

private:
    double c_ = 1;
    double s_ = 0;
    std::vector<double> logs_;
    // r0 = exp(-u0_)
    double u0_ = 0;
};

/// Value at a rational radius 0 < r <= 1.
double gauge_eval(const GaugeFn& g, const Rational& r);

/// max over j = 1..J of g(2^(1-j)) / g(2^-j).
double doubling_scan(const GaugeFn& g, int J);

enum class Verdict { converges, diverges, unknown };
std::string to_string(Verdict v);

/// Radius sequences r_n, nonincreasing, indexed from n = 1.
class RadiiFamily {
public:
    enum class Kind { power, coprime_pairs, cantor_pairs, base_b, base_b_cantor, explicit_list };

    static RadiiFamily power(double nu);
    /// 1/q over every reduced p/q, q = 1, 2, ...
    static RadiiFamily coprime_pairs();
    /// 1/q over reduced p/q lying in K.
    static RadiiFamily cantor_pairs();
    /// 1/b^j over reduced k/b^j, j >= 1.
    static RadiiFamily base_b(std::uint64_t b);
    /// As base_b, keeping only k/b^j in K.
    static RadiiFamily base_b_cantor(std::uint64_t b);
    static RadiiFamily explicit_list(std::vector<double> radii);
    /// "power:<nu>", "pairs", "cantor_pairs", "base_b:<b>", "base_b_cantor:<b>", "list:<r1> <r2> ...".
    static RadiiFamily parse(const std::string& text);

    Kind kind() const { return kind_; }
    double nu() const { return nu_; }
    std::uint64_t base() const { return base_; }
    std::string describe() const;

    /// Number of radii for explicit lists; unbounded otherwise.
    std::optional<std::size_t> length() const;

    /// r_1, ..., r_N.
    std::vector<double> first(std::size_t n) const;

private:
    Kind kind_ = Kind::power;
    double nu_ = 1;
    std::uint64_t base_ = 2;
    std::vector<double> list_;
};

/// rho with sum r_n^nu divergent below and convergent above.
double critical_exponent(const RadiiFamily& r);

enum class SeriesKind { r_over_g, hr_over_g };

struct SeriesResult {
    double partial = 0;
    Verdict verdict = Verdict::unknown;
};

/// Partial sum through N of r_n / g(r_n), or h(r_n) r_n / g(r_n).
SeriesResult series_partial(SeriesKind kind, const GaugeFn& g, const std::optional<GaugeFn>& h,
                            const RadiiFamily& r, std::size_t N);

/// sum_{j=1}^J g(2^-j) (1/h(2^-j) - 1/h(2^-(j-1))).
SeriesResult precprec_partial(const GaugeFn& g, const GaugeFn& h, int J);

/// sum_{j=1}^J (g/h)(2^-j) (1/phi(2^-j) - 1/phi(2^-(j-1))). Throws unless g/h
/// decreases on the dyadic grid.
SeriesResult precphi_partial(const GaugeFn& g, const GaugeFn& h, const GaugeFn& phi, int J);

}  // namespace cantorlab
