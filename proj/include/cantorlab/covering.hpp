#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cantorlab/bigfixed.hpp"
#include "cantorlab/cantor.hpp"
#include "cantorlab/circle.hpp"
#include "cantorlab/gauges.hpp"
#include "cantorlab/random_stream.hpp"
#include "cantorlab/rational.hpp"

namespace cantorlab {

/// Integer sequences a_n used by the fractional-parts process.
class IntegerSequence {
public:
    enum class Kind { two_pow_n_squared, geometric };

    static IntegerSequence two_pow_n_squared();
    static IntegerSequence geometric(std::uint64_t base);
    /// "2^n^2" or "geometric:<b>".
    static IntegerSequence parse(const std::string& text);

    Kind kind() const { return kind_; }
    BigInt value(std::size_t n) const;
    double log_value(std::size_t n) const;
    std::string describe() const;

private:
    Kind kind_ = Kind::two_pow_n_squared;
    std::uint64_t base_ = 2;
};

/// Reduced fractions p/q in [0, 1) ordered by q, then p; index n starts at 1.
class PairEnumeration {
public:
    explicit PairEnumeration(std::size_t count);

    std::size_t size() const { return p_.size(); }
    std::uint64_t p(std::size_t n) const { return p_.at(n - 1); }
    std::uint64_t q(std::size_t n) const { return q_.at(n - 1); }

private:
    std::vector<std::uint64_t> p_;
    std::vector<std::uint64_t> q_;
};

/// Which pairs of the enumeration count as lying on K in the mixed model.
enum class PairFamily {
    none,
    /// q = 3^j and every ternary digit of p is 0 or 2.
    triadic,
    /// p/q in K.
    membership,
};

std::string to_string(PairFamily f);
PairFamily parse_pair_family(const std::string& text);
bool in_pair_family(PairFamily f, std::uint64_t p, std::uint64_t q);

enum class ProcessKind { iid_circle, iid_cantor, fractional_parts, rotated_rationals, deterministic_list, mixed };

std::string to_string(ProcessKind k);

class PointProcess;

/// A process bound to one trial's stream. Point n depends only on (stream, n),
/// plus the per-trial X or alpha for the kinds that carry one.
class ProcessTrial {
public:
    double point(std::size_t n) const;
    CirclePoint exact_point(std::size_t n) const;
    /// Index k with the point in [k/q, (k+1)/q).
    std::uint64_t cell(std::size_t n, std::uint64_t q) const;

private:
    friend class PointProcess;
    ProcessTrial(const PointProcess& proc, RandomStream stream);

    const PointProcess* proc_;
    RandomStream stream_;
    std::optional<BigFixed> x_;
    Rational alpha_;
};

class PointProcess {
public:
    static PointProcess iid_circle();
    static PointProcess iid_cantor();
    /// {a_n X} for n <= max_n with one uniform X per trial.
    static PointProcess fractional_parts(IntegerSequence a, std::size_t max_n);
    /// p_n/q_n - alpha over the coprime-pair enumeration; alpha drawn per
    /// trial when not given.
    static PointProcess rotated_rationals(std::optional<Rational> alpha, std::size_t max_n);
    static PointProcess deterministic_list(std::vector<Rational> points);
    /// Pairs of the family get uniform points on K, the rest uniform points
    /// on the circle.
    static PointProcess mixed(PairFamily family, std::size_t max_n);

    ProcessKind kind() const { return kind_; }
    bool is_iid() const { return kind_ == ProcessKind::iid_circle || kind_ == ProcessKind::iid_cantor; }
    std::optional<std::size_t> max_index() const;
    const std::shared_ptr<const PairEnumeration>& pairs() const { return pairs_; }
    PairFamily family() const { return family_; }
    std::string describe() const;

    /// The trial refers back to this process, which must outlive it.
    ProcessTrial start(const RandomStream& trial_stream) const&;
    ProcessTrial start(const RandomStream& trial_stream) && = delete;

private:
    friend class ProcessTrial;

    ProcessKind kind_ = ProcessKind::iid_circle;
    IntegerSequence seq_;
    std::size_t max_n_ = 0;
    unsigned precision_ = 0;
    std::optional<Rational> alpha_;
    std::vector<Rational> list_;
    std::shared_ptr<const PairEnumeration> pairs_;
    PairFamily family_ = PairFamily::none;
};

/// Uniform point of K from the 34 ternary digits encoded by one word.
Rational cantor_point_from_word(std::uint64_t w);

CirclePoint sample_point(const PointProcess& proc, std::size_t n, const RandomStream& trial_stream);

/// The set G whose grid or triadic cells are counted.
struct Target {
    enum class Kind { cantor, circle, arcs };

    Kind kind = Kind::cantor;
    IntervalUnion arcs;

    static Target cantor() { return {}; }
    static Target circle() { return {Kind::circle, {}}; }
    static Target union_of(IntervalUnion u) { return {Kind::arcs, std::move(u)}; }
    static Target parse(const std::string& text);
    std::string describe() const;
};

enum class GridMode { floor, ceiling };

GridMode parse_grid_mode(const std::string& text);

/// q_n = floor(1/r_n) or ceil(1/r_n), at least 1.
std::uint64_t grid_denominator(const RadiiFamily& r, std::size_t n, GridMode mode);

struct HitCells {
    std::uint64_t q = 0;
    std::uint64_t count = 0;
    /// For K: q^kappa / 4 and 4 q^kappa. For arcs: q |G| and q |G| + 2 #components.
    double bound_low = 0;
    double bound_high = 0;
};

/// Exact number of k with G meeting [k/q, (k+1)/q).
HitCells hit_cells(const Target& g, std::uint64_t q);
HitCells hit_cells(const Target& g, const RadiiFamily& r, std::size_t n, GridMode mode);

/// 3 exp(4 sum_{n <= N} a_n / (r_n a_(n+1))); +inf on overflow.
double theta_upper_bound(const IntegerSequence& a, const RadiiFamily& r, std::size_t N);

struct ThetaEstimate {
    std::vector<std::uint64_t> path;
    std::uint64_t hits = 0;
    std::uint64_t trials = 0;
    double ratio = 0;
    double ci_low = 0;
    double ci_high = 0;
};

/// Joint probability of X_n in I_(n, k_n) for n <= v, divided by prod 1/q_n,
/// on ceiling grids, with a normal 99% interval.
ThetaEstimate empirical_theta(const PointProcess& proc, const RadiiFamily& r, const std::vector<std::uint64_t>& k_path,
                              std::uint64_t trials, const RandomStream& stream, unsigned threads = 1);
/// The same estimate for every path k_1..k_v at once.
std::vector<ThetaEstimate> empirical_theta_all(const PointProcess& proc, const RadiiFamily& r, std::size_t v,
                                               std::uint64_t trials, const RandomStream& stream, unsigned threads = 1);

/// Indices n with r_n^nu in [3^-(L+1), 3^-L); empty when lo > hi.
struct Window {
    std::uint64_t lo = 1;
    std::uint64_t hi = 0;

    std::uint64_t size() const { return hi >= lo ? hi - lo + 1 : 0; }
};

Window scale_window(const RadiiFamily& r, double nu, int L);

struct ScaleCensus {
    int L = 0;
    Window window;
    std::uint64_t count = 0;
    std::optional<double> exact_expectation;
};

/// Level-L cells of G (construction cells for K, all triadic cells for the
/// circle) meeting some arc B(X_n, r_n^nu) with n in the level-L window.
ScaleCensus single_scale_census(const PointProcess& proc, const RadiiFamily& r, double nu, const Target& g, int L,
                                const RandomStream& trial_stream);

/// Expected single_scale_census for the i.i.d. kinds.
double exact_expected_census(const PointProcess& proc, const RadiiFamily& r, double nu, const Target& g, int L);

/// Deepest L <= L1 reached by a chain of hit cells through every level from L0,
/// each hit by its own window; L0 - 1 when level L0 has no hit.
int nested_hit_depth(const PointProcess& proc, const RadiiFamily& r, double nu, const Target& g, int L0, int L1,
                     const RandomStream& trial_stream);

/// Fraction of level-L cells of G meeting the union of B(X_n, r_n^nu), n <= N.
double coverage_fraction(const PointProcess& proc, const RadiiFamily& r, double nu, const Target& g, int L,
                         std::uint64_t N, const RandomStream& trial_stream);

struct DimensionFit {
    double slope = 0;
    double stderr_slope = 0;
    double intercept = 0;
    std::size_t used = 0;
    std::size_t dropped = 0;
};

/// Least squares of log_3(count) against L; zero counts are dropped.
DimensionFit dimension_fit(const std::vector<ScaleCensus>& censuses);

/// max{2/mu + kappa - 1, kappa/mu}; without K pairs only the first branch.
double mixed_model_target(PairFamily family, double mu);

struct MixedRow {
    double mu = 0;
    int L = 0;
    std::uint64_t trial = 0;
    std::uint64_t window_size = 0;
    std::uint64_t count = 0;
};

struct MixedFit {
    double mu = 0;
    /// Absent when fewer than 3 levels have a nonzero summed count.
    std::optional<DimensionFit> fit;
    double target = 0;
};

struct MixedResult {
    std::vector<MixedRow> rows;
    std::vector<MixedFit> fits;
};

MixedResult mixed_model_experiment(PairFamily family, const std::vector<double>& mus, int L0, int L1,
                                   std::uint64_t trials, const RandomStream& stream, unsigned threads = 1);

}  // namespace cantorlab
