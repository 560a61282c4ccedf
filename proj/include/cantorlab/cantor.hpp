#pragma once

#include <cstdint>
#include <vector>

#include "cantorlab/circle.hpp"
#include "cantorlab/rational.hpp"

namespace cantorlab {

/// Hausdorff dimension of the middle-third Cantor set, log 2 / log 3.
inline constexpr double kappa = 0.63092975357145743710;

/// Greedy base-3 expansion 0.(preperiod)(period)(period)... of a point in [0, 1).
struct TernaryExpansion {
    std::vector<int> preperiod;
    std::vector<int> period;

    friend bool operator==(const TernaryExpansion&, const TernaryExpansion&) = default;
};

/// Level-j triadic cell [index 3^-j, (index+1) 3^-j). Levels up to 40 fit the index.
struct TriadicInterval {
    int level = 0;
    std::uint64_t index = 0;

    Rational left() const;
    Rational right() const;

    friend bool operator==(const TriadicInterval&, const TriadicInterval&) = default;
};

/// Half-open arc [lo, hi) with 0 <= lo < hi <= 1.
struct Arc {
    Rational lo;
    Rational hi;

    friend bool operator==(const Arc&, const Arc&) = default;
};

/// Finite union of disjoint half-open arcs of the circle, sorted by left
/// endpoint. Touching arcs are merged, so the representation is canonical.
class IntervalUnion {
public:
    IntervalUnion() = default;

    /// Builds the union of arbitrary [lo, hi) intervals of the real line
    /// projected to the circle. Intervals of length >= 1 cover everything.
    static IntervalUnion from_intervals(std::vector<Arc> raw);
    static IntervalUnion whole_circle();

    const std::vector<Arc>& components() const { return components_; }
    bool empty() const { return components_.empty(); }
    Rational length() const;
    bool contains(const CirclePoint& x) const;

private:
    std::vector<Arc> components_;
};

TernaryExpansion ternary_expansion(const CirclePoint& x);

/// Membership in K, accounting for the second expansion of triadic rationals.
bool in_cantor(const TernaryExpansion& e);
bool in_cantor(const CirclePoint& x);

/// Exact circle distance d(x, K). Zero exactly on K, at most 1/6.
Rational distance_to_cantor(const CirclePoint& x);

/// Devil's staircase. Defined for x in [0, 1]; cantor_cdf(1) = 1.
Rational cantor_cdf(const Rational& x);
/// Double version for Monte Carlo expectations; x is clamped to [0, 1].
double cantor_cdf(double x);

/// Cantor measure of a union of arcs.
Rational cantor_measure(const IntervalUnion& u);
/// Cantor measure of the open arc (lo, hi) of the real line projected to the
/// circle, in floating point. Lengths >= 1 give 1.
double cantor_measure_arc(double lo, double hi);

/// The 2^j construction cells of K at level j, increasing.
std::vector<TriadicInterval> level_cover(int j);
/// Index of the k-th level-j construction cell (digits of k read as 0/2).
std::uint64_t cantor_cell_index(std::uint64_t k, int j);
/// True when every base-3 digit of the level-j cell index is 0 or 2.
bool is_cantor_cell(std::uint64_t index, int j);

/// Level-j construction cells fattened by delta on both sides and merged.
IntervalUnion neighborhood_cover(int j, const Rational& delta);

struct AhlforsSample {
    Rational measure;
    double ratio;
};

/// Cantor measure of the open arc B(x, r) and its ratio to r^kappa.
AhlforsSample ahlfors_ratio(const CirclePoint& x, const Rational& r);

}  // namespace cantorlab
