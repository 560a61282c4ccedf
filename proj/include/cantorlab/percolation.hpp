#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cantorlab/cantor.hpp"
#include "cantorlab/gauges.hpp"
#include "cantorlab/random_stream.hpp"
#include "cantorlab/rational.hpp"

namespace cantorlab {

/// Deepest level a tree may have; node indices must fit the heap counter 2^j + i.
inline constexpr int max_tree_depth = 62;
/// Supercritical trees beyond this depth are refused.
inline constexpr int supercritical_depth_cap = 22;

/// g(2^-j) / g(2^-(j-1)) for j >= 1. Throws if the ratio exceeds 1.
double retention(const GaugeFn& g, int j);

/// Survivors of g-percolation on the binary tree down to a fixed depth.
/// Level j node i stands for the dyadic interval [i 2^-j, (i+1) 2^-j).
struct PercTree {
    GaugeFn gauge;
    int depth = 0;
    /// survivors[j] is sorted; survivors[0] = {0}.
    std::vector<std::vector<std::uint64_t>> survivors;

    std::size_t count(int level) const { return survivors.at(level).size(); }
    bool survives(int level, std::uint64_t index) const;
};

/// Keeps each child edge of level j with probability retention(g, j). The
/// draw for node i at level j is word(2^j + i) of the stream.
PercTree sample_tree(const GaugeFn& g, int depth, const RandomStream& stream);

/// Every node retained, tagged with g.
PercTree full_tree(const GaugeFn& g, int depth);

/// Level-wise intersection, tagged with the product gauge.
PercTree intersect(const PercTree& a, const PercTree& b);

/// True when every survivor's parent survives and every list is sorted and in range.
bool is_downward_closed(const PercTree& t);

/// chi on dyadic cells: psi(j, i) = chi([i 2^-j, (i+1) 2^-j)).
class MassAssignment {
public:
    enum class Kind { lebesgue, cantor, table };

    static MassAssignment lebesgue();
    static MassAssignment cantor();
    /// Masses of the 2^m level-m cells; deeper cells split their parent's mass evenly.
    static MassAssignment table(int m, std::vector<Rational> masses);
    static MassAssignment parse(const std::string& text);

    Kind kind() const { return kind_; }
    std::string describe() const;

    Rational psi(int level, std::uint64_t index) const;
    double psi_double(int level, std::uint64_t index) const;
    Rational total() const { return psi(0, 0); }

private:
    Kind kind_ = Kind::lebesgue;
    int m_ = 0;
    std::vector<Rational> table_;
};

struct MartingaleTrajectory {
    GaugeFn h;
    /// Z_0..Z_J.
    std::vector<double> z;
};

/// Z_j = h(2^-j)^-1 sum over level-j survivors of psi. Throws unless the tree was sampled with h.
MartingaleTrajectory z_trajectory(const PercTree& tree, const GaugeFn& h, const MassAssignment& chi);

/// E[Z_j^2] for the h-percolation with masses chi.
double exact_second_moment(const GaugeFn& h, const MassAssignment& chi, int j);

struct HitResult {
    std::uint64_t hits = 0;
    std::uint64_t trials = 0;
    double frequency = 0;
    /// (4 / g(1)) sum of g(length) over the components of E.
    double covering_bound = 0;
};

/// Whether some depth-level survivor cell meets E.
bool tree_meets(const PercTree& t, const IntervalUnion& e);

/// Trial t uses stream.derive("trial", t).
HitResult hit_experiment(const IntervalUnion& e, const GaugeFn& g, int depth, std::uint64_t trials,
                         const RandomStream& stream, unsigned threads = 1);

}  // namespace cantorlab
