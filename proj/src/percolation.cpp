#include "cantorlab/percolation.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <stdexcept>

#include "cantorlab/parallel.hpp"

namespace cantorlab {

namespace {

constexpr double ln2 = 0.69314718055994530942;
// Hard guard on one level's survivor list.
constexpr std::size_t max_level_nodes = std::size_t{1} << 24;
// Exact second moments enumerate every node of a level for Cantor masses.
constexpr int cantor_moment_depth = 24;

void check_depth(int depth) {
    if (depth < 0 || depth > max_tree_depth)
        throw std::invalid_argument("tree depth must lie in [0, " + std::to_string(max_tree_depth) + "]");
}

double log_h(const GaugeFn& h, int j) { return h.log_at(-j * ln2); }

Rational dyadic(std::uint64_t i, int j) {
    return Rational(BigInt(static_cast<unsigned long>(i)), BigInt(1) << static_cast<mp_bitcnt_t>(j));
}

}  // namespace

double retention(const GaugeFn& g, int j) {
    if (j < 1) throw std::invalid_argument("retention needs j >= 1");
    double p = std::exp(log_h(g, j) - log_h(g, j - 1));
    if (p > 1) throw std::domain_error("retention above 1 for " + g.describe() + "; not a gauge");
    return p;
}

bool PercTree::survives(int level, std::uint64_t index) const {
    const auto& s = survivors.at(level);
    return std::binary_search(s.begin(), s.end(), index);
}

PercTree sample_tree(const GaugeFn& g, int depth, const RandomStream& stream) {
    check_depth(depth);
    if (depth > supercritical_depth_cap) {
        double log2_expected = depth + (log_h(g, depth) - log_h(g, 0)) / ln2;
        if (log2_expected > supercritical_depth_cap)
            throw std::invalid_argument("expected survivors at depth " + std::to_string(depth) + " exceed 2^" +
                                        std::to_string(supercritical_depth_cap));
    }
    PercTree t{g, depth, {{0}}};
    t.survivors.reserve(depth + 1);
    for (int j = 1; j <= depth; ++j) {
        double p = retention(g, j);
        std::uint64_t base = std::uint64_t{1} << j;
        std::vector<std::uint64_t> next;
        for (std::uint64_t u : t.survivors.back()) {
            for (std::uint64_t c = 2 * u; c <= 2 * u + 1; ++c)
                if (to_unit_interval(stream.word(base + c)) < p) next.push_back(c);
        }
        if (next.size() > max_level_nodes) throw std::length_error("percolation level too large");
        t.survivors.push_back(std::move(next));
    }
    return t;
}

PercTree full_tree(const GaugeFn& g, int depth) {
    check_depth(depth);
    if (depth > 24) throw std::length_error("full tree too deep");
    PercTree t{g, depth, {}};
    for (int j = 0; j <= depth; ++j) {
        std::vector<std::uint64_t> level(std::size_t{1} << j);
        for (std::size_t i = 0; i < level.size(); ++i) level[i] = i;
        t.survivors.push_back(std::move(level));
    }
    return t;
}

PercTree intersect(const PercTree& a, const PercTree& b) {
    if (a.depth != b.depth) throw std::invalid_argument("intersect needs equal depths");
    PercTree t{a.gauge * b.gauge, a.depth, {}};
    for (int j = 0; j <= a.depth; ++j) {
        std::vector<std::uint64_t> both;
        std::set_intersection(a.survivors[j].begin(), a.survivors[j].end(), b.survivors[j].begin(),
                              b.survivors[j].end(), std::back_inserter(both));
        t.survivors.push_back(std::move(both));
    }
    return t;
}

bool is_downward_closed(const PercTree& t) {
    if (static_cast<int>(t.survivors.size()) != t.depth + 1) return false;
    if (t.survivors[0] != std::vector<std::uint64_t>{0}) return false;
    for (int j = 1; j <= t.depth; ++j) {
        const auto& s = t.survivors[j];
        if (!std::is_sorted(s.begin(), s.end())) return false;
        if (std::adjacent_find(s.begin(), s.end()) != s.end()) return false;
        for (std::uint64_t u : s) {
            if (u >= (std::uint64_t{1} << j)) return false;
            if (!t.survives(j - 1, u >> 1)) return false;
        }
    }
    return true;
}

MassAssignment MassAssignment::lebesgue() { return {}; }

MassAssignment MassAssignment::cantor() {
    MassAssignment m;
    m.kind_ = Kind::cantor;
    return m;
}

MassAssignment MassAssignment::table(int m, std::vector<Rational> masses) {
    if (m < 0 || m > 24) throw std::invalid_argument("table level must lie in [0, 24]");
    if (masses.size() != (std::size_t{1} << m)) throw std::invalid_argument("table needs 2^m masses");
    for (const auto& x : masses)
        if (x.sign() < 0) throw std::invalid_argument("negative mass");
    MassAssignment a;
    a.kind_ = Kind::table;
    a.m_ = m;
    a.table_ = std::move(masses);
    return a;
}

MassAssignment MassAssignment::parse(const std::string& text) {
    if (text == "lebesgue") return lebesgue();
    if (text == "cantor") return cantor();
    throw std::invalid_argument("unknown mass '" + text + "' (lebesgue|cantor)");
}

std::string MassAssignment::describe() const {
    switch (kind_) {
        case Kind::lebesgue: return "lebesgue";
        case Kind::cantor: return "cantor";
        case Kind::table: return "table:" + std::to_string(m_);
    }
    return "?";
}

Rational MassAssignment::psi(int level, std::uint64_t index) const {
    switch (kind_) {
        case Kind::lebesgue: return dyadic(1, level);
        case Kind::cantor: return cantor_cdf(dyadic(index + 1, level)) - cantor_cdf(dyadic(index, level));
        case Kind::table: {
            if (level >= m_) return table_[index >> (level - m_)] * dyadic(1, level - m_);
            Rational acc(0);
            std::uint64_t width = std::uint64_t{1} << (m_ - level);
            for (std::uint64_t k = index * width; k < (index + 1) * width; ++k) acc += table_[k];
            return acc;
        }
    }
    return Rational(0);
}

double MassAssignment::psi_double(int level, std::uint64_t index) const {
    if (kind_ == Kind::lebesgue) return std::ldexp(1.0, -level);
    // Dyadic inputs with at most 51 bits keep the ternary digit loop exact; only
    // the final difference rounds.
    if (kind_ == Kind::cantor && level <= 51) {
        double s = std::ldexp(1.0, -level);
        return cantor_cdf(static_cast<double>(index + 1) * s) - cantor_cdf(static_cast<double>(index) * s);
    }
    return psi(level, index).to_double();
}

MartingaleTrajectory z_trajectory(const PercTree& tree, const GaugeFn& h, const MassAssignment& chi) {
    if (!(tree.gauge == h))
        throw std::invalid_argument("tree sampled with " + tree.gauge.describe() + ", not " + h.describe());
    MartingaleTrajectory m{h, {}};
    m.z.reserve(tree.depth + 1);
    for (int j = 0; j <= tree.depth; ++j) {
        double sum = 0;
        for (std::uint64_t u : tree.survivors[j]) sum += chi.psi_double(j, u);
        m.z.push_back(sum * std::exp(-log_h(h, j)));
    }
    return m;
}

double exact_second_moment(const GaugeFn& h, const MassAssignment& chi, int j) {
    if (j < 0) throw std::invalid_argument("second moment needs j >= 0");
    double inv_h0 = std::exp(-log_h(h, 0));
    double root = chi.total().to_double();
    double acc = root * root * inv_h0 * inv_h0;
    for (int i = 1; i <= j; ++i) {
        double squares = 0;
        if (chi.kind() == MassAssignment::Kind::lebesgue) {
            squares = std::ldexp(1.0, -i);
        } else {
            if (i > cantor_moment_depth) throw std::invalid_argument("second moment too deep for this mass");
            for (std::uint64_t u = 0; u < (std::uint64_t{1} << i); ++u) {
                double p = chi.psi_double(i, u);
                squares += p * p;
            }
        }
        acc += inv_h0 * squares * (std::exp(-log_h(h, i)) - std::exp(-log_h(h, i - 1)));
    }
    return acc;
}

bool tree_meets(const PercTree& t, const IntervalUnion& e) {
    const auto& cells = t.survivors.back();
    if (cells.empty()) return false;
    BigInt scale = BigInt(1) << static_cast<mp_bitcnt_t>(t.depth);
    Rational sc(scale);
    for (const auto& arc : e.components()) {
        // Cells k with k 2^-d < hi and lo < (k+1) 2^-d.
        BigInt lo = (arc.lo * sc).floor();
        BigInt hi = (arc.hi * sc).ceil() - 1;
        std::uint64_t a = lo.get_ui(), b = hi.get_ui();
        auto it = std::lower_bound(cells.begin(), cells.end(), a);
        if (it != cells.end() && *it <= b) return true;
    }
    return false;
}

HitResult hit_experiment(const IntervalUnion& e, const GaugeFn& g, int depth, std::uint64_t trials,
                         const RandomStream& stream, unsigned threads) {
    HitResult r;
    r.trials = trials;
    double g1 = g(1.0);
    double cover = 0;
    for (const auto& arc : e.components()) cover += gauge_eval(g, arc.hi - arc.lo);
    r.covering_bound = 4 / g1 * cover;
    if (e.empty() || trials == 0) return r;
    auto hits = parallel_map(trials, threads, [&](std::size_t t) -> std::uint8_t {
        return tree_meets(sample_tree(g, depth, stream.derive("trial", t)), e) ? 1 : 0;
    });
    for (auto h : hits) r.hits += h;
    r.frequency = static_cast<double>(r.hits) / static_cast<double>(trials);
    return r;
}

}  // namespace cantorlab
