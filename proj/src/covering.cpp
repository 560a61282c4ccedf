#include "cantorlab/covering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "cantorlab/census.hpp"
#include "cantorlab/parallel.hpp"

namespace cantorlab {

namespace {

constexpr int max_cantor_level = 26;
constexpr int max_circle_level = 18;

std::uint64_t pow_u64(std::uint64_t b, int e) {
    std::uint64_t r = 1;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
}

// Number of level-L construction cell indices below A, for 0 <= A <= 3^L.
std::uint64_t cantor_rank(std::uint64_t a, int L) {
    const std::uint64_t top = pow_u64(3, L);
    if (a >= top) return std::uint64_t{1} << L;
    std::uint64_t rank = 0, p3 = top / 3;
    for (int i = L - 1; i >= 0; --i, p3 /= 3) {
        std::uint64_t d = a / p3;
        a -= d * p3;
        if (d == 0) continue;
        rank += std::uint64_t{1} << i;
        if (d == 1) return rank;
    }
    return rank;
}

// Cells of G at level L and the arcs meeting them.
class CellGrid {
public:
    CellGrid(const Target& g, int L) : cantor_(g.kind == Target::Kind::cantor), L_(L) {
        if (g.kind == Target::Kind::arcs) throw std::invalid_argument("scale censuses support the K and circle targets");
        if (L < 0 || L > (cantor_ ? max_cantor_level : max_circle_level))
            throw std::invalid_argument("census level out of range");
        triadic_ = pow_u64(3, L);
        cells_ = cantor_ ? (std::uint64_t{1} << L) : triadic_;
    }

    std::uint64_t cells() const { return cells_; }
    std::uint64_t parent(std::uint64_t k) const { return cantor_ ? k >> 1 : k / 3; }

    // Calls f(k) for every cell whose closed interval meets the open arc
    // (x - rho, x + rho). A cell may be reported twice near wrap-around.
    template <class F>
    void for_each_hit(double x, double rho, F&& f) const {
        if (rho >= 0.5) {
            for (std::uint64_t k = 0; k < cells_; ++k) f(k);
            return;
        }
        const auto n = static_cast<std::int64_t>(triadic_);
        const double scale = static_cast<double>(triadic_);
        auto lo = static_cast<std::int64_t>(std::floor((x - rho) * scale));
        auto hi = static_cast<std::int64_t>(std::ceil((x + rho) * scale)) - 1;
        if (lo < 0) {
            range(lo + n, n - 1, f);
            range(0, hi, f);
        } else if (hi >= n) {
            range(lo, n - 1, f);
            range(0, hi - n, f);
        } else {
            range(lo, hi, f);
        }
    }

    // Closed cell [a, b] of index k.
    std::pair<double, double> bounds(std::uint64_t k) const {
        std::uint64_t a = cantor_ ? cantor_cell_index(k, L_) : k;
        double w = 1.0 / static_cast<double>(triadic_);
        return {static_cast<double>(a) * w, static_cast<double>(a + 1) * w};
    }

private:
    template <class F>
    void range(std::int64_t lo, std::int64_t hi, F& f) const {
        lo = std::max<std::int64_t>(lo, 0);
        hi = std::min<std::int64_t>(hi, static_cast<std::int64_t>(triadic_) - 1);
        if (lo > hi) return;
        if (!cantor_) {
            for (auto k = lo; k <= hi; ++k) f(static_cast<std::uint64_t>(k));
            return;
        }
        std::uint64_t k0 = cantor_rank(static_cast<std::uint64_t>(lo), L_);
        std::uint64_t k1 = cantor_rank(static_cast<std::uint64_t>(hi) + 1, L_);
        for (auto k = k0; k < k1; ++k) f(k);
    }

    bool cantor_;
    int L_;
    std::uint64_t triadic_ = 1;
    std::uint64_t cells_ = 1;
};

// r_n^nu with a lazily materialised table for enumerated families. After
// ensure(n) the const accessors are safe to share between threads.
class ScaledRadii {
public:
    ScaledRadii(const RadiiFamily& r, double nu) : r_(r), nu_(nu) {
        if (!(nu > 0)) throw std::invalid_argument("nu must be positive");
    }

    std::optional<std::uint64_t> limit() const { return r_.length(); }

    void ensure(std::uint64_t n) {
        if (r_.kind() == RadiiFamily::Kind::power || n <= cache_.size()) return;
        std::uint64_t want = std::max<std::uint64_t>(n, 2 * cache_.size() + 64);
        if (auto lim = limit()) want = std::min<std::uint64_t>(want, *lim);
        if (want < n) throw std::invalid_argument("radius index beyond the explicit list");
        cache_ = r_.first(want);
    }

    double log_radius(std::uint64_t n) const {
        if (r_.kind() == RadiiFamily::Kind::power) return -r_.nu() * nu_ * std::log(static_cast<double>(n));
        if (n > cache_.size()) throw std::logic_error("radius table not materialised");
        return nu_ * std::log(cache_[n - 1]);
    }

    double radius(std::uint64_t n) const { return std::exp(log_radius(n)); }

private:
    RadiiFamily r_;
    double nu_;
    std::vector<double> cache_;
};

Window find_window(ScaledRadii& radii, int L) {
    const double upper = -L * std::log(3.0);        // log 3^-L
    const double lower = -(L + 1) * std::log(3.0);  // log 3^-(L+1)
    auto lim = radii.limit();
    const std::uint64_t cap = lim ? *lim : std::numeric_limits<std::uint64_t>::max() / 4;
    if (cap == 0) return {};
    // first n with predicate true, for a predicate monotone in n
    auto first_true = [&](auto pred) -> std::uint64_t {
        if (pred(1)) return 1;
        std::uint64_t lo = 1, hi = 2;
        while (hi <= cap && !pred(hi)) {
            lo = hi;
            hi *= 2;
        }
        if (hi > cap) {
            if (!pred(cap)) return cap + 1;
            hi = cap;
        }
        while (hi - lo > 1) {
            std::uint64_t mid = lo + (hi - lo) / 2;
            (pred(mid) ? hi : lo) = mid;
        }
        return hi;
    };
    Window w;
    auto below = [&](double bound) {
        return [&radii, bound](std::uint64_t n) {
            radii.ensure(n);
            return radii.log_radius(n) < bound;
        };
    };
    w.lo = first_true(below(upper));
    w.hi = first_true(below(lower)) - 1;
    if (w.hi >= w.lo) radii.ensure(w.hi);
    return w;
}

double z99() { return 2.5758293035489004; }

}  // namespace

// ---------------------------------------------------------------- sequences

IntegerSequence IntegerSequence::two_pow_n_squared() { return {}; }

IntegerSequence IntegerSequence::geometric(std::uint64_t base) {
    if (base < 2) throw std::invalid_argument("geometric sequence needs base >= 2");
    IntegerSequence s;
    s.kind_ = Kind::geometric;
    s.base_ = base;
    return s;
}

IntegerSequence IntegerSequence::parse(const std::string& text) {
    if (text == "2^n^2" || text == "2^(n^2)") return two_pow_n_squared();
    if (text.rfind("geometric:", 0) == 0) return geometric(std::stoull(text.substr(10)));
    throw std::invalid_argument("unknown integer sequence '" + text + "'");
}

BigInt IntegerSequence::value(std::size_t n) const {
    if (kind_ == Kind::two_pow_n_squared) return pow_big(2, static_cast<unsigned long>(n * n));
    return pow_big(base_, static_cast<unsigned long>(n));
}

double IntegerSequence::log_value(std::size_t n) const {
    auto x = static_cast<double>(n);
    if (kind_ == Kind::two_pow_n_squared) return x * x * std::log(2.0);
    return x * std::log(static_cast<double>(base_));
}

std::string IntegerSequence::describe() const {
    if (kind_ == Kind::two_pow_n_squared) return "2^n^2";
    return "geometric:" + std::to_string(base_);
}

PairEnumeration::PairEnumeration(std::size_t count) {
    p_.reserve(count);
    q_.reserve(count);
    for (std::uint64_t q = 1; p_.size() < count; ++q) {
        for (std::uint64_t p = 0; p < q && p_.size() < count; ++p) {
            if (std::gcd(p, q) != 1) continue;
            p_.push_back(p);
            q_.push_back(q);
        }
    }
}

std::string to_string(PairFamily f) {
    switch (f) {
        case PairFamily::none: return "none";
        case PairFamily::triadic: return "triadic";
        default: return "membership";
    }
}

PairFamily parse_pair_family(const std::string& text) {
    if (text == "none") return PairFamily::none;
    if (text == "triadic") return PairFamily::triadic;
    if (text == "membership") return PairFamily::membership;
    throw std::invalid_argument("unknown pair family '" + text + "'");
}

bool in_pair_family(PairFamily f, std::uint64_t p, std::uint64_t q) {
    switch (f) {
        case PairFamily::none: return false;
        case PairFamily::triadic: {
            if (q < 3) return false;
            std::uint64_t m = q;
            while (m % 3 == 0) m /= 3;
            if (m != 1) return false;
            for (std::uint64_t d = p; q > 1; q /= 3, d /= 3)
                if (d % 3 == 1) return false;
            return true;
        }
        default: return in_cantor_native(p, q);
    }
}

std::string to_string(ProcessKind k) {
    switch (k) {
        case ProcessKind::iid_circle: return "iid_circle";
        case ProcessKind::iid_cantor: return "iid_cantor";
        case ProcessKind::fractional_parts: return "fractional_parts";
        case ProcessKind::rotated_rationals: return "rotated_rationals";
        case ProcessKind::deterministic_list: return "deterministic_list";
        default: return "mixed";
    }
}

// ---------------------------------------------------------------- processes

Rational cantor_point_from_word(std::uint64_t w) {
    std::uint64_t num = 0;
    for (int i = 0; i < 34; ++i) num = 3 * num + 2 * ((w >> (63 - i)) & 1u);
    return Rational(BigInt(static_cast<unsigned long>(num)), pow_big(3, 34));
}

namespace {

double cantor_double_from_word(std::uint64_t w) {
    std::uint64_t num = 0;
    for (int i = 0; i < 34; ++i) num = 3 * num + 2 * ((w >> (63 - i)) & 1u);
    static const double denom = std::pow(3.0, 34);
    return static_cast<double>(num) / denom;
}

Rational circle_rational_from_word(std::uint64_t w) {
    return Rational(BigInt(static_cast<unsigned long>(w >> 11)), pow_big(2, 53));
}

}  // namespace

PointProcess PointProcess::iid_circle() { return {}; }

PointProcess PointProcess::iid_cantor() {
    PointProcess p;
    p.kind_ = ProcessKind::iid_cantor;
    return p;
}

PointProcess PointProcess::fractional_parts(IntegerSequence a, std::size_t max_n) {
    if (max_n < 1) throw std::invalid_argument("fractional parts need max_n >= 1");
    PointProcess p;
    p.kind_ = ProcessKind::fractional_parts;
    p.seq_ = a;
    p.max_n_ = max_n;
    p.precision_ = fractional_parts_precision(a.value(max_n));
    return p;
}

PointProcess PointProcess::rotated_rationals(std::optional<Rational> alpha, std::size_t max_n) {
    PointProcess p;
    p.kind_ = ProcessKind::rotated_rationals;
    p.alpha_ = std::move(alpha);
    p.max_n_ = max_n;
    p.pairs_ = std::make_shared<PairEnumeration>(max_n);
    return p;
}

PointProcess PointProcess::deterministic_list(std::vector<Rational> points) {
    PointProcess p;
    p.kind_ = ProcessKind::deterministic_list;
    p.max_n_ = points.size();
    p.list_ = std::move(points);
    return p;
}

PointProcess PointProcess::mixed(PairFamily family, std::size_t max_n) {
    PointProcess p;
    p.kind_ = ProcessKind::mixed;
    p.family_ = family;
    p.max_n_ = max_n;
    p.pairs_ = std::make_shared<PairEnumeration>(max_n);
    return p;
}

std::optional<std::size_t> PointProcess::max_index() const {
    if (is_iid()) return std::nullopt;
    return max_n_;
}

std::string PointProcess::describe() const {
    switch (kind_) {
        case ProcessKind::fractional_parts: return "fractional_parts(" + seq_.describe() + ")";
        case ProcessKind::rotated_rationals:
            return "rotated_rationals(" + (alpha_ ? alpha_->to_string() : std::string("random")) + ")";
        case ProcessKind::mixed: return "mixed(" + to_string(family_) + ")";
        default: return to_string(kind_);
    }
}

ProcessTrial PointProcess::start(const RandomStream& trial_stream) const& { return ProcessTrial(*this, trial_stream); }

ProcessTrial::ProcessTrial(const PointProcess& proc, RandomStream stream) : proc_(&proc), stream_(std::move(stream)) {
    if (proc.kind_ == ProcessKind::fractional_parts) {
        RandomStream xs = stream_.derive("X", 0);
        BigInt m = 0;
        unsigned words = (proc.precision_ + 63) / 64;
        for (unsigned i = 0; i < words; ++i) {
            m <<= 64;
            std::uint64_t w = xs.word(i);
            m += BigInt(static_cast<unsigned long>(w));
        }
        m >>= words * 64 - proc.precision_;
        x_ = BigFixed(m, proc.precision_);
    } else if (proc.kind_ == ProcessKind::rotated_rationals) {
        alpha_ = proc.alpha_ ? *proc.alpha_ : circle_rational_from_word(stream_.derive("alpha", 0).word(0));
    }
}

CirclePoint ProcessTrial::exact_point(std::size_t n) const {
    if (n < 1) throw std::invalid_argument("point index starts at 1");
    if (auto m = proc_->max_index(); m && n > *m)
        throw std::out_of_range("point index " + std::to_string(n) + " beyond the configured budget " + std::to_string(*m));
    switch (proc_->kind_) {
        case ProcessKind::iid_circle: return CirclePoint(circle_rational_from_word(stream_.word(n)));
        case ProcessKind::iid_cantor: return CirclePoint(cantor_point_from_word(stream_.word(n)));
        case ProcessKind::fractional_parts: return CirclePoint(x_->scaled(proc_->seq_.value(n)).frac().value());
        case ProcessKind::rotated_rationals: {
            const auto& e = *proc_->pairs_;
            return CirclePoint(Rational(static_cast<std::int64_t>(e.p(n)), static_cast<std::int64_t>(e.q(n))) - alpha_);
        }
        case ProcessKind::deterministic_list: return CirclePoint(proc_->list_[n - 1]);
        default: {
            const auto& e = *proc_->pairs_;
            std::uint64_t w = stream_.word(n);
            if (in_pair_family(proc_->family_, e.p(n), e.q(n))) return CirclePoint(cantor_point_from_word(w));
            return CirclePoint(circle_rational_from_word(w));
        }
    }
}

double ProcessTrial::point(std::size_t n) const {
    switch (proc_->kind_) {
        case ProcessKind::iid_circle: return stream_.uniform(n);
        case ProcessKind::iid_cantor: return cantor_double_from_word(stream_.word(n));
        case ProcessKind::mixed: {
            if (n < 1 || n > proc_->max_n_) throw std::out_of_range("point index beyond the configured budget");
            const auto& e = *proc_->pairs_;
            std::uint64_t w = stream_.word(n);
            if (in_pair_family(proc_->family_, e.p(n), e.q(n))) return cantor_double_from_word(w);
            return to_unit_interval(w);
        }
        default: return exact_point(n).to_double();
    }
}

std::uint64_t ProcessTrial::cell(std::size_t n, std::uint64_t q) const {
    if (proc_->kind_ == ProcessKind::fractional_parts) {
        if (n < 1 || n > proc_->max_n_) throw std::out_of_range("point index beyond the configured budget");
        BigFixed y = x_->scaled(proc_->seq_.value(n)).frac();
        BigInt k = (y.mantissa() * BigInt(static_cast<unsigned long>(q))) >> y.precision_bits();
        return k.get_ui();
    }
    if (proc_->is_iid() || proc_->kind_ == ProcessKind::mixed) {
        auto k = static_cast<std::uint64_t>(point(n) * static_cast<double>(q));
        return std::min(k, q - 1);
    }
    Rational x = exact_point(n).value();
    return (x * Rational(static_cast<std::int64_t>(q))).floor().get_ui();
}

CirclePoint sample_point(const PointProcess& proc, std::size_t n, const RandomStream& trial_stream) {
    return proc.start(trial_stream).exact_point(n);
}

// ---------------------------------------------------------------- grids

Target Target::parse(const std::string& text) {
    if (text == "cantor" || text == "K") return cantor();
    if (text == "circle") return circle();
    throw std::invalid_argument("unknown target '" + text + "'");
}

std::string Target::describe() const {
    switch (kind) {
        case Kind::cantor: return "cantor";
        case Kind::circle: return "circle";
        default: return "arcs";
    }
}

GridMode parse_grid_mode(const std::string& text) {
    if (text == "floor") return GridMode::floor;
    if (text == "ceiling") return GridMode::ceiling;
    throw std::invalid_argument("unknown grid mode '" + text + "'");
}

std::uint64_t grid_denominator(const RadiiFamily& r, std::size_t n, GridMode mode) {
    if (n < 1) throw std::invalid_argument("grid index starts at 1");
    double inv = 0;
    if (r.kind() == RadiiFamily::Kind::power) {
        inv = std::pow(static_cast<double>(n), r.nu());
    } else {
        inv = 1.0 / r.first(n).back();
    }
    double nearest = std::round(inv);
    if (std::abs(inv - nearest) <= 1e-9 * std::max(1.0, inv)) inv = nearest;
    double q = mode == GridMode::floor ? std::floor(inv) : std::ceil(inv);
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(q));
}

HitCells hit_cells(const Target& g, std::uint64_t q) {
    if (q < 1) throw std::invalid_argument("hit_cells needs q >= 1");
    HitCells h;
    h.q = q;
    switch (g.kind) {
        case Target::Kind::circle:
            h.count = q;
            h.bound_low = h.bound_high = static_cast<double>(q);
            return h;
        case Target::Kind::arcs: {
            std::vector<char> hit(q, 0);
            const Rational qr(static_cast<std::int64_t>(q));
            for (const auto& c : g.arcs.components()) {
                BigInt lo = (c.lo * qr).floor();
                BigInt hi = (c.hi * qr).ceil() - 1;
                for (BigInt k = lo; k <= hi; ++k) hit[k.get_ui() % q] = 1;
            }
            h.count = static_cast<std::uint64_t>(std::count(hit.begin(), hit.end(), 1));
            h.bound_low = static_cast<double>(q) * g.arcs.length().to_double();
            h.bound_high = h.bound_low + 2.0 * static_cast<double>(g.arcs.components().size());
            return h;
        }
        default: break;
    }
    std::vector<char> hit(q, 0);
    // K n [A 3^-l, (A+1) 3^-l] has both endpoints in K; only grid cells
    // strictly between the endpoint cells need a finer look.
    auto visit = [&](auto&& self, int l, u128 a, u128 p3) -> void {
        u128 lo = (a * q) / p3;
        u128 hi = ((a + 1) * q) / p3;
        hit[static_cast<std::size_t>(lo % q)] = 1;
        hit[static_cast<std::size_t>(hi % q)] = 1;
        if (hi - lo < 2) return;
        self(self, l + 1, 3 * a, 3 * p3);
        self(self, l + 1, 3 * a + 2, 3 * p3);
    };
    visit(visit, 0, 0, 1);
    h.count = static_cast<std::uint64_t>(std::count(hit.begin(), hit.end(), 1));
    double qk = std::pow(static_cast<double>(q), kappa);
    h.bound_low = qk / 4;
    h.bound_high = 4 * qk;
    return h;
}

HitCells hit_cells(const Target& g, const RadiiFamily& r, std::size_t n, GridMode mode) {
    return hit_cells(g, grid_denominator(r, n, mode));
}

// ---------------------------------------------------------------- theta

double theta_upper_bound(const IntegerSequence& a, const RadiiFamily& r, std::size_t N) {
    if (N == 0) return 3.0;
    auto radii = r.first(N);
    double sum = 0;
    for (std::size_t n = 1; n <= N; ++n)
        sum += std::exp(a.log_value(n) - a.log_value(n + 1) - std::log(radii[n - 1]));
    double v = 3.0 * std::exp(4.0 * sum);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

std::vector<ThetaEstimate> empirical_theta_all(const PointProcess& proc, const RadiiFamily& r, std::size_t v,
                                               std::uint64_t trials, const RandomStream& stream, unsigned threads) {
    if (v < 1 || v > 6) throw std::invalid_argument("empirical_theta needs 1 <= v <= 6");
    if (trials < 2) throw std::invalid_argument("empirical_theta needs at least 2 trials");
    std::vector<std::uint64_t> q(v);
    std::uint64_t paths = 1;
    for (std::size_t n = 1; n <= v; ++n) {
        q[n - 1] = grid_denominator(r, n, GridMode::ceiling);
        paths *= q[n - 1];
        if (paths > 1'000'000) throw std::invalid_argument("too many grid paths");
    }
    constexpr std::uint64_t block = 4096;
    const std::uint64_t blocks = (trials + block - 1) / block;
    auto partial = parallel_map(blocks, threads, [&](std::size_t b) {
        std::vector<std::uint64_t> counts(paths, 0);
        std::uint64_t end = std::min<std::uint64_t>(trials, (b + 1) * block);
        for (std::uint64_t t = b * block; t < end; ++t) {
            ProcessTrial trial = proc.start(stream.derive("trial", t));
            std::uint64_t idx = 0;
            for (std::size_t n = 1; n <= v; ++n) idx = idx * q[n - 1] + trial.cell(n, q[n - 1]);
            ++counts[idx];
        }
        return counts;
    });
    std::vector<std::uint64_t> counts(paths, 0);
    for (const auto& p : partial)
        for (std::uint64_t i = 0; i < paths; ++i) counts[i] += p[i];

    const double scale = static_cast<double>(paths);
    std::vector<ThetaEstimate> out;
    for (std::uint64_t idx = 0; idx < paths; ++idx) {
        ThetaEstimate e;
        e.path.resize(v);
        std::uint64_t rest = idx;
        for (std::size_t n = v; n-- > 0;) {
            e.path[n] = rest % q[n];
            rest /= q[n];
        }
        e.hits = counts[idx];
        e.trials = trials;
        double p = static_cast<double>(e.hits) / static_cast<double>(trials);
        double half = z99() * std::sqrt(p * (1 - p) / static_cast<double>(trials));
        e.ratio = p * scale;
        e.ci_low = std::max(0.0, p - half) * scale;
        e.ci_high = (p + half) * scale;
        out.push_back(std::move(e));
    }
    return out;
}

ThetaEstimate empirical_theta(const PointProcess& proc, const RadiiFamily& r, const std::vector<std::uint64_t>& k_path,
                              std::uint64_t trials, const RandomStream& stream, unsigned threads) {
    auto all = empirical_theta_all(proc, r, k_path.size(), trials, stream, threads);
    for (auto& e : all)
        if (e.path == k_path) return e;
    throw std::invalid_argument("cell path outside the ceiling grids");
}

// ---------------------------------------------------------------- censuses

Window scale_window(const RadiiFamily& r, double nu, int L) {
    ScaledRadii radii(r, nu);
    return find_window(radii, L);
}

namespace {

std::uint64_t census_count(const ProcessTrial& trial, const ScaledRadii& radii, const Window& w, const Target& g, int L) {
    CellGrid grid(g, L);
    std::vector<char> hit(grid.cells(), 0);
    std::uint64_t count = 0;
    for (std::uint64_t n = w.lo; n <= w.hi; ++n) {
        grid.for_each_hit(trial.point(n), radii.radius(n), [&](std::uint64_t k) {
            if (!hit[k]) {
                hit[k] = 1;
                ++count;
            }
        });
        if (count == grid.cells()) break;
    }
    return count;
}

}  // namespace

ScaleCensus single_scale_census(const PointProcess& proc, const RadiiFamily& r, double nu, const Target& g, int L,
                                const RandomStream& trial_stream) {
    ScaledRadii radii(r, nu);
    ScaleCensus c;
    c.L = L;
    c.window = find_window(radii, L);
    ProcessTrial trial = proc.start(trial_stream);
    c.count = census_count(trial, radii, c.window, g, L);
    return c;
}

double exact_expected_census(const PointProcess& proc, const RadiiFamily& r, double nu, const Target& g, int L) {
    if (!proc.is_iid()) throw std::invalid_argument("exact_expected_census needs an i.i.d. process");
    ScaledRadii radii(r, nu);
    Window w = find_window(radii, L);
    CellGrid grid(g, L);
    const double cell_len = std::pow(3.0, -L);
    if (proc.kind() == ProcessKind::iid_circle) {
        double log_miss = 0;
        for (std::uint64_t n = w.lo; n <= w.hi; ++n) {
            double p = std::min(1.0, 2 * radii.radius(n) + cell_len);
            if (p >= 1.0) return static_cast<double>(grid.cells());
            log_miss += std::log1p(-p);
        }
        return static_cast<double>(grid.cells()) * -std::expm1(log_miss);
    }
    std::vector<double> rho;
    for (std::uint64_t n = w.lo; n <= w.hi; ++n) rho.push_back(radii.radius(n));
    double total = 0;
    for (std::uint64_t k = 0; k < grid.cells(); ++k) {
        auto [a, b] = grid.bounds(k);
        double log_miss = 0;
        bool certain = false;
        for (double rr : rho) {
            double p = rr >= 0.5 ? 1.0 : cantor_measure_arc(a - rr, b + rr);
            if (p >= 1.0) {
                certain = true;
                break;
            }
            log_miss += std::log1p(-p);
        }
        total += certain ? 1.0 : -std::expm1(log_miss);
    }
    return total;
}

int nested_hit_depth(const PointProcess& proc, const RadiiFamily& r, double nu, const Target& g, int L0, int L1,
                     const RandomStream& trial_stream) {
    if (L0 > L1) throw std::invalid_argument("nested_hit_depth needs L0 <= L1");
    ScaledRadii radii(r, nu);
    ProcessTrial trial = proc.start(trial_stream);
    std::vector<char> prev;
    for (int L = L0; L <= L1; ++L) {
        CellGrid grid(g, L);
        Window w = find_window(radii, L);
        std::vector<char> alive(grid.cells(), 0);
        bool any = false;
        for (std::uint64_t n = w.lo; n <= w.hi; ++n) {
            grid.for_each_hit(trial.point(n), radii.radius(n), [&](std::uint64_t k) {
                if (L == L0 || prev[grid.parent(k)]) {
                    alive[k] = 1;
                    any = true;
                }
            });
            if (any && L == L1) return L1;
        }
        if (!any) return L - 1;
        prev = std::move(alive);
    }
    return L1;
}

double coverage_fraction(const PointProcess& proc, const RadiiFamily& r, double nu, const Target& g, int L,
                         std::uint64_t N, const RandomStream& trial_stream) {
    CellGrid grid(g, L);
    if (N == 0) return 0.0;
    ScaledRadii radii(r, nu);
    radii.ensure(N);
    ProcessTrial trial = proc.start(trial_stream);
    Window all{1, N};
    return static_cast<double>(census_count(trial, radii, all, g, L)) / static_cast<double>(grid.cells());
}

DimensionFit dimension_fit(const std::vector<ScaleCensus>& censuses) {
    std::vector<double> xs, ys;
    DimensionFit f;
    for (const auto& c : censuses) {
        if (c.count == 0) {
            ++f.dropped;
            continue;
        }
        xs.push_back(c.L);
        ys.push_back(std::log(static_cast<double>(c.count)) / std::log(3.0));
    }
    f.used = xs.size();
    if (f.used < 3) throw std::invalid_argument("dimension_fit needs at least 3 nonzero counts");
    const double n = static_cast<double>(f.used);
    double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx == 0) throw std::invalid_argument("dimension_fit needs distinct levels");
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ssr = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double e = ys[i] - (f.intercept + f.slope * xs[i]);
        ssr += e * e;
    }
    f.stderr_slope = std::sqrt(ssr / (n - 2) / sxx);
    return f;
}

double mixed_model_target(PairFamily family, double mu) {
    double circle_branch = 2.0 / mu + kappa - 1.0;
    if (family == PairFamily::none) return std::max(circle_branch, 0.0);
    return std::max(circle_branch, kappa / mu);
}

MixedResult mixed_model_experiment(PairFamily family, const std::vector<double>& mus, int L0, int L1,
                                   std::uint64_t trials, const RandomStream& stream, unsigned threads) {
    if (L0 > L1) throw std::invalid_argument("mixed model needs L0 <= L1");
    MixedResult res;
    const RadiiFamily pairs = RadiiFamily::coprime_pairs();
    for (double mu : mus) {
        ScaledRadii radii(pairs, mu);
        std::vector<Window> windows;
        std::uint64_t max_n = 1;
        for (int L = L0; L <= L1; ++L) {
            windows.push_back(find_window(radii, L));
            max_n = std::max(max_n, windows.back().hi);
        }
        PointProcess proc = PointProcess::mixed(family, max_n);
        auto per_trial = parallel_map(trials, threads, [&](std::size_t t) {
            ProcessTrial trial = proc.start(stream.derive("trial", t));
            std::vector<std::uint64_t> counts;
            for (int L = L0; L <= L1; ++L)
                counts.push_back(census_count(trial, radii, windows[static_cast<std::size_t>(L - L0)], Target::cantor(), L));
            return counts;
        });
        std::vector<ScaleCensus> summed;
        for (int L = L0; L <= L1; ++L) {
            auto i = static_cast<std::size_t>(L - L0);
            ScaleCensus c;
            c.L = L;
            c.window = windows[i];
            for (std::uint64_t t = 0; t < trials; ++t) {
                res.rows.push_back({mu, L, t, windows[i].size(), per_trial[t][i]});
                c.count += per_trial[t][i];
            }
            summed.push_back(c);
        }
        MixedFit fit{mu, std::nullopt, mixed_model_target(family, mu)};
        auto usable = std::count_if(summed.begin(), summed.end(), [](const ScaleCensus& c) { return c.count > 0; });
        if (usable >= 3) fit.fit = dimension_fit(summed);
        res.fits.push_back(fit);
    }
    return res;
}

}  // namespace cantorlab
