#include "cantorlab/gauges.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "cantorlab/cantor.hpp"
#include "cantorlab/census.hpp"

namespace cantorlab {

namespace {

constexpr double boundary_tol = 1e-12;

// log_1(1/r), ..., log_P(1/r) at u = log(1/r).
std::vector<double> iterated_logs(double u, std::size_t depth) {
    std::vector<double> out(depth);
    double v = u;
    for (std::size_t k = 0; k < depth; ++k) {
        out[k] = v;
        v = std::log(v);
    }
    return out;
}

double parse_real(const std::string& text) {
    if (text == "kappa") return kappa;
    if (text == "-kappa") return -kappa;
    if (text.find('/') != std::string::npos) return Rational::parse(text).to_double();
    std::size_t used = 0;
    double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("malformed number '" + text + "'");
    return v;
}

// Generalised Bertrand test for sum n^-x0 (log n)^-x1 (log log n)^-x2 ...
Verdict bertrand(const std::vector<double>& exponents) {
    for (double x : exponents) {
        if (x > 1 + boundary_tol) return Verdict::converges;
        if (x < 1 - boundary_tol) return Verdict::diverges;
    }
    return Verdict::diverges;
}

// Geometric sum over scales b^j with ratio b^(rho - a), log factors in j after.
Verdict geometric_then_bertrand(double a, double rho, const std::vector<double>& beta) {
    if (a > rho + boundary_tol) return Verdict::converges;
    if (a < rho - boundary_tol) return Verdict::diverges;
    return bertrand(beta);
}

bool is_power_of_three(std::uint64_t b) {
    if (b < 3) return false;
    while (b % 3 == 0) b /= 3;
    return b == 1;
}

std::uint64_t totient(std::uint64_t q) {
    std::uint64_t result = q, n = q;
    for (std::uint64_t p = 2; p * p <= n; ++p) {
        if (n % p == 0) {
            while (n % p == 0) n /= p;
            result -= result / p;
        }
    }
    if (n > 1) result -= result / n;
    return result;
}

}  // namespace

GaugeFn::GaugeFn(double c, double s, std::vector<double> log_exponents)
    : c_(c), s_(s), logs_(std::move(log_exponents)) {
    while (!logs_.empty() && logs_.back() == 0.0) logs_.pop_back();
    if (!(c_ > 0) || !std::isfinite(c_)) throw std::invalid_argument("gauge coefficient must be positive");
    if (!(s_ >= 0) || !std::isfinite(s_)) throw std::invalid_argument("gauge power must be nonnegative");
    if (s_ == 0) {
        if (logs_.empty()) throw std::invalid_argument("constant functions are not gauges");
        for (double e : logs_)
            if (e > 0) throw std::invalid_argument("gauges with s = 0 need nonpositive log exponents");
    }
    if (logs_.empty()) {
        u0_ = 0;
        return;
    }
    // below r_dom every iterated log is at least 1
    double u_dom = 1;
    for (std::size_t k = 1; k < logs_.size(); ++k) u_dom = std::exp(u_dom);
    u0_ = u_dom;
    // d log g / d log(1/r) <= -s + sum_{e_k > 0} e_k / (L_1 ... L_k); the
    // bound decreases in u, so the first zero certifies monotonicity.
    auto slope_bound = [&](double u) {
        auto L = iterated_logs(u, logs_.size());
        double acc = -s_, prod = 1;
        for (std::size_t k = 0; k < logs_.size(); ++k) {
            prod *= L[k];
            if (logs_[k] > 0) acc += logs_[k] / prod;
        }
        return acc;
    };
    if (slope_bound(u_dom) > 0) {
        double lo = u_dom, hi = 2 * u_dom;
        while (slope_bound(hi) > 0) {
            lo = hi;
            hi *= 2;
            if (hi > 1e300) throw std::invalid_argument("gauge never becomes monotone");
        }
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            (slope_bound(mid) > 0 ? lo : hi) = mid;
        }
        u0_ = hi;
    }
}

GaugeFn GaugeFn::power(double s, double c) { return GaugeFn(c, s); }

GaugeFn GaugeFn::log_power(double s, double t, double c) { return GaugeFn(c, s, {t}); }

GaugeFn GaugeFn::iterated_log(double s, int order, double eps, double c) {
    if (order < 1) throw std::invalid_argument("iterated log order must be at least 1");
    std::vector<double> logs(static_cast<std::size_t>(order), 0.0);
    logs.back() = eps;
    return GaugeFn(c, s, logs);
}

GaugeFn GaugeFn::parse(const std::string& text) {
    std::string cleaned = text;
    std::replace(cleaned.begin(), cleaned.end(), '*', ' ');
    std::istringstream in(cleaned);
    double c = 1, s = 0;
    std::vector<double> logs;
    std::string tok;
    bool any = false;
    while (in >> tok) {
        any = true;
        auto caret = tok.find('^');
        std::string base = tok.substr(0, caret);
        double expo = caret == std::string::npos ? 1.0 : parse_real(tok.substr(caret + 1));
        if (base == "r") {
            s += expo;
        } else if (base.rfind("log", 0) == 0) {
            std::size_t level = 0;
            std::string rest = base;
            if (rest == "log") level = 1;
            else if (rest == "loglog") level = 2;
            else level = static_cast<std::size_t>(std::stoul(rest.substr(3)));
            if (level == 0) throw std::invalid_argument("log level must be at least 1");
            if (logs.size() < level) logs.resize(level, 0.0);
            logs[level - 1] += expo;
        } else if (caret == std::string::npos) {
            c *= parse_real(tok);
        } else {
            throw std::invalid_argument("unknown gauge factor '" + tok + "'");
        }
    }
    if (!any) throw std::invalid_argument("empty gauge expression");
    return GaugeFn(c, s, logs);
}

double GaugeFn::log_at(double log_r) const {
    double u = std::max(-log_r, u0_);
    double acc = std::log(c_) - s_ * u;
    if (!logs_.empty()) {
        auto L = iterated_logs(u, logs_.size());
        for (std::size_t k = 0; k < logs_.size(); ++k)
            if (logs_[k] != 0) acc += logs_[k] * std::log(L[k]);
    }
    return acc;
}

double GaugeFn::operator()(double r) const {
    if (!(r > 0)) throw std::domain_error("gauge evaluated at r <= 0");
    if (logs_.empty()) return c_ * std::pow(std::min(r, 1.0), s_);
    return std::exp(log_at(std::log(r)));
}

GaugeFn GaugeFn::operator*(const GaugeFn& o) const {
    std::vector<double> logs(std::max(logs_.size(), o.logs_.size()), 0.0);
    for (std::size_t k = 0; k < logs_.size(); ++k) logs[k] += logs_[k];
    for (std::size_t k = 0; k < o.logs_.size(); ++k) logs[k] += o.logs_[k];
    return GaugeFn(c_ * o.c_, s_ + o.s_, logs);
}

std::string GaugeFn::describe() const {
    std::ostringstream os;
    os.precision(17);
    bool first = true;
    auto sep = [&] {
        if (!first) os << '*';
        first = false;
    };
    if (c_ != 1) sep(), os << c_;
    if (s_ != 0) sep(), os << "r^" << s_;
    for (std::size_t k = 0; k < logs_.size(); ++k) {
        if (logs_[k] == 0) continue;
        sep();
        if (k == 0) os << "log";
        else if (k == 1) os << "loglog";
        else os << "log" << (k + 1);
        os << '^' << logs_[k];
    }
    if (first) os << c_;
    return os.str();
}

double gauge_eval(const GaugeFn& g, const Rational& r) {
    if (r.sign() <= 0) throw std::domain_error("gauge_eval needs r > 0");
    if (r > Rational(1)) throw std::domain_error("gauge_eval needs r <= 1");
    return std::exp(g.log_at(r.log()));
}

double doubling_scan(const GaugeFn& g, int J) {
    if (J < 1) throw std::invalid_argument("doubling_scan needs J >= 1");
    if (g.is_pure_power()) return std::exp2(g.power_exponent());
    const double ln2 = std::log(2.0);
    double best = 0;
    for (int j = 1; j <= J; ++j) best = std::max(best, std::exp(g.log_at(-(j - 1) * ln2) - g.log_at(-j * ln2)));
    return best;
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::converges: return "converges";
        case Verdict::diverges: return "diverges";
        default: return "unknown";
    }
}

RadiiFamily RadiiFamily::power(double nu) {
    if (!(nu > 0)) throw std::invalid_argument("power radii need nu > 0");
    RadiiFamily r;
    r.kind_ = Kind::power;
    r.nu_ = nu;
    return r;
}

RadiiFamily RadiiFamily::coprime_pairs() {
    RadiiFamily r;
    r.kind_ = Kind::coprime_pairs;
    return r;
}

RadiiFamily RadiiFamily::cantor_pairs() {
    RadiiFamily r;
    r.kind_ = Kind::cantor_pairs;
    return r;
}

RadiiFamily RadiiFamily::base_b(std::uint64_t b) {
    if (b < 2) throw std::invalid_argument("base must be at least 2");
    RadiiFamily r;
    r.kind_ = Kind::base_b;
    r.base_ = b;
    return r;
}

RadiiFamily RadiiFamily::base_b_cantor(std::uint64_t b) {
    RadiiFamily r = base_b(b);
    r.kind_ = Kind::base_b_cantor;
    return r;
}

RadiiFamily RadiiFamily::explicit_list(std::vector<double> radii) {
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] > 0 && radii[i] <= 1)) throw std::invalid_argument("radii must lie in (0, 1]");
        if (i > 0 && radii[i] > radii[i - 1]) throw std::invalid_argument("radii must be nonincreasing");
    }
    RadiiFamily r;
    r.kind_ = Kind::explicit_list;
    r.list_ = std::move(radii);
    return r;
}

RadiiFamily RadiiFamily::parse(const std::string& text) {
    auto colon = text.find(':');
    std::string head = text.substr(0, colon);
    std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
    if (head == "power") return power(arg.empty() ? 1.0 : parse_real(arg));
    if (head == "pairs" || head == "coprime_pairs") return coprime_pairs();
    if (head == "cantor_pairs") return cantor_pairs();
    if (head == "base_b" && !arg.empty()) return base_b(std::stoull(arg));
    if (head == "base_b_cantor" && !arg.empty()) return base_b_cantor(std::stoull(arg));
    if (head == "list") {
        std::istringstream is(arg);
        std::vector<double> radii;
        for (std::string tok; is >> tok;) radii.push_back(parse_real(tok));
        return explicit_list(std::move(radii));
    }
    throw std::invalid_argument("unknown radii family '" + text + "'");
}

std::string RadiiFamily::describe() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind_) {
        case Kind::power: os << "power(" << nu_ << ")"; break;
        case Kind::coprime_pairs: os << "pairs"; break;
        case Kind::cantor_pairs: os << "cantor_pairs"; break;
        case Kind::base_b: os << "base_b(" << base_ << ")"; break;
        case Kind::base_b_cantor: os << "base_b_cantor(" << base_ << ")"; break;
        case Kind::explicit_list: os << "list(" << list_.size() << ")"; break;
    }
    return os.str();
}

std::optional<std::size_t> RadiiFamily::length() const {
    if (kind_ == Kind::explicit_list) return list_.size();
    return std::nullopt;
}

std::vector<double> RadiiFamily::first(std::size_t n) const {
    std::vector<double> out;
    out.reserve(n);
    auto repeat = [&](double v, std::uint64_t times) {
        for (std::uint64_t i = 0; i < times && out.size() < n; ++i) out.push_back(v);
    };
    switch (kind_) {
        case Kind::power:
            for (std::size_t i = 1; i <= n; ++i) out.push_back(std::pow(static_cast<double>(i), -nu_));
            break;
        case Kind::coprime_pairs:
            for (std::uint64_t q = 1; out.size() < n; ++q) repeat(1.0 / static_cast<double>(q), totient(q));
            break;
        case Kind::cantor_pairs: {
            Threshold exact(MuSpec::infinity(), 0);
            for (std::uint64_t q = 1; out.size() < n; ++q)
                repeat(1.0 / static_cast<double>(q), near_K_unit(q, exact, CensusAlgorithm::interval));
            break;
        }
        case Kind::base_b:
        case Kind::base_b_cantor: {
            double q = 1;
            for (int j = 1; out.size() < n; ++j) {
                q *= static_cast<double>(base_);
                std::uint64_t count = 0;
                if (kind_ == Kind::base_b) {
                    auto bj = static_cast<std::uint64_t>(q);
                    if (q > 1e18) throw std::invalid_argument("base_b radii exhausted the integer range");
                    count = totient(bj);
                } else {
                    count = base_b_count(base_, j);
                }
                repeat(1.0 / q, count);
            }
            break;
        }
        case Kind::explicit_list:
            if (n > list_.size()) throw std::invalid_argument("explicit radii list is shorter than requested");
            out.assign(list_.begin(), list_.begin() + static_cast<std::ptrdiff_t>(n));
            break;
    }
    return out;
}

double critical_exponent(const RadiiFamily& r) {
    switch (r.kind()) {
        case RadiiFamily::Kind::power: return 1.0 / r.nu();
        case RadiiFamily::Kind::coprime_pairs: return 2.0;
        case RadiiFamily::Kind::cantor_pairs: return kappa;
        case RadiiFamily::Kind::base_b: return 1.0;
        case RadiiFamily::Kind::base_b_cantor:
            if (is_power_of_three(r.base())) return kappa;
            throw std::invalid_argument("critical exponent of base-b Cantor radii is unknown unless b is a power of 3");
        default: throw std::invalid_argument("explicit radii lists have no critical exponent");
    }
}

SeriesResult series_partial(SeriesKind kind, const GaugeFn& g, const std::optional<GaugeFn>& h,
                            const RadiiFamily& r, std::size_t N) {
    if (N < 1) throw std::invalid_argument("series_partial needs N >= 1");
    if (kind == SeriesKind::hr_over_g && !h) throw std::invalid_argument("h r / g series needs h");
    SeriesResult res;
    long double sum = 0;
    for (double rn : r.first(N)) {
        double lr = std::log(rn);
        double lt = lr - g.log_at(lr);
        if (kind == SeriesKind::hr_over_g) lt += h->log_at(lr);
        sum += std::exp(static_cast<long double>(lt));
    }
    res.partial = static_cast<double>(sum);

    // term = r^a prod_k L_k(r)^-beta_k near zero
    double a = 1 - g.power_exponent();
    std::vector<double> beta = g.log_exponents();
    if (kind == SeriesKind::hr_over_g) {
        a += h->power_exponent();
        const auto& eh = h->log_exponents();
        if (beta.size() < eh.size()) beta.resize(eh.size(), 0.0);
        for (std::size_t k = 0; k < eh.size(); ++k) beta[k] -= eh[k];
    }
    switch (r.kind()) {
        case RadiiFamily::Kind::power: {
            std::vector<double> seq{r.nu() * a};
            seq.insert(seq.end(), beta.begin(), beta.end());
            res.verdict = bertrand(seq);
            break;
        }
        case RadiiFamily::Kind::coprime_pairs: {
            std::vector<double> seq{a - 1};
            seq.insert(seq.end(), beta.begin(), beta.end());
            res.verdict = bertrand(seq);
            break;
        }
        case RadiiFamily::Kind::base_b: res.verdict = geometric_then_bertrand(a, 1.0, beta); break;
        case RadiiFamily::Kind::base_b_cantor:
            res.verdict = is_power_of_three(r.base()) ? geometric_then_bertrand(a, kappa, beta) : Verdict::unknown;
            break;
        case RadiiFamily::Kind::cantor_pairs:
            if (a > kappa + boundary_tol) res.verdict = Verdict::converges;
            else if (a < kappa - boundary_tol) res.verdict = Verdict::diverges;
            else res.verdict = Verdict::unknown;
            break;
        default: res.verdict = Verdict::unknown;
    }
    return res;
}

SeriesResult precprec_partial(const GaugeFn& g, const GaugeFn& h, int J) {
    if (J < 1) throw std::invalid_argument("precprec_partial needs J >= 1");
    const double ln2 = std::log(2.0);
    long double sum = 0;
    for (int j = 1; j <= J; ++j) {
        long double inv_h = std::exp(-static_cast<long double>(h.log_at(-j * ln2)));
        long double inv_h_prev = std::exp(-static_cast<long double>(h.log_at(-(j - 1) * ln2)));
        sum += std::exp(static_cast<long double>(g.log_at(-j * ln2))) * (inv_h - inv_h_prev);
    }
    SeriesResult res;
    res.partial = static_cast<double>(sum);
    if (g.is_pure_power() && h.is_pure_power())
        res.verdict = h.power_exponent() < g.power_exponent() - boundary_tol ? Verdict::converges : Verdict::diverges;
    return res;
}

SeriesResult precphi_partial(const GaugeFn& g, const GaugeFn& h, const GaugeFn& phi, int J) {
    if (J < 1) throw std::invalid_argument("precphi_partial needs J >= 1");
    const double ln2 = std::log(2.0);
    auto log_ratio = [&](int j) { return g.log_at(-j * ln2) - h.log_at(-j * ln2); };
    for (int j = 1; j <= J; ++j)
        if (log_ratio(j) > log_ratio(j - 1)) throw std::invalid_argument("g/h must decrease to zero on the dyadic grid");
    if (!(log_ratio(J) < log_ratio(0))) throw std::invalid_argument("g/h must decrease to zero on the dyadic grid");

    long double sum = 0;
    for (int j = 1; j <= J; ++j) {
        long double inv = std::exp(-static_cast<long double>(phi.log_at(-j * ln2)));
        long double inv_prev = std::exp(-static_cast<long double>(phi.log_at(-(j - 1) * ln2)));
        sum += std::exp(static_cast<long double>(log_ratio(j))) * (inv - inv_prev);
    }
    SeriesResult res;
    res.partial = static_cast<double>(sum);
    if (g.is_pure_power() && h.is_pure_power() && phi.is_pure_power()) {
        double gap = g.power_exponent() - h.power_exponent();
        res.verdict = phi.power_exponent() < gap - boundary_tol ? Verdict::converges : Verdict::diverges;
    }
    return res;
}

}  // namespace cantorlab
