#include "cantorlab/harness.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <unistd.h>

#include "cantorlab/census.hpp"
#include "cantorlab/covering.hpp"
#include "cantorlab/exponents.hpp"
#include "cantorlab/gauges.hpp"
#include "cantorlab/parallel.hpp"
#include "cantorlab/percolation.hpp"
#include "cantorlab/random_stream.hpp"

namespace cantorlab {

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& what) {
    throw ConfigError("config key '" + key + "': " + what);
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    for (std::string item; std::getline(ss, item, ',');) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

long long to_int(const std::string& key, const std::string& v, long long lo, long long hi) {
    long long x = 0;
    try {
        std::size_t used = 0;
        x = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing text");
    } catch (const std::exception&) {
        bad(key, "expected an integer, got '" + v + "'");
    }
    if (x < lo || x > hi) bad(key, v + " out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return x;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    if (v.empty() || v[0] == '-') bad(key, "expected a nonnegative integer, got '" + v + "'");
    try {
        std::size_t used = 0;
        std::uint64_t x = std::stoull(v, &used, 0);
        if (used != v.size()) throw std::invalid_argument("trailing text");
        return x;
    } catch (const std::exception&) {
        bad(key, "expected a 64-bit unsigned integer, got '" + v + "'");
    }
}

double to_real(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        double x = std::stod(v, &used);
        if (used != v.size() || !std::isfinite(x)) throw std::invalid_argument("bad");
        return x;
    } catch (const std::exception&) {
        bad(key, "expected a real number, got '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    bad(key, "expected true or false, got '" + v + "'");
}

std::pair<int, int> parse_levels(const std::string& key, const std::string& v, int max_level) {
    auto dots = v.find("..");
    if (dots == std::string::npos) {
        int L = static_cast<int>(to_int(key, v, 0, max_level));
        return {L, L};
    }
    int a = static_cast<int>(to_int(key, trim(v.substr(0, dots)), 0, max_level));
    int b = static_cast<int>(to_int(key, trim(v.substr(dots + 2)), 0, max_level));
    if (a > b) bad(key, "empty level range " + v);
    return {a, b};
}

std::vector<MuSpec> parse_mus(const std::string& key, const std::string& v) {
    std::vector<MuSpec> out;
    for (const auto& item : split_list(v)) {
        try {
            out.push_back(MuSpec::parse(item));
        } catch (const std::exception& e) {
            bad(key, e.what());
        }
    }
    if (out.empty()) bad(key, "empty list");
    return out;
}

Rational parse_rational(const std::string& key, const std::string& v) {
    try {
        return Rational::parse(v);
    } catch (const std::exception& e) {
        bad(key, e.what());
    }
}

template <class F>
auto wrap(const std::string& key, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        bad(key, e.what());
    }
}

// "iid_circle", "iid_cantor", "fractional_parts[:<seq>]", "rotated_rationals[:<alpha>|random]",
// "mixed[:<family>]", "list:<x1> <x2> ...".
PointProcess make_process(const std::string& text, std::size_t max_n) {
    auto colon = text.find(':');
    std::string head = text.substr(0, colon);
    std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
    if (head == "iid_circle") return PointProcess::iid_circle();
    if (head == "iid_cantor") return PointProcess::iid_cantor();
    if (head == "fractional_parts")
        return PointProcess::fractional_parts(IntegerSequence::parse(arg.empty() ? "2^n^2" : arg), max_n);
    if (head == "rotated_rationals") {
        std::optional<Rational> alpha;
        if (!arg.empty() && arg != "random") alpha = Rational::parse(arg);
        return PointProcess::rotated_rationals(alpha, max_n);
    }
    if (head == "mixed") return PointProcess::mixed(parse_pair_family(arg.empty() ? "triadic" : arg), max_n);
    if (head == "list") {
        std::istringstream is(arg);
        std::vector<Rational> pts;
        for (std::string tok; is >> tok;) pts.push_back(Rational::parse(tok));
        return PointProcess::deterministic_list(std::move(pts));
    }
    throw std::invalid_argument("unknown process '" + text + "'");
}

struct KeySpec {
    std::string key;
    std::optional<std::string> fallback;
    bool required = false;
    std::function<void(const std::string& full_key, const std::string& value)> check;
};

using Schema = std::vector<KeySpec>;

KeySpec opt(std::string key, std::string fallback, std::function<void(const std::string&, const std::string&)> check) {
    return {std::move(key), std::move(fallback), false, std::move(check)};
}

KeySpec req(std::string key, std::function<void(const std::string&, const std::string&)> check) {
    return {std::move(key), std::nullopt, true, std::move(check)};
}

KeySpec maybe(std::string key, std::function<void(const std::string&, const std::string&)> check) {
    return {std::move(key), std::nullopt, false, std::move(check)};
}

auto int_in(long long lo, long long hi) {
    return [=](const std::string& k, const std::string& v) { to_int(k, v, lo, hi); };
}
auto choice(std::initializer_list<const char*> options) {
    std::vector<std::string> opts(options.begin(), options.end());
    return [opts](const std::string& k, const std::string& v) {
        if (std::find(opts.begin(), opts.end(), v) != opts.end()) return;
        std::string joined;
        for (const auto& o : opts) joined += (joined.empty() ? "" : "|") + o;
        bad(k, "expected one of " + joined + ", got '" + v + "'");
    };
}
auto positive_real() {
    return [](const std::string& k, const std::string& v) {
        if (!(to_real(k, v) > 0)) bad(k, "must be positive");
    };
}
auto gauge_text() {
    return [](const std::string& k, const std::string& v) { wrap(k, [&] { return GaugeFn::parse(v); }); };
}
auto radii_text() {
    return [](const std::string& k, const std::string& v) { wrap(k, [&] { return RadiiFamily::parse(v); }); };
}
auto anything() {
    return [](const std::string&, const std::string&) {};
}

Schema run_schema(const std::string& experiment) {
    return {
        opt("seed", "0", [](const std::string& k, const std::string& v) { to_u64(k, v); }),
        opt("threads", std::to_string(default_thread_count()), int_in(1, 1024)),
        opt("out", experiment + ".csv", anything()),
        maybe("checkpoint", anything()),
        opt("max_units", "0", [](const std::string& k, const std::string& v) { to_u64(k, v); }),
    };
}

Schema experiment_schema(const std::string& experiment) {
    if (experiment == "census")
        return {
            opt("j_low", "1", int_in(0, 14)),
            maybe("j_high", int_in(0, 14)),
            req("mu", [](const std::string& k, const std::string& v) { parse_mus(k, v); }),
            opt("algorithm", "interval", choice({"scan", "interval"})),
            opt("timing", "false", [](const std::string& k, const std::string& v) { to_bool(k, v); }),
        };
    if (experiment == "base-b-census")
        return {
            req("b",
                [](const std::string& k, const std::string& v) {
                    auto items = split_list(v);
                    if (items.empty()) bad(k, "empty list");
                    for (const auto& item : items)
                        if (to_u64(k, item) < 2) bad(k, "bases must be at least 2");
                }),
            opt("j_low", "1", int_in(1, 62)),
            maybe("j_high", int_in(1, 62)),
        };
    if (experiment == "exponent")
        return {
            opt("mode", "lsv", choice({"lsv", "vb", "convergents"})),
            opt("mu", "3",
                [](const std::string& k, const std::string& v) {
                    if (!(parse_rational(k, v) > Rational(1))) bad(k, "must exceed 1");
                }),
            opt("J", "5", int_in(1, 4096)),
            opt("depth", "5", int_in(1, 64)),
            maybe("x",
                  [](const std::string& k, const std::string& v) {
                      if (v != "lsv") parse_rational(k, v);
                  }),
            opt("b", "3", int_in(2, 1000000)),
        };
    if (experiment == "gauge")
        return {
            opt("mode", "doubling", choice({"doubling", "series", "precprec", "precphi"})),
            req("g", gauge_text()),
            maybe("h", gauge_text()),
            maybe("phi", gauge_text()),
            opt("series", "r_over_g", choice({"r_over_g", "hr_over_g"})),
            opt("radii", "power:1", radii_text()),
            opt("N", "1000",
                [](const std::string& k, const std::string& v) {
                    auto items = split_list(v);
                    if (items.empty()) bad(k, "empty list");
                    for (const auto& item : items) to_int(k, item, 1, 100000000);
                }),
            opt("J", "40", int_in(1, 1000)),
        };
    if (experiment == "cover")
        return {
            opt("experiment", "census", choice({"census", "nested", "coverage", "mixed", "hit_cells"})),
            opt("process", "iid_circle",
                [](const std::string& k, const std::string& v) { wrap(k, [&] { return make_process(v, 1); }); }),
            opt("radii", "power:1", radii_text()),
            opt("nu", "1.5", positive_real()),
            opt("target", "cantor", choice({"cantor", "circle"})),
            opt("levels", "4..8", [](const std::string& k, const std::string& v) { parse_levels(k, v, 26); }),
            opt("trials", "20", int_in(1, 100000000)),
            opt("grid", "ceiling", choice({"floor", "ceiling"})),
            opt("N", "1000", int_in(1, 100000000)),
            opt("mus", "2,4",
                [](const std::string& k, const std::string& v) {
                    auto items = split_list(v);
                    if (items.empty()) bad(k, "empty list");
                    for (const auto& item : items)
                        if (!(to_real(k, item) > 0)) bad(k, "values must be positive");
                }),
            opt("family", "triadic", choice({"none", "triadic", "membership"})),
        };
    if (experiment == "percolate")
        return {
            opt("gauge", "r^0.5", gauge_text()),
            opt("depth", "12", int_in(0, max_tree_depth)),
            opt("trials", "100", int_in(1, 100000000)),
            opt("mass", "lebesgue", choice({"lebesgue", "cantor"})),
        };
    throw ConfigError("unknown experiment '" + experiment + "'");
}

// Keys that never change the CSV bytes.
const std::set<std::string> unhashed = {"run.threads", "run.out", "run.checkpoint", "run.max_units"};

void cross_check(ExperimentConfig& cfg) {
    const std::string& e = cfg.experiment;
    auto key = [&](const std::string& k) { return e + "." + k; };
    if (e == "census" || e == "base-b-census") {
        if (!cfg.has(key("j_high"))) cfg.values[key("j_high")] = cfg.get(key("j_low"));
        if (std::stoi(cfg.get(key("j_high"))) < std::stoi(cfg.get(key("j_low"))))
            bad(key("j_high"), "must not be below j_low");
    }
    if (e == "base-b-census") {
        int jh = std::stoi(cfg.get(key("j_high")));
        for (const auto& item : split_list(cfg.get(key("b"))))
            if (jh * std::log2(static_cast<double>(std::stoull(item))) >= 62)
                bad(key("j_high"), "b^j must stay below 2^62 for b = " + item);
    }
    if (e == "exponent") {
        std::string mode = cfg.get(key("mode"));
        if ((mode == "vb" || mode == "convergents") && !cfg.has(key("x"))) bad(key("x"), "required for mode " + mode);
        const std::string depth_key = mode == "lsv" ? key("J") : key("depth");
        if (mode == "lsv" || (cfg.has(key("x")) && cfg.get(key("x")) == "lsv")) {
            double growth = std::stoi(cfg.get(depth_key)) * std::log(Rational::parse(cfg.get(key("mu"))).to_double());
            if (growth > std::log(2e6)) bad(depth_key, "mu^J above 2e6 makes the witnesses too large");
        }
    }
    if (e == "gauge") {
        std::string mode = cfg.get(key("mode"));
        bool need_h = mode == "precprec" || mode == "precphi" || (mode == "series" && cfg.get(key("series")) == "hr_over_g");
        if (need_h && !cfg.has(key("h"))) bad(key("h"), "required for mode " + mode);
        if (mode == "precphi" && !cfg.has(key("phi"))) bad(key("phi"), "required for mode precphi");
    }
}

// ---- output helpers ----

class Csv {
public:
    Csv(const ExperimentConfig& cfg, std::vector<std::string> columns) : width_(columns.size()) {
        out_ << "# artifact=" << artifact_name << " version=" << artifact_version << " experiment=" << cfg.experiment
             << " config_hash=" << cfg.hash_hex() << " seed=" << cfg.seed << '\n';
        row(columns);
    }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != width_) throw std::logic_error("csv row width mismatch");
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }

    std::string str() const { return out_.str(); }

private:
    std::size_t width_;
    std::ostringstream out_;
};

std::string num(double x) { return std::isfinite(x) ? format_double(x) : ""; }
// Positive rationals below the double range keep a decimal exponent.
std::string positive(const Rational& x) {
    double d = x.to_double();
    if (d > 0 || x.sign() <= 0) return num(d);
    double log10x = x.log() / std::log(10.0);
    double e = std::floor(log10x);
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.16fe%.0f", std::pow(10.0, log10x - e), e);
    return buf;
}

template <class I>
std::string integer(I x) {
    return std::to_string(x);
}

// ---- census ----

std::string checkpoint_header(const ExperimentConfig& cfg) {
    return std::string("# cantorlab checkpoint config_hash=") + cfg.hash_hex() + "\n";
}

using UnitKey = std::tuple<int, std::string, std::uint64_t>;

std::map<UnitKey, std::uint64_t> load_checkpoint(const ExperimentConfig& cfg) {
    std::map<UnitKey, std::uint64_t> done;
    const auto& path = *cfg.checkpoint;
    std::ifstream in(path, std::ios::binary);
    if (!in) return done;
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (text.empty()) return done;
    // A line without its newline was cut by an interrupt and is redone.
    auto last_nl = text.rfind('\n');
    if (last_nl + 1 != text.size()) {
        text = last_nl == std::string::npos ? "" : text.substr(0, last_nl + 1);
        atomic_write(path, text.empty() ? checkpoint_header(cfg) : text);
    }
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line + "\n" != checkpoint_header(cfg)) {
        throw ConfigError("checkpoint " + path.string() + " was written by a different configuration (config hash " +
                          cfg.hash_hex() + " expected)");
    }
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        int j;
        std::string mu;
        std::uint64_t q, count;
        std::string extra;
        if (!(ls >> j >> mu >> q >> count) || (ls >> extra)) throw std::runtime_error("malformed checkpoint line '" + line + "'");
        done[{j, mu, q}] = count;
    }
    return done;
}

std::optional<std::string> run_census(const ExperimentConfig& cfg, std::ostream& log) {
    const int j_low = std::stoi(cfg.get("census.j_low"));
    const int j_high = std::stoi(cfg.get("census.j_high"));
    const auto mus = parse_mus("census.mu", cfg.get("census.mu"));
    const CensusAlgorithm alg = parse_algorithm(cfg.get("census.algorithm"));
    const bool timing = to_bool("census.timing", cfg.get("census.timing"));

    std::map<UnitKey, std::uint64_t> done;
    std::optional<std::ofstream> ckpt;
    if (cfg.checkpoint) {
        done = load_checkpoint(cfg);
        if (done.empty()) atomic_write(*cfg.checkpoint, checkpoint_header(cfg));
        ckpt.emplace(*cfg.checkpoint, std::ios::app | std::ios::binary);
        if (!*ckpt) throw std::runtime_error("cannot open checkpoint " + cfg.checkpoint->string());
    }
    if (!done.empty()) log << "resuming with " << done.size() << " completed units\n";

    constexpr std::size_t batch = 2048;
    std::uint64_t budget = cfg.max_units == 0 ? UINT64_MAX : cfg.max_units;
    bool complete = true;
    Csv csv(cfg, {"j", "mu", "count", "log3_density", "bound", "algorithm", "wall_seconds"});

    for (int j = j_low; j <= j_high; ++j) {
        PairRange range(j);
        for (const auto& mu : mus) {
            const std::string label = mu.label();
            Threshold t(mu, j);
            std::vector<std::uint64_t> todo;
            std::uint64_t total = 0;
            for (std::uint64_t q = range.q_low; q <= range.q_high; ++q) {
                auto it = done.find({j, label, q});
                if (it == done.end()) todo.push_back(q);
                else total += it->second;
            }
            auto start = std::chrono::steady_clock::now();
            for (std::size_t at = 0; at < todo.size() && complete;) {
                std::size_t n = std::min<std::uint64_t>({batch, todo.size() - at, budget});
                if (n == 0) {
                    complete = false;
                    break;
                }
                auto counts = parallel_map(n, cfg.threads, [&](std::size_t i) { return near_K_unit(todo[at + i], t, alg); });
                std::string lines;
                for (std::size_t i = 0; i < n; ++i) {
                    total += counts[i];
                    lines += std::to_string(j) + " " + label + " " + std::to_string(todo[at + i]) + " " +
                             std::to_string(counts[i]) + "\n";
                }
                if (ckpt) {
                    *ckpt << lines << std::flush;
                    if (!*ckpt) throw std::runtime_error("checkpoint write failed");
                }
                at += n;
                budget -= n;
            }
            if (!complete) break;
            double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            CensusRecord rec = make_record(j, mu, total);
            csv.row({integer(j), label, integer(rec.count), num(rec.log3_density), num(rec.bound), to_string(alg),
                     timing ? num(secs) : ""});
        }
        if (!complete) break;
    }
    if (!complete) {
        log << "stopped after max_units = " << cfg.max_units << "; resume with the same checkpoint\n";
        return std::nullopt;
    }
    return csv.str();
}

std::string run_base_b(const ExperimentConfig& cfg, std::ostream&) {
    const int j_low = std::stoi(cfg.get("base-b-census.j_low"));
    const int j_high = std::stoi(cfg.get("base-b-census.j_high"));
    std::vector<std::pair<std::uint64_t, int>> units;
    for (const auto& item : split_list(cfg.get("base-b-census.b")))
        for (int j = j_low; j <= j_high; ++j) units.emplace_back(std::stoull(item), j);
    auto counts = parallel_map(units.size(), cfg.threads,
                               [&](std::size_t i) { return base_b_count(units[i].first, units[i].second); });
    Csv csv(cfg, {"b", "j", "count", "log_b_density"});
    for (std::size_t i = 0; i < units.size(); ++i) {
        auto [b, j] = units[i];
        double density = counts[i] > 0 ? std::log(static_cast<double>(counts[i])) / (j * std::log(static_cast<double>(b)))
                                       : NAN;
        csv.row({integer(b), integer(j), integer(counts[i]), num(density)});
    }
    return csv.str();
}

std::string run_exponent(const ExperimentConfig& cfg, std::ostream& log) {
    const std::string mode = cfg.get("exponent.mode");
    const Rational mu = Rational::parse(cfg.get("exponent.mu"));
    const int J = std::stoi(cfg.get("exponent.J"));
    Csv csv(cfg, {"j", "witness_denominator", "error_bound", "log_ratio"});
    auto resolve_x = [&] {
        std::string x = cfg.get("exponent.x");
        // in vb mode J is the profile length and depth truncates the series
        int depth = mode == "lsv" ? J : std::stoi(cfg.get("exponent.depth"));
        return x == "lsv" ? lsv_partial_sum(mu, depth).value : Rational::parse(x);
    };
    if (mode == "lsv" || mode == "convergents") {
        auto ws = mode == "lsv" ? lsv_witnesses(mu, J) : convergent_witnesses(resolve_x());
        if (ws.empty()) {
            log << "no witnesses\n";
            return csv.str();
        }
        auto est = exponent_from_witnesses(ws);
        for (std::size_t i = 0; i < ws.size(); ++i)
            csv.row({integer(i + 1), ws[i].denominator_size.get_str(), positive(ws[i].error_bound),
                     num(est.witnesses[i].log_ratio)});
        log << "estimate " << format_double(est.value) << " tail " << format_double(est.tail_max) << "\n";
    } else {
        const unsigned long b = std::stoul(cfg.get("exponent.b"));
        auto prof = vb_profile(resolve_x(), b, J);
        BigInt bj = 1;
        for (const auto& row : prof.rows) {
            bj *= b;
            csv.row({integer(row.j), bj.get_str(), positive(row.distance),
                     row.distance.sign() > 0 ? num(row.log_ratio) : ""});
        }
        log << "estimate " << format_double(prof.estimate.value) << " raw " << format_double(prof.estimate.raw_max)
            << " tail " << format_double(prof.estimate.tail_max) << "\n";
    }
    return csv.str();
}

std::string run_gauge(const ExperimentConfig& cfg, std::ostream& log) {
    const std::string mode = cfg.get("gauge.mode");
    const GaugeFn g = GaugeFn::parse(cfg.get("gauge.g"));
    std::optional<GaugeFn> h, phi;
    if (cfg.has("gauge.h")) h = GaugeFn::parse(cfg.get("gauge.h"));
    if (cfg.has("gauge.phi")) phi = GaugeFn::parse(cfg.get("gauge.phi"));
    const int J = std::stoi(cfg.get("gauge.J"));
    Csv csv(cfg, {"mode", "gauge", "index", "value", "verdict"});
    const std::string name = g.describe();
    if (mode == "doubling") {
        for (int j = 1; j <= J; ++j) {
            double ratio = std::exp(g.log_at((1 - j) * std::log(2.0)) - g.log_at(-j * std::log(2.0)));
            csv.row({mode, name, integer(j), num(ratio), ""});
        }
        log << "doubling constant " << format_double(doubling_scan(g, J)) << "\n";
    } else if (mode == "series") {
        const RadiiFamily radii = RadiiFamily::parse(cfg.get("gauge.radii"));
        SeriesKind kind = cfg.get("gauge.series") == "r_over_g" ? SeriesKind::r_over_g : SeriesKind::hr_over_g;
        std::vector<std::size_t> Ns;
        for (const auto& item : split_list(cfg.get("gauge.N"))) Ns.push_back(std::stoull(item));
        auto results = parallel_map(Ns.size(), cfg.threads,
                                    [&](std::size_t i) { return series_partial(kind, g, h, radii, Ns[i]); });
        for (std::size_t i = 0; i < Ns.size(); ++i)
            csv.row({cfg.get("gauge.series"), name, integer(Ns[i]), num(results[i].partial), to_string(results[i].verdict)});
    } else {
        auto results = parallel_map(static_cast<std::size_t>(J), cfg.threads, [&](std::size_t i) {
            int j = static_cast<int>(i) + 1;
            return mode == "precprec" ? precprec_partial(g, *h, j) : precphi_partial(g, *h, *phi, j);
        });
        for (int j = 1; j <= J; ++j)
            csv.row({mode, name, integer(j), num(results[j - 1].partial), to_string(results[j - 1].verdict)});
    }
    return csv.str();
}

std::string run_cover(const ExperimentConfig& cfg, std::ostream& log) {
    const std::string experiment = cfg.get("cover.experiment");
    const RadiiFamily radii = RadiiFamily::parse(cfg.get("cover.radii"));
    const double nu = std::stod(cfg.get("cover.nu"));
    const Target target = Target::parse(cfg.get("cover.target"));
    const auto [L0, L1] = parse_levels("cover.levels", cfg.get("cover.levels"), 26);
    const std::uint64_t trials = std::stoull(cfg.get("cover.trials"));
    const std::uint64_t N = std::stoull(cfg.get("cover.N"));
    const RandomStream root(cfg.seed);
    const std::string seed = integer(cfg.seed);
    Csv csv(cfg, {"experiment", "kind", "nu_or_mu", "L", "window_size", "count", "exact_expectation", "trial", "seed"});

    if (experiment == "hit_cells") {
        const GridMode grid = parse_grid_mode(cfg.get("cover.grid"));
        auto cells = parallel_map(N, cfg.threads, [&](std::size_t i) { return hit_cells(target, radii, i + 1, grid); });
        for (std::size_t i = 0; i < N; ++i)
            csv.row({experiment, target.describe(), "", integer(i + 1), integer(cells[i].q), integer(cells[i].count), "",
                     "", seed});
        return csv.str();
    }
    if (experiment == "mixed") {
        std::vector<double> mus;
        for (const auto& item : split_list(cfg.get("cover.mus"))) mus.push_back(std::stod(item));
        PairFamily family = parse_pair_family(cfg.get("cover.family"));
        auto res = mixed_model_experiment(family, mus, L0, L1, trials, root, cfg.threads);
        for (const auto& r : res.rows)
            csv.row({experiment, to_string(family), num(r.mu), integer(r.L), integer(r.window_size), integer(r.count), "",
                     integer(r.trial), seed});
        for (const auto& f : res.fits) {
            log << "mu " << format_double(f.mu) << " target " << format_double(f.target);
            if (f.fit) log << " slope " << format_double(f.fit->slope) << " +- " << format_double(f.fit->stderr_slope);
            else log << " too few nonzero levels to fit";
            log << "\n";
        }
        return csv.str();
    }

    std::size_t max_n = 0;
    if (experiment == "coverage") {
        max_n = N;
    } else {
        for (int L = L0; L <= L1; ++L) max_n = std::max<std::size_t>(max_n, scale_window(radii, nu, L).hi);
    }
    const PointProcess proc = make_process(cfg.get("cover.process"), std::max<std::size_t>(max_n, 1));
    const std::string kind = proc.describe();

    if (experiment == "census") {
        for (int L = L0; L <= L1; ++L) {
            std::string exact = proc.is_iid() ? num(exact_expected_census(proc, radii, nu, target, L)) : "";
            auto rows = parallel_map(trials, cfg.threads, [&](std::size_t t) {
                return single_scale_census(proc, radii, nu, target, L, root.derive("trial", t));
            });
            for (std::size_t t = 0; t < trials; ++t)
                csv.row({experiment, kind, num(nu), integer(L), integer(rows[t].window.size()), integer(rows[t].count),
                         exact, integer(t), seed});
        }
    } else if (experiment == "nested") {
        // L holds the depth reached; count is 1 when it is L1.
        auto depths = parallel_map(trials, cfg.threads, [&](std::size_t t) {
            return nested_hit_depth(proc, radii, nu, target, L0, L1, root.derive("trial", t));
        });
        std::uint64_t reached = 0;
        for (std::size_t t = 0; t < trials; ++t) {
            reached += depths[t] >= L1;
            csv.row({experiment, kind, num(nu), integer(depths[t]), "", integer(depths[t] >= L1 ? 1 : 0), "", integer(t),
                     seed});
        }
        log << "reached L1 in " << reached << " of " << trials << " trials\n";
    } else {
        // coverage: count is the number of covered level-L1 cells, window_size is N.
        double cells = target.kind == Target::Kind::cantor ? std::ldexp(1.0, L1) : std::pow(3.0, L1);
        auto fractions = parallel_map(trials, cfg.threads, [&](std::size_t t) {
            return coverage_fraction(proc, radii, nu, target, L1, N, root.derive("trial", t));
        });
        for (std::size_t t = 0; t < trials; ++t)
            csv.row({experiment, kind, num(nu), integer(L1), integer(N),
                     integer(static_cast<std::uint64_t>(std::llround(fractions[t] * cells))), "", integer(t), seed});
    }
    return csv.str();
}

std::string run_percolate(const ExperimentConfig& cfg, std::ostream& log) {
    const GaugeFn g = GaugeFn::parse(cfg.get("percolate.gauge"));
    const int depth = std::stoi(cfg.get("percolate.depth"));
    const std::uint64_t trials = std::stoull(cfg.get("percolate.trials"));
    const MassAssignment chi = MassAssignment::parse(cfg.get("percolate.mass"));
    const RandomStream root(cfg.seed);
    struct Trial {
        std::vector<std::size_t> survivors;
        std::vector<double> z;
    };
    auto results = parallel_map(trials, cfg.threads, [&](std::size_t t) {
        PercTree tree = sample_tree(g, depth, root.derive("trial", t));
        Trial out;
        for (int j = 0; j <= depth; ++j) out.survivors.push_back(tree.count(j));
        out.z = z_trajectory(tree, g, chi).z;
        return out;
    });
    Csv csv(cfg, {"gauge", "depth", "trial", "level", "survivors", "Z", "seed"});
    const std::string name = g.describe();
    double mean_z = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        for (int j = 0; j <= depth; ++j)
            csv.row({name, integer(depth), integer(t), integer(j), integer(results[t].survivors[j]), num(results[t].z[j]),
                     integer(cfg.seed)});
        mean_z += results[t].z[depth];
    }
    log << "mean Z_" << depth << " " << format_double(mean_z / static_cast<double>(trials)) << "\n";
    return csv.str();
}

}  // namespace

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = {"census", "base-b-census", "exponent", "gauge", "cover", "percolate"};
    return names;
}

const std::string& ExperimentConfig::get(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) throw ConfigError("config key '" + key + "' is not set");
    return it->second;
}

std::uint64_t ExperimentConfig::hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto feed = [&](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
    };
    feed(experiment + "\n");
    for (const auto& [k, v] : values)
        if (!unhashed.count(k)) feed(k + "=" + v + "\n");
    return h;
}

std::string ExperimentConfig::hash_hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, hash());
    return buf;
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(path.string() + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    std::map<std::string, std::string> raw;
    for (const auto& [name, node] : tree) {
        if (node.empty()) {
            raw["run." + name] = trim(node.data());
            continue;
        }
        for (const auto& [key, leaf] : node) {
            std::string full = name + "." + key;
            if (raw.count(full)) throw ConfigError("config key '" + full + "' given twice");
            raw[full] = trim(leaf.data());
        }
    }
    return raw;
}

ExperimentConfig validate_config(const std::string& experiment, const std::map<std::string, std::string>& raw,
                                 const std::map<std::string, std::string>& overrides) {
    if (std::find(experiment_names().begin(), experiment_names().end(), experiment) == experiment_names().end())
        throw ConfigError("unknown experiment '" + experiment + "'");
    std::map<std::string, std::string> merged = raw;
    for (const auto& [k, v] : overrides) merged[k] = v;

    std::map<std::string, const KeySpec*> known;
    Schema run_keys = run_schema(experiment);
    Schema exp_keys = experiment_schema(experiment);
    for (const auto& s : run_keys) known["run." + s.key] = &s;
    for (const auto& s : exp_keys) known[experiment + "." + s.key] = &s;

    for (const auto& [k, v] : merged)
        if (!known.count(k)) throw ConfigError("config key '" + k + "' is not recognised for " + experiment);

    ExperimentConfig cfg;
    cfg.experiment = experiment;
    for (const auto& [k, spec] : known) {
        auto it = merged.find(k);
        if (it == merged.end()) {
            if (spec->required) throw ConfigError("config key '" + k + "' is required");
            if (spec->fallback) cfg.values[k] = *spec->fallback;
            continue;
        }
        spec->check(k, it->second);
        cfg.values[k] = it->second;
    }
    cross_check(cfg);

    cfg.seed = to_u64("run.seed", cfg.get("run.seed"));
    cfg.threads = static_cast<unsigned>(std::stoul(cfg.get("run.threads")));
    cfg.out = cfg.get("run.out");
    if (cfg.has("run.checkpoint")) cfg.checkpoint = cfg.get("run.checkpoint");
    cfg.max_units = to_u64("run.max_units", cfg.get("run.max_units"));
    if ((cfg.checkpoint || cfg.max_units) && experiment != "census")
        throw ConfigError("config key 'run.checkpoint': checkpoints are supported for census only");
    return cfg;
}

ExperimentConfig validate_config(const std::string& experiment, const std::filesystem::path& path,
                                 const std::map<std::string, std::string>& overrides) {
    return validate_config(experiment, read_config_file(path), overrides);
}

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) {
            std::filesystem::remove(tmp);
            throw std::runtime_error("write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw std::runtime_error("cannot rename onto " + path.string() + ": " + ec.message());
    }
}

int run(const ExperimentConfig& cfg, std::ostream& log) {
    try {
        std::optional<std::string> csv;
        const std::string& e = cfg.experiment;
        if (e == "census") csv = run_census(cfg, log);
        else if (e == "base-b-census") csv = run_base_b(cfg, log);
        else if (e == "exponent") csv = run_exponent(cfg, log);
        else if (e == "gauge") csv = run_gauge(cfg, log);
        else if (e == "cover") csv = run_cover(cfg, log);
        else if (e == "percolate") csv = run_percolate(cfg, log);
        else throw ConfigError("unknown experiment '" + e + "'");
        if (!csv) return 0;
        atomic_write(cfg.out, *csv);
        log << "wrote " << cfg.out.string() << "\n";
        return 0;
    } catch (const ConfigError& err) {
        log << "config error: " << err.what() << "\n";
        return 2;
    } catch (const std::exception& err) {
        log << "error: " << err.what() << "\n";
        return 3;
    }
}

}  // namespace cantorlab
