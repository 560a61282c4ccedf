#include <CLI11.hpp>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "cantorlab/harness.hpp"

namespace {

struct Flag {
    const char* name;
    const char* key;
    const char* help;
};

// Per-subcommand shortcuts for config keys.
const std::map<std::string, std::vector<Flag>> shortcuts = {
    {"census",
     {{"--j-low", "j_low", "first level"},
      {"--j-high", "j_high", "last level"},
      {"--mu", "mu", "comma-separated exponents, 'inf' or 'mu*'"},
      {"--algorithm", "algorithm", "scan|interval"}}},
    {"base-b-census", {{"--b", "b", "comma-separated bases"}, {"--j-low", "j_low", ""}, {"--j-high", "j_high", ""}}},
    {"exponent",
     {{"--mode", "mode", "lsv|vb|convergents"}, {"--mu", "mu", ""},
      {"--J", "J", "lsv depth, or profile length in vb mode"},
      {"--depth", "depth", "lsv depth when --x lsv"},
      {"--x", "x", ""},
      {"--b", "b", ""}}},
    {"gauge",
     {{"--mode", "mode", "doubling|series|precprec|precphi"},
      {"--g", "g", "gauge, e.g. r^0.5*log^-1"},
      {"--h-fn", "h", "second gauge h"},
      {"--phi", "phi", ""},
      {"--radii", "radii", ""},
      {"--N", "N", ""},
      {"--J", "J", ""}}},
    {"cover",
     {{"--experiment", "experiment", "census|nested|coverage|mixed|hit_cells"},
      {"--process", "process", ""},
      {"--radii", "radii", ""},
      {"--nu", "nu", ""},
      {"--target", "target", "circle|cantor"},
      {"--levels", "levels", "L0..L1"},
      {"--trials", "trials", ""},
      {"--grid", "grid", "floor|ceiling"},
      {"--N", "N", ""}}},
    {"percolate",
     {{"--gauge", "gauge", ""},
      {"--depth", "depth", ""},
      {"--trials", "trials", ""},
      {"--mass", "mass", "lebesgue|cantor"}}},
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Experiments on rational points near the middle-third Cantor set"};
    app.require_subcommand(1);
    app.set_version_flag("--version", cantorlab::artifact_version);

    struct Options {
        std::string config;
        std::map<std::string, std::string> values;
        std::vector<std::string> sets;
    };
    std::map<std::string, Options> opts;

    for (const auto& name : cantorlab::experiment_names()) {
        auto* sub = app.add_subcommand(name);
        auto& o = opts[name];
        sub->add_option("--config", o.config, "INI file")->check(CLI::ExistingFile);
        for (const char* run_key : {"seed", "threads", "out", "checkpoint", "max-units"}) {
            std::string key = std::string("run.") + run_key;
            if (key == "run.max-units") key = "run.max_units";
            sub->add_option_function<std::string>(
                std::string("--") + run_key, [&o, key](const std::string& v) { o.values[key] = v; });
        }
        for (const auto& f : shortcuts.at(name)) {
            std::string key = name + "." + f.key;
            sub->add_option_function<std::string>(f.name, [&o, key](const std::string& v) { o.values[key] = v; },
                                                  f.help);
        }
        sub->add_option("--set", o.sets, "override any key: section.key=value");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    Options& o = opts[name];
    try {
        for (const auto& s : o.sets) {
            auto eq = s.find('=');
            if (eq == std::string::npos) throw cantorlab::ConfigError("--set expects section.key=value, got '" + s + "'");
            o.values[s.substr(0, eq)] = s.substr(eq + 1);
        }
        std::map<std::string, std::string> raw;
        if (!o.config.empty()) raw = cantorlab::read_config_file(o.config);
        auto cfg = cantorlab::validate_config(name, raw, o.values);
        return cantorlab::run(cfg, std::cerr);
    } catch (const cantorlab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
