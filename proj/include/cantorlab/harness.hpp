#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cantorlab {

inline constexpr const char* artifact_name = "cantorlab";
inline constexpr const char* artifact_version = "1.0.0";

/// Bad or inconsistent configuration; the message names the key.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Subcommands: census, base-b-census, exponent, gauge, cover, percolate.
const std::vector<std::string>& experiment_names();

/// Resolved configuration. Keys are "run.<key>" or "<experiment>.<key>".
struct ExperimentConfig {
    std::string experiment;
    std::map<std::string, std::string> values;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::filesystem::path out;
    std::optional<std::filesystem::path> checkpoint;
    /// Census only: stop after this many new work units (0 = no limit).
    std::uint64_t max_units = 0;

    const std::string& get(const std::string& key) const;
    bool has(const std::string& key) const { return values.count(key) != 0; }
    /// FNV-1a over the keys that influence the output, seed included.
    std::uint64_t hash() const;
    std::string hash_hex() const;
};

/// Reads "key = value" lines under [section] headers. Keys before any section
/// belong to [run]. Duplicate keys are rejected.
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

/// Applies defaults and range checks. `raw` holds "section.key" entries;
/// overrides win over raw.
ExperimentConfig validate_config(const std::string& experiment, const std::map<std::string, std::string>& raw,
                                 const std::map<std::string, std::string>& overrides = {});

ExperimentConfig validate_config(const std::string& experiment, const std::filesystem::path& path,
                                 const std::map<std::string, std::string>& overrides = {});

/// Runs the experiment and writes its CSV atomically. Returns 0, 2 on
/// ConfigError, 3 on any other failure; messages go to `log`.
int run(const ExperimentConfig& cfg, std::ostream& log);

/// Shortest round-trip text is not required; 17 significant digits are.
std::string format_double(double x);

/// Writes `content` to a sibling temporary file and renames it over `path`.
void atomic_write(const std::filesystem::path& path, const std::string& content);

}  // namespace cantorlab
