#pragma once

#include <map>
#include <string>
#include <vector>

#include "isac/harness.hpp"
#include "isac/scenario.hpp"

namespace isac {

/// Sectioned key=value text. '#' starts a comment; keys live under the most
/// recent [section] header. Order is not significant.
struct ConfigFile {
    std::map<std::string, std::map<std::string, std::string>> values;
    std::string base_dir; // directory of the source file, for CSV side files

    static ConfigFile parse_file(const std::string& path);
    static ConfigFile parse_string(const std::string& text);

    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key,
                    const std::string& fallback) const;

    /// "section.key=value"; unknown keys are rejected at load time, not here.
    void apply_override(const std::string& spec);
};

/// Schema + semantic check; returns human-readable diagnostics, empty = valid.
/// Content errors never throw.
std::vector<std::string> validate_config(const ConfigFile& config);
std::vector<std::string> validate_config_path(const std::string& path);

/// Loaders throw ConfigError on unknown keys, bad types, or invariant
/// violations. "auto" is accepted where a derived default exists
/// (ofdm.noise_power, experiment.sigma, experiment.delta0).
Scenario load_scenario(const ConfigFile& config);
OfdmParams load_ofdm_params(const ConfigFile& config);
GainConfig load_gain_config(const ConfigFile& config);
SupportRule load_support_rule(const ConfigFile& config);
ExperimentConfig load_experiment_config(const ConfigFile& config);

/// Effective-config echo; parses back to an identical ExperimentConfig.
std::string serialize_experiment_config(const ExperimentConfig& config);

/// Two-column CSV (x,y per line, optional header) for coordinate lists.
std::vector<Point> read_points_csv(const std::string& path);
void write_points_csv(const std::vector<Point>& points, const std::string& path);

/// Write via temp file + rename.
void write_text_atomic(const std::string& path, const std::string& content);

} // namespace isac
