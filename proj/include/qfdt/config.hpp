// config.hpp — flat INI-style configuration files for experiment runs.
//
// Grammar: `[section]` headers, `key = value` lines, `#` or `;` comments,
// blank lines ignored. Values are scalars or comma-separated lists. Unknown
// sections or keys are rejected; required keys depend on the experiment kind.

#pragma once

#include "qfdt/experiments.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace qfdt::config {

struct Config {
    // section -> key -> raw value string
    std::map<std::string, std::map<std::string, std::string>> sections;
    std::uint64_t hash = 0;  // stable over the normalized key/value pairs

    bool has(const std::string& section, const std::string& key) const;
    const std::string& get(const std::string& section, const std::string& key) const;
};

Config parse(const std::string& text);
Config parse_file(const std::filesystem::path& path);

// Validates keys and assembles the experiment spec; throws
// std::invalid_argument naming the offending key.
experiments::ExperimentSpec to_experiment_spec(const Config& cfg);

}  // namespace qfdt::config
