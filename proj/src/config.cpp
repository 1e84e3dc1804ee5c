#include "qfdt/config.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace qfdt::config {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& section, const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return x;
    } catch (...) {
        throw std::invalid_argument("[" + section + "]." + key + ": not a number: " + v);
    }
}

long parse_long(const std::string& section, const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long x = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return x;
    } catch (...) {
        throw std::invalid_argument("[" + section + "]." + key + ": not an integer: " + v);
    }
}

std::uint64_t parse_u64(const std::string& section, const std::string& key,
                        const std::string& v) {
    try {
        std::size_t pos = 0;
        const unsigned long long x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return x;
    } catch (...) {
        throw std::invalid_argument("[" + section + "]." + key + ": not an integer: " + v);
    }
}

bool parse_bool(const std::string& section, const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument("[" + section + "]." + key + ": not a boolean: " + v);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<double> parse_double_list(const std::string& section, const std::string& key,
                                      const std::string& v) {
    std::vector<double> out;
    for (const auto& item : split_list(v)) out.push_back(parse_double(section, key, item));
    if (out.empty()) throw std::invalid_argument("[" + section + "]." + key + ": empty list");
    return out;
}

std::vector<int> parse_int_list(const std::string& section, const std::string& key,
                                const std::string& v) {
    std::vector<int> out;
    for (const auto& item : split_list(v)) {
        out.push_back(static_cast<int>(parse_long(section, key, item)));
    }
    if (out.empty()) throw std::invalid_argument("[" + section + "]." + key + ": empty list");
    return out;
}

// key catalogue per section; validation rejects anything else
const std::map<std::string, std::set<std::string>> kKnownKeys = {
    {"model",
     {"kind", "dimension", "g", "alpha0", "n_spins", "n_list", "bz_s", "bx_s", "bz_b", "bx_b",
      "jz", "jx", "jz_sb", "jx_sb", "n_m", "bz_list", "scales", "pattern"}},
    {"ensemble", {"n_realizations", "n_initial_states", "seed"}},
    {"analysis",
     {"epsilon", "fit_samples", "window_samples", "pilot_samples", "pilot_horizon",
      "window_lo", "window_hi", "dos_window_gammas"}},
    {"output", {"out_dir", "cache_dir", "write_timeseries", "write_profiles"}},
    {"budget", {"max_gb"}},
};

}  // namespace

bool Config::has(const std::string& section, const std::string& key) const {
    const auto s = sections.find(section);
    return s != sections.end() && s->second.count(key) > 0;
}

const std::string& Config::get(const std::string& section, const std::string& key) const {
    const auto s = sections.find(section);
    if (s == sections.end() || !s->second.count(key)) {
        throw std::invalid_argument("missing required key [" + section + "]." + key);
    }
    return s->second.at(key);
}

Config parse(const std::string& text) {
    Config cfg;
    std::string section;
    std::stringstream stream(text);
    std::string line;
    int line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw std::invalid_argument("config line " + std::to_string(line_no) +
                                            ": malformed section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            if (!kKnownKeys.count(section)) {
                throw std::invalid_argument("unknown config section [" + section + "]");
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key = value");
        }
        if (section.empty()) {
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": key outside any [section]");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!kKnownKeys.at(section).count(key)) {
            throw std::invalid_argument("unknown key [" + section + "]." + key);
        }
        if (cfg.sections[section].count(key)) {
            throw std::invalid_argument("duplicate key [" + section + "]." + key);
        }
        cfg.sections[section][key] = value;
    }

    // stable hash over sorted section.key=value pairs
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto feed = [&h](const std::string& s) {
        for (const unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ull;
        }
    };
    for (const auto& [sec, kv] : cfg.sections) {
        for (const auto& [k, v] : kv) {
            feed(sec);
            feed(".");
            feed(k);
            feed("=");
            feed(v);
            feed("\n");
        }
    }
    cfg.hash = h;
    return cfg;
}

Config parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str());
}

experiments::ExperimentSpec to_experiment_spec(const Config& cfg) {
    experiments::ExperimentSpec spec;
    spec.config_hash = cfg.hash;

    spec.model.kind = experiments::kind_from_string(cfg.get("model", "kind"));
    const bool is_rmt = spec.model.kind == experiments::Kind::rmt_fdt;

    if (is_rmt) {
        spec.model.rmt_dimension = parse_long("model", "dimension", cfg.get("model", "dimension"));
        spec.model.g_list = parse_double_list("model", "g", cfg.get("model", "g"));
        if (cfg.has("model", "alpha0")) {
            spec.model.alpha0 = parse_long("model", "alpha0", cfg.get("model", "alpha0"));
        }
    } else {
        auto& chain = spec.model.chain;
        if (cfg.has("model", "n_list")) {
            spec.model.n_list = parse_int_list("model", "n_list", cfg.get("model", "n_list"));
            chain.n_spins = *std::max_element(spec.model.n_list.begin(), spec.model.n_list.end());
        } else {
            chain.n_spins =
                static_cast<int>(parse_long("model", "n_spins", cfg.get("model", "n_spins")));
        }
        chain.b_z_s = parse_double("model", "bz_s", cfg.get("model", "bz_s"));
        chain.j_x = parse_double("model", "jx", cfg.get("model", "jx"));
        chain.b_x_b = parse_double("model", "bx_b", cfg.get("model", "bx_b"));
        chain.j_x_sb = parse_double("model", "jx_sb", cfg.get("model", "jx_sb"));
        chain.j_z_sb = parse_double("model", "jz_sb", cfg.get("model", "jz_sb"));
        auto optional_double = [&](const char* key, double fallback) {
            return cfg.has("model", key) ? parse_double("model", key, cfg.get("model", key))
                                         : fallback;
        };
        chain.b_x_s = optional_double("bx_s", 0.0);
        chain.b_z_b = optional_double("bz_b", 0.0);
        chain.j_z = optional_double("jz", 0.0);
        chain.n_m = cfg.has("model", "n_m")
                        ? static_cast<int>(parse_long("model", "n_m", cfg.get("model", "n_m")))
                        : 5;
        // default coupled site is 5; small chains clamp it to the last site
        if (chain.n_m > chain.n_spins) {
            std::cerr << "warning: n_m clamped from " << chain.n_m << " to " << chain.n_spins
                      << " (chain is shorter)\n";
            chain.n_m = chain.n_spins;
        }
        if (cfg.has("model", "bz_list")) {
            spec.model.bz_list = parse_double_list("model", "bz_list", cfg.get("model", "bz_list"));
        }
        if (cfg.has("model", "scales")) {
            spec.model.coupling_scales =
                parse_double_list("model", "scales", cfg.get("model", "scales"));
        }
        if (cfg.has("model", "pattern")) spec.model.pattern = cfg.get("model", "pattern");
    }

    spec.ensemble.seed = parse_u64("ensemble", "seed", cfg.get("ensemble", "seed"));
    if (cfg.has("ensemble", "n_realizations")) {
        spec.ensemble.n_realizations = static_cast<int>(
            parse_long("ensemble", "n_realizations", cfg.get("ensemble", "n_realizations")));
    }
    if (cfg.has("ensemble", "n_initial_states")) {
        spec.ensemble.n_initial_states = static_cast<int>(
            parse_long("ensemble", "n_initial_states", cfg.get("ensemble", "n_initial_states")));
    }

    auto analysis_double = [&](const char* key, double& field) {
        if (cfg.has("analysis", key)) field = parse_double("analysis", key, cfg.get("analysis", key));
    };
    auto analysis_int = [&](const char* key, int& field) {
        if (cfg.has("analysis", key)) {
            field = static_cast<int>(parse_long("analysis", key, cfg.get("analysis", key)));
        }
    };
    analysis_double("epsilon", spec.analysis.epsilon);
    analysis_int("fit_samples", spec.analysis.fit_samples);
    analysis_int("window_samples", spec.analysis.window_samples);
    analysis_int("pilot_samples", spec.analysis.pilot_samples);
    analysis_double("pilot_horizon", spec.analysis.pilot_horizon);
    analysis_double("window_lo", spec.analysis.window_lo);
    analysis_double("window_hi", spec.analysis.window_hi);
    analysis_double("dos_window_gammas", spec.analysis.dos_window_gammas);

    if (cfg.has("output", "out_dir")) spec.output.out_dir = cfg.get("output", "out_dir");
    if (cfg.has("output", "cache_dir")) spec.output.cache_dir = cfg.get("output", "cache_dir");
    if (cfg.has("output", "write_timeseries")) {
        spec.output.write_timeseries =
            parse_bool("output", "write_timeseries", cfg.get("output", "write_timeseries"));
    }
    if (cfg.has("output", "write_profiles")) {
        spec.output.write_profiles =
            parse_bool("output", "write_profiles", cfg.get("output", "write_profiles"));
    }
    if (cfg.has("budget", "max_gb")) {
        spec.budget.max_gb = parse_double("budget", "max_gb", cfg.get("budget", "max_gb"));
    }

    spec.validate();
    return spec;
}

}  // namespace qfdt::config
