#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "cfra/scenario.hpp"

namespace cfra {

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view text, const std::string& context) {
    T value{};
    const auto* begin = text.data();
    const auto* end = text.data() + text.size();
    const auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc{} || res.ptr != end) throw ConfigError(context + ": cannot parse '" + std::string(text) + "'");
    return value;
}

using FieldRef = std::variant<double ScenarioConfig::*, int ScenarioConfig::*, std::uint64_t ScenarioConfig::*>;

inline const std::vector<std::pair<std::string, FieldRef>>& config_fields() {
    static const std::vector<std::pair<std::string, FieldRef>> fields = {
        {"square_length_m", &ScenarioConfig::square_length_m},
        {"power_constant_db", &ScenarioConfig::power_constant_db},
        {"pathloss_exponent", &ScenarioConfig::pathloss_exponent},
        {"noise_power_dbm", &ScenarioConfig::noise_power_dbm},
        {"num_pilots", &ScenarioConfig::num_pilots},
        {"num_aps", &ScenarioConfig::num_aps},
        {"antennas_per_ap", &ScenarioConfig::antennas_per_ap},
        {"dl_power_per_ap_mw", &ScenarioConfig::dl_power_per_ap_mw},
        {"ul_power_mw", &ScenarioConfig::ul_power_mw},
        {"compensation_factor", &ScenarioConfig::compensation_factor},
        {"num_inactive_ues", &ScenarioConfig::num_inactive_ues},
        {"access_probability", &ScenarioConfig::access_probability},
        {"bs_antennas", &ScenarioConfig::bs_antennas},
        {"bs_dl_power_mw", &ScenarioConfig::bs_dl_power_mw},
        {"max_attempts", &ScenarioConfig::max_attempts},
        {"reattempt_probability", &ScenarioConfig::reattempt_probability},
        {"iota", &ScenarioConfig::iota},
        {"l_max", &ScenarioConfig::l_max},
        {"rng_seed", &ScenarioConfig::rng_seed},
        {"trials", &ScenarioConfig::trials},
        {"warmup_blocks", &ScenarioConfig::warmup_blocks},
        {"measured_blocks", &ScenarioConfig::measured_blocks},
    };
    return fields;
}

}  // namespace detail

/// Parsed `key = value` lines (`#` starts a comment). The sweep descriptor
/// reuses this format with its own keys next to config keys.
struct KeyValueDocument {
    struct Entry {
        std::string key;
        std::string value;
        int line = 0;
    };
    std::vector<Entry> entries;
};

inline KeyValueDocument parse_key_values(std::istream& in, const std::string& source = "<input>") {
    KeyValueDocument doc;
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
        const auto key = detail::trim(line.substr(0, eq));
        const auto value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(source + ":" + std::to_string(line_no) + ": empty key");
        if (value.empty())
            throw ConfigError(source + ":" + std::to_string(line_no) + ": empty value for '" + std::string(key) + "'");
        doc.entries.push_back({std::string(key), std::string(value), line_no});
    }
    return doc;
}

inline bool is_config_key(std::string_view key) {
    for (const auto& [name, ref] : detail::config_fields())
        if (name == key) return true;
    return false;
}

/// Assigns one field by name; throws ConfigError on unknown key or bad value.
inline void set_config_value(ScenarioConfig& config, std::string_view key, std::string_view value,
                             const std::string& context = "config") {
    for (const auto& [name, ref] : detail::config_fields()) {
        if (name != key) continue;
        const std::string where = context + ": field '" + name + "'";
        std::visit(
            [&](auto member) {
                using T = std::remove_reference_t<decltype(config.*member)>;
                config.*member = detail::parse_number<T>(value, where);
            },
            ref);
        return;
    }
    throw ConfigError(context + ": unknown config key '" + std::string(key) + "'");
}

/// Applies config keys from a document; non-config keys are skipped when
/// `allow_extra` is set and rejected otherwise.
inline void apply_document(ScenarioConfig& config, const KeyValueDocument& doc, const std::string& source,
                           bool allow_extra = false) {
    for (const auto& e : doc.entries) {
        const std::string ctx = source + ":" + std::to_string(e.line);
        if (!is_config_key(e.key)) {
            if (allow_extra) continue;
            throw ConfigError(ctx + ": unknown config key '" + e.key + "'");
        }
        set_config_value(config, e.key, e.value, ctx);
    }
}

inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    ScenarioConfig config;
    apply_document(config, parse_key_values(in, path), path);
    return config;
}

/// Ordered (name, value-as-text) pairs; used for manifests and round-trips.
inline std::vector<std::pair<std::string, std::string>> config_entries(const ScenarioConfig& config) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [name, ref] : detail::config_fields()) {
        std::visit(
            [&](auto member) {
                std::ostringstream os;
                os.precision(17);
                os << config.*member;
                out.emplace_back(name, os.str());
            },
            ref);
    }
    return out;
}

inline std::string serialize_config(const ScenarioConfig& config) {
    std::string out;
    for (const auto& [k, v] : config_entries(config)) out += k + " = " + v + "\n";
    return out;
}

}  // namespace cfra
